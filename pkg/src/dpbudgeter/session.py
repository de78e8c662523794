"""Stateful budgeting sessions: lifecycle, statistics, finalization, persistence.

A session walks one path: created in the configuring phase with a sealed
dataset and validated privacy-loss parameters, statistics added and budget
shuffled freely (all of it pure metadata arithmetic), then a single
finalize that opens the raw-data firewall, runs every mechanism with its
allocated share, and freezes the session with its releases.
"""

from __future__ import annotations

import json
import math
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import __version__ as ENGINE_VERSION
from . import accuracy, budget, mechanisms
from .budget import AllocationState, ParamVerdict, PrivacyBudget, SamplingInfo, VerdictStatus
from .data import ColumnAccessor, DatasetHandle, load_csv, open_for_finalize
from .errors import (
    EmptyDatasetError,
    DigestMismatchError,
    IncompatibleKindError,
    InfeasibleAllocation,
    InfeasibleTarget,
    MetadataError,
    NoStatisticsError,
    ParametersRejected,
    PhaseError,
    PopulationError,
    UnknownStatisticError,
    WarningsNotAcknowledged,
)
from .rng import RandomSource
from .variables import (
    COMPATIBLE_VARIABLE_KINDS,
    StatisticKind,
    VariableMetadata,
    validate_metadata,
)

CONFIGURING = "configuring"
FINALIZED = "finalized"

SESSION_FORMAT = "dp-budgeter-session/1"
RELEASE_FORMAT = "dp-budgeter-releases/1"

HELD_ALLOCATIONS_RESCALED = "HELD_ALLOCATIONS_RESCALED"

_UNSET = object()


@dataclass(frozen=True)
class StatisticSpec:
    id: str
    variable: str
    kind: StatisticKind
    metadata: VariableMetadata
    p: float | None = None


@dataclass(frozen=True)
class Release:
    """A finalized noisy release plus everything needed to reproduce its bound."""

    statistic_id: str
    kind: StatisticKind
    variable: str
    metadata: VariableMetadata
    n: int
    epsilon_spent: float
    alpha: float
    error_bound: float
    error_units: str
    value: Any
    p: float | None
    released_at: str
    engine_version: str

    def to_dict(self) -> dict:
        return {
            "statistic_id": self.statistic_id,
            "kind": self.kind.value,
            "variable": self.variable,
            "metadata": self.metadata.to_dict(),
            "n": self.n,
            "epsilon_spent": self.epsilon_spent,
            "alpha": self.alpha,
            "error_bound": self.error_bound,
            "error_units": self.error_units,
            "value": self.value,
            "p": self.p,
            "released_at": self.released_at,
            "engine_version": self.engine_version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Release:
        return cls(
            statistic_id=data["statistic_id"],
            kind=StatisticKind(data["kind"]),
            variable=data["variable"],
            metadata=VariableMetadata.from_dict(data["metadata"]),
            n=data["n"],
            epsilon_spent=data["epsilon_spent"],
            alpha=data["alpha"],
            error_bound=data["error_bound"],
            error_units=data["error_units"],
            value=data["value"],
            p=data.get("p"),
            released_at=data["released_at"],
            engine_version=data["engine_version"],
        )


@dataclass
class Session:
    id: str
    dataset: DatasetHandle
    global_budget: PrivacyBudget
    sampling: SamplingInfo | None
    allocation: AllocationState
    alpha: float
    statistics: dict[str, StatisticSpec]
    phase: str
    created_at: str
    updated_at: str
    next_statistic_index: int = 1
    acknowledged_warnings: tuple[str, ...] = ()
    releases: list[Release] | None = None
    _accessor: ColumnAccessor | None = field(default=None, repr=False, compare=False)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _touch(session: Session) -> None:
    session.updated_at = _now()


def _require_configuring(session: Session) -> None:
    if session.phase != CONFIGURING:
        raise PhaseError(
            f"session {session.id} is finalized; only read operations remain"
        )


def _check_verdict(
    verdict: ParamVerdict, acknowledge_warnings: bool
) -> tuple[str, ...]:
    if verdict.status is VerdictStatus.REJECT:
        raise ParametersRejected(
            "privacy loss parameters rejected: " + ", ".join(verdict.messages),
            messages=list(verdict.messages),
        )
    if verdict.status is VerdictStatus.WARN and not acknowledge_warnings:
        raise WarningsNotAcknowledged(
            "parameters look unsafe (" + ", ".join(verdict.messages) + "); "
            "repeat the request with acknowledgment to proceed",
            warnings=list(verdict.messages),
        )
    return verdict.messages


def create_session(
    dataset: DatasetHandle,
    epsilon: float,
    delta: float,
    population_size: int | None = None,
    acknowledge_warnings: bool = False,
) -> Session:
    """Start a budgeting session over a sealed dataset.

    Reject-level parameter problems block creation; warn-level ones go
    through only with explicit acknowledgment, which is recorded.
    """
    verdict = budget.validate_params(epsilon, delta)
    acknowledged = _check_verdict(verdict, acknowledge_warnings)
    global_budget = PrivacyBudget(epsilon, delta)
    sampling = _make_sampling(dataset, population_size)
    internal = (
        budget.amplify_by_sampling(global_budget, sampling) if sampling else global_budget
    )
    now = _now()
    return Session(
        id=uuid.uuid4().hex[:12],
        dataset=dataset,
        global_budget=global_budget,
        sampling=sampling,
        allocation=AllocationState(internal=internal),
        alpha=accuracy.DEFAULT_ALPHA,
        statistics={},
        phase=CONFIGURING,
        created_at=now,
        updated_at=now,
        acknowledged_warnings=acknowledged,
    )


def _make_sampling(
    dataset: DatasetHandle, population_size: int | None
) -> SamplingInfo | None:
    if population_size is None:
        return None
    try:
        return SamplingInfo(sample_size=dataset.row_count, population_size=population_size)
    except ValueError as exc:
        raise PopulationError(str(exc)) from None


def add_statistic(
    session: Session,
    variable: str,
    kind: StatisticKind,
    metadata: VariableMetadata,
    p: float | None = None,
) -> StatisticSpec:
    """Register a statistic and re-run the even split over unheld statistics."""
    _require_configuring(session)
    if session.dataset.row_count < 1:
        raise EmptyDatasetError("dataset has no data rows; nothing can be released")
    if variable not in session.dataset.header:
        raise MetadataError(
            f"dataset has no variable named {variable!r}",
            errors=[f"unknown variable {variable!r}"],
        )
    problems = validate_metadata(metadata)
    if problems:
        raise MetadataError(
            f"metadata for {variable!r} is invalid: " + "; ".join(problems),
            errors=problems,
        )
    if metadata.kind not in COMPATIBLE_VARIABLE_KINDS[kind]:
        raise IncompatibleKindError(
            f"a {kind.value} cannot run on a {metadata.kind.value} variable"
        )
    if kind is StatisticKind.QUANTILE:
        if p is None or not (0.0 < p < 1.0):
            raise MetadataError(
                "quantile statistics need a fraction p strictly between 0 and 1",
                errors=["missing or out-of-range quantile fraction"],
            )
    elif p is not None:
        raise MetadataError(
            f"{kind.value} statistics take no quantile fraction",
            errors=["unexpected quantile fraction"],
        )
    stat_id = f"s{session.next_statistic_index}"
    session.next_statistic_index += 1
    spec = StatisticSpec(id=stat_id, variable=variable, kind=kind, metadata=metadata, p=p)
    session.statistics[stat_id] = spec
    state = budget.add_allocation(session.allocation, stat_id)
    session.allocation = budget.default_split(state)
    _touch(session)
    return spec


def delete_statistic(session: Session, stat_id: str) -> None:
    """Drop a statistic (hold flag included) and re-split among the unheld rest."""
    _require_configuring(session)
    if stat_id not in session.statistics:
        raise UnknownStatisticError(f"no statistic with id {stat_id!r}")
    del session.statistics[stat_id]
    state = budget.remove_allocation(session.allocation, stat_id)
    if state.unheld_ids():
        state = budget.default_split(state)
    session.allocation = state
    _touch(session)


def set_confidence(session: Session, alpha: float) -> None:
    """Change the confidence parameter; allocations stay, error bounds move."""
    _require_configuring(session)
    accuracy.check_alpha(alpha)
    session.alpha = float(alpha)
    _touch(session)


def set_reserve(session: Session, fraction: float) -> list[str]:
    """Move the analyst-reserve slider. Rescales all allocations, holds too."""
    _require_configuring(session)
    had_holds = bool(session.allocation.holds)
    session.allocation = budget.set_reserve(session.allocation, fraction)
    _touch(session)
    return [HELD_ALLOCATIONS_RESCALED] if had_holds else []


def toggle_hold(session: Session, stat_id: str, held: bool) -> None:
    _require_configuring(session)
    if stat_id not in session.statistics:
        raise UnknownStatisticError(f"no statistic with id {stat_id!r}")
    session.allocation = budget.toggle_hold(session.allocation, stat_id, held)
    _touch(session)


def set_error_target(session: Session, stat_id: str, target: float) -> None:
    """Retarget one statistic by its error value; others rescale to fit.

    On infeasibility the raised error names the best achievable accuracy
    given the current holds.
    """
    _require_configuring(session)
    spec = session.statistics.get(stat_id)
    if spec is None:
        raise UnknownStatisticError(f"no statistic with id {stat_id!r}")
    if not (isinstance(target, (int, float)) and math.isfinite(target) and target > 0):
        raise MetadataError(
            f"error target must be a positive number, got {target!r}",
            errors=["non-positive error target"],
        )
    n = session.dataset.row_count
    epsilon_required = accuracy.epsilon_for_error(
        spec.kind, spec.metadata, n, float(target), session.alpha
    )
    try:
        session.allocation = budget.set_epsilon_target(
            session.allocation, stat_id, epsilon_required
        )
    except InfeasibleAllocation as exc:
        max_epsilon = exc.details.get("max_epsilon", 0.0)
        if max_epsilon > 0:
            best = accuracy.error_bound(
                spec.kind, spec.metadata, n, max_epsilon, session.alpha
            )
            raise InfeasibleTarget(
                f"target {target:.6g} is unreachable; the best achievable error "
                f"for {stat_id} is {best.value:.6g} ({best.units.value}) given "
                "current holds",
                max_achievable_error=best.value,
                units=best.units.value,
            ) from None
        raise InfeasibleTarget(
            "held statistics consume the whole usable budget; release a hold first",
            max_achievable_error=None,
        ) from None
    _touch(session)


def update_params(
    session: Session,
    epsilon: float | None = None,
    delta: float | None = None,
    population_size: int | None | object = _UNSET,
    acknowledge_warnings: bool = False,
) -> list[str]:
    """Deliberate parameter change; re-validates and rescales everything.

    The population size may be set once (if absent so far) and later only
    lowered, never raised: an overestimated population would void the
    sampling amplification.
    """
    _require_configuring(session)
    new_epsilon = session.global_budget.epsilon if epsilon is None else epsilon
    new_delta = session.global_budget.delta if delta is None else delta
    verdict = budget.validate_params(new_epsilon, new_delta)
    acknowledged = _check_verdict(verdict, acknowledge_warnings)
    sampling = session.sampling
    if population_size is not _UNSET and population_size is not None:
        if sampling is None:
            sampling = _make_sampling(session.dataset, population_size)
        elif population_size > sampling.population_size:
            raise PopulationError(
                "population size may never be increased once set "
                f"(currently {sampling.population_size}); an overestimate would "
                "void the sampling guarantee",
            )
        elif population_size != sampling.population_size:
            sampling = _make_sampling(session.dataset, population_size)
    new_global = PrivacyBudget(new_epsilon, new_delta)
    had_holds = bool(session.allocation.holds)
    session.allocation = budget.update_global(session.allocation, new_global, sampling)
    session.global_budget = new_global
    session.sampling = sampling
    if acknowledged:
        session.acknowledged_warnings = tuple(
            dict.fromkeys(session.acknowledged_warnings + acknowledged)
        )
    _touch(session)
    warnings = list(acknowledged)
    if had_holds:
        warnings.append(HELD_ALLOCATIONS_RESCALED)
    return warnings


def error_table(session: Session) -> list[dict]:
    """One row per statistic: allocation, a priori error, hold flag."""
    n = session.dataset.row_count
    rows = []
    for stat_id, spec in session.statistics.items():
        eps = session.allocation.allocations[stat_id]
        if eps > 0 and n >= 1:
            estimate = accuracy.error_bound(spec.kind, spec.metadata, n, eps, session.alpha)
            error_value, units = estimate.value, estimate.units.value
        else:
            error_value, units = None, accuracy.UNITS_BY_KIND[spec.kind].value
        rows.append(
            {
                "id": stat_id,
                "variable": spec.variable,
                "kind": spec.kind.value,
                "p": spec.p,
                "epsilon": eps,
                "held": stat_id in session.allocation.holds,
                "error_value": error_value,
                "error_units": units,
            }
        )
    return rows


def finalize(session: Session, rng: RandomSource) -> list[Release]:
    """Open the firewall, run every mechanism, freeze the session.

    All-or-nothing: every column is parsed before any mechanism runs, so a
    bad cell costs nothing. Calling finalize again returns the stored
    releases byte-for-byte.
    """
    if session.phase == FINALIZED:
        return list(session.releases or [])
    if not session.statistics:
        raise NoStatisticsError("select at least one statistic before finalizing")
    allocations = session.allocation.allocations
    starved = [sid for sid, eps in allocations.items() if eps <= 0]
    if starved:
        raise InfeasibleAllocation(
            f"statistics {starved} have no budget; loosen targets or delete them"
        )
    spent = session.allocation.spent
    limit = session.allocation.usable.epsilon
    if spent > limit + budget.FEASIBILITY_TOL:
        raise InfeasibleAllocation(
            f"allocations sum to {spent:.6g}, above the usable budget {limit:.6g}"
        )
    if session._accessor is None:
        session._accessor = open_for_finalize(session.dataset)
    accessor = session._accessor
    n = session.dataset.row_count

    # Parse every needed column first; parse errors abort before any spend.
    numeric_cols: dict[str, list[float | None]] = {}
    label_cols: dict[str, list[str | None]] = {}
    for spec in session.statistics.values():
        if spec.metadata.kind.value == "numerical":
            if spec.variable not in numeric_cols:
                numeric_cols[spec.variable] = accessor.numeric_column(
                    spec.variable, spec.metadata
                )
        else:
            if spec.variable not in label_cols:
                label_cols[spec.variable] = accessor.label_column(spec.variable)

    released_at = _now()
    releases: list[Release] = []
    for stat_id, spec in session.statistics.items():
        eps = allocations[stat_id]
        value = _run_mechanism(spec, numeric_cols, label_cols, n, eps, rng)
        estimate = accuracy.error_bound(spec.kind, spec.metadata, n, eps, session.alpha)
        releases.append(
            Release(
                statistic_id=stat_id,
                kind=spec.kind,
                variable=spec.variable,
                metadata=spec.metadata,
                n=n,
                epsilon_spent=eps,
                alpha=session.alpha,
                error_bound=estimate.value,
                error_units=estimate.units.value,
                value=value,
                p=spec.p,
                released_at=released_at,
                engine_version=ENGINE_VERSION,
            )
        )
    session.releases = releases
    session.phase = FINALIZED
    _touch(session)
    return list(releases)


def _run_mechanism(
    spec: StatisticSpec,
    numeric_cols: dict[str, list[float | None]],
    label_cols: dict[str, list[str | None]],
    n: int,
    epsilon: float,
    rng: RandomSource,
) -> Any:
    meta = spec.metadata
    if spec.kind is StatisticKind.MEAN:
        return mechanisms.dp_mean(numeric_cols[spec.variable], meta, n, epsilon, rng)
    if spec.kind is StatisticKind.QUANTILE:
        return mechanisms.dp_quantile(
            numeric_cols[spec.variable], spec.p, meta, epsilon, rng
        )
    if spec.kind is StatisticKind.CDF:
        pairs = mechanisms.dp_cdf(numeric_cols[spec.variable], meta, epsilon, rng)
        return [[point, fraction] for point, fraction in pairs]
    if spec.kind is StatisticKind.HISTOGRAM:
        column: list = (
            numeric_cols[spec.variable]
            if meta.kind.value == "numerical"
            else label_cols[spec.variable]
        )
        pairs = mechanisms.dp_histogram(column, meta, epsilon, rng)
        return [[label, count] for label, count in pairs]
    raise ValueError(f"unknown statistic kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Persistence: a session document is lossless except for the raw dataset,
# which is referenced by path plus content digest and re-verified on load.
# ---------------------------------------------------------------------------


def save_session(session: Session) -> dict:
    doc: dict[str, Any] = {
        "format": SESSION_FORMAT,
        "id": session.id,
        "phase": session.phase,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "dataset": {
            "path": session.dataset.path,
            "digest": session.dataset.digest,
            "header": list(session.dataset.header),
            "row_count": session.dataset.row_count,
            "firewall_state": session.dataset.firewall_state,
            "read_audit": session.dataset.read_audit,
        },
        "params": {
            "epsilon": session.global_budget.epsilon,
            "delta": session.global_budget.delta,
            "population_size": (
                session.sampling.population_size if session.sampling else None
            ),
        },
        "confidence_alpha": session.alpha,
        "reserve_fraction": session.allocation.reserve_fraction,
        "next_statistic_index": session.next_statistic_index,
        "acknowledged_warnings": list(session.acknowledged_warnings),
        "statistics": [
            {
                "id": spec.id,
                "variable": spec.variable,
                "kind": spec.kind.value,
                "p": spec.p,
                "metadata": spec.metadata.to_dict(),
                "epsilon": session.allocation.allocations[spec.id],
                "held": spec.id in session.allocation.holds,
            }
            for spec in session.statistics.values()
        ],
        "releases": (
            [r.to_dict() for r in session.releases]
            if session.releases is not None
            else None
        ),
    }
    return doc


def session_to_json(session: Session) -> str:
    return json.dumps(save_session(session), sort_keys=True, indent=2) + "\n"


def load_session(doc: dict, verify_digest: bool = True) -> Session:
    """Rebuild a session from its document; refuses on a dataset digest mismatch."""
    if doc.get("format") != SESSION_FORMAT:
        raise ValueError(f"not a session document (format={doc.get('format')!r})")
    ds = doc["dataset"]
    handle = DatasetHandle(
        path=ds["path"],
        header=list(ds["header"]),
        row_count=ds["row_count"],
        digest=ds["digest"],
        firewall_state=ds["firewall_state"],
        read_audit=ds["read_audit"],
    )
    if verify_digest:
        actual = file_digest_or_none(handle.path)
        if actual != handle.digest:
            raise DigestMismatchError(
                f"dataset {handle.path} does not match the digest recorded in "
                "the session document"
            )
    params = doc["params"]
    global_budget = PrivacyBudget(params["epsilon"], params["delta"])
    population = params.get("population_size")
    sampling = (
        SamplingInfo(sample_size=handle.row_count, population_size=population)
        if population is not None
        else None
    )
    internal = (
        budget.amplify_by_sampling(global_budget, sampling) if sampling else global_budget
    )
    statistics: dict[str, StatisticSpec] = {}
    allocations: dict[str, float] = {}
    holds: set[str] = set()
    for entry in doc["statistics"]:
        spec = StatisticSpec(
            id=entry["id"],
            variable=entry["variable"],
            kind=StatisticKind(entry["kind"]),
            metadata=VariableMetadata.from_dict(entry["metadata"]),
            p=entry.get("p"),
        )
        statistics[spec.id] = spec
        allocations[spec.id] = entry["epsilon"]
        if entry["held"]:
            holds.add(spec.id)
    allocation = AllocationState(
        internal=internal,
        reserve_fraction=doc["reserve_fraction"],
        allocations=allocations,
        holds=frozenset(holds),
    )
    releases = doc.get("releases")
    return Session(
        id=doc["id"],
        dataset=handle,
        global_budget=global_budget,
        sampling=sampling,
        allocation=allocation,
        alpha=doc["confidence_alpha"],
        statistics=statistics,
        phase=doc["phase"],
        created_at=doc["created_at"],
        updated_at=doc["updated_at"],
        next_statistic_index=doc["next_statistic_index"],
        acknowledged_warnings=tuple(doc.get("acknowledged_warnings", [])),
        releases=[Release.from_dict(r) for r in releases] if releases is not None else None,
    )


def file_digest_or_none(path: str) -> str | None:
    from .data import file_digest

    try:
        return file_digest(path)
    except OSError:
        return None


def save_session_file(session: Session, path: str | Path) -> None:
    Path(path).write_text(session_to_json(session), encoding="utf-8")


def load_session_file(path: str | Path, verify_digest: bool = True) -> Session:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return load_session(doc, verify_digest=verify_digest)


def releases_document(session: Session) -> dict:
    """The per-session release document, including the budget ledger."""
    if session.releases is None:
        raise NoStatisticsError("session has no releases yet; finalize first")
    allocation = session.allocation
    return {
        "format": RELEASE_FORMAT,
        "session_id": session.id,
        "engine_version": ENGINE_VERSION,
        "dataset": {"path": session.dataset.path, "digest": session.dataset.digest, "n": session.dataset.row_count},
        "budget": {
            "global_epsilon": session.global_budget.epsilon,
            "global_delta": session.global_budget.delta,
            "population_size": (
                session.sampling.population_size if session.sampling else None
            ),
            "internal_epsilon": allocation.internal.epsilon,
            "internal_delta": allocation.internal.delta,
            "reserve_fraction": allocation.reserve_fraction,
            "usable_epsilon": allocation.usable.epsilon,
            "epsilon_spent": allocation.spent,
            "epsilon_unspent": allocation.unspent,
            # Pure-epsilon mechanisms spend no delta; it is all left to analysts.
            "delta_reserved_for_analysts": allocation.internal.delta,
        },
        "confidence_alpha": session.alpha,
        "releases": [r.to_dict() for r in session.releases],
    }


def session_view(session: Session) -> dict:
    """Full state plus the live error table, as served to clients."""
    allocation = session.allocation
    return {
        "id": session.id,
        "phase": session.phase,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "dataset": {
            "path": session.dataset.path,
            "n": session.dataset.row_count,
            "variables": list(session.dataset.header),
            "firewall_state": session.dataset.firewall_state,
            "read_audit": session.dataset.read_audit,
        },
        "params": {
            "epsilon": session.global_budget.epsilon,
            "delta": session.global_budget.delta,
            "population_size": (
                session.sampling.population_size if session.sampling else None
            ),
            "internal_epsilon": allocation.internal.epsilon,
            "internal_delta": allocation.internal.delta,
            "usable_epsilon": allocation.usable.epsilon,
            "epsilon_unspent": allocation.unspent,
            "delta_reserved_for_analysts": allocation.internal.delta,
        },
        "confidence_alpha": session.alpha,
        "reserve_fraction": allocation.reserve_fraction,
        "acknowledged_warnings": list(session.acknowledged_warnings),
        "statistics": error_table(session),
        "releases_available": session.releases is not None,
    }
