"""Privacy-budget accounting.

Covers composition by summation, amplification for secret uniform samples
of a larger population, the analyst reserve, even-split defaults, error
driven redistribution with holds, and the parameter guardrails that warn
on unusual privacy-loss choices.

Budget amplification solves the subsampling guarantee in the direction the
data owner thinks: she fixes the budget that must hold for the population
and the engine derives the larger internal budget the mechanisms may spend
on the sample, epsilon_internal = ln(1 + (m/n) * epsilon_global), never
below epsilon_global itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import (
    HeldStatisticError,
    InfeasibleAllocation,
    ParametersRejected,
    TierError,
    UnknownStatisticError,
)

# Guardrail thresholds for validate_params.
RECOMMENDED_EPSILON_MAX = 1.0
RECOMMENDED_DELTA_MAX = 1e-5
SWAP_EPSILON_BELOW = 1e-4
SWAP_DELTA_ABOVE = 1e-2

# Warning / rejection codes.
SWAP_SUSPECTED = "SWAP_SUSPECTED"
ABOVE_RECOMMENDED_EPSILON = "ABOVE_RECOMMENDED_EPSILON"
ABOVE_RECOMMENDED_DELTA = "ABOVE_RECOMMENDED_DELTA"
NONPOSITIVE_EPSILON = "NONPOSITIVE_EPSILON"
NEGATIVE_DELTA = "NEGATIVE_DELTA"
DELTA_NOT_BELOW_ONE = "DELTA_NOT_BELOW_ONE"

FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair. Composition of an empty set is (0, 0)."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError(f"delta must lie in [0, 1), got {self.delta!r}")


@dataclass(frozen=True)
class SamplingInfo:
    """Sample drawn secretly and uniformly from a larger population."""

    sample_size: int
    population_size: int

    def __post_init__(self) -> None:
        if self.sample_size < 1:
            raise ValueError("sample size must be at least 1")
        if self.population_size < self.sample_size:
            raise ValueError(
                f"population size {self.population_size} must be at least the "
                f"sample size {self.sample_size}"
            )

    @property
    def ratio(self) -> float:
        return self.population_size / self.sample_size


class VerdictStatus(str, Enum):
    OK = "ok"
    WARN = "warn"
    REJECT = "reject"


@dataclass(frozen=True)
class ParamVerdict:
    status: VerdictStatus
    messages: tuple[str, ...] = ()


def compose(budgets) -> PrivacyBudget:
    """Sequential composition: losses add across released statistics."""
    epsilon = 0.0
    delta = 0.0
    for b in budgets:
        epsilon += b.epsilon
        delta += b.delta
    return PrivacyBudget(epsilon, min(delta, math.nextafter(1.0, 0.0)))


def amplify_by_sampling(global_budget: PrivacyBudget, info: SamplingInfo) -> PrivacyBudget:
    """Internal budget whose subsampled run still satisfies the global one.

    epsilon: max(eps_g, ln(1 + (m/n) * eps_g)); the max avoids penalizing
    the user where the subsampling guarantee is loose (small m/n).
    delta: (m/n) * delta_g, capped below 1.
    """
    ratio = info.ratio
    epsilon = max(global_budget.epsilon, math.log1p(ratio * global_budget.epsilon))
    delta = min(ratio * global_budget.delta, math.nextafter(1.0, 0.0))
    return PrivacyBudget(epsilon, delta)


def usable_budget(internal: PrivacyBudget, reserve_fraction: float) -> PrivacyBudget:
    """Portion of the internal budget not reserved for future analysts."""
    _check_reserve(reserve_fraction)
    keep = 1.0 - reserve_fraction
    return PrivacyBudget(internal.epsilon * keep, internal.delta * keep)


@dataclass(frozen=True)
class AllocationState:
    """Per-statistic epsilon shares inside the usable budget.

    All in-scope mechanisms are pure-epsilon, so per-statistic deltas are
    identically zero and the whole delta budget flows to the analyst
    reserve. Transitions are pure: every operation returns a new state.
    """

    internal: PrivacyBudget
    reserve_fraction: float = 0.0
    allocations: dict[str, float] = field(default_factory=dict)
    holds: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        _check_reserve(self.reserve_fraction)
        unknown_holds = self.holds - self.allocations.keys()
        if unknown_holds:
            raise ValueError(f"holds reference unknown statistics: {sorted(unknown_holds)}")

    @property
    def usable(self) -> PrivacyBudget:
        return usable_budget(self.internal, self.reserve_fraction)

    @property
    def spent(self) -> float:
        return sum(self.allocations.values())

    @property
    def unspent(self) -> float:
        return self.usable.epsilon - self.spent

    @property
    def held_total(self) -> float:
        return sum(self.allocations[sid] for sid in self.holds)

    def unheld_ids(self) -> list[str]:
        return [sid for sid in self.allocations if sid not in self.holds]

    def composed(self) -> PrivacyBudget:
        return compose(PrivacyBudget(e, 0.0) for e in self.allocations.values())


def add_allocation(state: AllocationState, stat_id: str) -> AllocationState:
    if stat_id in state.allocations:
        raise ValueError(f"statistic id {stat_id!r} already allocated")
    return replace(state, allocations={**state.allocations, stat_id: 0.0})


def remove_allocation(state: AllocationState, stat_id: str) -> AllocationState:
    _require_known(state, stat_id)
    allocations = {k: v for k, v in state.allocations.items() if k != stat_id}
    return replace(state, allocations=allocations, holds=state.holds - {stat_id})


def default_split(state: AllocationState) -> AllocationState:
    """Share the usable budget left by holds equally among unheld statistics."""
    unheld = state.unheld_ids()
    if not unheld:
        raise InfeasibleAllocation("no unheld statistic to assign budget to")
    pool = state.usable.epsilon - state.held_total
    if pool < -FEASIBILITY_TOL:
        raise InfeasibleAllocation(
            f"held statistics already claim {state.held_total:.6g} of the usable "
            f"budget {state.usable.epsilon:.6g}; release a hold or raise the budget"
        )
    share = max(pool, 0.0) / len(unheld)
    allocations = dict(state.allocations)
    for sid in unheld:
        allocations[sid] = share
    return replace(state, allocations=allocations)


def set_epsilon_target(
    state: AllocationState, stat_id: str, epsilon_required: float
) -> AllocationState:
    """Pin one unheld statistic's share and rescale the other unheld ones.

    The remaining unheld statistics are rescaled proportionally so the
    usable budget stays exactly filled; if the target is the only unheld
    statistic, any surplus simply stays unspent. Raises InfeasibleAllocation
    carrying ``max_epsilon`` when the request cannot fit.
    """
    _require_known(state, stat_id)
    if stat_id in state.holds:
        raise HeldStatisticError(
            f"statistic {stat_id!r} is held; release the hold to retarget it"
        )
    if not (math.isfinite(epsilon_required) and epsilon_required > 0):
        raise ValueError(f"target epsilon must be positive, got {epsilon_required!r}")
    available = state.usable.epsilon - state.held_total
    remainder = available - epsilon_required
    if remainder < -FEASIBILITY_TOL:
        raise InfeasibleAllocation(
            f"target needs epsilon {epsilon_required:.6g} but only "
            f"{max(available, 0.0):.6g} remains outside holds",
            max_epsilon=max(available, 0.0),
        )
    remainder = max(remainder, 0.0)
    allocations = dict(state.allocations)
    allocations[stat_id] = epsilon_required
    others = [sid for sid in state.unheld_ids() if sid != stat_id]
    if others:
        current = sum(state.allocations[sid] for sid in others)
        if current > 0.0:
            factor = remainder / current
            for sid in others:
                allocations[sid] = state.allocations[sid] * factor
        else:
            share = remainder / len(others)
            for sid in others:
                allocations[sid] = share
    return replace(state, allocations=allocations)


def toggle_hold(state: AllocationState, stat_id: str, held: bool) -> AllocationState:
    """Flag updates only; allocations are untouched."""
    _require_known(state, stat_id)
    holds = state.holds | {stat_id} if held else state.holds - {stat_id}
    return replace(state, holds=holds)


def update_global(
    state: AllocationState,
    new_global: PrivacyBudget,
    info: SamplingInfo | None = None,
) -> AllocationState:
    """Recompute internal and usable budgets; rescale every allocation.

    A change of the global budget dominates holds: held allocations scale
    too, and the caller is expected to warn that held errors moved.
    """
    verdict = validate_params(new_global.epsilon, new_global.delta)
    if verdict.status is VerdictStatus.REJECT:
        raise ParametersRejected(
            "new privacy loss parameters were rejected", messages=list(verdict.messages)
        )
    internal = amplify_by_sampling(new_global, info) if info is not None else new_global
    return _rescale(state, internal, state.reserve_fraction)


def set_reserve(state: AllocationState, reserve_fraction: float) -> AllocationState:
    """Move the analyst-reserve slider; rescales every allocation with it."""
    _check_reserve(reserve_fraction)
    return _rescale(state, state.internal, reserve_fraction)


def _rescale(
    state: AllocationState, internal: PrivacyBudget, reserve_fraction: float
) -> AllocationState:
    old_usable = state.usable.epsilon
    new_usable = usable_budget(internal, reserve_fraction).epsilon
    if old_usable <= 0.0:
        raise InfeasibleAllocation("current usable budget is zero; cannot rescale")
    ratio = new_usable / old_usable
    allocations = {sid: eps * ratio for sid, eps in state.allocations.items()}
    return replace(
        state, internal=internal, reserve_fraction=reserve_fraction, allocations=allocations
    )


def validate_params(epsilon: float, delta: float) -> ParamVerdict:
    """Guardrail verdict on a privacy-loss pair; never raises.

    Rejects impossible values outright and warns on suspicious ones, most
    notably a suspected swap of the two parameters (a tiny epsilon next to
    a huge delta).
    """
    rejections: list[str] = []
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and epsilon > 0):
        rejections.append(NONPOSITIVE_EPSILON)
    if not (isinstance(delta, (int, float)) and math.isfinite(delta)) or delta < 0:
        rejections.append(NEGATIVE_DELTA)
    elif delta >= 1:
        rejections.append(DELTA_NOT_BELOW_ONE)
    if rejections:
        return ParamVerdict(VerdictStatus.REJECT, tuple(rejections))
    warnings: list[str] = []
    if epsilon < SWAP_EPSILON_BELOW and delta > SWAP_DELTA_ABOVE:
        warnings.append(SWAP_SUSPECTED)
    if epsilon > RECOMMENDED_EPSILON_MAX:
        warnings.append(ABOVE_RECOMMENDED_EPSILON)
    if delta > RECOMMENDED_DELTA_MAX:
        warnings.append(ABOVE_RECOMMENDED_DELTA)
    if warnings:
        return ParamVerdict(VerdictStatus.WARN, tuple(warnings))
    return ParamVerdict(VerdictStatus.OK)


# Parameter presets per data-sensitivity tier. Tier 1 is public information
# and tier 5 is too sensitive for this tool; both come back as refusals.
TIER_PRESETS: dict[int, PrivacyBudget] = {
    2: PrivacyBudget(1.0, 1e-5),
    3: PrivacyBudget(0.25, 1e-6),
    4: PrivacyBudget(0.05, 1e-7),
}

TIER_DESCRIPTIONS: dict[int, str] = {
    1: "public information",
    2: "confidential information whose disclosure would not cause material harm",
    3: "information that could cause risk of material harm if disclosed",
    4: "information that would likely cause serious harm if disclosed",
    5: "information that would cause severe harm if disclosed",
}


def recommend_params(tier: int) -> PrivacyBudget:
    """Preset (epsilon, delta) for sensitivity tiers 2 through 4."""
    if tier == 1:
        raise TierError(
            "differential privacy is not necessary for public information",
            tier=1,
        )
    if tier == 5:
        raise TierError(
            "this tool is not recommended for severely sensitive data; "
            "seek stronger controls than statistical release",
            tier=5,
        )
    try:
        return TIER_PRESETS[tier]
    except KeyError:
        raise ValueError(f"unknown sensitivity tier {tier!r}") from None


def _check_reserve(reserve_fraction: float) -> None:
    if not (0.0 <= reserve_fraction < 1.0):
        raise ValueError(
            f"reserve fraction must lie in [0, 1), got {reserve_fraction!r}"
        )


def _require_known(state: AllocationState, stat_id: str) -> None:
    if stat_id not in state.allocations:
        raise UnknownStatisticError(f"no allocation for statistic {stat_id!r}")
