"""Command-line budgeter: one session document, one subcommand per step.

Typical flow:

    dpbudgeter init --dataset data.csv --epsilon 0.25 --delta 1e-6 --session s.json
    dpbudgeter add-stat --variable age --kind mean --lower 0 --upper 150 --session s.json
    dpbudgeter show --session s.json
    dpbudgeter error-target s1 1.0 --session s.json
    dpbudgeter finalize --session s.json --out releases.json

The --seed and --zero-noise options exist for test builds only and refuse
to run unless DPBUDGETER_TEST_MODES=1 is set.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import session as sessions
from .data import load_codebook, load_csv
from .errors import BudgeterError
from .rng import RandomSource
from .variables import StatisticKind, VariableKind, VariableMetadata


def _fail(exc: Exception) -> None:
    code = getattr(exc, "code", "ERROR")
    click.echo(f"error[{code}]: {exc}", err=True)
    details = getattr(exc, "details", None)
    if details:
        for key, value in details.items():
            click.echo(f"  {key}: {value}", err=True)
    sys.exit(1)


def _load(session_file: str) -> sessions.Session:
    try:
        return sessions.load_session_file(session_file)
    except (BudgeterError, OSError, ValueError, json.JSONDecodeError) as exc:
        _fail(exc)


def _save(session: sessions.Session, session_file: str) -> None:
    sessions.save_session_file(session, session_file)


def _print_warnings(warnings: list[str]) -> None:
    for code in warnings:
        click.echo(f"warning: {code}")


session_option = click.option(
    "--session", "session_file", required=True, type=click.Path(), help="Session document path."
)


@click.group()
def main() -> None:
    """Budget a global privacy loss across statistics and release them."""


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--epsilon", required=True, type=float)
@click.option("--delta", required=True, type=float)
@click.option("--population", type=int, default=None, help="Population size for sampling amplification.")
@click.option("--acknowledge", is_flag=True, help="Accept parameter warnings and proceed.")
@session_option
def init(dataset: str, epsilon: float, delta: float, population: int | None, acknowledge: bool, session_file: str) -> None:
    """Start a session over a dataset."""
    try:
        handle = load_csv(dataset)
        session = sessions.create_session(
            handle, epsilon, delta, population_size=population, acknowledge_warnings=acknowledge
        )
    except BudgeterError as exc:
        _fail(exc)
    _save(session, session_file)
    _print_warnings(list(session.acknowledged_warnings))
    click.echo(f"session {session.id} created ({handle.row_count} rows, firewall sealed)")


@main.command()
@click.option("--epsilon", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--population", type=int, default=None)
@click.option("--acknowledge", is_flag=True)
@session_option
def params(epsilon: float | None, delta: float | None, population: int | None, acknowledge: bool, session_file: str) -> None:
    """Edit privacy loss parameters (deliberate, re-validated)."""
    session = _load(session_file)
    try:
        kwargs: dict = {"epsilon": epsilon, "delta": delta, "acknowledge_warnings": acknowledge}
        if population is not None:
            kwargs["population_size"] = population
        warnings = sessions.update_params(session, **kwargs)
    except BudgeterError as exc:
        _fail(exc)
    _save(session, session_file)
    _print_warnings(warnings)
    click.echo(
        f"params now epsilon={session.global_budget.epsilon:g} "
        f"delta={session.global_budget.delta:g} "
        f"internal epsilon={session.allocation.internal.epsilon:.6g}"
    )


@main.command("add-stat")
@click.option("--variable", required=True)
@click.option("--kind", required=True, type=click.Choice([k.value for k in StatisticKind]))
@click.option("--lower", type=float, default=None)
@click.option("--upper", type=float, default=None)
@click.option("--categories", default=None, help="Comma-separated category labels.")
@click.option("--boolean", "is_boolean", is_flag=True, help="Treat the variable as boolean.")
@click.option("--grid", type=int, default=None, help="Grid cells for quantile/CDF/numeric histogram.")
@click.option("--p", type=float, default=None, help="Quantile fraction in (0,1).")
@click.option("--codebook", type=click.Path(exists=True), default=None, help="Metadata JSON to prefill from.")
@session_option
def add_stat(
    variable: str,
    kind: str,
    lower: float | None,
    upper: float | None,
    categories: str | None,
    is_boolean: bool,
    grid: int | None,
    p: float | None,
    codebook: str | None,
    session_file: str,
) -> None:
    """Add a statistic; budget re-splits evenly across unheld statistics."""
    session = _load(session_file)
    try:
        metadata = _build_metadata(variable, lower, upper, categories, is_boolean, grid, codebook)
        spec = sessions.add_statistic(session, variable, StatisticKind(kind), metadata, p=p)
    except BudgeterError as exc:
        _fail(exc)
    _save(session, session_file)
    click.echo(f"added {spec.id}: {kind} of {variable}")


def _build_metadata(
    variable: str,
    lower: float | None,
    upper: float | None,
    categories: str | None,
    is_boolean: bool,
    grid: int | None,
    codebook: str | None,
) -> VariableMetadata:
    if codebook is not None:
        book = load_codebook(codebook)
        if variable in book:
            base = book[variable]
            return VariableMetadata(
                kind=base.kind,
                lower=lower if lower is not None else base.lower,
                upper=upper if upper is not None else base.upper,
                categories=(
                    tuple(x.strip() for x in categories.split(","))
                    if categories is not None
                    else base.categories
                ),
                grid_cells=grid if grid is not None else base.grid_cells,
            )
    if categories is not None:
        labels = tuple(x.strip() for x in categories.split(","))
        kind = VariableKind.BOOLEAN if is_boolean else VariableKind.CATEGORICAL
        return VariableMetadata(kind=kind, categories=labels, grid_cells=grid)
    return VariableMetadata(kind=VariableKind.NUMERICAL, lower=lower, upper=upper, grid_cells=grid)


@main.command("rm-stat")
@click.argument("stat_id")
@session_option
def rm_stat(stat_id: str, session_file: str) -> None:
    """Delete a statistic; remaining unheld ones re-split evenly."""
    session = _load(session_file)
    try:
        sessions.delete_statistic(session, stat_id)
    except BudgeterError as exc:
        _fail(exc)
    _save(session, session_file)
    click.echo(f"removed {stat_id}")


@main.command("error-target")
@click.argument("stat_id")
@click.argument("value", type=float)
@session_option
def error_target(stat_id: str, value: float, session_file: str) -> None:
    """Request a worst-case error for one statistic; others rescale to fit."""
    session = _load(session_file)
    try:
        sessions.set_error_target(session, stat_id, value)
    except BudgeterError as exc:
        _fail(exc)
    _save(session, session_file)
    eps = session.allocation.allocations[stat_id]
    click.echo(f"{stat_id} now spends epsilon={eps:.6g}")


@main.command()
@click.argument("stat_id")
@click.option("--off", is_flag=True, help="Release the hold instead of setting it.")
@session_option
def hold(stat_id: str, off: bool, session_file: str) -> None:
    """Freeze a statistic's allocation against further redistribution."""
    session = _load(session_file)
    try:
        sessions.toggle_hold(session, stat_id, held=not off)
    except BudgeterError as exc:
        _fail(exc)
    _save(session, session_file)
    click.echo(f"{stat_id} {'held' if not off else 'released'}")


@main.command()
@click.argument("fraction", type=float)
@session_option
def reserve(fraction: float, session_file: str) -> None:
    """Reserve a fraction of the budget for future analysts."""
    session = _load(session_file)
    try:
        warnings = sessions.set_reserve(session, fraction)
    except (BudgeterError, ValueError) as exc:
        _fail(exc)
    _save(session, session_file)
    _print_warnings(warnings)
    click.echo(
        f"reserve={fraction:g}, usable epsilon={session.allocation.usable.epsilon:.6g}"
    )


@main.command()
@click.argument("percent", type=float)
@session_option
def confidence(percent: float, session_file: str) -> None:
    """Set the confidence level as a percentage, e.g. 95 or 98."""
    if not (50.0 <= percent < 100.0):
        _fail(ValueError("confidence percentage must lie in [50, 100)"))
    session = _load(session_file)
    try:
        sessions.set_confidence(session, 1.0 - percent / 100.0)
    except (BudgeterError, ValueError) as exc:
        _fail(exc)
    _save(session, session_file)
    click.echo(f"confidence {percent:g}% (alpha={session.alpha:g})")


@main.command()
@session_option
def show(session_file: str) -> None:
    """Render the budget summary and the live error table."""
    session = _load(session_file)
    a = session.allocation
    click.echo(f"session {session.id} ({session.phase})")
    click.echo(
        f"dataset: {session.dataset.path}  rows={session.dataset.row_count}  "
        f"firewall={session.dataset.firewall_state}"
    )
    pop = session.sampling.population_size if session.sampling else "-"
    click.echo(
        f"global epsilon={session.global_budget.epsilon:g} delta={session.global_budget.delta:g}  "
        f"population={pop}  internal epsilon={a.internal.epsilon:.6g}"
    )
    click.echo(
        f"reserve={a.reserve_fraction:g}  usable epsilon={a.usable.epsilon:.6g}  "
        f"unspent epsilon={a.unspent:.6g}  alpha={session.alpha:g}"
    )
    rows = sessions.error_table(session)
    if not rows:
        click.echo("no statistics selected yet")
        return
    click.echo(f"{'id':<5} {'variable':<14} {'statistic':<10} {'held':<5} {'epsilon':<12} {'error':<14} units")
    for row in rows:
        err = f"{row['error_value']:.6g}" if row["error_value"] is not None else "inf"
        kind = row["kind"] if row["p"] is None else f"{row['kind']}({row['p']:g})"
        click.echo(
            f"{row['id']:<5} {row['variable']:<14} {kind:<10} "
            f"{'yes' if row['held'] else 'no':<5} {row['epsilon']:<12.6g} {err:<14} {row['error_units']}"
        )


def _pick_rng(seed: int | None, zero_noise: bool) -> RandomSource:
    if zero_noise:
        return RandomSource.zero_noise()
    if seed is not None:
        return RandomSource.seeded(seed)
    return RandomSource.secure()


@main.command()
@click.option("--out", type=click.Path(), default=None, help="Write the release document here.")
@click.option("--seed", type=int, default=None, help="Test builds only.")
@click.option("--zero-noise", is_flag=True, help="Test builds only.")
@session_option
def finalize(out: str | None, seed: int | None, zero_noise: bool, session_file: str) -> None:
    """Run the mechanisms on the raw data and freeze the session."""
    session = _load(session_file)
    try:
        rng = _pick_rng(seed, zero_noise)
        sessions.finalize(session, rng)
    except (BudgeterError, RuntimeError) as exc:
        _fail(exc)
    # Spend lands in the session document before the releases are printed.
    _save(session, session_file)
    doc = sessions.releases_document(session)
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"{len(doc['releases'])} release(s) written to {out}")
    else:
        click.echo(text)


@main.command()
@click.argument("plan_file", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--zero-noise", is_flag=True)
def run(plan_file: str, out: str | None, seed: int | None, zero_noise: bool) -> None:
    """Execute a saved session document end to end without interaction."""
    session = _load(plan_file)
    try:
        rng = _pick_rng(seed, zero_noise)
        sessions.finalize(session, rng)
    except (BudgeterError, RuntimeError) as exc:
        _fail(exc)
    _save(session, plan_file)
    doc = sessions.releases_document(session)
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"{len(doc['releases'])} release(s) written to {out}")
    else:
        click.echo(text)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8787, type=int)
@click.option("--store", type=click.Path(), default=None, help="Directory for persisted sessions.")
@click.option("--test-modes", is_flag=True, help="Allow seeded/zero-noise finalize requests.")
def serve(host: str, port: int, store: str | None, test_modes: bool) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    app = create_app(store_dir=store, allow_test_rng=test_modes)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
