"""Differentially private release mechanisms: mean, histogram, quantile, CDF.

Every mechanism is a pure function of (data, metadata, epsilon, randomness)
with the randomness passed explicitly, so concurrent invocation is safe.
Calibration conventions, fixed across the engine:

* neighboring datasets differ in one replaced row, so
* a clipped mean over n rows has sensitivity (upper - lower) / n,
* a histogram count vector has L1 sensitivity 2,
* the quantile rank-deviation utility has sensitivity 1.

Missing values keep n fixed and are handled data-independently: numerical
missing values count as the midpoint of the declared range, categorical
missing values fall into the overflow bin.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import IncompatibleKindError
from .rng import RandomSource
from .variables import (
    HISTOGRAM_DEFAULT_GRID,
    QUANTILE_DEFAULT_GRID,
    CDF_DEFAULT_GRID,
    UNCATEGORIZED,
    VariableKind,
    VariableMetadata,
)


def sample_laplace(scale: float, rng: RandomSource) -> float:
    """Draw from Laplace(0, scale) by inverse CDF; 0 under the zero-noise hook.

    ``scale`` must be a positive finite number; anything else is a contract
    violation by the caller.
    """
    if not (isinstance(scale, (int, float)) and math.isfinite(scale) and scale > 0):
        raise ValueError(f"Laplace scale must be positive and finite, got {scale!r}")
    if rng.is_zero_noise:
        return 0.0
    u = rng.uniform() - 0.5
    while u == -0.5:  # rng.uniform() returned exactly 0.0
        u = rng.uniform() - 0.5
    return -scale * math.copysign(math.log1p(-2.0 * abs(u)), u)


def clip_numeric(values: Sequence[float], meta: VariableMetadata) -> list[float]:
    """Clamp every value into the declared [lower, upper] range.

    Order and length are preserved; in-range values pass through unchanged.
    """
    _require_numerical(meta)
    lower, upper = float(meta.lower), float(meta.upper)
    return [lower if v < lower else upper if v > upper else float(v) for v in values]


def dp_mean(
    values: Sequence[float | None],
    meta: VariableMetadata,
    n: int,
    epsilon: float,
    rng: RandomSource,
) -> float:
    """Clipped mean plus Laplace noise at scale (upper - lower) / (n * epsilon)."""
    _require_numerical(meta)
    _require_epsilon(epsilon)
    if n < 1:
        raise ValueError("dp_mean needs at least one data row")
    if n != len(values):
        raise ValueError(f"row count {n} does not match {len(values)} values")
    clipped = _clipped_array(values, meta)
    true_mean = math.fsum(clipped) / n
    scale = meta.width / (n * epsilon)
    return true_mean + sample_laplace(scale, rng)


def dp_histogram(
    values: Sequence[object],
    meta: VariableMetadata,
    epsilon: float,
    rng: RandomSource,
) -> list[tuple[str, float]]:
    """Per-bin counts with independent Laplace(2 / epsilon) noise.

    Categorical and boolean variables get one bin per declared category plus
    an appended overflow bin collecting unknown labels and missing values.
    Numerical variables are clipped and binned over ``grid_cells`` equal-width
    cells of the declared range, so no overflow bin is needed.
    """
    _require_epsilon(epsilon)
    if meta.kind is VariableKind.NUMERICAL:
        counts, labels = _numeric_counts(values, meta, meta.grid_cells or HISTOGRAM_DEFAULT_GRID)
    else:
        counts, labels = _categorical_counts(values, meta)
    scale = 2.0 / epsilon
    return [(label, count + sample_laplace(scale, rng)) for label, count in zip(labels, counts)]


def dp_quantile(
    values: Sequence[float | None],
    p: float,
    meta: VariableMetadata,
    epsilon: float,
    rng: RandomSource,
) -> float:
    """Select a grid cell by the exponential mechanism; return its midpoint.

    The declared range is split into G equal-width cells; the utility of a
    cell is the negative deviation between the rank of its right edge and
    p * n, which changes by at most 1 when one row is replaced. Selection
    probability is proportional to exp(epsilon * utility / 2). Under the
    zero-noise hook the lowest-index maximal-utility cell is returned.
    """
    _require_numerical(meta)
    _require_epsilon(epsilon)
    if not (0.0 < p < 1.0):
        raise ValueError(f"quantile fraction must lie in (0, 1), got {p}")
    if len(values) == 0:
        raise ValueError("dp_quantile needs at least one data row")
    grid = meta.grid_cells or QUANTILE_DEFAULT_GRID
    clipped = _clipped_array(values, meta)
    clipped.sort()
    lower, width = meta.lower, meta.width / grid
    edges = lower + width * np.arange(1, grid + 1)
    edges[-1] = meta.upper
    ranks = np.searchsorted(clipped, edges, side="right")
    utilities = -np.abs(ranks - p * len(clipped))
    if rng.is_zero_noise:
        index = int(np.argmax(utilities))
    else:
        weights = np.exp((epsilon / 2.0) * (utilities - utilities.max()))
        cumulative = np.cumsum(weights)
        draw = rng.uniform() * cumulative[-1]
        index = int(np.searchsorted(cumulative, draw, side="right"))
        index = min(index, grid - 1)
    return lower + width * (index + 0.5)


def dp_cdf(
    values: Sequence[float | None],
    meta: VariableMetadata,
    epsilon: float,
    rng: RandomSource,
) -> list[tuple[float, float]]:
    """Noisy cumulative fractions at the right edges of G equal-width cells.

    Built from the noisy G-bin histogram (per-bin scale 2 / epsilon):
    cumulative sums are divided by n, clamped into [0, 1], made monotone by
    running maximum, and the final point is forced to 1.
    """
    _require_numerical(meta)
    _require_epsilon(epsilon)
    if len(values) == 0:
        raise ValueError("dp_cdf needs at least one data row")
    grid = meta.grid_cells or CDF_DEFAULT_GRID
    counts, _ = _numeric_counts(values, meta, grid)
    scale = 2.0 / epsilon
    noisy = [count + sample_laplace(scale, rng) for count in counts]
    n = len(values)
    lower, width = meta.lower, meta.width / grid
    edges = [lower + width * (i + 1) for i in range(grid)]
    edges[-1] = meta.upper
    cumulative: list[float] = []
    total = 0.0
    for noise_count in noisy:
        total += noise_count
        cumulative.append(total / n)
    fractions = monotone_unit_fractions(cumulative)
    fractions[-1] = 1.0
    return list(zip(edges, fractions))


def monotone_unit_fractions(fractions: Sequence[float]) -> list[float]:
    """Clamp into [0, 1] and enforce monotonicity by running maximum."""
    out: list[float] = []
    running = 0.0
    for value in fractions:
        running = max(running, min(max(value, 0.0), 1.0))
        out.append(running)
    return out


def _require_numerical(meta: VariableMetadata) -> None:
    if meta.kind is not VariableKind.NUMERICAL:
        raise IncompatibleKindError(
            f"operation needs a numerical variable, got {meta.kind.value}"
        )
    if meta.lower is None or meta.upper is None or meta.lower >= meta.upper:
        raise ValueError("numerical metadata needs bounds with lower < upper")


def _require_epsilon(epsilon: float) -> None:
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and epsilon > 0):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon!r}")


def _clipped_array(values: Sequence[float | None], meta: VariableMetadata) -> np.ndarray:
    """Missing values to the range midpoint, then clip into bounds."""
    midpoint = meta.midpoint
    filled = [midpoint if v is None else float(v) for v in values]
    return np.clip(np.asarray(filled, dtype=float), meta.lower, meta.upper)


def _numeric_counts(
    values: Sequence[float | None], meta: VariableMetadata, grid: int
) -> tuple[list[int], list[str]]:
    clipped = _clipped_array(values, meta)
    width = meta.width / grid
    indices = np.minimum(((clipped - meta.lower) / width).astype(int), grid - 1)
    counts = np.bincount(indices, minlength=grid).tolist()
    labels = [_cell_label(meta.lower + i * width, meta.lower + (i + 1) * width, i == grid - 1) for i in range(grid)]
    return counts, labels


def _cell_label(lo: float, hi: float, last: bool) -> str:
    return f"[{lo:g}, {hi:g}]" if last else f"[{lo:g}, {hi:g})"


def _categorical_counts(
    values: Sequence[object], meta: VariableMetadata
) -> tuple[list[int], list[str]]:
    if not meta.categories:
        raise ValueError("categorical metadata needs declared categories")
    labels = list(meta.categories) + [UNCATEGORIZED]
    positions = {label: i for i, label in enumerate(meta.categories)}
    counts = [0] * len(labels)
    overflow = len(labels) - 1
    for value in values:
        counts[positions.get(value, overflow) if value is not None else overflow] += 1
    return counts, labels
