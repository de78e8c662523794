"""Brute-force reference implementations, independent of the package.

Everything here is pure-Python loops and exact rational arithmetic; no
numpy, no shared code with the mechanisms under test. Used to freeze
expected values and as the comparison side of dual-route checks.
"""

from __future__ import annotations

import math
from fractions import Fraction


def clamp(v: float, lower: float, upper: float) -> float:
    return lower if v < lower else upper if v > upper else v


def fill_and_clip(values, lower: float, upper: float) -> list[float]:
    mid = (lower + upper) / 2.0
    return [clamp(mid if v is None else float(v), float(lower), float(upper)) for v in values]


def exact_mean(values) -> float:
    """Correctly rounded mean via exact rational arithmetic, then one division."""
    total = sum(Fraction(v) for v in values)
    return float(total) / len(values)


def plain_mean(values, lower: float, upper: float) -> float:
    return exact_mean(fill_and_clip(values, lower, upper))


def plain_categorical_counts(values, categories) -> list[int]:
    counts = [0] * (len(categories) + 1)
    for v in values:
        if v is None or v not in categories:
            counts[-1] += 1
        else:
            counts[list(categories).index(v)] += 1
    return counts


def numeric_cell_index(v: float, lower: float, upper: float, grid: int) -> int:
    width = (upper - lower) / grid
    idx = int((v - lower) / width)
    return grid - 1 if idx >= grid else idx


def plain_numeric_counts(values, lower: float, upper: float, grid: int) -> list[int]:
    counts = [0] * grid
    for v in fill_and_clip(values, lower, upper):
        counts[numeric_cell_index(v, lower, upper, grid)] += 1
    return counts


def plain_cdf(values, lower: float, upper: float, grid: int) -> list[float]:
    counts = plain_numeric_counts(values, lower, upper, grid)
    n = len(values)
    out, running = [], 0
    for c in counts:
        running += c
        out.append(running / n)
    out[-1] = 1.0
    return out


def quantile_rank_deviations(values, p: float, lower: float, upper: float, grid: int) -> list[float]:
    """|rank(right edge) - p*n| per cell, by direct counting."""
    clipped = fill_and_clip(values, lower, upper)
    n = len(clipped)
    width = (upper - lower) / grid
    devs = []
    for i in range(grid):
        edge = upper if i == grid - 1 else lower + width * (i + 1)
        rank = sum(1 for v in clipped if v <= edge)
        devs.append(abs(rank - p * n))
    return devs


def best_quantile_cell(values, p: float, lower: float, upper: float, grid: int) -> int:
    devs = quantile_rank_deviations(values, p, lower, upper, grid)
    best = min(devs)
    return devs.index(best)


def softmax_selection_probs(utilities, epsilon: float) -> list[float]:
    weights = [math.exp(epsilon * u / 2.0) for u in utilities]
    total = sum(weights)
    return [w / total for w in weights]


def laplace_pdf(x: float, location: float, scale: float) -> float:
    return math.exp(-abs(x - location) / scale) / (2.0 * scale)


def laplace_log_pdf(x: float, location: float, scale: float) -> float:
    return -abs(x - location) / scale - math.log(2.0 * scale)
