"""Variable and statistic vocabulary: kinds, metadata, structural checks.

Metadata is data-independent by construction. Nothing in this module can
see dataset cells, so bounds, categories and grids cannot leak them; they
must be a priori estimates supplied by the data owner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

QUANTILE_DEFAULT_GRID = 100
CDF_DEFAULT_GRID = 20
HISTOGRAM_DEFAULT_GRID = 20

# Reserved histogram bin for values outside the declared categories.
UNCATEGORIZED = "uncategorized"


class VariableKind(str, Enum):
    NUMERICAL = "numerical"
    CATEGORICAL = "categorical"
    BOOLEAN = "boolean"


class StatisticKind(str, Enum):
    MEAN = "mean"
    HISTOGRAM = "histogram"
    QUANTILE = "quantile"
    CDF = "cdf"


# Variable kinds each statistic can run on.
COMPATIBLE_VARIABLE_KINDS: dict[StatisticKind, frozenset[VariableKind]] = {
    StatisticKind.MEAN: frozenset({VariableKind.NUMERICAL}),
    StatisticKind.QUANTILE: frozenset({VariableKind.NUMERICAL}),
    StatisticKind.CDF: frozenset({VariableKind.NUMERICAL}),
    StatisticKind.HISTOGRAM: frozenset(
        {VariableKind.NUMERICAL, VariableKind.CATEGORICAL, VariableKind.BOOLEAN}
    ),
}


@dataclass(frozen=True)
class VariableMetadata:
    """Data-independent auxiliary inputs that calibrate the mechanisms."""

    kind: VariableKind
    lower: float | None = None
    upper: float | None = None
    categories: tuple[str, ...] | None = None
    grid_cells: int | None = None

    @property
    def width(self) -> float:
        """Declared range width (numerical variables only)."""
        if self.lower is None or self.upper is None:
            raise ValueError("variable has no declared bounds")
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        if self.lower is None or self.upper is None:
            raise ValueError("variable has no declared bounds")
        return (self.lower + self.upper) / 2.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "lower": self.lower,
            "upper": self.upper,
            "categories": list(self.categories) if self.categories is not None else None,
            "grid_cells": self.grid_cells,
        }

    @classmethod
    def from_dict(cls, data: dict) -> VariableMetadata:
        categories = data.get("categories")
        return cls(
            kind=VariableKind(data["kind"]),
            lower=data.get("lower"),
            upper=data.get("upper"),
            categories=tuple(categories) if categories is not None else None,
            grid_cells=data.get("grid_cells"),
        )


@dataclass(frozen=True)
class VariableSchema:
    """A named variable together with its declared metadata."""

    name: str
    metadata: VariableMetadata


def validate_metadata(metadata: VariableMetadata) -> list[str]:
    """Structural checks only; returns remediation messages, empty if ok.

    Never reads data cells: data-independence is enforced by construction.
    """
    errors: list[str] = []
    kind = metadata.kind
    if kind is VariableKind.NUMERICAL:
        if metadata.lower is None or metadata.upper is None:
            errors.append(
                "numerical variables need lower and upper bounds; supply an "
                "a priori range, never values looked up in the data"
            )
        else:
            if not (math.isfinite(metadata.lower) and math.isfinite(metadata.upper)):
                errors.append("bounds must be finite numbers")
            elif metadata.lower >= metadata.upper:
                errors.append(
                    f"lower bound {metadata.lower} must be strictly below "
                    f"upper bound {metadata.upper}"
                )
        if metadata.categories is not None:
            errors.append("categories apply to categorical or boolean variables only")
    else:
        if metadata.categories is None or len(metadata.categories) == 0:
            errors.append(
                "categorical and boolean variables need a non-empty category "
                "list covering the a priori possible labels"
            )
        else:
            if len(set(metadata.categories)) != len(metadata.categories):
                errors.append("category labels must be unique")
            if any(label == "" for label in metadata.categories):
                errors.append("category labels must be non-empty strings")
            if UNCATEGORIZED in metadata.categories:
                errors.append(
                    f"{UNCATEGORIZED!r} is reserved for the overflow bin; "
                    "rename that category"
                )
            if kind is VariableKind.BOOLEAN and len(metadata.categories) != 2:
                errors.append("boolean variables need exactly two category labels")
        if metadata.lower is not None or metadata.upper is not None:
            errors.append("bounds apply to numerical variables only")
    if metadata.grid_cells is not None and metadata.grid_cells < 2:
        errors.append("grid_cells must be at least 2")
    return errors


def resolve_grid(stat_kind: StatisticKind, metadata: VariableMetadata) -> int:
    """Grid size used by a statistic, falling back to the kind's default."""
    if metadata.grid_cells is not None:
        return metadata.grid_cells
    if stat_kind is StatisticKind.QUANTILE:
        return QUANTILE_DEFAULT_GRID
    if stat_kind is StatisticKind.CDF:
        return CDF_DEFAULT_GRID
    return HISTOGRAM_DEFAULT_GRID
