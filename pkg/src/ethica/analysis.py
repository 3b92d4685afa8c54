"""Group-imbalance detection and protected-attribute association."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Any

from .errors import EvaluationError, ValidationError
from .relation import BOOLEAN, DATE, TEXT, Table

DEFAULT_DISPARITY_THRESHOLD = Decimal("0.8")
DEFAULT_ASSOC_THRESHOLD = Decimal("0.5")
# Numeric columns with at most this many distinct values count as categorical.
MAX_CODED_LEVELS = 10

CRAMERS_V = "cramers_v"
CORRELATION_RATIO = "correlation_ratio"


@dataclass(frozen=True)
class GroupProfile:
    attribute: str
    groups: dict[Any, int]

    @property
    def total(self) -> int:
        return sum(self.groups.values())

    def to_dict(self) -> dict:
        return {"attribute": self.attribute,
                "groups": [{"value": _jsonable(v), "count": n} for v, n in self.groups.items()]}


@dataclass(frozen=True)
class DisparityReport:
    attribute: str
    min_group: tuple[Any, int] | None
    max_group: tuple[Any, int] | None
    ratio: Decimal
    flagged: bool
    threshold: Decimal

    def to_dict(self) -> dict:
        def grp(g):
            return None if g is None else {"value": _jsonable(g[0]), "count": g[1]}
        return {"attribute": self.attribute, "min_group": grp(self.min_group),
                "max_group": grp(self.max_group), "ratio": display_ratio(self.ratio),
                "flagged": self.flagged, "threshold": str(self.threshold)}


@dataclass(frozen=True)
class AssociationScore:
    column_a: str
    column_b: str
    metric: str
    value: float

    def to_dict(self) -> dict:
        return {"column_a": self.column_a, "column_b": self.column_b,
                "metric": self.metric, "value": round(self.value, 6)}


def display_ratio(r: Decimal) -> str:
    """Four decimal places, trailing zeros dropped (0.2, 0.3333, 1)."""
    q = r.quantize(Decimal("0.0001"))
    return format(q.normalize(), "f")


def _jsonable(v):
    if isinstance(v, Decimal):
        return str(v)
    return v


def group_cardinalities(t: Table, attr: str) -> GroupProfile:
    """Count rows per distinct value of ``attr`` (null is a value of its own)."""
    col = t.resolve(attr)
    return GroupProfile(col, dict(Counter(t.column(col))))


def disparity(p: GroupProfile, threshold=DEFAULT_DISPARITY_THRESHOLD) -> DisparityReport:
    """Flag a profile whose smallest/largest group ratio falls under ``threshold``.

    Ties for the smallest or largest group go to the first value seen.
    """
    threshold = Decimal(str(threshold))
    if not (0 < threshold <= 1):
        raise ValidationError(f"disparity threshold must be in (0, 1], got {threshold}")
    if not p.groups:
        return DisparityReport(p.attribute, None, None, Decimal(1), False, threshold)
    items = list(p.groups.items())
    lo = min(items, key=lambda kv: kv[1])
    hi = max(items, key=lambda kv: kv[1])
    ratio = Decimal(lo[1]) / Decimal(hi[1]) if hi[1] else Decimal(1)
    flagged = len(items) >= 2 and ratio < threshold
    return DisparityReport(p.attribute, lo, hi, ratio, flagged, threshold)


def is_categorical(t: Table, column: str) -> bool:
    type_ = t.schema.type_of(column)
    if type_ in (TEXT, BOOLEAN, DATE):
        return True
    distinct = {v for v in t.column(column) if v is not None}
    return len(distinct) <= MAX_CODED_LEVELS


def cramers_v_squared(xs, ys) -> Fraction:
    """Exact squared Cramér's V (no bias correction); 0 when either side is constant."""
    n = len(xs)
    if n == 0:
        return Fraction(0)
    rows = Counter(xs)
    cols = Counter(ys)
    k = min(len(rows), len(cols))
    if k < 2:
        return Fraction(0)
    cells = Counter(zip(xs, ys))
    # chi2 = n * (sum n_ij^2 / (r_i c_j) - 1)
    s = sum(Fraction(nij * nij, rows[x] * cols[y]) for (x, y), nij in cells.items())
    chi2 = n * (s - 1)
    return chi2 / (n * (k - 1))


def correlation_ratio_squared(categories, values) -> Fraction:
    """Exact squared correlation ratio of numeric ``values`` grouped by ``categories``."""
    pairs = [(c, Fraction(v)) for c, v in zip(categories, values) if v is not None]
    if not pairs:
        return Fraction(0)
    mean = sum(v for _, v in pairs) / len(pairs)
    total = sum((v - mean) ** 2 for _, v in pairs)
    if total == 0:
        return Fraction(0)
    by_group: dict[Any, list[Fraction]] = {}
    for c, v in pairs:
        by_group.setdefault(c, []).append(v)
    between = sum(len(vs) * (sum(vs) / len(vs) - mean) ** 2 for vs in by_group.values())
    return between / total


def association(t: Table, protected: str, other: str) -> tuple[AssociationScore, Fraction]:
    """Score one column against the protected one; also returns the exact square."""
    xs = t.column(protected)
    ys = t.column(other)
    if is_categorical(t, other):
        sq, metric = cramers_v_squared(xs, ys), CRAMERS_V
    else:
        sq, metric = correlation_ratio_squared(xs, ys), CORRELATION_RATIO
    sq = min(sq, Fraction(1))
    return AssociationScore(protected, other, metric, math.sqrt(sq)), sq


def correlated_columns(t: Table, protected: str, threshold=DEFAULT_ASSOC_THRESHOLD,
                       skip=()) -> list[AssociationScore]:
    """Columns whose association with ``protected`` is at least ``threshold``,
    strongest first (ties keep column order)."""
    protected = t.resolve(protected)
    if len(t) < 2:
        raise EvaluationError(
            f"table {t.name}: association needs at least 2 rows, got {len(t)}")
    bound = Fraction(Decimal(str(threshold))) ** 2
    hits = []
    for col in t.columns:
        if col == protected or col in skip:
            continue
        score, sq = association(t, protected, col)
        if sq >= bound:
            hits.append(score)
    hits.sort(key=lambda s: -s.value)
    return hits


def all_associations(t: Table, protected: str, skip=()) -> list[AssociationScore]:
    protected = t.resolve(protected)
    if len(t) < 2:
        raise EvaluationError(
            f"table {t.name}: association needs at least 2 rows, got {len(t)}")
    return [association(t, protected, c)[0]
            for c in t.columns if c != protected and c not in skip]

