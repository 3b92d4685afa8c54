"""Ethical transformations turning a contextual view table into an Ethical View.

Every transform is a pure ``Table -> Table`` function. Transforms whose
parameters are derived from the data (replication counts, relabeling depth)
also expose a ``plan_*`` function so callers can record those parameters.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from . import analysis
from .errors import ParseError, TransformError, ValidationError
from .relation import BOOLEAN, DECIMAL, NUMERIC, Column, Schema, Table, coerce
from .tree import EthicalContext, normalize_name

log = logging.getLogger(__name__)

SUPPRESSION = "suppression"
REPAIR_OVERSAMPLE = "repair_oversample"
REWEIGHTING = "reweighting"
MASSAGING = "massaging"
EQUALITY_RANK = "equality_rank"
DIVERSITY_SELECT = "diversity_select"
KINDS = (SUPPRESSION, REPAIR_OVERSAMPLE, REWEIGHTING, MASSAGING,
         EQUALITY_RANK, DIVERSITY_SELECT)

WEIGHT_COLUMN = "__weight"
WILDCARD = "*"


# -- rule table -------------------------------------------------------------

@dataclass(frozen=True)
class TransformRule:
    action: str | None
    facet: tuple[str, ...] | None
    attr: str | None
    kind: str

    def score(self, action: str | None, facet: tuple[str, ...],
              attrs: Sequence[str]) -> int | None:
        """Specificity of a match (higher wins), or None when it doesn't apply.

        Exact field = 2, facet prefix = 1, wildcard = 0.
        """
        total = 0
        if self.action is not None:
            if self.action != action:
                return None
            total += 2
        if self.facet is not None:
            if self.facet == facet:
                total += 2
            elif facet[:len(self.facet)] == self.facet:
                total += 1
            else:
                return None
        if self.attr is not None:
            if self.attr not in attrs:
                return None
            total += 2
        return total

    def __str__(self) -> str:
        facet = "/".join(self.facet) if self.facet else WILDCARD
        return (f"rule action={self.action or WILDCARD} facet={facet} "
                f"attr={self.attr or WILDCARD} -> {self.kind}")


_RULE = re.compile(
    r"rule\s+action=(\S+)\s+facet=(\S+)\s+attr=(\S+)\s*->\s*(\S+)", re.IGNORECASE)


def parse_rules(text: str, source: str | None = None) -> list[TransformRule]:
    rules: list[TransformRule] = []
    seen: dict[tuple, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _RULE.fullmatch(line)
        if not m:
            raise ParseError(
                "expected 'rule action=<v|*> facet=<path|*> attr=<name|*> -> <kind>'",
                line=lineno, source=source)
        action, facet, attr, kind = m.groups()
        kind = kind.lower()
        if kind not in KINDS:
            raise ParseError(f"unknown transform kind {kind!r} "
                             f"(expected one of {', '.join(KINDS)})",
                             line=lineno, source=source)
        rule = TransformRule(
            None if action == WILDCARD else normalize_name(action),
            None if facet == WILDCARD else tuple(
                normalize_name(p) for p in re.split(r"[/.]", facet) if p),
            None if attr == WILDCARD else normalize_name(attr),
            kind,
        )
        triple = (rule.action, rule.facet, rule.attr)
        if triple in seen:
            raise ValidationError(
                f"line {lineno}: duplicate rule for {triple} (first at line {seen[triple]})")
        seen[triple] = lineno
        rules.append(rule)
    return rules


# Ethical contexts worked through for the personnel scenario, followed by
# facet-level fallbacks.
DEFAULT_RULES_TEXT = """\
rule action=promotion facet=fairness/equity attr=gender -> repair_oversample
rule action=promotion facet=fairness/equality attr=gender -> suppression
rule action=promotion facet=fairness/equity attr=famsituation -> reweighting
rule action=dismissal facet=diversity attr=gender -> diversity_select
rule action=recruitment facet=privacy attr=race -> suppression
rule action=* facet=fairness/equity attr=* -> repair_oversample
rule action=* facet=fairness/equality attr=* -> equality_rank
rule action=* facet=diversity attr=* -> diversity_select
rule action=* facet=privacy attr=* -> suppression
"""


def default_rules() -> list[TransformRule]:
    return parse_rules(DEFAULT_RULES_TEXT, source="<default rules>")


def load_rules(path) -> list[TransformRule]:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read(), source=str(path))


def matching_rule(ec: EthicalContext, rules: Sequence[TransformRule],
                  action_dimension: str = "action") -> TransformRule:
    if not rules:
        raise ValidationError("empty rule table")
    action = ec.context.value_of(action_dimension)
    attrs = [normalize_name(a) for a in ec.requirement.affected_attributes]
    best, best_score = None, -1
    for rule in rules:
        s = rule.score(action, ec.requirement.facet_path, attrs)
        if s is not None and s > best_score:
            best, best_score = rule, s
    if best is None:
        raise ValidationError(
            f"no transform rule matches action={action or WILDCARD} "
            f"facet={ec.requirement.facet} attr={','.join(attrs)}")
    return best


def select_transform(ec: EthicalContext, rules: Sequence[TransformRule],
                     action_dimension: str = "action") -> str:
    """Kind of the most specific matching rule; earlier rules win ties."""
    return matching_rule(ec, rules, action_dimension).kind


# -- helpers ----------------------------------------------------------------

def typed_value(t: Table, column: str, raw: Any) -> Any:
    """Coerce a parameter (often a string from the CLI) to ``column``'s type."""
    if not isinstance(raw, str):
        return raw
    try:
        return coerce(raw, t.schema.type_of(column))
    except ValueError as exc:
        raise TransformError(f"{column}: {exc}") from None


def _numeric(t: Table, column: str) -> str:
    column = t.resolve(column)
    if t.schema.type_of(column) not in NUMERIC:
        raise TransformError(
            f"score column {column!r} must be numeric, is {t.schema.type_of(column)}")
    return column


def _decimal(value, what: str) -> Decimal:
    try:
        d = Decimal(str(value))
    except InvalidOperation:
        raise TransformError(f"{what}: not a number: {value!r}") from None
    if not d.is_finite():
        raise TransformError(f"{what}: not a finite number: {value!r}")
    return d


# -- suppression ------------------------------------------------------------

def suppression_plan(t: Table, protected, assoc_threshold=analysis.DEFAULT_ASSOC_THRESHOLD
                     ) -> tuple[list[str], list[analysis.AssociationScore]]:
    """Columns to drop (protected ones first) and the scores that condemned
    the others."""
    if isinstance(protected, str):
        protected = [protected]
    protected = [t.resolve(p) for p in protected]
    removed = list(protected)
    # reserved columns (weights, row ids) are never scored
    skip = protected + [c for c in t.columns if c.startswith("__")]
    scores: list[analysis.AssociationScore] = []
    for p in protected:
        for s in analysis.correlated_columns(t, p, assoc_threshold, skip=skip):
            scores.append(s)
            if s.column_b not in removed:
                removed.append(s.column_b)
    return removed, scores


def drop_columns(t: Table, columns: Iterable[str]) -> Table:
    gone = set(columns)
    keep = [i for i, c in enumerate(t.columns) if c not in gone]
    if not keep:
        raise TransformError(f"suppression would remove every column of {t.name}")
    cols = tuple(t.schema.columns[i] for i in keep)
    return Table(t.name, Schema(cols), tuple(tuple(r[i] for i in keep) for r in t.rows))


def suppress(t: Table, protected, assoc_threshold=analysis.DEFAULT_ASSOC_THRESHOLD) -> Table:
    """Drop the protected column(s) and every column associated with them at
    or above ``assoc_threshold``. Rows are untouched."""
    removed, _ = suppression_plan(t, protected, assoc_threshold)
    return drop_columns(t, removed)


# -- database repair --------------------------------------------------------

def oversample_copies(bmc: int, bfc: int) -> int:
    """Extra copies of the disadvantaged qualifying rows: ceil((BMC-BFC)/BFC),
    clamped at 0."""
    if bfc <= 0:
        raise TransformError("no qualifying disadvantaged rows: cannot rebalance by replication")
    if bmc <= bfc:
        return 0
    return -(-(bmc - bfc) // bfc)


def manager_ratio_copies(mm: int, fm: int, proportional: bool = False) -> int:
    """Copies derived from the reference (manager) group counts.

    The literal rule is ceil((MM-FM)/(MM+FM)), clamped at 0, which is 0 or 1.
    ``proportional=True`` uses ceil((MM-FM)/FM) instead, the same shape as
    :func:`oversample_copies` applied to the reference counts.
    """
    if mm + fm <= 0:
        raise TransformError("reference table has no rows in either group")
    if mm <= fm:
        return 0
    if proportional:
        if fm == 0:
            raise TransformError(
                "proportional manager ratio undefined: no disadvantaged reference rows")
        return -(-(mm - fm) // fm)
    return -(-(mm - fm) // (mm + fm))


@dataclass(frozen=True)
class RepairPlan:
    protected: str
    disadvantaged: Any
    score: str
    pmin: Decimal
    kept: tuple[int, ...]          # row indices with score > pmin, input order
    advantaged: tuple[int, ...]    # BMC rows
    disadvantaged_rows: tuple[int, ...]  # BFC rows
    copies: int
    formula: str

    @property
    def bmc(self) -> int:
        return len(self.advantaged)

    @property
    def bfc(self) -> int:
        return len(self.disadvantaged_rows)

    def params(self) -> dict:
        return {"protected": self.protected, "disadvantaged": _plain(self.disadvantaged),
                "score": self.score, "pmin": str(self.pmin), "bmc": self.bmc,
                "bfc": self.bfc, "p": self.copies, "formula": self.formula}


def _plain(v):
    return str(v) if isinstance(v, Decimal) else v


def _qualifying(t: Table, protected: str, disadvantaged, score: str, pmin):
    protected = t.resolve(protected)
    score = _numeric(t, score)
    pmin = _decimal(pmin, "pmin")
    value = typed_value(t, protected, disadvantaged)
    pi, si = t.schema.index(protected), t.schema.index(score)
    kept, adv, dis = [], [], []
    for i, r in enumerate(t.rows):
        if r[si] is None or not r[si] > pmin:
            continue
        kept.append(i)
        (dis if r[pi] == value else adv).append(i)
    return protected, value, score, pmin, kept, adv, dis


def plan_repair(t: Table, protected: str, disadvantaged, score: str, pmin) -> RepairPlan:
    protected, value, score, pmin, kept, adv, dis = _qualifying(
        t, protected, disadvantaged, score, pmin)
    p = oversample_copies(len(adv), len(dis))
    return RepairPlan(protected, value, score, pmin, tuple(kept), tuple(adv), tuple(dis),
                      p, "ceil((BMC-BFC)/BFC)")


def plan_manager_ratio(clerks: Table, managers: Table, protected: str, disadvantaged,
                       score: str, pmin, proportional: bool = False) -> RepairPlan:
    if len(managers) == 0:
        raise TransformError("reference (manager) table is empty")
    m_col = managers.resolve(protected)
    m_value = typed_value(managers, m_col, disadvantaged)
    fm = sum(1 for v in managers.column(m_col) if v == m_value)
    mm = len(managers) - fm
    p = manager_ratio_copies(mm, fm, proportional)
    protected, value, score, pmin, kept, adv, dis = _qualifying(
        clerks, protected, disadvantaged, score, pmin)
    if p > 0 and not dis:
        raise TransformError("no qualifying disadvantaged rows: cannot rebalance by replication")
    formula = "ceil((MM-FM)/FM)" if proportional else "ceil((MM-FM)/(MM+FM))"
    return RepairPlan(protected, value, score, pmin, tuple(kept), tuple(adv), tuple(dis),
                      p, f"{formula} with MM={mm}, FM={fm}")


def apply_repair(t: Table, plan: RepairPlan) -> Table:
    rows = [t.rows[i] for i in plan.kept]
    extra = [t.rows[i] for i in plan.disadvantaged_rows]
    for _ in range(plan.copies):
        rows.extend(extra)
    return t.with_rows(rows)


def repair_oversample(t: Table, protected: str, disadvantaged, score: str, pmin) -> Table:
    """Keep rows scoring above ``pmin`` and append ``p`` replicas of the
    qualifying disadvantaged rows, p = ceil((BMC-BFC)/BFC)."""
    return apply_repair(t, plan_repair(t, protected, disadvantaged, score, pmin))


def repair_manager_ratio(clerks: Table, managers: Table, protected: str, disadvantaged,
                         score: str, pmin, proportional: bool = False) -> Table:
    plan = plan_manager_ratio(clerks, managers, protected, disadvantaged, score, pmin,
                              proportional)
    return apply_repair(clerks, plan)


# -- reweighting ------------------------------------------------------------

def reweight(t: Table, value_weights: dict) -> Table:
    """Append ``__weight``: the product of the weights of every (column, value)
    the row matches, 1 when it matches none."""
    if t.schema.has(WEIGHT_COLUMN):
        raise TransformError(f"table already has a {WEIGHT_COLUMN} column")
    resolved = []
    for (column, raw), w in value_weights.items():
        col = t.resolve(column)
        w = _decimal(w, f"weight for {column}={raw}")
        if w <= 0:
            raise TransformError(f"weight for {column}={raw} must be positive, got {w}")
        resolved.append((t.schema.index(col), typed_value(t, col, raw), w))
    rows = []
    for r in t.rows:
        weight = Decimal(1)
        for i, value, w in resolved:
            if r[i] is not None and r[i] == value:
                weight *= w
        rows.append(r + (weight,))
    schema = Schema(t.schema.columns + (Column(WEIGHT_COLUMN, DECIMAL),))
    return Table(t.name, schema, tuple(rows))


def rounded_weight(w) -> int:
    return int(Decimal(str(w)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def materialize_weights(t: Table, notes: list | None = None) -> Table:
    """Replace the weight column by replication: round(weight) copies, half-up.

    Rows rounding to zero copies are dropped; a note is appended to ``notes``
    (and logged) when that happens.
    """
    if not t.schema.has(WEIGHT_COLUMN):
        raise TransformError(f"table has no {WEIGHT_COLUMN} column")
    wi = t.schema.index(WEIGHT_COLUMN)
    keep = [i for i in range(len(t.columns)) if i != wi]
    rows, dropped = [], 0
    for r in t.rows:
        n = rounded_weight(r[wi])
        if n == 0:
            dropped += 1
        rows.extend([tuple(r[i] for i in keep)] * n)
    if dropped:
        msg = f"{dropped} row(s) with weight rounding to 0 were dropped"
        log.warning(msg)
        if notes is not None:
            notes.append(msg)
    cols = tuple(t.schema.columns[i] for i in keep)
    return Table(t.name, Schema(cols), tuple(rows))


def parse_weights(spec) -> dict:
    """``{"FamSituation=widowed": 2}`` or ``"FamSituation=widowed:2,..."`` to
    ``{(column, value): Decimal}``."""
    if isinstance(spec, str):
        items = []
        for part in spec.split(","):
            if not part.strip():
                continue
            key, sep, w = part.rpartition(":")
            if not sep:
                raise ValidationError(f"weight {part!r}: expected column=value:weight")
            items.append((key, w))
    else:
        items = list(spec.items())
    out = {}
    for key, w in items:
        col, sep, value = str(key).partition("=")
        if not sep or not col.strip():
            raise ValidationError(f"weight key {key!r}: expected column=value")
        out[(col.strip(), value.strip())] = _decimal(w, f"weight for {key}")
    return out


# -- massaging --------------------------------------------------------------

Ranker = Callable[[Table], list]


def score_ranker(column: str) -> Ranker:
    """Rank rows by a numeric column (higher = more likely positive)."""
    def rank(t: Table) -> list:
        return t.column(_numeric(t, column))
    return rank


def naive_bayes_ranker(class_col: str, exclude: Iterable[str] = ()) -> Ranker:
    """Rank rows by a categorical naive-Bayes estimate of P(class=True | row),
    fitted on the table itself with Laplace smoothing. Excluded columns (the
    protected attribute, typically) are not used as features."""
    excluded = {class_col, *exclude}

    def rank(t: Table) -> list:
        ci = t.schema.index(t.resolve(class_col))
        skip = {t.resolve(c) for c in excluded}
        feats = [i for i, c in enumerate(t.columns) if c not in skip]
        labels = [r[ci] for r in t.rows]
        n_pos = sum(1 for y in labels if y is True)
        n_neg = len(labels) - n_pos
        counts = {True: {}, False: {}}
        levels = {}
        for r, y in zip(t.rows, labels):
            y = y is True
            for i in feats:
                counts[y][(i, r[i])] = counts[y].get((i, r[i]), 0) + 1
                levels.setdefault(i, set()).add(r[i])
        out = []
        for r in t.rows:
            lp = math.log((n_pos + 1) / (len(labels) + 2))
            ln = math.log((n_neg + 1) / (len(labels) + 2))
            for i in feats:
                k = len(levels[i])
                lp += math.log((counts[True].get((i, r[i]), 0) + 1) / (n_pos + k))
                ln += math.log((counts[False].get((i, r[i]), 0) + 1) / (n_neg + k))
            out.append(1 / (1 + math.exp(ln - lp)))
        return out
    return rank


@dataclass(frozen=True)
class MassagePlan:
    class_col: str
    protected: str
    disadvantaged: Any
    k: int
    promote: tuple[int, ...]   # disadvantaged negatives flipped to positive
    demote: tuple[int, ...]    # advantaged positives flipped to negative
    rates_before: tuple[Fraction, Fraction]
    rates_after: tuple[Fraction, Fraction]

    @property
    def gap_before(self) -> Fraction:
        return abs(self.rates_before[0] - self.rates_before[1])

    @property
    def gap_after(self) -> Fraction:
        return abs(self.rates_after[0] - self.rates_after[1])

    def params(self) -> dict:
        return {"class_column": self.class_col, "protected": self.protected,
                "disadvantaged": _plain(self.disadvantaged), "k": self.k,
                "labels_changed": 2 * self.k,
                "rates_before": [str(r) for r in self.rates_before],
                "rates_after": [str(r) for r in self.rates_after]}


def _rank_key(score):
    return (score is None, -score if score is not None else 0)


def plan_massage(t: Table, class_col: str, protected: str, disadvantaged,
                 score: str | None = None, ranker: Ranker | None = None) -> MassagePlan:
    class_col = t.resolve(class_col)
    if t.schema.type_of(class_col) != BOOLEAN:
        raise TransformError(f"class column {class_col!r} must be boolean")
    protected = t.resolve(protected)
    value = typed_value(t, protected, disadvantaged)
    if ranker is None:
        if score is None:
            raise TransformError("massaging needs a score column or a ranker")
        ranker = score_ranker(score)
    scores = ranker(t)
    ci, pi = t.schema.index(class_col), t.schema.index(protected)
    dis = [i for i, r in enumerate(t.rows) if r[pi] == value]
    adv = [i for i, r in enumerate(t.rows) if r[pi] != value]
    if not dis or not adv:
        raise TransformError("massaging needs both groups to be non-empty")
    if any(t.rows[i][ci] is None for i in range(len(t))):
        raise TransformError(f"class column {class_col!r} has null labels")

    dp = sum(1 for i in dis if t.rows[i][ci])
    ap = sum(1 for i in adv if t.rows[i][ci])
    # promotion candidates: best-ranked first; demotion candidates: worst first.
    # sorted() is stable, so equal scores keep input order.
    promote = sorted((i for i in dis if not t.rows[i][ci]), key=lambda i: _rank_key(scores[i]))
    demote = sorted((i for i in adv if t.rows[i][ci]),
                    key=lambda i: (scores[i] is not None,
                                   scores[i] if scores[i] is not None else 0))
    nd, na = len(dis), len(adv)

    def gap(k):
        return abs(Fraction(dp + k, nd) - Fraction(ap - k, na))

    best_k = min(range(min(len(promote), len(demote)) + 1), key=lambda k: (gap(k), k))
    return MassagePlan(class_col, protected, value, best_k,
                       tuple(promote[:best_k]), tuple(demote[:best_k]),
                       (Fraction(dp, nd), Fraction(ap, na)),
                       (Fraction(dp + best_k, nd), Fraction(ap - best_k, na)))


def apply_massage(t: Table, plan: MassagePlan) -> Table:
    ci = t.schema.index(plan.class_col)
    flips = {i: True for i in plan.promote}
    flips.update({i: False for i in plan.demote})
    rows = []
    for i, r in enumerate(t.rows):
        if i in flips:
            r = r[:ci] + (flips[i],) + r[ci + 1:]
        rows.append(r)
    return t.with_rows(rows)


def massage(t: Table, class_col: str, protected: str, disadvantaged,
            score: str | None = None, ranker: Ranker | None = None) -> Table:
    """Relabel the top-k disadvantaged negatives and the bottom-k advantaged
    positives, k being the smallest depth that minimizes the positive-rate gap."""
    return apply_massage(t, plan_massage(t, class_col, protected, disadvantaged, score, ranker))


# -- ranking & selection ----------------------------------------------------

def equality_rank(t: Table, score: str) -> Table:
    """Sort by ``score`` descending; ties (and nulls, last) keep input order."""
    si = t.schema.index(_numeric(t, score))
    return t.with_rows(sorted(t.rows, key=lambda r: _rank_key(r[si])))


def top_k(t: Table, k: int) -> Table:
    if k < 0:
        raise TransformError(f"k must be non-negative, got {k}")
    return t.with_rows(t.rows[:k])


def diversity_select(t: Table, score: str, k: int, protected: str) -> Table:
    """Pick ``k`` rows best score first; among equal scores prefer the group
    that currently has the most remaining rows (recomputed after every pick),
    then input order."""
    si = t.schema.index(_numeric(t, score))
    pi = t.schema.index(t.resolve(protected))
    if k < 0:
        raise TransformError(f"k must be non-negative, got {k}")
    if k > len(t):
        raise TransformError(f"k={k} exceeds the {len(t)} available rows")
    order = sorted(range(len(t)), key=lambda i: _rank_key(t.rows[i][si]))
    remaining: dict[Any, int] = {}
    for r in t.rows:
        remaining[r[pi]] = remaining.get(r[pi], 0) + 1
    left = list(order)
    picked = []
    while len(picked) < k:
        head = t.rows[left[0]][si]
        tier = [j for j, i in enumerate(left) if t.rows[i][si] == head
                or (head is None and t.rows[i][si] is None)]
        # tier positions are already in (score, input) order
        j = min(tier, key=lambda j: -remaining[t.rows[left[j]][pi]])
        choice = left.pop(j)
        picked.append(choice)
        remaining[t.rows[choice][pi]] -= 1
    return t.with_rows(t.rows[i] for i in picked)


# -- priority split ---------------------------------------------------------

@dataclass(frozen=True)
class Allocation:
    shares: tuple[tuple[str, Decimal], ...]
    counts: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        return {"shares": [[f, str(p)] for f, p in self.shares],
                "counts": list(self.counts)}


def apportion(n: int, weights: dict) -> dict:
    """Largest-remainder split of ``n`` proportional to ``weights``.

    Equal remainders go to the earlier key. All-zero weights give all zeros.
    """
    total = sum(Fraction(w) for w in weights.values())
    if total == 0:
        return {key: 0 for key in weights}
    quotas = {key: Fraction(w) * n / total for key, w in weights.items()}
    counts = {key: math.floor(q) for key, q in quotas.items()}
    keys = list(weights)
    order = sorted(range(len(keys)),
                   key=lambda i: (-(quotas[keys[i]] - counts[keys[i]]), i))
    for i in order[:n - sum(counts.values())]:
        counts[keys[i]] += 1
    return counts


def priority_split(n: int, shares) -> Allocation:
    """Largest-remainder apportionment of ``n`` positions over percentage
    shares; equal remainders favour the higher-priority (earlier) share."""
    if n < 0:
        raise ValidationError(f"n must be non-negative, got {n}")
    parsed = tuple((str(f), Decimal(str(p))) for f, p in shares)
    if not parsed:
        raise ValidationError("no shares given")
    if any(p < 0 for _, p in parsed):
        raise ValidationError("share percentages must be non-negative")
    total = sum(p for _, p in parsed)
    if total != 100:
        raise ValidationError(f"share percentages sum to {total}, expected 100")
    counts = apportion(n, {i: p for i, (_, p) in enumerate(parsed)})
    return Allocation(parsed, tuple(counts.values()))


def parse_shares(spec) -> list[tuple[str, Decimal]]:
    """``"fairness/equity=60,diversity=40"`` or a mapping/list of pairs."""
    if isinstance(spec, str):
        pairs = []
        for part in spec.split(","):
            if not part.strip():
                continue
            facet, sep, pct = part.rpartition("=")
            if not sep:
                raise ValidationError(f"share {part!r}: expected facet=percentage")
            pairs.append((facet.strip(), pct.strip().rstrip("%")))
    elif isinstance(spec, dict):
        pairs = list(spec.items())
    else:
        pairs = [tuple(p) for p in spec]
    return [(f, _decimal(p, f"share for {f}")) for f, p in pairs]
