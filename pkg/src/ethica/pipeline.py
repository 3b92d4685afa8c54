"""End-to-end orchestration: resolve, materialize, analyze, transform, record."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any

from . import analysis, transforms
from .errors import EthicaError, TransformError, ValidationError
from .provenance import ProvenanceRecord, RunLog, RunRecorder
from .relation import Column, Database, Schema, Table, load_database
from .transforms import WEIGHT_COLUMN
from .tree import (EthicalContext, EthicalRequirement, Node, combine, load_tree,
                   parse_context, parse_requirement)
from .views import ContextualView, load_registry, match_binding, materialize

DEFAULT_SCORE = "Performance"

# Recognised keys of the parameters file / flags.
PARAM_KEYS = {
    "pmin", "disadvantaged", "score", "target", "reference", "ratio", "weights",
    "materialize", "class_column", "ranker", "k", "n", "shares", "share_attributes",
    "assoc_threshold", "disparity_threshold",
}
RATIO_MODES = ("best", "reference", "reference_proportional")


@dataclass
class RunConfig:
    cdt: str | None = None
    ert: str | None = None
    data: str | None = None
    manifest: str | None = None
    views: str | None = None
    rules: str | None = None
    context: str = ""
    facet: str | None = None
    affected: list[str] = field(default_factory=list)
    params: dict[str, Any] = field(default_factory=dict)
    out: str | None = None
    log: str | None = None

    def param(self, key: str, default=None):
        v = self.params.get(key)
        return default if v is None else v


def load_params(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: parameters must be a JSON object")
    unknown = sorted(set(data) - PARAM_KEYS)
    if unknown:
        raise ValidationError(f"{path}: unknown parameter(s): {', '.join(unknown)}")
    return data


@dataclass(frozen=True)
class EthicalView:
    table: Table
    weight_column: str | None
    transform: dict
    provenance_id: str | None = None


@dataclass
class Session:
    """Parsed inputs shared by the subcommands."""
    cdt: Node
    context: Any
    db: Database
    view: ContextualView
    ert: Node | None = None
    ec: EthicalContext | None = None


def _require(value, flag: str):
    if not value:
        raise ValidationError(f"missing required option {flag}")
    return value


def open_session(config: RunConfig, *, need_requirement: bool) -> Session:
    cdt = load_tree(_require(config.cdt, "--cdt"))
    context = parse_context(config.context or "", cdt)
    ert = ec = None
    if need_requirement:
        ert = load_tree(_require(config.ert, "--ert"))
        req = parse_requirement(_require(config.facet, "--facet"), config.affected, ert)
        ec = combine(context, req)
    registry = load_registry(_require(config.views, "--views"), cdt)
    db = load_database(_require(config.data, "--data"), _require(config.manifest, "--manifest"))
    binding = match_binding(registry, context)
    view = materialize(db, binding, context)
    return Session(cdt, context, db, view, ert, ec)


def analyze_view(view: ContextualView, affected, threshold) -> dict:
    """Group profiles and disparity reports per labelled table and attribute."""
    out = {}
    for label, t in view.tables.items():
        entries = []
        for attr in affected:
            prof = analysis.group_cardinalities(t, attr)
            rep = analysis.disparity(prof, threshold)
            entries.append({"profile": prof.to_dict(), "disparity": rep.to_dict()})
        out[label] = {"rows": len(t), "attributes": entries}
    return out


def run_analysis(config: RunConfig) -> dict:
    if not config.affected:
        raise ValidationError("missing required option --affected")
    s = open_session(config, need_requirement=False)
    threshold = config.param("disparity_threshold", analysis.DEFAULT_DISPARITY_THRESHOLD)
    return {
        "context": str(s.context),
        "view": s.view.binding,
        "source_hash": s.view.source_hash,
        "tables": analyze_view(s.view, config.affected, threshold),
    }


# -- transform --------------------------------------------------------------

def _labels(view: ContextualView, config: RunConfig) -> tuple[str, str | None]:
    labels = list(view.tables)
    target = config.param("target", labels[0])
    view[target]
    reference = config.param("reference")
    if reference is None:
        others = [lab for lab in labels if lab != target]
        reference = others[0] if others else None
    elif reference not in view.tables:
        view[reference]
    return target, reference


def _disadvantaged(config: RunConfig, view: ContextualView, target: str,
                   reference: str | None, attr: str, rec: RunRecorder):
    value = config.param("disadvantaged")
    if value is not None:
        return value
    # Fall back on the smallest group, preferring the reference table.
    for label in ([reference] if reference else []) + [target]:
        t = view[label]
        prof = analysis.group_cardinalities(t, attr)
        if len(prof.groups) >= 2:
            lo = analysis.disparity(prof, Decimal(1)).min_group
            rec.note(f"disadvantaged value {lo[0]!r} inferred as the smallest "
                     f"{prof.attribute} group of {label}")
            return lo[0]
    raise TransformError("cannot infer the disadvantaged group; pass 'disadvantaged'")


def _apply(kind: str, config: RunConfig, view: ContextualView, target: str,
           reference: str | None, ec: EthicalContext, rec: RunRecorder
           ) -> tuple[Table, str | None, dict, list[str]]:
    """Apply one transform kind to the target table.

    Returns (table, weight column, parameters, removed columns).
    """
    t = view[target]
    attrs = list(ec.requirement.affected_attributes)
    protected = attrs[0]
    score = config.param("score", DEFAULT_SCORE)
    assoc = config.param("assoc_threshold", analysis.DEFAULT_ASSOC_THRESHOLD)

    if kind == transforms.SUPPRESSION:
        removed, scores = transforms.suppression_plan(t, attrs, assoc)
        for s in scores:
            rec.add("associations", s.to_dict())
        return (transforms.drop_columns(t, removed), None,
                {"assoc_threshold": str(assoc), "protected": attrs}, removed)

    if kind == transforms.REPAIR_OVERSAMPLE:
        if config.param("pmin") is None:
            raise TransformError("repair_oversample needs the 'pmin' parameter")
        mode = config.param("ratio", "best")
        if mode not in RATIO_MODES:
            raise ValidationError(f"ratio must be one of {', '.join(RATIO_MODES)}")
        value = _disadvantaged(config, view, target, reference, protected, rec)
        if mode == "best":
            plan = transforms.plan_repair(t, protected, value, score, config.param("pmin"))
        else:
            if reference is None:
                raise TransformError(f"ratio={mode} needs a reference table")
            plan = transforms.plan_manager_ratio(
                t, view[reference], protected, value, score, config.param("pmin"),
                proportional=(mode == "reference_proportional"))
        params = {**plan.params(), "ratio": mode}
        if reference and mode != "best":
            params["reference"] = reference
        return transforms.apply_repair(t, plan), None, params, []

    if kind == transforms.REWEIGHTING:
        spec = config.param("weights")
        if not spec:
            raise TransformError("reweighting needs the 'weights' parameter")
        weights = transforms.parse_weights(spec)
        out = transforms.reweight(t, weights)
        params = {"weights": {f"{c}={v}": str(w) for (c, v), w in weights.items()},
                  "materialize": bool(config.param("materialize", False))}
        if params["materialize"]:
            notes: list[str] = []
            out = transforms.materialize_weights(out, notes)
            for n in notes:
                rec.note(n)
            return out, None, params, []
        return out, WEIGHT_COLUMN, params, []

    if kind == transforms.MASSAGING:
        class_col = config.param("class_column")
        if not class_col:
            raise TransformError("massaging needs the 'class_column' parameter")
        value = _disadvantaged(config, view, target, reference, protected, rec)
        ranker_name = config.param("ranker", "score")
        if ranker_name == "naive_bayes":
            ranker = transforms.naive_bayes_ranker(class_col, exclude=[protected])
        elif ranker_name == "score":
            ranker = transforms.score_ranker(score)
        else:
            raise ValidationError("ranker must be 'score' or 'naive_bayes'")
        plan = transforms.plan_massage(t, class_col, protected, value, ranker=ranker)
        params = {**plan.params(), "ranker": ranker_name}
        if ranker_name == "score":
            params["score"] = score
        return transforms.apply_massage(t, plan), None, params, []

    if kind == transforms.EQUALITY_RANK:
        out = transforms.equality_rank(t, score)
        k = config.param("k")
        if k is not None:
            out = transforms.top_k(out, int(k))
        return out, None, {"score": score, "k": k}, []

    if kind == transforms.DIVERSITY_SELECT:
        k = int(config.param("k", len(t)))
        out = transforms.diversity_select(t, score, k, protected)
        return out, None, {"score": score, "k": k, "protected": protected}, []

    raise ValidationError(f"unknown transform kind {kind!r}")


def _load_rules(config: RunConfig):
    return transforms.load_rules(config.rules) if config.rules else transforms.default_rules()


def _file_sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def run_transform(config: RunConfig) -> tuple[EthicalView | None, ProvenanceRecord | None]:
    """Produce the Ethical View and append its provenance record.

    Domain failures after inputs resolve are recorded, then re-raised.
    """
    rec = RunRecorder()
    log_path = config.log or os.environ.get("ETHICA_LOG")
    runlog = RunLog(log_path) if log_path else None
    try:
        s = open_session(config, need_requirement=True)
    except EthicaError as exc:
        rec.fail(exc)
        if runlog:
            runlog.append(rec)
        raise
    try:
        ev = _transform_session(config, s, rec)
    except EthicaError as exc:
        rec.fail(exc)
        if runlog:
            runlog.append(rec)
        raise
    record = runlog.append(rec) if runlog else rec.record()
    return EthicalView(ev.table, ev.weight_column, ev.transform, record.id or None), record


def _transform_session(config: RunConfig, s: Session, rec: RunRecorder) -> EthicalView:
    ec = s.ec
    rec.set("ethical_context", ec.to_dict())
    rec.set("input_hash", s.view.source_hash)
    rec.set("view", s.view.binding)
    for label, t in s.view.tables.items():
        rec.before(label, len(t))
    threshold = config.param("disparity_threshold", analysis.DEFAULT_DISPARITY_THRESHOLD)
    for label, t in s.view.tables.items():
        for attr in ec.requirement.affected_attributes:
            try:
                prof = analysis.group_cardinalities(t, attr)
            except EthicaError:
                continue
            rec.add("disparities", {"table": label,
                                    **analysis.disparity(prof, threshold).to_dict()})

    rules = _load_rules(config)
    target, reference = _labels(s.view, config)
    if config.param("shares") is not None:
        table, weight_col, info, removed = _prioritized(config, s, rules, target, reference, rec)
    else:
        rule = transforms.matching_rule(ec, rules)
        rec.set("transform", {"kind": rule.kind, "rule": str(rule), "target": target})
        table, weight_col, params, removed = _apply(rule.kind, config, s.view, target,
                                                    reference, ec, rec)
        info = {"kind": rule.kind, "rule": str(rule), "target": target, "params": params}
    rec.set("transform", info)
    rec.set("columns_removed", removed)
    table = table.with_rows(table.rows, name="EV") if weight_col is None else \
        Table("EV", table.schema, table.rows)
    rec.after("EV", len(table))
    if config.out:
        table.write_csv(config.out)
        rec.set("output", {"path": os.fspath(config.out), "sha256": _file_sha256(config.out)})
    return EthicalView(table, weight_col, info)


# -- prioritized facets -----------------------------------------------------

ROW_ID = "__row"


def _with_row_ids(t: Table) -> Table:
    schema = Schema(t.schema.columns + (Column(ROW_ID, "integer"),))
    return Table(t.name, schema, tuple(r + (i,) for i, r in enumerate(t.rows)))


def _prioritized(config: RunConfig, s: Session, rules, target: str, reference: str | None,
                 rec: RunRecorder):
    """Fill ``n`` positions facet by facet in priority order.

    Each facet's transform is applied to the remaining candidates and fills
    its apportioned share. Equity-style transforms contribute rows in the
    group proportions of their Ethical View; the affected attributes of the
    primary requirement are suppressed from the emitted table.
    """
    n = config.param("n")
    if n is None:
        raise ValidationError("prioritized selection needs the 'n' parameter")
    shares = transforms.parse_shares(config.param("shares"))
    alloc = transforms.priority_split(int(n), shares)
    share_attrs = config.param("share_attributes", {}) or {}
    score = config.param("score", DEFAULT_SCORE)
    base = s.view[target]
    pool_ids = list(range(len(base)))
    picked: list[int] = []
    steps = []
    for (facet_text, pct), count in zip(alloc.shares, alloc.counts):
        attrs = share_attrs.get(facet_text) or list(s.ec.requirement.affected_attributes)
        if isinstance(attrs, str):
            attrs = [attrs]
        req = parse_requirement(facet_text, attrs, s.ert)
        ec = combine(s.context, req)
        rule = transforms.matching_rule(ec, rules)
        pool = _with_row_ids(base).with_rows(
            [base.rows[i] + (i,) for i in pool_ids])
        sub_view = ContextualView(s.view.context, s.view.binding,
                                  {**s.view.tables, target: pool}, s.view.source_hash)
        sub_config = RunConfig(params={**config.params, "k": min(count, len(pool))})
        if count == 0:
            steps.append({"facet": req.facet, "count": 0, "kind": rule.kind,
                          "rule": str(rule), "rows": []})
            continue
        table, _, params, _ = _apply(rule.kind, sub_config, sub_view, target, reference, ec, rec)
        chosen = _choose(rule.kind, table, count, attrs[0], score)
        picked.extend(chosen)
        chosen_set = set(chosen)
        pool_ids = [i for i in pool_ids if i not in chosen_set]
        steps.append({"facet": req.facet, "count": count, "kind": rule.kind,
                      "rule": str(rule), "params": params, "rows": chosen})
        if len(chosen) < count:
            rec.note(f"{req.facet}: only {len(chosen)} of {count} positions could be filled")

    hidden = [base.resolve(a) for a in s.ec.requirement.affected_attributes]
    out = base.with_rows(base.rows[i] for i in picked)
    out = transforms.drop_columns(out, hidden)
    info = {"kind": "prioritized", "target": target, "n": int(n),
            "allocation": alloc.to_dict(), "steps": steps}
    return out, None, info, hidden


def _choose(kind: str, table: Table, count: int, attr: str, score: str) -> list[int]:
    """Distinct source rows picked from one facet's Ethical View."""
    ids = table.column(ROW_ID)
    if kind == transforms.DIVERSITY_SELECT or kind == transforms.EQUALITY_RANK:
        order = ids
    else:
        ranked = transforms.equality_rank(table, score) if table.schema.has(
            table.resolve(score)) else table
        ids = ranked.column(ROW_ID)
        if _has(ranked, attr):
            col = ranked.resolve(attr)
            # Each group contributes in proportion to its weight in the view.
            quotas = transforms.apportion(count, analysis.group_cardinalities(ranked, col).groups)
            order = _quota_order(ids, ranked.column(col), quotas)
        else:
            order = ids
    seen, out = set(), []
    for i in order:
        if i not in seen:
            seen.add(i)
            out.append(i)
        if len(out) == count:
            break
    return out


def _has(t: Table, col: str) -> bool:
    try:
        t.resolve(col)
        return True
    except EthicaError:
        return False


def _quota_order(ids: list, values: list, quotas: dict) -> list:
    """Ranked ids reordered so each group's first ``quota`` distinct rows lead."""
    taken: dict = {v: set() for v in quotas}
    first, rest = [], []
    for i, v in zip(ids, values):
        if i in taken[v]:
            continue
        if len(taken[v]) < quotas[v]:
            taken[v].add(i)
            first.append(i)
        else:
            rest.append(i)
    return first + rest
