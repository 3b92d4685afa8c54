"""Provenance records for Ethical View runs, stored as JSON Lines."""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProvenanceRecord:
    id: str
    timestamp: str
    status: str                      # "ok" | "failed"
    ethical_context: dict
    input_hash: str | None
    view: str | None
    analysis: dict
    transform: dict                  # kind, rule, params
    row_counts: dict                 # {"before": {label: n}, "after": {label: n}}
    columns_removed: list
    output: dict | None              # path + sha256 of the emitted CSV
    notes: list = field(default_factory=list)
    error: str | None = None
    explanation: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ProvenanceRecord:
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


def utc_now() -> str:
    now = datetime.datetime.now(datetime.timezone.utc)
    return now.isoformat(timespec="milliseconds").replace("+00:00", "Z")


def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


class RunRecorder:
    """Collects pipeline events and turns them into one record.

    Every method swallows its own failures: recording must never break the
    pipeline it observes.
    """

    def __init__(self):
        self._data: dict[str, Any] = {
            "ethical_context": {}, "input_hash": None, "view": None,
            "analysis": {"disparities": [], "associations": []},
            "transform": {}, "row_counts": {"before": {}, "after": {}},
            "columns_removed": [], "output": None, "notes": [], "error": None,
        }

    def set(self, key: str, value: Any) -> None:
        try:
            self._data[key] = json.loads(_canonical(value))
        except Exception:  # noqa: BLE001
            log.exception("provenance: could not record %s", key)

    def add(self, key: str, value: Any) -> None:
        try:
            self._data["analysis"].setdefault(key, []).append(json.loads(_canonical(value)))
        except Exception:  # noqa: BLE001
            log.exception("provenance: could not record %s", key)

    def note(self, text: str) -> None:
        self._data["notes"].append(str(text))

    def before(self, label: str, n: int) -> None:
        self._data["row_counts"]["before"][label] = n

    def after(self, label: str, n: int) -> None:
        self._data["row_counts"]["after"][label] = n

    def fail(self, error: BaseException | str) -> None:
        self._data["error"] = str(error)

    @property
    def failed(self) -> bool:
        return self._data["error"] is not None

    def run_digest(self) -> str:
        basis = {k: self._data[k] for k in ("ethical_context", "input_hash", "transform")}
        return hashlib.sha256(_canonical(basis).encode("utf-8")).hexdigest()

    def record(self, record_id: str = "", timestamp: str | None = None) -> ProvenanceRecord:
        data = dict(self._data)
        data["status"] = "failed" if self.failed else "ok"
        rec = ProvenanceRecord(id=record_id, timestamp=timestamp or utc_now(), **data)
        try:
            text = render(rec)
        except Exception as exc:  # noqa: BLE001
            text = [f"Explanation unavailable: {exc}."]
        return ProvenanceRecord(**{**rec.to_dict(), "explanation": text})


class RunLog:
    """Append-only JSON-Lines log; ids are ``<sequence>-<run digest prefix>``,
    so they sort in append order."""

    def __init__(self, path):
        self.path = os.fspath(path)

    def records(self) -> list[ProvenanceRecord]:
        if not os.path.exists(self.path):
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    out.append(ProvenanceRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, TypeError) as exc:
                    raise ValidationError(f"{self.path}: line {lineno}: bad record: {exc}") from None
        return out

    def next_sequence(self) -> int:
        seqs = [int(r.id.split("-", 1)[0]) for r in self.records()
                if r.id.split("-", 1)[0].isdigit()]
        return max(seqs, default=0) + 1

    def append(self, recorder: RunRecorder) -> ProvenanceRecord:
        record_id = f"{self.next_sequence():06d}-{recorder.run_digest()[:12]}"
        rec = recorder.record(record_id)
        parent = os.path.dirname(self.path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
        return rec

    def get(self, record_id: str) -> ProvenanceRecord:
        hits = [r for r in self.records() if r.id == record_id or r.id.startswith(record_id)]
        if len(hits) != 1:
            what = "no record" if not hits else "ambiguous record id"
            raise ValidationError(f"{what} {record_id!r} in {self.path}")
        return hits[0]


def _fmt_params(params: dict) -> str:
    parts = []
    for k in sorted(params):
        v = params[k]
        if isinstance(v, (dict, list)):
            v = json.dumps(v, sort_keys=True)
        parts.append(f"{k}={v}")
    return ", ".join(parts)


def render(r: ProvenanceRecord) -> list[str]:
    ec = r.ethical_context or {}
    out = []
    if ec:
        out.append(f"Context: {ec.get('context') or '(empty)'}.")
        attrs = ", ".join(ec.get("affected_attributes", []))
        out.append(f"Ethical facet {ec.get('facet')} applies to: {attrs}.")
    if r.view:
        out.append(f"Contextual view {r.view!r} read inputs with digest {r.input_hash}.")
    for d in r.analysis.get("disparities", []):
        lo, hi = d.get("min_group"), d.get("max_group")
        where = f"In {d['table']}, " if d.get("table") else ""
        if lo is None:
            out.append(f"{where}{d['attribute']} has no rows to compare.")
            continue
        verdict = ("below" if d["flagged"] else "not below")
        out.append(
            f"{where}{d['attribute']} ranges from {lo['value']} ({lo['count']}) to "
            f"{hi['value']} ({hi['count']}): ratio {d['ratio']} is {verdict} the "
            f"threshold {d['threshold']}"
            + (", so a disparity is flagged." if d["flagged"] else "."))
    for a in r.analysis.get("associations", []):
        out.append(f"{a['column_b']} is associated with {a['column_a']} "
                   f"({a['metric']} = {a['value']}).")
    t = r.transform or {}
    if t.get("rule"):
        out.append(f"Rule fired: {t['rule']}.")
    if t.get("kind"):
        params = t.get("params") or {}
        out.append(f"Transform {t['kind']} applied with {_fmt_params(params) or 'no parameters'}.")
    if r.columns_removed:
        out.append(f"Columns removed: {', '.join(r.columns_removed)}.")
    before = r.row_counts.get("before", {})
    after = r.row_counts.get("after", {})
    if before or after:
        b = ", ".join(f"{k}={v}" for k, v in before.items()) or "none"
        a = ", ".join(f"{k}={v}" for k, v in after.items()) or "none"
        out.append(f"Rows before: {b}; after: {a}.")
    for n in r.notes:
        out.append(f"Note: {n}.")
    if r.error:
        out.append(f"The run failed: {r.error}.")
    return out


def explain(r: ProvenanceRecord) -> str:
    """Deterministic English rendering of a record."""
    head = f"Record {r.id} ({r.status})." if r.id else f"Record ({r.status})."
    return "\n".join([head, *render(r)]) + "\n"
