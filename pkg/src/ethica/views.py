"""Contextual views: labelled relational expressions bound to context patterns.

Registry files look like::

    view promotion
    when action=promotion; role=clerk
    def E1 = select(join(EMPLOYEE, PERSON), Role = "clerk")
    def E2 = select(join(EMPLOYEE, PERSON), Role = "manager")
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .relation import Database, RelExpr, Table, base_tables, evaluate, parse_expr, to_text
from .tree import Context, Node, parse_context


@dataclass(frozen=True)
class ViewBinding:
    name: str
    pattern: Context
    named_exprs: tuple[tuple[str, RelExpr], ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.named_exprs)

    def expr(self, label: str) -> RelExpr:
        for lab, e in self.named_exprs:
            if lab == label:
                return e
        raise ValidationError(f"view {self.name!r} has no expression {label!r}")


@dataclass(frozen=True)
class ContextualView:
    context: Context
    binding: str
    tables: dict[str, Table]
    source_hash: str

    def __getitem__(self, label: str) -> Table:
        try:
            return self.tables[label]
        except KeyError:
            raise ValidationError(
                f"view {self.binding!r} has no table {label!r} "
                f"(have: {', '.join(self.tables)})") from None


def parse_registry(text: str, cdt: Node, source: str | None = None) -> list[ViewBinding]:
    blocks: list[dict] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kw, _, rest = line.partition(" ")
        kw, rest = kw.lower(), rest.strip()
        if kw == "view":
            if not rest:
                raise ParseError("expected 'view <name>'", line=lineno, source=source)
            if any(b["name"] == rest for b in blocks):
                raise ValidationError(f"line {lineno}: view {rest!r} defined twice")
            blocks.append({"name": rest, "when": None, "defs": [], "line": lineno})
            continue
        if not blocks:
            raise ParseError(f"{kw!r} before any 'view' line", line=lineno, source=source)
        block = blocks[-1]
        if kw == "when":
            if block["when"] is not None:
                raise ParseError("a view has at most one 'when' line",
                                 line=lineno, source=source)
            try:
                block["when"] = parse_context(rest, cdt, require_attributes=False)
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
        elif kw == "def":
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_']*)\s*=\s*(.+)", rest)
            if not m:
                raise ParseError("expected 'def <label> = <expression>'",
                                 line=lineno, source=source)
            label = m.group(1)
            if any(lab == label for lab, _ in block["defs"]):
                raise ValidationError(
                    f"line {lineno}: label {label!r} repeated in view {block['name']!r}")
            try:
                expr = parse_expr(m.group(2))
            except ParseError as exc:
                raise ParseError(exc.message, line=lineno, source=source) from None
            block["defs"].append((label, expr))
        else:
            raise ParseError(f"unknown registry keyword {kw!r}", line=lineno, source=source)
    out = []
    for b in blocks:
        if not b["defs"]:
            raise ValidationError(f"view {b['name']!r} defines no expressions")
        out.append(ViewBinding(b["name"], b["when"] or Context(), tuple(b["defs"])))
    return out


def load_registry(path, cdt: Node) -> list[ViewBinding]:
    with open(path, encoding="utf-8") as fh:
        return parse_registry(fh.read(), cdt, source=str(path))


def match_binding(registry: list[ViewBinding], c: Context) -> ViewBinding:
    """Most specific binding whose pattern is contained in ``c``.

    Ties on pattern size go to the earlier registry entry.
    """
    if not registry:
        raise ValidationError("empty view registry")
    best = None
    for b in registry:
        if c.contains(b.pattern) and (best is None or len(b.pattern) > len(best.pattern)):
            best = b
    if best is None:
        raise ValidationError(f"no view binding matches context {str(c)!r}")
    return best


def source_hash(db: Database, tables) -> str:
    """SHA-256 over the sorted (name, content digest) pairs of base tables."""
    h = hashlib.sha256()
    for name in sorted(tables):
        h.update(name.encode("utf-8") + b"\0" + db.digest(name).encode("ascii") + b"\n")
    return h.hexdigest()


def materialize(db: Database, binding: ViewBinding, c: Context) -> ContextualView:
    tables = {}
    referenced: set[str] = set()
    for label, expr in binding.named_exprs:
        t = evaluate(db, expr)
        tables[label] = t.with_rows(t.rows, name=label)
        referenced |= base_tables(expr)
    return ContextualView(c, binding.name, tables, source_hash(db, referenced))


def describe(binding: ViewBinding) -> dict:
    return {
        "view": binding.name,
        "when": str(binding.pattern),
        "defs": {label: to_text(e) for label, e in binding.named_exprs},
    }
