"""Context Dimension Trees (CDT), Ethical Requirements Trees (ERT) and contexts.

Trees are written in a small indentation-based format, one node per line::

    # comments start with '#'
    root work
      dim action
        val promotion
        val recruitment
      dim institution
        val private
          attr name

Each level is indented by two spaces. ``dim`` nodes are dimensions, ``val``
nodes are concepts (the values a dimension can take) and ``attr`` nodes are
attribute leaves.

A context is a ``;``-separated list of ``dimension=value`` elements, for
example ``action=promotion; role=clerk; institution=private(name=Acme)``.
Nested dimensions may be addressed with dotted paths (``fairness.kind``) when
the bare name is ambiguous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .errors import ParseError, ValidationError

ROOT = "root"
DIMENSION = "dimension"
CONCEPT = "concept"
ATTRIBUTE = "attribute"

_KEYWORDS = {"root": ROOT, "dim": DIMENSION, "val": CONCEPT, "attr": ATTRIBUTE}
_DSL_KEYWORD = {kind: kw for kw, kind in _KEYWORDS.items()}
_NAME = re.compile(r"[a-z][a-z0-9_]*\Z")
INDENT = 2

FACET_DIMENSIONS = ("ethical_facets", "ethical_facet", "facets", "facet")
AFFECTED_DIMENSIONS = ("affected_attributes", "affected_attribute")


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    name: str
    children: tuple[Node, ...] = ()

    def child(self, name: str) -> Node | None:
        name = name.lower()
        for c in self.children:
            if c.name == name:
                return c
        return None

    def walk(self) -> Iterator[Node]:
        yield self
        for c in self.children:
            yield from c.walk()

    @property
    def concepts(self) -> tuple[Node, ...]:
        return tuple(c for c in self.children if c.kind == CONCEPT)

    @property
    def dimensions(self) -> tuple[Node, ...]:
        return tuple(c for c in self.children if c.kind == DIMENSION)

    @property
    def attributes(self) -> tuple[Node, ...]:
        return tuple(c for c in self.children if c.kind == ATTRIBUTE)


def normalize_name(name: str) -> str:
    return name.strip().lower()


def _check_name(name: str, line: int | None = None) -> str:
    norm = normalize_name(name)
    if not _NAME.match(norm):
        raise ParseError(f"invalid node name {name!r}", line=line)
    return norm


# -- tree DSL ---------------------------------------------------------------

def parse_tree(text: str, source: str | None = None) -> Node:
    """Parse the tree DSL and return the validated root node."""
    # Mutable skeleton: [kind, name, children, line]
    stack: list[tuple[int, list]] = []
    root: list | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "\t" in raw[: len(raw) - len(raw.lstrip())]:
            raise ParseError("tabs are not allowed in indentation",
                             line=lineno, source=source)
        indent = len(raw) - len(raw.lstrip(" "))
        if indent % INDENT:
            raise ParseError(f"indentation must be a multiple of {INDENT} spaces",
                             line=lineno, source=source)
        depth = indent // INDENT
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<keyword> <name>', got {stripped!r}",
                             line=lineno, source=source)
        keyword, name = parts
        kind = _KEYWORDS.get(keyword.lower())
        if kind is None:
            raise ParseError(f"unknown keyword {keyword!r} "
                             f"(expected one of {', '.join(_KEYWORDS)})",
                             line=lineno, source=source)
        try:
            name = _check_name(name, lineno)
        except ParseError as exc:
            raise ParseError(exc.message, line=lineno, source=source) from None
        node = [kind, name, [], lineno]

        if kind == ROOT:
            if root is not None:
                raise ValidationError(f"line {lineno}: a tree has exactly one root")
            if depth != 0:
                raise ParseError("root must not be indented", line=lineno, source=source)
            root = node
            stack = [(0, node)]
            continue
        if root is None:
            raise ParseError("the first node must be 'root <name>'",
                             line=lineno, source=source)
        if depth == 0:
            raise ValidationError(f"line {lineno}: a tree has exactly one root")
        while stack and stack[-1][0] >= depth:
            stack.pop()
        parent_depth, parent = stack[-1]
        if depth != parent_depth + 1:
            raise ParseError("indentation skips a level", line=lineno, source=source)
        parent[2].append(node)
        stack.append((depth, node))

    if root is None:
        raise ParseError("empty tree: missing 'root <name>' line", source=source)
    tree = _freeze(root, "")
    validate_tree(tree)
    return tree


def _freeze(skel: list, prefix: str) -> Node:
    kind, name, children, _ = skel
    node_id = f"{prefix}/{name}" if prefix else name
    return Node(node_id, kind, name, tuple(_freeze(c, node_id) for c in children))


def validate_tree(root: Node) -> None:
    """Raise ValidationError naming the first violated node-taxonomy rule."""
    if root.kind != ROOT:
        raise ValidationError(f"{root.id}: the top node must be a root")
    for node in root.walk():
        seen = set()
        for c in node.children:
            if c.name in seen:
                raise ValidationError(f"{node.id}: duplicate child name {c.name!r}")
            seen.add(c.name)
            if c.kind == ROOT:
                raise ValidationError(f"{c.id}: a tree has exactly one root")
        kinds = [c.kind for c in node.children]
        if node.kind == ROOT:
            bad = [c for c in node.children if c.kind != DIMENSION]
            if bad:
                raise ValidationError(
                    f"{bad[0].id}: {bad[0].kind} directly under root "
                    "(children of the root must be dimensions)")
        elif node.kind == DIMENSION:
            if not kinds:
                raise ValidationError(f"{node.id}: dimension has no values")
            if ATTRIBUTE in kinds and kinds != [ATTRIBUTE]:
                raise ValidationError(
                    f"{node.id}: a dimension takes either concept values or a "
                    "single attribute shorthand, not both")
            if DIMENSION in kinds:
                raise ValidationError(
                    f"{node.id}: dimension directly under dimension "
                    "(subdimensions hang from concept nodes)")
        elif node.kind == CONCEPT:
            if CONCEPT in kinds:
                raise ValidationError(
                    f"{node.id}: concept directly under concept")
        elif node.kind == ATTRIBUTE and node.children:
            raise ValidationError(f"{node.id}: attribute nodes must be leaves")


def serialize_tree(root: Node) -> str:
    lines = []

    def emit(node: Node, depth: int) -> None:
        lines.append(" " * (INDENT * depth) + f"{_DSL_KEYWORD[node.kind]} {node.name}")
        for c in node.children:
            emit(c, depth + 1)

    emit(root, 0)
    return "\n".join(lines) + "\n"


def load_tree(path) -> Node:
    with open(path, encoding="utf-8") as fh:
        return parse_tree(fh.read(), source=str(path))


# -- contexts ---------------------------------------------------------------

@dataclass(frozen=True, order=True)
class ContextElement:
    dimension_path: tuple[str, ...]
    value: str
    attribute_bindings: tuple[tuple[str, str], ...] = ()

    @property
    def dimension(self) -> str:
        return self.dimension_path[-1]

    def bindings(self) -> dict[str, str]:
        return dict(self.attribute_bindings)

    def covers(self, other: ContextElement) -> bool:
        """True when ``other`` (a pattern element) is satisfied by this one."""
        return (self.dimension_path == other.dimension_path
                and self.value == other.value
                and set(other.attribute_bindings) <= set(self.attribute_bindings))

    def __str__(self) -> str:
        text = f"{'.'.join(self.dimension_path)}={_quote(self.value)}"
        if self.attribute_bindings:
            inner = ", ".join(f"{k}={_quote(v)}" for k, v in self.attribute_bindings)
            text += f"({inner})"
        return text


def _quote(literal: str) -> str:
    if re.fullmatch(r"[^\s;=(),\"]+", literal):
        return literal
    return '"' + literal.replace('"', '\\"') + '"'


@dataclass(frozen=True)
class Context:
    elements: tuple[ContextElement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(sorted(self.elements)))

    def __len__(self) -> int:
        return len(self.elements)

    def __str__(self) -> str:
        return "; ".join(str(e) for e in self.elements)

    def element(self, dimension: str) -> ContextElement | None:
        """Look up an element by dimension name or dotted path suffix."""
        wanted = tuple(normalize_name(p) for p in dimension.split("."))
        hits = [e for e in self.elements
                if e.dimension_path[-len(wanted):] == wanted]
        return hits[0] if len(hits) == 1 else None

    def value_of(self, dimension: str) -> str | None:
        e = self.element(dimension)
        return e.value if e else None

    def contains(self, pattern: Context) -> bool:
        return all(any(e.covers(p) for e in self.elements) for p in pattern.elements)


def _dimension_index(tree: Node) -> list[tuple[tuple[str, ...], Node]]:
    """All dimension nodes with their name path (root excluded)."""
    out = []

    def visit(node: Node, path: tuple[str, ...]) -> None:
        for c in node.children:
            p = path + (c.name,)
            if c.kind == DIMENSION:
                out.append((p, c))
            if c.kind in (DIMENSION, CONCEPT):
                visit(c, p)

    visit(tree, ())
    return out


class _Scanner:
    """Character scanner for context strings."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            got = self.peek() or "end of input"
            raise ParseError(f"expected {ch!r}, got {got!r}", column=self.pos)
        self.pos += 1

    def word(self, what: str) -> str:
        self.skip_ws()
        if self.peek() == '"':
            return self.quoted()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ';=(),"' \
                and not self.text[self.pos].isspace():
            self.pos += 1
        if start == self.pos:
            raise ParseError(f"expected {what}", column=start)
        return self.text[start:self.pos]

    def quoted(self) -> str:
        start = self.pos
        self.pos += 1
        out = []
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "\\" and self.pos + 1 < len(self.text):
                out.append(self.text[self.pos + 1])
                self.pos += 2
                continue
            if ch == '"':
                self.pos += 1
                return "".join(out)
            out.append(ch)
            self.pos += 1
        raise ParseError("unterminated string", column=start)


def _split_context(text: str) -> list[tuple[str, str, list[tuple[str, str]], int]]:
    sc = _Scanner(text)
    items = []
    while sc.peek():
        start = sc.pos
        key = sc.word("dimension name")
        sc.expect("=")
        value = sc.word("value")
        bindings = []
        if sc.peek() == "(":
            sc.pos += 1
            while True:
                name = sc.word("attribute name")
                sc.expect("=")
                bindings.append((name, sc.word("attribute value")))
                if sc.peek() == ",":
                    sc.pos += 1
                    continue
                sc.expect(")")
                break
        items.append((key, value, bindings, start))
        if sc.peek() == ";":
            sc.pos += 1
        elif sc.peek():
            raise ParseError(f"expected ';' between elements, got {sc.peek()!r}",
                             column=sc.pos)
    return items


def resolve_dimension(tree: Node, key: str) -> tuple[tuple[str, ...], Node]:
    """Find the dimension addressed by a bare or dotted name."""
    wanted = tuple(normalize_name(p) for p in key.split("."))
    hits = [(p, n) for p, n in _dimension_index(tree) if p[-len(wanted):] == wanted]
    if not hits:
        raise ValidationError(f"unknown dimension {key!r}")
    if len(hits) > 1:
        options = ", ".join(".".join(p) for p, _ in hits)
        raise ValidationError(f"ambiguous dimension {key!r}; use one of: {options}")
    return hits[0]


def parse_context(text: str, tree: Node, *, require_attributes: bool = True) -> Context:
    """Resolve a context string against a CDT.

    ``require_attributes=False`` admits partial patterns (as used by view
    bindings) where a concept's attributes may stay unbound.
    """
    try:
        items = _split_context(text)
    except ParseError as exc:
        raise ParseError(f"context {text!r}: {exc.message}", column=exc.column) from None
    elements: dict[tuple[str, ...], ContextElement] = {}
    for key, value, bindings, _ in items:
        path, dim = resolve_dimension(tree, key)
        if path in elements:
            raise ValidationError(
                f"dimension {'.'.join(path)!r} bound twice "
                f"({elements[path].value!r} and {value!r}); sibling values are "
                "mutually exclusive")
        elements[path] = _resolve_element(path, dim, value, bindings, require_attributes)

    for path, el in elements.items():
        if len(path) < 3:
            continue
        parent_path, concept = path[:-2], path[-2]
        parent = elements.get(parent_path)
        if parent is None:
            raise ValidationError(
                f"subdimension {'.'.join(path)!r} bound without its parent "
                f"dimension {'.'.join(parent_path)!r}={concept}")
        if parent.value != concept:
            raise ValidationError(
                f"subdimension {'.'.join(path)!r} belongs to "
                f"{'.'.join(parent_path)}={concept}, but the context binds "
                f"{'.'.join(parent_path)}={parent.value}")
    return Context(tuple(elements.values()))


def _resolve_element(path, dim: Node, value: str, bindings, require_attributes: bool):
    attrs = dim.attributes
    if attrs:
        # Dimension-level attribute shorthand: the value is a literal.
        if bindings:
            raise ValidationError(
                f"dimension {'.'.join(path)!r} takes a literal value, not bindings")
        return ContextElement(path, value, ((attrs[0].name, value),))
    concept = dim.child(value)
    if concept is None or concept.kind != CONCEPT:
        options = ", ".join(c.name for c in dim.concepts)
        raise ValidationError(
            f"unknown value {value!r} for dimension {'.'.join(path)!r} "
            f"(expected one of: {options})")
    allowed = {a.name for a in concept.attributes}
    bound: dict[str, str] = {}
    for name, literal in bindings:
        norm = normalize_name(name)
        if norm not in allowed:
            raise ValidationError(
                f"{'.'.join(path)}={concept.name} has no attribute {name!r}")
        if norm in bound:
            raise ValidationError(f"attribute {norm!r} bound twice")
        bound[norm] = literal
    if require_attributes:
        missing = sorted(allowed - set(bound))
        if missing:
            raise ValidationError(
                f"{'.'.join(path)}={concept.name} requires attribute binding(s): "
                + ", ".join(missing))
    return ContextElement(path, concept.name, tuple(sorted(bound.items())))


# -- ethical requirements -----------------------------------------------------

@dataclass(frozen=True)
class EthicalRequirement:
    facet_path: tuple[str, ...]
    affected_attributes: tuple[str, ...] = field(default=())

    @property
    def facet(self) -> str:
        return "/".join(self.facet_path)


@dataclass(frozen=True)
class EthicalContext:
    context: Context
    requirement: EthicalRequirement

    def to_dict(self) -> dict:
        return {
            "context": str(self.context),
            "facet": self.requirement.facet,
            "affected_attributes": list(self.requirement.affected_attributes),
        }


def _root_dimension(tree: Node, names: tuple[str, ...]) -> Node | None:
    for n in names:
        d = tree.child(n)
        if d is not None and d.kind == DIMENSION:
            return d
    return None


def facet_dimension(ert: Node) -> Node:
    dim = _root_dimension(ert, FACET_DIMENSIONS)
    if dim is None:
        dims = ert.dimensions
        if not dims:
            raise ValidationError("ERT has no dimensions")
        dim = dims[0]
    return dim


def facet_leaves(ert: Node) -> list[tuple[str, ...]]:
    """Concept paths of every leaf facet (concepts without subdimensions)."""
    out = []

    def visit(concept: Node, path: tuple[str, ...]) -> None:
        subdims = concept.dimensions
        if not subdims:
            out.append(path)
        for d in subdims:
            for c in d.concepts:
                visit(c, path + (c.name,))

    for c in facet_dimension(ert).concepts:
        visit(c, (c.name,))
    return out


def parse_facet(text: str, ert: Node) -> tuple[str, ...]:
    """Resolve ``fairness/equity``, ``fairness.equity`` or a bare leaf name."""
    wanted = tuple(normalize_name(p) for p in re.split(r"[/.]", text) if p.strip())
    if not wanted:
        raise ValidationError("empty facet path")
    hits = [p for p in facet_leaves(ert) if p[-len(wanted):] == wanted]
    if not hits:
        leaves = ", ".join("/".join(p) for p in facet_leaves(ert))
        raise ValidationError(f"unknown ethical facet {text!r} (leaf facets: {leaves})")
    if len(hits) > 1:
        raise ValidationError(f"ambiguous ethical facet {text!r}")
    return hits[0]


def parse_requirement(facet: str, affected, ert: Node) -> EthicalRequirement:
    """Build a requirement; affected attributes are checked against the ERT's
    affected-attribute dimension when the tree enumerates one."""
    path = parse_facet(facet, ert)
    if isinstance(affected, str):
        affected = [a for a in affected.split(",")]
    attrs = tuple(a.strip() for a in affected if a.strip())
    if not attrs:
        raise ValidationError(f"facet {'/'.join(path)!r} requires an affected attribute")
    dim = _root_dimension(ert, AFFECTED_DIMENSIONS)
    if dim is not None and dim.concepts:
        known = {c.name for c in dim.concepts}
        unknown = [a for a in attrs if normalize_name(a) not in known]
        if unknown:
            raise ValidationError(
                f"affected attribute(s) not in the ERT: {', '.join(unknown)}")
    return EthicalRequirement(path, attrs)


def combine(context: Context, requirement: EthicalRequirement) -> EthicalContext:
    return EthicalContext(context, requirement)
