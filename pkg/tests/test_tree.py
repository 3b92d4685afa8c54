import pytest
from hypothesis import given, settings, strategies as st

from ethica.errors import ParseError, ValidationError
from ethica.tree import (
    ATTRIBUTE, CONCEPT, DIMENSION, ROOT, Context, EthicalRequirement, Node, combine,
    facet_leaves, load_tree, parse_context, parse_requirement, parse_tree, serialize_tree,
)


def test_minimal_tree():
    t = parse_tree("root work\n  dim action\n    val promotion\n    val recruitment")
    assert t.kind == ROOT and t.name == "work"
    assert [d.name for d in t.dimensions] == ["action"]
    assert [c.name for c in t.children[0].concepts] == ["promotion", "recruitment"]
    assert t.children[0].children[1].id == "work/action/recruitment"


def test_ert_facets(desk):
    ert = load_tree(desk / "ert.tree")
    leaves = {"/".join(p) for p in facet_leaves(ert)}
    assert leaves == {"privacy", "transparency", "diversity",
                      "fairness/equity", "fairness/equality"}


def test_concept_under_root_rejected():
    with pytest.raises(ValidationError, match="concept directly under root"):
        parse_tree("root r\n  val orphan")


@pytest.mark.parametrize("text, err, match", [
    ("root r\n  dim d\n    attr a\n      val x", ValidationError, "leaves"),
    ("root r\n  dim d\n    val x\n    val x", ValidationError, "duplicate"),
    ("root r\n  dim d\n    val x\n    attr a", ValidationError, "not both"),
    ("root r\n  dim d", ValidationError, "no values"),
    ("root r\n  dim d\n    dim e\n      val x", ValidationError, "dimension directly under"),
    ("root r\n  dim d\n    val x\n      val y", ValidationError, "concept directly under"),
    ("root r\nroot s", ValidationError, "exactly one root"),
    ("root r\n   dim d", ParseError, "multiple of 2"),
    ("root r\n      dim d", ParseError, "skips a level"),
    ("root r\n  node d", ParseError, "unknown keyword"),
    ("  root r", ParseError, "root must not be indented"),
    ("dim d", ParseError, "first node"),
    ("# only a comment\n", ParseError, "empty tree"),
    ("root r\n  dim 9lives\n    val x", ParseError, "invalid node name"),
])
def test_tree_errors(text, err, match):
    with pytest.raises(err, match=match):
        parse_tree(text)


def test_syntax_error_carries_line_number():
    with pytest.raises(ParseError) as info:
        parse_tree("root r\n  dim d\n    val x\n     val y")
    assert info.value.line == 4


def test_comments_blank_lines_and_case():
    t = parse_tree("# header\nROOT Work\n\n  DIM Action  \n    # note\n    Val Promotion\n")
    assert t.name == "work"
    assert t.child("ACTION").child("promotion").kind == CONCEPT


def test_roundtrip_desk_trees(desk):
    for name in ("cdt.tree", "ert.tree"):
        t = load_tree(desk / name)
        assert parse_tree(serialize_tree(t)) == t


# -- random well-formed trees ------------------------------------------------

names = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True)


def _unique(children):
    seen, out = set(), []
    for c in children:
        if c.name not in seen:
            seen.add(c.name)
            out.append(c)
    return tuple(out)


@st.composite
def dimensions(draw, depth=0):
    name = draw(names)
    if draw(st.booleans()) and depth > 0:
        return Node("", DIMENSION, name, (Node("", ATTRIBUTE, draw(names)),))
    concepts = []
    for _ in range(draw(st.integers(1, 3))):
        children = []
        if depth < 2:
            for _ in range(draw(st.integers(0, 2))):
                children.append(draw(dimensions(depth + 1)))
        for _ in range(draw(st.integers(0, 1))):
            children.append(Node("", ATTRIBUTE, draw(names)))
        concepts.append(Node("", CONCEPT, draw(names), _unique(children)))
    return Node("", DIMENSION, name, _unique(concepts))


@st.composite
def trees(draw):
    dims = [draw(dimensions()) for _ in range(draw(st.integers(1, 4)))]
    return Node("", ROOT, draw(names), _unique(dims))


@settings(max_examples=60, deadline=None)
@given(trees())
def test_serialize_parse_roundtrip(tree):
    parsed = parse_tree(serialize_tree(tree))
    assert serialize_tree(parsed) == serialize_tree(tree)
    assert parse_tree(serialize_tree(parsed)) == parsed


# -- contexts ------------------------------------------------------------------

@pytest.fixture
def cdt(desk):
    return load_tree(desk / "cdt.tree")


def test_context_two_elements(cdt):
    c = parse_context("action=promotion; role=clerk", cdt)
    assert len(c) == 2
    assert c.value_of("action") == "promotion"
    assert c.value_of("role") == "clerk"
    assert str(c) == "action=promotion; role=clerk"


def test_empty_context(cdt):
    assert parse_context("", cdt) == Context()
    assert parse_context("   ", cdt) == Context()


def test_sibling_values_exclusive(cdt):
    with pytest.raises(ValidationError, match="mutually exclusive"):
        parse_context("role=clerk; role=manager", cdt)


@pytest.mark.parametrize("text, match", [
    ("colour=red", "unknown dimension"),
    ("role=astronaut", "unknown value"),
    ("institution=public", "requires attribute"),
    ("institution=public(nickname=x)", "no attribute"),
    ("sector=industry", "without its parent"),
    ("institution=public(name=x); sector=industry", "belongs to"),
    ("risk=high(level=3)", "literal value"),
    ("role", "expected '='"),
    ("role=clerk action=promotion", "expected ';'"),
])
def test_context_errors(cdt, text, match):
    with pytest.raises((ValidationError, ParseError), match=match):
        parse_context(text, cdt)


def test_attribute_bindings_and_subdimensions(cdt):
    c = parse_context('institution=public(name="Acme Corp"); risk=High', cdt)
    inst = c.element("institution")
    assert inst.value == "public" and inst.bindings() == {"name": "Acme Corp"}
    # attribute shorthand: the literal keeps its case
    assert c.element("risk").value == "High"
    assert c.element("risk").bindings() == {"level": "High"}

    c = parse_context("institution=private; institution.private.sector=services", cdt)
    assert c.element("sector").dimension_path == ("institution", "private", "sector")
    assert parse_context("institution=private; sector=services", cdt) == c


def test_partial_pattern_allows_unbound_attributes(cdt):
    c = parse_context("institution=public", cdt, require_attributes=False)
    assert c.element("institution").bindings() == {}


def test_context_string_roundtrip(cdt):
    text = 'action=promotion; institution=public(name="A; B"); role=clerk'
    c = parse_context(text, cdt)
    assert parse_context(str(c), cdt) == c


def test_contains(cdt):
    c = parse_context("action=promotion; role=clerk; institution=public(name=x)", cdt)
    assert c.contains(parse_context("action=promotion", cdt))
    assert c.contains(parse_context("institution=public", cdt, require_attributes=False))
    assert not c.contains(parse_context("action=dismissal", cdt))
    assert c.contains(Context())


@settings(max_examples=50, deadline=None)
@given(trees(), st.data())
def test_every_valid_context_element_is_a_tree_path(tree, data):
    tree = parse_tree(serialize_tree(tree))
    dims = [d for d in tree.dimensions if d.concepts]
    if not dims:
        return
    d = data.draw(st.sampled_from(dims))
    concept = data.draw(st.sampled_from(d.concepts))
    binds = ", ".join(f"{a.name}=v" for a in concept.attributes)
    text = f"{d.name}={concept.name}" + (f"({binds})" if binds else "")
    try:
        c = parse_context(text, tree)
    except ValidationError as exc:
        assert "ambiguous" in str(exc)
        return
    (el,) = c.elements
    node = tree
    for name in el.dimension_path:
        node = node.child(name)
        assert node is not None
    assert node.kind == DIMENSION and node.child(el.value).kind == CONCEPT


# -- requirements ----------------------------------------------------------------

@pytest.fixture
def ert(desk):
    return load_tree(desk / "ert.tree")


def test_requirement_paths(ert):
    assert parse_requirement("fairness/equity", ["gender"], ert).facet_path == ("fairness", "equity")
    assert parse_requirement("fairness.equality", "gender", ert).facet == "fairness/equality"
    assert parse_requirement("equity", "Gender", ert).affected_attributes == ("Gender",)
    assert parse_requirement("privacy", "race", ert).facet == "privacy"


@pytest.mark.parametrize("facet, affected, match", [
    ("fairness", ["gender"], "unknown ethical facet"),   # not a leaf
    ("kindness", ["gender"], "unknown ethical facet"),
    ("privacy", [], "requires an affected attribute"),
    ("privacy", ["shoe_size"], "not in the ERT"),
])
def test_requirement_errors(ert, facet, affected, match):
    with pytest.raises(ValidationError, match=match):
        parse_requirement(facet, affected, ert)


def test_combine_named_contexts(cdt, ert):
    base = parse_context("action=promotion; role=clerk", cdt)
    c = combine(base, parse_requirement("fairness/equity", ["gender"], ert))
    c1b = combine(base, parse_requirement("fairness/equality", ["gender"], ert))
    assert c.context == c1b.context == base
    assert c.requirement.facet == "fairness/equity"
    assert c1b.requirement.facet == "fairness/equality"
    empty = combine(Context(), parse_requirement("privacy", ["race"], ert))
    assert empty.to_dict() == {"context": "", "facet": "privacy",
                               "affected_attributes": ["race"]}
    assert isinstance(empty.requirement, EthicalRequirement)
