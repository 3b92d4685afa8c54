from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ethica.analysis import (
    CORRELATION_RATIO, CRAMERS_V, GroupProfile, all_associations, association,
    correlated_columns, cramers_v_squared, disparity, display_ratio, group_cardinalities,
)
from ethica.errors import EvaluationError, ValidationError
from ethica.relation import Column, Schema, Table

from oracles import correlation_ratio_numpy, cramers_v_scipy


def table(cols, rows, name="T"):
    return Table(name, Schema(tuple(Column(c, t) for c, t in cols)), rows)


# -- disparity ---------------------------------------------------------------

def test_managers_ten_to_two():
    r = disparity(GroupProfile("Gender", {"m": 10, "f": 2}))
    assert r.ratio == Decimal("0.2") and r.flagged
    assert r.min_group == ("f", 2) and r.max_group == ("m", 10)
    assert r.to_dict()["ratio"] == "0.2"


def test_four_fifths_boundary():
    assert not disparity(GroupProfile("g", {"a": 8, "b": 10})).flagged
    assert disparity(GroupProfile("g", {"a": 7, "b": 10})).flagged
    assert not disparity(GroupProfile("g", {"a": 7, "b": 10}), threshold="0.7").flagged


def test_single_and_empty_groups():
    assert not disparity(GroupProfile("g", {"a": 5})).flagged
    r = disparity(GroupProfile("g", {}))
    assert r.ratio == 1 and not r.flagged and r.min_group is None


def test_bad_threshold():
    with pytest.raises(ValidationError):
        disparity(GroupProfile("g", {"a": 1}), threshold=0)
    with pytest.raises(ValidationError):
        disparity(GroupProfile("g", {"a": 1}), threshold="1.5")


def test_display_ratio():
    assert display_ratio(Decimal(1) / Decimal(3)) == "0.3333"
    assert display_ratio(Decimal(1)) == "1"


def test_group_cardinalities_counts_nulls():
    t = table([("g", "text")], [("m",), ("f",), (None,), ("m",)])
    p = group_cardinalities(t, "G")
    assert p.attribute == "g" and p.groups == {"m": 2, "f": 1, None: 1} and p.total == 4


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.text(min_size=1, max_size=3), st.integers(1, 50), min_size=2),
       st.integers(1, 50))
def test_disparity_monotone_in_min_group(groups, bump):
    """Growing the smallest group (keeping it smallest) never raises a flag."""
    lo_key = min(groups, key=groups.get)
    before = disparity(GroupProfile("g", groups))
    hi = max(groups.values())
    grown = dict(groups)
    grown[lo_key] = min(groups[lo_key] + bump, min(v for k, v in groups.items()
                                                    if k != lo_key))
    after = disparity(GroupProfile("g", grown))
    assert after.ratio >= before.ratio
    assert not (before.flagged is False and after.flagged is True)
    assert Fraction(after.ratio) <= 1 and max(grown.values()) == hi


# -- association -----------------------------------------------------------------

def test_pregnancy_example_matches_scipy():
    genders = ["f"] * 8 + ["m"] * 12
    pregnancies = [1, 2, 1, 0, 3, 1, 2, 1] + [0] * 12
    t = table([("Gender", "text"), ("PregnancyCount", "integer")],
              list(zip(genders, pregnancies)))
    score, sq = association(t, "Gender", "PregnancyCount")
    assert score.metric == CRAMERS_V
    assert score.value == pytest.approx(cramers_v_scipy(genders, pregnancies), abs=1e-9)
    assert [s.column_b for s in correlated_columns(t, "gender")] == ["PregnancyCount"]


def test_identical_and_constant_columns():
    t = table([("a", "text"), ("b", "text"), ("c", "text")],
              [("x", "x", "k"), ("y", "y", "k"), ("z", "z", "k"), ("x", "x", "k")])
    assert association(t, "a", "b")[1] == 1
    assert association(t, "a", "c")[1] == 0


def test_numeric_column_uses_correlation_ratio():
    g = ["m", "f"] * 12
    v = [Decimal(i) / 4 for i in range(24)]
    t = table([("g", "text"), ("v", "decimal")], list(zip(g, v)))
    score, _ = association(t, "g", "v")
    assert score.metric == CORRELATION_RATIO
    assert score.value == pytest.approx(correlation_ratio_numpy(g, v), abs=1e-9)


def test_threshold_is_inclusive():
    # 2x2 table with V exactly 0.5: cells (3,1),(1,3)
    rows = [("a", "p")] * 3 + [("a", "q")] + [("b", "p")] + [("b", "q")] * 3
    t = table([("g", "text"), ("c", "text")], rows)
    assert association(t, "g", "c")[1] == Fraction(1, 4)
    assert len(correlated_columns(t, "g", threshold="0.5")) == 1
    assert correlated_columns(t, "g", threshold="0.5001") == []


def test_too_few_rows():
    t = table([("g", "text"), ("c", "text")], [("a", "p")])
    with pytest.raises(EvaluationError, match="at least 2 rows"):
        correlated_columns(t, "g")
    with pytest.raises(EvaluationError):
        all_associations(t, "g")


def test_desk_clerks(desk):
    from ethica.relation import evaluate, load_database, parse_expr
    db = load_database(desk, desk / "manifest.txt")
    e1 = evaluate(db, parse_expr('select(join(EMPLOYEE, PERSON), Role = "clerk")'))
    hits = correlated_columns(e1, "Gender")
    assert [h.column_b for h in hits] == ["PregnancyCount"]
    for s in all_associations(e1, "Gender"):
        ref = (cramers_v_scipy(e1.column("Gender"), e1.column(s.column_b))
               if s.metric == CRAMERS_V else
               correlation_ratio_numpy(e1.column("Gender"), e1.column(s.column_b)))
        assert s.value == pytest.approx(ref, abs=1e-6)


cats = st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("xyzw")),
                min_size=2, max_size=40)


@settings(max_examples=150, deadline=None)
@given(cats)
def test_cramers_v_matches_scipy_and_is_symmetric(pairs):
    xs, ys = zip(*pairs)
    sq = cramers_v_squared(xs, ys)
    assert 0 <= sq <= 1
    assert sq == cramers_v_squared(ys, xs)
    assert float(sq) ** 0.5 == pytest.approx(cramers_v_scipy(xs, ys), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("abcd"), min_size=2, max_size=30))
def test_self_association_is_one(xs):
    sq = cramers_v_squared(xs, xs)
    assert sq == (1 if len(set(xs)) >= 2 else 0)
