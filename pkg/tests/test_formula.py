import numpy as np
import pytest
from hypothesis import given, strategies as st

from smoothstl.formula import (
    Always,
    And,
    Eventually,
    NNFError,
    Not,
    Or,
    Pred,
    Predicate,
    PredicateTable,
    Until,
    flatten,
    format_formula,
    horizon,
    is_nnf,
    iter_nodes,
    node_at,
    size,
    to_nnf,
)
from smoothstl.parser import IntervalError, STLSyntaxError, UnknownPredicateError, parse
from smoothstl.semantics import robustness
from smoothstl.testing import random_formula, random_predicates

from conftest import channel


def _table():
    t = PredicateTable(q=2)
    for name in ("obs1", "tar1", "tar2", "a", "b", "c"):
        t.add(name, channel(name, 0 if name in ("obs1", "tar1", "a", "c") else 1, 2, b=0.1))
    return t


def test_parse_always_not():
    t = _table()
    f = parse("G[0,20](!obs1)", t)
    assert f == Always(0, 20, Not(Pred(t["obs1"])))


def test_parse_conjunction_of_windows():
    t = _table()
    f = parse("F[0,6] tar1 & F[6,12] tar2", t)
    assert f == And((Eventually(0, 6, Pred(t["tar1"])), Eventually(6, 12, Pred(t["tar2"]))))


def test_parse_rejects_reversed_interval():
    with pytest.raises(IntervalError):
        parse("a U[3,2] b", _table())


def test_parse_rejects_negative_interval():
    with pytest.raises(IntervalError):
        parse("F[-1,2] a", _table())


def test_parse_unknown_identifier_reports_position():
    with pytest.raises(UnknownPredicateError) as exc:
        parse("a &\n  zz", _table())
    assert (exc.value.line, exc.value.col) == (2, 3)


@pytest.mark.parametrize("text", ["a &", "(a | b", "F[0,1]", "a b", "F[0 1] a", "G[0,1.5] a", "a # b"])
def test_parse_syntax_errors(text):
    with pytest.raises(STLSyntaxError):
        parse(text, _table())


def test_parse_precedence():
    t = _table()
    a, b, c = (Pred(t[n]) for n in "abc")
    assert parse("a | b & c", t) == Or((a, And((b, c))))
    assert parse("a & b & c", t) == And((a, b, c))
    # The grammar puts U inside atoms, so a prefix operator covers the whole until.
    assert parse("!a U[0,2] b", t) == Not(Until(0, 2, a, b))
    assert parse("a U[0,1] b U[1,2] c", t) == Until(1, 2, Until(0, 1, a, b), c)
    assert parse("F[0,2] G[1,3] a", t) == Eventually(0, 2, Always(1, 3, a))


def test_operator_letters_are_identifiers_without_bracket():
    t = PredicateTable(q=1)
    for n in ("F", "G", "U"):
        t.add(n, channel(n, 0, 1))
    f = parse("F & G | U", t)
    assert f == Or((And((Pred(t["F"]), Pred(t["G"]))), Pred(t["U"])))


def test_box_macro_expands_to_four_affine_predicates():
    t = PredicateTable(q=2)
    box = t.box("Tar", [0, 1], [1.0, 2.0], [3.0, 5.0])
    assert isinstance(box, And) and len(box.args) == 4
    inside = np.array([2.0, 3.0])
    assert robustness(box, inside[None, :]) == pytest.approx(1.0)
    assert parse("Tar", t) is box


def test_table_rejects_duplicates_and_wrong_length():
    t = PredicateTable(q=2)
    t.affine("a", [1, 0])
    with pytest.raises(ValueError):
        t.affine("a", [0, 1])
    with pytest.raises(ValueError):
        t.affine("b", [1, 0, 0])


def test_noise_bounds_must_be_ordered():
    with pytest.raises(ValueError):
        Predicate.affine("p", [1.0], 0.0, (0.1, -0.1))


def test_nnf_examples():
    p, q = Pred(channel("p", 0, 1)), Pred(channel("q", 0, 1, b=1.0))
    assert to_nnf(Not(And((p, q)))) == Or((Not(p), Not(q)))
    assert to_nnf(Not(Always(0, 3, p))) == Eventually(0, 3, Not(p))
    assert to_nnf(Not(Not(p))) == p


def test_nnf_rejects_negated_until():
    p = Pred(channel("p", 0, 1))
    with pytest.raises(NNFError):
        to_nnf(Not(Until(0, 1, p, p)))


def test_horizon_examples():
    p = Pred(channel("p", 0, 1))
    assert horizon(p) == 0
    assert horizon(Always(0, 20, p)) == 20
    assert horizon(Eventually(0, 6, Always(2, 4, p))) == 10
    assert horizon(Until(1, 3, Always(0, 2, p), p)) == 5


def test_structure_queries():
    t = _table()
    f = parse("G[0,2](a | !b) & F[1,3] c", t)
    paths = [p for p, _ in iter_nodes(f)]
    assert paths == ["/", "/0", "/0/0", "/0/0/0", "/0/0/1", "/0/0/1/0", "/1", "/1/0"]
    assert size(f) == 8
    assert node_at(f, "/0/0/1") == Not(Pred(t["b"]))
    assert is_nnf(f)


def test_flatten_keeps_local_parameters():
    p = Pred(channel("p", 0, 1))
    q = Pred(channel("q", 0, 1, b=1.0))
    nested = And((p, And((q, p))))
    assert flatten(nested) == And((p, q, p))
    pinned = And((p, And((q, p), k=(2.0, 2.0))))
    assert flatten(pinned) == pinned


def test_invalid_nodes_rejected():
    p = Pred(channel("p", 0, 1))
    with pytest.raises(ValueError):
        And((p,))
    with pytest.raises(ValueError):
        Eventually(3, 1, p)
    with pytest.raises(ValueError):
        Always(0, 1, p, k=(0.0, 1.0))


def _random(seed, until=True):
    rng = np.random.default_rng(seed)
    preds = random_predicates(rng, 2, 3)
    return rng, preds, random_formula(rng, preds, depth=4, until=until)


def _negate_somewhere(rng, f):
    # Wrap random non-Until subtrees in Not so to_nnf has work to do.
    from smoothstl.formula import Until as U

    def go(g):
        if isinstance(g, U):
            return g
        if isinstance(g, (And, Or)):
            g = type(g)(tuple(go(c) for c in g.args))
        elif isinstance(g, (Eventually, Always)):
            g = type(g)(g.t1, g.t2, go(g.child))
        return Not(g) if rng.random() < 0.3 else g

    return go(f)


@given(st.integers(0, 2**32 - 1))
def test_print_parse_round_trip(seed):
    _, preds, f = _random(seed)
    t = PredicateTable(q=2)
    for p in preds:
        t.add(p.name, p)
    assert parse(format_formula(f), t) == f


@given(st.integers(0, 2**32 - 1))
def test_nnf_preserves_robustness_and_horizon(seed):
    rng, _, f = _random(seed, until=False)
    g = _negate_somewhere(rng, f)
    n = to_nnf(g)
    assert is_nnf(n)
    assert horizon(n) == horizon(g)
    s = rng.normal(size=(horizon(g) + 3, 2))
    assert robustness(n, s) == robustness(g, s)
