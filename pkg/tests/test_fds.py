import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdgdyn import (
    Fds,
    IntervalProduct,
    PreconditionError,
    ResourceCapError,
    SignedDigraph,
    constant_fds,
    converges_toward,
    enumerate_degree_bounded_systems,
    fds_from_dict,
    fds_to_dict,
    random_fds,
)
from sdgdyn.sdg import SdgParseError

import helpers


def table_system(intervals, tables) -> Fds:
    return Fds(
        IntervalProduct(tuple(intervals)),
        tuple(np.array(t, dtype=np.int64) for t in tables),
    )


def example14_system() -> Fds:
    return table_system([(0, 2)], [[0, 2, 0]])


def example13_system() -> Fds:
    # Derived from the stepwise rules: f1 = [x3 == 1], f2 = [x1 == 1],
    # f3 = 2*[x2 == 0]; offsets have component 1 most significant.
    dom = IntervalProduct(((0, 1), (0, 1), (0, 2)))
    t1, t2, t3 = [], [], []
    for x1, x2, x3 in dom.states():
        t1.append(1 if x3 == 1 else 0)
        t2.append(1 if x1 == 1 else 0)
        t3.append(2 if x2 == 0 else 0)
    return Fds(dom, tuple(np.array(t) for t in (t1, t2, t3)))


def example12_system() -> Fds:
    # The general threshold rules evaluated on the eight-vertex example
    # (including the negative dependence of component 7 on component 8).
    dom = IntervalProduct(
        ((0, 1), (0, 3), (0, 2), (0, 1), (0, 2), (0, 1), (0, 2), (0, 1))
    )
    tables = [[] for _ in range(8)]
    for x in dom.states():
        x1, x2, x3, x4, x5, x6, x7, x8 = x
        tables[0].append(1 if (x2 == 2 or x3 >= 2) else 0)
        tables[1].append(1 if x1 < 1 else 0)
        tables[2].append(1 if x2 < 1 else 0)
        tables[3].append(1 if x5 < 2 else 0)
        tables[4].append(1 if x4 >= 1 else 0)
        tables[5].append(0)
        tables[6].append(1 if (x3 >= 1 and x4 < 1 and x8 < 1) else 0)
        tables[7].append(1 if (x4 >= 1 or x7 == 1 or x5 < 1 or x6 < 1) else 0)
    return Fds(dom, tuple(np.array(t) for t in tables))


# ---------------------------------------------------------------------------
# interval products and offsets
# ---------------------------------------------------------------------------


def test_mixed_radix_offsets_component_one_most_significant():
    dom = IntervalProduct(((0, 1), (0, 2), (1, 2)))
    assert dom.weights == (6, 2, 1)
    assert dom.offset((0, 0, 1)) == 0
    assert dom.offset((0, 0, 2)) == 1
    assert dom.offset((0, 1, 1)) == 2
    assert dom.offset((1, 0, 1)) == 6
    assert list(dom.states())[7] == dom.state(7)


def test_interval_product_validation():
    with pytest.raises(PreconditionError):
        IntervalProduct(((2, 1),))
    dom = IntervalProduct(((0, 1),))
    assert not dom.contains((2,))
    with pytest.raises(PreconditionError):
        dom.offset((2,))


def test_state_cap_guard(monkeypatch):
    monkeypatch.setenv("SDG_CAP", "10")
    with pytest.raises(ResourceCapError):
        IntervalProduct(((0, 10),))
    monkeypatch.delenv("SDG_CAP")
    IntervalProduct(((0, 10),))  # fine without the tight cap


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(0, 3)), min_size=1, max_size=5))
def test_offset_state_roundtrip(spec):
    dom = IntervalProduct(tuple((lo, lo + width) for lo, width in spec))
    for off in range(dom.size):
        assert dom.offset(dom.state(off)) == off


# ---------------------------------------------------------------------------
# evaluation and iteration
# ---------------------------------------------------------------------------


def test_evaluate_example14():
    f = example14_system()
    assert f.evaluate((0,)) == (0,)
    assert f.evaluate((1,)) == (2,)
    assert f.evaluate((2,)) == (0,)
    assert f.iterate((1,), 2) == (0,)


def test_identity_and_constant():
    ident = table_system([(0, 1)], [[0, 1]])
    assert all(ident.evaluate(s) == s for s in ident.domain.states())
    const = constant_fds(IntervalProduct(((0, 2), (0, 1))), (1, 0))
    assert all(const.evaluate(s) == (1, 0) for s in const.domain.states())
    assert const.iterate((2, 1), 0) == (2, 1)


def test_iterate_example13_reaches_constant():
    f = example13_system()
    assert {f.iterate(s, 4) for s in f.domain.states()} == {(0, 0, 2)}


def test_evaluate_rejects_out_of_domain():
    f = example14_system()
    with pytest.raises(PreconditionError):
        f.evaluate((3,))


# ---------------------------------------------------------------------------
# interaction graph extraction
# ---------------------------------------------------------------------------


def test_interaction_graph_identity_network():
    f = table_system([(0, 1), (0, 1)], [[0, 0, 1, 1], [0, 1, 0, 1]])
    ig = f.interaction_graph(("a", "b"))
    assert ig.arcs == {("a", "a", "+"), ("b", "b", "+")}


def test_interaction_graph_negation_loop():
    f = table_system([(0, 1)], [[1, 0]])
    assert f.interaction_graph().arcs == {("1", "1", "-")}


def test_interaction_graph_example14_has_parallel_loops():
    f = example14_system()
    # differences: f(1)-f(0) = +2, f(2)-f(1) = -2
    assert f.interaction_graph().arcs == {("1", "1", "+"), ("1", "1", "-")}


def test_interaction_graph_example12_matches_graph():
    f = example12_system()
    g = helpers.eight_vertex_example()
    assert f.interaction_graph(g.vertices).arcs == g.arcs


# ---------------------------------------------------------------------------
# degree-boundedness
# ---------------------------------------------------------------------------


def test_degree_bounded_example12():
    f = example12_system()
    ok, bad = f.is_degree_bounded()
    assert ok and not bad


def test_degree_bounded_violation_on_positive_loop():
    # A single positive loop has out-degree 1, so three levels are too many.
    f = table_system([(0, 2)], [[0, 1, 2]])
    assert f.interaction_graph().arcs == {("1", "1", "+")}
    ok, bad = f.is_degree_bounded()
    assert not ok and bad == (0,)


def test_degree_bounded_one_point_domain():
    f = constant_fds(IntervalProduct(((0, 0),)), (0,))
    ok, bad = f.is_degree_bounded()
    assert ok


def test_degree_bounded_sink_needs_two_levels():
    # 1 -> 2 with a three-level sink violates the exact-size rule.
    dom = IntervalProduct(((0, 1), (0, 2)))
    tables = [[0] * 6, []]
    for x1, x2 in dom.states():
        tables[1].append(2 if x1 else 0)
    f = Fds(dom, tuple(np.array(t) for t in tables))
    ok, bad = f.is_degree_bounded()
    assert not ok and bad == (1,)


# ---------------------------------------------------------------------------
# nilpotency and fixed points
# ---------------------------------------------------------------------------


def test_nilpotency_index_examples():
    assert example14_system().nilpotency_index() == 2
    ident = table_system([(0, 1)], [[0, 1]])
    assert ident.nilpotency_index() is None
    f12 = example12_system()
    assert f12.nilpotency_index() == 4  # not 3


def test_nilpotency_image_chain_monotone():
    rng = random.Random(2)
    for _ in range(50):
        f = random_fds(rng, [rng.randint(1, 3) for _ in range(rng.randint(1, 4))])
        succ = f.successor_offsets
        current = np.unique(succ)
        for _ in range(f.domain.size):
            nxt = np.unique(succ[current])
            assert set(nxt.tolist()) <= set(current.tolist())
            if nxt.size == current.size:
                break
            current = nxt


def test_fixed_points():
    # Offsets put component 1 in the most significant digit, so x2 is the
    # fast-varying coordinate of the flat tables.
    pos2 = table_system([(0, 1), (0, 1)], [[0, 1, 0, 1], [0, 0, 1, 1]])
    # f1 = x2, f2 = x1: fixed points (0,0) and (1,1)
    assert pos2.fixed_points() == [(0, 0), (1, 1)]
    assert pos2.interaction_graph().arcs == {("2", "1", "+"), ("1", "2", "+")}

    neg2 = table_system([(0, 1), (0, 1)], [[0, 1, 0, 1], [1, 1, 0, 0]])
    # f1 = x2, f2 = 1 - x1: a negative feedback loop has no fixed point
    assert neg2.fixed_points() == []
    assert neg2.interaction_graph().arcs == {("2", "1", "+"), ("1", "2", "-")}

    const = constant_fds(IntervalProduct(((0, 1), (0, 1))), (1, 1))
    assert const.fixed_points() == [(1, 1)]


# ---------------------------------------------------------------------------
# convergence relation
# ---------------------------------------------------------------------------


def test_converges_toward_trivial_one_point():
    f = constant_fds(IntervalProduct(((0, 0),)), (0,))
    w = converges_toward(f, f, 0)
    assert w.valid


def test_converges_toward_checks_domains():
    f = table_system([(0, 1)], [[0, 0]])
    h = table_system([(0, 2)], [[0, 0, 0]])
    assert not converges_toward(f, h, 1).valid  # h's domain not inside f's
    with pytest.raises(PreconditionError):
        converges_toward(f, constant_fds(IntervalProduct(((0, 0), (0, 0))), (0, 0)), 1)


def test_converges_toward_detects_disagreement():
    f = table_system([(0, 1)], [[0, 0]])
    h = table_system([(0, 1)], [[1, 1]])
    w = converges_toward(f, h, 1)
    assert not w.agreement and not w.valid
    assert w.counterexample == (0,)


def test_converges_toward_componentwise_inclusion():
    # h couples its two components (image = equal pairs); a system whose
    # image holds mixed pairs still converges under the componentwise box.
    h = table_system([(0, 1), (0, 1)], [[0, 0, 1, 1], [0, 0, 1, 1]])
    f = table_system([(0, 1), (0, 1)], [[0, 0, 1, 1], [0, 1, 0, 1]])
    # f = h on the half where they agree? they differ at (0,1) and (1,0):
    assert not converges_toward(f, h, 1).valid
    w = converges_toward(h, h, 1)
    assert w.valid


# ---------------------------------------------------------------------------
# enumeration of degree-bounded systems
# ---------------------------------------------------------------------------


def test_enumerate_positive_loop_unique_identity():
    g = SignedDigraph.from_arcs([("1", "1", "+")])
    systems = list(enumerate_degree_bounded_systems(g))
    # By hand: the four self-maps of {0,1} are 00, 01, 10, 11; only x -> x
    # realizes exactly one positive loop.
    assert len(systems) == 1
    assert systems[0].tables[0].tolist() == [0, 1]


def test_enumerate_negative_two_cycle_unique():
    g = SignedDigraph.from_arcs([("1", "2", "+"), ("2", "1", "-")])
    systems = list(enumerate_degree_bounded_systems(g))
    assert len(systems) == 1
    assert systems[0].fixed_points() == []


def test_enumerate_single_positive_arc():
    g = SignedDigraph.from_arcs([("1", "2", "+")])
    systems = list(enumerate_degree_bounded_systems(g))
    # f2 must be the identity in x1; f1 is either constant 0 or constant 1.
    assert len(systems) == 2
    for f in systems:
        assert f.domain.shape == (2, 2)
        col = [f.evaluate((x1, 0))[1] for x1 in (0, 1)]
        assert col == [0, 1]


def test_enumerate_respects_cap():
    g = helpers.eight_vertex_example()
    with pytest.raises(ResourceCapError):
        list(enumerate_degree_bounded_systems(g, table_cap=10))


def test_unique_system_on_signed_cycles_fixed_point_counts():
    # On a signed cycle every vertex has one in- and one out-arc, forcing
    # two-level intervals and a unique system: two fixed points when the
    # sign product is positive, none when negative (checked up to n = 4).
    from itertools import product as iproduct

    for n in range(1, 5):
        names = [str(i + 1) for i in range(n)]
        shape = [(names[i], names[(i + 1) % n]) for i in range(n)]
        for signs in iproduct("+-", repeat=n):
            g = SignedDigraph.from_arcs(
                [(s, t, sg) for (s, t), sg in zip(shape, signs)], vertices=names
            )
            systems = list(enumerate_degree_bounded_systems(g))
            assert len(systems) == 1
            negatives = sum(1 for s in signs if s == "-")
            expected = 2 if negatives % 2 == 0 else 0
            assert len(systems[0].fixed_points()) == expected


def test_enumerate_systems_have_exact_interaction_graph():
    rng = random.Random(13)
    seen = 0
    while seen < 8:
        g = helpers.random_connected_sdg(rng, 3)
        try:
            systems = list(enumerate_degree_bounded_systems(g, table_cap=200_000))
        except ResourceCapError:
            continue
        seen += 1
        for f in systems[:50]:
            assert f.interaction_graph(g.vertices).arcs == g.arcs
            ok, _ = f.is_degree_bounded()
            assert ok


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_fds_json_roundtrip():
    f = example13_system()
    doc = fds_to_dict(f)
    assert doc["version"] == "fds.v1"
    assert fds_from_dict(json.loads(json.dumps(doc))) == f


def test_fds_json_rejects_malformed():
    with pytest.raises(SdgParseError):
        fds_from_dict({"version": "nope"})
    with pytest.raises(SdgParseError):
        fds_from_dict({"version": "fds.v1", "intervals": [[0, 1]], "tables": [[0, 7]]})
    with pytest.raises(SdgParseError):
        fds_from_dict({"version": "fds.v1", "intervals": [[0, 1]], "tables": [[0]]})


def test_translate_and_mirror_preserve_structure():
    f = example13_system()
    t = f.translate((1, -2, 0))
    assert t.domain.intervals == ((1, 2), (-2, -1), (0, 2))
    assert t.interaction_graph().arcs == f.interaction_graph().arcs
    assert t.nilpotency_index() == f.nilpotency_index()

    m = f.mirror(range(f.n))  # whole graph: arc signs preserved
    assert m.interaction_graph().arcs == f.interaction_graph().arcs
    assert m.nilpotency_index() == f.nilpotency_index()
