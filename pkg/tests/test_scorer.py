import pytest

from xtimelines.errors import ConsistencyError
from xtimelines.scorer import (
    BEFORE,
    IDENTITY,
    MODE_BASIC,
    MODE_RELAXED,
    MODE_STRICT,
    MODES,
    SIMULTANEOUS,
    TemporalGraph,
    PairScore,
    closure,
    consistency_check,
    edge_verified,
    event_node,
    event_type_node,
    make_edge,
    micro_average,
    reduce_graph,
    score_pair,
    timeline_to_graph,
    timex_node,
    weighted_f1_mean,
)
from xtimelines.timeline import parse_timeline

from conftest import FIXTURES
from graph_oracle import oracle_closure, random_graphs


def graph(*edges):
    return TemporalGraph.build((), [make_edge(r, u, v) for r, u, v in edges])


@pytest.fixture(scope="module")
def cross_gold():
    return parse_timeline((FIXTURES / "gold" / "cross" / "boeing.timeline").read_text())


# -- graph construction -----------------------------------------------------

U = event_node("en-18319", 1, "unveils")
R = event_node("es-18319", 1, "revelado")


def test_basic_mode_links_coreferent_mentions_as_simultaneous(cross_gold):
    edges = timeline_to_graph(cross_gold, MODE_BASIC).edges
    assert make_edge(SIMULTANEOUS, U, R) in edges
    assert len(edges) == 15


def test_strict_mode_uses_identity_for_same_row_pairs(cross_gold):
    edges = timeline_to_graph(cross_gold, MODE_STRICT).edges
    assert make_edge(IDENTITY, U, R) in edges
    assert make_edge(SIMULTANEOUS, U, R) not in edges
    # same-anchor mentions of different rows stay SIMULTANEOUS
    rel = event_node("en-18319", 2, "relationship")
    acq = event_node("es-18320", 1, "acuerdo")
    assert make_edge(SIMULTANEOUS, rel, acq) in edges


def test_relaxed_mode_collapses_rows(cross_gold):
    g = timeline_to_graph(cross_gold, MODE_RELAXED)
    assert not any(U in (u, v) or R in (u, v) for _, u, v in g.edges)
    merged = event_type_node([("en-18319", 1, "unveils"), ("es-18319", 1, "revelado")])
    timex_edges = [e for e in g.edges if e[0] == SIMULTANEOUS and e[2] == timex_node_of("2007-07-08")]
    assert timex_edges == [make_edge(SIMULTANEOUS, merged, timex_node_of("2007-07-08"))]
    assert len(g.edges) == 10


def timex_node_of(iso):
    from xtimelines.anchors import parse_anchor
    return timex_node(parse_anchor(iso))


def test_every_mode_rejects_unknown_mode(cross_gold):
    with pytest.raises(ValueError):
        timeline_to_graph(cross_gold, "lenient")


# -- closure ----------------------------------------------------------------

def test_shared_timex_makes_events_simultaneous():
    g = graph((SIMULTANEOUS, "e1", "t"), (SIMULTANEOUS, "e2", "t"))
    assert make_edge(SIMULTANEOUS, "e1", "e2") in closure(g).edges


def test_before_is_transitive():
    g = graph((BEFORE, "a", "b"), (BEFORE, "b", "c"))
    assert (BEFORE, "a", "c") in closure(g).edges


def test_identity_entails_simultaneous():
    g = graph((IDENTITY, "a", "b"))
    assert make_edge(SIMULTANEOUS, "a", "b") in closure(g).edges
    # but simultaneity alone never creates identity
    g2 = graph((SIMULTANEOUS, "a", "b"))
    assert make_edge(IDENTITY, "a", "b") not in closure(g2).edges


def test_before_composes_with_simultaneous_on_both_sides():
    g = graph((BEFORE, "a", "b"), (SIMULTANEOUS, "b", "c"))
    assert (BEFORE, "a", "c") in closure(g).edges
    g = graph((SIMULTANEOUS, "a", "b"), (BEFORE, "b", "c"))
    assert (BEFORE, "a", "c") in closure(g).edges


def test_closure_monotone_and_idempotent(cross_gold):
    for mode in MODES:
        g = timeline_to_graph(cross_gold, mode)
        closed = closure(g)
        assert g.edges <= closed.edges
        assert closure(closed).edges == closed.edges


def test_closure_matches_oracle_on_random_graphs():
    checked = 0
    for g, expected in random_graphs(seed=4242, count=300):
        if expected is None:
            with pytest.raises(ConsistencyError):
                closure(g)
        else:
            assert set(closure(g).edges) == expected
            checked += 1
    assert checked == 300


def test_inconsistent_graph_raises_with_cycle():
    g = graph((BEFORE, "a", "b"), (BEFORE, "b", "a"))
    with pytest.raises(ConsistencyError) as err:
        closure(g)
    assert set(err.value.cycle) == {"a", "b"}


def test_consistency_check_examples(cross_gold):
    for mode in MODES:
        assert consistency_check(timeline_to_graph(cross_gold, mode)) == []
    cycle = consistency_check(graph((BEFORE, "a", "b"), (BEFORE, "b", "a")))
    assert len(cycle) == 1 and "cycle" in cycle[0]
    contradiction = consistency_check(graph((BEFORE, "a", "b"), (SIMULTANEOUS, "a", "b")))
    assert len(contradiction) == 1 and "contradiction" in contradiction[0]


# -- reduction ---------------------------------------------------------------

def test_redundant_simultaneous_edge_removed():
    g = graph((SIMULTANEOUS, "e1", "t"), (SIMULTANEOUS, "e2", "t"), (SIMULTANEOUS, "e1", "e2"))
    reduced = reduce_graph(g, MODE_BASIC)
    assert make_edge(SIMULTANEOUS, "e1", "e2") not in reduced.edges
    assert len(reduced.edges) == 2


def test_strict_reduction_keeps_identity():
    g = graph((SIMULTANEOUS, "e1", "t"), (SIMULTANEOUS, "e2", "t"), (IDENTITY, "e1", "e2"))
    reduced = reduce_graph(g, MODE_STRICT)
    assert make_edge(IDENTITY, "e1", "e2") in reduced.edges


def test_already_reduced_chain_unchanged():
    g = graph((BEFORE, "a", "b"), (BEFORE, "b", "c"))
    assert reduce_graph(g, MODE_BASIC).edges == g.edges


def test_reduction_preserves_closure(cross_gold):
    for mode in MODES:
        g = timeline_to_graph(cross_gold, mode)
        assert closure(reduce_graph(g, mode)).edges == closure(g).edges


def test_reduction_roundtrip_and_minimality_on_random_graphs():
    for g, expected in random_graphs(seed=777, count=120):
        if expected is None:
            continue
        closed = closure(g).edges
        reduced = reduce_graph(g, MODE_STRICT)
        assert closure(reduced).edges == closed
        for edge in reduced.edges:
            if edge[0] == IDENTITY:
                continue
            trial = TemporalGraph(reduced.nodes, frozenset(set(reduced.edges) - {edge}))
            assert closure(trial).edges != closed


# -- scoring -----------------------------------------------------------------

def fixture_timelines():
    return [parse_timeline(p.read_text()) for p in sorted(FIXTURES.rglob("*.timeline"))]


def test_self_comparison_scores_one():
    for timeline in fixture_timelines():
        for mode in MODES:
            s = score_pair(timeline, timeline, mode)
            assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)


def test_partial_recall_arithmetic():
    # reference reduces to two relations; the system holds exactly one of them
    ref = parse_timeline("X\n1\t2020\ten-1#1#a\ten-1#2#b\n")
    sys = parse_timeline("X\n1\t2020\ten-1#1#a\n")
    s = score_pair(sys, ref, MODE_BASIC)
    assert s.ref_reduced == 2 and s.sys_reduced == 1
    assert (s.precision, s.recall) == (1.0, 0.5)
    assert s.f1 == pytest.approx(2 / 3)


def test_empty_conventions():
    empty = parse_timeline("X\n")
    full = parse_timeline("X\n1\t2020\ten-1#1#a\n")
    both = score_pair(empty, empty, MODE_BASIC)
    assert (both.precision, both.recall, both.f1) == (1.0, 1.0, 1.0)
    sys_empty = score_pair(empty, full, MODE_BASIC)
    assert (sys_empty.precision, sys_empty.recall, sys_empty.f1) == (0.0, 0.0, 0.0)
    ref_empty = score_pair(full, empty, MODE_BASIC)
    assert (ref_empty.precision, ref_empty.recall) == (0.0, 0.0)


def test_deficient_system_strict_recall_below_relaxed(cross_gold):
    deficient = parse_timeline(
        (FIXTURES / "sys_deficient" / "cross" / "boeing.timeline").read_text())
    strict = score_pair(deficient, cross_gold, MODE_STRICT)
    relaxed = score_pair(deficient, cross_gold, MODE_RELAXED)
    assert strict.recall == pytest.approx(4 / 7)  # misses identity and one timex link
    assert relaxed.recall == 1.0
    assert strict.recall < relaxed.recall
    basic = score_pair(deficient, cross_gold, MODE_BASIC)
    assert basic.recall == pytest.approx(5 / 7)


def test_relaxed_alignment_is_overlap_based():
    merged = event_type_node([("en-1", 1, "a"), ("es-1", 1, "b")])
    single = event_type_node([("en-1", 1, "a")])
    t = timex_node_of("2020")
    pool = frozenset([make_edge(SIMULTANEOUS, merged, t)])
    assert edge_verified(make_edge(SIMULTANEOUS, single, t), pool)
    other = event_type_node([("es-9", 1, "z")])
    assert not edge_verified(make_edge(SIMULTANEOUS, other, t), pool)


def test_strict_reduced_gold_at_least_as_large_as_basic(cross_gold):
    multi = parse_timeline("X\n1\t2020\ten-1#1#a\ten-1#2#b\n1\t2020\ten-1#3#c\n")
    for timeline in (multi, cross_gold):
        strict = reduce_graph(timeline_to_graph(timeline, MODE_STRICT), MODE_STRICT)
        basic = reduce_graph(timeline_to_graph(timeline, MODE_BASIC), MODE_BASIC)
        assert len(strict.edges) >= len(basic.edges)
        assert any(e[0] == IDENTITY for e in strict.edges)  # identity survives reduction


def test_micro_average_aggregates_counts():
    single = PairScore(1.0, 0.5, 2 / 3, 1, 2, 1, 1)
    assert micro_average([single]) == micro_average([single])
    assert micro_average([single]).recall == 0.5
    a = PairScore(0.5, 0.5, 0.5, 2, 2, 1, 1)
    b = PairScore(1.0, 1.0, 1.0, 2, 2, 2, 2)
    combined = micro_average([a, b])
    assert combined.precision == pytest.approx(3 / 4)
    assert combined.recall == pytest.approx(3 / 4)


def test_micro_average_differs_from_event_weighted_mean():
    # skewed corpus: a big timeline scored low, a tiny one scored perfectly;
    # the weights are mention counts, which need not track relation counts
    big = PairScore(0.25, 0.25, 0.25, 8, 8, 2, 2)
    tiny = PairScore(1.0, 1.0, 1.0, 1, 1, 1, 1)
    micro = micro_average([big, tiny])
    assert micro.precision == pytest.approx(3 / 9)
    weighted = weighted_f1_mean([big, tiny], [3, 1])
    assert weighted == pytest.approx((0.25 * 3 + 1.0 * 1) / 4)
    assert weighted != pytest.approx(micro.f1)


def test_valid_timeline_graphs_are_consistent():
    for timeline in fixture_timelines():
        for mode in MODES:
            g = timeline_to_graph(timeline, mode)
            assert g.edges <= closure(g).edges
