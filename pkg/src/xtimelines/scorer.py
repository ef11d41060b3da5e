"""Temporal-graph evaluation of timelines.

A timeline is turned into a graph whose nodes are event mentions (or event
types) and TIMEX values, and whose edges carry BEFORE, SIMULTANEOUS or
IDENTITY relations. Scores compare a system graph against a reference
graph through their closures (+) and reductions (-):

    precision = |Sys- verified in Ref+| / |Sys-|
    recall    = |Ref- verified in Sys+| / |Ref-|

Three metric modes change how coreferent mentions (mentions sharing a
timeline row) are represented:

    basic   - every mention is a node; coreferent mentions are merely
              SIMULTANEOUS, exactly like same-anchor mentions of
              different events.
    strict  - coreferent mentions are linked by IDENTITY edges, which are
              never reduced away, so identity must be captured to score.
    relaxed - each row collapses into a single event-type node, so one
              correct mention per event instance is enough.

Closure applies six rules: SIMULTANEOUS and IDENTITY are symmetric and
transitive, IDENTITY entails SIMULTANEOUS, BEFORE is transitive, and
BEFORE composes with SIMULTANEOUS on either side. A graph whose closure
would need a BEFORE self-loop is inconsistent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConsistencyError
from .timeline import Timeline

BEFORE = "BEFORE"
SIMULTANEOUS = "SIMULTANEOUS"
IDENTITY = "IDENTITY"
RELATIONS = (BEFORE, IDENTITY, SIMULTANEOUS)
SYMMETRIC = (IDENTITY, SIMULTANEOUS)

MODE_BASIC = "basic"
MODE_STRICT = "strict"
MODE_RELAXED = "relaxed"
MODES = (MODE_BASIC, MODE_STRICT, MODE_RELAXED)

_EVENT = "EVENT"
_ETYPE = "ETYPE"
_TIMEX = "TIMEX"


def event_node(doc_id, sentence, extent):
    return (_EVENT, doc_id, sentence, extent)


def event_type_node(mention_keys):
    return (_ETYPE, tuple(sorted(mention_keys)))


def timex_node(anchor):
    return (_TIMEX, anchor.isoformat())


def make_edge(relation, u, v):
    """Canonical edge tuple; symmetric relations store the smaller node first."""
    if u == v:
        raise ValueError(f"self edge on {u!r}")
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}")
    if relation in SYMMETRIC and v < u:
        u, v = v, u
    return (relation, u, v)


@dataclass(frozen=True)
class TemporalGraph:
    nodes: frozenset
    edges: frozenset

    @classmethod
    def build(cls, nodes, edges):
        edges = frozenset(edges)
        nodes = frozenset(nodes) | {n for _, u, v in edges for n in (u, v)}
        return cls(nodes, edges)


def timeline_to_graph(timeline: Timeline, mode: str) -> TemporalGraph:
    """Represent a timeline as a temporal graph under the given metric mode.

    Every distinct anchor becomes one TIMEX node and every mention (or, in
    relaxed mode, every row) is SIMULTANEOUS with its anchor's node. Rows
    with smaller ordinals are BEFORE rows with larger ones; equal ordinals
    mean SIMULTANEOUS. Coreference (two mentions in one row) is rendered
    per mode: SIMULTANEOUS (basic), IDENTITY (strict), or a shared node
    (relaxed).
    """
    if mode not in MODES:
        raise ValueError(f"unknown metric mode {mode!r}")
    nodes = set()
    edges = set()

    if mode == MODE_RELAXED:
        row_nodes = [event_type_node(m.key() for m in row.mentions) for row in timeline.rows]
        for row, node in zip(timeline.rows, row_nodes):
            t = timex_node(row.anchor)
            nodes.update((node, t))
            edges.add(make_edge(SIMULTANEOUS, node, t))
        for i, row_a in enumerate(timeline.rows):
            for j in range(i + 1, len(timeline.rows)):
                row_b = timeline.rows[j]
                if row_a.ordinal == row_b.ordinal:
                    edges.add(make_edge(SIMULTANEOUS, row_nodes[i], row_nodes[j]))
                elif row_a.ordinal < row_b.ordinal:
                    edges.add(make_edge(BEFORE, row_nodes[i], row_nodes[j]))
                else:
                    edges.add(make_edge(BEFORE, row_nodes[j], row_nodes[i]))
        return TemporalGraph.build(nodes, edges)

    coref_relation = IDENTITY if mode == MODE_STRICT else SIMULTANEOUS
    mention_nodes = []  # (node, ordinal, row index)
    for row_index, row in enumerate(timeline.rows):
        t = timex_node(row.anchor)
        nodes.add(t)
        for m in row.mentions:
            node = event_node(*m.key())
            nodes.add(node)
            mention_nodes.append((node, row.ordinal, row_index))
            edges.add(make_edge(SIMULTANEOUS, node, t))
    for i, (node_a, ord_a, row_a) in enumerate(mention_nodes):
        for node_b, ord_b, row_b in mention_nodes[i + 1:]:
            if ord_a == ord_b:
                relation = coref_relation if row_a == row_b else SIMULTANEOUS
                edges.add(make_edge(relation, node_a, node_b))
            elif ord_a < ord_b:
                edges.add(make_edge(BEFORE, node_a, node_b))
            else:
                edges.add(make_edge(BEFORE, node_b, node_a))
    return TemporalGraph.build(nodes, edges)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if rb < ra:  # smallest member as root keeps everything deterministic
            ra, rb = rb, ra
        self.parent[rb] = ra

    def groups(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return {root: sorted(members) for root, members in out.items()}


def _class_reachability(graph):
    """SIMULTANEOUS classes, their BEFORE successors, and full reachability.

    Returns (classes, reach) where classes maps root -> sorted members and
    reach maps root -> set of reachable roots. Raises ConsistencyError if
    any class can reach itself.
    """
    sim = _UnionFind(graph.nodes)
    for relation, u, v in graph.edges:
        if relation in SYMMETRIC:
            sim.union(u, v)
    classes = sim.groups()

    succ = {root: set() for root in classes}
    for relation, u, v in graph.edges:
        if relation != BEFORE:
            continue
        a, b = sim.find(u), sim.find(v)
        if a == b:
            raise ConsistencyError(
                f"BEFORE({u!r}, {v!r}) contradicts their simultaneity",
                cycle=[u, v])
        succ[a].add(b)

    reach = {}
    for root in sorted(classes):
        seen = set()
        stack = sorted(succ[root], reverse=True)
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(succ[current])
        if root in seen:
            on_cycle = sorted(r for r in seen if r != root and reach_through(succ, r, root))
            raise ConsistencyError(
                f"BEFORE cycle through {classes[root][0]!r}",
                cycle=[classes[r][0] for r in ([root] + on_cycle)])
        reach[root] = seen
    return classes, reach


def reach_through(succ, start, goal):
    seen = set()
    stack = [start]
    while stack:
        current = stack.pop()
        if current == goal:
            return True
        if current in seen:
            continue
        seen.add(current)
        stack.extend(succ[current])
    return False


def closure(graph: TemporalGraph) -> TemporalGraph:
    """Least fixpoint of the six closure rules, as an explicit edge set.

    Raises ConsistencyError (naming a violating cycle) when the rules
    would derive BEFORE between simultaneous nodes.
    """
    classes, reach = _class_reachability(graph)

    ident = _UnionFind(graph.nodes)
    for relation, u, v in graph.edges:
        if relation == IDENTITY:
            ident.union(u, v)

    edges = set()
    for members in classes.values():
        for i, u in enumerate(members):
            for v in members[i + 1:]:
                edges.add(make_edge(SIMULTANEOUS, u, v))
    for members in ident.groups().values():
        for i, u in enumerate(members):
            for v in members[i + 1:]:
                edges.add(make_edge(IDENTITY, u, v))
    for root, reachable in reach.items():
        for other in reachable:
            for u in classes[root]:
                for v in classes[other]:
                    edges.add(make_edge(BEFORE, u, v))
    return TemporalGraph(graph.nodes, frozenset(edges))


def is_consistent(graph: TemporalGraph) -> bool:
    try:
        _class_reachability(graph)
        return True
    except ConsistencyError:
        return False


def consistency_check(graph: TemporalGraph) -> list[str]:
    """Describe contradictions without raising; empty list means consistent.

    Reports (a) BEFORE edges whose endpoints also carry a SIMULTANEOUS or
    IDENTITY edge and (b) BEFORE cycles that remain once those direct
    contradictions are set aside.
    """
    violations = []
    symmetric_pairs = {frozenset((u, v)) for rel, u, v in graph.edges if rel in SYMMETRIC}
    clean_before = []
    for rel, u, v in sorted(graph.edges):
        if rel != BEFORE:
            continue
        if frozenset((u, v)) in symmetric_pairs:
            violations.append(f"contradiction: BEFORE({u!r}, {v!r}) with a simultaneous/identity edge")
        else:
            clean_before.append((rel, u, v))

    trimmed = TemporalGraph.build(
        graph.nodes,
        [e for e in graph.edges if e[0] != BEFORE] + clean_before)
    sim = _UnionFind(trimmed.nodes)
    for relation, u, v in trimmed.edges:
        if relation in SYMMETRIC:
            sim.union(u, v)
    raw_succ = {}
    for relation, u, v in trimmed.edges:
        if relation == BEFORE:
            a, b = sim.find(u), sim.find(v)
            raw_succ.setdefault(a, set()).add(b)
    roots = sorted(set(raw_succ) | {b for bs in raw_succ.values() for b in bs})
    succ = {r: raw_succ.get(r, set()) for r in roots}
    reported = set()
    for root in roots:
        if root in reported:
            continue
        if any(reach_through(succ, nxt, root) for nxt in sorted(succ[root])):
            on_cycle = sorted(r for r in roots
                              if reach_through(succ, root, r) and reach_through(succ, r, root))
            reported.update(on_cycle)
            violations.append("cycle: BEFORE loop through " + ", ".join(repr(r) for r in on_cycle))
    return violations


def reduce_graph(graph: TemporalGraph, mode: str = MODE_BASIC) -> TemporalGraph:
    """Remove redundant edges: those inferable from the remaining ones.

    Edges are tried greedily in a fixed order (relation name, then node
    keys) so the reduction is deterministic; an edge is dropped iff it is
    in the closure of the graph without it, which keeps the closure
    unchanged. Under the strict metric IDENTITY edges are never removal
    candidates.
    """
    edges = set(graph.edges)
    for edge in sorted(graph.edges):
        if mode == MODE_STRICT and edge[0] == IDENTITY:
            continue
        trial = TemporalGraph(graph.nodes, frozenset(edges - {edge}))
        if edge in closure(trial).edges:
            edges.remove(edge)
    return TemporalGraph(graph.nodes, frozenset(edges))


def _overlap(a, b):
    if a == b:
        return True
    if a[0] == _ETYPE and b[0] == _ETYPE:
        return not set(a[1]).isdisjoint(b[1])
    return False


def edge_verified(edge, pool: frozenset) -> bool:
    """Is ``edge`` supported by the edge pool of the other graph's closure?

    Mention and TIMEX nodes must match exactly. Event-type nodes (relaxed
    mode) correspond when their mention sets overlap, so a system row
    holding any mention of a reference event instance aligns with it.
    """
    if edge in pool:
        return True
    relation, u, v = edge
    if u[0] != _ETYPE and v[0] != _ETYPE:
        return False
    for other_relation, a, b in pool:
        if other_relation != relation:
            continue
        if _overlap(u, a) and _overlap(v, b):
            return True
        if relation in SYMMETRIC and _overlap(u, b) and _overlap(v, a):
            return True
    return False


@dataclass(frozen=True)
class PairScore:
    precision: float
    recall: float
    f1: float
    sys_reduced: int
    ref_reduced: int
    precision_matched: int
    recall_matched: int


def f1_score(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def score_pair(system: Timeline, reference: Timeline, mode: str) -> PairScore:
    """Score one system timeline against its reference under one metric.

    Conventions for empty graphs: if both reduced graphs are empty the
    pair scores 1.0 everywhere; an empty side alone scores 0.0 for its
    metric.
    """
    sys_graph = timeline_to_graph(system, mode)
    ref_graph = timeline_to_graph(reference, mode)
    sys_minus = reduce_graph(sys_graph, mode).edges
    ref_minus = reduce_graph(ref_graph, mode).edges
    sys_plus = closure(sys_graph).edges
    ref_plus = closure(ref_graph).edges

    if not sys_minus and not ref_minus:
        return PairScore(1.0, 1.0, 1.0, 0, 0, 0, 0)

    p_matched = sum(1 for e in sorted(sys_minus) if edge_verified(e, ref_plus))
    r_matched = sum(1 for e in sorted(ref_minus) if edge_verified(e, sys_plus))
    precision = p_matched / len(sys_minus) if sys_minus else 0.0
    recall = r_matched / len(ref_minus) if ref_minus else 0.0
    return PairScore(precision, recall, f1_score(precision, recall),
                     len(sys_minus), len(ref_minus), p_matched, r_matched)


@dataclass(frozen=True)
class CorpusScore:
    precision: float
    recall: float
    f1: float
    sys_reduced: int
    ref_reduced: int
    precision_matched: int
    recall_matched: int


def micro_average(scores) -> CorpusScore:
    """Aggregate counts across timelines, then compute P/R/F1 once."""
    scores = list(scores)
    if not scores:
        raise ValueError("micro_average needs at least one timeline score")
    sys_total = sum(s.sys_reduced for s in scores)
    ref_total = sum(s.ref_reduced for s in scores)
    p_matched = sum(s.precision_matched for s in scores)
    r_matched = sum(s.recall_matched for s in scores)
    if sys_total == 0 and ref_total == 0:
        return CorpusScore(1.0, 1.0, 1.0, 0, 0, 0, 0)
    precision = p_matched / sys_total if sys_total else 0.0
    recall = r_matched / ref_total if ref_total else 0.0
    return CorpusScore(precision, recall, f1_score(precision, recall),
                       sys_total, ref_total, p_matched, r_matched)


def weighted_f1_mean(scores, weights) -> float:
    """Alternative corpus figure: event-weighted mean of per-timeline F1s.

    ``weights`` are event counts (reference mentions per timeline). Kept
    behind a flag for comparison with the count-aggregating micro average.
    """
    scores = list(scores)
    weights = list(weights)
    if len(scores) != len(weights) or not scores:
        raise ValueError("need one weight per timeline score")
    total = sum(weights)
    if total == 0:
        return 0.0
    return sum(s.f1 * w for s, w in zip(scores, weights)) / total
