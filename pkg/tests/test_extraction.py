import pytest

from xtimelines.anchors import parse_anchor
from xtimelines.corpus import parse_document
from xtimelines.errors import DataError
from xtimelines.extraction import (
    SOURCE_DCT_FALLBACK,
    SOURCE_EXPLICIT_ARGTMP,
    SOURCE_EXPLICIT_TLINK,
    SOURCE_INHERITED,
    SOURCE_NONE,
    AnchoredEvent,
    TargetEntity,
    bte_anchors,
    build_timeline,
    dlt_anchors,
    explicit_anchors,
    find_target_mentions,
    select_events,
)
from xtimelines.resources import ResourceTables
from xtimelines.rng import SplitMix64

from conftest import FIXTURES

BOEING = TargetEntity("Boeing", "Boeing", "http://dbpedia.org/resource/Boeing")
JOBS = TargetEntity("Steve Jobs", "Jobs", "http://dbpedia.org/resource/Steve_Jobs")


def load(name):
    return parse_document((FIXTURES / "corpus" / name).read_bytes(), source=name)


@pytest.fixture(scope="module")
def jobs_doc():
    return load("en-10001.ann")


def make_doc(body):
    return parse_document("#DOC\ten-1\ten\t2020-06-01\n" + body)


# -- target mention identification -------------------------------------------

def test_redirected_link_matches_target(tables):
    doc = load("en-18320.ann")  # mention m1 links to a redirect of the target
    assert "m1" in find_target_mentions(doc, BOEING, tables)


def test_head_wordform_match_is_case_insensitive(tables, jobs_doc):
    # m3 ("Jobs") has no knowledge-base link and is outside the chain
    target = TargetEntity("Steve Jobs", "jobs", None)
    assert "m3" in find_target_mentions(jobs_doc, target, tables)


def test_coreference_chain_closure(tables, jobs_doc):
    mentions = find_target_mentions(jobs_doc, JOBS, tables)
    assert mentions == {"m1", "m2", "m3", "m4"}  # m2/m4 only via the chain


def test_absent_target_has_no_mentions(tables, jobs_doc):
    assert find_target_mentions(jobs_doc, BOEING, tables) == frozenset()


def test_without_tables_link_matching_degrades_to_heads(jobs_doc):
    mentions = find_target_mentions(jobs_doc, JOBS, ResourceTables())
    assert mentions == {"m3"}  # "Jobs" by head; the linked mention needs tables


# -- event selection ----------------------------------------------------------

def test_agent_role_selects_event(tables, jobs_doc):
    mentions = find_target_mentions(jobs_doc, JOBS, tables)
    assert select_events(jobs_doc, mentions) == ["p1", "p2", "p3", "p4"]


def test_negated_event_excluded():
    doc = make_doc("#SENT\n1\tt1\tBoeing\t0\t6\n1\tt2\tsold\t7\t11\n"
                   "#PRED\np1\t1\tt2\tt2\tsell.01\tVERBAL\tPAST\ty\t-\tARG0=m1\n"
                   "#ENT\nm1\t1\tt1\tt1\tt1\t-\n")
    assert select_events(doc, {"m1"}) == []


@pytest.mark.parametrize("modal,expected", [
    ("will", ["p1"]),
    ("Will", ["p1"]),
    ("would", []),
    ("might", []),
    ("-", ["p1"]),
])
def test_modal_filter_spares_will(modal, expected):
    doc = make_doc("#SENT\n1\tt1\tBoeing\t0\t6\n1\tt2\tsell\t7\t11\n"
                   f"#PRED\np1\t1\tt2\tt2\tsell.01\tVERBAL\tFUTURE\tn\t{modal}\tARG0=m1\n"
                   "#ENT\nm1\t1\tt1\tt1\tt1\t-\n")
    assert select_events(doc, {"m1"}) == expected


def test_non_agent_patient_roles_do_not_select():
    doc = make_doc("#SENT\n1\tt1\tBoeing\t0\t6\n1\tt2\tsold\t7\t11\n"
                   "#PRED\np1\t1\tt2\tt2\tsell.01\tVERBAL\tPAST\tn\t-\tARG2=m1\n"
                   "#ENT\nm1\t1\tt1\tt1\tt1\t-\n")
    assert select_events(doc, {"m1"}) == []


def test_selection_stable_under_record_permutation(tables, jobs_doc):
    path = FIXTURES / "corpus" / "en-10001.ann"
    lines = path.read_text(encoding="utf-8").splitlines()
    start = lines.index("#PRED") + 1
    end = lines.index("#ENT")
    shuffled = lines[:start] + list(reversed(lines[start:end])) + lines[end:]
    doc = parse_document("\n".join(shuffled) + "\n")
    mentions = find_target_mentions(doc, JOBS, tables)
    assert select_events(doc, mentions) == ["p1", "p2", "p3", "p4"]


# -- explicit anchoring --------------------------------------------------------

def test_tlink_anchor(tables):
    doc = load("en-18319.ann")
    anchors = explicit_anchors(doc, ["p1", "p2"])
    assert anchors["p1"].value == parse_anchor("2007-07-08")
    assert anchors["p1"].source == SOURCE_EXPLICIT_TLINK


def test_argtmp_anchor(tables):
    doc = load("en-18319.ann")
    anchors = explicit_anchors(doc, ["p1", "p2"])
    assert anchors["p2"].value == parse_anchor("2007-07-12")
    assert anchors["p2"].source == SOURCE_EXPLICIT_ARGTMP


def test_event_with_no_evidence_is_absent():
    doc = load("en-18320.ann")
    assert explicit_anchors(doc, ["p1", "p2"]) == {}


CONFLICT = ("#SENT\n1\tt1\tBoeing\t0\t6\n1\tt2\tsold\t7\t11\n"
            "1\tt3\tMonday\t12\t18\n1\tt4\tTuesday\t19\t26\n"
            "#PRED\np1\t1\tt2\tt2\tsell.01\tVERBAL\tPAST\tn\t-\tARG-TMP=x2,ARG0=m1\n"
            "#ENT\nm1\t1\tt1\tt1\tt1\t-\n"
            "#TIMEX\nx1\t1\tt3\tt3\tDATE\t2020-06-08\nx2\t1\tt4\tt4\tDATE\t2020-06-09\n"
            "#TLINK\np1\tSIMULTANEOUS\tx1\n")


def test_tlink_wins_over_argtmp():
    doc = make_doc(CONFLICT)
    anchors = explicit_anchors(doc, ["p1"])
    assert anchors["p1"].value == parse_anchor("2020-06-08")
    assert anchors["p1"].source == SOURCE_EXPLICIT_TLINK


def test_non_date_timex_not_eligible():
    body = CONFLICT.replace("x1\t1\tt3\tt3\tDATE", "x1\t1\tt3\tt3\tOTHER")
    anchors = explicit_anchors(make_doc(body), ["p1"])
    assert anchors["p1"].source == SOURCE_EXPLICIT_ARGTMP  # falls back to the role


def test_non_simultaneous_tlinks_ignored():
    body = CONFLICT.replace("p1\tSIMULTANEOUS\tx1", "p1\tAFTER\tx1")
    anchors = explicit_anchors(make_doc(body), ["p1"])
    assert anchors["p1"].source == SOURCE_EXPLICIT_ARGTMP


def test_tlink_direction_does_not_matter():
    body = CONFLICT.replace("p1\tSIMULTANEOUS\tx1", "x1\tSIMULTANEOUS\tp1")
    anchors = explicit_anchors(make_doc(body), ["p1"])
    assert anchors["p1"].value == parse_anchor("2020-06-08")


# -- document-level anchoring ---------------------------------------------------

def jobs_events(doc, tables):
    mentions = find_target_mentions(doc, JOBS, tables)
    events = select_events(doc, mentions)
    return events, explicit_anchors(doc, events)


def test_inheritance_within_same_tense(tables, jobs_doc):
    events, explicit = jobs_events(jobs_doc, tables)
    anchored = dlt_anchors(jobs_doc, events, explicit)
    monday = parse_anchor("2005-06-06")
    assert anchored["p1"].anchor == monday
    assert anchored["p1"].anchor_source == SOURCE_EXPLICIT_TLINK
    assert anchored["p2"].anchor == monday  # same tense, no explicit anchor
    assert anchored["p2"].anchor_source == SOURCE_INHERITED


def test_first_unanchored_event_takes_dct(tables, jobs_doc):
    events, explicit = jobs_events(jobs_doc, tables)
    anchored = dlt_anchors(jobs_doc, events, explicit)
    assert anchored["p3"].anchor == parse_anchor("2005-06-07")
    assert anchored["p3"].anchor_source == SOURCE_DCT_FALLBACK


def test_nominal_event_never_anchored_implicitly(tables, jobs_doc):
    events, explicit = jobs_events(jobs_doc, tables)
    anchored = dlt_anchors(jobs_doc, events, explicit)
    assert anchored["p4"].anchor is None
    assert anchored["p4"].anchor_source == SOURCE_NONE


def test_nominal_event_keeps_explicit_anchor(tables):
    doc = load("es-18320.ann")
    target = TargetEntity("Boeing", "Boeing", "http://dbpedia.org/resource/Boeing")
    mentions = find_target_mentions(doc, target, tables)
    events = select_events(doc, mentions)
    anchored = dlt_anchors(doc, events, explicit_anchors(doc, events))
    assert anchored["p1"].anchor == parse_anchor("2007-07-12")
    assert anchored["p1"].anchor_source == SOURCE_EXPLICIT_ARGTMP


def test_nominal_explicit_anchor_sets_no_default():
    # a later verbal event must not inherit from a nominal's explicit anchor
    body = ("#SENT\n1\tt1\tBoeing\t0\t6\n1\tt2\tdeal\t7\t11\n1\tt3\tMonday\t12\t18\n"
            "2\tt4\tBoeing\t0\t6\n2\tt5\tsold\t7\t11\n"
            "#PRED\np1\t1\tt2\tt2\tdeal.01\tNOMINAL\tNONE\tn\t-\tARG-TMP=x1,ARG0=m1\n"
            "p2\t2\tt5\tt5\tsell.01\tVERBAL\tNONE\tn\t-\tARG0=m2\n"
            "#ENT\nm1\t1\tt1\tt1\tt1\t-\nm2\t2\tt4\tt4\tt4\t-\n"
            "#TIMEX\nx1\t1\tt3\tt3\tDATE\t2020-06-08\n")
    doc = make_doc(body)
    anchored = dlt_anchors(doc, ["p1", "p2"], explicit_anchors(doc, ["p1", "p2"]))
    assert anchored["p1"].anchor == parse_anchor("2020-06-08")
    # untensed verbal event falls back to the DCT, not the nominal's anchor
    assert anchored["p2"].anchor == parse_anchor("2020-06-01")
    assert anchored["p2"].anchor_source == SOURCE_DCT_FALLBACK


def all_fixture_anchorings(tables):
    for name in ("en-18319.ann", "en-18320.ann", "es-18319.ann", "es-18320.ann",
                 "en-10001.ann"):
        doc = load(name)
        for target in (BOEING, JOBS):
            mentions = find_target_mentions(doc, target, tables)
            if not mentions:
                continue
            events = select_events(doc, mentions)
            explicit = explicit_anchors(doc, events)
            yield doc, events, explicit


def test_dlt_never_overrides_explicit_anchors(tables):
    for doc, events, explicit in all_fixture_anchorings(tables):
        anchored = dlt_anchors(doc, events, explicit)
        for pred_id, anchor in explicit.items():
            assert anchored[pred_id].anchor == anchor.value


def test_dlt_total_on_verbal_events(tables):
    for doc, events, explicit in all_fixture_anchorings(tables):
        anchored = dlt_anchors(doc, events, explicit)
        predicates = {p.pred_id: p for p in doc.predicates}
        for pred_id in events:
            if predicates[pred_id].pos_class == "VERBAL":
                assert anchored[pred_id].anchor is not None


def test_explicit_only_subset_of_document_level(tables):
    for doc, events, explicit in all_fixture_anchorings(tables):
        bte = bte_anchors(doc, events, explicit)
        dlt = dlt_anchors(doc, events, explicit)
        bte_pairs = {(pid, e.anchor) for pid, e in bte.items() if e.anchor is not None}
        dlt_pairs = {(pid, e.anchor) for pid, e in dlt.items() if e.anchor is not None}
        assert bte_pairs <= dlt_pairs


def replay_defaults(doc, events, explicit):
    """Independent single-pass replay of the tense-default bookkeeping."""
    predicates = {p.pred_id: p for p in doc.predicates}
    defaults = {}
    expected = {}
    for pred_id in events:
        p = predicates[pred_id]
        if p.pos_class == "NOMINAL":
            expected[pred_id] = explicit[pred_id].value if pred_id in explicit else None
            continue
        if pred_id in explicit:
            defaults[p.tense] = explicit[pred_id].value
            expected[pred_id] = explicit[pred_id].value
        elif p.tense in defaults:
            expected[pred_id] = defaults[p.tense]
        else:
            defaults[p.tense] = doc.dct
            expected[pred_id] = doc.dct
    return expected


def test_inherited_anchor_matches_replay_oracle(tables):
    for doc, events, explicit in all_fixture_anchorings(tables):
        anchored = dlt_anchors(doc, events, explicit)
        expected = replay_defaults(doc, events, explicit)
        for pred_id in events:
            assert anchored[pred_id].anchor == expected[pred_id]


# -- timeline assembly -----------------------------------------------------------

def ev(doc_id, pred_id, sentence, extent, anchor, source=SOURCE_EXPLICIT_TLINK, pos=0):
    return AnchoredEvent(doc_id, pred_id, sentence, extent,
                         None if anchor is None else parse_anchor(anchor),
                         SOURCE_NONE if anchor is None else source,
                         "PAST", (sentence, pos))


def test_equal_anchors_share_ordinal_on_distinct_rows():
    timeline = build_timeline("X", [
        ev("en-1", "p1", 1, "won", "2020-05-01"),
        ev("en-2", "p1", 1, "lost", "2020-05-01"),
    ])
    assert [row.ordinal for row in timeline.rows] == [1, 1]
    assert len(timeline.rows) == 2


def test_singleton_timeline():
    timeline = build_timeline("X", [ev("en-1", "p1", 1, "won", "2020-05-01")])
    assert [row.ordinal for row in timeline.rows] == [1]


def test_mixed_granularity_ordering():
    timeline = build_timeline("X", [
        ev("en-1", "p1", 1, "a", "2007-07-08"),
        ev("en-1", "p2", 2, "b", "2005-06-06"),
        ev("en-1", "p3", 3, "c", "2007-07"),
    ])
    assert [(row.ordinal, row.anchor.isoformat()) for row in timeline.rows] == [
        (1, "2005-06-06"), (2, "2007-07"), (3, "2007-07-08")]


def test_unanchored_event_rejected_with_diagnostic():
    with pytest.raises(DataError, match="en-1/p1"):
        build_timeline("X", [ev("en-1", "p1", 1, "won", None)])


def test_coref_groups_share_a_row():
    events = [ev("en-1", "p1", 1, "won", "2020-05-01"),
              ev("es-1", "p1", 1, "ganado", "2020-05-01")]
    timeline = build_timeline("X", events, coref_groups=[{("en-1", "p1"), ("es-1", "p1")}])
    assert len(timeline.rows) == 1
    assert len(timeline.rows[0].mentions) == 2


def test_coref_groups_must_agree_on_anchor():
    events = [ev("en-1", "p1", 1, "won", "2020-05-01"),
              ev("es-1", "p1", 1, "ganado", "2020-05-02")]
    with pytest.raises(DataError, match="disagree"):
        build_timeline("X", events, coref_groups=[{("en-1", "p1"), ("es-1", "p1")}])


def test_row_order_for_equal_anchors_follows_document_position():
    events = [ev("en-2", "p1", 1, "b", "2020-05-01"),
              ev("en-1", "p9", 2, "a", "2020-05-01"),
              ev("en-1", "p2", 1, "c", "2020-05-01")]
    rng = SplitMix64(5)
    for _ in range(4):
        timeline = build_timeline("X", rng.shuffle(events))
        assert [row.mentions[0].extent for row in timeline.rows] == ["c", "a", "b"]
