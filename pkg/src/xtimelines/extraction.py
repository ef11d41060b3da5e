"""Timeline extraction: target mentions, event selection, time anchoring.

Two extraction strategies share the first steps and differ in anchoring:

    explicit-only ("bte")  - an event enters the timeline only if a time
                             anchor is explicitly attached to it, either by
                             a SIMULTANEOUS temporal link to a DATE timex
                             or by an ARG-TMP role filled by one.
    document-level ("dlt") - events without an explicit anchor inherit the
                             most recent anchor recorded for their verb
                             tense within the document; if no anchor was
                             recorded yet they fall back to the document
                             creation time. Nominal predicates carry no
                             tense, are never anchored implicitly, and
                             keep only explicit anchors.
"""

from __future__ import annotations

from dataclasses import dataclass

from .anchors import TimeAnchor
from .corpus import AnnotatedDocument, POS_NOMINAL, REL_SIMULTANEOUS, TIMEX_DATE
from .errors import DataError
from .resources import ResourceTables
from .timeline import MentionRef, Timeline, assemble_timeline

SOURCE_EXPLICIT_TLINK = "EXPLICIT_TLINK"
SOURCE_EXPLICIT_ARGTMP = "EXPLICIT_ARGTMP"
SOURCE_INHERITED = "INHERITED"
SOURCE_DCT_FALLBACK = "DCT_FALLBACK"
SOURCE_NONE = "NONE"

AGENT_PATIENT_ROLES = ("ARG0", "ARG1")
TEMPORAL_ROLE = "ARG-TMP"
ALLOWED_MODAL = "will"


@dataclass(frozen=True)
class TargetEntity:
    name: str
    head: str  # head wordform of the name, used for surface matching
    kb_uri: str | None = None

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("target entity name must not be empty")


@dataclass(frozen=True)
class ExplicitAnchor:
    value: TimeAnchor
    source: str  # SOURCE_EXPLICIT_TLINK or SOURCE_EXPLICIT_ARGTMP


@dataclass(frozen=True)
class AnchoredEvent:
    doc_id: str
    pred_id: str
    sentence: int
    extent: str
    anchor: TimeAnchor | None
    anchor_source: str
    tense: str
    position: tuple  # (sentence, span char start) for document-order ties

    def __post_init__(self):
        if (self.anchor is None) != (self.anchor_source == SOURCE_NONE):
            raise ValueError("anchor and anchor_source disagree")

    def mention(self) -> MentionRef:
        return MentionRef(self.doc_id, self.sentence, self.extent)


class DocumentIndex:
    """Precomputed lookups over one immutable document."""

    def __init__(self, doc: AnnotatedDocument):
        self.doc = doc
        self.predicates = {p.pred_id: p for p in doc.predicates}
        self.mentions = {m.mention_id: m for m in doc.entity_mentions}
        self.timexes = {x.timex_id: x for x in doc.timexes}
        self._tokens = {}
        for s in doc.sentences:
            for i, t in enumerate(s.tokens):
                self._tokens[t.token_id] = (s.index, i, t)
        self._sentence_tokens = {s.index: s.tokens for s in doc.sentences}

    def span_tokens(self, sentence, span):
        first = self._tokens[span[0]][1]
        last = self._tokens[span[1]][1]
        return self._sentence_tokens[sentence][first:last + 1]

    def span_surface(self, sentence, span) -> str:
        return " ".join(t.surface for t in self.span_tokens(sentence, span))

    def position(self, annotation) -> tuple:
        start = self._tokens[annotation.span[0]][2].start
        return (annotation.sentence, start)

    def head_surface(self, mention) -> str:
        return self._tokens[mention.head][2].surface


def find_target_mentions(doc: AnnotatedDocument, target: TargetEntity,
                         tables: ResourceTables) -> frozenset[str]:
    """Entity mentions referring to the target, closed under coreference.

    A mention matches when its knowledge-base link resolves to the same
    interlingual id as the target's, or when its head wordform equals the
    target head case-insensitively. Any coreference chain touching a match
    contributes all of its mentions.
    """
    idx = DocumentIndex(doc)
    target_id = tables.resolve_entity(target.kb_uri)
    matched = set()
    for m in doc.entity_mentions:
        if target_id is not None and m.ned_link is not None:
            if tables.resolve_entity(m.ned_link) == target_id:
                matched.add(m.mention_id)
                continue
        if idx.head_surface(m).lower() == target.head.lower():
            matched.add(m.mention_id)

    changed = True
    while changed:
        changed = False
        for chain in doc.coref_chains:
            members = set(chain)
            if members & matched and not members <= matched:
                matched |= members
                changed = True
    return frozenset(matched)


def select_events(doc: AnnotatedDocument, target_mentions) -> list[str]:
    """Predicates whose ARG0 or ARG1 is a target mention, in document order.

    Negated predicates are dropped, as are predicates under a modal verb
    other than "will".
    """
    selected = []
    for p in doc.predicates:  # document order by construction
        if p.negated:
            continue
        if p.modal is not None and p.modal.lower() != ALLOWED_MODAL:
            continue
        if any(target in target_mentions
               for label, target in p.roles if label in AGENT_PATIENT_ROLES):
            selected.append(p.pred_id)
    return selected


def explicit_anchors(doc: AnnotatedDocument, events) -> dict[str, ExplicitAnchor]:
    """Explicit time anchors for the given events.

    Candidates come from SIMULTANEOUS temporal links between the event and
    a DATE timex (either link direction) and from an ARG-TMP role filled
    by a DATE timex. When both disagree the temporal link wins: a typed
    relation is more specific evidence than a role. Among several linked
    timexes the one earliest in the document is used. Events with no
    candidate are absent from the result.
    """
    idx = DocumentIndex(doc)
    out = {}
    for pred_id in events:
        p = idx.predicates[pred_id]
        linked = []
        for t in doc.tlinks:
            if t.relation != REL_SIMULTANEOUS:
                continue
            other = None
            if t.source == pred_id:
                other = t.target
            elif t.target == pred_id:
                other = t.source
            if other is not None and other in idx.timexes:
                timex = idx.timexes[other]
                if timex.timex_type == TIMEX_DATE:
                    linked.append(timex)
        if linked:
            best = min(linked, key=lambda x: idx.position(x) + (x.timex_id,))
            out[pred_id] = ExplicitAnchor(best.value, SOURCE_EXPLICIT_TLINK)
            continue
        tmp = p.role_target(TEMPORAL_ROLE)
        if tmp is not None and tmp in idx.timexes:
            timex = idx.timexes[tmp]
            if timex.timex_type == TIMEX_DATE:
                out[pred_id] = ExplicitAnchor(timex.value, SOURCE_EXPLICIT_ARGTMP)
    return out


def _event(idx, pred_id, anchor, source):
    p = idx.predicates[pred_id]
    return AnchoredEvent(
        doc_id=idx.doc.doc_id,
        pred_id=pred_id,
        sentence=p.sentence,
        extent=idx.span_surface(p.sentence, p.span),
        anchor=anchor,
        anchor_source=source,
        tense=p.tense,
        position=idx.position(p),
    )


def bte_anchors(doc: AnnotatedDocument, events,
                explicit: dict[str, ExplicitAnchor]) -> dict[str, AnchoredEvent]:
    """Explicit-only anchoring: events without an anchor stay unanchored."""
    idx = DocumentIndex(doc)
    out = {}
    for pred_id in events:
        if pred_id in explicit:
            out[pred_id] = _event(idx, pred_id, explicit[pred_id].value, explicit[pred_id].source)
        else:
            out[pred_id] = _event(idx, pred_id, None, SOURCE_NONE)
    return out


def dlt_anchors(doc: AnnotatedDocument, events,
                explicit: dict[str, ExplicitAnchor]) -> dict[str, AnchoredEvent]:
    """Document-level anchoring: inherit per-tense defaults, else the DCT.

    Walks the events of one entity in document order keeping a running
    default anchor per verb tense. An explicit anchor is recorded as the
    new default for its tense; an event without one inherits the default
    for its tense if any, and otherwise is anchored to the document
    creation time, which also becomes the default. Nominal predicates are
    skipped by the default machinery entirely.
    """
    idx = DocumentIndex(doc)
    defaults: dict[str, TimeAnchor] = {}
    out = {}
    for pred_id in events:
        p = idx.predicates[pred_id]
        if p.pos_class == POS_NOMINAL:
            if pred_id in explicit:
                out[pred_id] = _event(idx, pred_id, explicit[pred_id].value, explicit[pred_id].source)
            else:
                out[pred_id] = _event(idx, pred_id, None, SOURCE_NONE)
            continue
        if pred_id in explicit:
            anchor = explicit[pred_id]
            defaults[p.tense] = anchor.value
            out[pred_id] = _event(idx, pred_id, anchor.value, anchor.source)
        elif p.tense in defaults:
            out[pred_id] = _event(idx, pred_id, defaults[p.tense], SOURCE_INHERITED)
        else:
            defaults[p.tense] = doc.dct
            out[pred_id] = _event(idx, pred_id, doc.dct, SOURCE_DCT_FALLBACK)
    return out


def build_timeline(target_name: str, anchored_events, coref_groups=None) -> Timeline:
    """Assemble a timeline from anchored events.

    ``coref_groups`` is an optional list of collections of (doc_id,
    pred_id) keys; events grouped together share a row (coreferent
    mentions of one event instance). Ungrouped events get their own row.
    Every event must carry an anchor; grouped events must agree on it.
    """
    events = list(anchored_events)
    unanchored = [e for e in events if e.anchor is None]
    if unanchored:
        names = ", ".join(f"{e.doc_id}/{e.pred_id}" for e in unanchored)
        raise DataError(f"cannot place unanchored events on a timeline: {names}")

    by_key = {}
    for e in events:
        key = (e.doc_id, e.pred_id)
        if key in by_key:
            raise DataError(f"duplicate event {key}")
        by_key[key] = e

    mention_keys = {}
    for e in events:
        mk = e.mention().key()
        if mk in mention_keys:
            raise DataError(f"events {mention_keys[mk]} and {(e.doc_id, e.pred_id)} "
                            f"render the same mention {mk}")
        mention_keys[mk] = (e.doc_id, e.pred_id)

    grouped = set()
    groups = []
    for group in coref_groups or []:
        members = [by_key[k] for k in group if k in by_key]
        if not members:
            continue
        anchors = {m.anchor for m in members}
        if len(anchors) != 1:
            raise DataError(f"coreferent events disagree on anchors: {sorted(anchors, key=lambda a: a.sort_key())}")
        grouped.update((m.doc_id, m.pred_id) for m in members)
        groups.append(members)
    for e in events:
        if (e.doc_id, e.pred_id) not in grouped:
            groups.append([e])

    rows = []
    for members in groups:
        mentions = tuple(m.mention() for m in members)
        tie = min((m.doc_id,) + m.position for m in members)
        rows.append((members[0].anchor, mentions, tie))
    return assemble_timeline(target_name, rows)
