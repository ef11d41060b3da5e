"""Annotation-layer document model and its line-oriented file format.

A document file carries the output of an upstream NLP pipeline: tokens,
predicates with semantic roles, entity mentions with optional knowledge-base
links, normalized time expressions, entity coreference chains, and temporal
links. The format is UTF-8, one record per line:

    #DOC <doc_id> <lang> <dct>        header, tab-separated fields
    #SENT / #PRED / #ENT / #TIMEX / #COREF / #TLINK
                                      section markers; records follow
                                      each marker, tab-separated

See docs/FORMATS.md for the exact grammar. parse_document() rejects
structural problems (unknown markers, dangling ids, duplicates, malformed
anchors) with line-numbered errors; validate_document() re-checks the
semantic invariants of an already-built document and returns violations
as data.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .anchors import TimeAnchor, parse_anchor
from .errors import ParseError

DOC_ID_RE = re.compile(r"^([a-z]{2})-(\d+)$")

POS_VERBAL = "VERBAL"
POS_NOMINAL = "NOMINAL"
POS_CLASSES = (POS_VERBAL, POS_NOMINAL)

TENSE_NONE = "NONE"
TENSES = ("PAST", "PRESENT", "FUTURE", TENSE_NONE)

REL_SIMULTANEOUS = "SIMULTANEOUS"

TIMEX_DATE = "DATE"

_SECTIONS = ("#SENT", "#PRED", "#ENT", "#TIMEX", "#COREF", "#TLINK")


@dataclass(frozen=True)
class Token:
    token_id: str
    surface: str
    start: int  # character offsets, sentence-relative, end exclusive
    end: int


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]


@dataclass(frozen=True)
class PredicateAnnotation:
    pred_id: str
    sentence: int
    span: tuple[str, str]  # first and last token id of the mention
    sense: str
    pos_class: str
    tense: str
    negated: bool
    modal: str | None
    roles: tuple[tuple[str, str], ...]  # (role label, mention or timex id)

    def role_target(self, label: str) -> str | None:
        for role, target in self.roles:
            if role == label:
                return target
        return None


@dataclass(frozen=True)
class EntityMentionAnnotation:
    mention_id: str
    sentence: int
    span: tuple[str, str]
    head: str  # token id, must lie inside the span
    ned_link: str | None


@dataclass(frozen=True)
class TimexAnnotation:
    timex_id: str
    sentence: int
    span: tuple[str, str]
    timex_type: str  # only DATE timexes are eligible as anchors
    value: TimeAnchor


@dataclass(frozen=True)
class TemporalLink:
    source: str  # predicate or timex id
    relation: str  # SIMULTANEOUS | BEFORE | AFTER | anything upstream emits
    target: str


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    language: str
    dct: TimeAnchor  # document creation time, day granularity required
    sentences: tuple[Sentence, ...]
    predicates: tuple[PredicateAnnotation, ...]
    entity_mentions: tuple[EntityMentionAnnotation, ...]
    timexes: tuple[TimexAnnotation, ...]
    coref_chains: tuple[tuple[str, ...], ...]
    tlinks: tuple[TemporalLink, ...]


@dataclass(frozen=True)
class Violation:
    element: str
    message: str

    def __str__(self):
        return f"{self.element}: {self.message}"


def _none_if_dash(field: str) -> str | None:
    return None if field == "-" else field


def _dash_if_none(value: str | None) -> str:
    return "-" if value is None else value


class _Reader:
    def __init__(self, source):
        self.source = source

    def fail(self, line_no, message):
        raise ParseError(message, line=line_no, source=self.source)

    def fields(self, line_no, line, expected, what):
        parts = line.split("\t")
        if len(parts) != expected:
            self.fail(line_no, f"{what} record needs {expected} tab-separated fields, got {len(parts)}")
        return parts

    def positive_int(self, line_no, text, what):
        try:
            value = int(text)
        except ValueError:
            value = 0
        if value <= 0:
            self.fail(line_no, f"{what} must be a positive integer, got {text!r}")
        return value

    def anchor(self, line_no, text, what):
        try:
            return parse_anchor(text)
        except ValueError as exc:
            self.fail(line_no, f"{what}: {exc}")


def parse_document(data: bytes | str, source: str | None = None) -> AnnotatedDocument:
    """Parse one annotation file into a cross-referenced document.

    Record order inside sections is irrelevant: the result is normalized
    (sentences by index, tokens by offset, annotations by document
    position) so equal documents compare equal regardless of input order.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    rd = _Reader(source)

    header = None
    section = None
    sent_records = []
    pred_records = []
    ent_records = []
    timex_records = []
    coref_records = []
    tlink_records = []
    by_section = {
        "#SENT": sent_records,
        "#PRED": pred_records,
        "#ENT": ent_records,
        "#TIMEX": timex_records,
        "#COREF": coref_records,
        "#TLINK": tlink_records,
    }

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            marker = line.split("\t")[0].strip()
            if marker == "#DOC":
                if header is not None:
                    rd.fail(line_no, "duplicate #DOC header")
                header = (line_no, line)
                continue
            if marker not in by_section:
                rd.fail(line_no, f"unknown section marker {marker!r}")
            if line != marker:
                rd.fail(line_no, f"section marker {marker!r} takes no fields")
            if header is None:
                rd.fail(line_no, "section before #DOC header")
            section = marker
            continue
        if header is None:
            rd.fail(line_no, "missing #DOC header")
        if section is None:
            rd.fail(line_no, "record outside any section")
        by_section[section].append((line_no, line))

    if header is None:
        rd.fail(1, "missing #DOC header")
    head_no, head_line = header
    parts = head_line.split("\t")
    if len(parts) != 4:
        rd.fail(head_no, "header needs #DOC <doc_id> <lang> <dct>")
    _, doc_id, language, dct_text = parts
    m = DOC_ID_RE.match(doc_id)
    if m is None:
        rd.fail(head_no, f"document id {doc_id!r} is not <lang>-<digits>")
    if m.group(1) != language:
        rd.fail(head_no, f"document id prefix {m.group(1)!r} does not match language {language!r}")
    dct = rd.anchor(head_no, dct_text, "document creation time")

    # Tokens: sentence index, token id, surface, char start, char end.
    sentences_tokens: dict[int, list[Token]] = {}
    token_sentence: dict[str, int] = {}
    for line_no, line in sent_records:
        sent_s, tok_id, surface, start_s, end_s = rd.fields(line_no, line, 5, "token")
        sent = rd.positive_int(line_no, sent_s, "sentence index")
        if tok_id in token_sentence:
            rd.fail(line_no, f"duplicate token id {tok_id!r}")
        try:
            start, end = int(start_s), int(end_s)
        except ValueError:
            rd.fail(line_no, f"bad character offsets {start_s!r}..{end_s!r}")
        token_sentence[tok_id] = sent
        sentences_tokens.setdefault(sent, []).append(Token(tok_id, surface, start, end))

    sentences = tuple(
        Sentence(idx, tuple(sorted(toks, key=lambda t: (t.start, t.end, t.token_id))))
        for idx, toks in sorted(sentences_tokens.items())
    )
    token_pos = {}
    for s in sentences:
        for i, t in enumerate(s.tokens):
            token_pos[t.token_id] = (s.index, i)

    def check_span(line_no, owner, sent, first, last):
        for tok in (first, last):
            if tok not in token_sentence:
                rd.fail(line_no, f"{owner}: unknown token id {tok!r}")
            if token_sentence[tok] != sent:
                rd.fail(line_no, f"{owner}: token {tok!r} is not in sentence {sent}")
        if token_pos[first][1] > token_pos[last][1]:
            rd.fail(line_no, f"{owner}: span {first!r}..{last!r} is reversed")

    seen_ids: dict[str, int] = {}

    def claim_id(line_no, ann_id):
        if ann_id in seen_ids:
            rd.fail(line_no, f"duplicate annotation id {ann_id!r} (first used on line {seen_ids[ann_id]})")
        seen_ids[ann_id] = line_no

    predicates = []
    for line_no, line in pred_records:
        (pred_id, sent_s, first, last, sense, pos_class, tense,
         neg_s, modal_s, roles_s) = rd.fields(line_no, line, 10, "predicate")
        sent = rd.positive_int(line_no, sent_s, "sentence index")
        claim_id(line_no, pred_id)
        check_span(line_no, f"predicate {pred_id}", sent, first, last)
        if pos_class not in POS_CLASSES:
            rd.fail(line_no, f"predicate {pred_id}: unknown POS class {pos_class!r}")
        if tense not in TENSES:
            rd.fail(line_no, f"predicate {pred_id}: unknown tense {tense!r}")
        if neg_s not in ("y", "n"):
            rd.fail(line_no, f"predicate {pred_id}: negation flag must be y or n, got {neg_s!r}")
        roles = []
        if roles_s != "-":
            seen_labels = set()
            for item in roles_s.split(","):
                if "=" not in item:
                    rd.fail(line_no, f"predicate {pred_id}: bad role {item!r} (expected LABEL=id)")
                label, target = item.split("=", 1)
                if not label or not target:
                    rd.fail(line_no, f"predicate {pred_id}: bad role {item!r}")
                if label in seen_labels:
                    rd.fail(line_no, f"predicate {pred_id}: duplicate role label {label!r}")
                seen_labels.add(label)
                roles.append((label, target))
        predicates.append(PredicateAnnotation(
            pred_id, sent, (first, last), sense, pos_class, tense,
            neg_s == "y", _none_if_dash(modal_s), tuple(sorted(roles)),
        ))

    mentions = []
    for line_no, line in ent_records:
        mention_id, sent_s, first, last, head, ned = rd.fields(line_no, line, 6, "entity mention")
        sent = rd.positive_int(line_no, sent_s, "sentence index")
        claim_id(line_no, mention_id)
        check_span(line_no, f"mention {mention_id}", sent, first, last)
        if head not in token_sentence:
            rd.fail(line_no, f"mention {mention_id}: unknown head token {head!r}")
        mentions.append(EntityMentionAnnotation(mention_id, sent, (first, last), head, _none_if_dash(ned)))

    timexes = []
    for line_no, line in timex_records:
        timex_id, sent_s, first, last, timex_type, value_s = rd.fields(line_no, line, 6, "timex")
        sent = rd.positive_int(line_no, sent_s, "sentence index")
        claim_id(line_no, timex_id)
        check_span(line_no, f"timex {timex_id}", sent, first, last)
        value = rd.anchor(line_no, value_s, f"timex {timex_id} value")
        timexes.append(TimexAnnotation(timex_id, sent, (first, last), timex_type, value))

    mention_ids = {m.mention_id for m in mentions}
    timex_ids = {x.timex_id for x in timexes}
    pred_ids = {p.pred_id for p in predicates}

    for p in predicates:
        for label, target in p.roles:
            if target not in mention_ids and target not in timex_ids:
                raise ParseError(
                    f"predicate {p.pred_id}: role {label} points at unknown id {target!r}",
                    source=source,
                )

    chains = []
    for line_no, line in coref_records:
        ids = [part for part in line.split(",") if part]
        if not ids:
            rd.fail(line_no, "empty coreference chain")
        for mid in ids:
            if mid not in mention_ids:
                rd.fail(line_no, f"coreference chain names unknown mention {mid!r}")
        if len(set(ids)) != len(ids):
            rd.fail(line_no, "coreference chain repeats a mention")
        chains.append(tuple(sorted(ids)))

    tlinks = []
    for line_no, line in tlink_records:
        src, relation, tgt = rd.fields(line_no, line, 3, "temporal link")
        for end in (src, tgt):
            if end not in pred_ids and end not in timex_ids:
                rd.fail(line_no, f"temporal link names unknown id {end!r}")
        tlinks.append(TemporalLink(src, relation, tgt))

    def doc_order(ann):
        return (ann.sentence, token_pos[ann.span[0]][1], token_pos[ann.span[1]][1])

    return AnnotatedDocument(
        doc_id=doc_id,
        language=language,
        dct=dct,
        sentences=sentences,
        predicates=tuple(sorted(predicates, key=lambda p: doc_order(p) + (p.pred_id,))),
        entity_mentions=tuple(sorted(mentions, key=lambda m: doc_order(m) + (m.mention_id,))),
        timexes=tuple(sorted(timexes, key=lambda x: doc_order(x) + (x.timex_id,))),
        coref_chains=tuple(sorted(chains)),
        tlinks=tuple(sorted(tlinks, key=lambda t: (t.source, t.relation, t.target))),
    )


def serialize_document(doc: AnnotatedDocument) -> str:
    """Render a document back to its file format (canonical field order)."""
    out = [f"#DOC\t{doc.doc_id}\t{doc.language}\t{doc.dct.isoformat()}"]
    if doc.sentences:
        out.append("#SENT")
        for s in doc.sentences:
            for t in s.tokens:
                out.append(f"{s.index}\t{t.token_id}\t{t.surface}\t{t.start}\t{t.end}")
    if doc.predicates:
        out.append("#PRED")
        for p in doc.predicates:
            roles = ",".join(f"{label}={target}" for label, target in p.roles) or "-"
            out.append("\t".join([
                p.pred_id, str(p.sentence), p.span[0], p.span[1], p.sense,
                p.pos_class, p.tense, "y" if p.negated else "n",
                _dash_if_none(p.modal), roles,
            ]))
    if doc.entity_mentions:
        out.append("#ENT")
        for m in doc.entity_mentions:
            out.append("\t".join([
                m.mention_id, str(m.sentence), m.span[0], m.span[1],
                m.head, _dash_if_none(m.ned_link),
            ]))
    if doc.timexes:
        out.append("#TIMEX")
        for x in doc.timexes:
            out.append("\t".join([
                x.timex_id, str(x.sentence), x.span[0], x.span[1],
                x.timex_type, x.value.isoformat(),
            ]))
    if doc.coref_chains:
        out.append("#COREF")
        for chain in doc.coref_chains:
            out.append(",".join(chain))
    if doc.tlinks:
        out.append("#TLINK")
        for t in doc.tlinks:
            out.append(f"{t.source}\t{t.relation}\t{t.target}")
    return "\n".join(out) + "\n"


def validate_document(doc: AnnotatedDocument) -> list[Violation]:
    """Check every type invariant; an empty list means the document is valid.

    Violations are data, not errors: callers decide what to do with them.
    """
    violations = []

    def flag(element, message):
        violations.append(Violation(element, message))

    m = DOC_ID_RE.match(doc.doc_id)
    if m is None:
        flag(doc.doc_id, "document id is not <lang>-<digits>")
    elif m.group(1) != doc.language:
        flag(doc.doc_id, f"id prefix {m.group(1)!r} does not match language {doc.language!r}")
    if doc.dct.granularity != "day":
        flag(doc.doc_id, f"document creation time {doc.dct} is not day-granular")

    for expected, s in enumerate(doc.sentences, start=1):
        if s.index != expected:
            flag(f"sentence {s.index}", f"sentence numbers are not consecutive (expected {expected})")
            break

    token_sentence = {}
    for s in doc.sentences:
        prev = None
        for t in s.tokens:
            if t.token_id in token_sentence:
                flag(f"token {t.token_id}", "token id reused")
            token_sentence[t.token_id] = s.index
            if t.start >= t.end:
                flag(f"token {t.token_id}", f"empty or reversed offsets {t.start}..{t.end}")
            if prev is not None and t.start < prev.end:
                flag(f"token {t.token_id}", f"offsets overlap token {prev.token_id}")
            prev = t

    pos_in_sentence = {}
    for s in doc.sentences:
        for i, t in enumerate(s.tokens):
            pos_in_sentence[t.token_id] = i

    def check_span(element, sent, span):
        first, last = span
        for tok in (first, last):
            if tok not in token_sentence:
                flag(element, f"span token {tok!r} does not exist")
                return False
            if token_sentence[tok] != sent:
                flag(element, f"span token {tok!r} is not in sentence {sent}")
                return False
        if pos_in_sentence[first] > pos_in_sentence[last]:
            flag(element, "span is reversed")
            return False
        return True

    mention_ids = {m.mention_id for m in doc.entity_mentions}
    timex_ids = {x.timex_id for x in doc.timexes}
    pred_ids = {p.pred_id for p in doc.predicates}
    all_ids = sorted([p.pred_id for p in doc.predicates]
                     + [m.mention_id for m in doc.entity_mentions]
                     + [x.timex_id for x in doc.timexes])
    for i in range(1, len(all_ids)):
        if all_ids[i] == all_ids[i - 1]:
            flag(all_ids[i], "annotation id reused")

    for p in doc.predicates:
        element = f"predicate {p.pred_id}"
        check_span(element, p.sentence, p.span)
        if p.pos_class not in POS_CLASSES:
            flag(element, f"unknown POS class {p.pos_class!r}")
        if p.tense not in TENSES:
            flag(element, f"unknown tense {p.tense!r}")
        if p.pos_class == POS_NOMINAL and p.tense != TENSE_NONE:
            flag(element, f"nominal predicate carries tense {p.tense}")
        for label, target in p.roles:
            if target not in mention_ids and target not in timex_ids:
                flag(element, f"role {label} points at unknown id {target!r}")

    for mention in doc.entity_mentions:
        element = f"mention {mention.mention_id}"
        if check_span(element, mention.sentence, mention.span):
            first, last = mention.span
            if mention.head not in token_sentence:
                flag(element, f"head token {mention.head!r} does not exist")
            elif not (pos_in_sentence[first] <= pos_in_sentence.get(mention.head, -1)
                      <= pos_in_sentence[last]) or token_sentence[mention.head] != mention.sentence:
                flag(element, f"head token {mention.head!r} lies outside the span")

    for x in doc.timexes:
        check_span(f"timex {x.timex_id}", x.sentence, x.span)

    for chain in doc.coref_chains:
        for mid in chain:
            if mid not in mention_ids:
                flag("coreference chain", f"names unknown mention {mid!r}")

    for t in doc.tlinks:
        element = f"tlink {t.source}->{t.target}"
        if t.source == t.target:
            flag(element, "source equals target")
        for end in (t.source, t.target):
            if end not in pred_ids and end not in timex_ids:
                flag(element, f"names unknown id {end!r}")

    return violations
