"""Tabulated timeline format: parsing, serialization, and row assembly.

A timeline file holds the ordered events of one target entity. The first
line is the entity name; every following line is one row of tab-separated
fields: the ordinal, the time anchor, then one field per event mention
encoded ``doc_id#sentence#extent``. Rows sharing an anchor share an
ordinal; the next strictly later anchor gets the next ordinal. A row with
several mentions groups coreferent mentions of one event instance.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .anchors import TimeAnchor, parse_anchor
from .errors import DataError, ParseError

MENTION_DOC_RE = re.compile(r"^[a-z]{2}-\d+$")


@dataclass(frozen=True)
class MentionRef:
    doc_id: str
    sentence: int
    extent: str

    def key(self) -> tuple:
        return (self.doc_id, self.sentence, self.extent)

    def encode(self) -> str:
        return f"{self.doc_id}#{self.sentence}#{self.extent}"


@dataclass(frozen=True)
class TimelineRow:
    ordinal: int
    anchor: TimeAnchor
    mentions: tuple[MentionRef, ...]


@dataclass(frozen=True)
class Timeline:
    target: str
    rows: tuple[TimelineRow, ...]

    def mentions(self) -> list[MentionRef]:
        return [m for row in self.rows for m in row.mentions]


def _cmp(a, b):
    return (a > b) - (a < b)


def _check_rows(rows, fail):
    """Shared invariant checks; ``fail(row_index, message)`` reports."""
    seen = {}
    anchor_to_ordinal = {}
    ordinal_to_anchor = {}
    for i, row in enumerate(rows):
        if row.ordinal <= 0:
            fail(i, f"ordinal must be positive, got {row.ordinal}")
        if not row.mentions:
            fail(i, "row has no mentions")
        for m in row.mentions:
            if "\t" in m.extent or "#" in m.extent or not m.extent:
                fail(i, f"bad mention extent {m.extent!r}")
            if MENTION_DOC_RE.match(m.doc_id) is None:
                fail(i, f"mention document id {m.doc_id!r} is not <lang>-<digits>")
            if m.key() in seen:
                fail(i, f"mention {m.encode()} already appears in row {seen[m.key()] + 1}")
            seen[m.key()] = i
        key = row.anchor.sort_key()
        if key in anchor_to_ordinal and anchor_to_ordinal[key] != row.ordinal:
            fail(i, f"anchor {row.anchor} appears under ordinals "
                    f"{anchor_to_ordinal[key]} and {row.ordinal}")
        anchor_to_ordinal[key] = row.ordinal
        if row.ordinal in ordinal_to_anchor and ordinal_to_anchor[row.ordinal] != key:
            fail(i, f"ordinal {row.ordinal} carries two different anchors")
        ordinal_to_anchor[row.ordinal] = key
        if i > 0:
            prev = rows[i - 1]
            if row.ordinal < prev.ordinal:
                fail(i, f"ordinals decrease ({prev.ordinal} then {row.ordinal})")
            if _cmp(row.ordinal, prev.ordinal) != _cmp(key, prev.anchor.sort_key()):
                fail(i, f"ordinal order disagrees with anchor order at anchor {row.anchor}")


def parse_timeline(text: str, source: str | None = None) -> Timeline:
    """Parse a timeline file; raises ParseError with the offending line."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing entity name header", line=1, source=source)
    target = lines[0]
    if "\t" in target:
        raise ParseError("entity name line must not contain tabs", line=1, source=source)

    rows = []
    row_lines = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise ParseError(
                f"row needs ordinal, anchor and at least one mention, got {len(fields)} fields",
                line=line_no, source=source)
        try:
            ordinal = int(fields[0])
        except ValueError:
            raise ParseError(f"bad ordinal {fields[0]!r}", line=line_no, source=source)
        try:
            anchor = parse_anchor(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), line=line_no, source=source)
        mentions = []
        for field in fields[2:]:
            parts = field.split("#")
            if len(parts) != 3:
                raise ParseError(f"bad mention field {field!r} (expected doc#sentence#extent)",
                                 line=line_no, source=source)
            doc_id, sent_s, extent = parts
            try:
                sent = int(sent_s)
            except ValueError:
                sent = 0
            if sent <= 0:
                raise ParseError(f"bad sentence number in mention field {field!r}",
                                 line=line_no, source=source)
            mentions.append(MentionRef(doc_id, sent, extent))
        rows.append(TimelineRow(ordinal, anchor, tuple(mentions)))
        row_lines.append(line_no)

    def fail(row_index, message):
        raise ParseError(message, line=row_lines[row_index], source=source)

    _check_rows(rows, fail)
    return Timeline(target, tuple(rows))


def serialize_timeline(timeline: Timeline) -> str:
    """Render a timeline; parse_timeline(serialize_timeline(t)) == t."""

    def fail(row_index, message):
        raise DataError(f"timeline {timeline.target!r}, row {row_index + 1}: {message}")

    if not timeline.target.strip() or "\t" in timeline.target:
        raise DataError(f"bad timeline target name {timeline.target!r}")
    _check_rows(timeline.rows, fail)
    lines = [timeline.target]
    for row in timeline.rows:
        fields = [str(row.ordinal), row.anchor.isoformat()]
        fields.extend(m.encode() for m in row.mentions)
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def assemble_timeline(target: str, groups) -> Timeline:
    """Build a canonical timeline from (anchor, mentions, tie_key) groups.

    Each group becomes one row. Rows are sorted by anchor, then by the
    given tie key (callers pass the document position of the group's
    earliest mention); equal anchors share an ordinal and ordinals grow
    by one per strictly later anchor. Mentions inside a row are sorted.
    """
    prepared = []
    for anchor, mentions, tie_key in groups:
        if anchor is None:
            raise DataError(f"timeline {target!r}: group {mentions!r} has no anchor")
        prepared.append((anchor, tuple(sorted(mentions, key=MentionRef.key)), tie_key))
    prepared.sort(key=lambda g: (g[0].sort_key(), g[2]))

    distinct = []
    for anchor, _, _ in prepared:
        if not distinct or distinct[-1] != anchor.sort_key():
            distinct.append(anchor.sort_key())
    rank = {key: i + 1 for i, key in enumerate(distinct)}

    rows = tuple(TimelineRow(rank[anchor.sort_key()], anchor, mentions)
                 for anchor, mentions, _ in prepared)

    def fail(row_index, message):
        raise DataError(f"timeline {target!r}, row {row_index + 1}: {message}")

    _check_rows(rows, fail)
    return Timeline(target, rows)


def restrict_timeline(timeline: Timeline, doc_ids) -> Timeline:
    """Drop mentions outside ``doc_ids``; rows left empty disappear.

    Ordinals are re-ranked so the result is canonical. Used to restrict a
    gold timeline to the documents of an experiment split.
    """
    keep = set(doc_ids)
    groups = []
    for row in timeline.rows:
        mentions = tuple(m for m in row.mentions if m.doc_id in keep)
        if mentions:
            groups.append((row.anchor, mentions, min(m.key() for m in mentions)))
    restricted = assemble_timeline(timeline.target, groups)
    assert all(m.doc_id in keep for m in restricted.mentions())
    return restricted
