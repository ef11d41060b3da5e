"""Cross-lingual event coreference and timeline merging.

Two anchored events in different languages count as mentions of the same
event when three conditions all hold:

    1. the target entity's mentions filling their roles resolve, through
       knowledge-base redirect and interlanguage links, to the same
       interlingual entity id;
    2. the roles the entity plays are aligned by the predicate role
       matrix;
    3. both events are anchored to exactly the same normalized time
       anchor, including granularity (2007-07 does not match 2007-07-08).

Merging groups mentions by the transitive closure of this pairwise test
(plus any within-language grouping already present as shared rows), so
two English mentions may merge through a shared Spanish one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .anchors import TimeAnchor
from .errors import DataError
from .resources import ResourceTables
from .timeline import Timeline, assemble_timeline


@dataclass(frozen=True)
class EventContext:
    """What the coreference test needs to know about one anchored event."""

    language: str
    predicate_sense: str
    role: str  # role label under which the target entity fills the predicate
    entity_id: str | None  # interlingual id of the role-filling mention, if linked
    anchor: TimeAnchor

    def __post_init__(self):
        if self.anchor is None:
            raise ValueError("cross-lingual coreference operates on anchored events only")


def crosslingual_coreferent(a: EventContext, b: EventContext,
                            tables: ResourceTables) -> bool:
    """The three-condition pairwise test; symmetric in its arguments.

    Only defined across languages: same-language pairs are never merged
    by this test.
    """
    if a.language == b.language:
        return False
    if a.entity_id is None or a.entity_id != b.entity_id:
        return False
    if not tables.align_roles(a.language, a.predicate_sense, a.role,
                              b.language, b.predicate_sense, b.role):
        return False
    return a.anchor == b.anchor


def merge_timelines(timelines, contexts, tables: ResourceTables) -> Timeline:
    """Merge per-language timelines of one target into a single timeline.

    ``contexts`` maps mention keys (doc_id, sentence, extent) to
    EventContext records; mentions without a context simply never merge
    across languages. Rows of the input timelines already group
    within-language coreferent mentions and stay grouped.
    """
    timelines = list(timelines)
    if not timelines:
        raise DataError("nothing to merge")
    targets = {t.target for t in timelines}
    if len(targets) != 1:
        raise DataError(f"cannot merge timelines of different targets: {sorted(targets)}")
    target = timelines[0].target

    mentions = {}  # key -> (MentionRef, anchor)
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra

    for t in timelines:
        for row in t.rows:
            first = None
            for m in row.mentions:
                key = m.key()
                if key in mentions:
                    raise DataError(f"mention {m.encode()} appears in two input timelines")
                mentions[key] = (m, row.anchor)
                parent[key] = key
                if first is None:
                    first = key
                else:
                    union(first, key)

    keys = sorted(mentions)
    with_context = [k for k in keys if k in contexts]
    for i, ka in enumerate(with_context):
        for kb in with_context[i + 1:]:
            if crosslingual_coreferent(contexts[ka], contexts[kb], tables):
                union(ka, kb)

    classes = {}
    for key in keys:
        classes.setdefault(find(key), []).append(key)

    groups = []
    for members in classes.values():
        anchors = {mentions[k][1] for k in members}
        assert len(anchors) == 1, f"merged mentions disagree on anchors: {members}"
        refs = tuple(mentions[k][0] for k in members)
        groups.append((anchors.pop(), refs, min(members)))
    return assemble_timeline(target, groups)
