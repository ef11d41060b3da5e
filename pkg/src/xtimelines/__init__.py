"""Entity timeline extraction, temporal-graph scoring, experiment harness."""

from .anchors import TimeAnchor, parse_anchor
from .corpus import AnnotatedDocument, parse_document, serialize_document, validate_document
from .crosslingual import EventContext, crosslingual_coreferent, merge_timelines
from .extraction import (
    AnchoredEvent,
    TargetEntity,
    build_timeline,
    dlt_anchors,
    explicit_anchors,
    find_target_mentions,
    select_events,
)
from .resources import ResourceTables, load_tables
from .scorer import (
    MODES,
    TemporalGraph,
    closure,
    consistency_check,
    micro_average,
    reduce_graph,
    score_pair,
    timeline_to_graph,
)
from .timeline import MentionRef, Timeline, TimelineRow, parse_timeline, serialize_timeline

__version__ = "0.1.0"

__all__ = [
    "AnchoredEvent",
    "AnnotatedDocument",
    "EventContext",
    "MentionRef",
    "MODES",
    "ResourceTables",
    "TargetEntity",
    "TemporalGraph",
    "TimeAnchor",
    "Timeline",
    "TimelineRow",
    "build_timeline",
    "closure",
    "consistency_check",
    "crosslingual_coreferent",
    "dlt_anchors",
    "explicit_anchors",
    "find_target_mentions",
    "load_tables",
    "merge_timelines",
    "micro_average",
    "parse_anchor",
    "parse_document",
    "parse_timeline",
    "reduce_graph",
    "score_pair",
    "select_events",
    "serialize_document",
    "serialize_timeline",
    "timeline_to_graph",
    "validate_document",
]
