"""ISO-8601 time anchors at year, month, or day granularity."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering

_ANCHOR_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$")


@total_ordering
@dataclass(frozen=True)
class TimeAnchor:
    """A normalized date: YYYY, YYYY-MM, or YYYY-MM-DD.

    Anchors form a total order in which a missing component sorts before
    any present component at the same position, so 2007 < 2007-01 and
    2007-07 < 2007-07-08: a coarse anchor stands for the earliest point
    of the span it denotes.
    """

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if self.day is not None and self.month is None:
            raise ValueError("a day-granular anchor requires a month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.day is not None and not 1 <= self.day <= 31:
            raise ValueError(f"day out of range: {self.day}")

    @property
    def granularity(self) -> str:
        if self.day is not None:
            return "day"
        if self.month is not None:
            return "month"
        return "year"

    def sort_key(self) -> tuple:
        return (
            self.year,
            0 if self.month is None else 1,
            self.month or 0,
            0 if self.day is None else 1,
            self.day or 0,
        )

    def __lt__(self, other):
        if not isinstance(other, TimeAnchor):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def isoformat(self) -> str:
        if self.day is not None:
            return "%04d-%02d-%02d" % (self.year, self.month, self.day)
        if self.month is not None:
            return "%04d-%02d" % (self.year, self.month)
        return "%04d" % self.year

    def __str__(self) -> str:
        return self.isoformat()


def parse_anchor(text: str) -> TimeAnchor:
    """Parse YYYY[-MM[-DD]]; raises ValueError on anything else."""
    m = _ANCHOR_RE.match(text)
    if m is None:
        raise ValueError(f"malformed time anchor {text!r} (expected YYYY, YYYY-MM or YYYY-MM-DD)")
    year, month, day = m.groups()
    return TimeAnchor(int(year), int(month) if month else None, int(day) if day else None)
