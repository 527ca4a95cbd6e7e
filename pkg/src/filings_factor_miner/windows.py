"""Half-open calendar windows used for filing and trading-date filters."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

from .errors import InputError


@dataclass(frozen=True, order=True)
class DateRange:
    """Half-open interval [start, end) over calendar dates."""

    start: date
    end: date

    def __post_init__(self):
        if self.start >= self.end:
            raise InputError(f"empty date range: {self.start} .. {self.end}")

    def contains(self, d: date) -> bool:
        return self.start <= d < self.end

    def overlaps(self, other: "DateRange") -> bool:
        return self.start < other.end and other.start < self.end

    @classmethod
    def parse(cls, start: str, end: str) -> "DateRange":
        try:
            return cls(date.fromisoformat(start), date.fromisoformat(end))
        except ValueError as exc:
            raise InputError(f"bad date range ({start!r}, {end!r}): {exc}") from exc

    def union_span(self, other: "DateRange") -> "DateRange":
        return DateRange(min(self.start, other.start), max(self.end, other.end))
