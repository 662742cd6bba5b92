"""Two 3-point rating scales and the normalized overall-score computation.

A single rating contributes quality points (1-3) times familiarity value
(1-3), normalized by 9 into [1/9, 1].  An article's overall score is the
arithmetic mean of those contributions as a percentage, so it lives in
[100/9, 100] whenever at least one rating exists.  All arithmetic is exact
(fractions); floats appear only at the serialization boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import IntEnum
from fractions import Fraction
from typing import Iterable

from .errors import ValidationError


class QualityLevel(IntEnum):
    LOW = 1
    MEDIUM = 2
    HIGH = 3


class FamiliarityLevel(IntEnum):
    LOW = 1
    MODERATE = 2
    EXPERT = 3


def parse_quality(value) -> QualityLevel:
    return _parse_level(value, QualityLevel, "quality")


def parse_familiarity(value) -> FamiliarityLevel:
    return _parse_level(value, FamiliarityLevel, "familiarity")


def _parse_level(value, enum_cls, label):
    if isinstance(value, enum_cls):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"{label} must be 1-3 or a level name")
    if isinstance(value, int):
        try:
            return enum_cls(value)
        except ValueError:
            raise ValidationError(f"{label} must be in 1-3, got {value}")
    if isinstance(value, str):
        try:
            return enum_cls[value.strip().upper()]
        except KeyError:
            raise ValidationError(f"unknown {label} level {value!r}")
    raise ValidationError(f"{label} must be 1-3 or a level name")


@dataclass(frozen=True)
class Rating:
    """One user's (quality, familiarity) assessment of one approved article."""

    user_id: str
    record_id: str
    quality: QualityLevel
    familiarity: FamiliarityLevel
    rated_at: datetime


@dataclass(frozen=True)
class ScorePercent:
    """Overall rating score; value is absent until the first rating arrives."""

    value: float | None
    rating_count: int

    @property
    def display(self) -> str | None:
        if self.value is None:
            return None
        return f"{self.value:.2f}"

    def to_dict(self) -> dict:
        return {
            "score_percent": self.value,
            "score_display": self.display,
            "rating_count": self.rating_count,
        }


def nrs(quality: QualityLevel, familiarity: FamiliarityLevel) -> Fraction:
    """Normalized rating score of a single rating: points * value / 9."""
    return Fraction(int(quality) * int(familiarity), 9)


def overall_score_exact(pairs: Iterable[tuple[QualityLevel, FamiliarityLevel]]) -> tuple[Fraction | None, int]:
    """Exact overall percentage and rater count for a multiset of ratings."""
    total = Fraction(0)
    count = 0
    for quality, familiarity in pairs:
        total += nrs(quality, familiarity)
        count += 1
    if count == 0:
        return None, 0
    return total / count * 100, count


def overall_score(ratings: list[Rating]) -> ScorePercent:
    """Overall score for one record's ratings; refuses mixed record ids."""
    record_ids = {r.record_id for r in ratings}
    if len(record_ids) > 1:
        raise ValidationError(f"ratings span multiple records: {sorted(record_ids)}")
    exact, count = overall_score_exact((r.quality, r.familiarity) for r in ratings)
    return ScorePercent(value=None if exact is None else float(exact), rating_count=count)
