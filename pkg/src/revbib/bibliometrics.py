"""Per-sub-field quantitative summaries over approved records.

Pure aggregation: the service layer feeds it records and per-record scores
and persists the result in the per-area cache table.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction

from .domain import ArticleStatus, BibRecord


@dataclass(frozen=True)
class BibliometricsSummary:
    area_id: str
    field_id: str
    subfield_id: str
    paper_count: int
    year_min: int | None
    year_max: int | None
    total_citations: int
    avg_rating_score: float | None
    rater_count: int
    computed_at: datetime

    @property
    def avg_rating_display(self) -> str | None:
        if self.avg_rating_score is None:
            return None
        return f"{self.avg_rating_score:.2f}"

    def to_dict(self) -> dict:
        return {
            "area_id": self.area_id,
            "field_id": self.field_id,
            "subfield_id": self.subfield_id,
            "paper_count": self.paper_count,
            "year_min": self.year_min,
            "year_max": self.year_max,
            "total_citations": self.total_citations,
            "avg_rating_score": self.avg_rating_score,
            "avg_rating_display": self.avg_rating_display,
            "rater_count": self.rater_count,
            "computed_at": self.computed_at.isoformat(),
        }


def summarize_records(
    area_id: str,
    field_id: str,
    subfield_id: str,
    records: list[BibRecord],
    scores: dict[str, float],
    rater_counts: dict[str, int],
    computed_at: datetime,
) -> BibliometricsSummary:
    """Aggregate one sub-field.

    ``records`` may span the area; only approved records on the requested
    path count.  ``scores`` maps record_id to its overall percentage (absent
    when unrated); ``rater_counts`` maps record_id to its distinct rater
    count.  Missing citation counts contribute zero.
    """
    members = [
        r
        for r in records
        if r.status is ArticleStatus.APPROVED
        and r.field_id == field_id
        and r.subfield_id == subfield_id
    ]
    years = [r.year for r in members]
    total_citations = sum(r.citation_count or 0 for r in members)
    member_scores = [
        Fraction(scores[r.record_id]) for r in members if r.record_id in scores
    ]
    avg = float(sum(member_scores) / len(member_scores)) if member_scores else None
    raters = sum(rater_counts.get(r.record_id, 0) for r in members)
    return BibliometricsSummary(
        area_id=area_id,
        field_id=field_id,
        subfield_id=subfield_id,
        paper_count=len(members),
        year_min=min(years) if years else None,
        year_max=max(years) if years else None,
        total_citations=total_citations,
        avg_rating_score=avg,
        rater_count=raters,
        computed_at=computed_at,
    )
