"""Social evaluation of pending articles and consensus detection.

Each user submits one verdict per pending article: scale one says whether
the item is a review/survey article at all, scale two proposes its
classification path.  Verdicts "match" when the full tuple agrees; negative
verdicts match on scale one alone because no path applies to them.  When the
largest matching group reaches the threshold and is the unique largest, the
decision follows that group: approval under its proposed path, or rejection.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import datetime

from .errors import ValidationError

APPROVE = "approve"
REJECT = "reject"
NONE = "none"


@dataclass(frozen=True)
class Evaluation:
    """One user's (is-review, proposed path) verdict on a pending article."""

    user_id: str
    record_id: str
    is_review: bool
    proposed_field_id: str | None
    proposed_subfield_id: str | None
    submitted_at: datetime

    def validate(self) -> None:
        if self.is_review:
            if not self.proposed_field_id or not self.proposed_subfield_id:
                raise ValidationError(
                    "a review verdict must propose a field and sub-field"
                )
        else:
            if self.proposed_field_id or self.proposed_subfield_id:
                raise ValidationError(
                    "a not-review verdict must not propose a classification"
                )

    def group_key(self) -> tuple:
        if not self.is_review:
            return (False,)
        return (True, self.proposed_field_id, self.proposed_subfield_id)


@dataclass(frozen=True)
class ConsensusDecision:
    """Outcome of the threshold check; ``none`` means keep waiting."""

    outcome: str
    supporting_count: int
    field_id: str | None = None
    subfield_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "supporting_count": self.supporting_count,
            "field_id": self.field_id,
            "subfield_id": self.subfield_id,
        }


def tally_groups(evaluations: list[Evaluation]) -> Counter:
    return Counter(e.group_key() for e in evaluations)


def check_consensus(evaluations: list[Evaluation], threshold: int) -> ConsensusDecision:
    """Decide from the current verdict multiset.

    The largest group must reach the threshold *and* be strictly larger than
    every other group; tied qualifying groups defer the decision.
    """
    if threshold < 1:
        raise ValidationError("threshold must be >= 1")
    groups = tally_groups(evaluations)
    if not groups:
        return ConsensusDecision(outcome=NONE, supporting_count=0)
    top_size = max(groups.values())
    leaders = [key for key, size in groups.items() if size == top_size]
    if top_size < threshold or len(leaders) > 1:
        return ConsensusDecision(outcome=NONE, supporting_count=top_size)
    key = leaders[0]
    if key[0]:
        return ConsensusDecision(
            outcome=APPROVE,
            supporting_count=top_size,
            field_id=key[1],
            subfield_id=key[2],
        )
    return ConsensusDecision(outcome=REJECT, supporting_count=top_size)
