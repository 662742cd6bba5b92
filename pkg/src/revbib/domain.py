"""Core entity types, roles, and the article lifecycle state machine.

The lifecycle is shared by all six deployment scenarios.  Scenarios differ in
which events are legal:

* scenarios 1-2 have no moderator, so moderator events are illegal there;
* consensus events exist only where social evaluation is offered (2, 4, 6);
* scenario 1 trusts submitters, so records are born Approved and never move.
"""

from __future__ import annotations

import re
import unicodedata
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum

from .errors import ConfigurationError, TransitionError, ValidationError


class ArticleStatus(str, Enum):
    PENDING_MODERATION = "pending_moderation"
    PENDING_EVALUATION = "pending_evaluation"
    APPROVED = "approved"
    REJECTED = "rejected"

    @property
    def terminal(self) -> bool:
        return self in (ArticleStatus.APPROVED, ArticleStatus.REJECTED)


class LifecycleEvent(str, Enum):
    MODERATOR_APPROVE = "moderator_approve"
    MODERATOR_REJECT = "moderator_reject"
    MODERATOR_OPEN_FOR_EVALUATION = "moderator_open_for_evaluation"
    CONSENSUS_APPROVE = "consensus_approve"
    CONSENSUS_REJECT = "consensus_reject"


class Role(str, Enum):
    USER = "user"
    ASSOCIATE_USER = "associate_user"
    MODERATOR = "moderator"


# Scenario sets used for event legality and role existence.
MODERATED_SCENARIOS = frozenset({3, 4, 5, 6})
EVALUATION_SCENARIOS = frozenset({2, 4, 6})
ASSOCIATE_SCENARIOS = frozenset({1, 2})
PRIVATE_SCENARIOS = frozenset({1, 2, 3, 4})
PUBLIC_SCENARIOS = frozenset({5, 6})


def roles_for_scenario(scenario: int) -> frozenset[Role]:
    """Roles that may exist in the given deployment scenario."""
    if scenario in ASSOCIATE_SCENARIOS:
        return frozenset({Role.USER, Role.ASSOCIATE_USER})
    return frozenset({Role.USER, Role.MODERATOR})


@dataclass(frozen=True)
class ScenarioConfig:
    """Deployment scenario plus the knobs that gate every capability."""

    scenario: int
    consensus_threshold: int = 10
    auto_decide: bool = True
    areas: tuple[str, ...] = ("computing",)

    def __post_init__(self):
        if self.scenario not in range(1, 7):
            raise ConfigurationError(f"scenario must be 1-6, got {self.scenario!r}")
        if self.consensus_threshold < 1:
            raise ConfigurationError("consensus_threshold must be >= 1")

    @property
    def environment(self) -> str:
        return "public" if self.scenario in PUBLIC_SCENARIOS else "private"

    @property
    def has_moderator(self) -> bool:
        return self.scenario in MODERATED_SCENARIOS

    @property
    def supports_evaluation(self) -> bool:
        return self.scenario in EVALUATION_SCENARIOS

    @property
    def effective_auto_decide(self) -> bool:
        """Whether consensus triggers the decision without a moderator.

        Scenario 2 has no moderator, so consensus always decides there; the
        configured flag only matters in scenarios 4 and 6.
        """
        if self.scenario == 2:
            return True
        if self.scenario in (4, 6):
            return self.auto_decide
        return False


MIN_YEAR = 1900


@dataclass
class BibRecord:
    """One review/survey article's bibliographic metadata plus lifecycle state."""

    record_id: str
    area_id: str
    field_id: str
    subfield_id: str
    title: str
    authors: list[str]
    venue: str
    year: int
    submitter_id: str
    status: ArticleStatus
    submitted_at: datetime
    citation_count: int | None = None
    keywords: list[str] = field(default_factory=list)
    abstract: str | None = None
    doi: str | None = None
    decided_at: datetime | None = None
    reject_reason: str | None = None

    def validate(self) -> None:
        if not self.title or not self.title.strip():
            raise ValidationError("title must be non-empty")
        if not self.authors or any(not a or not a.strip() for a in self.authors):
            raise ValidationError("authors must be a non-empty list of non-empty names")
        current_year = datetime.now(timezone.utc).year
        if not isinstance(self.year, int) or not MIN_YEAR <= self.year <= current_year + 1:
            raise ValidationError(
                f"year must be an integer in [{MIN_YEAR}, {current_year + 1}], got {self.year!r}"
            )
        if self.citation_count is not None and self.citation_count < 0:
            raise ValidationError("citation_count must be non-negative")
        if (self.decided_at is not None) != self.status.terminal:
            raise ValidationError("decided_at must be present iff status is terminal")

    def with_status(self, status: ArticleStatus, decided_at: datetime | None = None) -> "BibRecord":
        return replace(self, status=status, decided_at=decided_at)

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "area_id": self.area_id,
            "field_id": self.field_id,
            "subfield_id": self.subfield_id,
            "title": self.title,
            "authors": list(self.authors),
            "venue": self.venue,
            "year": self.year,
            "citation_count": self.citation_count,
            "keywords": list(self.keywords),
            "abstract": self.abstract,
            "doi": self.doi,
            "submitter_id": self.submitter_id,
            "status": self.status.value,
            "submitted_at": self.submitted_at.isoformat(),
            "decided_at": None if self.decided_at is None else self.decided_at.isoformat(),
            "reject_reason": self.reject_reason,
        }


def normalized_title(title: str) -> str:
    """Duplicate-detection key: casefolded, accent-stripped, whitespace-collapsed."""
    text = unicodedata.normalize("NFKD", title)
    text = "".join(c for c in text if not unicodedata.combining(c))
    return re.sub(r"\s+", " ", text).strip().casefold()


def new_id() -> str:
    return uuid.uuid4().hex


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def initial_status(config: ScenarioConfig) -> ArticleStatus:
    """Status a freshly submitted record takes under the running scenario."""
    if config.scenario == 1:
        return ArticleStatus.APPROVED
    if config.scenario == 2:
        return ArticleStatus.PENDING_EVALUATION
    return ArticleStatus.PENDING_MODERATION


def transition(
    current: ArticleStatus, event: LifecycleEvent, config: ScenarioConfig
) -> ArticleStatus:
    """Apply a lifecycle event, or raise TransitionError leaving state unchanged.

    Legality rules:

    * terminal states accept no events;
    * moderator events require a scenario with a moderator (3-6);
    * opening for evaluation additionally requires social evaluation (4 or 6)
      and a record still pending moderation;
    * consensus events require an evaluation scenario (2, 4, 6) and a record
      pending evaluation;
    * moderator approve/reject acts on pending-moderation records, and on
      pending-evaluation records only in scenarios 4/6 with auto_decide off
      (the moderator-reviews-evaluations option).
    """
    if current.terminal:
        raise TransitionError(f"{current.value} is terminal; no events accepted")

    if event in (LifecycleEvent.MODERATOR_APPROVE, LifecycleEvent.MODERATOR_REJECT):
        if config.scenario not in MODERATED_SCENARIOS:
            raise TransitionError(f"moderator events are illegal in scenario {config.scenario}")
        if current is ArticleStatus.PENDING_EVALUATION:
            if config.scenario not in (4, 6) or config.effective_auto_decide:
                raise TransitionError(
                    "moderator may decide a pending-evaluation record only in "
                    "scenarios 4/6 with auto_decide disabled"
                )
        return (
            ArticleStatus.APPROVED
            if event is LifecycleEvent.MODERATOR_APPROVE
            else ArticleStatus.REJECTED
        )

    if event is LifecycleEvent.MODERATOR_OPEN_FOR_EVALUATION:
        if config.scenario not in MODERATED_SCENARIOS:
            raise TransitionError(f"moderator events are illegal in scenario {config.scenario}")
        if config.scenario not in (4, 6):
            raise TransitionError(
                f"scenario {config.scenario} does not offer social evaluation"
            )
        if current is not ArticleStatus.PENDING_MODERATION:
            raise TransitionError(f"cannot open a {current.value} record for evaluation")
        return ArticleStatus.PENDING_EVALUATION

    if event in (LifecycleEvent.CONSENSUS_APPROVE, LifecycleEvent.CONSENSUS_REJECT):
        if config.scenario not in EVALUATION_SCENARIOS:
            raise TransitionError(f"consensus events are illegal in scenario {config.scenario}")
        if current is not ArticleStatus.PENDING_EVALUATION:
            raise TransitionError(f"consensus applies to pending-evaluation records, not {current.value}")
        return (
            ArticleStatus.APPROVED
            if event is LifecycleEvent.CONSENSUS_APPROVE
            else ArticleStatus.REJECTED
        )

    raise TransitionError(f"unknown event {event!r}")
