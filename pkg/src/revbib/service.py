"""The service core: every user (U1-U6) and administrator (A1-A4) operation,
auth, search, capability gating, and load counters.

The HTTP layer and the CLI are thin adapters over this class; the load
simulator drives it in-process.  Capability and role checks run before any
write, so a gated call can never leave partial state behind.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

from . import bibliometrics as biblio
from . import capabilities as caps
from . import evaluation as evalmod
from . import ratings as ratingmod
from . import recommender as recmod
from .auth import AuthService, UserProfile
from .domain import (
    ArticleStatus,
    BibRecord,
    LifecycleEvent,
    Role,
    ScenarioConfig,
    initial_status,
    new_id,
    normalized_title,
    roles_for_scenario,
    transition,
    utcnow,
)
from .errors import (
    CapabilityError,
    ConfigurationError,
    ConflictError,
    ForbiddenError,
    NotFoundError,
    PolicyError,
    StateError,
    ValidationError,
)
from .ratings import FamiliarityLevel, QualityLevel, ScorePercent
from .store import AreaStore, Storage
from .taxonomy import TaxonomyArea, apply_subfield_action, build_area, load_seed

DEFAULT_PAGE_SIZE = 50
MAX_PAGE_SIZE = 500

_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass
class ServiceConfig:
    """Everything needed to boot one deployment."""

    scenario: ScenarioConfig
    data_dir: Path
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    token_ttl_hours: float = 24.0
    pbkdf2_iterations: int = 100_000
    bootstrap_roles: dict[str, str] = field(default_factory=dict)
    page_size: int = DEFAULT_PAGE_SIZE

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ServiceConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("configuration must be a JSON object")
        try:
            scenario = ScenarioConfig(
                scenario=int(raw.get("scenario", 1)),
                consensus_threshold=int(raw.get("consensus_threshold", 10)),
                auto_decide=bool(raw.get("auto_decide", True)),
                areas=tuple(raw.get("areas", ("computing",))),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad scenario settings: {exc}")
        bind = str(raw.get("bind", "127.0.0.1:8080"))
        if ":" not in bind:
            raise ConfigurationError(f"bind must be host:port, got {bind!r}")
        host, _, port_text = bind.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            raise ConfigurationError(f"bind port must be an integer, got {port_text!r}")
        data_dir = Path(raw.get("data_dir", "data"))
        if base_dir is not None and not data_dir.is_absolute():
            data_dir = base_dir / data_dir
        roles = raw.get("bootstrap_roles", {})
        if not isinstance(roles, dict):
            raise ConfigurationError("bootstrap_roles must map usernames to roles")
        return cls(
            scenario=scenario,
            data_dir=data_dir,
            bind_host=host,
            bind_port=port,
            token_ttl_hours=float(raw.get("token_ttl_hours", 24.0)),
            pbkdf2_iterations=int(raw.get("pbkdf2_iterations", 100_000)),
            bootstrap_roles={str(k): str(v) for k, v in roles.items()},
            page_size=int(raw.get("page_size", DEFAULT_PAGE_SIZE)),
        )

    @classmethod
    def from_file(cls, path: Path) -> "ServiceConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text("utf-8"))
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
        return cls.from_dict(raw, base_dir=path.parent)


class LoadMetrics:
    """Monotone in-process counters backing the metrics endpoint."""

    COUNTERS = (
        "submissions",
        "evaluations_submitted",
        "moderator_decisions",
        "moderator_opens",
        "auto_decisions",
    )

    def __init__(self):
        self._lock = threading.Lock()
        self._counts = {name: 0 for name in self.COUNTERS}

    def increment(self, name: str, by: int = 1) -> None:
        with self._lock:
            self._counts[name] += by

    def snapshot(self) -> dict:
        with self._lock:
            counts = dict(self._counts)
        return {
            "counters": counts,
            "per_role": {
                "user": {
                    "submissions": counts["submissions"],
                    "evaluations_submitted": counts["evaluations_submitted"],
                },
                "moderator": {
                    "decisions": counts["moderator_decisions"],
                    "opens": counts["moderator_opens"],
                },
                "system": {"auto_decisions": counts["auto_decisions"]},
            },
        }


class BibService:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.scenario = config.scenario
        self.storage = Storage(config.data_dir)
        self.auth = AuthService(
            self.storage.users(),
            token_ttl=timedelta(hours=config.token_ttl_hours),
            pbkdf2_iterations=config.pbkdf2_iterations,
        )
        self.metrics = LoadMetrics()
        self._ensure_areas()

    def close(self) -> None:
        self.storage.close()

    # ------------------------------------------------------------------ boot

    def _ensure_areas(self) -> None:
        for area_id in self.scenario.areas:
            if self.storage.has_area(area_id):
                continue
            try:
                seed = load_seed(area_id)
            except NotFoundError:
                raise ConfigurationError(
                    f"area {area_id!r} has no store and no packaged seed; "
                    "create it via the add-area operation instead"
                )
            store = self.storage.create_area(seed.area_id)
            store.save_tree(seed.to_dict())

    # ------------------------------------------------------------------ gates

    def _require_capability(self, functionality: str) -> None:
        if not caps.supported(functionality, self.scenario.scenario):
            raise CapabilityError(
                f"{functionality} is not offered in scenario {self.scenario.scenario}"
            )

    def _require_admin(self, actor: UserProfile) -> None:
        needed = Role.ASSOCIATE_USER if self.scenario.scenario in (1, 2) else Role.MODERATOR
        if actor.role is not needed:
            raise ForbiddenError(f"requires the {needed.value} role")

    def _require_moderator(self, actor: UserProfile) -> None:
        if actor.role is not Role.MODERATOR:
            raise ForbiddenError("requires the moderator role")

    # ------------------------------------------------------------------ auth

    def register(
        self,
        username: str,
        password_digest: str,
        email: str,
        first_name: str = "",
        last_name: str = "",
    ) -> UserProfile:
        role = Role.USER
        wanted = self.config.bootstrap_roles.get(username)
        if wanted is not None:
            try:
                role = Role(wanted)
            except ValueError:
                raise ConfigurationError(f"bootstrap role {wanted!r} is unknown")
            self._check_role_exists(role)
        return self.auth.register(username, password_digest, email, first_name, last_name, role)

    def _check_role_exists(self, role: Role) -> None:
        if role not in roles_for_scenario(self.scenario.scenario):
            raise ConfigurationError(
                f"role {role.value!r} does not exist in scenario {self.scenario.scenario}"
            )

    def login(self, username: str, password_digest: str):
        return self.auth.login(username, password_digest)

    def authenticate(self, token: str | None) -> UserProfile:
        return self.auth.authenticate(token)

    def update_profile(self, actor: UserProfile, changes: dict, current_token: str | None = None) -> UserProfile:
        return self.auth.update_profile(actor, changes, current_token)

    def grant_role(self, actor: UserProfile, username: str, role: Role | str) -> UserProfile:
        self._require_admin(actor)
        role = Role(role) if not isinstance(role, Role) else role
        self._check_role_exists(role)
        target = self.auth.get_profile_by_username(username)
        if target is None:
            raise NotFoundError(f"user {username!r} not found")
        return self.auth.set_role(target.user_id, role)

    # ------------------------------------------------------------------ taxonomy

    def list_areas(self) -> list[dict]:
        out = []
        for area_id in self.storage.area_ids():
            tree = self.storage.open_area(area_id).load_tree()
            if tree is not None:
                out.append({"area_id": area_id, "name": tree["name"]})
        return out

    def get_taxonomy(self, area_id: str) -> TaxonomyArea:
        store = self.storage.open_area(area_id)
        tree = store.load_tree()
        if tree is None:
            raise NotFoundError(f"area {area_id!r} has no classification")
        return TaxonomyArea.from_dict(tree)

    def validate_path(self, area_id: str, field_id: str, subfield_id: str) -> bool:
        try:
            area = self.get_taxonomy(area_id)
        except (NotFoundError, ValidationError):
            return False
        return area.has_path(field_id, subfield_id)

    def add_area(self, actor: UserProfile, name: str, tree: dict, request_id: str | None = None) -> TaxonomyArea:
        self._require_capability("A4")
        self._require_admin(actor)
        area = build_area(name, tree)
        existing = {a["name"].casefold() for a in self.list_areas()}
        if name.casefold() in existing or self.storage.has_area(area.area_id):
            if request_id is not None and self.storage.has_area(area.area_id):
                seen = self.storage.open_area(area.area_id).lookup_request(request_id)
                if seen is not None:
                    return self.get_taxonomy(area.area_id)
            raise ConflictError(f"area named {name!r} already exists")
        store = self.storage.create_area(area.area_id)
        with store.atomic():
            store.save_tree(area.to_dict())
            if request_id is not None:
                store.store_request(request_id, "add_area", {"area_id": area.area_id}, utcnow())
        return area

    def modify_subfield(
        self,
        actor: UserProfile,
        area_id: str,
        field_id: str,
        action: str,
        name: str | None = None,
        subfield_id: str | None = None,
        request_id: str | None = None,
    ) -> TaxonomyArea:
        self._require_capability("A3")
        self._require_admin(actor)
        store = self.storage.open_area(area_id)
        with store.atomic():
            if request_id is not None and store.lookup_request(request_id) is not None:
                return self.get_taxonomy(area_id)
            area = self.get_taxonomy(area_id)
            referenced = False
            if action == "delete" and subfield_id is not None:
                referenced = (
                    store.count_path_references(field_id, subfield_id) > 0
                    or store.count_proposed_path_references(field_id, subfield_id) > 0
                )
            apply_subfield_action(
                area, field_id, action, name=name, subfield_id=subfield_id, referenced=referenced
            )
            store.save_tree(area.to_dict())
            if action == "delete" and subfield_id is not None:
                store.delete_summary(field_id, subfield_id)
            if request_id is not None:
                store.store_request(request_id, f"subfield_{action}", {"ok": True}, utcnow())
        return area

    # ------------------------------------------------------------------ records (U1, U2)

    _DRAFT_FIELDS = {
        "title",
        "authors",
        "venue",
        "year",
        "field_id",
        "subfield_id",
        "citation_count",
        "keywords",
        "abstract",
        "doi",
    }

    def _parse_draft(self, actor: UserProfile, area_id: str, draft: dict) -> BibRecord:
        if not isinstance(draft, dict):
            raise ValidationError("record draft must be an object")
        unknown = set(draft) - self._DRAFT_FIELDS
        if unknown:
            raise ValidationError(f"unknown draft fields: {sorted(unknown)}")
        missing = {"title", "authors", "year", "field_id", "subfield_id"} - set(draft)
        if missing:
            raise ValidationError(f"draft is missing fields: {sorted(missing)}")
        authors = draft["authors"]
        if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
            raise ValidationError("authors must be a list of names")
        keywords = draft.get("keywords", [])
        if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
            raise ValidationError("keywords must be a list of strings")
        year = draft["year"]
        if isinstance(year, bool) or not isinstance(year, int):
            raise ValidationError("year must be an integer")
        citation_count = draft.get("citation_count")
        if citation_count is not None and (
            isinstance(citation_count, bool) or not isinstance(citation_count, int)
        ):
            raise ValidationError("citation_count must be an integer")
        now = utcnow()
        status = initial_status(self.scenario)
        record = BibRecord(
            record_id=new_id(),
            area_id=area_id,
            field_id=str(draft["field_id"]),
            subfield_id=str(draft["subfield_id"]),
            title=str(draft["title"]),
            authors=[a.strip() for a in authors],
            venue=str(draft.get("venue", "")),
            year=year,
            citation_count=citation_count,
            keywords=[k.strip() for k in keywords],
            abstract=draft.get("abstract"),
            doi=draft.get("doi"),
            submitter_id=actor.user_id,
            status=status,
            submitted_at=now,
            decided_at=now if status.terminal else None,
        )
        record.validate()
        return record

    def submit_record(
        self, actor: UserProfile, area_id: str, draft: dict, idempotency_key: str | None = None
    ) -> BibRecord:
        self._require_capability("U1")
        store = self.storage.open_area(area_id)
        record = self._parse_draft(actor, area_id, draft)
        with store.atomic():
            if not self.validate_path(area_id, record.field_id, record.subfield_id):
                raise ValidationError(
                    f"classification path {record.field_id}/{record.subfield_id} "
                    f"does not exist in area {area_id!r}"
                )
            if idempotency_key is not None:
                seen = store.lookup_request(idempotency_key)
                if seen is not None:
                    return store.require_record(seen["result"]["record_id"])
            store.insert_record(record, normalized_title(record.title))
            if idempotency_key is not None:
                store.store_request(
                    idempotency_key, "submit_record", {"record_id": record.record_id}, utcnow()
                )
            if record.status is ArticleStatus.APPROVED:
                self._refresh_subfield(store, record.field_id, record.subfield_id)
        self.metrics.increment("submissions")
        return record

    def get_record(self, area_id: str, record_id: str) -> BibRecord:
        return self.storage.open_area(area_id).require_record(record_id)

    def list_by_subfield(
        self,
        actor: UserProfile,
        area_id: str,
        field_id: str,
        subfield_id: str,
        page: int = 1,
        page_size: int | None = None,
    ) -> list[BibRecord]:
        self._require_capability("U2")
        if not self.validate_path(area_id, field_id, subfield_id):
            raise NotFoundError(
                f"no sub-field {field_id}/{subfield_id} in area {area_id!r}"
            )
        if page < 1:
            raise ValidationError("page must be >= 1")
        size = min(page_size or self.config.page_size, MAX_PAGE_SIZE)
        store = self.storage.open_area(area_id)
        return store.list_records(
            status=ArticleStatus.APPROVED,
            field_id=field_id,
            subfield_id=subfield_id,
            order="newest",
            limit=size,
            offset=(page - 1) * size,
        )

    # ------------------------------------------------------------------ search

    @staticmethod
    def _tokens(text: str) -> list[str]:
        return _WORD_RE.findall(text.casefold())

    def search(
        self,
        query: str,
        area_id: str,
        field_id: str | None = None,
        subfield_id: str | None = None,
        year_min: int | None = None,
        year_max: int | None = None,
        limit: int = DEFAULT_PAGE_SIZE,
    ) -> list[tuple[BibRecord, int]]:
        """Keyword search over approved records; (record, match_count) ranked."""
        if not query or not query.strip():
            raise ValidationError("query must be non-empty")
        terms = self._tokens(query)
        if not terms:
            raise ValidationError("query contains no searchable terms")
        store = self.storage.open_area(area_id)
        records = store.list_records(
            status=ArticleStatus.APPROVED, field_id=field_id, subfield_id=subfield_id
        )
        term_set = set(terms)
        hits: list[tuple[BibRecord, int]] = []
        for record in records:
            if year_min is not None and record.year < year_min:
                continue
            if year_max is not None and record.year > year_max:
                continue
            haystack = self._tokens(record.title)
            for kw in record.keywords:
                haystack.extend(self._tokens(kw))
            if record.abstract:
                haystack.extend(self._tokens(record.abstract))
            count = sum(1 for token in haystack if token in term_set)
            if count > 0:
                hits.append((record, count))
        hits.sort(
            key=lambda pair: (
                -pair[1],
                -pair[0].year,
                -pair[0].submitted_at.timestamp(),
                pair[0].record_id,
            )
        )
        return hits[:limit]

    # ------------------------------------------------------------------ ratings (U4)

    def record_rating(
        self,
        actor: UserProfile,
        area_id: str,
        record_id: str,
        quality: QualityLevel | int | str,
        familiarity: FamiliarityLevel | int | str,
    ) -> ScorePercent:
        self._require_capability("U4")
        q = ratingmod.parse_quality(quality)
        f = ratingmod.parse_familiarity(familiarity)
        store = self.storage.open_area(area_id)
        with store.atomic():
            record = store.require_record(record_id)
            if record.status is not ArticleStatus.APPROVED:
                raise StateError(
                    f"record {record_id!r} is {record.status.value}; only approved "
                    "articles can be rated"
                )
            store.upsert_detailed_rating(record_id, actor.user_id, int(q), int(f), utcnow())
            score = self._recompute_score(store, record_id)
            self._refresh_subfield(store, record.field_id, record.subfield_id)
        return score

    def _recompute_score(self, store: AreaStore, record_id: str) -> ScorePercent:
        detailed = store.fetch_detailed_ratings(record_id)
        exact, count = ratingmod.overall_score_exact(
            (QualityLevel(q), FamiliarityLevel(f)) for _, q, f, _ in detailed
        )
        score = ScorePercent(value=None if exact is None else float(exact), rating_count=count)
        store.set_cached_score(record_id, score.value, score.rating_count, utcnow())
        return score

    def get_score(self, area_id: str, record_id: str) -> ScorePercent:
        store = self.storage.open_area(area_id)
        store.require_record(record_id)
        cached = store.get_cached_score(record_id)
        if cached is None:
            return ScorePercent(value=None, rating_count=0)
        return ScorePercent(value=cached[0], rating_count=cached[1])

    def rebuild_score_cache(self, area_id: str) -> int:
        """Drop and rebuild every cached score from the detailed table."""
        store = self.storage.open_area(area_id)
        with store.atomic():
            store.clear_cached_scores()
            record_ids = sorted({rid for rid, *_ in store.all_detailed_ratings()})
            for rid in record_ids:
                self._recompute_score(store, rid)
        return len(record_ids)

    # ------------------------------------------------------------------ bibliometrics (U3)

    def _refresh_subfield(self, store: AreaStore, field_id: str, subfield_id: str) -> biblio.BibliometricsSummary:
        records = store.list_records(field_id=field_id, subfield_id=subfield_id)
        scores: dict[str, float] = {}
        rater_counts: dict[str, int] = {}
        for record in records:
            cached = store.get_cached_score(record.record_id)
            if cached is not None:
                if cached[0] is not None:
                    scores[record.record_id] = cached[0]
                rater_counts[record.record_id] = cached[1]
        summary = biblio.summarize_records(
            store.area_id, field_id, subfield_id, records, scores, rater_counts, utcnow()
        )
        row = summary.to_dict()
        row.pop("area_id")
        row.pop("avg_rating_display")
        row["computed_at"] = summary.computed_at.isoformat()
        store.upsert_summary(row)
        return summary

    def bibliometrics_summary(
        self, area_id: str, field_id: str, subfield_id: str
    ) -> biblio.BibliometricsSummary:
        self._require_capability("U3")
        if not self.validate_path(area_id, field_id, subfield_id):
            raise NotFoundError(f"no sub-field {field_id}/{subfield_id} in area {area_id!r}")
        store = self.storage.open_area(area_id)
        cached = store.get_summary(field_id, subfield_id)
        if cached is None:
            with store.atomic():
                return self._refresh_subfield(store, field_id, subfield_id)
        return biblio.BibliometricsSummary(
            area_id=area_id,
            field_id=cached["field_id"],
            subfield_id=cached["subfield_id"],
            paper_count=cached["paper_count"],
            year_min=cached["year_min"],
            year_max=cached["year_max"],
            total_citations=cached["total_citations"],
            avg_rating_score=cached["avg_rating_score"],
            rater_count=cached["rater_count"],
            computed_at=datetime.fromisoformat(cached["computed_at"]),
        )

    def refresh_bibliometrics(self, area_id: str) -> int:
        area = self.get_taxonomy(area_id)
        store = self.storage.open_area(area_id)
        written = 0
        with store.atomic():
            for f in area.fields:
                for sf in f.subfields:
                    self._refresh_subfield(store, f.field_id, sf.subfield_id)
                    written += 1
        return written

    # ------------------------------------------------------------------ recommendations (U5)

    def recommend_for(self, user_id: str, area_id: str, n: int) -> recmod.RecommendationList:
        self._require_capability("U5")
        if n < 1:
            raise ValidationError("n must be >= 1")
        if self.auth.get_profile(user_id) is None:
            raise NotFoundError(f"user {user_id!r} not found")
        store = self.storage.open_area(area_id)
        approved = {
            r.record_id for r in store.list_records(status=ArticleStatus.APPROVED)
        }
        rows = [
            row for row in store.all_detailed_ratings() if row[0] in approved
        ]
        matrix = recmod.build_matrix(rows)
        items = recmod.recommend_from_matrix(matrix, user_id, n)
        return recmod.RecommendationList(user_id=user_id, items=items, generated_at=utcnow())

    def recommend(self, actor: UserProfile, area_id: str, n: int) -> recmod.RecommendationList:
        return self.recommend_for(actor.user_id, area_id, n)

    # ------------------------------------------------------------------ evaluation (U6, A1, A2)

    def submit_evaluation(
        self,
        actor: UserProfile,
        area_id: str,
        record_id: str,
        is_review: bool,
        proposed_field_id: str | None = None,
        proposed_subfield_id: str | None = None,
    ) -> evalmod.ConsensusDecision:
        self._require_capability("U6")
        ev = evalmod.Evaluation(
            user_id=actor.user_id,
            record_id=record_id,
            is_review=bool(is_review),
            proposed_field_id=proposed_field_id,
            proposed_subfield_id=proposed_subfield_id,
            submitted_at=utcnow(),
        )
        ev.validate()
        store = self.storage.open_area(area_id)
        auto_decided = False
        with store.atomic():
            record = store.require_record(record_id)
            if record.status is not ArticleStatus.PENDING_EVALUATION:
                raise StateError(
                    f"record {record_id!r} is {record.status.value}, not open for evaluation"
                )
            if actor.user_id == record.submitter_id:
                raise PolicyError("submitters may not evaluate their own records")
            if ev.is_review and not self.validate_path(
                area_id, ev.proposed_field_id, ev.proposed_subfield_id
            ):
                raise ValidationError(
                    f"proposed path {ev.proposed_field_id}/{ev.proposed_subfield_id} "
                    f"does not exist in area {area_id!r}"
                )
            store.upsert_evaluation(
                record_id,
                ev.user_id,
                ev.is_review,
                ev.proposed_field_id,
                ev.proposed_subfield_id,
                ev.submitted_at,
            )
            decision = self._check_consensus(store, record_id)
            if decision.outcome != evalmod.NONE and self.scenario.effective_auto_decide:
                self._apply_consensus(store, record, decision)
                auto_decided = True
        self.metrics.increment("evaluations_submitted")
        if auto_decided:
            self.metrics.increment("auto_decisions")
        return decision

    def _check_consensus(self, store: AreaStore, record_id: str) -> evalmod.ConsensusDecision:
        evaluations = [
            evalmod.Evaluation(
                user_id=row[0],
                record_id=record_id,
                is_review=bool(row[1]),
                proposed_field_id=row[2],
                proposed_subfield_id=row[3],
                submitted_at=datetime.fromisoformat(row[4]),
            )
            for row in store.fetch_evaluations(record_id)
        ]
        return evalmod.check_consensus(evaluations, self.scenario.consensus_threshold)

    def _apply_consensus(
        self, store: AreaStore, record: BibRecord, decision: evalmod.ConsensusDecision
    ) -> BibRecord:
        if decision.outcome == evalmod.APPROVE:
            event = LifecycleEvent.CONSENSUS_APPROVE
            record = replace(
                record,
                field_id=decision.field_id,
                subfield_id=decision.subfield_id,
            )
        else:
            event = LifecycleEvent.CONSENSUS_REJECT
        new_status = transition(record.status, event, self.scenario)
        record = record.with_status(new_status, decided_at=utcnow())
        store.update_record(record, normalized_title(record.title))
        if new_status is ArticleStatus.APPROVED:
            self._refresh_subfield(store, record.field_id, record.subfield_id)
        return record

    def consensus_status(self, actor: UserProfile, area_id: str, record_id: str) -> dict:
        self._require_capability("U6")
        store = self.storage.open_area(area_id)
        store.require_record(record_id)
        rows = store.fetch_evaluations(record_id)
        decision = self._check_consensus(store, record_id)
        groups = []
        tally = {}
        for row in rows:
            key = (bool(row[1]), row[2], row[3])
            tally[key] = tally.get(key, 0) + 1
        for (is_review, f, s), count in sorted(tally.items(), key=lambda kv: -kv[1]):
            groups.append(
                {
                    "is_review": is_review,
                    "field_id": f,
                    "subfield_id": s,
                    "count": count,
                }
            )
        return {
            "record_id": record_id,
            "evaluation_count": len(rows),
            "groups": groups,
            "threshold": self.scenario.consensus_threshold,
            "would_decide": decision.to_dict(),
            "auto_decide": self.scenario.effective_auto_decide,
        }

    def list_pending(
        self, actor: UserProfile, area_id: str, kind: str
    ) -> list[BibRecord]:
        if kind == "moderation":
            self._require_capability("A1")
            self._require_moderator(actor)
            status = ArticleStatus.PENDING_MODERATION
        elif kind == "evaluation":
            self._require_capability("U6")
            status = ArticleStatus.PENDING_EVALUATION
        else:
            raise ValidationError(f"kind must be 'moderation' or 'evaluation', got {kind!r}")
        store = self.storage.open_area(area_id)
        return store.list_records(status=status, order="oldest")

    _EDITABLE = {
        "title",
        "authors",
        "venue",
        "year",
        "citation_count",
        "keywords",
        "abstract",
        "doi",
        "field_id",
        "subfield_id",
    }

    def moderator_decide(
        self,
        actor: UserProfile,
        area_id: str,
        record_id: str,
        action: str,
        edits: dict | None = None,
        reason: str | None = None,
    ) -> BibRecord:
        self._require_capability("A2")
        self._require_moderator(actor)
        if action not in ("approve", "reject", "open_for_evaluation"):
            raise ValidationError(f"unknown decision action {action!r}")
        if action == "open_for_evaluation" and self.scenario.scenario not in (4, 6):
            raise CapabilityError(
                f"scenario {self.scenario.scenario} does not offer social evaluation"
            )
        store = self.storage.open_area(area_id)
        with store.atomic():
            record = store.require_record(record_id)
            if action == "approve":
                if edits:
                    record = self._apply_edits(area_id, record, edits)
                new_status = transition(record.status, LifecycleEvent.MODERATOR_APPROVE, self.scenario)
                record = record.with_status(new_status, decided_at=utcnow())
                store.update_record(record, normalized_title(record.title))
                self._refresh_subfield(store, record.field_id, record.subfield_id)
            elif action == "reject":
                new_status = transition(record.status, LifecycleEvent.MODERATOR_REJECT, self.scenario)
                record = replace(
                    record,
                    status=new_status,
                    decided_at=utcnow(),
                    reject_reason=reason,
                )
                store.update_record(record, normalized_title(record.title))
            else:
                new_status = transition(
                    record.status, LifecycleEvent.MODERATOR_OPEN_FOR_EVALUATION, self.scenario
                )
                record = record.with_status(new_status)
                store.update_record(record, normalized_title(record.title))
        if action in ("approve", "reject"):
            self.metrics.increment("moderator_decisions")
        else:
            self.metrics.increment("moderator_opens")
        return record

    def _apply_edits(self, area_id: str, record: BibRecord, edits: dict) -> BibRecord:
        unknown = set(edits) - self._EDITABLE
        if unknown:
            raise ValidationError(f"cannot edit fields: {sorted(unknown)}")
        record = replace(record, **edits)
        record.validate()
        if not self.validate_path(area_id, record.field_id, record.subfield_id):
            raise ValidationError(
                f"classification path {record.field_id}/{record.subfield_id} "
                f"does not exist in area {area_id!r}"
            )
        return record

    # ------------------------------------------------------------------ capabilities & metrics

    def capabilities(self) -> dict:
        return {
            "service": "revbib",
            "scenario": self.scenario.scenario,
            "environment": self.scenario.environment,
            "consensus_threshold": self.scenario.consensus_threshold,
            "auto_decide": self.scenario.effective_auto_decide,
            "roles": sorted(r.value for r in roles_for_scenario(self.scenario.scenario)),
            "functionality": caps.capability_matrix(self.scenario),
            "areas": self.list_areas(),
            "endpoints": caps.endpoint_catalog(self.scenario),
        }

    def load_metrics(self, actor: UserProfile) -> dict:
        if actor.role not in (Role.MODERATOR, Role.ASSOCIATE_USER):
            raise ForbiddenError("metrics require a privileged role")
        return self.metrics.snapshot()

    # ------------------------------------------------------------------ maintenance

    def export_area(self, area_id: str, dest_dir: Path) -> list[Path]:
        return self.storage.open_area(area_id).export_jsonl(dest_dir)

    def export_users(self, dest_dir: Path) -> list[Path]:
        return self.storage.users().export_jsonl(dest_dir)
