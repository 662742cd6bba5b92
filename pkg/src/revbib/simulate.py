"""Synthetic workload simulation: how much evaluation and moderation work
each deployment scenario generates for the same submission volume.

Modeling choices (all surfaced in the report):

* evaluators agree with the submitter's true classification with probability
  ``agreement`` (default 0.9); dissenters split between "not a review" and a
  wrong path;
* in scenarios 4 and 6 the moderator opens half of the queue for evaluation
  and decides the rest directly;
* public deployments (5, 6) see ``public_traffic_factor`` (default 1.5x) more
  submissions than private ones at the same nominal size, reflecting the
  larger audience;
* moderator decision actions count approvals/rejections; opening a record
  for evaluation is tracked separately.

A record that exhausts every eligible evaluator without consensus stays
pending and flags the report incomplete, as does hitting the step cap.
"""

from __future__ import annotations

import random
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

from .domain import ArticleStatus, ScenarioConfig
from .service import BibService, ServiceConfig

DEFAULT_AGREEMENT = 0.9
PUBLIC_TRAFFIC_FACTOR = 1.5
OPEN_FOR_EVALUATION_SHARE = 0.5
APPROVE_SHARE = 0.8

# qualitative buckets over per-role actions per record
BUCKET_CUTOFFS = (0.2, 1.0)


def bucket(actions: int, records: int) -> str:
    if records <= 0:
        return "low"
    per_record = actions / records
    if per_record < BUCKET_CUTOFFS[0]:
        return "low"
    if per_record < BUCKET_CUTOFFS[1]:
        return "medium"
    return "high"


@dataclass(frozen=True)
class LoadReport:
    scenario: int
    environment: str
    n_records: int
    effective_records: int
    n_users: int
    threshold: int
    seed: int
    agreement: float
    public_traffic_factor: float
    submissions: int
    user_evaluation_actions: int
    moderator_decision_actions: int
    moderator_open_actions: int
    auto_decisions: int
    user_bucket: str
    moderator_bucket: str
    complete: bool

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_load(
    scenario: int,
    n_records: int,
    n_users: int,
    seed: int,
    threshold: int = 10,
    agreement: float = DEFAULT_AGREEMENT,
    public_traffic_factor: float = PUBLIC_TRAFFIC_FACTOR,
    data_dir: Path | None = None,
) -> LoadReport:
    """Run one deterministic scenario simulation and report per-role load."""
    rng = random.Random(seed)
    config = ScenarioConfig(
        scenario=scenario, consensus_threshold=threshold, auto_decide=True,
        areas=("computing",),
    )
    factor = public_traffic_factor if config.environment == "public" else 1.0
    effective_records = round(n_records * factor)
    step_cap = max(effective_records * max(n_users, 1) * 3, 1000)

    with tempfile.TemporaryDirectory() as tmp:
        service = BibService(
            ServiceConfig(
                scenario=config,
                data_dir=Path(data_dir) if data_dir else Path(tmp) / "data",
                pbkdf2_iterations=500,
                bootstrap_roles={"sim-moderator": "moderator"} if config.has_moderator else {},
            )
        )
        try:
            return _run(service, config, rng, effective_records, n_records, n_users,
                        seed, agreement, factor, step_cap)
        finally:
            service.close()


def _run(service, config, rng, effective_records, n_records, n_users, seed,
         agreement, factor, step_cap):
    users = [
        service.register(f"sim-user-{i:03d}", "0" * 39 + "1", f"sim{i}@example.org")
        for i in range(n_users)
    ]
    moderator = None
    if config.has_moderator:
        moderator = service.register("sim-moderator", "0" * 39 + "1", "mod@example.org")

    area = service.get_taxonomy("computing")
    paths = [(f.field_id, sf.subfield_id) for f in area.fields for sf in f.subfields]

    records = []
    for i in range(effective_records):
        submitter = rng.choice(users)
        field_id, subfield_id = rng.choice(paths)
        record = service.submit_record(
            submitter,
            "computing",
            {
                "title": f"Simulated Survey {seed}-{i:05d}",
                "authors": [f"Author {i % 7}"],
                "venue": "Synthetic Proceedings",
                "year": rng.randint(1990, 2024),
                "field_id": field_id,
                "subfield_id": subfield_id,
                "keywords": ["synthetic"],
            },
        )
        records.append((record, submitter))

    steps = 0
    capped = False
    for record, submitter in records:
        if steps > step_cap:
            capped = True
            break
        current = service.get_record("computing", record.record_id)
        if current.status is ArticleStatus.PENDING_MODERATION:
            open_it = config.supports_evaluation and rng.random() < OPEN_FOR_EVALUATION_SHARE
            if open_it:
                service.moderator_decide(
                    moderator, "computing", record.record_id, "open_for_evaluation"
                )
                steps += 1
                current = service.get_record("computing", record.record_id)
            else:
                action = "approve" if rng.random() < APPROVE_SHARE else "reject"
                service.moderator_decide(
                    moderator, "computing", record.record_id, action,
                    reason=None if action == "approve" else "synthetic rejection",
                )
                steps += 1
                continue
        if current.status is ArticleStatus.PENDING_EVALUATION:
            steps += _evaluate_until_consensus(
                service, rng, record, submitter, users, paths, agreement
            )

    store = service.storage.open_area("computing")
    non_terminal = len(store.list_records(status=ArticleStatus.PENDING_MODERATION)) + len(
        store.list_records(status=ArticleStatus.PENDING_EVALUATION)
    )
    counters = service.metrics.snapshot()["counters"]
    return LoadReport(
        scenario=config.scenario,
        environment=config.environment,
        n_records=n_records,
        effective_records=effective_records,
        n_users=n_users,
        threshold=config.consensus_threshold,
        seed=seed,
        agreement=agreement,
        public_traffic_factor=factor,
        submissions=counters["submissions"],
        user_evaluation_actions=counters["evaluations_submitted"],
        moderator_decision_actions=counters["moderator_decisions"],
        moderator_open_actions=counters["moderator_opens"],
        auto_decisions=counters["auto_decisions"],
        user_bucket=bucket(counters["evaluations_submitted"], effective_records),
        moderator_bucket=bucket(counters["moderator_decisions"], effective_records),
        complete=(not capped) and non_terminal == 0,
    )


def _evaluate_until_consensus(service, rng, record, submitter, users, paths, agreement) -> int:
    eligible = [u for u in users if u.user_id != submitter.user_id]
    rng.shuffle(eligible)
    true_path = (record.field_id, record.subfield_id)
    actions = 0
    for evaluator in eligible:
        if rng.random() < agreement:
            verdict = (True, *true_path)
        elif rng.random() < 0.5:
            verdict = (False, None, None)
        else:
            wrong = rng.choice([p for p in paths if p != true_path])
            verdict = (True, *wrong)
        decision = service.submit_evaluation(
            evaluator, "computing", record.record_id, verdict[0], verdict[1], verdict[2]
        )
        actions += 1
        if decision.outcome != "none":
            break
    return actions


def simulate_all(
    n_records: int,
    n_users: int,
    seed: int,
    threshold: int = 10,
    agreement: float = DEFAULT_AGREEMENT,
    public_traffic_factor: float = PUBLIC_TRAFFIC_FACTOR,
) -> list[LoadReport]:
    return [
        simulate_load(
            scenario,
            n_records,
            n_users,
            seed,
            threshold=threshold,
            agreement=agreement,
            public_traffic_factor=public_traffic_factor,
        )
        for scenario in range(1, 7)
    ]
