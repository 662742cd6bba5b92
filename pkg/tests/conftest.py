"""Shared fixtures: in-process services per scenario with fast key stretching."""

from __future__ import annotations

import itertools

import pytest

from revbib.auth import sha1_digest
from revbib.domain import ScenarioConfig
from revbib.service import BibService, ServiceConfig

TEST_PASSWORD = "hunter2-Secret!"
TEST_DIGEST = sha1_digest(TEST_PASSWORD)

_counter = itertools.count()


def make_service(
    tmp_path,
    scenario: int,
    threshold: int = 10,
    auto_decide: bool = True,
    bootstrap_roles: dict | None = None,
) -> BibService:
    config = ServiceConfig(
        scenario=ScenarioConfig(
            scenario=scenario,
            consensus_threshold=threshold,
            auto_decide=auto_decide,
            areas=("computing",),
        ),
        data_dir=tmp_path / f"data-{next(_counter)}",
        pbkdf2_iterations=600,
        token_ttl_hours=24,
        bootstrap_roles=bootstrap_roles or {},
    )
    return BibService(config)


def register(service: BibService, username: str):
    profile = service.register(username, TEST_DIGEST, f"{username}@example.org")
    return profile


def draft(i: int = 0, field: str = "networks", sub: str = "network-types", **overrides) -> dict:
    record = {
        "title": f"A Survey of Topic {i}",
        "authors": ["A. Author"],
        "venue": "Journal of Surveys",
        "year": 2010 + (i % 10),
        "field_id": field,
        "subfield_id": sub,
        "keywords": ["survey"],
    }
    record.update(overrides)
    return record


@pytest.fixture
def services(tmp_path):
    created: list[BibService] = []

    def factory(scenario, **kwargs) -> BibService:
        service = make_service(tmp_path, scenario, **kwargs)
        created.append(service)
        return service

    yield factory
    for service in created:
        service.close()
