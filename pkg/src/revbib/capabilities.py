"""Scenario-dependent capability matrix and the machine-readable endpoint
catalog served to clients in place of a description document.
"""

from __future__ import annotations

from .domain import EVALUATION_SCENARIOS, MODERATED_SCENARIOS, ScenarioConfig

USER_FUNCTIONALITIES = {
    "U1": "add a new review article's bibliographic record",
    "U2": "list review articles in a sub-field",
    "U3": "retrieve bibliometrics for a sub-field",
    "U4": "rate a review article and read its overall score",
    "U5": "retrieve recommended review articles from own ratings",
    "U6": "evaluate a pending (un-approved) article",
}
ADMIN_FUNCTIONALITIES = {
    "A1": "list articles pending decision",
    "A2": "decide a pending article (approve / reject / open for evaluation)",
    "A3": "add, rename or delete a sub-field",
    "A4": "add a new science area with its classification",
}
FUNCTIONALITY_ORDER = [*USER_FUNCTIONALITIES, *ADMIN_FUNCTIONALITIES]


def supported(functionality: str, scenario: int) -> bool:
    if functionality in ("U1", "U2", "U3", "U4", "U5", "A3", "A4"):
        return True
    if functionality == "U6":
        return scenario in EVALUATION_SCENARIOS
    if functionality in ("A1", "A2"):
        return scenario in MODERATED_SCENARIOS
    raise KeyError(functionality)


def functionality_note(functionality: str, scenario: int) -> str | None:
    if functionality in ("A3", "A4") and scenario in (1, 2):
        return "additional role for associate user"
    if functionality in ("A1", "A2") and scenario == 2:
        return (
            "submissions are automatically marked un-approved and opened for "
            "evaluation; no moderation queue exists"
        )
    return None


def capability_matrix(config: ScenarioConfig) -> dict:
    cells = {}
    for key in FUNCTIONALITY_ORDER:
        cells[key] = {
            "supported": supported(key, config.scenario),
            "description": {**USER_FUNCTIONALITIES, **ADMIN_FUNCTIONALITIES}[key],
            "note": functionality_note(key, config.scenario),
        }
    return cells


# (method, path, functionality key or pseudo-key, needs token)
ENDPOINT_CATALOG: list[tuple[str, str, str, bool]] = [
    ("POST", "/api/v1/auth/register", "register", False),
    ("POST", "/api/v1/auth/login", "login", False),
    ("GET", "/api/v1/capabilities", "capabilities", False),
    ("GET", "/api/v1/search", "search", False),
    ("GET", "/api/v1/profile", "profile", True),
    ("PATCH", "/api/v1/profile", "profile", True),
    ("POST", "/api/v1/admin/roles", "grant_role", True),
    ("GET", "/api/v1/metrics", "metrics", True),
    ("GET", "/api/v1/areas", "areas", True),
    ("POST", "/api/v1/areas", "A4", True),
    ("GET", "/api/v1/areas/{area_id}/taxonomy", "taxonomy", True),
    ("POST", "/api/v1/areas/{area_id}/fields/{field_id}/subfields", "A3", True),
    (
        "PATCH",
        "/api/v1/areas/{area_id}/fields/{field_id}/subfields/{subfield_id}",
        "A3",
        True,
    ),
    (
        "DELETE",
        "/api/v1/areas/{area_id}/fields/{field_id}/subfields/{subfield_id}",
        "A3",
        True,
    ),
    ("POST", "/api/v1/areas/{area_id}/records", "U1", True),
    ("GET", "/api/v1/areas/{area_id}/records", "U2", True),
    ("GET", "/api/v1/areas/{area_id}/records/{record_id}", "record", True),
    ("GET", "/api/v1/areas/{area_id}/bibliometrics/{field_id}/{subfield_id}", "U3", True),
    ("POST", "/api/v1/areas/{area_id}/records/{record_id}/rating", "U4", True),
    ("GET", "/api/v1/areas/{area_id}/recommendations", "U5", True),
    ("POST", "/api/v1/areas/{area_id}/records/{record_id}/evaluation", "U6", True),
    ("GET", "/api/v1/areas/{area_id}/records/{record_id}/consensus", "U6", True),
    ("GET", "/api/v1/areas/{area_id}/pending", "A1", True),
    ("POST", "/api/v1/areas/{area_id}/records/{record_id}/decision", "A2", True),
]


def endpoint_catalog(config: ScenarioConfig) -> list[dict]:
    catalog = []
    for method, path, functionality, needs_token in ENDPOINT_CATALOG:
        entry = {
            "method": method,
            "path": path,
            "functionality": functionality,
            "requires_token": needs_token,
        }
        if functionality in FUNCTIONALITY_ORDER:
            entry["supported"] = supported(functionality, config.scenario)
        catalog.append(entry)
    return catalog
