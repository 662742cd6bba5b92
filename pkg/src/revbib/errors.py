"""Exception hierarchy shared by every revbib module.

Each error carries a stable machine-readable ``code`` so the HTTP layer and
the CLI can map failures without string matching.
"""

from __future__ import annotations


class RevbibError(Exception):
    """Base class for all domain errors."""

    code = "error"
    http_status = 500

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ValidationError(RevbibError):
    code = "validation_error"
    http_status = 400


class ConfigurationError(RevbibError):
    code = "configuration_error"
    http_status = 400


class AuthError(RevbibError):
    """Bad credentials, missing/expired token."""

    code = "unauthorized"
    http_status = 401


class ForbiddenError(RevbibError):
    """Authenticated but lacking the required role."""

    code = "forbidden"
    http_status = 403


class CapabilityError(RevbibError):
    """Functionality not offered by the running deployment scenario."""

    code = "capability_not_supported"
    http_status = 403


class NotFoundError(RevbibError):
    code = "not_found"
    http_status = 404


class ConflictError(RevbibError):
    """Uniqueness violations: duplicate records, usernames, area names."""

    code = "conflict"
    http_status = 409


class StateError(RevbibError):
    """Operation not legal for the record's current lifecycle status."""

    code = "state_error"
    http_status = 409


class TransitionError(StateError):
    """Illegal (status, event, scenario) triple; state left unchanged."""

    code = "transition_error"
    http_status = 409


class PolicyError(RevbibError):
    """Request is well-formed but violates a policy rule (e.g. self-evaluation)."""

    code = "policy_error"
    http_status = 409


class IntegrityError(RevbibError):
    """Referential-integrity violation or corrupt store."""

    code = "integrity_error"
    http_status = 409
