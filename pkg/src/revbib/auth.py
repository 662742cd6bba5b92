"""Registration, credential checks, token issuance, and profile management.

The wire contract is a client-side SHA1 hex digest of the password: the
cleartext never travels and never lands in storage.  Server-side, the
received digest is strengthened into a salted PBKDF2 verifier before it is
stored, so a leaked store does not expose raw SHA1 material.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import re
import secrets
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Callable

from .domain import Role, new_id, utcnow
from .errors import AuthError, ValidationError
from .store import UserStore

DIGEST_RE = re.compile(r"^[0-9a-f]{40}$")
EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")

PBKDF2_ITERATIONS = 100_000
DEFAULT_TOKEN_TTL_HOURS = 24


def sha1_digest(password: str) -> str:
    """The client-side digest computed before credentials leave the user's machine."""
    return hashlib.sha1(password.encode("utf-8")).hexdigest()


def make_verifier(password_digest: str, iterations: int = PBKDF2_ITERATIONS) -> str:
    salt = secrets.token_hex(16)
    derived = hashlib.pbkdf2_hmac(
        "sha256", password_digest.encode("ascii"), bytes.fromhex(salt), iterations
    )
    return f"pbkdf2-sha256${iterations}${salt}${derived.hex()}"


def check_verifier(password_digest: str, verifier: str) -> bool:
    try:
        scheme, iterations, salt, expected = verifier.split("$")
        if scheme != "pbkdf2-sha256":
            return False
        derived = hashlib.pbkdf2_hmac(
            "sha256", password_digest.encode("ascii"), bytes.fromhex(salt), int(iterations)
        )
    except (ValueError, AttributeError):
        return False
    return hmac.compare_digest(derived.hex(), expected)


def generate_token() -> str:
    return secrets.token_urlsafe(32)


@dataclass
class UserProfile:
    user_id: str
    username: str
    first_name: str
    last_name: str
    email: str
    role: Role
    created_at: datetime
    preferences: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "username": self.username,
            "first_name": self.first_name,
            "last_name": self.last_name,
            "email": self.email,
            "role": self.role.value,
            "created_at": self.created_at.isoformat(),
            "preferences": self.preferences,
        }


@dataclass
class AuthToken:
    token: str
    user_id: str
    issued_at: datetime
    expires_at: datetime


def _profile_from_row(row: dict) -> UserProfile:
    return UserProfile(
        user_id=row["user_id"],
        username=row["username"],
        first_name=row["first_name"],
        last_name=row["last_name"],
        email=row["email"],
        role=Role(row["role"]),
        created_at=datetime.fromisoformat(row["created_at"]),
        preferences=json.loads(row["preferences"]),
    )


def validate_digest(password_digest: str) -> str:
    if not isinstance(password_digest, str) or not DIGEST_RE.match(password_digest):
        raise ValidationError(
            "password_digest must be the 40-character lowercase hex SHA1 of the password"
        )
    return password_digest


def validate_email(email: str) -> str:
    if not isinstance(email, str) or not EMAIL_RE.match(email):
        raise ValidationError(f"invalid email address {email!r}")
    return email


class AuthService:
    """Account and session operations over the shared user store."""

    def __init__(
        self,
        users: UserStore,
        token_ttl: timedelta = timedelta(hours=DEFAULT_TOKEN_TTL_HOURS),
        pbkdf2_iterations: int = PBKDF2_ITERATIONS,
        now: Callable[[], datetime] = utcnow,
    ):
        self.users = users
        self.token_ttl = token_ttl
        self.pbkdf2_iterations = pbkdf2_iterations
        self.now = now

    def register(
        self,
        username: str,
        password_digest: str,
        email: str,
        first_name: str = "",
        last_name: str = "",
        role: Role = Role.USER,
    ) -> UserProfile:
        if not username or not username.strip():
            raise ValidationError("username must be non-empty")
        validate_digest(password_digest)
        validate_email(email)
        profile = UserProfile(
            user_id=new_id(),
            username=username.strip(),
            first_name=first_name or "",
            last_name=last_name or "",
            email=email,
            role=role,
            created_at=self.now(),
            preferences={},
        )
        self.users.insert_profile(
            {
                "user_id": profile.user_id,
                "username": profile.username,
                "first_name": profile.first_name,
                "last_name": profile.last_name,
                "email": profile.email,
                "password_verifier": make_verifier(password_digest, self.pbkdf2_iterations),
                "role": profile.role.value,
                "created_at": profile.created_at.isoformat(),
                "preferences": "{}",
            }
        )
        return profile

    def login(self, username: str, password_digest: str) -> AuthToken:
        # Uniform failure: do not reveal whether the username exists.
        failure = AuthError("invalid username or password")
        if not isinstance(password_digest, str) or not DIGEST_RE.match(password_digest or ""):
            raise failure
        row = self.users.get_profile_by_username(username or "")
        if row is None or not check_verifier(password_digest, row["password_verifier"]):
            raise failure
        issued = self.now()
        token = AuthToken(
            token=generate_token(),
            user_id=row["user_id"],
            issued_at=issued,
            expires_at=issued + self.token_ttl,
        )
        self.users.insert_token(token.token, token.user_id, token.issued_at, token.expires_at)
        return token

    def authenticate(self, token: str | None) -> UserProfile:
        if not token:
            raise AuthError("missing authentication token")
        row = self.users.get_token(token)
        if row is None:
            raise AuthError("invalid authentication token")
        if row["expires_at"] <= self.now():
            raise AuthError("authentication token expired")
        profile = self.users.get_profile(row["user_id"])
        if profile is None:
            raise AuthError("token refers to an unknown user")
        return _profile_from_row(profile)

    def update_profile(self, user: UserProfile, changes: dict, current_token: str | None = None) -> UserProfile:
        allowed = {"password_digest", "email", "preferences", "first_name", "last_name"}
        unknown = set(changes) - allowed
        if unknown:
            raise ValidationError(f"cannot update fields: {sorted(unknown)}")
        fields: dict = {}
        if "email" in changes:
            fields["email"] = validate_email(changes["email"])
        if "first_name" in changes:
            fields["first_name"] = str(changes["first_name"])
        if "last_name" in changes:
            fields["last_name"] = str(changes["last_name"])
        if "preferences" in changes:
            prefs = changes["preferences"]
            if not isinstance(prefs, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in prefs.items()
            ):
                raise ValidationError("preferences must be a string-to-string map")
            fields["preferences"] = json.dumps(prefs)
        password_changed = "password_digest" in changes
        if password_changed:
            digest = validate_digest(changes["password_digest"])
            fields["password_verifier"] = make_verifier(digest, self.pbkdf2_iterations)
        with self.users.atomic():
            self.users.update_profile_fields(user.user_id, fields)
            if password_changed:
                # A password change revokes every other outstanding session.
                self.users.delete_tokens_for_user(user.user_id, keep_token=current_token)
        return _profile_from_row(self.users.get_profile(user.user_id))

    def get_profile(self, user_id: str) -> UserProfile | None:
        row = self.users.get_profile(user_id)
        return None if row is None else _profile_from_row(row)

    def get_profile_by_username(self, username: str) -> UserProfile | None:
        row = self.users.get_profile_by_username(username)
        return None if row is None else _profile_from_row(row)

    def set_role(self, user_id: str, role: Role) -> UserProfile:
        self.users.update_profile_fields(user_id, {"role": role.value})
        return _profile_from_row(self.users.get_profile(user_id))
