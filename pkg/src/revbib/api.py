"""HTTP+JSON surface over the service core.

Every response carries a machine-readable envelope: ``{"ok": true, ...}`` on
success, ``{"ok": false, "error": {"code", "message"}}`` on failure.  The
capabilities endpoint doubles as the service description document.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .auth import UserProfile
from .errors import RevbibError
from .service import BibService


class RegisterBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    username: str
    password_digest: str
    email: str
    first_name: str = ""
    last_name: str = ""


class LoginBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    username: str
    password_digest: str


class ProfilePatch(BaseModel):
    model_config = ConfigDict(extra="forbid")
    email: str | None = None
    password_digest: str | None = None
    first_name: str | None = None
    last_name: str | None = None
    preferences: dict[str, str] | None = None


class GrantRoleBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    username: str
    role: str


class SubfieldBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str


class RatingBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    quality: int | str
    familiarity: int | str


class EvaluationBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    is_review: bool
    field_id: str | None = None
    subfield_id: str | None = None


class DecisionBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    action: str
    edits: dict | None = None
    reason: str | None = None


def record_payload(service: BibService, record, include_score: bool = True) -> dict:
    payload = record.to_dict()
    if include_score:
        payload["score"] = service.get_score(record.area_id, record.record_id).to_dict()
    return payload


def create_app(service: BibService, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="revbib", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RevbibError)
    async def domain_error(request: Request, exc: RevbibError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"ok": False, "error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "ok": False,
                "error": {"code": "validation_error", "message": str(exc.errors()[:3])},
            },
        )

    def current_user(authorization: str | None = Header(default=None)) -> UserProfile:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return service.authenticate(token)

    def current_token(authorization: str | None = Header(default=None)) -> str | None:
        if authorization and authorization.lower().startswith("bearer "):
            return authorization[7:].strip()
        return None

    # ---- open endpoints --------------------------------------------------

    @app.post("/api/v1/auth/register", status_code=201)
    def register(body: RegisterBody):
        user = service.register(
            body.username, body.password_digest, body.email, body.first_name, body.last_name
        )
        return {"ok": True, "user": user.to_dict()}

    @app.post("/api/v1/auth/login")
    def login(body: LoginBody):
        token = service.login(body.username, body.password_digest)
        user = service.authenticate(token.token)
        return {
            "ok": True,
            "token": token.token,
            "expires_at": token.expires_at.isoformat(),
            "user": user.to_dict(),
        }

    @app.get("/api/v1/capabilities")
    def capabilities():
        return {"ok": True, **service.capabilities()}

    @app.get("/api/v1/search")
    def search(
        q: str = Query(default=""),
        area: str = Query(default="computing"),
        field: str | None = None,
        subfield: str | None = None,
        year_min: int | None = None,
        year_max: int | None = None,
        limit: int = 50,
    ):
        hits = service.search(
            q, area, field_id=field, subfield_id=subfield, year_min=year_min,
            year_max=year_max, limit=limit,
        )
        return {
            "ok": True,
            "results": [
                {**record_payload(service, record), "match_count": count}
                for record, count in hits
            ],
        }

    # ---- profile and roles -------------------------------------------------

    @app.get("/api/v1/profile")
    def get_profile(user: UserProfile = Depends(current_user)):
        return {"ok": True, "user": user.to_dict()}

    @app.patch("/api/v1/profile")
    def patch_profile(
        body: ProfilePatch,
        user: UserProfile = Depends(current_user),
        token: str | None = Depends(current_token),
    ):
        changes = {k: v for k, v in body.model_dump().items() if v is not None}
        updated = service.update_profile(user, changes, current_token=token)
        return {"ok": True, "user": updated.to_dict()}

    @app.post("/api/v1/admin/roles")
    def grant_role(body: GrantRoleBody, user: UserProfile = Depends(current_user)):
        updated = service.grant_role(user, body.username, body.role)
        return {"ok": True, "user": updated.to_dict()}

    @app.get("/api/v1/metrics")
    def metrics(user: UserProfile = Depends(current_user)):
        return {"ok": True, "metrics": service.load_metrics(user)}

    # ---- taxonomy ----------------------------------------------------------

    @app.get("/api/v1/areas")
    def list_areas(user: UserProfile = Depends(current_user)):
        return {"ok": True, "areas": service.list_areas()}

    @app.post("/api/v1/areas", status_code=201)
    def add_area(
        body: dict,
        user: UserProfile = Depends(current_user),
        idempotency_key: str | None = Header(default=None),
    ):
        name = body.get("name", "")
        area = service.add_area(user, name, body, request_id=idempotency_key)
        return {"ok": True, "taxonomy": area.to_dict()}

    @app.get("/api/v1/areas/{area_id}/taxonomy")
    def get_taxonomy(area_id: str, user: UserProfile = Depends(current_user)):
        return {"ok": True, "taxonomy": service.get_taxonomy(area_id).to_dict()}

    @app.post("/api/v1/areas/{area_id}/fields/{field_id}/subfields")
    def add_subfield(
        area_id: str,
        field_id: str,
        body: SubfieldBody,
        user: UserProfile = Depends(current_user),
        idempotency_key: str | None = Header(default=None),
    ):
        area = service.modify_subfield(
            user, area_id, field_id, "add", name=body.name, request_id=idempotency_key
        )
        return {"ok": True, "taxonomy": area.to_dict()}

    @app.patch("/api/v1/areas/{area_id}/fields/{field_id}/subfields/{subfield_id}")
    def rename_subfield(
        area_id: str,
        field_id: str,
        subfield_id: str,
        body: SubfieldBody,
        user: UserProfile = Depends(current_user),
    ):
        area = service.modify_subfield(
            user, area_id, field_id, "rename", name=body.name, subfield_id=subfield_id
        )
        return {"ok": True, "taxonomy": area.to_dict()}

    @app.delete("/api/v1/areas/{area_id}/fields/{field_id}/subfields/{subfield_id}")
    def delete_subfield(
        area_id: str,
        field_id: str,
        subfield_id: str,
        user: UserProfile = Depends(current_user),
    ):
        area = service.modify_subfield(
            user, area_id, field_id, "delete", subfield_id=subfield_id
        )
        return {"ok": True, "taxonomy": area.to_dict()}

    # ---- records -----------------------------------------------------------

    @app.post("/api/v1/areas/{area_id}/records", status_code=201)
    def submit_record(
        area_id: str,
        body: dict,
        user: UserProfile = Depends(current_user),
        idempotency_key: str | None = Header(default=None),
    ):
        record = service.submit_record(user, area_id, body, idempotency_key=idempotency_key)
        return {"ok": True, "record": record_payload(service, record)}

    @app.get("/api/v1/areas/{area_id}/records")
    def list_records(
        area_id: str,
        field: str,
        subfield: str,
        page: int = 1,
        page_size: int | None = None,
        user: UserProfile = Depends(current_user),
    ):
        records = service.list_by_subfield(
            user, area_id, field, subfield, page=page, page_size=page_size
        )
        return {
            "ok": True,
            "page": page,
            "records": [record_payload(service, r) for r in records],
        }

    @app.get("/api/v1/areas/{area_id}/records/{record_id}")
    def get_record(area_id: str, record_id: str, user: UserProfile = Depends(current_user)):
        record = service.get_record(area_id, record_id)
        return {"ok": True, "record": record_payload(service, record)}

    @app.get("/api/v1/areas/{area_id}/bibliometrics/{field_id}/{subfield_id}")
    def bibliometrics(
        area_id: str, field_id: str, subfield_id: str, user: UserProfile = Depends(current_user)
    ):
        summary = service.bibliometrics_summary(area_id, field_id, subfield_id)
        return {"ok": True, "summary": summary.to_dict()}

    @app.post("/api/v1/areas/{area_id}/records/{record_id}/rating")
    def rate(
        area_id: str,
        record_id: str,
        body: RatingBody,
        user: UserProfile = Depends(current_user),
    ):
        score = service.record_rating(user, area_id, record_id, body.quality, body.familiarity)
        return {"ok": True, "score": score.to_dict()}

    @app.get("/api/v1/areas/{area_id}/recommendations")
    def recommend(area_id: str, n: int = 10, user: UserProfile = Depends(current_user)):
        got = service.recommend(user, area_id, n)
        items = []
        for record_id, score in got.items:
            record = service.get_record(area_id, record_id)
            items.append(
                {
                    "record": record_payload(service, record),
                    "predicted_score": score,
                }
            )
        return {"ok": True, "recommendations": items, "generated_at": got.generated_at.isoformat()}

    # ---- evaluation and moderation -------------------------------------------

    @app.post("/api/v1/areas/{area_id}/records/{record_id}/evaluation")
    def evaluate(
        area_id: str,
        record_id: str,
        body: EvaluationBody,
        user: UserProfile = Depends(current_user),
    ):
        decision = service.submit_evaluation(
            user, area_id, record_id, body.is_review, body.field_id, body.subfield_id
        )
        record = service.get_record(area_id, record_id)
        return {"ok": True, "decision": decision.to_dict(), "record_status": record.status.value}

    @app.get("/api/v1/areas/{area_id}/records/{record_id}/consensus")
    def consensus(area_id: str, record_id: str, user: UserProfile = Depends(current_user)):
        return {"ok": True, **service.consensus_status(user, area_id, record_id)}

    @app.get("/api/v1/areas/{area_id}/pending")
    def pending(area_id: str, kind: str, user: UserProfile = Depends(current_user)):
        records = service.list_pending(user, area_id, kind)
        return {"ok": True, "records": [record_payload(service, r) for r in records]}

    @app.post("/api/v1/areas/{area_id}/records/{record_id}/decision")
    def decide(
        area_id: str,
        record_id: str,
        body: DecisionBody,
        user: UserProfile = Depends(current_user),
    ):
        record = service.moderator_decide(
            user, area_id, record_id, body.action, edits=body.edits, reason=body.reason
        )
        return {"ok": True, "record": record_payload(service, record)}

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
