"""Operator and power-user command line: run the service, import records in
bulk, exercise every endpoint, and run the load simulation.

Exit codes: 0 success, 1 operation failure, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from .auth import sha1_digest
from .errors import ConfigurationError, RevbibError
from .service import BibService, ServiceConfig

DEFAULT_URL = "http://127.0.0.1:8080"


class CommandError(Exception):
    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code


class ApiClient:
    def __init__(self, url: str, token: str | None = None):
        headers = {}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(base_url=url.rstrip("/"), headers=headers, timeout=30)

    def request(self, method: str, path: str, **kwargs) -> dict:
        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise CommandError(f"cannot reach service: {exc}")
        try:
            body = response.json()
        except ValueError:
            raise CommandError(f"non-JSON response (HTTP {response.status_code})")
        if response.status_code >= 400 or not body.get("ok", False):
            error = body.get("error", {})
            raise CommandError(
                f"{error.get('code', 'error')}: {error.get('message', response.text)}"
            )
        return body

    def close(self) -> None:
        self._client.close()


def _emit(args, body: dict, human: str | list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(body, indent=2, sort_keys=True))
        return
    if isinstance(human, str):
        print(human)
    else:
        for line in human:
            print(line)


def _record_line(record: dict) -> str:
    score = record.get("score") or {}
    display = score.get("score_display")
    suffix = f" score={display}%" if display else ""
    return (
        f"{record['record_id']}  [{record['status']}]  {record['title']} "
        f"({record['year']}) {record['field_id']}/{record['subfield_id']}{suffix}"
    )


def _load_config(args) -> ServiceConfig:
    config = ServiceConfig.from_file(Path(args.config))
    bind = os.environ.get("REVBIB_BIND")
    if bind:
        host, _, port = bind.rpartition(":")
        try:
            config.bind_host, config.bind_port = host, int(port)
        except ValueError:
            raise ConfigurationError(f"REVBIB_BIND must be host:port, got {bind!r}")
    data_dir = os.environ.get("REVBIB_DATA_DIR")
    if data_dir:
        config.data_dir = Path(data_dir)
    return config


def _digest_from(args) -> str:
    if getattr(args, "password_digest", None):
        return args.password_digest
    if getattr(args, "password", None):
        # the digest is computed locally; the cleartext never leaves this process
        return sha1_digest(args.password)
    raise CommandError("provide --password or --password-digest", exit_code=2)


# --------------------------------------------------------------------- serve

def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    try:
        config = _load_config(args)
    except ConfigurationError as exc:
        print(f"config error: {exc.message}", file=sys.stderr)
        return 2
    if args.bind:
        host, _, port_text = args.bind.rpartition(":")
        try:
            config.bind_host, config.bind_port = host, int(port_text)
        except ValueError:
            print(f"config error: --bind must be host:port, got {args.bind!r}", file=sys.stderr)
            return 2
    try:
        service = BibService(config)
    except RevbibError as exc:
        print(f"config error: {exc.message}", file=sys.stderr)
        return 2
    app = create_app(service, ui_dir=Path(args.ui_dir) if args.ui_dir else None)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="warning")
    service.close()
    return 0


# --------------------------------------------------------------------- account commands

def cmd_register(args) -> int:
    client = ApiClient(args.url)
    body = client.request(
        "POST",
        "/api/v1/auth/register",
        json={
            "username": args.username,
            "password_digest": _digest_from(args),
            "email": args.email,
            "first_name": args.first_name,
            "last_name": args.last_name,
        },
    )
    _emit(args, body, f"registered {body['user']['username']} ({body['user']['user_id']})")
    return 0


def cmd_login(args) -> int:
    client = ApiClient(args.url)
    body = client.request(
        "POST",
        "/api/v1/auth/login",
        json={"username": args.username, "password_digest": _digest_from(args)},
    )
    _emit(args, body, body["token"])
    return 0


def cmd_grant_role(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request(
        "POST", "/api/v1/admin/roles", json={"username": args.username, "role": args.role}
    )
    _emit(args, body, f"{args.username} is now {body['user']['role']}")
    return 0


# --------------------------------------------------------------------- service queries

def cmd_capabilities(args) -> int:
    client = ApiClient(args.url)
    body = client.request("GET", "/api/v1/capabilities")
    lines = [
        f"scenario {body['scenario']} ({body['environment']}), "
        f"threshold {body['consensus_threshold']}, auto_decide {body['auto_decide']}"
    ]
    for key, cell in body["functionality"].items():
        flag = "yes" if cell["supported"] else "no"
        note = f" ({cell['note']})" if cell.get("note") else ""
        lines.append(f"  {key}: {flag}{note}  {cell['description']}")
    lines.append("areas: " + ", ".join(a["area_id"] for a in body["areas"]))
    _emit(args, body, lines)
    return 0


def cmd_metrics(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request("GET", "/api/v1/metrics")
    counters = body["metrics"]["counters"]
    _emit(args, body, [f"{k}: {v}" for k, v in counters.items()])
    return 0


def cmd_search(args) -> int:
    client = ApiClient(args.url)
    params = {"q": args.query, "area": args.area}
    if args.field:
        params["field"] = args.field
    if args.subfield:
        params["subfield"] = args.subfield
    if args.year_min is not None:
        params["year_min"] = args.year_min
    if args.year_max is not None:
        params["year_max"] = args.year_max
    body = client.request("GET", "/api/v1/search", params=params)
    lines = [
        f"[{hit['match_count']}] " + _record_line(hit) for hit in body["results"]
    ] or ["no matches"]
    _emit(args, body, lines)
    return 0


# --------------------------------------------------------------------- records

def _draft_from(args) -> dict:
    if args.file:
        try:
            return json.loads(Path(args.file).read_text("utf-8"))
        except OSError as exc:
            raise CommandError(f"cannot read draft file: {exc}", exit_code=2)
        except json.JSONDecodeError as exc:
            raise CommandError(f"draft file is not valid JSON: {exc}", exit_code=2)
    if not (args.title and args.authors and args.year and args.field and args.subfield):
        raise CommandError(
            "provide --file or all of --title/--authors/--year/--field/--subfield",
            exit_code=2,
        )
    draft = {
        "title": args.title,
        "authors": [a.strip() for a in args.authors.split(";") if a.strip()],
        "venue": args.venue or "",
        "year": args.year,
        "field_id": args.field,
        "subfield_id": args.subfield,
    }
    if args.keywords:
        draft["keywords"] = [k.strip() for k in args.keywords.split(",") if k.strip()]
    if args.doi:
        draft["doi"] = args.doi
    return draft


def cmd_submit(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request(
        "POST", f"/api/v1/areas/{args.area}/records", json=_draft_from(args)
    )
    _emit(args, body, _record_line(body["record"]))
    return 0


def cmd_list(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request(
        "GET",
        f"/api/v1/areas/{args.area}/records",
        params={"field": args.field, "subfield": args.subfield, "page": args.page},
    )
    _emit(args, body, [_record_line(r) for r in body["records"]] or ["no records"])
    return 0


def cmd_rate(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request(
        "POST",
        f"/api/v1/areas/{args.area}/records/{args.record}/rating",
        json={"quality": args.quality, "familiarity": args.familiarity},
    )
    score = body["score"]
    _emit(
        args,
        body,
        f"overall score {score['score_display']}% from {score['rating_count']} rating(s)",
    )
    return 0


def cmd_evaluate(args) -> int:
    client = ApiClient(args.url, args.token)
    payload: dict = {"is_review": args.verdict == "review"}
    if payload["is_review"]:
        if not (args.field and args.subfield):
            raise CommandError("review verdicts need --field and --subfield", exit_code=2)
        payload["field_id"] = args.field
        payload["subfield_id"] = args.subfield
    body = client.request(
        "POST",
        f"/api/v1/areas/{args.area}/records/{args.record}/evaluation",
        json=payload,
    )
    decision = body["decision"]
    _emit(
        args,
        body,
        f"consensus: {decision['outcome']} (support {decision['supporting_count']}); "
        f"record is now {body['record_status']}",
    )
    return 0


def cmd_moderate(args) -> int:
    client = ApiClient(args.url, args.token)
    action = {"open": "open_for_evaluation"}.get(args.action, args.action)
    payload: dict = {"action": action}
    if args.reason:
        payload["reason"] = args.reason
    if args.edits:
        try:
            payload["edits"] = json.loads(args.edits)
        except json.JSONDecodeError as exc:
            raise CommandError(f"--edits must be JSON: {exc}", exit_code=2)
    body = client.request(
        "POST", f"/api/v1/areas/{args.area}/records/{args.record}/decision", json=payload
    )
    _emit(args, body, _record_line(body["record"]))
    return 0


def cmd_pending(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request(
        "GET", f"/api/v1/areas/{args.area}/pending", params={"kind": args.kind}
    )
    _emit(args, body, [_record_line(r) for r in body["records"]] or ["queue is empty"])
    return 0


def cmd_recommend(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request(
        "GET", f"/api/v1/areas/{args.area}/recommendations", params={"n": args.n}
    )
    lines = [
        f"{item['predicted_score']:.3f}  " + _record_line(item["record"])
        for item in body["recommendations"]
    ] or ["no recommendations yet (rate some articles first)"]
    _emit(args, body, lines)
    return 0


def cmd_bibliometrics(args) -> int:
    client = ApiClient(args.url, args.token)
    body = client.request(
        "GET", f"/api/v1/areas/{args.area}/bibliometrics/{args.field}/{args.subfield}"
    )
    s = body["summary"]
    years = (
        f"{s['year_min']}-{s['year_max']}" if s["year_min"] is not None else "no papers"
    )
    avg = f"{s['avg_rating_display']}%" if s["avg_rating_display"] is not None else "unrated"
    _emit(
        args,
        body,
        f"{s['field_id']}/{s['subfield_id']}: {s['paper_count']} paper(s), years {years}, "
        f"{s['total_citations']} citations, avg score {avg}, {s['rater_count']} rater(s)",
    )
    return 0


# --------------------------------------------------------------------- taxonomy

def cmd_taxonomy(args) -> int:
    client = ApiClient(args.url, args.token)
    if args.tax_command == "show":
        body = client.request("GET", f"/api/v1/areas/{args.area}/taxonomy")
        lines = []
        for f in body["taxonomy"]["fields"]:
            lines.append(f"{f['field_id']}  {f['name']}")
            for sf in f["subfields"]:
                lines.append(f"    {sf['subfield_id']}  {sf['name']}")
        _emit(args, body, lines)
    elif args.tax_command == "add-area":
        try:
            tree = json.loads(Path(args.tree).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CommandError(f"cannot read tree file: {exc}", exit_code=2)
        tree["name"] = args.name
        body = client.request("POST", "/api/v1/areas", json=tree)
        _emit(args, body, f"created area {body['taxonomy']['area_id']}")
    elif args.tax_command == "add-subfield":
        body = client.request(
            "POST",
            f"/api/v1/areas/{args.area}/fields/{args.field}/subfields",
            json={"name": args.name},
        )
        _emit(args, body, "added")
    elif args.tax_command == "rename-subfield":
        body = client.request(
            "PATCH",
            f"/api/v1/areas/{args.area}/fields/{args.field}/subfields/{args.subfield}",
            json={"name": args.name},
        )
        _emit(args, body, "renamed")
    elif args.tax_command == "delete-subfield":
        body = client.request(
            "DELETE",
            f"/api/v1/areas/{args.area}/fields/{args.field}/subfields/{args.subfield}",
        )
        _emit(args, body, "deleted")
    return 0


# --------------------------------------------------------------------- import

def cmd_import(args) -> int:
    path = Path(args.file)
    try:
        lines = path.read_text("utf-8").splitlines()
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return 2
    client = ApiClient(args.url, args.token)
    report = []
    ok = failed = 0
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            draft = json.loads(line)
        except json.JSONDecodeError as exc:
            failed += 1
            report.append({"line": number, "ok": False, "error": f"invalid JSON: {exc}"})
            continue
        try:
            body = client.request("POST", f"/api/v1/areas/{args.area}/records", json=draft)
            record = body["record"]
            ok += 1
            report.append(
                {
                    "line": number,
                    "ok": True,
                    "record_id": record["record_id"],
                    "status": record["status"],
                }
            )
        except CommandError as exc:
            failed += 1
            report.append({"line": number, "ok": False, "error": str(exc)})
    if args.json:
        print(json.dumps({"ok": True, "imported": ok, "failed": failed, "lines": report}, indent=2))
    else:
        for entry in report:
            if entry["ok"]:
                print(f"line {entry['line']}: {entry['record_id']} [{entry['status']}]")
            else:
                print(f"line {entry['line']}: ERROR {entry['error']}")
        print(f"imported {ok} record(s), {failed} failure(s)")
    return 0


# --------------------------------------------------------------------- export & simulation

def cmd_export(args) -> int:
    try:
        config = _load_config(args)
        service = BibService(config)
    except (ConfigurationError, RevbibError) as exc:
        print(f"config error: {exc.message}", file=sys.stderr)
        return 2
    try:
        written = service.export_area(args.area, Path(args.out))
        if args.users:
            written += service.export_users(Path(args.out))
    finally:
        service.close()
    for path in written:
        print(path)
    return 0


def cmd_simulate_load(args) -> int:
    from .simulate import simulate_all, simulate_load

    if args.scenario == "all":
        reports = simulate_all(
            args.records,
            args.users,
            args.seed,
            threshold=args.threshold,
            agreement=args.agreement,
        )
    else:
        reports = [
            simulate_load(
                int(args.scenario),
                args.records,
                args.users,
                args.seed,
                threshold=args.threshold,
                agreement=args.agreement,
            )
        ]
    if args.out_dir:
        from .report import write_reports

        for path in write_reports(reports, Path(args.out_dir)):
            print(f"wrote {path}", file=sys.stderr)
    if args.json:
        print(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True))
    else:
        print(
            "scenario  env      user_evals  mod_decisions  opens  auto  "
            "user_bucket  mod_bucket  complete"
        )
        for r in reports:
            print(
                f"{r.scenario:>8}  {r.environment:<7}  {r.user_evaluation_actions:>10}  "
                f"{r.moderator_decision_actions:>13}  {r.moderator_open_actions:>5}  "
                f"{r.auto_decisions:>4}  {r.user_bucket:>11}  {r.moderator_bucket:>10}  "
                f"{str(r.complete).lower()}"
            )
    if not all(r.complete for r in reports):
        print("warning: at least one report is incomplete", file=sys.stderr)
    return 0


# --------------------------------------------------------------------- parser

def _add_url(parser, token=True):
    parser.add_argument("--url", default=os.environ.get("REVBIB_URL", DEFAULT_URL))
    if token:
        parser.add_argument("--token", default=os.environ.get("REVBIB_TOKEN"))


def _add_credentials(parser):
    parser.add_argument("--username", required=True)
    parser.add_argument("--password")
    parser.add_argument("--password-digest", dest="password_digest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revbib",
        description="Collaborative bibliographic exchange for review/survey articles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--bind")
    p.add_argument("--ui-dir")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("register", help="create an account")
    _add_url(p, token=False)
    _add_credentials(p)
    p.add_argument("--email", required=True)
    p.add_argument("--first-name", default="")
    p.add_argument("--last-name", default="")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("login", help="obtain an auth token")
    _add_url(p, token=False)
    _add_credentials(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_login)

    p = sub.add_parser("grant-role", help="grant a role to a user")
    _add_url(p)
    p.add_argument("--username", required=True)
    p.add_argument("--role", required=True, choices=["user", "associate_user", "moderator"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_grant_role)

    p = sub.add_parser("capabilities", help="show the scenario capability matrix")
    _add_url(p, token=False)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_capabilities)

    p = sub.add_parser("metrics", help="show load counters (privileged)")
    _add_url(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("search", help="keyword search over approved records")
    _add_url(p, token=False)
    p.add_argument("--query", "-q", required=True)
    p.add_argument("--area", default="computing")
    p.add_argument("--field")
    p.add_argument("--subfield")
    p.add_argument("--year-min", type=int)
    p.add_argument("--year-max", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("submit", help="submit one record (U1)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--file", help="JSON draft file")
    p.add_argument("--title")
    p.add_argument("--authors", help="semicolon-separated")
    p.add_argument("--venue")
    p.add_argument("--year", type=int)
    p.add_argument("--field")
    p.add_argument("--subfield")
    p.add_argument("--keywords", help="comma-separated")
    p.add_argument("--doi")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_submit)

    p = sub.add_parser("list", help="list approved records in a sub-field (U2)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--field", required=True)
    p.add_argument("--subfield", required=True)
    p.add_argument("--page", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("rate", help="rate an approved record (U4)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--record", required=True)
    p.add_argument("--quality", required=True, choices=["low", "medium", "high"])
    p.add_argument(
        "--familiarity", required=True, choices=["low", "moderate", "expert"]
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("evaluate", help="evaluate a pending record (U6)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--record", required=True)
    p.add_argument("--verdict", required=True, choices=["review", "not-review"])
    p.add_argument("--field")
    p.add_argument("--subfield")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("moderate", help="decide a pending record (A2)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--record", required=True)
    p.add_argument("--action", required=True, choices=["approve", "reject", "open"])
    p.add_argument("--reason")
    p.add_argument("--edits", help="JSON object of field edits applied before approval")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_moderate)

    p = sub.add_parser("pending", help="list pending records (A1 / evaluation queue)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--kind", required=True, choices=["moderation", "evaluation"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_pending)

    p = sub.add_parser("recommend", help="personal recommendations (U5)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("-n", type=int, default=10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("bibliometrics", help="sub-field summary (U3)")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--field", required=True)
    p.add_argument("--subfield", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bibliometrics)

    p = sub.add_parser("taxonomy", help="taxonomy operations (A3/A4)")
    tax = p.add_subparsers(dest="tax_command", required=True)
    t = tax.add_parser("show")
    _add_url(t)
    t.add_argument("--area", default="computing")
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_taxonomy)
    t = tax.add_parser("add-area")
    _add_url(t)
    t.add_argument("--name", required=True)
    t.add_argument("--tree", required=True, help="JSON file with {fields: [...]}")
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_taxonomy)
    t = tax.add_parser("add-subfield")
    _add_url(t)
    t.add_argument("--area", default="computing")
    t.add_argument("--field", required=True)
    t.add_argument("--name", required=True)
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_taxonomy)
    t = tax.add_parser("rename-subfield")
    _add_url(t)
    t.add_argument("--area", default="computing")
    t.add_argument("--field", required=True)
    t.add_argument("--subfield", required=True)
    t.add_argument("--name", required=True)
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_taxonomy)
    t = tax.add_parser("delete-subfield")
    _add_url(t)
    t.add_argument("--area", default="computing")
    t.add_argument("--field", required=True)
    t.add_argument("--subfield", required=True)
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_taxonomy)

    p = sub.add_parser("import", help="bulk import a JSON-lines file via U1")
    p.add_argument("file")
    _add_url(p)
    p.add_argument("--area", default="computing")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("export", help="export a local store as JSON-lines")
    p.add_argument("--config", required=True)
    p.add_argument("--area", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--users", action="store_true", help="also export the user store")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate-load", help="synthetic per-scenario load report")
    p.add_argument("--scenario", required=True, help="1-6 or 'all'")
    p.add_argument("--records", type=int, default=100)
    p.add_argument("--users", type=int, default=20)
    p.add_argument("--threshold", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--agreement", type=float, default=0.9)
    p.add_argument("--out-dir", help="write load_report.csv and load_report.png here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate_load)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate-load" and args.scenario != "all":
        try:
            scenario = int(args.scenario)
        except ValueError:
            parser.error(f"--scenario must be 1-6 or 'all', got {args.scenario!r}")
        if scenario not in range(1, 7):
            parser.error(f"--scenario must be 1-6 or 'all', got {args.scenario!r}")
    try:
        return args.func(args)
    except CommandError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    except RevbibError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
