"""Durable persistence: one embedded SQLite file per science area plus a
shared user store.

Every mutation goes through ``atomic()``, which opens a write transaction
(BEGIN IMMEDIATE) on a thread-local connection.  SQLite serializes writers
per file, which gives the per-record serialization the evaluation workflow
needs: a competing unit re-reads the record status inside its own
transaction and sees the committed outcome of the winner.

Physical layout (the logical Classification table is normalized into the
two ``classification_*`` tables; everything else maps one to one):

    data/<area_id>.db   classification_fields, classification_subfields,
                        review_articles, article_ratings,
                        article_ratings_detailed, article_evaluations,
                        bibliometrics, idempotency
    data/users.db       user_profiles, auth_tokens
"""

from __future__ import annotations

import json
import re
import sqlite3
import threading
from contextlib import contextmanager
from datetime import datetime
from fractions import Fraction
from pathlib import Path

from .domain import ArticleStatus, BibRecord
from .errors import ConflictError, IntegrityError, NotFoundError, ValidationError

SCHEMA_VERSION = 1
USERS_FILENAME = "users.db"

_AREA_ID_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")

_AREA_DDL = """
CREATE TABLE IF NOT EXISTS area_meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS classification_fields (
    field_id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    position INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS classification_subfields (
    field_id TEXT NOT NULL,
    subfield_id TEXT NOT NULL,
    name TEXT NOT NULL,
    position INTEGER NOT NULL,
    PRIMARY KEY (field_id, subfield_id)
);
CREATE TABLE IF NOT EXISTS review_articles (
    record_id TEXT PRIMARY KEY,
    field_id TEXT NOT NULL,
    subfield_id TEXT NOT NULL,
    title TEXT NOT NULL,
    title_norm TEXT NOT NULL,
    authors TEXT NOT NULL,
    venue TEXT NOT NULL DEFAULT '',
    year INTEGER NOT NULL,
    citation_count INTEGER,
    keywords TEXT NOT NULL DEFAULT '[]',
    abstract TEXT,
    doi TEXT,
    submitter_id TEXT NOT NULL,
    status TEXT NOT NULL,
    submitted_at TEXT NOT NULL,
    decided_at TEXT,
    reject_reason TEXT,
    UNIQUE (title_norm, year)
);
CREATE TABLE IF NOT EXISTS article_ratings (
    record_id TEXT PRIMARY KEY,
    score_percent REAL,
    rating_count INTEGER NOT NULL,
    updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS article_ratings_detailed (
    record_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    quality INTEGER NOT NULL,
    familiarity INTEGER NOT NULL,
    rated_at TEXT NOT NULL,
    PRIMARY KEY (record_id, user_id)
);
CREATE TABLE IF NOT EXISTS article_evaluations (
    record_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    is_review INTEGER NOT NULL,
    proposed_field_id TEXT,
    proposed_subfield_id TEXT,
    submitted_at TEXT NOT NULL,
    PRIMARY KEY (record_id, user_id)
);
CREATE TABLE IF NOT EXISTS bibliometrics (
    field_id TEXT NOT NULL,
    subfield_id TEXT NOT NULL,
    paper_count INTEGER NOT NULL,
    year_min INTEGER,
    year_max INTEGER,
    total_citations INTEGER NOT NULL,
    avg_rating_score REAL,
    rater_count INTEGER NOT NULL,
    computed_at TEXT NOT NULL,
    PRIMARY KEY (field_id, subfield_id)
);
CREATE TABLE IF NOT EXISTS idempotency (
    request_id TEXT PRIMARY KEY,
    op TEXT NOT NULL,
    result TEXT NOT NULL,
    created_at TEXT NOT NULL
);
"""

_USER_DDL = """
CREATE TABLE IF NOT EXISTS user_profiles (
    user_id TEXT PRIMARY KEY,
    username TEXT NOT NULL UNIQUE,
    first_name TEXT NOT NULL DEFAULT '',
    last_name TEXT NOT NULL DEFAULT '',
    email TEXT NOT NULL,
    password_verifier TEXT NOT NULL,
    role TEXT NOT NULL,
    created_at TEXT NOT NULL,
    preferences TEXT NOT NULL DEFAULT '{}'
);
CREATE TABLE IF NOT EXISTS auth_tokens (
    token TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    issued_at TEXT NOT NULL,
    expires_at TEXT NOT NULL
);
"""

_AREA_TABLES = [
    "classification_fields",
    "classification_subfields",
    "review_articles",
    "article_ratings",
    "article_ratings_detailed",
    "article_evaluations",
    "bibliometrics",
    "idempotency",
]
_USER_TABLES = ["user_profiles", "auth_tokens"]


def _iso(dt: datetime | None) -> str | None:
    return None if dt is None else dt.isoformat()


def _from_iso(text: str | None) -> datetime | None:
    return None if text is None else datetime.fromisoformat(text)


class _SqliteStore:
    """Thread-local connections plus re-entrant write transactions."""

    def __init__(self, path: Path, ddl: str, create: bool):
        self.path = Path(path)
        self._ddl = ddl
        self._local = threading.local()
        self._closed = False
        if create:
            if self.path.exists():
                raise ConflictError(f"store file already exists: {self.path}")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            conn = self._conn()
            # executescript manages its own commits; run it outside atomic().
            conn.executescript(ddl)
            conn.execute(f"PRAGMA user_version = {SCHEMA_VERSION}")
        else:
            if not self.path.exists():
                raise NotFoundError(f"store file not found: {self.path}")
            self._check_openable()

    def _check_openable(self) -> None:
        conn = self._conn()
        try:
            row = conn.execute("PRAGMA quick_check").fetchone()
        except sqlite3.DatabaseError as exc:
            raise IntegrityError(f"store {self.path} is not a database: {exc}")
        if row[0] != "ok":
            raise IntegrityError(f"store {self.path} failed quick_check: {row[0]}")
        version = conn.execute("PRAGMA user_version").fetchone()[0]
        if version > SCHEMA_VERSION:
            raise IntegrityError(
                f"store {self.path} has schema version {version}, newer than "
                f"supported version {SCHEMA_VERSION}"
            )
        if version < SCHEMA_VERSION:
            raise IntegrityError(
                f"store {self.path} has schema version {version}; not a valid store"
            )

    def _conn(self) -> sqlite3.Connection:
        if self._closed:
            raise IntegrityError(f"store {self.path} is closed")
        conn = getattr(self._local, "conn", None)
        if conn is None:
            conn = sqlite3.connect(self.path, timeout=30, isolation_level=None)
            try:
                conn.execute("PRAGMA foreign_keys = ON")
                conn.execute("PRAGMA journal_mode = WAL")
                conn.execute("PRAGMA synchronous = FULL")
            except sqlite3.DatabaseError as exc:
                conn.close()
                raise IntegrityError(f"store {self.path} is not a database: {exc}")
            self._local.conn = conn
            self._local.txn_depth = 0
        return conn

    @contextmanager
    def atomic(self):
        """Re-entrant unit of work: all writes apply or none do."""
        conn = self._conn()
        depth = getattr(self._local, "txn_depth", 0)
        if depth == 0:
            conn.execute("BEGIN IMMEDIATE")
        self._local.txn_depth = depth + 1
        try:
            yield conn
        except BaseException:
            self._local.txn_depth = depth
            if depth == 0:
                conn.execute("ROLLBACK")
            raise
        else:
            self._local.txn_depth = depth
            if depth == 0:
                conn.execute("COMMIT")

    def _execute(self, sql: str, params=()) -> sqlite3.Cursor:
        return self._conn().execute(sql, params)

    def close(self) -> None:
        conn = getattr(self._local, "conn", None)
        if conn is not None:
            conn.close()
            self._local.conn = None
        self._closed = True

    def _export_tables(self, tables: list[str], dest_dir: Path) -> list[Path]:
        dest_dir = Path(dest_dir)
        dest_dir.mkdir(parents=True, exist_ok=True)
        written = []
        conn = self._conn()
        for table in tables:
            cursor = conn.execute(f"SELECT * FROM {table}")
            columns = [d[0] for d in cursor.description]
            out = dest_dir / f"{table}.jsonl"
            with out.open("w", encoding="utf-8") as fh:
                for row in cursor:
                    fh.write(json.dumps(dict(zip(columns, row)), sort_keys=True))
                    fh.write("\n")
            written.append(out)
        return written


class AreaStore(_SqliteStore):
    def __init__(self, path: Path, area_id: str, create: bool = False):
        super().__init__(path, _AREA_DDL, create)
        self.area_id = area_id
        if create:
            with self.atomic() as conn:
                conn.execute(
                    "INSERT INTO area_meta (key, value) VALUES ('area_id', ?)", (area_id,)
                )
        else:
            stored = self.meta("area_id")
            if stored != area_id:
                raise IntegrityError(
                    f"store {self.path} belongs to area {stored!r}, not {area_id!r}"
                )

    def meta(self, key: str) -> str | None:
        row = self._execute("SELECT value FROM area_meta WHERE key = ?", (key,)).fetchone()
        return None if row is None else row[0]

    def set_meta(self, key: str, value: str) -> None:
        with self.atomic() as conn:
            conn.execute(
                "INSERT INTO area_meta (key, value) VALUES (?, ?) "
                "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (key, value),
            )

    # -- classification ----------------------------------------------------

    def save_tree(self, tree: dict) -> None:
        """Replace the stored classification with the given tree dict."""
        with self.atomic() as conn:
            conn.execute("DELETE FROM classification_subfields")
            conn.execute("DELETE FROM classification_fields")
            for fpos, f in enumerate(tree.get("fields", [])):
                conn.execute(
                    "INSERT INTO classification_fields (field_id, name, position) VALUES (?, ?, ?)",
                    (f["field_id"], f["name"], fpos),
                )
                for spos, sf in enumerate(f.get("subfields", [])):
                    conn.execute(
                        "INSERT INTO classification_subfields "
                        "(field_id, subfield_id, name, position) VALUES (?, ?, ?, ?)",
                        (f["field_id"], sf["subfield_id"], sf["name"], spos),
                    )
            conn.execute(
                "INSERT INTO area_meta (key, value) VALUES ('name', ?) "
                "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (tree["name"],),
            )

    def load_tree(self) -> dict | None:
        name = self.meta("name")
        if name is None:
            return None
        fields = []
        for field_id, fname in self._execute(
            "SELECT field_id, name FROM classification_fields ORDER BY position"
        ).fetchall():
            subfields = [
                {"subfield_id": sid, "name": sname}
                for sid, sname in self._execute(
                    "SELECT subfield_id, name FROM classification_subfields "
                    "WHERE field_id = ? ORDER BY position",
                    (field_id,),
                ).fetchall()
            ]
            fields.append({"field_id": field_id, "name": fname, "subfields": subfields})
        return {"area_id": self.area_id, "name": name, "fields": fields}

    # -- review articles ---------------------------------------------------

    @staticmethod
    def _record_row(record: BibRecord, title_norm: str) -> tuple:
        return (
            record.record_id,
            record.field_id,
            record.subfield_id,
            record.title,
            title_norm,
            json.dumps(record.authors),
            record.venue,
            record.year,
            record.citation_count,
            json.dumps(record.keywords),
            record.abstract,
            record.doi,
            record.submitter_id,
            record.status.value,
            _iso(record.submitted_at),
            _iso(record.decided_at),
            record.reject_reason,
        )

    def _row_to_record(self, row) -> BibRecord:
        return BibRecord(
            record_id=row[0],
            area_id=self.area_id,
            field_id=row[1],
            subfield_id=row[2],
            title=row[3],
            authors=json.loads(row[5]),
            venue=row[6],
            year=row[7],
            citation_count=row[8],
            keywords=json.loads(row[9]),
            abstract=row[10],
            doi=row[11],
            submitter_id=row[12],
            status=ArticleStatus(row[13]),
            submitted_at=_from_iso(row[14]),
            decided_at=_from_iso(row[15]),
            reject_reason=row[16],
        )

    _RECORD_COLS = (
        "record_id, field_id, subfield_id, title, title_norm, authors, venue, year, "
        "citation_count, keywords, abstract, doi, submitter_id, status, submitted_at, "
        "decided_at, reject_reason"
    )

    def insert_record(self, record: BibRecord, title_norm: str) -> None:
        with self.atomic() as conn:
            try:
                conn.execute(
                    f"INSERT INTO review_articles ({self._RECORD_COLS}) "
                    "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    self._record_row(record, title_norm),
                )
            except sqlite3.IntegrityError as exc:
                if "title_norm" in str(exc) or "UNIQUE" in str(exc):
                    raise ConflictError(
                        f"a record titled {record.title!r} ({record.year}) already exists"
                    )
                raise

    def update_record(self, record: BibRecord, title_norm: str) -> None:
        with self.atomic() as conn:
            try:
                cur = conn.execute(
                    "UPDATE review_articles SET field_id=?, subfield_id=?, title=?, "
                    "title_norm=?, authors=?, venue=?, year=?, citation_count=?, keywords=?, "
                    "abstract=?, doi=?, submitter_id=?, status=?, submitted_at=?, decided_at=?, "
                    "reject_reason=? WHERE record_id=?",
                    self._record_row(record, title_norm)[1:] + (record.record_id,),
                )
            except sqlite3.IntegrityError:
                raise ConflictError(
                    f"a record titled {record.title!r} ({record.year}) already exists"
                )
            if cur.rowcount == 0:
                raise NotFoundError(f"record {record.record_id!r} not found")

    def get_record(self, record_id: str) -> BibRecord | None:
        row = self._execute(
            f"SELECT {self._RECORD_COLS} FROM review_articles WHERE record_id = ?",
            (record_id,),
        ).fetchone()
        return None if row is None else self._row_to_record(row)

    def require_record(self, record_id: str) -> BibRecord:
        record = self.get_record(record_id)
        if record is None:
            raise NotFoundError(f"record {record_id!r} not found in area {self.area_id!r}")
        return record

    def find_by_title_year(self, title_norm: str, year: int) -> str | None:
        row = self._execute(
            "SELECT record_id FROM review_articles WHERE title_norm = ? AND year = ?",
            (title_norm, year),
        ).fetchone()
        return None if row is None else row[0]

    def list_records(
        self,
        status: ArticleStatus | None = None,
        field_id: str | None = None,
        subfield_id: str | None = None,
        order: str = "newest",
        limit: int | None = None,
        offset: int = 0,
    ) -> list[BibRecord]:
        clauses, params = [], []
        if status is not None:
            clauses.append("status = ?")
            params.append(status.value)
        if field_id is not None:
            clauses.append("field_id = ?")
            params.append(field_id)
        if subfield_id is not None:
            clauses.append("subfield_id = ?")
            params.append(subfield_id)
        where = f"WHERE {' AND '.join(clauses)}" if clauses else ""
        direction = "DESC" if order == "newest" else "ASC"
        sql = (
            f"SELECT {self._RECORD_COLS} FROM review_articles {where} "
            f"ORDER BY submitted_at {direction}, record_id {direction}"
        )
        if limit is not None:
            sql += f" LIMIT {int(limit)} OFFSET {int(offset)}"
        return [self._row_to_record(r) for r in self._execute(sql, params).fetchall()]

    def count_path_references(
        self, field_id: str, subfield_id: str, include_rejected: bool = False
    ) -> int:
        sql = "SELECT COUNT(*) FROM review_articles WHERE field_id = ? AND subfield_id = ?"
        if not include_rejected:
            sql += " AND status != 'rejected'"
        return self._execute(sql, (field_id, subfield_id)).fetchone()[0]

    def count_proposed_path_references(self, field_id: str, subfield_id: str) -> int:
        """Evaluations of still-pending records that propose this path.

        Counts alongside record references when deciding whether a sub-field
        may be deleted, so a consensus approval can never land on a path that
        vanished after the votes were cast.
        """
        return self._execute(
            "SELECT COUNT(*) FROM article_evaluations e "
            "JOIN review_articles r ON r.record_id = e.record_id "
            "WHERE e.proposed_field_id = ? AND e.proposed_subfield_id = ? "
            "AND r.status = 'pending_evaluation'",
            (field_id, subfield_id),
        ).fetchone()[0]

    # -- ratings -----------------------------------------------------------

    def upsert_detailed_rating(
        self, record_id: str, user_id: str, quality: int, familiarity: int, rated_at: datetime
    ) -> None:
        with self.atomic() as conn:
            conn.execute(
                "INSERT INTO article_ratings_detailed "
                "(record_id, user_id, quality, familiarity, rated_at) VALUES (?, ?, ?, ?, ?) "
                "ON CONFLICT(record_id, user_id) DO UPDATE SET "
                "quality = excluded.quality, familiarity = excluded.familiarity, "
                "rated_at = excluded.rated_at",
                (record_id, user_id, quality, familiarity, _iso(rated_at)),
            )

    def fetch_detailed_ratings(self, record_id: str) -> list[tuple]:
        """Rows of (user_id, quality, familiarity, rated_at_iso) for one record."""
        return self._execute(
            "SELECT user_id, quality, familiarity, rated_at FROM article_ratings_detailed "
            "WHERE record_id = ? ORDER BY user_id",
            (record_id,),
        ).fetchall()

    def all_detailed_ratings(self) -> list[tuple]:
        """Rows of (record_id, user_id, quality, familiarity) across the area."""
        return self._execute(
            "SELECT record_id, user_id, quality, familiarity FROM article_ratings_detailed "
            "ORDER BY record_id, user_id"
        ).fetchall()

    def set_cached_score(
        self, record_id: str, score: float | None, count: int, updated_at: datetime
    ) -> None:
        with self.atomic() as conn:
            conn.execute(
                "INSERT INTO article_ratings (record_id, score_percent, rating_count, updated_at) "
                "VALUES (?, ?, ?, ?) ON CONFLICT(record_id) DO UPDATE SET "
                "score_percent = excluded.score_percent, rating_count = excluded.rating_count, "
                "updated_at = excluded.updated_at",
                (record_id, score, count, _iso(updated_at)),
            )

    def get_cached_score(self, record_id: str) -> tuple[float | None, int] | None:
        row = self._execute(
            "SELECT score_percent, rating_count FROM article_ratings WHERE record_id = ?",
            (record_id,),
        ).fetchone()
        return None if row is None else (row[0], row[1])

    def clear_cached_scores(self) -> None:
        with self.atomic() as conn:
            conn.execute("DELETE FROM article_ratings")

    # -- evaluations ---------------------------------------------------------

    def upsert_evaluation(
        self,
        record_id: str,
        user_id: str,
        is_review: bool,
        proposed_field_id: str | None,
        proposed_subfield_id: str | None,
        submitted_at: datetime,
    ) -> None:
        with self.atomic() as conn:
            conn.execute(
                "INSERT INTO article_evaluations "
                "(record_id, user_id, is_review, proposed_field_id, proposed_subfield_id, "
                "submitted_at) VALUES (?, ?, ?, ?, ?, ?) "
                "ON CONFLICT(record_id, user_id) DO UPDATE SET "
                "is_review = excluded.is_review, proposed_field_id = excluded.proposed_field_id, "
                "proposed_subfield_id = excluded.proposed_subfield_id, "
                "submitted_at = excluded.submitted_at",
                (
                    record_id,
                    user_id,
                    1 if is_review else 0,
                    proposed_field_id,
                    proposed_subfield_id,
                    _iso(submitted_at),
                ),
            )

    def fetch_evaluations(self, record_id: str) -> list[tuple]:
        """Rows of (user_id, is_review, field_id, subfield_id, submitted_at_iso)."""
        return self._execute(
            "SELECT user_id, is_review, proposed_field_id, proposed_subfield_id, submitted_at "
            "FROM article_evaluations WHERE record_id = ? ORDER BY user_id",
            (record_id,),
        ).fetchall()

    def count_evaluations(self) -> int:
        return self._execute("SELECT COUNT(*) FROM article_evaluations").fetchone()[0]

    # -- bibliometrics cache -------------------------------------------------

    def upsert_summary(self, row: dict) -> None:
        with self.atomic() as conn:
            conn.execute(
                "INSERT INTO bibliometrics (field_id, subfield_id, paper_count, year_min, "
                "year_max, total_citations, avg_rating_score, rater_count, computed_at) "
                "VALUES (:field_id, :subfield_id, :paper_count, :year_min, :year_max, "
                ":total_citations, :avg_rating_score, :rater_count, :computed_at) "
                "ON CONFLICT(field_id, subfield_id) DO UPDATE SET "
                "paper_count = excluded.paper_count, year_min = excluded.year_min, "
                "year_max = excluded.year_max, total_citations = excluded.total_citations, "
                "avg_rating_score = excluded.avg_rating_score, "
                "rater_count = excluded.rater_count, computed_at = excluded.computed_at",
                row,
            )

    def get_summary(self, field_id: str, subfield_id: str) -> dict | None:
        row = self._execute(
            "SELECT field_id, subfield_id, paper_count, year_min, year_max, total_citations, "
            "avg_rating_score, rater_count, computed_at FROM bibliometrics "
            "WHERE field_id = ? AND subfield_id = ?",
            (field_id, subfield_id),
        ).fetchone()
        if row is None:
            return None
        keys = (
            "field_id",
            "subfield_id",
            "paper_count",
            "year_min",
            "year_max",
            "total_citations",
            "avg_rating_score",
            "rater_count",
            "computed_at",
        )
        return dict(zip(keys, row))

    def list_summaries(self) -> list[dict]:
        rows = self._execute(
            "SELECT field_id, subfield_id FROM bibliometrics ORDER BY field_id, subfield_id"
        ).fetchall()
        return [self.get_summary(f, s) for f, s in rows]

    def delete_summary(self, field_id: str, subfield_id: str) -> None:
        with self.atomic() as conn:
            conn.execute(
                "DELETE FROM bibliometrics WHERE field_id = ? AND subfield_id = ?",
                (field_id, subfield_id),
            )

    # -- idempotency ---------------------------------------------------------

    def lookup_request(self, request_id: str) -> dict | None:
        row = self._execute(
            "SELECT op, result FROM idempotency WHERE request_id = ?", (request_id,)
        ).fetchone()
        return None if row is None else {"op": row[0], "result": json.loads(row[1])}

    def store_request(self, request_id: str, op: str, result: dict, created_at: datetime) -> None:
        with self.atomic() as conn:
            conn.execute(
                "INSERT OR IGNORE INTO idempotency (request_id, op, result, created_at) "
                "VALUES (?, ?, ?, ?)",
                (request_id, op, json.dumps(result), _iso(created_at)),
            )

    # -- maintenance -----------------------------------------------------------

    def export_jsonl(self, dest_dir: Path) -> list[Path]:
        return self._export_tables(_AREA_TABLES, dest_dir)

    def verify_referential_integrity(self) -> list[str]:
        """Return a list of problems; empty means the store is consistent."""
        problems: list[str] = []
        paths = {
            (f, s)
            for f, s in self._execute(
                "SELECT field_id, subfield_id FROM classification_subfields"
            ).fetchall()
        }
        for rid, f, s, status in self._execute(
            "SELECT record_id, field_id, subfield_id, status FROM review_articles"
        ).fetchall():
            if status != ArticleStatus.REJECTED.value and (f, s) not in paths:
                problems.append(f"record {rid} references missing path {f}/{s}")
        record_ids = {
            r[0] for r in self._execute("SELECT record_id FROM review_articles").fetchall()
        }
        for rid, uid in self._execute(
            "SELECT DISTINCT record_id, user_id FROM article_ratings_detailed"
        ).fetchall():
            if rid not in record_ids:
                problems.append(f"rating by {uid} references missing record {rid}")
        for rid, uid in self._execute(
            "SELECT DISTINCT record_id, user_id FROM article_evaluations"
        ).fetchall():
            if rid not in record_ids:
                problems.append(f"evaluation by {uid} references missing record {rid}")
        for rid, score, count in self._execute(
            "SELECT record_id, score_percent, rating_count FROM article_ratings"
        ).fetchall():
            detailed = self.fetch_detailed_ratings(rid)
            if count != len(detailed):
                problems.append(f"cached rating count for {rid} is stale")
                continue
            if not detailed:
                if score is not None:
                    problems.append(f"cached score for {rid} present with zero ratings")
                continue
            exact = sum(Fraction(q * f, 9) for _, q, f, _ in detailed) / len(detailed) * 100
            if score is None or abs(score - float(exact)) > 1e-9:
                problems.append(f"cached score for {rid} does not match detailed ratings")
        return problems


class UserStore(_SqliteStore):
    def __init__(self, path: Path, create: bool = False):
        super().__init__(path, _USER_DDL, create)

    def insert_profile(self, row: dict) -> None:
        with self.atomic() as conn:
            try:
                conn.execute(
                    "INSERT INTO user_profiles (user_id, username, first_name, last_name, "
                    "email, password_verifier, role, created_at, preferences) "
                    "VALUES (:user_id, :username, :first_name, :last_name, :email, "
                    ":password_verifier, :role, :created_at, :preferences)",
                    row,
                )
            except sqlite3.IntegrityError:
                raise ConflictError(f"username {row['username']!r} is already taken")

    _PROFILE_COLS = (
        "user_id, username, first_name, last_name, email, password_verifier, role, "
        "created_at, preferences"
    )

    @classmethod
    def _profile_dict(cls, row) -> dict:
        return dict(zip([c.strip() for c in cls._PROFILE_COLS.split(",")], row))

    def get_profile_by_username(self, username: str) -> dict | None:
        row = self._execute(
            f"SELECT {self._PROFILE_COLS} FROM user_profiles WHERE username = ?", (username,)
        ).fetchone()
        return None if row is None else self._profile_dict(row)

    def get_profile(self, user_id: str) -> dict | None:
        row = self._execute(
            f"SELECT {self._PROFILE_COLS} FROM user_profiles WHERE user_id = ?", (user_id,)
        ).fetchone()
        return None if row is None else self._profile_dict(row)

    def update_profile_fields(self, user_id: str, fields: dict) -> None:
        if not fields:
            return
        assignments = ", ".join(f"{k} = ?" for k in fields)
        with self.atomic() as conn:
            cur = conn.execute(
                f"UPDATE user_profiles SET {assignments} WHERE user_id = ?",
                (*fields.values(), user_id),
            )
            if cur.rowcount == 0:
                raise NotFoundError(f"user {user_id!r} not found")

    def list_profiles(self) -> list[dict]:
        rows = self._execute(
            f"SELECT {self._PROFILE_COLS} FROM user_profiles ORDER BY username"
        ).fetchall()
        return [self._profile_dict(r) for r in rows]

    def insert_token(self, token: str, user_id: str, issued_at: datetime, expires_at: datetime) -> None:
        with self.atomic() as conn:
            conn.execute(
                "INSERT INTO auth_tokens (token, user_id, issued_at, expires_at) "
                "VALUES (?, ?, ?, ?)",
                (token, user_id, _iso(issued_at), _iso(expires_at)),
            )

    def get_token(self, token: str) -> dict | None:
        row = self._execute(
            "SELECT token, user_id, issued_at, expires_at FROM auth_tokens WHERE token = ?",
            (token,),
        ).fetchone()
        if row is None:
            return None
        return {
            "token": row[0],
            "user_id": row[1],
            "issued_at": _from_iso(row[2]),
            "expires_at": _from_iso(row[3]),
        }

    def delete_tokens_for_user(self, user_id: str, keep_token: str | None = None) -> int:
        with self.atomic() as conn:
            if keep_token is None:
                cur = conn.execute("DELETE FROM auth_tokens WHERE user_id = ?", (user_id,))
            else:
                cur = conn.execute(
                    "DELETE FROM auth_tokens WHERE user_id = ? AND token != ?",
                    (user_id, keep_token),
                )
            return cur.rowcount

    def export_jsonl(self, dest_dir: Path) -> list[Path]:
        return self._export_tables(_USER_TABLES, dest_dir)


class Storage:
    """Keeps one store handle per area plus the shared user store."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._areas: dict[str, AreaStore] = {}
        self._users: UserStore | None = None
        self._lock = threading.Lock()

    def users(self) -> UserStore:
        with self._lock:
            if self._users is None:
                path = self.data_dir / USERS_FILENAME
                self._users = UserStore(path, create=not path.exists())
            return self._users

    def area_path(self, area_id: str) -> Path:
        if not _AREA_ID_RE.match(area_id or ""):
            raise ValidationError(f"invalid area id {area_id!r}")
        return self.data_dir / f"{area_id}.db"

    def area_ids(self) -> list[str]:
        ids = []
        for path in sorted(self.data_dir.glob("*.db")):
            if path.name == USERS_FILENAME:
                continue
            ids.append(path.stem)
        return ids

    def has_area(self, area_id: str) -> bool:
        return self.area_path(area_id).exists()

    def open_area(self, area_id: str) -> AreaStore:
        with self._lock:
            store = self._areas.get(area_id)
            if store is None:
                path = self.area_path(area_id)
                if not path.exists():
                    raise NotFoundError(f"area {area_id!r} is not registered")
                store = AreaStore(path, area_id, create=False)
                self._areas[area_id] = store
            return store

    def create_area(self, area_id: str) -> AreaStore:
        with self._lock:
            path = self.area_path(area_id)
            store = AreaStore(path, area_id, create=True)
            self._areas[area_id] = store
            return store

    def close(self) -> None:
        with self._lock:
            for store in self._areas.values():
                store.close()
            self._areas.clear()
            if self._users is not None:
                self._users.close()
                self._users = None
