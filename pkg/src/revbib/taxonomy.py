"""Per-area classification trees: two levels, field -> sub-field.

Identifiers are slugs minted from names at creation time and stable across
renames, so records that reference a path survive vocabulary cleanups.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConflictError, IntegrityError, NotFoundError, ValidationError

_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(name: str) -> str:
    text = unicodedata.normalize("NFKD", name)
    text = "".join(c for c in text if not unicodedata.combining(c))
    slug = _SLUG_RE.sub("-", text.casefold()).strip("-")
    if not slug:
        raise ValidationError(f"cannot derive an identifier from {name!r}")
    return slug


def _unique_slug(name: str, taken: set[str]) -> str:
    base = slugify(name)
    slug = base
    n = 2
    while slug in taken:
        slug = f"{base}-{n}"
        n += 1
    return slug


@dataclass
class Subfield:
    subfield_id: str
    name: str


@dataclass
class TaxonomyField:
    field_id: str
    name: str
    subfields: list[Subfield] = field(default_factory=list)

    def subfield(self, subfield_id: str) -> Subfield | None:
        for sf in self.subfields:
            if sf.subfield_id == subfield_id:
                return sf
        return None


@dataclass
class TaxonomyArea:
    area_id: str
    name: str
    fields: list[TaxonomyField] = field(default_factory=list)

    def field(self, field_id: str) -> TaxonomyField | None:
        for f in self.fields:
            if f.field_id == field_id:
                return f
        return None

    def has_path(self, field_id: str, subfield_id: str) -> bool:
        f = self.field(field_id)
        return f is not None and f.subfield(subfield_id) is not None

    def validate(self) -> None:
        if not self.name or not self.name.strip():
            raise ValidationError("area name must be non-empty")
        if not self.fields:
            raise ValidationError("area must define at least one field")
        field_names: set[str] = set()
        for f in self.fields:
            if not f.name or not f.name.strip():
                raise ValidationError("field name must be non-empty")
            key = f.name.casefold()
            if key in field_names:
                raise ValidationError(f"duplicate field name {f.name!r}")
            field_names.add(key)
            sub_names: set[str] = set()
            for sf in f.subfields:
                if not sf.name or not sf.name.strip():
                    raise ValidationError("sub-field name must be non-empty")
                skey = sf.name.casefold()
                if skey in sub_names:
                    raise ValidationError(
                        f"duplicate sub-field name {sf.name!r} under {f.name!r}"
                    )
                sub_names.add(skey)

    def to_dict(self) -> dict:
        return {
            "area_id": self.area_id,
            "name": self.name,
            "fields": [
                {
                    "field_id": f.field_id,
                    "name": f.name,
                    "subfields": [
                        {"subfield_id": sf.subfield_id, "name": sf.name} for sf in f.subfields
                    ],
                }
                for f in self.fields
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaxonomyArea":
        return cls(
            area_id=data["area_id"],
            name=data["name"],
            fields=[
                TaxonomyField(
                    field_id=f["field_id"],
                    name=f["name"],
                    subfields=[
                        Subfield(sf["subfield_id"], sf["name"]) for sf in f.get("subfields", [])
                    ],
                )
                for f in data.get("fields", [])
            ],
        )


def build_area(name: str, tree: dict) -> TaxonomyArea:
    """Mint ids for a {name, fields: [{name, subfields: [name]}]} shaped tree."""
    if not name or not name.strip():
        raise ValidationError("area name must be non-empty")
    area = TaxonomyArea(area_id=slugify(name), name=name.strip())
    field_slugs: set[str] = set()
    for f in tree.get("fields", []):
        fname = f["name"] if isinstance(f, dict) else str(f)
        fid = _unique_slug(fname, field_slugs)
        field_slugs.add(fid)
        tf = TaxonomyField(field_id=fid, name=fname.strip())
        sub_slugs: set[str] = set()
        for sub in (f.get("subfields", []) if isinstance(f, dict) else []):
            sname = sub["name"] if isinstance(sub, dict) else str(sub)
            sid = _unique_slug(sname, sub_slugs)
            sub_slugs.add(sid)
            tf.subfields.append(Subfield(subfield_id=sid, name=sname.strip()))
        area.fields.append(tf)
    area.validate()
    return area


def load_seed(seed_name: str = "computing") -> TaxonomyArea:
    """Load a packaged seed tree (currently the combined computing taxonomy)."""
    try:
        raw = resources.files("revbib.seeds").joinpath(f"{seed_name}.json").read_text("utf-8")
    except FileNotFoundError:
        raise NotFoundError(f"no packaged taxonomy seed named {seed_name!r}")
    data = json.loads(raw)
    return build_area(data["name"], data)


class SubfieldAction:
    ADD = "add"
    RENAME = "rename"
    DELETE = "delete"


def apply_subfield_action(
    area: TaxonomyArea,
    field_id: str,
    action: str,
    *,
    name: str | None = None,
    subfield_id: str | None = None,
    referenced: bool = False,
) -> TaxonomyArea:
    """Mutate the tree in place for one A3-style action and return it.

    ``referenced`` reports whether any non-rejected record points at the
    target sub-field; deletes are refused while that holds.
    """
    f = area.field(field_id)
    if f is None:
        raise NotFoundError(f"field {field_id!r} not found in area {area.area_id!r}")

    if action == SubfieldAction.ADD:
        if not name or not name.strip():
            raise ValidationError("sub-field name must be non-empty")
        if any(sf.name.casefold() == name.casefold() for sf in f.subfields):
            raise ConflictError(f"sub-field named {name!r} already exists under {f.name!r}")
        sid = _unique_slug(name, {sf.subfield_id for sf in f.subfields})
        f.subfields.append(Subfield(subfield_id=sid, name=name.strip()))
        return area

    if subfield_id is None:
        raise ValidationError(f"{action} requires a subfield_id")
    target = f.subfield(subfield_id)
    if target is None:
        raise NotFoundError(f"sub-field {subfield_id!r} not found under {field_id!r}")

    if action == SubfieldAction.RENAME:
        if not name or not name.strip():
            raise ValidationError("sub-field name must be non-empty")
        clash = any(
            sf.name.casefold() == name.casefold() and sf.subfield_id != subfield_id
            for sf in f.subfields
        )
        if clash:
            raise ConflictError(f"sub-field named {name!r} already exists under {f.name!r}")
        target.name = name.strip()
        return area

    if action == SubfieldAction.DELETE:
        if referenced:
            raise IntegrityError(
                f"sub-field {subfield_id!r} is referenced by non-rejected records"
            )
        f.subfields.remove(target)
        return area

    raise ValidationError(f"unknown sub-field action {action!r}")
