"""Task specification: slot schema, intents, and the in-memory entity database.

The database stands in for the transactional API a dialogue assistant would
call: it is loaded once from flat JSON files, validated against the schema,
and queried with exact-match constraints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

from .errors import ParseError, UnknownSlotError, ValidationError

# Reserved constraint value: filters nothing, but is recorded as an explicit
# "anything goes" statement by the user.
DONTCARE = "dontcare"

CATEGORICAL = "categorical"
FREE_TEXT = "free_text"


@dataclass(frozen=True)
class SlotDef:
    name: str
    kind: str = CATEGORICAL
    values: tuple[str, ...] = ()
    requestable: bool = False
    constrainable: bool = True


@dataclass(frozen=True)
class TaskSchema:
    task_name: str
    intents: tuple[str, ...]
    slots: tuple[SlotDef, ...]

    def slot(self, name: str) -> SlotDef:
        for s in self.slots:
            if s.name == name:
                return s
        raise UnknownSlotError(f"slot '{name}' not declared in schema '{self.task_name}'")

    def slot_names(self) -> list[str]:
        return [s.name for s in self.slots]

    def constrainable_slots(self) -> list[SlotDef]:
        return [s for s in self.slots if s.constrainable]


@dataclass(frozen=True)
class Entity:
    attributes: dict[str, str]

    def get(self, slot: str) -> str | None:
        return self.attributes.get(slot)


@dataclass(frozen=True)
class EntityDatabase:
    schema_ref: str
    entities: tuple[Entity, ...]

    def attribute_slots(self) -> set[str]:
        """Names of slots that at least one entity carries as an attribute.

        Slots outside this set (party size, booking date, ...) are
        transaction parameters: constraints on them never filter the table.
        """
        found: set[str] = set()
        for e in self.entities:
            found.update(e.attributes)
        return found

    def values_for(self, slot: str) -> list[str]:
        """Distinct values of a slot across the database, in first-seen order."""
        seen: list[str] = []
        for e in self.entities:
            v = e.attributes.get(slot)
            if v is not None and v not in seen:
                seen.append(v)
        return seen


@dataclass(frozen=True)
class TaskSpec:
    schema: TaskSchema
    db: EntityDatabase

    @property
    def task_name(self) -> str:
        return self.schema.task_name


def _parse_json(doc: str, what: str) -> dict:
    try:
        parsed = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} is not valid JSON: {exc}") from exc
    if not isinstance(parsed, dict):
        raise ParseError(f"{what} must be a single JSON object")
    return parsed


def _parse_schema(raw: dict) -> TaskSchema:
    name = raw.get("task_name")
    if not name or not isinstance(name, str):
        raise ValidationError("missing or non-string task_name", "schema.task_name")
    intents = raw.get("intents") or []
    if not intents:
        raise ValidationError("at least one intent required", "schema.intents")
    slots: list[SlotDef] = []
    seen: set[str] = set()
    for i, s in enumerate(raw.get("slots") or []):
        path = f"schema.slots[{i}]"
        slot_name = s.get("name")
        if not slot_name:
            raise ValidationError("slot is missing a name", path)
        if slot_name in seen:
            raise ValidationError(f"duplicate slot name '{slot_name}'", path)
        seen.add(slot_name)
        kind = s.get("kind", CATEGORICAL)
        if kind not in (CATEGORICAL, FREE_TEXT):
            raise ValidationError(f"unknown slot kind '{kind}'", f"{path}.kind")
        values = tuple(s.get("values") or ())
        if kind == CATEGORICAL and not values:
            raise ValidationError("categorical slot needs a value list", f"{path}.values")
        if kind == FREE_TEXT and values:
            raise ValidationError("free_text slot must not list values", f"{path}.values")
        slots.append(
            SlotDef(
                name=slot_name,
                kind=kind,
                values=values,
                requestable=bool(s.get("requestable", False)),
                constrainable=bool(s.get("constrainable", True)),
            )
        )
    schema = TaskSchema(task_name=name, intents=tuple(intents), slots=tuple(slots))
    if not schema.constrainable_slots():
        raise ValidationError("schema needs at least one constrainable slot", "schema.slots")
    return schema


def _parse_db(raw: dict, schema: TaskSchema) -> EntityDatabase:
    ref = raw.get("task_name")
    if ref != schema.task_name:
        raise ValidationError(
            f"database is for task '{ref}', schema is '{schema.task_name}'", "db.task_name"
        )
    declared = set(schema.slot_names())
    entities: list[Entity] = []
    for i, attrs in enumerate(raw.get("entities") or []):
        for key in attrs:
            if key not in declared:
                raise ValidationError(
                    f"entity attribute '{key}' is not a schema slot", f"db.entities[{i}].{key}"
                )
        entities.append(Entity(attributes={k: str(v) for k, v in attrs.items()}))
    return EntityDatabase(schema_ref=ref, entities=tuple(entities))


def load_task_spec(schema_doc: str, db_doc: str) -> TaskSpec:
    """Parse and validate a schema document plus its entity database."""
    schema = _parse_schema(_parse_json(schema_doc, "schema document"))
    db = _parse_db(_parse_json(db_doc, "database document"), schema)
    return TaskSpec(schema=schema, db=db)


def load_task_spec_files(schema_path, db_path) -> TaskSpec:
    with open(schema_path, encoding="utf-8") as f:
        schema_doc = f.read()
    with open(db_path, encoding="utf-8") as f:
        db_doc = f.read()
    return load_task_spec(schema_doc, db_doc)


def query(db: EntityDatabase, constraints: Mapping[str, str], schema: TaskSchema | None = None) -> list[Entity]:
    """Entities matching every constraint, in database order.

    Matching is exact case-insensitive string equality; a DONTCARE value
    imposes no filter. When a schema is supplied, constraints on undeclared
    slots raise UnknownSlotError.
    """
    if schema is not None:
        declared = set(schema.slot_names())
        for slot in constraints:
            if slot not in declared:
                raise UnknownSlotError(f"constraint on undeclared slot '{slot}'")
    active = {s: v.lower() for s, v in constraints.items() if v.lower() != DONTCARE}
    out = []
    for e in db.entities:
        if all((e.attributes.get(s) or "").lower() == v for s, v in active.items()):
            out.append(e)
    return out
