"""Core dialogue vocabulary: acts, frames, turn annotations, outlines, dialogues.

Everything here is a plain value object with a stable JSON encoding; the rest
of the pipeline communicates exclusively through these types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .scenario import Scenario
from . import scenario as _scenario_mod


class Speaker(Enum):
    USER = "U"
    SYSTEM = "S"


class DialogueAct(Enum):
    GREETING = "GREETING"
    INFORM = "INFORM"
    CONFIRM = "CONFIRM"
    REQUEST = "REQUEST"
    REQUEST_ALTS = "REQUEST_ALTS"
    OFFER = "OFFER"
    SELECT = "SELECT"
    AFFIRM = "AFFIRM"
    NEGATE = "NEGATE"
    NOTIFY_SUCCESS = "NOTIFY_SUCCESS"
    NOTIFY_FAILURE = "NOTIFY_FAILURE"
    THANK_YOU = "THANK_YOU"
    GOOD_BYE = "GOOD_BYE"
    CANT_UNDERSTAND = "CANT_UNDERSTAND"
    OTHER = "OTHER"


USER_ONLY_ACTS = {DialogueAct.REQUEST_ALTS, DialogueAct.OTHER}
SYSTEM_ONLY_ACTS = {
    DialogueAct.OFFER,
    DialogueAct.SELECT,
    DialogueAct.NOTIFY_SUCCESS,
    DialogueAct.NOTIFY_FAILURE,
}

SlotValue = "str | tuple[str, ...]"


@dataclass(frozen=True)
class Frame:
    """One dialogue act plus its ordered slot-value map.

    Values are strings; a tuple of strings appears only under SELECT, which
    presents several entities at once.
    """

    act: DialogueAct
    slots: dict[str, str | tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        normalized = {
            k: tuple(v) if isinstance(v, (list, tuple)) else str(v) for k, v in self.slots.items()
        }
        object.__setattr__(self, "slots", normalized)

    def slot_names(self) -> list[str]:
        return list(self.slots)


@dataclass(frozen=True)
class ApiState:
    kind: str  # not_queried | queried | committed
    match_count: int | None = None

    @classmethod
    def not_queried(cls) -> "ApiState":
        return cls("not_queried")

    @classmethod
    def queried(cls, n: int) -> "ApiState":
        return cls("queried", n)

    @classmethod
    def committed(cls) -> "ApiState":
        return cls("committed")


@dataclass(frozen=True)
class TurnAnnotation:
    speaker: Speaker
    frames: tuple[Frame, ...]
    dialogue_state: dict[str, str] = field(default_factory=dict)
    api_state: ApiState = field(default_factory=ApiState.not_queried)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))

    def acts(self) -> list[DialogueAct]:
        return [f.act for f in self.frames]

    def has_act(self, act: DialogueAct) -> bool:
        return any(f.act is act for f in self.frames)


@dataclass(frozen=True)
class SlotSpan:
    slot: str
    start: int
    end: int
    value: str


@dataclass(frozen=True)
class OutlineTurn:
    template: str
    annotation: TurnAnnotation


@dataclass(frozen=True)
class Outline:
    outline_id: str
    scenario: Scenario
    turns: tuple[OutlineTurn, ...]
    successful: bool = False
    truncated: bool = False
    # Attribute map of the entity each goal committed, or None where it failed.
    committed: tuple[dict[str, str] | None, ...] = ()


@dataclass(frozen=True)
class DialogueTurn:
    utterance: str
    spans: tuple[SlotSpan, ...]
    annotation: TurnAnnotation


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    outline_ref: str
    turns: tuple[DialogueTurn, ...]


def _frame_key(frame: Frame, with_values: bool) -> str:
    if not frame.slots:
        return frame.act.value
    if with_values:
        parts = []
        for name in sorted(frame.slots):
            v = frame.slots[name]
            rendered = "{" + ";".join(sorted(v)) + "}" if isinstance(v, tuple) else v
            parts.append(f"{name}={rendered}")
        return f"{frame.act.value}({','.join(parts)})"
    return f"{frame.act.value}({','.join(sorted(frame.slots))})"


def canonical_key(annotation: TurnAnnotation) -> str:
    """Value-free turn key: speaker, then each frame's act with sorted slot names.

    Two turns that differ only in slot values share a key; this is the unit
    used for transition and flow-diversity counting.
    """
    parts = [annotation.speaker.value]
    parts.extend(_frame_key(f, with_values=False) for f in annotation.frames)
    return "|".join(parts)


def valued_key(annotation: TurnAnnotation) -> str:
    """Turn key including slot values; used by the strict paraphrase map."""
    parts = [annotation.speaker.value]
    parts.extend(_frame_key(f, with_values=True) for f in annotation.frames)
    return "|".join(parts)


def validate_annotation(annotation: TurnAnnotation) -> list[str]:
    """Every violated turn invariant, as human-readable strings (empty = ok)."""
    violations: list[str] = []
    if not annotation.frames:
        violations.append("turn must contain at least one frame")
    for frame in annotation.frames:
        if annotation.speaker is Speaker.USER and frame.act in SYSTEM_ONLY_ACTS:
            violations.append(f"{frame.act.value} is system-only")
        if annotation.speaker is Speaker.SYSTEM and frame.act in USER_ONLY_ACTS:
            violations.append(f"{frame.act.value} is user-only")
        if frame.act is DialogueAct.REQUEST:
            for name, value in frame.slots.items():
                if value != "":
                    violations.append(f"REQUEST({name}) must carry an empty value")
        else:
            for name, value in frame.slots.items():
                if isinstance(value, tuple) and frame.act is not DialogueAct.SELECT:
                    violations.append(f"set-valued slot '{name}' outside SELECT")
    if annotation.speaker is Speaker.SYSTEM and len(annotation.frames) > 2:
        violations.append("system turn allows at most one response and one initiate frame")
    return violations


def validate_turn_sequence(annotations: list[TurnAnnotation]) -> list[str]:
    """Sequence-level invariants: system opens, speakers strictly alternate."""
    violations: list[str] = []
    if annotations and annotations[0].speaker is not Speaker.SYSTEM:
        violations.append("system must speak first")
    for i in range(1, len(annotations)):
        if annotations[i].speaker is annotations[i - 1].speaker:
            violations.append(f"speakers must alternate (turn {i})")
    for i, a in enumerate(annotations):
        violations.extend(f"turn {i}: {v}" for v in validate_annotation(a))
    return violations


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------


def frame_to_dict(frame: Frame) -> dict:
    slots = {k: list(v) if isinstance(v, tuple) else v for k, v in frame.slots.items()}
    return {"act": frame.act.value, "slots": slots}


def frame_from_dict(raw: dict) -> Frame:
    return Frame(act=DialogueAct(raw["act"]), slots=raw.get("slots", {}))


def annotation_to_dict(a: TurnAnnotation) -> dict:
    api: dict = {"kind": a.api_state.kind}
    if a.api_state.match_count is not None:
        api["match_count"] = a.api_state.match_count
    return {
        "speaker": a.speaker.value,
        "frames": [frame_to_dict(f) for f in a.frames],
        "dialogue_state": dict(a.dialogue_state),
        "api_state": api,
    }


def annotation_from_dict(raw: dict) -> TurnAnnotation:
    api_raw = raw.get("api_state", {"kind": "not_queried"})
    return TurnAnnotation(
        speaker=Speaker(raw["speaker"]),
        frames=tuple(frame_from_dict(f) for f in raw["frames"]),
        dialogue_state=dict(raw.get("dialogue_state", {})),
        api_state=ApiState(api_raw["kind"], api_raw.get("match_count")),
    )


def span_to_dict(s: SlotSpan) -> dict:
    return {"slot": s.slot, "start": s.start, "end": s.end, "value": s.value}


def span_from_dict(raw: dict) -> SlotSpan:
    return SlotSpan(raw["slot"], int(raw["start"]), int(raw["end"]), raw["value"])


def _goal_to_dict(g) -> dict:
    return {
        "intent": g.intent,
        "constraints": [
            {"slot": c.slot, "kind": c.kind, "values": list(c.values)} for c in g.constraints
        ],
        "requests": list(g.requests),
        "references": {
            slot: {
                "goal_index": r.goal_index,
                "description": r.description,
                "source_slot": r.source_slot,
            }
            for slot, r in g.references.items()
        },
        "unsatisfiable": g.unsatisfiable,
    }


def _goal_from_dict(raw: dict):
    return _scenario_mod.UserGoal(
        intent=raw["intent"],
        constraints=tuple(
            _scenario_mod.Constraint(c["slot"], c["kind"], tuple(c.get("values", ())))
            for c in raw["constraints"]
        ),
        requests=tuple(raw.get("requests", ())),
        references={
            slot: _scenario_mod.GoalReference(
                goal_index=r["goal_index"],
                description=r["description"],
                source_slot=r["source_slot"],
            )
            for slot, r in raw.get("references", {}).items()
        },
        unsatisfiable=bool(raw.get("unsatisfiable", False)),
    )


def scenario_to_dict(s: Scenario) -> dict:
    p = s.profile
    return {
        "seed": s.seed,
        "profile": {
            "p_multi_slot": p.p_multi_slot,
            "p_accept_flexible": p.p_accept_flexible,
            "p_request_alts": p.p_request_alts,
            "p_request_info": p.p_request_info,
            "max_goal_relaxations": p.max_goal_relaxations,
        },
        "goals": [_goal_to_dict(g) for g in s.goals],
    }


def scenario_from_dict(raw: dict) -> Scenario:
    return Scenario(
        profile=_scenario_mod.UserProfile(**raw["profile"]),
        goals=tuple(_goal_from_dict(g) for g in raw["goals"]),
        seed=int(raw.get("seed", 0)),
    )


def outline_to_dict(o: Outline) -> dict:
    return {
        "outline_id": o.outline_id,
        "successful": o.successful,
        "truncated": o.truncated,
        "committed": [dict(c) if c is not None else None for c in o.committed],
        "scenario": scenario_to_dict(o.scenario),
        "turns": [
            {"template": t.template, **annotation_to_dict(t.annotation)} for t in o.turns
        ],
    }


def outline_from_dict(raw: dict) -> Outline:
    return Outline(
        outline_id=raw["outline_id"],
        scenario=scenario_from_dict(raw["scenario"]),
        turns=tuple(
            OutlineTurn(template=t["template"], annotation=annotation_from_dict(t))
            for t in raw["turns"]
        ),
        successful=bool(raw.get("successful", False)),
        truncated=bool(raw.get("truncated", False)),
        committed=tuple(
            dict(c) if c is not None else None for c in raw.get("committed", ())
        ),
    )


def dialogue_to_dict(d: Dialogue) -> dict:
    return {
        "dialogue_id": d.dialogue_id,
        "outline_ref": d.outline_ref,
        "turns": [
            {
                "utterance": t.utterance,
                "spans": [span_to_dict(s) for s in t.spans],
                **annotation_to_dict(t.annotation),
            }
            for t in d.turns
        ],
    }


def dialogue_from_dict(raw: dict) -> Dialogue:
    return Dialogue(
        dialogue_id=raw["dialogue_id"],
        outline_ref=raw.get("outline_ref", ""),
        turns=tuple(
            DialogueTurn(
                utterance=t["utterance"],
                spans=tuple(span_from_dict(s) for s in t.get("spans", [])),
                annotation=annotation_from_dict(t),
            )
            for t in raw["turns"]
        ),
    )
