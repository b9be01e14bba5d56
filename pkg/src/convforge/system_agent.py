"""Rule-based system bot: a finite-state machine over task-independent phases.

Each turn pairs a response frame (acknowledge informs, answer requests,
report an empty query) with an initiate frame that pushes the transaction
forward: gather preferences, query, offer, confirm, complete.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .dialogue import ApiState, DialogueAct, Frame, Speaker, TurnAnnotation
from .errors import UnresolvedReferenceError
from .scenario import GoalReference
from .task_spec import DONTCARE, Entity, TaskSpec, query

GREET = "greet"
GATHER = "gather"
OFFERED = "offered"
CONFIRMING = "confirming"
DONE = "done"
FAILED = "failed"


@dataclass(frozen=True)
class SystemConfig:
    select_prob: float = 0.0
    select_size: int = 2


@dataclass(frozen=True)
class SystemState:
    phase: str = GREET
    intent: str | None = None
    constraints: dict[str, str] = field(default_factory=dict)
    offered: Entity | None = None
    offer_cursor: int = 0
    committed: Entity | None = None
    api: ApiState = field(default_factory=ApiState.not_queried)


def is_transactional(intent: str | None) -> bool:
    """Find-style intents end at the offer; everything else books/reserves."""
    return not (intent or "").startswith(("find", "search"))


def resolve_reference(reference: GoalReference, episode_memory: list[Entity | None]) -> str:
    """Render a cross-goal slot value from the earlier goal's chosen entity."""
    if reference.goal_index >= len(episode_memory):
        raise UnresolvedReferenceError(f"no goal at index {reference.goal_index}")
    entity = episode_memory[reference.goal_index]
    if entity is None:
        raise UnresolvedReferenceError(f"goal {reference.goal_index} committed nothing")
    try:
        return reference.description.format(**entity.attributes)
    except KeyError as exc:
        raise UnresolvedReferenceError(f"referenced attribute {exc} missing") from exc


def _db_constraints(state: SystemState, spec: TaskSpec) -> dict[str, str]:
    db_slots = spec.db.attribute_slots()
    return {s: v for s, v in state.constraints.items() if s in db_slots}


def _missing_slots(state: SystemState, spec: TaskSpec) -> list[str]:
    db_slots = spec.db.attribute_slots()
    names = []
    for slot in spec.schema.constrainable_slots():
        if not is_transactional(state.intent) and slot.name not in db_slots:
            continue  # a pure search never needs booking parameters
        if slot.name not in state.constraints:
            names.append(slot.name)
    return names


def _identity_slot(spec: TaskSpec) -> str | None:
    """The slot that names an entity: the first free-text database column."""
    db_slots = spec.db.attribute_slots()
    for slot in spec.schema.slots:
        if slot.name in db_slots and slot.kind == "free_text":
            return slot.name
    for slot in spec.schema.slots:
        if slot.name in db_slots:
            return slot.name
    return None


def _offer_slots(entity: Entity, state: SystemState, spec: TaskSpec) -> dict[str, str]:
    """Attributes worth surfacing: whatever the user left open, else identity."""
    out: dict[str, str] = {}
    db_slots = spec.db.attribute_slots()
    for slot in spec.schema.slots:
        if slot.name not in db_slots:
            continue
        value = entity.get(slot.name)
        if value is None:
            continue
        if state.constraints.get(slot.name, DONTCARE) == DONTCARE:
            out[slot.name] = value
    if not out:
        identity = _identity_slot(spec)
        if identity and entity.get(identity) is not None:
            out[identity] = entity.get(identity)
    return out


def _confirm_slots(state: SystemState, spec: TaskSpec) -> dict[str, str]:
    """Transaction summary: the user's stated constraints, resolved against
    the chosen entity where it carries the attribute."""
    out: dict[str, str] = {}
    entity = state.offered
    identity = _identity_slot(spec)
    if identity and entity is not None and entity.get(identity) is not None:
        out[identity] = entity.get(identity)
    for slot in spec.schema.slots:
        value = state.constraints.get(slot.name)
        if value is None or value == DONTCARE or slot.name in out:
            continue
        resolved = entity.get(slot.name) if entity is not None else None
        out[slot.name] = resolved if resolved is not None else value
    return out


def next_system_turn(
    state: SystemState,
    last_user: TurnAnnotation | None,
    spec: TaskSpec,
    config: SystemConfig | None = None,
    rng: random.Random | None = None,
) -> tuple[TurnAnnotation, SystemState]:
    """One FSM step: consume the user's turn, emit response + initiate frames."""
    config = config or SystemConfig()

    def emit(frames: list[Frame], new_state: SystemState) -> tuple[TurnAnnotation, SystemState]:
        annotation = TurnAnnotation(
            speaker=Speaker.SYSTEM,
            frames=tuple(frames),
            dialogue_state=dict(new_state.constraints),
            api_state=new_state.api,
        )
        return annotation, new_state

    if last_user is None:
        return emit([Frame(DialogueAct.GREETING)], replace(state, phase=GATHER))

    informs: dict[str, str] = {}
    requested: list[str] = []
    has_affirm = has_negate = has_alts = has_bye = False
    for f in last_user.frames:
        if f.act is DialogueAct.INFORM:
            for k, v in f.slots.items():
                informs[k] = v if isinstance(v, str) else v[0]
        elif f.act is DialogueAct.REQUEST:
            requested.extend(f.slot_names())
        elif f.act is DialogueAct.AFFIRM:
            has_affirm = True
        elif f.act is DialogueAct.NEGATE:
            has_negate = True
        elif f.act is DialogueAct.REQUEST_ALTS:
            has_alts = True
        elif f.act in (DialogueAct.GOOD_BYE, DialogueAct.THANK_YOU):
            has_bye = True

    s = state
    known = set(spec.schema.slot_names())
    if informs:
        new_constraints = dict(s.constraints)
        intent = s.intent
        for slot, value in informs.items():
            if slot == "intent":
                intent = value
            elif slot in known:
                new_constraints[slot] = value
            else:
                return emit([Frame(DialogueAct.CANT_UNDERSTAND)], state)
        s = replace(s, intent=intent, constraints=new_constraints)

    if has_bye:
        return emit([Frame(DialogueAct.GOOD_BYE)], s)

    if has_alts:
        if state.phase != OFFERED:
            return emit([Frame(DialogueAct.CANT_UNDERSTAND)], state)
        results = query(spec.db, _db_constraints(s, spec), spec.schema)
        cursor = s.offer_cursor + 1
        s = replace(s, api=ApiState.queried(len(results)))
        if cursor < len(results):
            s = replace(s, offered=results[cursor], offer_cursor=cursor)
            return emit([Frame(DialogueAct.OFFER, _offer_slots(results[cursor], s, spec))], s)
        if not results:
            return emit([Frame(DialogueAct.NOTIFY_FAILURE)], replace(s, phase=GATHER))
        # Nothing new to show: report that and put the best match back up.
        s = replace(s, offered=results[0], offer_cursor=0)
        return emit(
            [
                Frame(DialogueAct.NOTIFY_FAILURE),
                Frame(DialogueAct.OFFER, _offer_slots(results[0], s, spec)),
            ],
            s,
        )

    if has_affirm and state.phase == OFFERED:
        if is_transactional(s.intent):
            s = replace(s, phase=CONFIRMING)
            return emit([Frame(DialogueAct.CONFIRM, _confirm_slots(s, spec))], s)
        s = replace(s, phase=DONE, committed=s.offered, api=ApiState.committed())
        return emit([Frame(DialogueAct.NOTIFY_SUCCESS)], s)

    if has_affirm and state.phase == CONFIRMING:
        s = replace(s, phase=DONE, committed=s.offered, api=ApiState.committed())
        return emit([Frame(DialogueAct.NOTIFY_SUCCESS)], s)

    if requested and state.phase == OFFERED and s.offered is not None:
        answers = {
            slot: s.offered.get(slot) or "not available" for slot in requested if slot in known
        }
        if not answers:
            return emit([Frame(DialogueAct.CANT_UNDERSTAND)], state)
        return emit(
            [
                Frame(DialogueAct.INFORM, answers),
                Frame(DialogueAct.OFFER, _offer_slots(s.offered, s, spec)),
            ],
            s,
        )

    if informs:
        if state.phase == CONFIRMING:
            return emit(
                [Frame(DialogueAct.AFFIRM), Frame(DialogueAct.CONFIRM, _confirm_slots(s, spec))],
                s,
            )
        results = query(spec.db, _db_constraints(s, spec), spec.schema)
        s = replace(s, api=ApiState.queried(len(results)))
        if not results:
            return emit([Frame(DialogueAct.NOTIFY_FAILURE)], replace(s, phase=GATHER))
        missing = _missing_slots(s, spec)
        if missing:
            s = replace(s, phase=GATHER)
            return emit(
                [Frame(DialogueAct.AFFIRM), Frame(DialogueAct.REQUEST, {missing[0]: ""})], s
            )
        s = replace(s, phase=OFFERED, offer_cursor=0, offered=results[0])
        if (
            rng is not None
            and len(results) >= 2
            and config.select_size >= 2
            and rng.random() < config.select_prob
        ):
            identity = _identity_slot(spec)
            picks = results[: config.select_size]
            slots: dict = {}
            if identity:
                slots[identity] = tuple(e.get(identity) or "" for e in picks)
            for name, value in _offer_slots(picks[0], s, spec).items():
                if name == identity:
                    continue
                if all((e.get(name) or "").lower() == value.lower() for e in picks):
                    slots[name] = value
            if slots:
                return emit([Frame(DialogueAct.SELECT, slots)], s)
        return emit([Frame(DialogueAct.OFFER, _offer_slots(results[0], s, spec))], s)

    if has_negate and state.phase in (OFFERED, CONFIRMING):
        return emit([Frame(DialogueAct.NOTIFY_FAILURE)], replace(s, phase=FAILED))

    return emit([Frame(DialogueAct.CANT_UNDERSTAND)], state)


# Rows: (phase, user input, system response, next phase). Mirrors the code
# above; kept as data so developers can review the policy without reading it.
TRANSITIONS: tuple[tuple[str, str, str, str], ...] = (
    (GREET, "-", "GREETING", GATHER),
    (GATHER, "INFORM (slots missing)", "AFFIRM + REQUEST next missing slot", GATHER),
    (GATHER, "INFORM (no matches)", "NOTIFY_FAILURE", GATHER),
    (GATHER, "INFORM (all gathered)", "OFFER / SELECT first matches", OFFERED),
    (OFFERED, "REQUEST info slot", "INFORM answer + re-OFFER", OFFERED),
    (OFFERED, "REQUEST_ALTS (more matches)", "OFFER next match", OFFERED),
    (OFFERED, "REQUEST_ALTS (exhausted)", "NOTIFY_FAILURE + re-OFFER best", OFFERED),
    (OFFERED, "INFORM (modify prefs)", "re-query: OFFER / REQUEST / NOTIFY_FAILURE", OFFERED),
    (OFFERED, "AFFIRM (transactional)", "CONFIRM summary", CONFIRMING),
    (OFFERED, "AFFIRM (find-only)", "NOTIFY_SUCCESS", DONE),
    (OFFERED, "NEGATE (terminal)", "NOTIFY_FAILURE", FAILED),
    (CONFIRMING, "AFFIRM", "NOTIFY_SUCCESS", DONE),
    (CONFIRMING, "NEGATE + INFORM", "AFFIRM + CONFIRM updated summary", CONFIRMING),
    (CONFIRMING, "NEGATE (terminal)", "NOTIFY_FAILURE", FAILED),
    ("any", "unhandled act", "CANT_UNDERSTAND (state unchanged)", "unchanged"),
)


def transition_report() -> str:
    """The FSM policy as an aligned text table, for developer review."""
    headers = ("Phase", "User input", "System turn", "Next phase")
    rows = [headers] + [tuple(r) for r in TRANSITIONS]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
