"""Agenda-based user bot: picks the next user turn from a goal and a profile.

The bot keeps a stack of pending frames built from the goal. Each step either
responds to what the system just did (requests, offers, confirmations,
failure notices) or pops pending frames off the stack; behavior probabilities
come from the user profile.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .dialogue import ApiState, DialogueAct, Frame, Speaker, TurnAnnotation
from .errors import ClosedDialogueError
from .scenario import FIXED, FLEXIBLE, ONE_OF, OPEN, UserGoal, UserProfile
from .task_spec import DONTCARE, Entity

MERGE_EXTRA_CAP = 3  # additional informs folded into one turn when verbose


@dataclass
class Agenda:
    stack: list[Frame]
    goal: UserGoal
    relaxations_used: int = 0
    current_values: dict[str, str] = field(default_factory=dict)
    informed: dict[str, str] = field(default_factory=dict)
    one_of_index: dict[str, int] = field(default_factory=dict)
    flex_accept: dict[str, bool] = field(default_factory=dict)
    flex_opened: set[str] = field(default_factory=set)
    asked_info: set[str] = field(default_factory=set)
    used_request_alts: bool = False
    closed: bool = False

    def copy(self) -> "Agenda":
        return Agenda(
            stack=list(self.stack),
            goal=self.goal,
            relaxations_used=self.relaxations_used,
            current_values=dict(self.current_values),
            informed=dict(self.informed),
            one_of_index=dict(self.one_of_index),
            flex_accept=dict(self.flex_accept),
            flex_opened=set(self.flex_opened),
            asked_info=set(self.asked_info),
            used_request_alts=self.used_request_alts,
            closed=self.closed,
        )


def init_agenda(goal: UserGoal, profile: UserProfile, rng: random.Random | None = None) -> Agenda:
    """Build the initial stack: bye and thanks at the bottom, one inform per
    non-open constraint, and the intent inform on top.

    Whether the user would settle for an alternative on each flexible slot is
    decided up front so later steps stay deterministic.
    """
    agenda = Agenda(stack=[], goal=goal)
    agenda.stack.append(Frame(DialogueAct.GOOD_BYE))
    agenda.stack.append(Frame(DialogueAct.THANK_YOU))
    for constraint in reversed(goal.constraints):
        agenda.current_values[constraint.slot] = (
            DONTCARE if constraint.kind == OPEN else constraint.value
        )
        if constraint.kind == ONE_OF:
            agenda.one_of_index[constraint.slot] = 0
        if constraint.kind == FLEXIBLE:
            accept = rng.random() < profile.p_accept_flexible if rng else True
            agenda.flex_accept[constraint.slot] = accept
        if constraint.kind != OPEN:
            agenda.stack.append(Frame(DialogueAct.INFORM, {constraint.slot: constraint.value}))
    agenda.stack.append(Frame(DialogueAct.INFORM, {"intent": goal.intent}))
    return agenda


def is_goal_satisfied(goal: UserGoal, committed: Entity | None) -> bool:
    """True when something was committed and it honors every rigid constraint.

    An entity that simply lacks an attribute (a transaction parameter such as
    party size) counts as compatible; flexible and open constraints are
    always satisfied.
    """
    if committed is None:
        return False
    for c in goal.constraints:
        value = committed.get(c.slot)
        if value is None:
            continue
        if c.kind == FIXED and value.lower() != c.value.lower():
            return False
        if c.kind == ONE_OF and value.lower() not in {v.lower() for v in c.values}:
            return False
    return True


def can_relax(agenda: Agenda, profile: UserProfile) -> bool:
    """Whether the user still has a constraint it is willing to loosen."""
    return _find_relaxation(agenda, profile) is not None


def _find_relaxation(
    agenda: Agenda, profile: UserProfile, prefer_slots: tuple[str, ...] = ()
) -> tuple[str, str] | None:
    """(slot, new value) of the next relaxation step, or None.

    Alternative-list constraints advance to their next value before flexible
    ones open up entirely; a slot hit by the current offer is tried first.
    """
    if agenda.relaxations_used >= profile.max_goal_relaxations:
        return None

    def candidates(kind: str):
        ordered = [c for c in agenda.goal.constraints if c.slot in prefer_slots and c.kind == kind]
        ordered += [
            c for c in agenda.goal.constraints if c.slot not in prefer_slots and c.kind == kind
        ]
        return ordered

    for c in candidates(ONE_OF):
        idx = agenda.one_of_index.get(c.slot, 0)
        if idx + 1 < len(c.values):
            return c.slot, c.values[idx + 1]
    for c in candidates(FLEXIBLE):
        if c.slot not in agenda.flex_opened and agenda.flex_accept.get(c.slot, True):
            return c.slot, DONTCARE
    return None


def _apply_relaxation(agenda: Agenda, slot: str, value: str) -> None:
    constraint = agenda.goal.constraint_for(slot)
    if constraint and constraint.kind == ONE_OF:
        agenda.one_of_index[slot] = agenda.one_of_index.get(slot, 0) + 1
    if constraint and constraint.kind == FLEXIBLE:
        agenda.flex_opened.add(slot)
    agenda.relaxations_used += 1
    agenda.current_values[slot] = value


def _record_informs(agenda: Agenda, slots: dict) -> None:
    for name, value in slots.items():
        if name == "intent":
            continue
        agenda.informed[name] = value if isinstance(value, str) else str(value)
        agenda.stack = [
            f
            for f in agenda.stack
            if not (f.act is DialogueAct.INFORM and list(f.slots) == [name])
        ]


def _offer_violations(agenda: Agenda, offer: Frame) -> list[str]:
    """Slots of the offer that clash with a constraint the user insists on."""
    bad: list[str] = []
    for slot, value in offer.slots.items():
        constraint = agenda.goal.constraint_for(slot)
        if constraint is None or constraint.kind == OPEN:
            continue
        offered = value[0] if isinstance(value, tuple) else value
        low = offered.lower()
        if constraint.kind == FIXED and low != constraint.value.lower():
            bad.append(slot)
        elif constraint.kind == ONE_OF and low not in {v.lower() for v in constraint.values}:
            bad.append(slot)
        elif constraint.kind == FLEXIBLE and slot not in agenda.flex_opened:
            if low != constraint.value.lower():
                if agenda.flex_accept.get(slot, True):
                    agenda.flex_opened.add(slot)  # settled for the alternative
                else:
                    bad.append(slot)
    return bad


def _confirm_mismatches(agenda: Agenda, confirm: Frame) -> dict[str, str]:
    """Confirmed slots whose value the user disagrees with -> corrected value."""
    corrections: dict[str, str] = {}
    for slot, value in confirm.slots.items():
        constraint = agenda.goal.constraint_for(slot)
        if constraint is None or constraint.kind in (OPEN, FLEXIBLE):
            continue
        if agenda.current_values.get(slot, DONTCARE) == DONTCARE:
            continue
        offered = (value[0] if isinstance(value, tuple) else value).lower()
        if constraint.kind == FIXED and offered != agenda.current_values[slot].lower():
            corrections[slot] = agenda.current_values[slot]
        elif constraint.kind == ONE_OF and offered not in {v.lower() for v in constraint.values}:
            corrections[slot] = agenda.current_values[slot]
    return corrections


def _pop_turn(agenda: Agenda, profile: UserProfile, rng: random.Random) -> list[Frame]:
    frame = agenda.stack.pop()
    if frame.act is DialogueAct.THANK_YOU:
        closing = [frame]
        if agenda.stack and agenda.stack[-1].act is DialogueAct.GOOD_BYE:
            closing.append(agenda.stack.pop())
        agenda.closed = True
        return closing
    if frame.act is DialogueAct.GOOD_BYE:
        agenda.closed = True
        return [frame]
    if frame.act is DialogueAct.INFORM:
        slots = {k: agenda.current_values.get(k, v) if k != "intent" else v
                 for k, v in frame.slots.items()}
        extra = 0
        while (
            agenda.stack
            and agenda.stack[-1].act is DialogueAct.INFORM
            and extra < MERGE_EXTRA_CAP
            and rng.random() < profile.p_multi_slot
        ):
            nxt = agenda.stack.pop()
            for k, v in nxt.slots.items():
                slots[k] = agenda.current_values.get(k, v)
            extra += 1
        return [Frame(DialogueAct.INFORM, slots)]
    return [frame]


def _goodbye(agenda: Agenda) -> list[Frame]:
    agenda.closed = True
    agenda.stack = []
    return [Frame(DialogueAct.THANK_YOU), Frame(DialogueAct.GOOD_BYE)]


def next_user_turn(
    agenda: Agenda,
    last_system: TurnAnnotation | None,
    profile: UserProfile,
    rng: random.Random,
) -> tuple[TurnAnnotation, Agenda]:
    """Compute the next user turn and the agenda that results from it."""
    if agenda.closed:
        raise ClosedDialogueError("user already said good bye")
    a = agenda.copy()

    offer = request = confirm = None
    failed = success = False
    if last_system is not None:
        for f in last_system.frames:
            if f.act in (DialogueAct.OFFER, DialogueAct.SELECT) and offer is None:
                offer = f
            elif f.act is DialogueAct.REQUEST and request is None:
                request = f
            elif f.act is DialogueAct.CONFIRM and confirm is None:
                confirm = f
            elif f.act is DialogueAct.NOTIFY_FAILURE:
                failed = True
            elif f.act is DialogueAct.NOTIFY_SUCCESS:
                success = True

    frames: list[Frame]
    if success:
        frames = _goodbye(a)
    elif failed and offer is None:
        step = _find_relaxation(a, profile)
        if step is None:
            frames = _goodbye(a)
        else:
            slot, value = step
            _apply_relaxation(a, slot, value)
            frames = [Frame(DialogueAct.INFORM, {slot: value})]
    elif offer is not None:
        pending_info = [s for s in a.goal.requests if s not in a.asked_info]
        violations = _offer_violations(a, offer)
        if not violations and pending_info and rng.random() < profile.p_request_info:
            slot = pending_info[0]
            a.asked_info.add(slot)
            frames = [Frame(DialogueAct.REQUEST, {slot: ""})]
        elif not violations:
            if not a.used_request_alts and rng.random() < profile.p_request_alts:
                a.used_request_alts = True
                frames = [Frame(DialogueAct.REQUEST_ALTS)]
            else:
                frames = [Frame(DialogueAct.AFFIRM)]
        else:
            step = _find_relaxation(a, profile, prefer_slots=tuple(violations))
            if step is None:
                frames = [Frame(DialogueAct.NEGATE)]
            else:
                slot, value = step
                _apply_relaxation(a, slot, value)
                frames = [Frame(DialogueAct.NEGATE), Frame(DialogueAct.INFORM, {slot: value})]
    elif confirm is not None:
        corrections = _confirm_mismatches(a, confirm)
        if corrections:
            frames = [Frame(DialogueAct.NEGATE), Frame(DialogueAct.INFORM, corrections)]
        else:
            frames = [Frame(DialogueAct.AFFIRM)]
    elif request is not None:
        slots = {name: a.current_values.get(name, DONTCARE) for name in request.slot_names()}
        extra = 0
        while (
            a.stack
            and a.stack[-1].act is DialogueAct.INFORM
            and "intent" not in a.stack[-1].slots
            and extra < MERGE_EXTRA_CAP
            and rng.random() < profile.p_multi_slot
        ):
            nxt = a.stack.pop()
            for k, v in nxt.slots.items():
                slots[k] = a.current_values.get(k, v)
            extra += 1
        frames = [Frame(DialogueAct.INFORM, slots)]
    else:
        frames = _pop_turn(a, profile, rng)

    for frame in frames:
        if frame.act is DialogueAct.INFORM:
            _record_informs(a, frame.slots)

    annotation = TurnAnnotation(
        speaker=Speaker.USER,
        frames=tuple(frames),
        dialogue_state=dict(a.informed),
        api_state=last_system.api_state if last_system else ApiState.not_queried(),
    )
    return annotation, a
