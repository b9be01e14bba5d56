"""Dialogue self-play: alternate the user and system bots to emit outlines.

An episode walks the scenario's goals in order as sub-dialogues; values that
point back at an earlier goal are pinned once that goal has committed an
entity. Batch generation derives one seed per episode so runs are
reproducible and episodes are independent.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, replace

from .dialogue import DialogueAct, Outline, OutlineTurn, TurnAnnotation, canonical_key
from .scenario import (
    FIXED,
    OPEN,
    Constraint,
    GoalConfig,
    Scenario,
    UserGoal,
    derive_seed,
    sample_scenario,
)
from .system_agent import GATHER, SystemConfig, SystemState, next_system_turn, resolve_reference
from .task_spec import Entity, TaskSpec
from .templates import TemplateGrammar, TemplateRenderer
from .user_sim import can_relax, init_agenda, is_goal_satisfied, next_user_turn
from .errors import UnresolvedReferenceError

log = logging.getLogger(__name__)

DEFAULT_MAX_TURNS = 30


def _spec_for_intent(intent: str, specs: list[TaskSpec]) -> TaskSpec:
    for spec in specs:
        if intent in spec.schema.intents:
            return spec
    return specs[0]


def _resolve_goal(goal: UserGoal, memory: list[Entity | None]) -> UserGoal:
    """Pin referencing slots to values from earlier committed entities.

    A reference into a failed goal degrades the slot to an open constraint.
    """
    if not goal.references:
        return goal
    constraints = list(goal.constraints)
    for i, c in enumerate(constraints):
        ref = goal.references.get(c.slot)
        if ref is None:
            continue
        try:
            value = resolve_reference(ref, memory)
            constraints[i] = Constraint(c.slot, FIXED, (value,))
        except UnresolvedReferenceError:
            constraints[i] = Constraint(c.slot, OPEN)
    return replace(goal, constraints=tuple(constraints))


def _ends_goal(turn: TurnAnnotation, agenda, profile) -> bool:
    if turn.has_act(DialogueAct.NOTIFY_SUCCESS):
        return True
    offered = turn.has_act(DialogueAct.OFFER) or turn.has_act(DialogueAct.SELECT)
    if turn.has_act(DialogueAct.NOTIFY_FAILURE) and not offered:
        return not can_relax(agenda, profile)
    return False


def run_episode(
    scenario: Scenario,
    specs: TaskSpec | list[TaskSpec],
    max_turns: int = DEFAULT_MAX_TURNS,
    rng: random.Random | None = None,
    grammar: TemplateGrammar | None = None,
    system_config: SystemConfig | None = None,
    outline_id: str = "o000000",
) -> Outline:
    """Play one scenario to completion (or truncation) and render templates."""
    if max_turns < 4:
        raise ValueError("max_turns must be at least 4")
    rng = rng or random.Random(scenario.seed)
    spec_list = specs if isinstance(specs, list) else [specs]
    renderer = TemplateRenderer(grammar)
    profile = scenario.profile

    memory: list[Entity | None] = [None] * len(scenario.goals)
    goal_idx = 0
    resolved: list[UserGoal] = list(scenario.goals)
    resolved[0] = _resolve_goal(scenario.goals[0], memory)
    agenda = init_agenda(resolved[0], profile, rng)
    spec = _spec_for_intent(resolved[0].intent, spec_list)
    state = SystemState()

    annotations: list[TurnAnnotation] = []
    sys_turn, state = next_system_turn(state, None, spec, system_config, rng)
    annotations.append(sys_turn)
    truncated = False

    while True:
        if len(annotations) >= max_turns:
            truncated = True
            break
        fresh_goal = False
        if _ends_goal(sys_turn, agenda, profile):
            memory[goal_idx] = state.committed
            if goal_idx + 1 < len(scenario.goals):
                goal_idx += 1
                resolved[goal_idx] = _resolve_goal(scenario.goals[goal_idx], memory)
                agenda = init_agenda(resolved[goal_idx], profile, rng)
                spec = _spec_for_intent(resolved[goal_idx].intent, spec_list)
                state = SystemState(phase=GATHER)
                fresh_goal = True
        user_turn, agenda = next_user_turn(
            agenda, None if fresh_goal else sys_turn, profile, rng
        )
        annotations.append(user_turn)
        if user_turn.has_act(DialogueAct.GOOD_BYE):
            break
        if len(annotations) >= max_turns:
            truncated = True
            break
        sys_turn, state = next_system_turn(state, user_turn, spec, system_config, rng)
        annotations.append(sys_turn)

    if not truncated and _ends_goal(sys_turn, agenda, profile):
        memory[goal_idx] = state.committed

    successful = all(
        is_goal_satisfied(resolved[i], memory[i]) for i in range(len(scenario.goals))
    )
    turns = tuple(OutlineTurn(template=renderer.render_turn(a), annotation=a) for a in annotations)
    return Outline(
        outline_id=outline_id,
        scenario=scenario,
        turns=turns,
        successful=successful,
        truncated=truncated,
        committed=tuple(dict(e.attributes) if e is not None else None for e in memory),
    )


@dataclass(frozen=True)
class OutlineBatch:
    outlines: tuple[Outline, ...]
    requested: int
    episodes_run: int
    duplicates_dropped: int
    exhausted: bool


def generate_outlines(
    specs: TaskSpec | list[TaskSpec],
    scenario_config: GoalConfig,
    n: int,
    seed: int,
    dedup: bool = False,
    max_turns: int = DEFAULT_MAX_TURNS,
    grammar: TemplateGrammar | None = None,
    retry_factor: int = 5,
) -> OutlineBatch:
    """Run n episodes with per-episode derived seeds.

    With dedup on, outlines whose turn-key sequence was already seen are
    replaced by fresh episodes until a retry budget of retry_factor * n runs
    out; the batch then reports itself as exhausted rather than failing.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    system_config = SystemConfig(select_prob=scenario_config.select_prob)
    outlines: list[Outline] = []
    seen: set[tuple[str, ...]] = set()
    attempts = 0
    duplicates = 0
    budget = n * retry_factor if dedup else n
    while len(outlines) < n and attempts < budget:
        ep_seed = derive_seed(seed, attempts)
        rng = random.Random(ep_seed)
        scenario = sample_scenario(specs, rng, scenario_config, seed=ep_seed)
        outline = run_episode(
            scenario,
            specs,
            max_turns=max_turns,
            rng=rng,
            grammar=grammar,
            system_config=system_config,
            outline_id=f"o{attempts:06d}",
        )
        attempts += 1
        if dedup:
            key = tuple(canonical_key(t.annotation) for t in outline.turns)
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
        outlines.append(outline)
    exhausted = len(outlines) < n
    if exhausted:
        log.warning(
            "dedup retry budget exhausted: %d unique outlines of %d requested "
            "(%d duplicates dropped)",
            len(outlines),
            n,
            duplicates,
        )
    return OutlineBatch(
        outlines=tuple(outlines),
        requested=n,
        episodes_run=attempts,
        duplicates_dropped=duplicates,
        exhausted=exhausted,
    )
