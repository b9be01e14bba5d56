"""Scenario sampling: user goals with typed constraints plus behavior profiles.

A scenario seeds one self-play episode. Goals are anchored on a real database
entity so that, unless a missing value is injected on purpose, the fixed
constraints are jointly satisfiable.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace

from .errors import EmptyDistributionError, EmptySchemaError, ValidationError
from .task_spec import FREE_TEXT, TaskSpec

FIXED = "fixed"
ONE_OF = "one_of"
FLEXIBLE = "flexible"
OPEN = "open"

KINDS = (FIXED, ONE_OF, FLEXIBLE, OPEN)


@dataclass(frozen=True)
class Constraint:
    slot: str
    kind: str
    values: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown constraint kind '{self.kind}'", self.slot)
        if self.kind in (FIXED, FLEXIBLE) and len(self.values) != 1:
            raise ValidationError(f"{self.kind} constraint needs exactly one value", self.slot)
        if self.kind == ONE_OF and len(set(self.values)) < 2:
            raise ValidationError("one_of constraint needs >= 2 distinct values", self.slot)
        if self.kind == OPEN and self.values:
            raise ValidationError("open constraint carries no values", self.slot)

    @property
    def value(self) -> str:
        return self.values[0]


@dataclass(frozen=True)
class GoalReference:
    """Marks a slot whose value is taken from an earlier goal's chosen entity."""

    goal_index: int
    description: str  # format string over the source entity's attributes
    source_slot: str


@dataclass(frozen=True)
class UserGoal:
    intent: str
    constraints: tuple[Constraint, ...]
    requests: tuple[str, ...] = ()
    references: dict[str, GoalReference] = field(default_factory=dict)
    unsatisfiable: bool = False

    def constraint_for(self, slot: str) -> Constraint | None:
        for c in self.constraints:
            if c.slot == slot:
                return c
        return None


@dataclass(frozen=True)
class UserProfile:
    p_multi_slot: float = 0.5
    p_accept_flexible: float = 0.5
    p_request_alts: float = 0.0
    p_request_info: float = 0.0
    max_goal_relaxations: int = 1

    def __post_init__(self):
        for name in ("p_multi_slot", "p_accept_flexible", "p_request_alts", "p_request_info"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}", "profile")
        if self.max_goal_relaxations < 0:
            raise ValidationError("max_goal_relaxations must be >= 0", "profile")


@dataclass(frozen=True)
class Scenario:
    profile: UserProfile
    goals: tuple[UserGoal, ...]
    seed: int

    def __post_init__(self):
        if not self.goals:
            raise ValidationError("scenario needs at least one goal", "scenario.goals")
        for i, g in enumerate(self.goals):
            for slot, ref in g.references.items():
                if ref.goal_index >= i:
                    raise ValidationError(
                        f"reference on '{slot}' must point at an earlier goal", f"goals[{i}]"
                    )


@dataclass(frozen=True)
class ReferenceRule:
    """Config entry: which slot of a follow-up goal points back at goal 0."""

    slot: str
    source_slot: str
    description: str
    source_goal: int = 0


@dataclass(frozen=True)
class GoalConfig:
    kind_weights: dict[str, float] = field(
        default_factory=lambda: {FIXED: 0.5, ONE_OF: 0.15, FLEXIBLE: 0.15, OPEN: 0.2}
    )
    p_unsat: float = 0.1
    p_multi_goal: float = 0.2
    p_request_slot: float = 0.25
    max_requests: int = 2
    select_prob: float = 0.15
    profile_jitter: float = 0.0
    distractors: dict[str, list[str]] = field(default_factory=dict)
    profiles: tuple[tuple[UserProfile, float], ...] = ()
    references: tuple[ReferenceRule, ...] = ()

    @classmethod
    def from_dict(cls, raw: dict) -> "GoalConfig":
        profiles = []
        for p in raw.get("profiles", []):
            weight = float(p.get("weight", 1.0))
            fields = {k: v for k, v in p.items() if k not in ("weight", "name")}
            profiles.append((UserProfile(**fields), weight))
        references = tuple(
            ReferenceRule(
                slot=r["slot"],
                source_slot=r["source_slot"],
                description=r.get("description", "{" + r["source_slot"] + "}"),
                source_goal=int(r.get("source_goal", 0)),
            )
            for r in raw.get("references", [])
        )
        kwargs = {
            k: raw[k]
            for k in (
                "kind_weights",
                "p_unsat",
                "p_multi_goal",
                "p_request_slot",
                "max_requests",
                "select_prob",
                "profile_jitter",
                "distractors",
            )
            if k in raw
        }
        return cls(profiles=tuple(profiles), references=references, **kwargs)


def default_profiles() -> tuple[tuple[UserProfile, float], ...]:
    """Built-in mixture: terse-rigid, verbose-rigid, verbose-flexible."""
    return (
        (UserProfile(0.15, 0.2, 0.1, 0.2, 1), 1.0),
        (UserProfile(0.9, 0.2, 0.2, 0.3, 1), 1.0),
        (UserProfile(0.9, 0.9, 0.3, 0.3, 2), 1.0),
    )


def derive_seed(base: int, index: int) -> int:
    """Stable per-episode seed, independent of process hash randomization."""
    digest = hashlib.sha256(f"{base}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _value_pool(spec: TaskSpec, slot_name: str) -> list[str]:
    slot = spec.schema.slot(slot_name)
    if slot.kind == FREE_TEXT:
        return spec.db.values_for(slot_name)
    return list(slot.values)


def sample_goal(spec: TaskSpec, rng: random.Random, config: GoalConfig) -> UserGoal:
    """Draw one goal: every constrainable slot gets a typed constraint.

    Fixed values on database-backed slots come from a single anchor entity,
    so the goal is satisfiable unless the unsatisfiable-value coin fires and
    swaps in a distractor value absent from the database.
    """
    slots = spec.schema.constrainable_slots()
    if not slots:
        raise EmptySchemaError(f"schema '{spec.task_name}' has no constrainable slots")
    intent = rng.choice(list(spec.schema.intents))
    db_slots = spec.db.attribute_slots()
    anchor = rng.choice(list(spec.db.entities)) if spec.db.entities else None

    kinds = list(config.kind_weights)
    weights = [config.kind_weights[k] for k in kinds]
    constraints: list[Constraint] = []
    for slot in slots:
        pool = _value_pool(spec, slot.name)
        kind = rng.choices(kinds, weights=weights)[0]
        anchored = anchor.get(slot.name) if (anchor and slot.name in db_slots) else None
        if not pool and kind != OPEN:
            kind = OPEN
        if kind == OPEN:
            constraints.append(Constraint(slot.name, OPEN))
        elif kind == FIXED:
            constraints.append(Constraint(slot.name, FIXED, (anchored or rng.choice(pool),)))
        elif kind == FLEXIBLE:
            constraints.append(Constraint(slot.name, FLEXIBLE, (anchored or rng.choice(pool),)))
        else:  # ONE_OF
            first = anchored or rng.choice(pool)
            others = [v for v in pool if v != first]
            if not others:
                constraints.append(Constraint(slot.name, FIXED, (first,)))
            else:
                constraints.append(Constraint(slot.name, ONE_OF, (first, rng.choice(others))))

    # The order a user volunteers constraints in is theirs to pick; shuffling
    # here is what makes distinct dialogue flows out of equal slot sets.
    rng.shuffle(constraints)

    unsatisfiable = False
    if rng.random() < config.p_unsat:
        # Swap one database-backed fixed constraint for a value the table
        # cannot satisfy. Falls back to forcing a fixed constraint if none
        # rolled fixed above.
        candidates = [i for i, c in enumerate(constraints) if c.slot in db_slots]
        if candidates:
            idx = rng.choice(candidates)
            slot_name = constraints[idx].slot
            known = {v.lower() for v in spec.db.values_for(slot_name)}
            pool = [v for v in config.distractors.get(slot_name, []) if v.lower() not in known]
            bogus = rng.choice(pool) if pool else f"unlisted {slot_name.replace('_', ' ')}"
            constraints[idx] = Constraint(slot_name, FIXED, (bogus,))
            unsatisfiable = True

    requests: list[str] = []
    for slot in spec.schema.slots:
        if slot.requestable and len(requests) < config.max_requests:
            if rng.random() < config.p_request_slot:
                requests.append(slot.name)

    return UserGoal(
        intent=intent,
        constraints=tuple(constraints),
        requests=tuple(requests),
        unsatisfiable=unsatisfiable,
    )


def sample_profile(
    rng: random.Random,
    distribution: tuple[tuple[UserProfile, float], ...] | list[tuple[UserProfile, float]],
    jitter: float = 0.0,
) -> UserProfile:
    """Pick one profile from a weighted mixture, optionally jittering it."""
    dist = list(distribution)
    if not dist or all(w <= 0 for _, w in dist):
        raise EmptyDistributionError("profile distribution is empty or zero-weight")
    profiles = [p for p, _ in dist]
    weights = [max(w, 0.0) for _, w in dist]
    chosen = rng.choices(profiles, weights=weights)[0]
    if jitter <= 0:
        return chosen

    def wobble(v: float) -> float:
        return min(1.0, max(0.0, v + rng.uniform(-jitter, jitter)))

    return replace(
        chosen,
        p_multi_slot=wobble(chosen.p_multi_slot),
        p_accept_flexible=wobble(chosen.p_accept_flexible),
        p_request_alts=wobble(chosen.p_request_alts),
        p_request_info=wobble(chosen.p_request_info),
    )


def sample_scenario(
    specs: TaskSpec | list[TaskSpec],
    rng: random.Random,
    config: GoalConfig,
    seed: int = 0,
) -> Scenario:
    """Sample a scenario over one spec or a spec chain.

    With several specs, a follow-up goal (drawn from the next spec) is
    appended with probability p_multi_goal; its configured reference slots
    are resolved at self-play time from the earlier goal's chosen entity.
    """
    spec_list = specs if isinstance(specs, list) else [specs]
    profiles = config.profiles or default_profiles()
    profile = sample_profile(rng, profiles, config.profile_jitter)

    goals = [sample_goal(spec_list[0], rng, config)]
    if rng.random() < config.p_multi_goal:
        follow_spec = spec_list[1] if len(spec_list) > 1 else spec_list[0]
        goal = sample_goal(follow_spec, rng, config)
        if len(spec_list) > 1 and config.references:
            refs = {}
            constraints = list(goal.constraints)
            follow_slots = {c.slot for c in constraints}
            for rule in config.references:
                if rule.slot not in follow_slots:
                    continue
                refs[rule.slot] = GoalReference(
                    goal_index=rule.source_goal,
                    description=rule.description,
                    source_slot=rule.source_slot,
                )
                # Value is unknown until the earlier goal commits; keep the
                # slot open and let self-play pin it down.
                constraints = [
                    c if c.slot != rule.slot else Constraint(rule.slot, OPEN) for c in constraints
                ]
            goal = replace(goal, constraints=tuple(constraints), references=refs)
        goals.append(goal)
    return Scenario(profile=profile, goals=tuple(goals), seed=seed)
