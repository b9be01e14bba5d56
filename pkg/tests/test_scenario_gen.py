from __future__ import annotations

import json
import random
from dataclasses import replace

import pytest

from convforge.dialogue import scenario_to_dict
from convforge.errors import EmptyDistributionError
from convforge.scenario import (
    FIXED,
    FLEXIBLE,
    ONE_OF,
    OPEN,
    GoalConfig,
    UserProfile,
    sample_goal,
    sample_profile,
    sample_scenario,
)
from convforge.task_spec import query


def test_goal_covers_every_constrainable_slot(movie_spec):
    goal = sample_goal(movie_spec, random.Random(3), GoalConfig())
    assert {c.slot for c in goal.constraints} == set(movie_spec.schema.slot_names())
    assert goal.intent in movie_spec.schema.intents


def test_all_weight_on_open_yields_all_open(movie_spec):
    config = GoalConfig(kind_weights={OPEN: 1.0, FIXED: 0.0, ONE_OF: 0.0, FLEXIBLE: 0.0})
    goal = sample_goal(movie_spec, random.Random(5), config)
    assert all(c.kind == OPEN for c in goal.constraints)


def test_zero_unsat_rate_keeps_goals_satisfiable(restaurant_spec):
    """Oracle check: fixed database constraints of every sampled goal match."""
    rng = random.Random(11)
    config = GoalConfig(p_unsat=0.0)
    db_slots = restaurant_spec.db.attribute_slots()
    for _ in range(10_000):
        goal = sample_goal(restaurant_spec, rng, config)
        assert not goal.unsatisfiable
        fixed = {c.slot: c.value for c in goal.constraints if c.kind == FIXED and c.slot in db_slots}
        assert query(restaurant_spec.db, fixed), f"unsatisfiable fixed set {fixed}"


def test_unsat_flag_agrees_with_query_oracle(restaurant_spec):
    rng = random.Random(12)
    config = GoalConfig(
        p_unsat=1.0, distractors={"category": ["ethiopian"], "restaurant_name": ["The Purple Door"]}
    )
    db_slots = restaurant_spec.db.attribute_slots()
    for _ in range(500):
        goal = sample_goal(restaurant_spec, rng, config)
        assert goal.unsatisfiable
        fixed = {c.slot: c.value for c in goal.constraints if c.kind == FIXED and c.slot in db_slots}
        assert query(restaurant_spec.db, fixed) == []


def test_one_of_constraints_have_two_distinct_values(restaurant_spec):
    rng = random.Random(13)
    config = GoalConfig(kind_weights={ONE_OF: 1.0, FIXED: 0, FLEXIBLE: 0, OPEN: 0}, p_unsat=0)
    goal = sample_goal(restaurant_spec, rng, config)
    for c in goal.constraints:
        if c.kind == ONE_OF:
            assert len(set(c.values)) == 2


def test_point_mass_distribution_returns_that_profile():
    profile = UserProfile(0.3, 0.4, 0.5, 0.6, 2)
    assert sample_profile(random.Random(0), [(profile, 1.0)]) == profile


def test_even_mixture_draws_evenly():
    a = UserProfile(0.1, 0.1, 0.1, 0.1, 0)
    b = UserProfile(0.9, 0.9, 0.9, 0.9, 1)
    rng = random.Random(21)
    hits = sum(sample_profile(rng, [(a, 1.0), (b, 1.0)]) == a for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 0.02


def test_jitter_is_clamped_to_unit_interval():
    profile = UserProfile(p_multi_slot=0.95)
    rng = random.Random(2)
    for _ in range(200):
        jittered = sample_profile(rng, [(profile, 1.0)], jitter=0.1)
        assert 0.0 <= jittered.p_multi_slot <= 1.0


def test_empty_distribution_rejected():
    with pytest.raises(EmptyDistributionError):
        sample_profile(random.Random(0), [])
    with pytest.raises(EmptyDistributionError):
        sample_profile(random.Random(0), [(UserProfile(), 0.0)])


def test_multi_goal_reference_points_at_prior_goal(movie_spec, restaurant_spec, shipped_config):
    config = replace(shipped_config, p_multi_goal=1.0)
    for seed in range(30):
        scenario = sample_scenario(
            [movie_spec, restaurant_spec], random.Random(seed), config, seed=seed
        )
        assert len(scenario.goals) == 2
        goal = scenario.goals[1]
        if "location" in {c.slot for c in goal.constraints}:
            assert "location" in goal.references
            ref = goal.references["location"]
            assert ref.goal_index == 0
            assert goal.constraint_for("location").kind == OPEN


def test_multi_goal_disabled_gives_single_goal(restaurant_spec):
    config = GoalConfig(p_multi_goal=0.0)
    for seed in range(50):
        scenario = sample_scenario(restaurant_spec, random.Random(seed), config, seed=seed)
        assert len(scenario.goals) == 1


def test_scenarios_are_deterministic(restaurant_spec, shipped_config):
    def run():
        out = []
        for i in range(200):
            rng = random.Random(i)
            out.append(scenario_to_dict(sample_scenario(restaurant_spec, rng, shipped_config, i)))
        return json.dumps(out, sort_keys=True)

    assert run() == run()
