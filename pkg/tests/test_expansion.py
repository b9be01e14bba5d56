from __future__ import annotations

import random

import pytest

from convforge.crowd import ParaphraseMap, auto_paraphrase, finalize_dialogues
from convforge.dialogue import (
    DialogueAct,
    Frame,
    Outline,
    OutlineTurn,
    Speaker,
    TurnAnnotation,
)
from convforge.errors import EmptyMapError
from convforge.expansion import expand
from convforge.scenario import Constraint, GoalConfig, Scenario, UserGoal, UserProfile
from convforge.selfplay import generate_outlines


def build_map(spec, n=30, seed=5):
    config = GoalConfig(p_unsat=0.0, p_multi_goal=0.0, select_prob=0.2)
    outlines = list(generate_outlines(spec, config, n=n, seed=seed).outlines)
    result = finalize_dialogues(outlines, [auto_paraphrase(o) for o in outlines])
    return outlines, result.paraphrase_map


def test_closure_expansion_has_zero_drops(restaurant_spec):
    outlines, pmap = build_map(restaurant_spec)
    dialogues, dropped = expand(outlines, pmap, random.Random(0), strict=True)
    assert dropped == 0
    assert len(dialogues) == len(outlines)
    for dialogue, outline in zip(dialogues, outlines):
        assert dialogue.outline_ref == outline.outline_id
        assert [t.utterance for t in dialogue.turns] == [t.template for t in outline.turns]


def test_novel_annotation_drops_outline(restaurant_spec):
    outlines, pmap = build_map(restaurant_spec)
    novel_turn = OutlineTurn(
        template="Something else.",
        annotation=TurnAnnotation(
            speaker=Speaker.USER,
            frames=(Frame(DialogueAct.INFORM, {"never_seen_slot": "value"}),),
        ),
    )
    host = outlines[0]
    injected = Outline(
        outline_id="novel",
        scenario=host.scenario,
        turns=host.turns[:-1] + (novel_turn,) + host.turns[-1:],
    )
    dialogues, dropped = expand([injected], pmap, random.Random(0), strict=True)
    assert dropped == 1
    assert dialogues == []


def test_expansion_scales_past_collection(restaurant_spec):
    collected, pmap = build_map(restaurant_spec, n=200, seed=5)
    config = GoalConfig(p_unsat=0.0, p_multi_goal=0.0, select_prob=0.2)
    big = list(generate_outlines(restaurant_spec, config, n=2000, seed=99).outlines)
    dialogues, dropped = expand(big, pmap, random.Random(1), strict=False)
    assert len(dialogues) + dropped == 2000
    assert len(dialogues) > len(collected)


def test_strict_mode_drops_value_variants(restaurant_spec):
    """The same flow with unseen slot values misses under strict keys but is
    recovered by substitution."""
    collected, pmap = build_map(restaurant_spec, n=40, seed=5)
    config = GoalConfig(p_unsat=0.0, p_multi_goal=0.0, select_prob=0.2)
    fresh = list(generate_outlines(restaurant_spec, config, n=300, seed=1234).outlines)
    _, dropped_strict = expand(fresh, pmap, random.Random(2), strict=True)
    _, dropped_loose = expand(fresh, pmap, random.Random(2), strict=False)
    assert dropped_loose <= dropped_strict


def test_substitution_preserves_span_invariant():
    annotation_a = TurnAnnotation(
        speaker=Speaker.USER,
        frames=(Frame(DialogueAct.INFORM, {"category": "thai", "time": "7pm"}),),
    )
    annotation_b = TurnAnnotation(
        speaker=Speaker.USER,
        frames=(Frame(DialogueAct.INFORM, {"category": "mexican", "time": "11am"}),),
    )
    pmap = ParaphraseMap()
    from convforge.crowd import tag_spans

    utterance = "Looking for thai food around 7pm please."
    pmap.add(annotation_a, utterance, tuple(tag_spans(annotation_a, utterance)))

    goal = UserGoal(intent="find_restaurant", constraints=(Constraint("category", "open"),))
    outline = Outline(
        outline_id="o1",
        scenario=Scenario(profile=UserProfile(), goals=(goal,), seed=0),
        turns=(OutlineTurn(template="Category is mexican and time is 11am.", annotation=annotation_b),),
    )
    dialogues, dropped = expand([outline], pmap, random.Random(0), strict=False)
    assert dropped == 0
    turn = dialogues[0].turns[0]
    assert turn.utterance == "Looking for mexican food around 11am please."
    for span in turn.spans:
        assert turn.utterance[span.start : span.end].lower() == span.value.lower()
    assert {s.value for s in turn.spans} == {"mexican", "11am"}


def test_substitution_refuses_untagged_differences():
    # intent differs and is never tagged, so the stored utterance is unusable
    annotation_a = TurnAnnotation(
        speaker=Speaker.USER,
        frames=(Frame(DialogueAct.INFORM, {"intent": "book_movie", "date": "today"}),),
    )
    annotation_b = TurnAnnotation(
        speaker=Speaker.USER,
        frames=(Frame(DialogueAct.INFORM, {"intent": "find_movie", "date": "today"}),),
    )
    pmap = ParaphraseMap()
    from convforge.crowd import tag_spans

    utterance = "I want to book seats for today."
    pmap.add(annotation_a, utterance, tuple(tag_spans(annotation_a, utterance)))
    goal = UserGoal(intent="find_movie", constraints=(Constraint("date", "open"),))
    outline = Outline(
        outline_id="o1",
        scenario=Scenario(profile=UserProfile(), goals=(goal,), seed=0),
        turns=(OutlineTurn(template="Find movie with date is today.", annotation=annotation_b),),
    )
    dialogues, dropped = expand([outline], pmap, random.Random(0), strict=False)
    assert dropped == 1 and dialogues == []


def test_expansion_is_deterministic(restaurant_spec):
    outlines, pmap = build_map(restaurant_spec, n=50)
    a, _ = expand(outlines, pmap, random.Random(3), strict=False)
    b, _ = expand(outlines, pmap, random.Random(3), strict=False)
    assert a == b


def test_empty_map_rejected(restaurant_spec):
    outlines, _ = build_map(restaurant_spec, n=2)
    with pytest.raises(EmptyMapError):
        expand(outlines, ParaphraseMap(), random.Random(0))


def test_map_roundtrip(restaurant_spec):
    outlines, pmap = build_map(restaurant_spec, n=20)
    back = ParaphraseMap.from_dict(pmap.to_dict())
    assert back.entries == pmap.entries
    dialogues, dropped = expand(outlines, back, random.Random(0), strict=True)
    assert dropped == 0 and len(dialogues) == len(outlines)
