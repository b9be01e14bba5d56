from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from convforge.dialogue import (
    DialogueAct,
    Frame,
    Outline,
    OutlineTurn,
    Speaker,
    TurnAnnotation,
)
from convforge.scenario import Constraint, Scenario, UserGoal, UserProfile
from convforge.service import make_app
from convforge.store import PipelineStore


def mini_outline(outline_id="o1") -> Outline:
    def s(*frames):
        return TurnAnnotation(speaker=Speaker.SYSTEM, frames=tuple(frames))

    def u(*frames):
        return TurnAnnotation(speaker=Speaker.USER, frames=tuple(frames))

    goal = UserGoal(intent="find_restaurant", constraints=(Constraint("time", "open"),))
    scenario = Scenario(profile=UserProfile(), goals=(goal,), seed=0)
    turns = (
        OutlineTurn("Greeting.", s(Frame(DialogueAct.GREETING))),
        OutlineTurn("Time is evening.", u(Frame(DialogueAct.INFORM, {"time": "evening"}))),
        OutlineTurn(
            "Offer restaurant name is First Wok.",
            s(Frame(DialogueAct.OFFER, {"restaurant_name": "First Wok"})),
        ),
        OutlineTurn("Agree.", u(Frame(DialogueAct.AFFIRM))),
        OutlineTurn("Reservation confirmed.", s(Frame(DialogueAct.NOTIFY_SUCCESS))),
        OutlineTurn(
            "Thank you and good bye.",
            u(Frame(DialogueAct.THANK_YOU), Frame(DialogueAct.GOOD_BYE)),
        ),
    )
    return Outline(outline_id=outline_id, scenario=scenario, turns=turns, successful=True)


@pytest.fixture()
def client(tmp_path):
    store = PipelineStore(tmp_path / "state")
    store.init_tasks([mini_outline()], k=1)
    return TestClient(make_app(store)), store


def test_paraphrase_task_lifecycle(client):
    http, _ = client
    task = http.get("/api/tasks/next", params={"type": "paraphrase"}).json()["task"]
    assert task["type"] == "paraphrase"
    assert len(task["turns"]) == 6
    assert task["turns"][0]["template"] == "Greeting."

    short = http.post(
        f"/api/tasks/{task['task_id']}",
        json={"worker_id": "w0", "utterances": ["hi"] * 5},
    )
    assert short.status_code == 400

    full = http.post(
        f"/api/tasks/{task['task_id']}",
        json={
            "worker_id": "w0",
            "utterances": [
                "Hi, how can I help you?",
                "Anytime during the evening works for me.",
                "How about First Wok?",
                "Sounds good.",
                "Your table is booked!",
                "Thanks, bye!",
            ],
        },
    )
    assert full.status_code == 200
    assert http.get("/api/tasks/next", params={"type": "paraphrase"}).json()["task"] is None


def rewrite_all(http, utterances):
    task = http.get("/api/tasks/next", params={"type": "paraphrase"}).json()["task"]
    response = http.post(
        f"/api/tasks/{task['task_id']}", json={"worker_id": "w0", "utterances": utterances}
    )
    assert response.status_code == 200, response.text
    return task["task_id"]


def vote_turn(http, worker, value=True):
    task = http.get("/api/tasks/next", params={"type": "validate", "worker": worker}).json()["task"]
    if task is None:
        return None
    response = http.post(
        f"/api/tasks/{task['task_id']}", json={"worker_id": worker, "same_meaning": value}
    )
    assert response.status_code == 200, response.text
    return task


def test_two_yes_votes_mark_keep(client):
    http, _ = client
    task_id = rewrite_all(
        http,
        ["Hello!", "Evening works.", "Try First Wok.", "OK.", "Booked!", "Bye now."],
    )
    first = vote_turn(http, "alice")
    assert first["type"] == "validate"
    second = http.post(
        f"/api/tasks/{first['task_id']}", json={"worker_id": "bob", "same_meaning": True}
    )
    assert second.status_code == 200
    status = http.get("/api/status").json()
    assert status["validation_outcomes"][f"{task_id}::{first['turn_index']}"] == "keep"


def test_same_worker_cannot_vote_twice(client):
    http, _ = client
    rewrite_all(http, ["Hello!", "Evening works.", "Try First Wok.", "OK.", "Booked!", "Bye."])
    task = vote_turn(http, "alice")
    again = http.post(
        f"/api/tasks/{task['task_id']}", json={"worker_id": "alice", "same_meaning": True}
    )
    assert again.status_code == 409


def test_full_pipeline_with_span_fix_and_ratings(client):
    http, _ = client
    # turn 1 paraphrases "evening" away, so it needs a span fix
    utterances = [
        "Hello there!",
        "Some time late at night.",
        "How about First Wok?",
        "Sounds great.",
        "All booked!",
        "Thanks, bye!",
    ]
    task_id = rewrite_all(http, utterances)
    # validation: 2 yes votes on all 6 turns
    for worker in ("alice", "bob"):
        while vote_turn(http, worker):
            pass
    span_task = http.get("/api/tasks/next", params={"type": "span"}).json()["task"]
    assert span_task["type"] == "span"
    assert span_task["slot"] == "time" and span_task["value"] == "evening"
    utterance = span_task["utterance"]
    start = utterance.index("night")
    for worker in ("carol", "dan"):
        response = http.post(
            f"/api/tasks/{span_task['task_id']}",
            json={"worker_id": worker, "start": start, "end": start + len("night")},
        )
        assert response.status_code == 200, response.text

    corpus = http.get("/api/corpus").json()
    assert corpus["drop_report"]["dialogues_out"] == 1
    dialogue = corpus["dialogues"][0]
    spans = dialogue["turns"][1]["spans"]
    assert spans and spans[0]["value"] == "night"

    # ratings: 3 raters on every turn
    for worker in ("r1", "r2", "r3"):
        while True:
            task = http.get(
                "/api/tasks/next", params={"type": "rate", "worker": worker}
            ).json()["task"]
            if task is None:
                break
            scores = {dim: 5 if task["speaker"] == "U" else 4 for dim in task["dimensions"]}
            response = http.post(
                f"/api/tasks/{task['task_id']}", json={"worker_id": worker, "scores": scores}
            )
            assert response.status_code == 200, response.text

    summary = http.get("/api/ratings/summary").json()
    assert summary["natural"]["mean"] == 5.0
    assert summary["polite"]["count"] == 9  # 3 system turns x 3 raters
    assert summary["clear"]["stddev"] == 0.0
    status = http.get("/api/status").json()
    assert status["ratings"]["fully_rated_turns"] == 6


def test_bad_submissions_are_rejected(client):
    http, _ = client
    assert http.post("/api/tasks/pt-ghost-0", json={"worker_id": "w"}).status_code == 404
    assert (
        http.get("/api/tasks/next", params={"type": "nonsense"}).status_code == 404
    )
    task = http.get("/api/tasks/next", params={"type": "paraphrase"}).json()["task"]
    empty = http.post(
        f"/api/tasks/{task['task_id']}",
        json={"worker_id": "w0", "utterances": ["a", "b", "", "d", "e", "f"]},
    )
    assert empty.status_code == 400
    missing_worker = http.post(
        f"/api/tasks/{task['task_id']}", json={"utterances": ["a"] * 6}
    )
    assert missing_worker.status_code == 400


def test_restart_replays_to_identical_state(tmp_path):
    state_dir = tmp_path / "state"
    store = PipelineStore(state_dir)
    store.init_tasks([mini_outline()], k=1)
    http = TestClient(make_app(store))
    rewrite_all(http, ["Hello!", "Evening works.", "Try First Wok.", "OK.", "Booked!", "Bye."])
    vote_turn(http, "alice")
    vote_turn(http, "bob")
    before = store.status()

    resurrected = PipelineStore(state_dir)
    assert resurrected.status() == before
    # the replayed store keeps accepting submissions where the old one stopped
    http2 = TestClient(make_app(resurrected))
    assert vote_turn(http2, "alice") is not None


def test_duplicate_rewrite_rejected(client):
    http, _ = client
    task_id = rewrite_all(
        http, ["Hello!", "Evening works.", "Try First Wok.", "OK.", "Booked!", "Bye."]
    )
    dup = http.post(
        f"/api/tasks/{task_id}", json={"worker_id": "w9", "utterances": ["x"] * 6}
    )
    assert dup.status_code == 409
