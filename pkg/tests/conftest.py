from __future__ import annotations

import json
from pathlib import Path

import pytest

from convforge.dialogue import DialogueAct, Frame, Speaker, TurnAnnotation
from convforge.scenario import GoalConfig
from convforge.task_spec import TaskSpec, load_task_spec_files

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def restaurant_spec() -> TaskSpec:
    return load_task_spec_files(CONFIGS / "restaurant_schema.json", CONFIGS / "restaurant_db.json")


@pytest.fixture(scope="session")
def movie_spec() -> TaskSpec:
    return load_task_spec_files(CONFIGS / "movie_schema.json", CONFIGS / "movie_db.json")


@pytest.fixture(scope="session")
def shipped_config() -> GoalConfig:
    with open(CONFIGS / "scenario_config.json", encoding="utf-8") as f:
        return GoalConfig.from_dict(json.load(f))


def _u(*frames: Frame) -> TurnAnnotation:
    return TurnAnnotation(speaker=Speaker.USER, frames=tuple(frames))


def _s(*frames: Frame) -> TurnAnnotation:
    return TurnAnnotation(speaker=Speaker.SYSTEM, frames=tuple(frames))


def sample_multidomain_annotations() -> list[TurnAnnotation]:
    """The 16-turn movie-then-restaurant outline used by the golden tests."""
    A = DialogueAct
    return [
        _s(Frame(A.GREETING)),
        _u(
            Frame(
                A.INFORM,
                {"intent": "book_movie", "name": "Inside Out", "date": "tomorrow",
                 "num_tickets": "2"},
            )
        ),
        _s(Frame(A.AFFIRM), Frame(A.REQUEST, {"time": ""})),
        _u(Frame(A.INFORM, {"time": "evening"})),
        _s(Frame(A.OFFER, {"theatre": "Cinemark 16", "time": "6pm"})),
        _u(Frame(A.AFFIRM)),
        _s(Frame(A.NOTIFY_SUCCESS)),
        _u(
            Frame(
                A.INFORM,
                {"intent": "find_restaurant", "meal": "dinner", "location": "near the theatre"},
            )
        ),
        _s(Frame(A.REQUEST, {"cuisine": "", "price_range": ""})),
        _u(Frame(A.INFORM, {"cuisine": "dontcare", "price_range": "moderate", "rating": "high"})),
        _s(
            Frame(
                A.SELECT,
                {"restaurant": ("First Wok", "Lucy's Grill"), "location": "near the theatre"},
            )
        ),
        _u(
            Frame(
                A.INFORM,
                {"intent": "reserve_restaurant", "restaurant": "First Wok",
                 "time": "after the movie"},
            )
        ),
        _s(
            Frame(A.AFFIRM),
            Frame(A.CONFIRM, {"restaurant": "First Wok", "time": "8pm", "num_people": "2"}),
        ),
        _u(Frame(A.AFFIRM)),
        _s(Frame(A.NOTIFY_SUCCESS)),
        _u(Frame(A.THANK_YOU), Frame(A.GOOD_BYE)),
    ]


SAMPLE_MULTIDOMAIN_TEMPLATES = [
    "Greeting.",
    "Book movie with name is Inside Out and date is tomorrow and num tickets is 2.",
    "OK. Provide time.",
    "Time is evening.",
    "Offer theatre is Cinemark 16 and time is 6pm.",
    "Agree.",
    "Reservation confirmed.",
    "Find restaurant with meal is dinner and location is near the theatre.",
    "Provide cuisine and price range.",
    "Cuisine is I don't care and price range is moderate and rating is high.",
    "Select restaurant from First Wok, Lucy's Grill with location is near the theatre.",
    "Reserve restaurant with restaurant is First Wok and time is after the movie.",
    "OK. Confirm restaurant is First Wok and time is 8pm and num people is 2.",
    "Agree.",
    "Reservation confirmed.",
    "Thank you and good bye.",
]
