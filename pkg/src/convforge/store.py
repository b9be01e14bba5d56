"""Pipeline state over append-only logs, serving the annotation task queue.

Every submission is one JSON line appended to events.jsonl; all task state is
re-derived by folding the log, so a restart after a crash replays to exactly
the pre-crash state. Mutations go through a single lock.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .crowd import (
    AUTO_WORKER,
    MissingSlots,
    ParaphraseTask,
    Rewrite,
    SpanFix,
    ValidationVote,
    FinalizeResult,
    finalize_dialogues,
    make_tasks,
    tag_spans,
    taggable_values,
)
from .dialogue import Outline, Speaker, outline_from_dict, outline_to_dict
from .errors import ConvforgeError, ValidationError
from .corpus_io import _read_jsonl, _write_jsonl

USER_DIMENSIONS = ("natural",)
SYSTEM_DIMENSIONS = ("polite", "clear", "optimal")

VOTES_REQUIRED = 2
FIXES_REQUIRED = 2
RATINGS_REQUIRED = 3


class UnknownTaskError(ConvforgeError):
    exit_code = 13


class DuplicateSubmissionError(ConvforgeError):
    exit_code = 14


class MalformedSubmissionError(ConvforgeError):
    exit_code = 15


def dimensions_for(speaker: Speaker) -> tuple[str, ...]:
    return USER_DIMENSIONS if speaker is Speaker.USER else SYSTEM_DIMENSIONS


class PipelineStore:
    """Single-writer task queue over a state directory."""

    def __init__(self, state_dir):
        self.dir = Path(state_dir)
        self._lock = threading.Lock()
        self.outlines: dict[str, Outline] = {}
        self.tasks: dict[str, ParaphraseTask] = {}
        self.rewrites: dict[str, Rewrite] = {}
        self.votes: dict[tuple[str, int], list[ValidationVote]] = {}
        self.span_fixes: dict[tuple[str, int, str], list[SpanFix]] = {}
        self.ratings: dict[tuple[str, int], list[dict]] = {}
        self._load()

    # -- persistence --------------------------------------------------------

    def _load(self) -> None:
        outlines_path = self.dir / "outlines.jsonl"
        if outlines_path.exists():
            for raw in _read_jsonl(outlines_path):
                outline = outline_from_dict(raw)
                self.outlines[outline.outline_id] = outline
        tasks_path = self.dir / "tasks.jsonl"
        if tasks_path.exists():
            for raw in _read_jsonl(tasks_path):
                task = ParaphraseTask(
                    task_id=raw["task_id"],
                    outline_ref=raw["outline_ref"],
                    turns=tuple((int(i), t) for i, t in raw["turns"]),
                )
                self.tasks[task.task_id] = task
        events_path = self.dir / "events.jsonl"
        if events_path.exists():
            for event in _read_jsonl(events_path):
                self._apply(event)

    def _append_event(self, event: dict) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        with open(self.dir / "events.jsonl", "a", encoding="utf-8") as f:
            f.write(json.dumps(event, ensure_ascii=False) + "\n")
            f.flush()

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "rewrite":
            rewrite = Rewrite(
                task_id=event["task_id"],
                worker_id=event["worker_id"],
                utterances=tuple(event["utterances"]),
            )
            self.rewrites[rewrite.task_id] = rewrite
        elif kind == "vote":
            vote = ValidationVote(
                task_id=event["task_id"],
                turn_index=int(event["turn"]),
                worker_id=event["worker_id"],
                same_meaning=bool(event["same_meaning"]),
            )
            self.votes.setdefault((vote.task_id, vote.turn_index), []).append(vote)
        elif kind == "span_fix":
            fix = SpanFix(
                task_id=event["task_id"],
                turn_index=int(event["turn"]),
                slot=event["slot"],
                start=int(event["start"]),
                end=int(event["end"]),
                worker_id=event["worker_id"],
            )
            self.span_fixes.setdefault((fix.task_id, fix.turn_index, fix.slot), []).append(fix)
        elif kind == "rating":
            key = (event["dialogue_id"], int(event["turn"]))
            self.ratings.setdefault(key, []).append(
                {"worker_id": event["worker_id"], "scores": event["scores"]}
            )

    # -- initialization (CLI `tasks`) ---------------------------------------

    def init_tasks(self, outlines: list[Outline], k: int) -> list[ParaphraseTask]:
        if self.tasks:
            raise ValidationError("state dir already holds tasks", str(self.dir))
        tasks = make_tasks(outlines, k)
        _write_jsonl(self.dir / "outlines.jsonl", (outline_to_dict(o) for o in outlines))
        _write_jsonl(
            self.dir / "tasks.jsonl",
            (
                {"task_id": t.task_id, "outline_ref": t.outline_ref, "turns": list(t.turns)}
                for t in tasks
            ),
        )
        for outline in outlines:
            self.outlines[outline.outline_id] = outline
        for task in tasks:
            self.tasks[task.task_id] = task
        return tasks

    # -- derived task state --------------------------------------------------

    def _outline_for_task(self, task_id: str) -> Outline:
        task = self.tasks.get(task_id)
        if task is None:
            raise UnknownTaskError(f"unknown paraphrase task '{task_id}'")
        return self.outlines[task.outline_ref]

    def _missing_slots(self, task_id: str, turn_index: int) -> tuple[str, ...]:
        rewrite = self.rewrites[task_id]
        outline = self._outline_for_task(task_id)
        tagged = tag_spans(outline.turns[turn_index].annotation, rewrite.utterances[turn_index])
        return tagged.slots if isinstance(tagged, MissingSlots) else ()

    def _vote_outcome(self, task_id: str, turn_index: int) -> str:
        """pending | keep | drop for one rewritten utterance."""
        rewrite = self.rewrites.get(task_id)
        if rewrite is None:
            return "pending"
        if rewrite.worker_id == AUTO_WORKER:
            return "keep"
        votes = self.votes.get((task_id, turn_index), [])
        if len(votes) < VOTES_REQUIRED:
            return "pending"
        return "keep" if all(v.same_meaning for v in votes[:VOTES_REQUIRED]) else "drop"

    def open_validate_refs(self) -> list[tuple[str, int]]:
        refs = []
        for task_id, rewrite in sorted(self.rewrites.items()):
            if rewrite.worker_id == AUTO_WORKER:
                continue
            for i in range(len(rewrite.utterances)):
                if len(self.votes.get((task_id, i), [])) < VOTES_REQUIRED:
                    refs.append((task_id, i))
        return refs

    def open_span_refs(self) -> list[tuple[str, int, str]]:
        refs = []
        for task_id, rewrite in sorted(self.rewrites.items()):
            for i in range(len(rewrite.utterances)):
                if self._vote_outcome(task_id, i) != "keep":
                    continue
                for slot in self._missing_slots(task_id, i):
                    if len(self.span_fixes.get((task_id, i, slot), [])) < FIXES_REQUIRED:
                        refs.append((task_id, i, slot))
        return refs

    def _rewrite_ready(self, task_id: str) -> bool:
        """All validation finished and every missing span fully voted on."""
        rewrite = self.rewrites[task_id]
        for i in range(len(rewrite.utterances)):
            outcome = self._vote_outcome(task_id, i)
            if outcome == "pending":
                return False
            if outcome == "keep":
                for slot in self._missing_slots(task_id, i):
                    if len(self.span_fixes.get((task_id, i, slot), [])) < FIXES_REQUIRED:
                        return False
        return True

    def finalize(self) -> FinalizeResult:
        """Finalize every rewrite whose validation pipeline has completed."""
        ready = [r for tid, r in sorted(self.rewrites.items()) if self._rewrite_ready(tid)]
        votes = [v for vs in self.votes.values() for v in vs]
        fixes = [f for fs in self.span_fixes.values() for f in fs]
        return finalize_dialogues(
            list(self.outlines.values()), ready, votes, fixes, list(self.tasks.values())
        )

    def open_rate_refs(self) -> list[tuple[str, int]]:
        refs = []
        for dialogue in self.finalize().dialogues:
            for i in range(len(dialogue.turns)):
                if len(self.ratings.get((dialogue.dialogue_id, i), [])) < RATINGS_REQUIRED:
                    refs.append((dialogue.dialogue_id, i))
        return refs

    # -- task payloads -------------------------------------------------------

    def next_task(self, task_type: str, worker_id: str = "") -> dict | None:
        with self._lock:
            if task_type == "paraphrase":
                for task_id in sorted(self.tasks):
                    if task_id in self.rewrites:
                        continue
                    outline = self._outline_for_task(task_id)
                    return {
                        "type": "paraphrase",
                        "task_id": task_id,
                        "outline_ref": outline.outline_id,
                        "turns": [
                            {
                                "index": i,
                                "speaker": t.annotation.speaker.value,
                                "template": t.template,
                            }
                            for i, t in enumerate(outline.turns)
                        ],
                    }
                return None
            if task_type == "validate":
                for task_id, turn_index in self.open_validate_refs():
                    voters = {v.worker_id for v in self.votes.get((task_id, turn_index), [])}
                    if worker_id and worker_id in voters:
                        continue
                    outline = self._outline_for_task(task_id)
                    rewrite = self.rewrites[task_id]
                    return {
                        "type": "validate",
                        "task_id": f"v::{task_id}::{turn_index}",
                        "turn_index": turn_index,
                        "template": outline.turns[turn_index].template,
                        "utterance": rewrite.utterances[turn_index],
                        "context": self._context(task_id),
                    }
                return None
            if task_type == "span":
                for task_id, turn_index, slot in self.open_span_refs():
                    fixers = {
                        f.worker_id for f in self.span_fixes.get((task_id, turn_index, slot), [])
                    }
                    if worker_id and worker_id in fixers:
                        continue
                    outline = self._outline_for_task(task_id)
                    annotation = outline.turns[turn_index].annotation
                    value = ""
                    for s, v in taggable_values(annotation):
                        if s == slot:
                            value = v
                            break
                    return {
                        "type": "span",
                        "task_id": f"s::{task_id}::{turn_index}::{slot}",
                        "utterance": self.rewrites[task_id].utterances[turn_index],
                        "slot": slot,
                        "value": value,
                    }
                return None
            if task_type == "rate":
                dialogues = {d.dialogue_id: d for d in self.finalize().dialogues}
                for dialogue_id, turn_index in self.open_rate_refs():
                    raters = {
                        r["worker_id"] for r in self.ratings.get((dialogue_id, turn_index), [])
                    }
                    if worker_id and worker_id in raters:
                        continue
                    dialogue = dialogues[dialogue_id]
                    turn = dialogue.turns[turn_index]
                    return {
                        "type": "rate",
                        "task_id": f"r::{dialogue_id}::{turn_index}",
                        "dialogue_id": dialogue_id,
                        "turn_index": turn_index,
                        "speaker": turn.annotation.speaker.value,
                        "utterance": turn.utterance,
                        "dimensions": list(dimensions_for(turn.annotation.speaker)),
                        "context": [
                            {"speaker": t.annotation.speaker.value, "utterance": t.utterance}
                            for t in dialogue.turns
                        ],
                    }
                return None
            raise UnknownTaskError(f"unknown task type '{task_type}'")

    def _context(self, task_id: str) -> list[dict]:
        outline = self._outline_for_task(task_id)
        rewrite = self.rewrites.get(task_id)
        return [
            {
                "speaker": t.annotation.speaker.value,
                "template": t.template,
                "utterance": rewrite.utterances[i] if rewrite else "",
            }
            for i, t in enumerate(outline.turns)
        ]

    # -- submissions ---------------------------------------------------------

    def submit(self, task_id: str, worker_id: str, payload: dict) -> dict:
        if not worker_id:
            raise MalformedSubmissionError("worker_id is required")
        with self._lock:
            if task_id.startswith("v::"):
                return self._submit_vote(task_id, worker_id, payload)
            if task_id.startswith("s::"):
                return self._submit_span(task_id, worker_id, payload)
            if task_id.startswith("r::"):
                return self._submit_rating(task_id, worker_id, payload)
            return self._submit_rewrite(task_id, worker_id, payload)

    def _submit_rewrite(self, task_id: str, worker_id: str, payload: dict) -> dict:
        task = self.tasks.get(task_id)
        if task is None:
            raise UnknownTaskError(f"unknown paraphrase task '{task_id}'")
        if task_id in self.rewrites:
            raise DuplicateSubmissionError(f"task '{task_id}' already has a rewrite")
        utterances = payload.get("utterances")
        if not isinstance(utterances, list) or len(utterances) != len(task.turns):
            raise MalformedSubmissionError(
                f"expected {len(task.turns)} utterances, got "
                f"{len(utterances) if isinstance(utterances, list) else 'none'}"
            )
        if any(not str(u).strip() for u in utterances):
            raise MalformedSubmissionError("every turn needs a non-empty utterance")
        event = {
            "kind": "rewrite",
            "task_id": task_id,
            "worker_id": worker_id,
            "utterances": [str(u) for u in utterances],
        }
        self._append_event(event)
        self._apply(event)
        return {"ok": True, "task_id": task_id}

    def _submit_vote(self, task_id: str, worker_id: str, payload: dict) -> dict:
        _, paraphrase_id, turn = task_id.split("::")
        turn_index = int(turn)
        if paraphrase_id not in self.rewrites:
            raise UnknownTaskError(f"no rewrite behind '{task_id}'")
        votes = self.votes.get((paraphrase_id, turn_index), [])
        if any(v.worker_id == worker_id for v in votes):
            raise DuplicateSubmissionError(f"worker '{worker_id}' already voted on '{task_id}'")
        if len(votes) >= VOTES_REQUIRED:
            raise DuplicateSubmissionError(f"task '{task_id}' already has enough votes")
        if "same_meaning" not in payload:
            raise MalformedSubmissionError("vote needs a boolean 'same_meaning'")
        event = {
            "kind": "vote",
            "task_id": paraphrase_id,
            "turn": turn_index,
            "worker_id": worker_id,
            "same_meaning": bool(payload["same_meaning"]),
        }
        self._append_event(event)
        self._apply(event)
        return {"ok": True, "task_id": task_id}

    def _submit_span(self, task_id: str, worker_id: str, payload: dict) -> dict:
        _, paraphrase_id, turn, slot = task_id.split("::")
        turn_index = int(turn)
        rewrite = self.rewrites.get(paraphrase_id)
        if rewrite is None:
            raise UnknownTaskError(f"no rewrite behind '{task_id}'")
        fixes = self.span_fixes.get((paraphrase_id, turn_index, slot), [])
        if any(f.worker_id == worker_id for f in fixes):
            raise DuplicateSubmissionError(f"worker '{worker_id}' already fixed '{task_id}'")
        if len(fixes) >= FIXES_REQUIRED:
            raise DuplicateSubmissionError(f"task '{task_id}' already has enough fixes")
        try:
            start, end = int(payload["start"]), int(payload["end"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedSubmissionError("span fix needs integer 'start' and 'end'") from exc
        utterance = rewrite.utterances[turn_index]
        if not (0 <= start < end <= len(utterance)):
            raise MalformedSubmissionError(f"span [{start}, {end}) outside the utterance")
        event = {
            "kind": "span_fix",
            "task_id": paraphrase_id,
            "turn": turn_index,
            "slot": slot,
            "start": start,
            "end": end,
            "worker_id": worker_id,
        }
        self._append_event(event)
        self._apply(event)
        return {"ok": True, "task_id": task_id}

    def _submit_rating(self, task_id: str, worker_id: str, payload: dict) -> dict:
        _, dialogue_id, turn = task_id.split("::")
        turn_index = int(turn)
        dialogues = {d.dialogue_id: d for d in self.finalize().dialogues}
        dialogue = dialogues.get(dialogue_id)
        if dialogue is None or turn_index >= len(dialogue.turns):
            raise UnknownTaskError(f"no finalized turn behind '{task_id}'")
        ratings = self.ratings.get((dialogue_id, turn_index), [])
        if any(r["worker_id"] == worker_id for r in ratings):
            raise DuplicateSubmissionError(f"worker '{worker_id}' already rated '{task_id}'")
        if len(ratings) >= RATINGS_REQUIRED:
            raise DuplicateSubmissionError(f"task '{task_id}' already has enough ratings")
        dims = dimensions_for(dialogue.turns[turn_index].annotation.speaker)
        scores = payload.get("scores")
        if not isinstance(scores, dict) or set(scores) != set(dims):
            raise MalformedSubmissionError(f"rating needs scores for exactly {list(dims)}")
        for dim, score in scores.items():
            if not isinstance(score, int) or not 1 <= score <= 5:
                raise MalformedSubmissionError(f"score for '{dim}' must be an integer in 1..5")
        event = {
            "kind": "rating",
            "dialogue_id": dialogue_id,
            "turn": turn_index,
            "worker_id": worker_id,
            "scores": scores,
        }
        self._append_event(event)
        self._apply(event)
        return {"ok": True, "task_id": task_id}

    # -- reporting -----------------------------------------------------------

    def status(self) -> dict:
        with self._lock:
            open_validate = self.open_validate_refs()
            open_span = self.open_span_refs()
            result = self.finalize()
            outcomes = {}
            for task_id, rewrite in sorted(self.rewrites.items()):
                for i in range(len(rewrite.utterances)):
                    outcomes[f"{task_id}::{i}"] = self._vote_outcome(task_id, i)
            rated_turns = sum(
                1 for votes in self.ratings.values() if len(votes) >= RATINGS_REQUIRED
            )
            return {
                "outlines": len(self.outlines),
                "tasks": {
                    "paraphrase_open": len(self.tasks) - len(self.rewrites),
                    "paraphrase_done": len(self.rewrites),
                    "validate_open": len(open_validate),
                    "span_open": len(open_span),
                    "rate_open": len(self.open_rate_refs()),
                },
                "validation_outcomes": outcomes,
                "dialogues": {
                    "finalized": len(result.dialogues),
                    "dropped": result.drop_report.total_dropped(),
                    "drop_causes": dict(result.drop_report.dropped),
                },
                "ratings": {"fully_rated_turns": rated_turns},
            }

    def rating_summary(self) -> dict:
        """Mean and standard deviation per rating dimension."""
        from statistics import mean, pstdev

        collected: dict[str, list[int]] = {}
        for votes in self.ratings.values():
            for r in votes:
                for dim, score in r["scores"].items():
                    collected.setdefault(dim, []).append(score)
        return {
            dim: {
                "count": len(scores),
                "mean": round(mean(scores), 4),
                "stddev": round(pstdev(scores), 4),
            }
            for dim, scores in sorted(collected.items())
        }
