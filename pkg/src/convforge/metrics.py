"""Corpus diversity metrics: token, transition, and dialogue-flow statistics.

The flow metrics count value-free turn keys: a transition is the key pair of
two contiguous turns inside one dialogue, a subdialogue of k is a window of k
contiguous transitions, and a full outline is the whole key sequence.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .dialogue import (
    Dialogue,
    DialogueAct,
    DialogueTurn,
    Frame,
    Speaker,
    TurnAnnotation,
    canonical_key,
    dialogue_from_dict,
)
from .errors import EmptyCorpusError, ParseError, UnknownFormatError

log = logging.getLogger(__name__)

_TOKEN = re.compile(r"[a-z0-9']+|[^a-z0-9'\s]")


def tokenize(utterance: str) -> list[str]:
    """Lowercase, split punctuation from words, keep alphanumeric runs whole."""
    return _TOKEN.findall(utterance.lower())


@dataclass(frozen=True)
class DiversityReport:
    dialogues: int
    total_turns: int
    total_tokens: int
    avg_turns_per_dialogue: float
    avg_tokens_per_turn: float
    unique_token_ratio: float
    unique_bigram_ratio: float
    unique_transition_ratio: float
    unique_subdialogue_ratio_k3: float | None
    unique_subdialogue_ratio_k5: float | None
    unique_outline_ratio: float

    ROWS = (
        ("Dialogues", "dialogues"),
        ("Total turns", "total_turns"),
        ("Total tokens", "total_tokens"),
        ("Avg. turns per dialogue", "avg_turns_per_dialogue"),
        ("Avg. tokens per turn", "avg_tokens_per_turn"),
        ("Unique tokens / Total tokens", "unique_token_ratio"),
        ("Unique bigrams / Total tokens", "unique_bigram_ratio"),
        ("Unique transitions / Total turns", "unique_transition_ratio"),
        ("Unique subdialogues (k=3) / Total", "unique_subdialogue_ratio_k3"),
        ("Unique subdialogues (k=5) / Total", "unique_subdialogue_ratio_k5"),
        ("Unique full outlines / Dialogues", "unique_outline_ratio"),
    )

    def to_dict(self) -> dict:
        return {field: getattr(self, field) for _, field in self.ROWS}

    def as_table(self) -> str:
        width = max(len(label) for label, _ in self.ROWS)
        lines = []
        for label, field in self.ROWS:
            value = getattr(self, field)
            if value is None:
                rendered = "n/a"
            elif isinstance(value, float):
                rendered = f"{value:.4f}"
            else:
                rendered = str(value)
            lines.append(f"{label.ljust(width)}  {rendered}")
        return "\n".join(lines)

    def as_tsv(self) -> str:
        lines = ["metric\tvalue"]
        for label, field in self.ROWS:
            value = getattr(self, field)
            lines.append(f"{label}\t{'' if value is None else value}")
        return "\n".join(lines)


def _windows(keys: list[str], size: int):
    for i in range(len(keys) - size + 1):
        yield tuple(keys[i : i + size])


def compute_report(corpus: list[Dialogue]) -> DiversityReport:
    if not corpus:
        raise EmptyCorpusError("corpus has no dialogues")
    total_turns = 0
    total_tokens = 0
    unigrams: set[str] = set()
    bigrams: set[tuple[str, str]] = set()
    transitions: set[tuple[str, str]] = set()
    sub3: set[tuple] = set()
    sub5: set[tuple] = set()
    sub3_total = 0
    sub5_total = 0
    outlines: set[tuple] = set()

    for dialogue in corpus:
        keys = [canonical_key(t.annotation) for t in dialogue.turns]
        total_turns += len(dialogue.turns)
        for turn in dialogue.turns:
            tokens = tokenize(turn.utterance)
            total_tokens += len(tokens)
            unigrams.update(tokens)
            bigrams.update(zip(tokens, tokens[1:]))
        transitions.update(zip(keys, keys[1:]))
        # A window of k transitions spans k + 1 turns.
        for window in _windows(keys, 4):
            sub3.add(window)
            sub3_total += 1
        for window in _windows(keys, 6):
            sub5.add(window)
            sub5_total += 1
        outlines.add(tuple(keys))

    return DiversityReport(
        dialogues=len(corpus),
        total_turns=total_turns,
        total_tokens=total_tokens,
        avg_turns_per_dialogue=total_turns / len(corpus),
        avg_tokens_per_turn=total_tokens / total_turns if total_turns else 0.0,
        unique_token_ratio=len(unigrams) / total_tokens if total_tokens else 0.0,
        unique_bigram_ratio=len(bigrams) / total_tokens if total_tokens else 0.0,
        unique_transition_ratio=len(transitions) / total_turns if total_turns else 0.0,
        unique_subdialogue_ratio_k3=len(sub3) / sub3_total if sub3_total else None,
        unique_subdialogue_ratio_k5=len(sub5) / sub5_total if sub5_total else None,
        unique_outline_ratio=len(outlines) / len(corpus),
    )


# Default mapping for corpora labeled with Cambridge-style lowercase acts.
DSTC2_ACT_MAP = {
    "welcomemsg": "GREETING",
    "hello": "GREETING",
    "greeting": "GREETING",
    "inform": "INFORM",
    "offer": "OFFER",
    "select": "SELECT",
    "request": "REQUEST",
    "reqalts": "REQUEST_ALTS",
    "reqmore": "REQUEST_ALTS",
    "confirm": "CONFIRM",
    "expl-conf": "CONFIRM",
    "impl-conf": "CONFIRM",
    "affirm": "AFFIRM",
    "ack": "AFFIRM",
    "negate": "NEGATE",
    "deny": "NEGATE",
    "canthelp": "NOTIFY_FAILURE",
    "canthelp.exception": "NOTIFY_FAILURE",
    "book": "NOTIFY_SUCCESS",
    "thankyou": "THANK_YOU",
    "bye": "GOOD_BYE",
    "goodbye": "GOOD_BYE",
    "repeat": "CANT_UNDERSTAND",
    "confirm-domain": "CONFIRM",
}


def _import_dstc2_like(path: str, act_map: dict[str, str]) -> list[Dialogue]:
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, list):
        raise ParseError(f"{path}: expected a JSON list of dialogues")
    unmapped: dict[str, int] = {}
    dialogues: list[Dialogue] = []
    for i, d in enumerate(raw):
        turns = []
        for t in d.get("turns", []):
            speaker = Speaker.SYSTEM if t.get("speaker", "").lower().startswith("s") else Speaker.USER
            frames = []
            for a in t.get("acts", []):
                name = a.get("act", "").lower()
                mapped = act_map.get(name)
                if mapped is None:
                    unmapped[name] = unmapped.get(name, 0) + 1
                    mapped = "OTHER"
                frames.append(Frame(DialogueAct(mapped), a.get("slots", {})))
            if not frames:
                frames = [Frame(DialogueAct.OTHER)]
            turns.append(
                DialogueTurn(
                    utterance=t.get("utterance", ""),
                    spans=(),
                    annotation=TurnAnnotation(speaker=speaker, frames=tuple(frames)),
                )
            )
        dialogues.append(
            Dialogue(
                dialogue_id=d.get("dialogue_id", f"d{i:05d}"),
                outline_ref=d.get("dialogue_id", f"d{i:05d}"),
                turns=tuple(turns),
            )
        )
    if unmapped:
        log.warning(
            "%d unmappable act labels became OTHER: %s",
            sum(unmapped.values()),
            ", ".join(sorted(unmapped)),
        )
    return dialogues


def import_corpus(
    path: str, format: str = "native", act_map: dict[str, str] | None = None
) -> list[Dialogue]:
    """Read a corpus file into dialogues.

    native: one JSON dialogue per line, as written by this package.
    dstc2_like: a JSON list with lowercase act labels, mapped via act_map.
    """
    if format == "native":
        dialogues = []
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    dialogues.append(dialogue_from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError) as exc:
                    raise ParseError(f"{path}:{line_no}: {exc}") from exc
        return dialogues
    if format == "dstc2_like":
        return _import_dstc2_like(path, act_map or DSTC2_ACT_MAP)
    raise UnknownFormatError(f"unknown corpus format '{format}'")
