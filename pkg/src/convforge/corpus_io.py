"""Flat-file corpus IO (one JSON record per line) and dataset splitting."""

from __future__ import annotations

import json
import random
from pathlib import Path

from .dialogue import (
    Dialogue,
    Outline,
    dialogue_from_dict,
    dialogue_to_dict,
    outline_from_dict,
    outline_to_dict,
)
from .errors import ParseError, TooFewDialoguesError, ValidationError


def _write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def _read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from exc
    return records


def write_outlines(path, outlines: list[Outline]) -> None:
    _write_jsonl(path, (outline_to_dict(o) for o in outlines))


def read_outlines(path) -> list[Outline]:
    return [outline_from_dict(r) for r in _read_jsonl(path)]


def write_dialogues(path, dialogues: list[Dialogue]) -> None:
    _write_jsonl(path, (dialogue_to_dict(d) for d in dialogues))


def read_dialogues(path) -> list[Dialogue]:
    return [dialogue_from_dict(r) for r in _read_jsonl(path)]


def split_corpus(
    dialogues: list[Dialogue],
    ratios: tuple[float, float, float],
    seed: int,
    allow_empty: bool = False,
) -> tuple[list[Dialogue], list[Dialogue], list[Dialogue]]:
    """Shuffle and partition into train/dev/test.

    All rewrites of one outline stay in the same split, so surface variants
    of a dialogue can never leak across partitions.
    """
    if any(r < 0 for r in ratios):
        raise ValidationError("split ratios must be non-negative", "ratios")
    if abs(sum(ratios) - 1.0) > 1e-6:
        raise ValidationError(f"split ratios must sum to 1, got {sum(ratios)}", "ratios")

    groups: dict[str, list[Dialogue]] = {}
    for d in dialogues:
        groups.setdefault(d.outline_ref, []).append(d)
    order = sorted(groups)
    random.Random(seed).shuffle(order)

    total = len(dialogues)
    boundaries = (ratios[0] * total, (ratios[0] + ratios[1]) * total)
    splits: tuple[list[Dialogue], ...] = ([], [], [])
    placed = 0
    index = 0
    for key in order:
        while index < 2 and placed >= boundaries[index] - 1e-9:
            index += 1
        splits[index].extend(groups[key])
        placed += len(groups[key])

    if not allow_empty and any(not s for s in splits):
        sizes = tuple(len(s) for s in splits)
        raise TooFewDialoguesError(f"a split would be empty: sizes {sizes}")
    return splits
