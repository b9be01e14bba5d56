"""Synthetic dataset expansion: realize fresh outlines via the paraphrase map.

Strict mode (the default) looks utterances up by annotation including slot
values. The substitution mode keys on the value-free turn shape instead and
rewrites stored slot spans to the new values, which raises the hit rate at
some cost in fidelity.
"""

from __future__ import annotations

import random

from .crowd import MapEntry, ParaphraseMap, flatten_values
from .dialogue import Dialogue, DialogueTurn, Outline, SlotSpan, TurnAnnotation
from .errors import EmptyMapError


def _substitute(entry: MapEntry, annotation: TurnAnnotation) -> tuple[str, tuple[SlotSpan, ...]] | None:
    """Rewrite a stored utterance's slot values to match a new annotation.

    Only works when every differing slot is covered by stored spans (so the
    old value appears verbatim and can be swapped); otherwise the entry is
    unusable for this turn.
    """
    new_values = flatten_values(annotation)
    old_values = entry.values
    if set(new_values) != set(old_values):
        return None
    diff: dict[str, str] = {}
    for slot, new in new_values.items():
        old = old_values[slot]
        if isinstance(new, tuple) or isinstance(old, tuple):
            if tuple(new) != tuple(old):
                return None  # set-valued slots are never rewritten
            continue
        if new.lower() != old.lower():
            diff[slot] = new
    if not diff:
        return entry.utterance, entry.spans
    spanned = {s.slot for s in entry.spans}
    if not all(slot in spanned for slot in diff):
        return None  # differing value never surfaced verbatim; cannot swap

    out = []
    new_spans: list[SlotSpan] = []
    cursor = 0
    offset = 0
    for span in sorted(entry.spans, key=lambda s: s.start):
        out.append(entry.utterance[cursor : span.start])
        value = diff.get(span.slot, span.value)
        start = span.start + offset
        out.append(value)
        new_spans.append(SlotSpan(span.slot, start, start + len(value), value))
        offset += len(value) - (span.end - span.start)
        cursor = span.end
    out.append(entry.utterance[cursor:])
    return "".join(out), tuple(new_spans)


def expand(
    outlines: list[Outline],
    pmap: ParaphraseMap,
    rng: random.Random,
    strict: bool = True,
) -> tuple[list[Dialogue], int]:
    """Sample one stored utterance per turn of every outline.

    An outline is dropped (and counted) as soon as one of its turns has no
    usable utterance in the map.
    """
    if len(pmap) == 0:
        raise EmptyMapError("paraphrase map has no entries")
    dialogues: list[Dialogue] = []
    dropped = 0
    for outline in outlines:
        turns: list[DialogueTurn] = []
        usable = True
        for turn in outline.turns:
            annotation = turn.annotation
            if strict:
                candidates = pmap.lookup_strict(annotation)
                if not candidates:
                    usable = False
                    break
                entry = candidates[rng.randrange(len(candidates))]
                turns.append(
                    DialogueTurn(
                        utterance=entry.utterance, spans=entry.spans, annotation=annotation
                    )
                )
                continue
            candidates = pmap.lookup_shape(annotation)
            if not candidates:
                usable = False
                break
            picked = None
            for idx in rng.sample(range(len(candidates)), len(candidates)):
                substituted = _substitute(candidates[idx], annotation)
                if substituted is not None:
                    picked = substituted
                    break
            if picked is None:
                usable = False
                break
            utterance, spans = picked
            turns.append(DialogueTurn(utterance=utterance, spans=spans, annotation=annotation))
        if not usable:
            dropped += 1
            continue
        dialogues.append(
            Dialogue(
                dialogue_id=f"x-{outline.outline_id}",
                outline_ref=outline.outline_id,
                turns=tuple(turns),
            )
        )
    return dialogues, dropped
