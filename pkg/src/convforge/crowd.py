"""Paraphrase collection pipeline: tasks, rewrites, votes, spans, finalization.

Workers see a full outline and rewrite every turn in context. Each rewritten
utterance must then survive a two-vote same-meaning check and carry a
complete slot-span set (found by substring match, or supplied by two agreeing
span fixes) before it reaches the corpus and the paraphrase map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dialogue import (
    Dialogue,
    DialogueAct,
    DialogueTurn,
    Outline,
    SlotSpan,
    TurnAnnotation,
    canonical_key,
    span_from_dict,
    span_to_dict,
    valued_key,
)
from .errors import DanglingReferenceError, ValidationError, WrongVoteCountError
from .task_spec import DONTCARE

TAGGABLE_ACTS = {
    DialogueAct.INFORM,
    DialogueAct.OFFER,
    DialogueAct.CONFIRM,
    DialogueAct.SELECT,
}

OPEN = "open"
SUBMITTED = "submitted"
VALIDATED = "validated"

AUTO_WORKER = "auto"

# Drop-report causes.
CAUSE_MEANING = "meaning-validation"
CAUSE_MISSING_SPANS = "missing-spans"
CAUSE_SPAN_DISAGREEMENT = "span-disagreement"
CAUSE_EMPTY = "empty-utterance"


@dataclass(frozen=True)
class ParaphraseTask:
    task_id: str
    outline_ref: str
    turns: tuple[tuple[int, str], ...]  # (turn index, template)
    status: str = OPEN


@dataclass(frozen=True)
class Rewrite:
    task_id: str
    worker_id: str
    utterances: tuple[str, ...]


@dataclass(frozen=True)
class ValidationVote:
    task_id: str
    turn_index: int
    worker_id: str
    same_meaning: bool


@dataclass(frozen=True)
class SpanFix:
    task_id: str
    turn_index: int
    slot: str
    start: int
    end: int
    worker_id: str


@dataclass(frozen=True)
class MissingSlots:
    """Routing signal: values that substring match could not locate."""

    slots: tuple[str, ...]
    found: tuple[SlotSpan, ...] = ()


def task_id_for(outline_id: str, k: int) -> str:
    return f"pt-{outline_id}-{k}"


def outline_ref_of_task(task_id: str) -> str:
    if not task_id.startswith("pt-") or "-" not in task_id[3:]:
        raise DanglingReferenceError(f"'{task_id}' is not a paraphrase task id")
    return task_id[3:].rsplit("-", 1)[0]


def make_tasks(outlines: list[Outline], k: int) -> list[ParaphraseTask]:
    """K independent rewrite tasks per outline, each showing the full outline."""
    if k < 1:
        raise ValidationError("replication factor must be >= 1", "k")
    tasks = []
    for outline in outlines:
        turns = tuple((i, t.template) for i, t in enumerate(outline.turns))
        for j in range(k):
            tasks.append(
                ParaphraseTask(
                    task_id=task_id_for(outline.outline_id, j),
                    outline_ref=outline.outline_id,
                    turns=turns,
                )
            )
    return tasks


def taggable_values(annotation: TurnAnnotation) -> list[tuple[str, str]]:
    """(slot, value) pairs whose value should appear verbatim in the turn.

    The intent pseudo-slot and the dontcare sentinel never surface verbatim
    (templates humanize both), so they are exempt from tagging.
    """
    pairs: list[tuple[str, str]] = []
    for frame in annotation.frames:
        if frame.act not in TAGGABLE_ACTS:
            continue
        for slot, value in frame.slots.items():
            if slot == "intent":
                continue
            values = value if isinstance(value, tuple) else (value,)
            for v in values:
                if v.lower() == DONTCARE:
                    continue
                pairs.append((slot, v))
    return pairs


def tag_spans(annotation: TurnAnnotation, utterance: str) -> list[SlotSpan] | MissingSlots:
    """Locate each slot value in the utterance by leftmost substring match.

    Matches are case-insensitive and never overlap; earlier frames and
    earlier slots claim earlier occurrences. Values that cannot be found are
    returned as a MissingSlots signal for the span-fix task queue.
    """
    haystack = utterance.lower()
    claimed: list[tuple[int, int]] = []
    spans: list[SlotSpan] = []
    missing: list[str] = []
    for slot, value in taggable_values(annotation):
        needle = value.lower()
        pos = 0
        placed = False
        while needle:
            start = haystack.find(needle, pos)
            if start < 0:
                break
            end = start + len(needle)
            if all(end <= c0 or start >= c1 for c0, c1 in claimed):
                claimed.append((start, end))
                spans.append(SlotSpan(slot=slot, start=start, end=end, value=value))
                placed = True
                break
            pos = start + 1
        if not placed:
            missing.append(slot)
    spans.sort(key=lambda s: s.start)
    if missing:
        return MissingSlots(slots=tuple(dict.fromkeys(missing)), found=tuple(spans))
    return spans


def apply_validation(utterance_ref: tuple[str, int], votes: list[ValidationVote]) -> bool:
    """Two-vote meaning check: keep only when both workers say yes."""
    if len(votes) != 2:
        raise WrongVoteCountError(
            f"utterance {utterance_ref} has {len(votes)} votes, expected exactly 2"
        )
    return all(v.same_meaning for v in votes)


@dataclass(frozen=True)
class MapEntry:
    utterance: str
    spans: tuple[SlotSpan, ...]
    values: dict[str, str | tuple[str, ...]]

    def to_dict(self) -> dict:
        return {
            "utterance": self.utterance,
            "spans": [span_to_dict(s) for s in self.spans],
            "values": {
                k: list(v) if isinstance(v, tuple) else v for k, v in self.values.items()
            },
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "MapEntry":
        return cls(
            utterance=raw["utterance"],
            spans=tuple(span_from_dict(s) for s in raw.get("spans", [])),
            values={
                k: tuple(v) if isinstance(v, list) else v
                for k, v in raw.get("values", {}).items()
            },
        )


def flatten_values(annotation: TurnAnnotation) -> dict[str, str | tuple[str, ...]]:
    out: dict[str, str | tuple[str, ...]] = {}
    for frame in annotation.frames:
        if frame.act not in TAGGABLE_ACTS:
            continue
        out.update(frame.slots)
    return out


class ParaphraseMap:
    """Validated utterances keyed by their turn annotation.

    Primary keys include slot values (strict lookups); a shape index over
    value-free keys supports the substitution-based lookup mode.
    """

    def __init__(self):
        self.entries: dict[str, list[MapEntry]] = {}
        self._shape_index: dict[str, list[str]] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def utterance_count(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def add(self, annotation: TurnAnnotation, utterance: str, spans: tuple[SlotSpan, ...]):
        key = valued_key(annotation)
        bucket = self.entries.setdefault(key, [])
        if any(e.utterance == utterance for e in bucket):
            return
        bucket.append(MapEntry(utterance=utterance, spans=spans, values=flatten_values(annotation)))
        shape = canonical_key(annotation)
        keys = self._shape_index.setdefault(shape, [])
        if key not in keys:
            keys.append(key)

    def lookup_strict(self, annotation: TurnAnnotation) -> list[MapEntry]:
        return list(self.entries.get(valued_key(annotation), ()))

    def lookup_shape(self, annotation: TurnAnnotation) -> list[MapEntry]:
        out: list[MapEntry] = []
        for key in self._shape_index.get(canonical_key(annotation), ()):
            out.extend(self.entries[key])
        return out

    def to_dict(self) -> dict:
        return {
            "entries": {k: [e.to_dict() for e in v] for k, v in self.entries.items()},
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ParaphraseMap":
        pmap = cls()
        for key, entries in raw.get("entries", {}).items():
            pmap.entries[key] = [MapEntry.from_dict(e) for e in entries]
            shape = _shape_of_valued_key(key)
            pmap._shape_index.setdefault(shape, []).append(key)
        return pmap


def _shape_of_valued_key(key: str) -> str:
    """Recover the value-free key from a valued key string."""
    parts = key.split("|")
    out = [parts[0]]
    for part in parts[1:]:
        if "(" not in part:
            out.append(part)
            continue
        act, inner = part.split("(", 1)
        names = []
        depth = 0
        token = ""
        for ch in inner[:-1] + ",":
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
            if ch == "," and depth == 0:
                names.append(token.split("=", 1)[0])
                token = ""
            else:
                token += ch
        out.append(f"{act}({','.join(sorted(names))})")
    return "|".join(out)


@dataclass
class DropReport:
    dialogues_in: int = 0
    dialogues_out: int = 0
    dropped: dict[str, int] = field(default_factory=dict)

    def note(self, cause: str):
        self.dropped[cause] = self.dropped.get(cause, 0) + 1

    def total_dropped(self) -> int:
        return sum(self.dropped.values())

    def to_dict(self) -> dict:
        return {
            "dialogues_in": self.dialogues_in,
            "dialogues_out": self.dialogues_out,
            "dropped": dict(self.dropped),
        }


def auto_paraphrase(outline: Outline, k: int = 0) -> Rewrite:
    """Identity rewrite: utterances equal the templates.

    Lets the whole pipeline run end to end without humans; templates always
    validate and tag by construction.
    """
    return Rewrite(
        task_id=task_id_for(outline.outline_id, k),
        worker_id=AUTO_WORKER,
        utterances=tuple(t.template for t in outline.turns),
    )


@dataclass(frozen=True)
class FinalizeResult:
    dialogues: tuple[Dialogue, ...]
    paraphrase_map: ParaphraseMap
    drop_report: DropReport


def finalize_dialogues(
    outlines: list[Outline],
    rewrites: list[Rewrite],
    votes: list[ValidationVote] | None = None,
    span_fixes: list[SpanFix] | None = None,
    tasks: list[ParaphraseTask] | None = None,
) -> FinalizeResult:
    """Turn surviving rewrites into dialogues and fold them into the map.

    One dialogue per rewrite whose every turn passed validation (explicit
    votes, or none recorded) and carries a complete span set — automatically
    tagged or completed by two agreeing span fixes. Anything else is dropped
    and accounted for by cause.
    """
    votes = votes or []
    span_fixes = span_fixes or []
    by_outline = {o.outline_id: o for o in outlines}
    task_to_outline: dict[str, str] = {}
    if tasks:
        task_to_outline = {t.task_id: t.outline_ref for t in tasks}

    votes_by_ref: dict[tuple[str, int], list[ValidationVote]] = {}
    for v in votes:
        votes_by_ref.setdefault((v.task_id, v.turn_index), []).append(v)
    fixes_by_ref: dict[tuple[str, int, str], list[SpanFix]] = {}
    for fx in span_fixes:
        fixes_by_ref.setdefault((fx.task_id, fx.turn_index, fx.slot), []).append(fx)

    report = DropReport(dialogues_in=len(rewrites))
    pmap = ParaphraseMap()
    dialogues: list[Dialogue] = []

    for rewrite in rewrites:
        outline_id = task_to_outline.get(rewrite.task_id) or outline_ref_of_task(rewrite.task_id)
        outline = by_outline.get(outline_id)
        if outline is None:
            raise DanglingReferenceError(
                f"rewrite for task '{rewrite.task_id}' references unknown outline '{outline_id}'"
            )
        if len(rewrite.utterances) != len(outline.turns):
            raise ValidationError(
                f"rewrite has {len(rewrite.utterances)} utterances for "
                f"{len(outline.turns)} turns",
                rewrite.task_id,
            )
        turns: list[DialogueTurn] = []
        drop_cause: str | None = None
        for i, outline_turn in enumerate(outline.turns):
            utterance = rewrite.utterances[i]
            if not utterance.strip():
                drop_cause = CAUSE_EMPTY
                break
            turn_votes = votes_by_ref.get((rewrite.task_id, i), [])
            if turn_votes and not apply_validation((rewrite.task_id, i), turn_votes):
                drop_cause = CAUSE_MEANING
                break
            tagged = tag_spans(outline_turn.annotation, utterance)
            if isinstance(tagged, MissingSlots):
                spans = list(tagged.found)
                failed = None
                for slot in tagged.slots:
                    fixes = fixes_by_ref.get((rewrite.task_id, i, slot), [])
                    if len(fixes) < 2:
                        failed = CAUSE_MISSING_SPANS
                        break
                    first, second = fixes[0], fixes[1]
                    if (first.start, first.end) != (second.start, second.end):
                        failed = CAUSE_SPAN_DISAGREEMENT
                        break
                    spans.append(
                        SlotSpan(
                            slot=slot,
                            start=first.start,
                            end=first.end,
                            value=utterance[first.start : first.end],
                        )
                    )
                if failed:
                    drop_cause = failed
                    break
                spans.sort(key=lambda s: s.start)
                if any(spans[j].end > spans[j + 1].start for j in range(len(spans) - 1)):
                    drop_cause = CAUSE_SPAN_DISAGREEMENT
                    break
                tagged = spans
            turns.append(
                DialogueTurn(
                    utterance=utterance, spans=tuple(tagged), annotation=outline_turn.annotation
                )
            )
        if drop_cause:
            report.note(drop_cause)
            continue
        dialogues.append(
            Dialogue(dialogue_id=rewrite.task_id, outline_ref=outline_id, turns=tuple(turns))
        )
        for turn in turns:
            pmap.add(turn.annotation, turn.utterance, turn.spans)

    report.dialogues_out = len(dialogues)
    return FinalizeResult(
        dialogues=tuple(dialogues), paraphrase_map=pmap, drop_report=report
    )
