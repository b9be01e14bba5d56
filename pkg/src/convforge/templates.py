"""Template utterance generation: turn annotations to flat canonical sentences.

The wording lives in a JSON grammar file so non-programmers can retune it;
this module only composes slot pairs into the act skeletons. Developers can
shadow any (act, slot set) combination with an override template.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .dialogue import DialogueAct, Frame, Speaker, TurnAnnotation
from .errors import MissingRuleError, ParseError, PlaceholderMismatchError

_PLACEHOLDER = re.compile(r"<([a-z0-9_]+)>")


@dataclass(frozen=True)
class Override:
    act: DialogueAct
    slot_key: frozenset[str]
    template: str


@dataclass(frozen=True)
class TemplateGrammar:
    acts: dict[str, object]
    pair_joiners: dict[str, str]
    closing_pair: str
    value_aliases: dict[str, str]
    overrides: dict[tuple[str, frozenset[str]], str] = field(default_factory=dict)

    def rule(self, act: DialogueAct, speaker: Speaker) -> str:
        raw = self.acts.get(act.value)
        if raw is None:
            raise MissingRuleError(f"no template rule for act {act.value}")
        if isinstance(raw, dict):
            key = "user" if speaker is Speaker.USER else "system"
            if key not in raw:
                raise MissingRuleError(f"no {key} template rule for act {act.value}")
            return raw[key]
        return raw

    def skeleton(self, name: str) -> str:
        raw = self.acts.get(name)
        if raw is None:
            raise MissingRuleError(f"grammar file lacks the '{name}' skeleton")
        return str(raw)


def default_grammar() -> TemplateGrammar:
    raw = json.loads(
        resources.files("convforge.data").joinpath("default_grammar.json").read_text("utf-8")
    )
    return _grammar_from_dict(raw)


def _grammar_from_dict(raw: dict, overrides=None) -> TemplateGrammar:
    return TemplateGrammar(
        acts=raw["acts"],
        pair_joiners=raw.get("pair_joiners", {}),
        closing_pair=raw.get("closing_pair", "Thank you and good bye."),
        value_aliases=raw.get("value_aliases", {}),
        overrides=overrides or {},
    )


def load_overrides(doc: str, base: TemplateGrammar | None = None) -> TemplateGrammar:
    """Layer developer templates over the default grammar.

    The document is a JSON list of entries {act, slots, template}; template
    placeholders use <slot_name> and must stay within the entry's slot key.
    """
    base = base or default_grammar()
    try:
        entries = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise ParseError(f"override document is not valid JSON: {exc}") from exc
    overrides: dict[tuple[str, frozenset[str]], str] = dict(base.overrides)
    for entry in entries:
        act = DialogueAct(entry["act"])
        slot_key = frozenset(entry.get("slots", ()))
        template = entry["template"]
        for name in _PLACEHOLDER.findall(template):
            if name not in slot_key:
                raise PlaceholderMismatchError(
                    f"template for {act.value} references '<{name}>' outside its slot key"
                )
        overrides[(act.value, slot_key)] = template
    return TemplateGrammar(
        acts=base.acts,
        pair_joiners=base.pair_joiners,
        closing_pair=base.closing_pair,
        value_aliases=base.value_aliases,
        overrides=overrides,
    )


def humanize(name: str) -> str:
    return name.replace("_", " ")


def _sentence(text: str) -> str:
    return text[0].upper() + text[1:] if text else text


class TemplateRenderer:
    """Pure renderer over one grammar; safe to share across threads."""

    def __init__(self, grammar: TemplateGrammar | None = None):
        self.grammar = grammar or default_grammar()

    def _value(self, v: str) -> str:
        return self.grammar.value_aliases.get(v, v)

    def _pairs(self, slots: dict, skip: tuple[str, ...] = ()) -> str:
        joiner = self.grammar.pair_joiners.get("and", " and ")
        pair_fmt = self.grammar.pair_joiners.get("pair", "{slot} is {value}")
        parts = []
        for name, value in slots.items():
            if name in skip:
                continue
            if isinstance(value, tuple):
                value = self.grammar.pair_joiners.get("list", ", ").join(value)
            parts.append(pair_fmt.format(slot=humanize(name), value=self._value(value)))
        return joiner.join(parts)

    def render_frame(self, frame: Frame, speaker: Speaker = Speaker.SYSTEM) -> str:
        g = self.grammar
        override = g.overrides.get((frame.act.value, frozenset(frame.slots)))
        if override is not None:
            out = override
            for name, value in frame.slots.items():
                if isinstance(value, tuple):
                    value = g.pair_joiners.get("list", ", ").join(value)
                out = out.replace(f"<{name}>", self._value(value))
            return out

        act = frame.act
        if act is DialogueAct.INFORM and "intent" in frame.slots:
            intent = humanize(frame.slots["intent"])
            others = self._pairs(frame.slots, skip=("intent",))
            if not others:
                return _sentence(g.skeleton("INFORM_INTENT_ONLY").format(intent=intent))
            return _sentence(g.skeleton("INFORM_INTENT").format(intent=intent, pairs=others))
        if act is DialogueAct.INFORM:
            return _sentence(g.skeleton("INFORM").format(pairs=self._pairs(frame.slots)))
        if act is DialogueAct.REQUEST:
            joined = g.pair_joiners.get("and", " and ").join(
                humanize(n) for n in frame.slot_names()
            )
            return _sentence(g.skeleton("REQUEST").format(slots=joined))
        if act in (DialogueAct.OFFER, DialogueAct.CONFIRM):
            return _sentence(g.skeleton(act.value).format(pairs=self._pairs(frame.slots)))
        if act is DialogueAct.SELECT:
            set_slots = [n for n, v in frame.slots.items() if isinstance(v, tuple)]
            if not set_slots:
                return _sentence(g.skeleton("OFFER").format(pairs=self._pairs(frame.slots)))
            primary = set_slots[0]
            values = g.pair_joiners.get("list", ", ").join(frame.slots[primary])
            rest = self._pairs(frame.slots, skip=(primary,))
            if rest:
                return _sentence(
                    g.skeleton("SELECT_WITH").format(
                        slot=humanize(primary), values=values, pairs=rest
                    )
                )
            return _sentence(g.skeleton("SELECT").format(slot=humanize(primary), values=values))
        return g.rule(act, speaker)

    def render_turn(self, annotation: TurnAnnotation) -> str:
        acts = annotation.acts()
        if acts == [DialogueAct.THANK_YOU, DialogueAct.GOOD_BYE]:
            return self.grammar.closing_pair
        return " ".join(self.render_frame(f, annotation.speaker) for f in annotation.frames)


def render_frame(frame: Frame, grammar: TemplateGrammar, speaker: Speaker = Speaker.SYSTEM) -> str:
    return TemplateRenderer(grammar).render_frame(frame, speaker)


def render_turn(annotation: TurnAnnotation, grammar: TemplateGrammar) -> str:
    return TemplateRenderer(grammar).render_turn(annotation)
