"""Ordered rule-table baseline: `IF <predicates> THEN <choice>` text format.

The grammar is deliberately tiny. Each line is a comment, a conditional rule,
or the mandatory final default:

    IF marking=double_yellow AND oncoming<30 THEN AUTONOMY
    IF category=stop THEN HUMAN
    DEFAULT THEN AUTONOMY

Predicates test a fixed fact tuple derived from an arbitration request:
the lane marking the human plan would cross, distance to the nearest oncoming
vehicle (infinite when none), the human attention text, whether the
uncertainty trigger fired, and the human plan's category. First match wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .abstraction import PlanLabel, parse_plan_phrase
from .errors import RuleParseError

MARKING_VALUES = {"dashed_white", "solid_white", "solid_yellow", "double_yellow", "none"}
ATTENTION_VALUES = {"attentive", "distracted", "gaze_left", "gaze_right", "unknown"}
CATEGORY_VALUES = {"stop", "turn", "lane_change", "forward", "slow"}
UNCERTAINTY_VALUES = {"triggered", "quiet"}


@dataclass(frozen=True)
class RuleFacts:
    """Inputs a rule table is evaluated against."""

    marking_crossed: str  # marking slug or "none"
    oncoming_distance: float  # meters; +inf when no oncoming vehicle
    attention: str
    uncertainty_triggered: bool
    plan_category: str


@dataclass(frozen=True)
class Predicate:
    kind: str  # marking | oncoming | attention | uncertainty | category
    op: str  # "=" | "<" | ">"
    value: str | float

    def holds(self, facts: RuleFacts) -> bool:
        if self.kind == "marking":
            return facts.marking_crossed == self.value
        if self.kind == "oncoming":
            if self.op == "<":
                return facts.oncoming_distance < self.value
            return facts.oncoming_distance > self.value
        if self.kind == "attention":
            return facts.attention.replace(" ", "_") == self.value
        if self.kind == "uncertainty":
            return facts.uncertainty_triggered == (self.value == "triggered")
        if self.kind == "category":
            return facts.plan_category == self.value
        raise AssertionError(f"unknown predicate kind {self.kind}")


@dataclass(frozen=True)
class Rule:
    predicates: tuple[Predicate, ...]  # empty for the default rule
    choice: str  # "human" | "autonomy" | "alternative"
    alternative: PlanLabel | None
    line: int

    def matches(self, facts: RuleFacts) -> bool:
        return all(p.holds(facts) for p in self.predicates)


@dataclass(frozen=True)
class RuleTable:
    rules: tuple[Rule, ...]  # conditional rules in order, then the default last

    def evaluate(self, facts: RuleFacts) -> Rule:
        for rule in self.rules:
            if rule.matches(facts):
                return rule
        raise AssertionError("rule table has no default rule")  # pragma: no cover


_ONCOMING_RE = re.compile(r"^oncoming([<>])(\d+(?:\.\d+)?)$")
_EQ_RE = re.compile(r"^(marking|attention|uncertainty|category)=([a-z_]+)$")


def _parse_predicate(token: str, line_no: int) -> Predicate:
    token = token.strip().lower()
    m = _ONCOMING_RE.match(token)
    if m:
        return Predicate(kind="oncoming", op=m.group(1), value=float(m.group(2)))
    m = _EQ_RE.match(token)
    if m:
        kind, value = m.group(1), m.group(2)
        allowed = {
            "marking": MARKING_VALUES,
            "attention": ATTENTION_VALUES,
            "uncertainty": UNCERTAINTY_VALUES,
            "category": CATEGORY_VALUES,
        }[kind]
        if value not in allowed:
            raise RuleParseError(f"unknown {kind} value {value!r}", line_no)
        return Predicate(kind=kind, op="=", value=value)
    raise RuleParseError(f"cannot parse predicate {token!r}", line_no)


def _parse_choice(text: str, line_no: int) -> tuple[str, PlanLabel | None]:
    text = text.strip()
    upper = text.upper()
    if upper == "HUMAN":
        return "human", None
    if upper == "AUTONOMY":
        return "autonomy", None
    if upper.startswith("ALTERNATIVE="):
        raw = text[len("ALTERNATIVE="):].strip()
        try:
            label = parse_plan_phrase(raw)
        except ValueError:
            try:
                label = PlanLabel.from_slug(raw.lower())
            except ValueError:
                raise RuleParseError(f"unknown alternative primitive {raw!r}", line_no) from None
        return "alternative", label
    raise RuleParseError(f"choice must be HUMAN, AUTONOMY, or ALTERNATIVE=<primitive>", line_no)


def generate_decision_tree(rule_source: str) -> RuleTable:
    """Parse rule text into an ordered table; the final rule must be a DEFAULT."""
    rules: list[Rule] = []
    saw_default = False
    for line_no, raw_line in enumerate(rule_source.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if saw_default:
            raise RuleParseError("rules after the DEFAULT rule are unreachable", line_no)
        upper = line.upper()
        if upper.startswith("DEFAULT"):
            rest = line[len("DEFAULT"):].strip()
            if not rest.upper().startswith("THEN"):
                raise RuleParseError("default rule must read `DEFAULT THEN <choice>`", line_no)
            choice, alt = _parse_choice(rest[len("THEN"):], line_no)
            rules.append(Rule(predicates=(), choice=choice, alternative=alt, line=line_no))
            saw_default = True
            continue
        if not upper.startswith("IF "):
            raise RuleParseError("rule must start with IF or DEFAULT", line_no)
        body = line[3:]
        then_match = re.search(r"\bTHEN\b", body, flags=re.IGNORECASE)
        if not then_match:
            raise RuleParseError("rule is missing THEN", line_no)
        predicate_text = body[: then_match.start()]
        choice, alt = _parse_choice(body[then_match.end():], line_no)
        tokens = re.split(r"\bAND\b", predicate_text, flags=re.IGNORECASE)
        predicates = tuple(_parse_predicate(t, line_no) for t in tokens if t.strip())
        if not predicates:
            raise RuleParseError("conditional rule has no predicates", line_no)
        rules.append(Rule(predicates=predicates, choice=choice, alternative=alt, line=line_no))
    if not saw_default:
        raise RuleParseError(
            "rule table must end with a `DEFAULT THEN <choice>` rule",
            len(rule_source.splitlines()) or 1,
        )
    return RuleTable(rules=tuple(rules))
