import math

import pytest

from sasim.abstraction import PlanLabel
from sasim.arbitration import (
    Choice,
    DecisionTreeArbiter,
    LaneMarking,
    LaneMarkings,
    ObjectKind,
    SceneObject,
    arbitrate,
)
from sasim.errors import RuleParseError
from sasim.rules import RuleFacts, generate_decision_tree

from conftest import make_request


def load_default_table():
    from importlib import resources

    text = (resources.files("sasim.data") / "rules" / "default_rules.txt").read_text()
    return generate_decision_tree(text), text


class TestGrammar:
    def test_default_table_parses(self):
        table, _ = load_default_table()
        assert len(table.rules) >= 6
        last = table.rules[-1]
        assert last.predicates == ()
        assert last.choice == "autonomy"

    def test_missing_default_rejected(self):
        with pytest.raises(RuleParseError):
            generate_decision_tree("IF category=stop THEN HUMAN\n")

    def test_rules_after_default_rejected(self):
        src = "DEFAULT THEN AUTONOMY\nIF category=stop THEN HUMAN\n"
        with pytest.raises(RuleParseError) as err:
            generate_decision_tree(src)
        assert err.value.line == 2

    def test_bad_predicate_reports_line(self):
        src = "IF category=stop THEN HUMAN\nIF wibble=3 THEN HUMAN\nDEFAULT THEN AUTONOMY\n"
        with pytest.raises(RuleParseError) as err:
            generate_decision_tree(src)
        assert err.value.line == 2

    def test_alternative_choice_parses(self):
        src = "IF category=forward THEN ALTERNATIVE=change lane to the left\nDEFAULT THEN AUTONOMY\n"
        table = generate_decision_tree(src)
        assert table.rules[0].alternative is PlanLabel.LANE_CHANGE_LEFT

    def test_comments_and_blanks_ignored(self):
        src = "# comment\n\nIF category=stop THEN HUMAN\nDEFAULT THEN AUTONOMY\n"
        assert len(generate_decision_tree(src).rules) == 2


class TestPredicates:
    def facts(self, **kw):
        base = dict(
            marking_crossed="none",
            oncoming_distance=math.inf,
            attention="attentive",
            uncertainty_triggered=False,
            plan_category="forward",
        )
        base.update(kw)
        return RuleFacts(**base)

    def test_oncoming_bound_matches(self):
        table = generate_decision_tree("IF oncoming<30 THEN AUTONOMY\nDEFAULT THEN HUMAN\n")
        assert table.evaluate(self.facts(oncoming_distance=25.0)).choice == "autonomy"
        assert table.evaluate(self.facts(oncoming_distance=31.0)).choice == "human"
        # no oncoming vehicle means infinite distance
        assert table.evaluate(self.facts()).choice == "human"

    def test_first_match_wins(self):
        src = "IF category=stop THEN HUMAN\nIF uncertainty=triggered THEN AUTONOMY\nDEFAULT THEN AUTONOMY\n"
        table = generate_decision_tree(src)
        facts = self.facts(plan_category="stop", uncertainty_triggered=True)
        assert table.evaluate(facts).choice == "human"

    def test_conjunction(self):
        src = "IF marking=double_yellow AND oncoming<30 THEN AUTONOMY\nDEFAULT THEN HUMAN\n"
        table = generate_decision_tree(src)
        assert (
            table.evaluate(
                self.facts(marking_crossed="double_yellow", oncoming_distance=20.0)
            ).choice
            == "autonomy"
        )
        assert table.evaluate(self.facts(marking_crossed="double_yellow")).choice == "human"


class TestDecisionTreeArbiter:
    def test_turn_left_across_double_yellow_with_oncoming(self):
        table, _ = load_default_table()
        arbiter = DecisionTreeArbiter(table)
        req = make_request(
            human_plan=PlanLabel.TURN_LEFT,
            autonomy_plan=PlanLabel.DRIVE_FORWARD,
            markings=LaneMarkings(left=LaneMarking.DOUBLE_YELLOW, right=LaneMarking.SOLID_WHITE),
            objects=(
                SceneObject(kind=ObjectKind.VEHICLE, x=-3.5, y=25.0, vx=0.0, vy=-8.0, lane_offset=-1),
            ),
        )
        d = arbitrate(req, arbiter)
        assert d.choice is Choice.AUTONOMY

    def test_deterministic(self):
        table, _ = load_default_table()
        arbiter = DecisionTreeArbiter(table)
        req = make_request(human_plan=PlanLabel.LANE_CHANGE_LEFT)
        assert arbiter.decide(req) == arbiter.decide(req)
