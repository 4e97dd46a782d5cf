import random

import pytest

from sasim.abstraction import ControlState, PlanLabel, describe
from sasim.arbitration import (
    ArbitrationDecision,
    Choice,
    LaneMarking,
    LaneMarkings,
    NaiveArbiter,
    OracleArbiter,
    SceneContext,
    TeamingMode,
    VlmArbiter,
    arbitrate,
    build_prompt,
    parse_response,
    render_decision,
    rule_facts,
    validate_decision,
)
from sasim.errors import MalformedResponse

from conftest import make_request, make_snapshot


class TestTypes:
    def test_context_requires_half_second_spacing(self):
        snaps = tuple(make_snapshot(timestamp=1.0 + 0.3 * i) for i in range(3))
        with pytest.raises(ValueError):
            SceneContext(snapshots=snaps)

    def test_supervisory_requires_trigger(self):
        with pytest.raises(ValueError):
            make_request(mode=TeamingMode.SUPERVISORY_PROMPTED, triggered=False)
        make_request(mode=TeamingMode.SUPERVISORY_PROMPTED, triggered=True, u=0.8)

    def test_decision_grounding_invariants(self):
        req = make_request(human_plan=PlanLabel.STOP, autonomy_plan=PlanLabel.DRIVE_FORWARD)
        with pytest.raises(ValueError):
            validate_decision(
                req,
                ArbitrationDecision(
                    choice=Choice.HUMAN, grounded_plan=PlanLabel.DRIVE_FORWARD, rationale=""
                ),
            )
        with pytest.raises(ValueError):
            validate_decision(
                req,
                ArbitrationDecision(
                    choice=Choice.ALTERNATIVE, grounded_plan=PlanLabel.STOP, rationale=""
                ),
            )
        # lane-change alternatives are always admissible
        validate_decision(
            req,
            ArbitrationDecision(
                choice=Choice.ALTERNATIVE, grounded_plan=PlanLabel.LANE_CHANGE_LEFT, rationale=""
            ),
        )


class TestPrompt:
    def test_contains_autonomy_plan_phrase(self):
        req = make_request(autonomy_plan=PlanLabel.DRIVE_FORWARD)
        assert "Autonomous stack plan: drive forward." in build_prompt(req)

    def test_throttle_label_verbatim(self):
        req = make_request(ego_control=ControlState(throttle=1.0, speed_mps=8.0))
        assert "maximum" in build_prompt(req)

    def test_snapshots_oldest_first_with_relative_stamps(self):
        prompt = build_prompt(make_request())
        i1 = prompt.index("[-1.0 s]")
        i2 = prompt.index("[-0.5 s]")
        i3 = prompt.index("[+0.0 s]")
        assert i1 < i2 < i3

    def test_every_request_field_appears(self, blocked_lane_objects):
        human_control = ControlState(
            throttle=0.0, brake=0.9, steering=0.0, speed_mps=8.0
        )
        req = make_request(
            human_plan=PlanLabel.LANE_CHANGE_LEFT,
            autonomy_plan=PlanLabel.DRIVE_FORWARD,
            objects=blocked_lane_objects,
            markings=LaneMarkings(left=LaneMarking.DOUBLE_YELLOW, right=LaneMarking.SOLID_WHITE),
            visibility=0.8,
            human_control=human_control,
            u=0.42,
            triggered=False,
        )
        prompt = build_prompt(req)
        # context: timestamps, objects, markings, visibility, ego lane
        for snap in req.context.snapshots:
            assert f"(t={snap.timestamp:.2f} s)" in prompt
        assert "a vehicle 24.0 m ahead, 0.2 m right, in your lane, stationary" in prompt
        assert "left double_yellow" in prompt and "right solid_white" in prompt
        assert "visibility 0.80" in prompt
        assert "in lane 0" in prompt
        # ego descriptor fields
        d = req.ego_descriptor
        for label in (d.throttle_label, d.brake_label, d.steering_label):
            assert label in prompt
        assert f"{d.speed_mph:.1f} mph" in prompt
        # human descriptor + attention
        h = req.human_descriptor
        assert h.attention_text in prompt
        assert h.brake_label in prompt
        # plans, uncertainty, mode
        assert describe(req.human_plan) in prompt
        assert describe(req.autonomy_plan) in prompt
        assert "u_t=0.42" in prompt
        assert req.mode.phrase in prompt


class TestParse:
    def test_human_decision_with_intent(self):
        req = make_request(human_plan=PlanLabel.STOP)
        raw = "The fire truck is close.\nDECISION: HUMAN\nINTENT: yield to the fire truck"
        d = parse_response(raw, req)
        assert d.choice is Choice.HUMAN
        assert d.grounded_plan is PlanLabel.STOP
        assert "fire truck" in d.rationale
        assert d.intent == "yield to the fire truck"

    def test_alternative_lane_change(self):
        req = make_request(human_plan=PlanLabel.STOP, autonomy_plan=PlanLabel.DRIVE_FORWARD)
        d = parse_response("DECISION: ALTERNATIVE=change lane to the left\nINTENT: x", req)
        assert d.choice is Choice.ALTERNATIVE
        assert d.grounded_plan is PlanLabel.LANE_CHANGE_LEFT

    def test_missing_marker_is_malformed(self):
        with pytest.raises(MalformedResponse):
            parse_response("no decision here", make_request())

    def test_unknown_primitive_is_malformed(self):
        with pytest.raises(MalformedResponse):
            parse_response("DECISION: ALTERNATIVE=barrel roll\nINTENT: x", make_request())

    def test_alternative_equal_to_human_plan_coerced(self):
        req = make_request(human_plan=PlanLabel.SLOW_DOWN)
        d = parse_response("DECISION: ALTERNATIVE=slow down\nINTENT: x", req)
        assert d.choice is Choice.HUMAN

    def test_last_decision_line_wins(self):
        req = make_request()
        raw = "DECISION: AUTONOMY\nreconsidering...\nDECISION: HUMAN\nINTENT: final"
        assert parse_response(raw, req).choice is Choice.HUMAN

    def test_parser_inverse_property(self):
        rng = random.Random(0)
        plans = list(PlanLabel)
        for _ in range(300):
            human = rng.choice(plans)
            autonomy = rng.choice(plans)
            req = make_request(human_plan=human, autonomy_plan=autonomy)
            choice = rng.choice(list(Choice))
            if choice is Choice.HUMAN:
                plan = human
            elif choice is Choice.AUTONOMY:
                plan = autonomy
            else:
                candidates = [
                    p
                    for p in plans
                    if p not in (human, autonomy)
                    or p in (PlanLabel.LANE_CHANGE_LEFT, PlanLabel.LANE_CHANGE_RIGHT)
                ]
                if not candidates:
                    continue
                plan = rng.choice(candidates)
            decision = ArbitrationDecision(
                choice=choice, grounded_plan=plan, rationale="because", intent="do it"
            )
            validate_decision(req, decision)
            reparsed = parse_response(render_decision(decision, req), req)
            # alternatives naming an offered plan legitimately coerce
            assert reparsed.grounded_plan is decision.grounded_plan
            if choice is not Choice.ALTERNATIVE:
                assert reparsed.choice is choice


class TestArbiters:
    def test_naive_always_selects_human(self):
        arbiter = NaiveArbiter()
        for human in PlanLabel:
            req = make_request(human_plan=human)
            d = arbitrate(req, arbiter)
            assert d.choice is Choice.HUMAN
            assert d.grounded_plan is human

    def test_oracle_follows_truth(self):
        req = make_request(human_plan=PlanLabel.STOP, autonomy_plan=PlanLabel.DRIVE_FORWARD)
        yes = OracleArbiter(lambda r: True)
        no = OracleArbiter(lambda r: False)
        assert arbitrate(req, yes).choice is Choice.HUMAN
        assert arbitrate(req, no).choice is Choice.AUTONOMY

    def test_choice_grounding_fuzz(self):
        # every arbiter keeps the choice/grounded-plan contract over 1e4 requests
        from sasim.bench import default_rule_table
        from sasim.arbitration import DecisionTreeArbiter
        from sasim.vlm import DeterministicStubBackend

        rng = random.Random(42)
        arbiters = [
            NaiveArbiter(),
            OracleArbiter(lambda r: rng.random() < 0.5),
            DecisionTreeArbiter(default_rule_table()),
            VlmArbiter(DeterministicStubBackend().complete, name="stub-vlm"),
        ]
        plans = list(PlanLabel)
        markings_pool = [
            LaneMarkings(),
            LaneMarkings(left=LaneMarking.DOUBLE_YELLOW, right=LaneMarking.SOLID_WHITE),
            LaneMarkings(left=LaneMarking.SOLID_YELLOW, right=LaneMarking.DASHED_WHITE),
        ]
        for _ in range(10_000):
            req = make_request(
                human_plan=rng.choice(plans),
                autonomy_plan=rng.choice(plans),
                markings=rng.choice(markings_pool),
                u=rng.random() * 0.4,
            )
            for arbiter in arbiters:
                d = arbitrate(req, arbiter)
                validate_decision(req, d)

    def test_vlm_arbiter_records_latency(self):
        arbiter = VlmArbiter(lambda prompt: "DECISION: HUMAN\nINTENT: trust", name="fake")
        d = arbiter.decide(make_request())
        assert d.latency_ms >= 0.0
        assert d.choice is Choice.HUMAN


class TestRuleFacts:
    def test_marking_side_follows_plan(self):
        markings = LaneMarkings(left=LaneMarking.DOUBLE_YELLOW, right=LaneMarking.DASHED_WHITE)
        left = rule_facts(make_request(human_plan=PlanLabel.TURN_LEFT, markings=markings))
        right = rule_facts(make_request(human_plan=PlanLabel.LANE_CHANGE_RIGHT, markings=markings))
        fwd = rule_facts(make_request(human_plan=PlanLabel.DRIVE_FORWARD, markings=markings))
        assert left.marking_crossed == "double_yellow"
        assert right.marking_crossed == "dashed_white"
        assert fwd.marking_crossed == "none"

    def test_oncoming_distance(self, oncoming_objects):
        facts = rule_facts(make_request(objects=oncoming_objects))
        assert facts.oncoming_distance == pytest.approx(25.0)
        clear = rule_facts(make_request(objects=()))
        assert clear.oncoming_distance == float("inf")

    def test_category_and_trigger(self):
        facts = rule_facts(
            make_request(human_plan=PlanLabel.LANE_CHANGE_LEFT, triggered=True, u=0.9)
        )
        assert facts.plan_category == "lane_change"
        assert facts.uncertainty_triggered
