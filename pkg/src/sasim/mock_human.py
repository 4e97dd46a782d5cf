"""Reliability-parameterized synthetic driver and the plan-correctness oracle.

The mock human proposes an annotated-correct plan with probability p, using
counter-based randomness so trial i is reproducible in isolation (and trials
can run in parallel). Control signals consistent with each plan come from a
fixed synthesis table. The oracle declares a plan correct iff a forced rollout
of its primitive avoids collision and completes the route within the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abstraction import Attention, ControlState, PlanLabel
from .scenario import Scenario

ORACLE_HORIZON_S = 15.0
ORACLE_COMPLETION_BAR = 0.95


@dataclass(frozen=True)
class MockHumanConfig:
    reliability: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.reliability <= 1.0):
            raise ValueError("reliability must lie in [0, 1]")


# plan -> (throttle, brake, steering); attention is plan-appropriate
_PLAN_CONTROLS: dict[PlanLabel, tuple[float, float, float]] = {
    PlanLabel.STOP: (0.0, 0.9, 0.0),
    PlanLabel.SLOW_DOWN: (0.0, 0.4, 0.0),
    PlanLabel.DRIVE_FORWARD: (0.5, 0.0, 0.0),
    PlanLabel.TURN_LEFT: (0.2, 0.0, -0.4),
    PlanLabel.TURN_RIGHT: (0.2, 0.0, 0.4),
    PlanLabel.LANE_CHANGE_LEFT: (0.3, 0.0, -0.2),
    PlanLabel.LANE_CHANGE_RIGHT: (0.3, 0.0, 0.2),
}

_PLAN_ATTENTION: dict[PlanLabel, Attention] = {
    PlanLabel.TURN_LEFT: Attention.GAZE_LEFT,
    PlanLabel.LANE_CHANGE_LEFT: Attention.GAZE_LEFT,
    PlanLabel.TURN_RIGHT: Attention.GAZE_RIGHT,
    PlanLabel.LANE_CHANGE_RIGHT: Attention.GAZE_RIGHT,
}


def control_for_plan(
    plan: PlanLabel, speed_mps: float, attention: Attention | None = None
) -> ControlState:
    throttle, brake, steering = _PLAN_CONTROLS[plan]
    if attention is None:
        attention = _PLAN_ATTENTION.get(plan, Attention.ATTENTIVE)
    return ControlState(
        throttle=throttle,
        brake=brake,
        steering=steering,
        speed_mps=max(0.0, speed_mps),
        human_attention=attention,
    )


def _trial_rng(cfg: MockHumanConfig, trial_index: int) -> np.random.Generator:
    return np.random.default_rng([abs(cfg.seed), int(trial_index)])


def propose(
    scenario: Scenario, cfg: MockHumanConfig, trial_index: int
) -> tuple[PlanLabel, ControlState, bool]:
    """One seeded trial: (plan, synthesized controls, human_correct)."""
    scenario.require_annotations()
    rng = _trial_rng(cfg, trial_index)
    correct = bool(rng.random() < cfg.reliability)
    plan = _pick_plan(scenario, correct, rng)
    return plan, control_for_plan(plan, scenario.cruise_speed), correct


def propose_labeled(
    scenario: Scenario, correct: bool, cfg: MockHumanConfig, trial_index: int
) -> tuple[PlanLabel, ControlState]:
    """Proposal with forced correctness (exact-count trial generation)."""
    scenario.require_annotations()
    rng = _trial_rng(cfg, trial_index)
    rng.random()  # keep the plan draw aligned with propose()
    plan = _pick_plan(scenario, correct, rng)
    return plan, control_for_plan(plan, scenario.cruise_speed)


def _pick_plan(scenario: Scenario, correct: bool, rng: np.random.Generator) -> PlanLabel:
    pool = scenario.correct_plans if correct else scenario.incorrect_plans
    return pool[int(rng.integers(len(pool)))]


def correctness_oracle(scenario: Scenario, plan: PlanLabel, cfg=None) -> bool:
    """True iff the plan's forced rollout avoids collision and completes the route.

    Deterministic for a given (scenario, plan): the rollout is seeded by the
    scenario itself.
    """
    from .episode import rollout_with_plan  # local import: episode depends on this module

    collided, completion = rollout_with_plan(scenario, plan, cfg, horizon_s=ORACLE_HORIZON_S)
    return (not collided) and completion >= ORACLE_COMPLETION_BAR


@dataclass(frozen=True)
class AnnotationContradiction:
    scenario: str
    plan: PlanLabel
    annotated_correct: bool
    oracle_correct: bool


def validate_annotations(scenario: Scenario, cfg=None) -> list[AnnotationContradiction]:
    """Re-derive every annotation with the oracle; returns the disagreements."""
    scenario.require_annotations()
    contradictions = []
    for plan, annotated in [(p, True) for p in scenario.correct_plans] + [
        (p, False) for p in scenario.incorrect_plans
    ]:
        oracle = correctness_oracle(scenario, plan, cfg)
        if oracle != annotated:
            contradictions.append(
                AnnotationContradiction(
                    scenario=scenario.name,
                    plan=plan,
                    annotated_correct=annotated,
                    oracle_correct=oracle,
                )
            )
    return contradictions
