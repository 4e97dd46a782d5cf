"""Benchmark protocols.

Two benches mirror the evaluation setup: a mock-human classification bench
(arbiters against a reliability-parameterized synthetic driver, reported as
accuracy/precision/recall/F1) and a scenario driving bench (pure autonomy vs
shared autonomy with a perfect mock human, reported as collision rate, route
completion, and composite score).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .abstraction import Attention
from .arbitration import (
    Arbiter,
    Choice,
    DecisionTreeArbiter,
    NaiveArbiter,
    OracleArbiter,
    TeamingMode,
    VlmArbiter,
    arbitrate,
)
from .config import GlobalConfig
from .episode import (
    EpisodeResult,
    HumanProposal,
    RequestContext,
    request_template,
    run_episode,
)
from .errors import ConfigError
from .metrics import ClassificationMetrics, ConfusionCounts, classification_metrics
from .mock_human import MockHumanConfig, propose, propose_labeled
from .rules import RuleTable, generate_decision_tree
from .scenario import Scenario
from .vlm import AuditLog, DeterministicStubBackend, HttpBackend

ARBITER_KINDS = ("naive", "decision-tree", "stub-vlm", "vlm", "oracle")


def default_rule_table() -> RuleTable:
    text = (resources.files("sasim.data") / "rules" / "default_rules.txt").read_text()
    return generate_decision_tree(text)


def build_arbiter(
    kind: str,
    scenario: Scenario | None = None,
    cfg: GlobalConfig | None = None,
    audit: AuditLog | None = None,
) -> Arbiter:
    cfg = cfg or GlobalConfig()
    if kind == "naive":
        return NaiveArbiter()
    if kind == "decision-tree":
        return DecisionTreeArbiter(default_rule_table())
    if kind == "stub-vlm":
        return VlmArbiter(DeterministicStubBackend().complete, name="stub-vlm", audit=audit)
    if kind == "vlm":
        return VlmArbiter(HttpBackend(cfg.vlm).complete, name="vlm", audit=audit)
    if kind == "oracle":
        if scenario is None:
            raise ConfigError("oracle arbiter needs a scenario for its annotations")
        return OracleArbiter(lambda req: scenario.annotation_of(req.human_plan))
    raise ConfigError(f"unknown arbiter kind {kind!r}; choose from {ARBITER_KINDS}")


class MockHumanSource:
    """Episode human source backed by the seeded mock human."""

    def __init__(self, reliability: float, seed: int = 0):
        self.cfg = MockHumanConfig(reliability=reliability, seed=seed)
        self._trial = 0

    def _proposal(self, scenario: Scenario) -> HumanProposal:
        plan, control, _ = propose(scenario, self.cfg, self._trial)
        self._trial += 1
        return HumanProposal(
            plan=plan, control=control, attention=control.human_attention or Attention.ATTENTIVE
        )

    def at_tick(self, scenario: Scenario, tick: int, ego_speed: float) -> HumanProposal | None:
        if tick == max(scenario.arbitration_tick, 1):
            return self._proposal(scenario)
        return None

    def for_trigger(self, scenario: Scenario, tick: int, ego_speed: float) -> HumanProposal | None:
        return self._proposal(scenario)


# ---------------------------------------------------------------------------
# Mock-human classification bench (Table-I protocol)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    scenario: str
    reliability: float
    arbiter: str
    human_plan: str
    human_correct: bool
    choice: str


@dataclass
class MockHumanBenchResult:
    # reliability -> arbiter kind -> metrics
    metrics: dict[float, dict[str, ClassificationMetrics]]
    confusions: dict[tuple[float, str], ConfusionCounts]
    trials: list[TrialRecord]


def _trial_correctness(
    reliability: float, trials: int, seed: int, exact_count: bool, scenarios: list[Scenario]
) -> list[bool]:
    if exact_count:
        correct_n = int(np.ceil(reliability * trials))
        labels = np.array([True] * correct_n + [False] * (trials - correct_n))
        rng = np.random.default_rng([abs(seed), round(reliability * 1000)])
        rng.shuffle(labels)
        return [bool(v) for v in labels]
    cfg = MockHumanConfig(reliability=reliability, seed=seed)
    out = []
    for i in range(trials):
        _, _, correct = propose(scenarios[i % len(scenarios)], cfg, i)
        out.append(correct)
    return out


def run_mock_human_bench(
    scenarios: list[Scenario],
    reliabilities: list[float],
    trials: int,
    arbiter_kinds: list[str],
    seed: int = 0,
    exact_count: bool = True,
    cfg: GlobalConfig | None = None,
) -> MockHumanBenchResult:
    """Seeded trials over the corpus for each (reliability, arbiter) cell.

    Each trial reuses a per-scenario request context captured once at that
    scenario's arbitration tick; only the human fields vary per trial.
    """
    cfg = cfg or GlobalConfig()
    contexts: dict[str, RequestContext] = {}
    for sc in scenarios:
        sc.require_annotations()
        _, contexts[sc.name] = request_template(sc, cfg)

    result = MockHumanBenchResult(metrics={}, confusions={}, trials=[])
    for reliability in reliabilities:
        correctness = _trial_correctness(reliability, trials, seed, exact_count, scenarios)
        human_cfg = MockHumanConfig(reliability=reliability, seed=seed)
        result.metrics[reliability] = {}
        for kind in arbiter_kinds:
            counts = ConfusionCounts()
            for i in range(trials):
                scenario = scenarios[i % len(scenarios)]
                correct = correctness[i]
                plan, control = propose_labeled(scenario, correct, human_cfg, i)
                proposal = HumanProposal(
                    plan=plan,
                    control=control,
                    attention=control.human_attention or Attention.ATTENTIVE,
                )
                request = contexts[scenario.name].with_human(proposal)
                arbiter = build_arbiter(kind, scenario=scenario, cfg=cfg)
                decision = arbitrate(request, arbiter)
                counts.add(correct, decision.choice is Choice.HUMAN)
                result.trials.append(
                    TrialRecord(
                        trial_index=i,
                        scenario=scenario.name,
                        reliability=reliability,
                        arbiter=kind,
                        human_plan=plan.slug,
                        human_correct=correct,
                        choice=decision.choice.value,
                    )
                )
            result.metrics[reliability][kind] = classification_metrics(counts)
            result.confusions[(reliability, kind)] = counts
    return result


def naive_closed_forms(reliability: float, trials: int) -> dict:
    """Exact Table-I values for the always-accept baseline under exact counts."""
    correct_n = int(np.ceil(reliability * trials))
    p = correct_n / trials
    return {
        "accuracy": round(p * 100.0, 2),
        "precision": round(p * 100.0, 2),
        "recall": 100.0,
        "f1": round(2 * p / (1 + p) * 100.0, 2),
    }


def mock_human_table(result: MockHumanBenchResult) -> dict:
    """Table-I-shaped dict: row per reliability, column per metric x arbiter."""
    table: dict[str, dict[str, float | None]] = {}
    for reliability, per_arbiter in sorted(result.metrics.items(), reverse=True):
        row: dict[str, float | None] = {}
        for kind, metrics in per_arbiter.items():
            rounded = metrics.rounded()
            for metric_name in ("accuracy", "precision", "recall", "f1"):
                row[f"{metric_name} ({kind})"] = rounded[metric_name]
        table[f"{round(reliability * 100)}%"] = row
    return table


# ---------------------------------------------------------------------------
# Scenario driving bench (pure vs shared autonomy)
# ---------------------------------------------------------------------------


@dataclass
class ScenarioBenchResult:
    pure: list[EpisodeResult]
    shared: list[EpisodeResult]


def run_scenario_bench(
    scenarios: list[Scenario],
    arbiter_kind: str,
    seeds: list[int],
    cfg: GlobalConfig | None = None,
    reliability: float = 1.0,
    mode: TeamingMode = TeamingMode.SUPERVISORY_PROMPTED,
) -> ScenarioBenchResult:
    """Every scenario under pure autonomy and under shared autonomy."""
    cfg = cfg or GlobalConfig()
    pure: list[EpisodeResult] = []
    shared: list[EpisodeResult] = []
    for sc in scenarios:
        for seed in seeds:
            pure.append(run_episode(sc, mode, None, cfg, seed=seed))
            arbiter = build_arbiter(arbiter_kind, scenario=sc, cfg=cfg)
            source = MockHumanSource(reliability=reliability, seed=seed)
            shared.append(
                run_episode(sc, mode, arbiter, cfg, seed=seed, human_source=source)
            )
    return ScenarioBenchResult(pure=pure, shared=shared)
