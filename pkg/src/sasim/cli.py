"""Command-line entry points.

    sasim run --scenario blocked_lane --mode supervisory --arbiter stub-vlm
    sasim bench --reliability 0.75,0.5,0.25 --trials 400 --arbiter naive --check
    sasim bench-scenarios --arbiter stub-vlm --seeds 0,1,2,3,4
    sasim validate-corpus
    sasim replay out/blocked_lane_supervisory_stub-vlm_seed7.jsonl --verify
    sasim serve --scenario blocked_lane --port 8700

Load and configuration problems exit with status 2; failed checks with 1.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .arbitration import TeamingMode
from .bench import (
    ARBITER_KINDS,
    build_arbiter,
    mock_human_table,
    naive_closed_forms,
    run_mock_human_bench,
    run_scenario_bench,
)
from .config import GlobalConfig, load_config
from .episode import run_episode
from .errors import ConfigError, ScenarioLoadError
from .metrics import driving_metrics, emit_report
from .mock_human import validate_annotations
from .scenario import load_corpus, resolve_scenario
from .vlm import AuditLog

MODES = {"proactive": TeamingMode.PROACTIVE_TEAMING, "supervisory": TeamingMode.SUPERVISORY_PROMPTED}


def _load_cfg(config_path: str | None) -> GlobalConfig:
    return load_config(config_path) if config_path else GlobalConfig()


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Deterministic shared-autonomy driving simulator."""


@main.command("run")
@click.option("--scenario", "scenario_ref", required=True, help="Shipped name or YAML path.")
@click.option("--mode", type=click.Choice(sorted(MODES)), default="supervisory", show_default=True)
@click.option("--arbiter", type=click.Choice(ARBITER_KINDS), default="stub-vlm", show_default=True)
@click.option("--seed", type=int, default=None, help="Episode seed (default: scenario seed).")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory.")
def cmd_run(scenario_ref, mode, arbiter, seed, config_path, out_dir):
    """Run one scripted episode headlessly and write its event log."""
    try:
        cfg = _load_cfg(config_path)
        scenario = resolve_scenario(scenario_ref)
        out = Path(out_dir or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        seed_value = scenario.seed if seed is None else seed
        audit = AuditLog(out / f"{scenario.name}_audit.jsonl") if arbiter in ("vlm", "stub-vlm") else None
        arb = build_arbiter(arbiter, scenario=scenario, cfg=cfg, audit=audit)
        log_path = out / f"{scenario.name}_{mode}_{arbiter}_seed{seed_value}.jsonl"
        result = run_episode(scenario, MODES[mode], arb, cfg, seed=seed_value, log_path=log_path)
    except (ScenarioLoadError, ConfigError) as exc:
        _fail(str(exc))
    summary = {
        "scenario": result.scenario_name,
        "mode": result.mode,
        "arbiter": result.arbiter_name,
        "seed": result.seed,
        "collided": result.collided,
        "route_completion": round(result.route_completion, 4),
        "ticks": result.ticks,
        "interventions": result.interventions,
        "event_log": result.event_log_path,
    }
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.UsageError(f"cannot parse {what} list: {text!r}")


@main.command("bench")
@click.option("--reliability", default="0.75,0.5,0.25", show_default=True)
@click.option("--trials", type=int, default=400, show_default=True)
@click.option("--arbiter", "arbiters", default="naive", show_default=True,
              help="Comma-separated arbiter kinds.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--check", is_flag=True, help="Verify the naive column against closed forms.")
@click.option("--exact-count/--bernoulli", default=True, show_default=True,
              help="Exact-count trial generation vs per-trial sampling.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "markdown"]), default="markdown")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def cmd_bench(reliability, trials, arbiters, seed, check, exact_count, fmt, config_path, out_dir):
    """Mock-human arbitration bench over the shipped corpus."""
    if trials <= 0:
        raise click.UsageError("--trials must be positive")
    reliabilities = _parse_float_list(reliability, "reliability")
    if any(not (0.0 <= p <= 1.0) for p in reliabilities):
        raise click.UsageError("reliabilities must lie in [0, 1]")
    kinds = [k.strip() for k in arbiters.split(",") if k.strip()]
    for kind in kinds:
        if kind not in ARBITER_KINDS:
            raise click.UsageError(f"unknown arbiter {kind!r}")
    try:
        cfg = _load_cfg(config_path)
        corpus = load_corpus()
        result = run_mock_human_bench(
            corpus, reliabilities, trials, kinds, seed=seed, exact_count=exact_count, cfg=cfg
        )
    except (ScenarioLoadError, ConfigError) as exc:
        _fail(str(exc))
    click.echo(emit_report(mock_human_table(result), fmt))
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "mock_human_trials.jsonl").open("w", encoding="utf-8") as fh:
            for t in result.trials:
                fh.write(json.dumps(t.__dict__, sort_keys=True) + "\n")
        (out / "mock_human_table.json").write_text(emit_report(mock_human_table(result), "json"))
    if check:
        if not exact_count:
            raise click.UsageError("--check requires --exact-count trial generation")
        failures = []
        for p in reliabilities:
            if "naive" not in result.metrics[p]:
                failures.append(f"naive arbiter missing at reliability {p}")
                continue
            got = result.metrics[p]["naive"].rounded()
            expected = naive_closed_forms(p, trials)
            if got != expected:
                failures.append(f"p={p}: got {got}, expected {expected}")
        if failures:
            for f in failures:
                click.echo(f"CHECK FAIL {f}", err=True)
            sys.exit(1)
        click.echo("check passed: naive column matches closed forms")


@main.command("bench-scenarios")
@click.option("--arbiter", type=click.Choice(ARBITER_KINDS), default="stub-vlm", show_default=True)
@click.option("--seeds", default="0,1,2,3,4", show_default=True)
@click.option("--subset", type=click.Choice(["all", "injected"]), default="all", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "markdown"]), default="markdown")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_bench_scenarios(arbiter, seeds, subset, fmt, config_path):
    """Pure autonomy vs shared autonomy (perfect mock human) over the corpus."""
    try:
        cfg = _load_cfg(config_path)
        corpus = load_corpus()
    except (ScenarioLoadError, ConfigError) as exc:
        _fail(str(exc))
    if not corpus:
        _fail("no shipped scenarios found")
    if subset == "injected":
        corpus = [sc for sc in corpus if sc.failure_injections]
    seed_list = [int(v) for v in seeds.split(",") if v.strip()]
    result = run_scenario_bench(corpus, arbiter, seed_list, cfg=cfg)
    table = {
        "pure autonomy": driving_metrics(result.pure).rounded(),
        "shared autonomy": driving_metrics(result.shared).rounded(),
    }
    click.echo(emit_report(table, fmt))


@main.command("validate-corpus")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_validate_corpus(config_path):
    """Re-derive every shipped annotation with the correctness oracle."""
    try:
        cfg = _load_cfg(config_path)
        corpus = load_corpus()
    except (ScenarioLoadError, ConfigError) as exc:
        _fail(str(exc))
    total = 0
    for scenario in corpus:
        contradictions = validate_annotations(scenario, cfg)
        status = "ok" if not contradictions else "CONTRADICTION"
        click.echo(f"{scenario.name}: {status}")
        for c in contradictions:
            total += 1
            click.echo(
                f"  {c.plan.slug}: annotated correct={c.annotated_correct}, "
                f"oracle says {c.oracle_correct}"
            )
    if total:
        click.echo(f"{total} contradiction(s)", err=True)
        sys.exit(1)
    click.echo(f"{len(corpus)} scenarios validated clean")


@main.command("replay")
@click.argument("log_file", type=click.Path(exists=True))
@click.option("--verify", is_flag=True, help="Re-run the episode and compare logs byte-for-byte.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_replay(log_file, verify, config_path):
    """Summarize an event log; optionally verify it reproduces."""
    path = Path(log_file)
    records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    header = records[0]
    end = records[-1]
    if header.get("type") != "header" or end.get("type") != "end":
        _fail("log is missing header/end records")
    decisions = [r for r in records if r["type"] == "decision"]
    click.echo(
        f"scenario={header['scenario']} mode={header['mode']} arbiter={header['arbiter']} "
        f"seed={header['seed']} ticks={end['ticks']} collided={end['collided']} "
        f"route_completion={end['route_completion']:.2f} decisions={len(decisions)}"
    )
    for d in decisions:
        click.echo(f"  frame {d['frame']}: {d['choice']} -> {d['grounded_plan']} ({d['intent']})")
    if verify:
        import tempfile

        try:
            cfg = _load_cfg(config_path)
            scenario = resolve_scenario(header["scenario"])
            arb = (
                None
                if header["arbiter"] == "none"
                else build_arbiter(header["arbiter"], scenario=scenario, cfg=cfg)
            )
        except (ScenarioLoadError, ConfigError) as exc:
            _fail(str(exc))
        with tempfile.TemporaryDirectory() as td:
            fresh_path = Path(td) / "replay.jsonl"
            run_episode(
                scenario, MODES[header["mode"]], arb, cfg, seed=header["seed"], log_path=fresh_path
            )
            if fresh_path.read_bytes() != path.read_bytes():
                _fail("replay mismatch: log does not reproduce", code=1)
        click.echo("replay verified: byte-identical")


@main.command("serve")
@click.option("--scenario", "scenario_ref", required=True)
@click.option("--port", type=int, default=8700, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--mode", type=click.Choice(sorted(MODES)), default="proactive", show_default=True)
@click.option("--arbiter", type=click.Choice(ARBITER_KINDS), default="stub-vlm", show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_serve(scenario_ref, port, host, mode, arbiter, config_path):
    """Serve the live simulation over a websocket for the teleop client."""
    try:
        cfg = _load_cfg(config_path)
        scenario = resolve_scenario(scenario_ref)
        arb = build_arbiter(arbiter, scenario=scenario, cfg=cfg)
    except (ScenarioLoadError, ConfigError) as exc:
        _fail(str(exc))
    import uvicorn

    from .gateway import create_gateway_app

    app = create_gateway_app(scenario, MODES[mode], arb, cfg)
    click.echo(f"gateway on ws://{host}:{port}/ws ({scenario.name}, {mode}, {arbiter})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
