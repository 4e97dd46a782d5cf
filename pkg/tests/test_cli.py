import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from sasim.cli import main


@pytest.fixture
def runner():
    return CliRunner()


class TestRun:
    def test_missing_scenario_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["run", "--scenario", str(tmp_path / "nope.yaml")])
        assert result.exit_code == 2
        assert "error" in result.output or "error" in (result.stderr or "")

    def test_vlm_without_endpoint_exits_2(self, runner, tmp_path, monkeypatch):
        monkeypatch.delenv("SASIM_VLM_API_KEY", raising=False)
        result = runner.invoke(
            main,
            ["run", "--scenario", "blocked_lane", "--arbiter", "vlm", "--out", str(tmp_path)],
        )
        assert result.exit_code == 2

    def test_headless_run_writes_log_and_summary(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["run", "--scenario", "blocked_lane", "--mode", "supervisory",
             "--arbiter", "stub-vlm", "--seed", "7", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        summary = json.loads(result.output)
        assert summary["collided"] is False
        assert summary["route_completion"] == 1.0
        log = Path(summary["event_log"])
        assert log.exists()
        header = json.loads(log.read_text().splitlines()[0])
        assert header["type"] == "header"
        assert header["seed"] == 7

    def test_repeat_runs_byte_identical(self, runner, tmp_path):
        blobs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            result = runner.invoke(
                main,
                ["run", "--scenario", "scatter_straight", "--mode", "supervisory",
                 "--arbiter", "stub-vlm", "--seed", "3", "--out", str(out)],
            )
            assert result.exit_code == 0, result.output
            summary = json.loads(result.output)
            blobs.append(Path(summary["event_log"]).read_bytes())
        assert blobs[0] == blobs[1]


class TestBench:
    def test_zero_trials_usage_error(self, runner):
        result = runner.invoke(main, ["bench", "--trials", "0"])
        assert result.exit_code == 2

    def test_unknown_arbiter_usage_error(self, runner):
        result = runner.invoke(main, ["bench", "--arbiter", "psychic"])
        assert result.exit_code == 2

    def test_naive_check_passes(self, runner):
        result = runner.invoke(
            main,
            ["bench", "--reliability", "0.75,0.5,0.25", "--trials", "40",
             "--arbiter", "naive", "--check"],
        )
        assert result.exit_code == 0, result.output
        assert "check passed" in result.output

    def test_oracle_all_hundred(self, runner):
        result = runner.invoke(
            main,
            ["bench", "--reliability", "0.5", "--trials", "28", "--arbiter", "oracle",
             "--format", "json"],
        )
        assert result.exit_code == 0, result.output
        table = json.loads(result.output)
        row = table["50%"]
        for metric in ("accuracy", "precision", "recall", "f1"):
            assert row[f"{metric} (oracle)"] == 100.0

    def test_trial_log_written(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["bench", "--reliability", "0.5", "--trials", "14", "--arbiter", "naive",
             "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "mock_human_trials.jsonl").read_text().splitlines()
        assert len(lines) == 14
        record = json.loads(lines[0])
        for key in ("trial_index", "scenario", "human_plan", "human_correct", "choice"):
            assert key in record


class TestBenchScenarios:
    def test_two_rows_and_direction(self, runner):
        result = runner.invoke(
            main,
            ["bench-scenarios", "--arbiter", "stub-vlm", "--seeds", "0",
             "--subset", "injected", "--format", "json"],
        )
        assert result.exit_code == 0, result.output
        table = json.loads(result.output)
        assert set(table) == {"pure autonomy", "shared autonomy"}
        assert table["shared autonomy"]["collision_rate"] < table["pure autonomy"]["collision_rate"]


class TestValidateAndReplay:
    def test_validate_corpus_clean(self, runner):
        result = runner.invoke(main, ["validate-corpus"])
        assert result.exit_code == 0, result.output
        assert "validated clean" in result.output

    def test_replay_verify(self, runner, tmp_path):
        run = runner.invoke(
            main,
            ["run", "--scenario", "empty_short", "--mode", "proactive",
             "--arbiter", "naive", "--seed", "2", "--out", str(tmp_path)],
        )
        assert run.exit_code == 0, run.output
        log = json.loads(run.output)["event_log"]
        replay = runner.invoke(main, ["replay", log, "--verify"])
        assert replay.exit_code == 0, replay.output
        assert "byte-identical" in replay.output
