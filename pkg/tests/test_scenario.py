import pytest
import yaml

from sasim.abstraction import PlanLabel
from sasim.errors import MissingAnnotations, ScenarioLoadError
from sasim.scenario import (
    InjectionKind,
    load_corpus,
    load_scenario,
    resolve_scenario,
    scenario_from_dict,
    shipped_scenario_names,
)


def minimal_doc(**over):
    doc = {
        "schema_version": 1,
        "name": "mini",
        "road": {
            "lanes": [
                {"id": 0, "center": [[0, 0], [200, 0]], "width": 3.5,
                 "markings": {"left": "dashed_white", "right": "solid_white"}}
            ]
        },
        "route": {"path": [[0, 0], [200, 0]], "gates": [{"x": 50, "y": 0, "radius": 4.0}]},
        "ego_start": {"x": 0, "y": 0, "heading": 0.0, "speed": 8.0},
    }
    doc.update(over)
    return doc


class TestParsing:
    def test_minimal_scenario_loads(self):
        sc = scenario_from_dict(minimal_doc())
        assert sc.name == "mini"
        assert len(sc.gates) == 1

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioLoadError, match="unknown keys"):
            scenario_from_dict(minimal_doc(wibble=1))

    def test_wrong_schema_version_rejected(self):
        with pytest.raises(ScenarioLoadError, match="schema_version"):
            scenario_from_dict(minimal_doc(schema_version=99))

    def test_unordered_gates_rejected(self):
        doc = minimal_doc()
        doc["route"]["gates"] = [{"x": 80, "y": 0}, {"x": 40, "y": 0}]
        with pytest.raises(ScenarioLoadError, match="out of order"):
            scenario_from_dict(doc)

    def test_offroad_gate_rejected(self):
        doc = minimal_doc()
        doc["route"]["gates"] = [{"x": 50, "y": 30}]
        with pytest.raises(ScenarioLoadError, match="not on any lane"):
            scenario_from_dict(doc)

    def test_unannotated_script_plan_rejected(self):
        doc = minimal_doc(
            human_script=[{"tick": 50, "plan": "stop"}],
            annotations={"correct": ["drive_forward"], "incorrect": []},
        )
        with pytest.raises(ScenarioLoadError, match="not annotated"):
            scenario_from_dict(doc)

    def test_contradictory_annotations_rejected(self):
        doc = minimal_doc(annotations={"correct": ["stop"], "incorrect": ["stop"]})
        with pytest.raises(ScenarioLoadError, match="both correct and incorrect"):
            scenario_from_dict(doc)

    def test_actor_needs_static_or_keyframes(self):
        doc = minimal_doc(actors=[{"id": "a", "kind": "vehicle"}])
        with pytest.raises(ScenarioLoadError, match="static.*keyframes|keyframes"):
            scenario_from_dict(doc)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(ScenarioLoadError, match="not found"):
            load_scenario(tmp_path / "nope.yaml")

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text(yaml.safe_dump(minimal_doc()))
        sc = load_scenario(path)
        assert sc.name == "mini"
        assert resolve_scenario(str(path)).name == "mini"


class TestActorSpec:
    def test_keyframe_interpolation(self):
        doc = minimal_doc(
            actors=[{"id": "m", "kind": "vehicle", "keyframes": [[0, 0, 0], [10, 100, 0]]}],
            annotations={"correct": ["drive_forward"], "incorrect": ["stop"]},
        )
        actor = scenario_from_dict(doc).actors[0]
        x, y, heading = actor.pose_at(5.0)
        assert x == pytest.approx(50.0)
        assert heading == pytest.approx(0.0)
        vx, vy = actor.velocity_at(5.0)
        assert vx == pytest.approx(10.0)

    def test_keyframes_clamp_at_ends(self):
        doc = minimal_doc(
            actors=[{"id": "m", "kind": "vehicle", "keyframes": [[2, 10, 0], [4, 30, 0]]}]
        )
        actor = scenario_from_dict(doc).actors[0]
        assert actor.pose_at(0.0)[0] == 10.0
        assert actor.pose_at(9.0)[0] == 30.0
        assert actor.velocity_at(9.0) == (0.0, 0.0)

    def test_active_window(self):
        doc = minimal_doc(
            actors=[{"id": "m", "kind": "vehicle", "static": {"x": 5, "y": 0}, "active": [2.0, 4.0]}]
        )
        actor = scenario_from_dict(doc).actors[0]
        assert not actor.present(1.0)
        assert actor.present(3.0)
        assert not actor.present(5.0)


class TestAnnotations:
    def test_annotation_lookup(self):
        doc = minimal_doc(annotations={"correct": ["drive_forward"], "incorrect": ["stop"]})
        sc = scenario_from_dict(doc)
        assert sc.annotation_of(PlanLabel.DRIVE_FORWARD) is True
        assert sc.annotation_of(PlanLabel.STOP) is False
        with pytest.raises(MissingAnnotations):
            sc.annotation_of(PlanLabel.TURN_LEFT)

    def test_require_annotations(self):
        sc = scenario_from_dict(minimal_doc())
        with pytest.raises(MissingAnnotations):
            sc.require_annotations()


class TestShippedCorpus:
    def test_at_least_twelve_scenarios(self):
        assert len(shipped_scenario_names()) >= 12

    def test_all_load_and_annotate(self):
        for sc in load_corpus():
            sc.require_annotations()
            assert sc.tick_budget > 0

    def test_covers_named_classes(self):
        names = set(shipped_scenario_names())
        for expected in (
            "open_door",
            "emergency_vehicle",
            "highway_closure",
            "distracted_drift",
            "glare_blackout",
        ):
            assert expected in names

    def test_failure_injection_subset_is_large_enough(self):
        subset = [sc for sc in load_corpus() if sc.failure_injections]
        assert len(subset) >= 8

    def test_injection_windows_inside_budget(self):
        for sc in load_corpus():
            for inj in sc.failure_injections:
                assert 0 <= inj.from_tick < inj.to_tick <= sc.tick_budget

    def test_resolve_by_name(self):
        sc = resolve_scenario("blocked_lane")
        assert sc.name == "blocked_lane"
        assert sc.injections_at(150, InjectionKind.CANDIDATE_SCATTER)
