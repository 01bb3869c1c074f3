import json

import numpy as np
import pytest

from app.core.exceptions import (
    CandidateBoundsError,
    ScenarioFileNotFoundError,
    ScenarioSchemaError,
    ScenarioValidationError,
    TraceLengthError,
    UnknownVariableError,
)
from app.models.candidate import CandidateSolution, DecisionSpace
from app.services import scenario_service
from app.services.scenario_service import (
    dump_scenario,
    load_candidate,
    load_scenario,
    make_synthetic,
    scenario_hash,
    validate_scenario,
)


def _write_config(tmp_path, config: dict):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


@pytest.fixture
def golden_config(fixtures_dir) -> dict:
    return json.loads((fixtures_dir / "golden" / "config.json").read_text())


class TestLoad:
    def test_golden_units(self, golden_scenario):
        assert golden_scenario.nodes == ["N1"]
        assert golden_scenario.n_intervals == 48
        assert golden_scenario.n_years == 1
        np.testing.assert_allclose(golden_scenario.traces.demand, 1.0)  # 1000 MW
        assert golden_scenario.traces.availability_ids == ("pv",)

    def test_tutorial_shape(self, tutorial_scenario):
        assert tutorial_scenario.nodes == ["A", "B", "C"]
        assert len(tutorial_scenario.lines) == 3
        assert tutorial_scenario.n_intervals == 8760

    def test_tutorial_is_valid(self, tutorial_scenario):
        assert validate_scenario(tutorial_scenario) == []

    def test_missing_config(self, tmp_path):
        with pytest.raises(ScenarioFileNotFoundError):
            load_scenario(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{\"nodes\": [", encoding="utf-8")
        with pytest.raises(ScenarioSchemaError):
            load_scenario(path)

    def test_schema_violation_names_location(self, tmp_path, golden_config, fixtures_dir):
        golden_config["generators"][0]["kind"] = "fusion"
        with pytest.raises(ScenarioSchemaError) as info:
            load_scenario(_write_config(tmp_path, golden_config), fixtures_dir / "golden")
        assert info.value.location.startswith("generators.0")

    def test_unknown_node_is_reported(self, tmp_path, golden_config, fixtures_dir):
        golden_config["storages"][0]["node"] = "N9"
        with pytest.raises(ScenarioValidationError) as info:
            load_scenario(_write_config(tmp_path, golden_config), fixtures_dir / "golden")
        assert [v.rule for v in info.value.violations] == ["node_exists"]

    def test_bad_efficiency_is_reported(self, tmp_path, golden_config, fixtures_dir):
        golden_config["storages"][0]["charge_efficiency"] = 1.5
        with pytest.raises(ScenarioValidationError) as info:
            load_scenario(_write_config(tmp_path, golden_config), fixtures_dir / "golden")
        assert info.value.violations[0].rule == "efficiency_bounds"

    def test_years_must_divide_trace(self, tmp_path, golden_config, fixtures_dir):
        golden_config["horizon"]["years"] = 5
        with pytest.raises(TraceLengthError):
            load_scenario(_write_config(tmp_path, golden_config), fixtures_dir / "golden")

    def test_explicit_year_lengths(self, tmp_path, golden_config, fixtures_dir):
        golden_config["horizon"]["years"] = [24, 24]
        s = load_scenario(_write_config(tmp_path, golden_config), fixtures_dir / "golden")
        assert s.year_intervals == (24, 24)
        assert s.year_slice(1) == slice(24, 48)

    def test_repeated_traces(self, tmp_path, golden_config, fixtures_dir):
        golden_config["horizon"] = {"r": 1.0, "years": 3, "repeat_traces": True}
        s = load_scenario(_write_config(tmp_path, golden_config), fixtures_dir / "golden")
        assert s.n_intervals == 144
        assert s.n_years == 3

    def test_missing_availability_column(self, tmp_path, golden_config, fixtures_dir):
        golden_config["generators"][0]["trace"] = "offshore"
        with pytest.raises(ScenarioSchemaError):
            load_scenario(_write_config(tmp_path, golden_config), fixtures_dir / "golden")

    @pytest.mark.parametrize("name, column", [("demand.csv", "N1"), ("availability.csv", "pv")])
    def test_non_numeric_trace_cell(self, tmp_path, golden_config, fixtures_dir, name, column):
        for trace in ("demand.csv", "availability.csv"):
            lines = (fixtures_dir / "golden" / trace).read_text().splitlines()
            if trace == name:
                lines[3] = "abc"
            (tmp_path / trace).write_text("\n".join(lines) + "\n")
        with pytest.raises(ScenarioSchemaError) as info:
            load_scenario(_write_config(tmp_path, golden_config), tmp_path)
        assert info.value.location == f"{name}:{column}"
        assert "'abc'" in info.value.detail


class TestDumpAndHash:
    def test_round_trip(self, tmp_path, tutorial_scenario):
        dump_scenario(tutorial_scenario, tmp_path)
        reloaded = load_scenario(tmp_path / scenario_service.CONFIG_FILE)
        assert reloaded.config == tutorial_scenario.config
        assert reloaded.traces == tutorial_scenario.traces
        assert reloaded.year_intervals == tutorial_scenario.year_intervals

    def test_hash_is_stable(self, golden_scenario, fixtures_dir):
        again = load_scenario(fixtures_dir / "golden" / "config.json")
        assert scenario_hash(again) == scenario_hash(golden_scenario)

    def test_hash_tracks_config(self, golden_scenario):
        config = golden_scenario.config.model_copy(update={"name": "renamed"})
        assert scenario_hash(golden_scenario.with_config(config)) != scenario_hash(golden_scenario)


class TestCandidates:
    def test_empty_candidate(self, golden_scenario, fixtures_dir):
        c = load_candidate(golden_scenario, fixtures_dir / "golden" / "candidate.json")
        assert not c.to_vector(golden_scenario).any()

    def test_out_of_bounds(self, tmp_path, golden_scenario):
        path = tmp_path / "candidate.json"
        path.write_text(json.dumps({"generators": {"pv": 1.0}}))
        with pytest.raises(CandidateBoundsError) as info:
            load_candidate(golden_scenario, path)
        assert info.value.variable == "generator:pv"

    def test_unknown_asset(self, tmp_path, golden_scenario):
        path = tmp_path / "candidate.json"
        path.write_text(json.dumps({"lines": {"X-Y": 1.0}}))
        with pytest.raises(UnknownVariableError):
            load_candidate(golden_scenario, path)

    def test_fixed_duration_energy(self, network_scenario):
        space = DecisionSpace.from_scenario(network_scenario)
        assert "storage_energy:phes_B" not in space.names
        x = np.zeros(space.dimension)
        x[space.names.index("storage_power:phes_B")] = 0.5
        c = CandidateSolution.from_vector(network_scenario, x)
        assert c.storage_energy[1] == pytest.approx(6.0)
        np.testing.assert_array_equal(c.to_vector(network_scenario), x)

    def test_document_round_trip(self, network_scenario):
        x = np.array([0.5, 1.0, 0.25, 0.5, 2.0, 0.3])
        c = CandidateSolution.from_vector(network_scenario, x)
        again = CandidateSolution.from_document(network_scenario, c.to_document(network_scenario))
        np.testing.assert_allclose(again.to_vector(network_scenario), x)


class TestSynthetic:
    def test_deterministic(self):
        a = make_synthetic(7, 2, 1, r=6.0)
        b = make_synthetic(7, 2, 1, r=6.0)
        assert a.config == b.config
        assert a.traces == b.traces

    def test_seed_changes_traces(self):
        assert make_synthetic(1, 2, 1, r=6.0).traces != make_synthetic(2, 2, 1, r=6.0).traces

    @pytest.mark.parametrize("n_nodes", [1, 2, 4])
    def test_valid(self, n_nodes):
        s = make_synthetic(3, n_nodes, 1, r=6.0)
        assert validate_scenario(s) == []
        assert s.n_intervals == 1460
        assert len(s.nodes) == n_nodes
