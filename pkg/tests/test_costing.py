import numpy as np
import pytest

from app.core.exceptions import AnnuityError
from app.models.candidate import CandidateSolution
from app.services import costing_service
from app.services.analysis_service import build_cost_vector, solution_vector
from app.services.costing_service import (
    annuity,
    demand_mwh,
    evaluate,
    fixed_costs,
    objective,
    penalty_fixed,
    penalty_unserved,
)
from factories import build_scenario, routes_for


class TestAnnuity:
    @pytest.mark.parametrize("dr,lifetime,crf", [(0.03, 75, 0.034), (0.07, 40, 0.075)])
    def test_published_factors(self, dr, lifetime, crf):
        assert annuity(dr, lifetime).crf == pytest.approx(crf, abs=0.0005)

    def test_zero_rate(self):
        factor = annuity(0.0, 25)
        assert factor.af == 25
        assert factor.crf == pytest.approx(0.04)

    def test_reciprocal(self):
        factor = annuity(0.05, 30)
        assert factor.af * factor.crf == pytest.approx(1.0)

    def test_short_lifetime_rejected(self):
        with pytest.raises(AnnuityError):
            annuity(0.05, 0.5)


def _storage_only(storages: list[dict]):
    config = {"nodes": ["N1"], "storages": storages}
    return build_scenario(config, np.ones(24))


class TestAnnualizedBuildCosts:
    def test_battery_fleet(self):
        s = _storage_only([{"id": "bat", "node": "N1", "max_build_power": 300.0, "max_build_energy": 1200.0,
                            "cost": {"capital_energy": 190.0, "discount_rate": 0.07, "lifetime": 20}}])
        c = CandidateSolution(np.zeros(0), np.array([300.0]), np.array([1200.0]), np.zeros(0))
        assert build_cost_vector(c, s).total == pytest.approx(21e9, rel=0.05)

    @pytest.mark.parametrize("dr,lifetime,expected", [(0.07, 40, 3.9e9), (0.03, 75, 1.7e9)])
    def test_pumped_hydro_pair(self, dr, lifetime, expected):
        cost = {"discount_rate": dr, "lifetime": lifetime}
        s = _storage_only([
            {"id": "phes_a", "node": "N1", "cost": {**cost, "capital_power": 6454.0}},
            {"id": "phes_b", "node": "N1", "cost": {**cost, "capital_power": 2234.0}},
        ])
        c = CandidateSolution(np.zeros(0), np.array([3.8, 12.0]), np.zeros(2), np.zeros(0))
        assert build_cost_vector(c, s).total == pytest.approx(expected, rel=0.05)

    def test_single_generator(self):
        config = {"nodes": ["N1"], "generators": [
            {"id": "gas", "node": "N1", "kind": "flexible", "max_build": 1.0, "cost": {"capital_power": 1000.0}}]}
        s = build_scenario(config, np.ones(4))
        c = CandidateSolution(np.array([1.0]), np.zeros(0), np.zeros(0), np.zeros(0))
        crf = annuity(0.05, 30).crf
        assert build_cost_vector(c, s).values[0] == pytest.approx(1e9 * crf)

    def test_matches_fixed_cost_build_subtotal(self, network_scenario):
        x = np.array([0.5, 1.0, 0.5, 0.5, 2.0, 0.5])
        c = CandidateSolution.from_vector(network_scenario, x)
        _, assets = fixed_costs(network_scenario, c)
        assert build_cost_vector(c, network_scenario).total == pytest.approx(sum(a.build for a in assets.values()))

    def test_zero_candidate(self, network_scenario):
        bcv = build_cost_vector(CandidateSolution.zeros(network_scenario), network_scenario)
        assert not bcv.values.any()
        assert bcv.labels[0] == "generator:pv_A"


class TestPenalties:
    def test_within_standard(self):
        load = np.full(100, 1.0)
        unserved = np.zeros(100)
        unserved[0] = 0.05
        assert penalty_unserved(unserved, load, 0.999, 1.0, 1e6) == 0.0

    def test_beyond_standard(self):
        load = np.full(100, 1.0)
        unserved = np.zeros(100)
        unserved[0] = 0.5
        # 0.5 GWh unserved against a 0.1 GWh allowance
        assert penalty_unserved(unserved, load, 0.999, 1.0, 1e6) == pytest.approx(1e6 * 1e3 * 0.4)

    def test_fixed_cost_threshold(self):
        assert penalty_fixed(1e9, 1e6, float("inf"), 1e6) == 0.0
        assert penalty_fixed(1e9, 1e7, 200.0, 1.0) == 0.0
        assert penalty_fixed(1e9, 1e6, 800.0, 2.0) == pytest.approx(400.0)


class TestGoldenCosts:
    @pytest.fixture(scope="class")
    def golden(self, golden_scenario):
        c = CandidateSolution.zeros(golden_scenario)
        return evaluate(golden_scenario, c, routes_for(golden_scenario), early_exit=False)

    def test_totals(self, golden):
        report, _ = golden
        assert report.fc == pytest.approx(2e7)
        assert report.vc == pytest.approx(1.6e6)
        assert report.demand_mwh == pytest.approx(48000.0)
        assert report.lcoe == pytest.approx(450.0)
        assert report.sc == pytest.approx(450.0)
        assert report.feasible
        assert report.early_exit is None

    def test_asset_breakdown(self, golden):
        report, _ = golden
        assert report.assets["pv"].fom == pytest.approx(2e7)
        assert report.assets["flex"].vom == pytest.approx(1.6e5)
        assert report.assets["flex"].fuel == pytest.approx(1.44e6)
        assert report.assets["battery"].total == 0.0

    def test_solution_vector_reproduces_cost(self, golden, golden_scenario):
        report, state = golden
        vector = solution_vector(golden_scenario, CandidateSolution.zeros(golden_scenario), state)
        assert vector.sc_ref == pytest.approx(report.fc + report.vc)
        assert float(vector.a @ vector.z) == pytest.approx(2.16e7)

    def test_demand(self, golden_scenario):
        assert demand_mwh(golden_scenario) == pytest.approx(48000.0)


class TestEarlyExit:
    def test_unserved_energy_short_circuit(self, precharge_scenario):
        c = CandidateSolution.zeros(precharge_scenario)
        report = objective(precharge_scenario, c, routes_for(precharge_scenario), early_exit=True, precharge=False)
        assert report.early_exit == "unserved_energy"
        assert report.pf_ue == pytest.approx(1e6 * 1e3 * 2.0)
        assert report.sc == report.pf_ue
        assert not report.feasible
        assert report.unserved_by_year == pytest.approx([2.0])

    def test_fixed_cost_short_circuit(self, golden_scenario):
        config = golden_scenario.config.model_copy(update={
            "reliability": golden_scenario.config.reliability.model_copy(update={"fixed_cost_threshold": 100.0}),
        })
        s = golden_scenario.with_config(config)
        report, state = evaluate(s, CandidateSolution.zeros(s), routes_for(s))
        assert state is None
        assert report.early_exit == "fixed_cost"
        # FC / demand = 416.67 $/MWh against a 100 $/MWh threshold
        assert report.pf_fc == pytest.approx((2e7 / 48000.0 - 100.0) * 1e6)
        assert report.sc == report.pf_fc

    def test_penalty_added_without_early_exit(self, precharge_scenario):
        c = CandidateSolution.zeros(precharge_scenario)
        report = objective(precharge_scenario, c, routes_for(precharge_scenario), early_exit=False, precharge=False)
        assert report.early_exit is None
        assert report.sc == pytest.approx(report.lcoe + report.pf_ue)


@pytest.mark.parametrize("per_year,multiple", [(True, 2), (False, 1)])
def test_build_cost_per_year_flag(per_year, multiple):
    config = {
        "nodes": ["N1"],
        "generators": [{"id": "gas", "node": "N1", "kind": "flexible", "max_build": 1.0,
                        "cost": {"capital_power": 1000.0}}],
        "defaults": {"build_cost_per_year": per_year},
    }
    s = build_scenario(config, np.ones(8), years=2)
    c = CandidateSolution(np.array([1.0]), np.zeros(0), np.zeros(0), np.zeros(0))
    _, assets = costing_service.fixed_costs(s, c)
    assert assets["gas"].build == pytest.approx(multiple * 1e9 * annuity(0.05, 30).crf)
