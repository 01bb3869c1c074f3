import numpy as np
import pytest

from app.core.exceptions import ArchiveFormatError, ClusterCountError, FirmError, MisalignedVectorsError
from app.models.analysis import SolutionVector
from app.models.archive import Archive, ArchiveEntry
from app.models.candidate import CandidateSolution
from app.schemas.analysis import SensitivityAxis
from app.services.analysis_service import (
    apply_axis,
    cluster_candidates,
    filter_near_optimal,
    l1_distance,
    sensitivity_sweep,
    soc_spectrum,
)
from app.services.costing_service import annuity
from factories import routes_for


def _vector(z, a=(1.0, 2.0), sc_ref=10.0, labels=("x", "y")):
    return SolutionVector(labels=tuple(labels), z=np.asarray(z, dtype=float), a=np.asarray(a, dtype=float), sc_ref=sc_ref)


class TestL1:
    def test_identical_is_zero(self):
        v = _vector([3.0, 4.0])
        assert l1_distance(v, v).distance == 0.0

    def test_weighted_difference(self):
        # |1 × 1| + |2 × -1| over SC 10
        result = l1_distance(_vector([2.0, 3.0]), _vector([1.0, 4.0]))
        assert result.distance == pytest.approx(0.3)
        np.testing.assert_allclose(result.contributions, [1.0, 2.0])

    def test_scales_with_cost_rates(self):
        base = l1_distance(_vector([2.0, 3.0]), _vector([1.0, 4.0])).distance
        scaled = l1_distance(_vector([2.0, 3.0]), _vector([1.0, 4.0], a=(3.0, 6.0))).distance
        assert scaled == pytest.approx(3 * base)

    def test_metric_properties(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0.5, 2.0, 5)
        labels = tuple("abcde")
        p, q, w = (_vector(rng.normal(size=5), a=a, labels=labels) for _ in range(3))
        d = lambda u, v: l1_distance(u, _vector(v.z, a=a, labels=labels)).distance  # noqa: E731
        assert d(p, q) == pytest.approx(d(q, p))
        assert d(p, w) <= d(p, q) + d(q, w) + 1e-12

    def test_misaligned(self):
        with pytest.raises(MisalignedVectorsError):
            l1_distance(_vector([1.0, 2.0]), _vector([1.0, 2.0], labels=("x", "z")))
        with pytest.raises(MisalignedVectorsError):
            l1_distance(_vector([1.0]), _vector([1.0, 2.0]))

    def test_reference_cost_must_be_positive(self):
        with pytest.raises(FirmError):
            l1_distance(_vector([1.0, 2.0]), _vector([1.0, 2.0], sc_ref=0.0))


def _archive(build_costs):
    archive = Archive(("generator:x",))
    for i, b in enumerate(build_costs):
        archive.append(ArchiveEntry(generation=0, vector=(float(i),), sc=1.0, fc=1.0, build_cost=b, feasible=True))
    return archive


class TestFilter:
    def test_keeps_within_threshold(self):
        kept = filter_near_optimal(_archive([90.0, 110.0, 121.0, 130.0]), 100.0, 0.2)
        assert [e.build_cost for e in kept] == [90.0, 110.0]

    def test_bound_is_inclusive(self):
        kept = filter_near_optimal(_archive([120.0]), 100.0, 0.2)
        assert len(kept) == 1

    def test_empty_archive(self):
        assert len(filter_near_optimal(_archive([]), 100.0, 0.2)) == 0

    def test_reference_must_be_positive(self):
        with pytest.raises(ArchiveFormatError):
            filter_near_optimal(_archive([1.0]), 0.0, 0.2)


class TestClusters:
    @pytest.fixture(scope="class")
    def blobs(self):
        rng = np.random.default_rng(1)
        return np.vstack([rng.normal(0.0, 0.1, (20, 3)), rng.normal(10.0, 0.1, (20, 3))])

    def test_two_blobs(self, blobs):
        result = cluster_candidates(blobs, 2, seed=0)
        assert result.n_clusters == 2
        assert len(set(result.labels[:20])) == 1
        assert len(set(result.labels[20:])) == 1
        assert result.labels[0] != result.labels[20]

    def test_medoids_are_members(self, blobs):
        result = cluster_candidates(blobs, 2, seed=0)
        for cluster_id, medoid in enumerate(result.medoids):
            assert result.labels[medoid] == cluster_id

    def test_one_cluster_per_vector(self, blobs):
        result = cluster_candidates(blobs[:5], 5)
        np.testing.assert_array_equal(result.labels, np.arange(5))
        assert result.medoids == tuple(range(5))

    def test_single_cluster(self, blobs):
        result = cluster_candidates(blobs, 1)
        assert not result.labels.any()
        np.testing.assert_allclose(result.centers[0], blobs.mean(axis=0))

    @pytest.mark.parametrize("k", [0, 41])
    def test_bad_count(self, blobs, k):
        with pytest.raises(ClusterCountError):
            cluster_candidates(blobs, k)


class TestSpectrum:
    def test_daily_tone(self):
        hours = np.arange(240)
        result = soc_spectrum(5.0 + np.sin(2 * np.pi * hours / 24))
        peak = int(np.argmax(result.magnitude))
        assert result.frequency[peak] == pytest.approx(1 / 24)
        assert result.magnitude[peak] == 1.0
        others = np.delete(result.magnitude, peak)
        assert others.max() <= 1e-6

    def test_constant_series(self):
        result = soc_spectrum(np.full(48, 3.0))
        assert not result.magnitude.any()
        assert len(result.frequency) == 24

    def test_offset_invariant(self):
        hours = np.arange(96)
        trace = np.sin(2 * np.pi * hours / 12)
        np.testing.assert_allclose(soc_spectrum(trace).magnitude, soc_spectrum(trace + 40.0).magnitude, atol=1e-12)

    def test_two_tones(self):
        hours = np.arange(240)
        trace = np.sin(2 * np.pi * hours / 24) + 0.5 * np.sin(2 * np.pi * hours / 12)
        result = soc_spectrum(trace)
        at_12h = int(np.argmin(np.abs(result.frequency - 1 / 12)))
        assert result.magnitude[at_12h] == pytest.approx(0.25)

    def test_nodes_are_summed(self):
        hours = np.arange(48)
        trace = np.column_stack([np.sin(2 * np.pi * hours / 24), np.zeros(48)])
        np.testing.assert_allclose(soc_spectrum(trace).magnitude, soc_spectrum(trace[:, 0]).magnitude)

    def test_resolution_sets_frequency(self):
        result = soc_spectrum(np.sin(np.arange(48)), r=0.5)
        assert result.frequency[-1] == pytest.approx(1.0)


class TestSensitivity:
    @pytest.fixture(scope="class")
    def network_candidate(self, network_scenario):
        return CandidateSolution.from_vector(network_scenario, np.array([0.5, 1.0, 0.5, 0.5, 2.0, 0.5]))

    def test_baseline_first(self, network_scenario, network_candidate):
        rt = routes_for(network_scenario)
        points = sensitivity_sweep(network_scenario, network_candidate, [], rt)
        assert len(points) == 1
        assert points[0].axis == "baseline"

    def test_fuel_axis_on_fuel_free_technology(self, golden_scenario):
        # pv burns no fuel, so scaling its fuel price changes nothing
        c = CandidateSolution.zeros(golden_scenario)
        rt = routes_for(golden_scenario)
        axis = SensitivityAxis(name="fuel_cost", values=[2.0], technology="solar")
        points = sensitivity_sweep(golden_scenario, c, [axis], rt)
        assert points[1].lcoe == pytest.approx(points[0].lcoe)
        assert points[1].redispatched

    def test_fuel_doubling_without_redispatch(self, golden_scenario):
        c = CandidateSolution.zeros(golden_scenario)
        rt = routes_for(golden_scenario)
        axis = SensitivityAxis(name="fuel_cost", values=[2.0], technology="gas", redispatch="never")
        baseline, doubled = sensitivity_sweep(golden_scenario, c, [axis], rt)
        # 1.44e6 of fuel on 48000 MWh
        assert doubled.lcoe - baseline.lcoe == pytest.approx(1.44e6 / 48000.0)
        assert not doubled.redispatched

    def test_discount_rate_follows_recovery_factor(self, network_scenario):
        c = CandidateSolution.from_vector(network_scenario, np.array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
        config = network_scenario.config.model_copy(update={"generators": [
            g.model_copy(update={"cost": g.cost.model_copy(update={"fom": 0.0, "vom": 0.0, "fuel": 0.0})})
            for g in network_scenario.generators
        ], "lines": [
            ln.model_copy(update={"cost": ln.cost.model_copy(update={"fom": 0.0})}) for ln in network_scenario.lines
        ], "storages": [
            st.model_copy(update={"cost": st.cost.model_copy(update={"fom": 0.0})}) for st in network_scenario.storages
        ]})
        s = network_scenario.with_config(config)
        axis = SensitivityAxis(name="discount_rate", values=[0.03, 0.07], technology="gas", mode="set")
        _, low, high = sensitivity_sweep(s, c, [axis], routes_for(s))
        assert high.lcoe / low.lcoe == pytest.approx(annuity(0.07, 30).crf / annuity(0.03, 30).crf)

    def test_unknown_technology_is_flat(self, golden_scenario):
        c = CandidateSolution.zeros(golden_scenario)
        axis = SensitivityAxis(name="capital_power", values=[0.5, 2.0], technology="nuclear")
        points = sensitivity_sweep(golden_scenario, c, [axis], routes_for(golden_scenario))
        assert [p.lcoe for p in points] == pytest.approx([points[0].lcoe] * 3)
        assert not any(p.redispatched for p in points)

    def test_carbon_price_adds_to_fuel(self, tutorial_scenario):
        axis = SensitivityAxis(name="carbon_price", values=[50.0])
        swept, touched = apply_axis(tutorial_scenario, axis, 50.0)
        assert touched
        gas = next(g for g in swept.generators if g.id == "gas")
        base = next(g for g in tutorial_scenario.generators if g.id == "gas")
        assert swept.resolve_cost(gas.cost).fuel == pytest.approx(tutorial_scenario.resolve_cost(base.cost).fuel + 50.0 * 0.37)
        pv = next(g for g in swept.generators if g.id == "pv_A")
        assert pv.cost == next(g for g in tutorial_scenario.generators if g.id == "pv_A").cost
