"""Post-optimization analytics over candidates, archives and dispatch traces."""

import logging
from http import HTTPStatus

import numpy as np
from scipy.fft import rfft, rfftfreq
from sklearn.cluster import MiniBatchKMeans

from app.core.exceptions import ArchiveFormatError, ClusterCountError, FirmError, MisalignedVectorsError
from app.models.analysis import BuildCostVector, ClusterResult, L1Result, SolutionVector, SpectrumResult, SweepPoint
from app.models.archive import Archive
from app.models.candidate import CandidateSolution
from app.models.dispatch import DispatchState
from app.models.network import RouteTable
from app.models.scenario import Scenario
from app.schemas.analysis import SensitivityAxis
from app.services import costing_service
from app.services.costing_service import KW_PER_GW, MWH_PER_GWH, annuity

logger = logging.getLogger(__name__)

FILTER_TOLERANCE = 1e-12
REDISPATCH_AXES = ("fuel_cost", "carbon_price")


def l1_distance(test: SolutionVector, reference: SolutionVector) -> L1Result:
    if test.labels != reference.labels or len(test.z) != len(reference.z) or len(reference.a) != len(reference.z):
        raise MisalignedVectorsError()
    if reference.sc_ref <= 0.0:
        raise FirmError("Reference system cost must be positive", HTTPStatus.BAD_REQUEST)
    contributions = np.abs(reference.a * (test.z - reference.z))
    return L1Result(
        distance=float(contributions.sum() / reference.sc_ref),
        contributions=contributions,
        labels=reference.labels,
    )


def build_cost_vector(c: CandidateSolution, s: Scenario) -> BuildCostVector:
    labels: list[str] = []
    values: list[float] = []
    for i, g in enumerate(s.generators):
        cost = s.resolve_cost(g.cost)
        labels.append(f"generator:{g.id}")
        values.append(KW_PER_GW * c.generators[i] * cost.capital_power * annuity(cost.discount_rate, cost.lifetime).crf)
    for i, st in enumerate(s.storages):
        cost = s.resolve_cost(st.cost)
        crf = annuity(cost.discount_rate, cost.lifetime).crf
        labels += [f"storage_power:{st.id}", f"storage_energy:{st.id}"]
        values += [
            KW_PER_GW * c.storage_power[i] * cost.capital_power * crf,
            KW_PER_GW * c.storage_energy[i] * cost.capital_energy * crf,
        ]
    for i, ln in enumerate(s.lines):
        cost = s.resolve_cost(ln.cost)
        labels.append(f"line:{ln.id}")
        values.append(
            KW_PER_GW * c.lines[i] * ln.length * cost.capital_power * annuity(cost.discount_rate, cost.lifetime).crf
        )
    return BuildCostVector(labels=tuple(labels), values=np.array(values, dtype=float))


def solution_vector(s: Scenario, c: CandidateSolution, state: DispatchState) -> SolutionVector:
    """Per-asset outcome and cost-rate vectors whose dot product equals FC + VC."""
    years = s.n_years
    build_years = years if s.config.defaults.build_cost_per_year else 1
    energy = s.r  # GW-interval -> GWh
    labels: list[str] = []
    z: list[float] = []
    a: list[float] = []

    def add(label: str, value: float, rate: float) -> None:
        labels.append(label)
        z.append(float(value))
        a.append(float(rate))

    fleet = state.fleet
    flex_position = {int(gi): k for k, gi in enumerate(fleet.flex_gen)}
    for i, g in enumerate(s.generators):
        cost = s.resolve_cost(g.cost)
        crf = annuity(cost.discount_rate, cost.lifetime).crf
        if g.kind == "flexible":
            generated = state.flexible[:, flex_position[i]].sum()
        else:
            generated = fleet.gen_power[i] * s.traces.column(g.trace_column).sum()
        add(f"new:{g.id}", c.generators[i], KW_PER_GW * cost.capital_power * crf * build_years)
        add(f"total:{g.id}", fleet.gen_power[i], KW_PER_GW * cost.fom * years)
        add(f"energy:{g.id}", energy * generated, MWH_PER_GWH * (cost.vom + cost.fuel))

    discharged = np.clip(state.storage, 0.0, None).sum(axis=0)
    for i, st in enumerate(s.storages):
        cost = s.resolve_cost(st.cost)
        crf = annuity(cost.discount_rate, cost.lifetime).crf
        add(f"new:{st.id}", c.storage_power[i], KW_PER_GW * cost.capital_power * crf * build_years)
        add(f"new_energy:{st.id}", c.storage_energy[i], KW_PER_GW * cost.capital_energy * crf * build_years)
        add(f"total:{st.id}", fleet.storage_power[i], KW_PER_GW * cost.fom * years)
        add(f"energy:{st.id}", energy * discharged[i], MWH_PER_GWH * cost.vom)

    carried = np.abs(state.line_flow).sum(axis=0)
    for i, ln in enumerate(s.lines):
        cost = s.resolve_cost(ln.cost)
        crf = annuity(cost.discount_rate, cost.lifetime).crf
        add(f"new:{ln.id}", c.lines[i], KW_PER_GW * ln.length * cost.capital_power * crf * build_years)
        add(f"total:{ln.id}", fleet.line_caps[i], KW_PER_GW * ln.length * cost.fom * years)
        add(f"energy:{ln.id}", energy * carried[i], MWH_PER_GWH * cost.vom)

    z_arr, a_arr = np.array(z), np.array(a)
    return SolutionVector(labels=tuple(labels), z=z_arr, a=a_arr, sc_ref=float(a_arr @ z_arr))


def filter_near_optimal(archive: Archive, reference_build: float, threshold: float) -> Archive:
    """Entries whose annualized build cost is within (1 + threshold) of the reference, bound included."""
    if reference_build <= 0.0:
        raise ArchiveFormatError("reference build cost must be positive")
    limit = (1.0 + threshold) * reference_build
    keep = [i for i, e in enumerate(archive) if e.build_cost <= limit * (1.0 + FILTER_TOLERANCE)]
    return archive.subset(keep)


def cluster_candidates(
    vectors: list[BuildCostVector] | np.ndarray,
    k: int,
    seed: int = 0,
    batch_size: int = 1024,
) -> ClusterResult:
    if isinstance(vectors, np.ndarray):
        x = np.asarray(vectors, dtype=float)
    else:
        x = np.array([v.values for v in vectors], dtype=float)
    n = len(x)
    if k < 1 or k > n:
        raise ClusterCountError(k, n)
    if k == n:
        return ClusterResult(labels=np.arange(n), medoids=tuple(range(n)), centers=x.copy())

    km = MiniBatchKMeans(n_clusters=k, init="k-means++", random_state=seed, batch_size=batch_size, n_init=3)
    raw = km.fit_predict(x)
    labels = np.empty(n, dtype=int)
    medoids: list[int] = []
    centers: list[np.ndarray] = []
    for cluster_id in range(k):
        members = np.flatnonzero(raw == cluster_id)
        if members.size == 0:
            logger.warning("Cluster %d came back empty and was dropped", cluster_id)
            continue
        mean = x[members].mean(axis=0)
        nearest = members[np.argmin(np.linalg.norm(x[members] - mean, axis=1))]
        labels[members] = len(medoids)
        medoids.append(int(nearest))
        centers.append(mean)
    return ClusterResult(labels=labels, medoids=tuple(medoids), centers=np.array(centers))


def soc_spectrum(trace: np.ndarray, r: float = 1.0) -> SpectrumResult:
    """Normalized power spectrum of the (summed) stored-energy series, DC bin excluded."""
    x = np.asarray(trace, dtype=float)
    if x.ndim == 2:
        x = x.sum(axis=1)
    frequency = rfftfreq(len(x), d=r)[1:]
    if np.ptp(x) == 0.0:
        return SpectrumResult(frequency=frequency, magnitude=np.zeros_like(frequency))
    coeffs = rfft(x)
    power = (coeffs * np.conj(coeffs)).real[1:]
    peak = power.max()
    magnitude = power / peak if peak > 0.0 else np.zeros_like(power)
    return SpectrumResult(frequency=frequency, magnitude=magnitude)


_AXIS_FIELD = {
    "discount_rate": "discount_rate",
    "fuel_cost": "fuel",
    "capital_power": "capital_power",
    "capital_energy": "capital_energy",
    "lifetime": "lifetime",
    "carbon_price": "fuel",
}


def _adjusted_cost(s: Scenario, asset, axis: SensitivityAxis, value: float):
    cost_field = _AXIS_FIELD[axis.name]
    base = getattr(s.resolve_cost(asset.cost), cost_field)
    if axis.name == "carbon_price":
        updated = base + value * asset.emissions
    elif axis.mode == "scale":
        updated = base * value
    else:
        updated = value
    return asset.model_copy(update={"cost": asset.cost.model_copy(update={cost_field: updated})})


def apply_axis(s: Scenario, axis: SensitivityAxis, value: float) -> tuple[Scenario, bool]:
    """Scenario with one cost input changed; the flag is False when no asset matched."""
    touched = False

    def matches(asset, kind: str) -> bool:
        if axis.name in ("fuel_cost", "carbon_price") and kind != "generator":
            return False
        if axis.name == "capital_energy" and kind != "storage":
            return False
        if axis.name == "carbon_price" and asset.emissions == 0.0:
            return False
        if axis.technology is None:
            return True
        return getattr(asset, "technology", None) == axis.technology

    def update(assets, kind):
        nonlocal touched
        out = []
        for asset in assets:
            if matches(asset, kind):
                touched = True
                asset = _adjusted_cost(s, asset, axis, value)
            out.append(asset)
        return out

    config = s.config.model_copy(update={
        "generators": update(s.generators, "generator"),
        "storages": update(s.storages, "storage"),
        "lines": update(s.lines, "line"),
    })
    return s.with_config(config), touched


def _needs_redispatch(axis: SensitivityAxis, touched: bool) -> bool:
    if axis.redispatch == "always":
        return True
    if axis.redispatch == "never" or not touched:
        return False
    return axis.name in REDISPATCH_AXES


def sensitivity_sweep(
    s: Scenario,
    c: CandidateSolution,
    axes: list[SensitivityAxis],
    rt: RouteTable,
    precharge: bool = True,
) -> list[SweepPoint]:
    """One-at-a-time LCOE grid; the first point is the unswept baseline."""
    baseline, state = costing_service.evaluate(s, c, rt, early_exit=False, precharge=precharge)
    demand = baseline.demand_mwh
    points = [SweepPoint(axis="baseline", value=0.0, lcoe=baseline.lcoe, redispatched=False)]
    for axis in axes:
        for value in axis.values:
            swept, touched = apply_axis(s, axis, value)
            if not touched:
                points.append(SweepPoint(axis=axis.name, value=value, lcoe=baseline.lcoe, redispatched=False))
                continue
            if _needs_redispatch(axis, touched):
                report, _ = costing_service.evaluate(swept, c, rt, early_exit=False, precharge=precharge)
                points.append(SweepPoint(axis=axis.name, value=value, lcoe=report.lcoe, redispatched=True))
                continue
            fc, _ = costing_service.fixed_costs(swept, c)
            vc, _ = costing_service.variable_costs(state, swept)
            points.append(SweepPoint(axis=axis.name, value=value, lcoe=(fc + vc) / demand, redispatched=False))
        logger.info("Sensitivity axis '%s' swept over %d values", axis.name, len(axis.values))
    return points
