"""Scenario loading, validation, synthesis and dumping.

Traces on disk are MW (demand) and unitless fractions (availability); the
in-memory Scenario holds GW everywhere.
"""

import hashlib
import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy.signal import lfilter

from app.core.exceptions import (
    ScenarioFileNotFoundError,
    ScenarioSchemaError,
    ScenarioValidationError,
    TraceLengthError,
)
from app.models.candidate import CandidateSolution
from app.models.scenario import Scenario, TraceSet
from app.schemas.scenario import (
    CandidateDocument,
    CostBlock,
    Defaults,
    GeneratorSpec,
    HorizonConfig,
    LineSpec,
    ReliabilityConfig,
    ScenarioConfig,
    StorageSpec,
    Violation,
)

logger = logging.getLogger(__name__)

DEMAND_FILE = "demand.csv"
AVAILABILITY_FILE = "availability.csv"
CONFIG_FILE = "config.json"
MW_PER_GW = 1000.0


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioSchemaError(f"{path.name}:{e.lineno}:{e.colno}", e.msg) from e


def _parse_config(raw: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ScenarioSchemaError(location, first["msg"]) from e


def _read_trace(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise ScenarioFileNotFoundError(str(path))
    return pd.read_csv(path, encoding="utf-8")


def numeric_columns(frame: pd.DataFrame, columns: list[str], file_name: str) -> np.ndarray:
    """Columns as a float array; a cell that is not a number names its file, column and row."""
    for col in columns:
        values = pd.to_numeric(frame[col], errors="coerce")
        bad = values.isna() & frame[col].notna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise ScenarioSchemaError(
                f"{file_name}:{col}", f"non-numeric value '{frame[col].iloc[row]}' in data row {row + 1}"
            )
    return frame[columns].apply(pd.to_numeric).to_numpy(dtype=float)


def _year_intervals(horizon: HorizonConfig, length: int) -> tuple[int, ...]:
    if horizon.repeat_traces:
        count = horizon.years if isinstance(horizon.years, int) else len(horizon.years)
        if isinstance(horizon.years, list) and any(n != length for n in horizon.years):
            raise TraceLengthError("horizon.years", length, horizon.years[0])
        return (length,) * count
    if isinstance(horizon.years, int):
        if horizon.years < 1 or length % horizon.years:
            raise TraceLengthError(DEMAND_FILE, length, horizon.years * (length // max(horizon.years, 1)))
        return (length // horizon.years,) * horizon.years
    if sum(horizon.years) != length:
        raise TraceLengthError(DEMAND_FILE, length, sum(horizon.years))
    return tuple(int(n) for n in horizon.years)


def load_scenario(config_path: str | Path, trace_dir: str | Path | None = None) -> Scenario:
    path = Path(config_path)
    if not path.is_file():
        raise ScenarioFileNotFoundError(str(path))
    config = _parse_config(_read_json(path))
    trace_root = Path(trace_dir) if trace_dir else path.parent

    demand_df = _read_trace(trace_root / DEMAND_FILE)
    for node in config.nodes:
        if node not in demand_df.columns:
            raise ScenarioSchemaError(f"{DEMAND_FILE}:{node}", f"no demand column for node '{node}'")
    demand = numeric_columns(demand_df, list(config.nodes), DEMAND_FILE) / MW_PER_GW

    columns: list[str] = []
    for g in config.generators:
        col = g.trace_column
        if col is not None and col not in columns:
            columns.append(col)
    if columns:
        avail_df = _read_trace(trace_root / AVAILABILITY_FILE)
        for i, g in enumerate(config.generators):
            col = g.trace_column
            if col is not None and col not in avail_df.columns:
                raise ScenarioSchemaError(
                    f"generators.{i}.trace",
                    f"generator '{g.id}' references missing availability column '{col}'",
                )
        if len(avail_df) != len(demand_df):
            raise TraceLengthError(AVAILABILITY_FILE, len(avail_df), len(demand_df))
        availability = numeric_columns(avail_df, columns, AVAILABILITY_FILE)
    else:
        availability = np.zeros((len(demand_df), 0))

    year_intervals = _year_intervals(config.horizon, len(demand_df))
    if config.horizon.repeat_traces:
        demand = np.tile(demand, (len(year_intervals), 1))
        availability = np.tile(availability, (len(year_intervals), 1))

    scenario = Scenario(
        config=config,
        traces=TraceSet(demand=demand, availability=availability, availability_ids=tuple(columns)),
        year_intervals=year_intervals,
    )
    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    logger.info(
        "Loaded scenario '%s': %d nodes, %d lines, %d intervals over %d years",
        config.name, len(config.nodes), len(config.lines), scenario.n_intervals, scenario.n_years,
    )
    return scenario


def _bounds_rule(out: list[Violation], entity: str, pairs: list[tuple[str, float, float]]) -> None:
    for label, lo, hi in pairs:
        if lo < 0 or hi < 0:
            out.append(Violation(entity=entity, rule="non_negative_bounds", message=f"{label} bounds must be >= 0"))
        elif lo > hi:
            out.append(Violation(entity=entity, rule="ordered_bounds", message=f"{label} lower bound exceeds upper bound"))


def _cost_rule(out: list[Violation], s: Scenario, entity: str, block: CostBlock) -> None:
    cost = s.resolve_cost(block)
    if not cost.lifetime >= 1:
        out.append(Violation(entity=entity, rule="lifetime", message="economic lifetime must be >= 1 year"))
    if not cost.discount_rate > -1:
        out.append(Violation(entity=entity, rule="discount_rate", message="discount rate must exceed -1"))


def validate_scenario(s: Scenario) -> list[Violation]:
    out: list[Violation] = []
    nodes = set(s.nodes)
    if len(nodes) != len(s.nodes):
        out.append(Violation(entity="nodes", rule="unique_ids", message="node ids must be unique"))
    asset_ids = [g.id for g in s.generators] + [st.id for st in s.storages] + [ln.id for ln in s.lines]
    if len(set(asset_ids)) != len(asset_ids):
        out.append(Violation(entity="assets", rule="unique_ids", message="asset ids must be unique"))

    if not s.r > 0:
        out.append(Violation(entity="horizon", rule="resolution", message="resolution r must be > 0"))
    if not 0 < s.reliability_standard <= 1:
        out.append(Violation(entity="reliability", rule="standard", message="RS must lie in (0, 1]"))
    if s.penalty_scale < 0:
        out.append(Violation(entity="reliability", rule="penalty_scale", message="penalty scale must be >= 0"))

    traces = s.traces
    if traces.length != sum(s.year_intervals):
        out.append(Violation(entity="traces", rule="length", message="trace length must equal the horizon length"))
    if traces.demand.shape[1] != len(s.nodes):
        out.append(Violation(entity="traces", rule="demand_columns", message="one demand column per node required"))
    if traces.demand.size and not (np.all(np.isfinite(traces.demand)) and traces.demand.min() >= 0):
        out.append(Violation(entity="traces", rule="demand_non_negative", message="demand must be finite and >= 0"))
    if traces.availability.size and not (
        np.all(np.isfinite(traces.availability))
        and traces.availability.min() >= 0
        and traces.availability.max() <= 1
    ):
        out.append(Violation(entity="traces", rule="availability_range", message="availability must lie in [0, 1]"))

    for g in s.generators:
        entity = f"generator '{g.id}'"
        if g.node not in nodes:
            out.append(Violation(entity=entity, rule="node_exists", message=f"unknown node '{g.node}'"))
        if g.existing_power < 0:
            out.append(Violation(entity=entity, rule="non_negative_bounds", message="existing power must be >= 0"))
        _bounds_rule(out, entity, [("power", g.min_build, g.max_build)])
        if g.kind == "flexible":
            if g.trace is not None:
                out.append(Violation(entity=entity, rule="flexible_no_trace", message="flexible generators take no availability trace"))
            if g.annual_energy is not None and g.annual_energy < 0:
                out.append(Violation(entity=entity, rule="annual_energy", message="annual energy limit must be >= 0"))
        else:
            if g.annual_energy is not None:
                out.append(Violation(entity=entity, rule="no_annual_limit", message="only flexible generators take an annual energy limit"))
            if g.trace_column not in traces.availability_ids:
                out.append(Violation(entity=entity, rule="trace_exists", message=f"missing availability column '{g.trace_column}'"))
        _cost_rule(out, s, entity, g.cost)

    for st in s.storages:
        entity = f"storage '{st.id}'"
        if st.node not in nodes:
            out.append(Violation(entity=entity, rule="node_exists", message=f"unknown node '{st.node}'"))
        for label, eta in (("charge", st.charge_efficiency), ("discharge", st.discharge_efficiency)):
            if not 0 < eta <= 1:
                out.append(Violation(entity=entity, rule="efficiency_bounds", message=f"{label} efficiency must lie in (0, 1]"))
        if st.existing_power < 0 or st.existing_energy < 0:
            out.append(Violation(entity=entity, rule="non_negative_bounds", message="existing capacity must be >= 0"))
        _bounds_rule(out, entity, [
            ("power", st.min_build_power, st.max_build_power),
            ("energy", st.min_build_energy, st.max_build_energy),
        ])
        if st.duration is not None and not st.duration > 0:
            out.append(Violation(entity=entity, rule="duration", message="fixed duration must be > 0"))
        _cost_rule(out, s, entity, st.cost)

    for ln in s.lines:
        entity = f"line '{ln.id}'"
        for end in (ln.from_node, ln.to_node):
            if end not in nodes:
                out.append(Violation(entity=entity, rule="node_exists", message=f"unknown node '{end}'"))
        if ln.from_node == ln.to_node:
            out.append(Violation(entity=entity, rule="distinct_endpoints", message="line endpoints must be distinct nodes"))
        if ln.length < 0:
            out.append(Violation(entity=entity, rule="length", message="line length must be >= 0"))
        if ln.existing_power < 0:
            out.append(Violation(entity=entity, rule="non_negative_bounds", message="existing power must be >= 0"))
        _bounds_rule(out, entity, [("power", ln.min_build, ln.max_build)])
        _cost_rule(out, s, entity, ln.cost)
    return out


def dump_scenario(s: Scenario, out_dir: str | Path) -> Path:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    payload = s.config.model_dump(by_alias=True, mode="python")
    (root / CONFIG_FILE).write_text(json.dumps(payload, indent=2), encoding="utf-8")

    rows = s.year_intervals[0] if s.config.horizon.repeat_traces else s.n_intervals
    demand = pd.DataFrame(s.traces.demand[:rows] * MW_PER_GW, columns=s.nodes)
    demand.to_csv(root / DEMAND_FILE, index=False)
    if s.traces.availability_ids:
        availability = pd.DataFrame(s.traces.availability[:rows], columns=list(s.traces.availability_ids))
        availability.to_csv(root / AVAILABILITY_FILE, index=False)
    return root / CONFIG_FILE


def scenario_hash(s: Scenario) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps(s.config.model_dump(by_alias=True, mode="python"), sort_keys=True).encode())
    digest.update(np.ascontiguousarray(s.traces.demand).tobytes())
    digest.update(np.ascontiguousarray(s.traces.availability).tobytes())
    return digest.hexdigest()


def load_candidate(s: Scenario, path: str | Path) -> CandidateSolution:
    path = Path(path)
    if not path.is_file():
        raise ScenarioFileNotFoundError(str(path))
    try:
        doc = CandidateDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        first = e.errors()[0]
        raise ScenarioSchemaError(".".join(str(p) for p in first["loc"]), first["msg"]) from e
    return CandidateSolution.from_document(s, doc)


def make_synthetic(seed: int, n_nodes: int, n_years: int, r: float = 1.0) -> Scenario:
    rng = np.random.default_rng(seed)
    per_year = int(round(8760 / r))
    per_day = max(int(round(24 / r)), 1)
    length = per_year * n_years
    hours = np.arange(length) * r
    hour_of_day = hours % 24.0
    day_of_year = (hours / 24.0) % 365.0
    seasonal = 1.0 + 0.15 * np.cos(2 * math.pi * day_of_year / 365.0)
    diurnal = 1.0 + 0.25 * np.sin(2 * math.pi * (hour_of_day - 10.0) / 24.0)
    solar_curve = np.clip(np.sin(math.pi * (hour_of_day - 6.0) / 12.0), 0.0, None)

    nodes = [f"N{i + 1}" for i in range(n_nodes)]
    scales = rng.uniform(0.5, 2.0, size=n_nodes)
    demand = np.empty((length, n_nodes))
    availability_ids: list[str] = []
    availability_cols: list[np.ndarray] = []
    generators: list[GeneratorSpec] = []
    storages: list[StorageSpec] = []
    for i, node in enumerate(nodes):
        noise = rng.normal(0.0, 0.03, size=length)
        demand[:, i] = np.clip(scales[i] * (diurnal * seasonal + noise), 0.0, None)

        cloud = np.clip(0.85 + 0.15 * rng.standard_normal(length // per_day + 1), 0.2, 1.0)
        cloud = np.repeat(cloud, per_day)[:length]
        pv = np.clip(solar_curve * (0.9 - 0.1 * np.cos(2 * math.pi * day_of_year / 365.0)) * cloud, 0.0, 1.0)
        smooth = lfilter([1.0 - 0.97], [1.0, -0.97], rng.standard_normal(length))
        wind = 1.0 / (1.0 + np.exp(-6.0 * smooth - 0.3 * rng.standard_normal()))
        availability_ids += [f"pv_{node}", f"wind_{node}"]
        availability_cols += [pv, np.clip(wind, 0.0, 1.0)]

        peak = float(demand[:, i].max())
        generators += [
            GeneratorSpec(id=f"pv_{node}", node=node, kind="pv", technology="solar", max_build=4 * peak,
                          cost=CostBlock(capital_power=1200.0, fom=15.0)),
            GeneratorSpec(id=f"wind_{node}", node=node, kind="wind", technology="wind", max_build=4 * peak,
                          cost=CostBlock(capital_power=2000.0, fom=30.0)),
        ]
        storages.append(StorageSpec(
            id=f"battery_{node}", node=node, technology="battery", max_build_power=peak,
            max_build_energy=4 * peak, charge_efficiency=0.92, discharge_efficiency=0.92,
            cost=CostBlock(capital_power=300.0, capital_energy=250.0, fom=5.0, lifetime=15.0),
        ))

    total_peak = float(demand.sum(axis=1).max())
    annual_demand = float(demand[:per_year].sum() * r)
    generators.append(GeneratorSpec(
        id="gas", node=nodes[0], kind="flexible", technology="gas", max_build=1.5 * total_peak,
        annual_energy=0.5 * annual_demand, emissions=0.37,
        cost=CostBlock(capital_power=900.0, fom=10.0, vom=5.0, fuel=80.0, lifetime=25.0),
    ))
    storages.append(StorageSpec(
        id="pumped_hydro", node=nodes[-1], technology="pumped_hydro", max_build_power=total_peak,
        max_build_energy=48 * total_peak, charge_efficiency=0.9, discharge_efficiency=0.9,
        cost=CostBlock(capital_power=2000.0, capital_energy=50.0, fom=10.0, lifetime=60.0),
    ))

    lines: list[LineSpec] = []
    if n_nodes == 2:
        pairs = [(0, 1)]
    elif n_nodes > 2:
        pairs = [(i, (i + 1) % n_nodes) for i in range(n_nodes)]
    else:
        pairs = []
    for a, b in pairs:
        lines.append(LineSpec(
            id=f"L_{nodes[a]}_{nodes[b]}", from_node=nodes[a], to_node=nodes[b],
            length=float(rng.uniform(100.0, 500.0)), max_build=total_peak,
            cost=CostBlock(capital_power=1.5, fom=0.02),
        ))

    config = ScenarioConfig(
        name=f"synthetic-{seed}",
        nodes=nodes,
        lines=lines,
        generators=generators,
        storages=storages,
        defaults=Defaults(discount_rate=0.05, lifetime=30.0),
        horizon=HorizonConfig(r=r, years=n_years),
        reliability=ReliabilityConfig(standard=0.999),
    )
    traces = TraceSet(
        demand=demand,
        availability=np.column_stack(availability_cols),
        availability_ids=tuple(availability_ids),
    )
    return Scenario(config=config, traces=traces, year_intervals=(per_year,) * n_years)
