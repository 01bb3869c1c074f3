"""Differential-evolution capacity search, rand/1/bin with dithered mutation driven by scipy.

Every evaluation is archived. Random draws all come from one generator in
the driving process, and population evaluation preserves input order, so
the archive depends only on the seed and configuration.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import differential_evolution

from app.core.config import settings
from app.core.exceptions import DEConfigError
from app.models.archive import Archive, ArchiveEntry
from app.models.candidate import CandidateSolution, DecisionSpace
from app.models.network import RouteTable
from app.models.scenario import Scenario
from app.schemas.evolve import BoundOverride, DEConfig, NearOptimalConfig
from app.schemas.reports import CostReport
from app.services import costing_service
from app.services.analysis_service import build_cost_vector
from app.services.network_service import enumerate_routes

logger = logging.getLogger(__name__)

MIN_POPULATION = 5  # smallest initial population the solver accepts

# Worker-process globals, set once per process by the pool initializer.
_WORKER_SCENARIO: Scenario | None = None
_WORKER_ROUTES: RouteTable | None = None
_WORKER_FLAGS: tuple[bool, bool] = (True, True)


@dataclass
class OptimizeResult:
    best: CandidateSolution
    vector: np.ndarray
    report: CostReport
    archive: Archive
    space: DecisionSpace
    generations: int

    @property
    def sc(self) -> float:
        return self.report.sc

    @property
    def feasible(self) -> bool:
        return self.report.feasible


def check_config(cfg: DEConfig) -> None:
    lo, hi = cfg.mutation
    if not 0.0 < cfg.crossover <= 1.0:
        raise DEConfigError(f"crossover rate {cfg.crossover} must lie in (0, 1]")
    if not 0.0 < lo <= hi < 2.0:
        raise DEConfigError(f"mutation range ({lo}, {hi}) must satisfy 0 < lo <= hi < 2")
    if cfg.population < MIN_POPULATION:
        raise DEConfigError(f"population {cfg.population} is below {MIN_POPULATION}")
    if cfg.generations < 0:
        raise DEConfigError("generations must be non-negative")
    if cfg.generations == 0 and not cfg.initial_guesses:
        raise DEConfigError("zero generations needs at least one initial guess")


def _init_worker(s: Scenario, rt: RouteTable, early_exit: bool, precharge: bool) -> None:
    global _WORKER_SCENARIO, _WORKER_ROUTES, _WORKER_FLAGS
    _WORKER_SCENARIO = s
    _WORKER_ROUTES = rt
    _WORKER_FLAGS = (early_exit, precharge)


def _evaluate_vector(x: np.ndarray) -> CostReport:
    s = _WORKER_SCENARIO
    early_exit, precharge = _WORKER_FLAGS
    c = CandidateSolution.from_vector(s, x)
    return costing_service.objective(s, c, _WORKER_ROUTES, early_exit=early_exit, precharge=precharge)


class PopulationEvaluator:
    """Evaluates candidate vectors serially or on a process pool, preserving order."""

    def __init__(self, s: Scenario, rt: RouteTable, workers: int = 1, early_exit: bool = True, precharge: bool = True):
        self.s = s
        self.rt = rt
        self.workers = max(int(workers), 1)
        self.early_exit = early_exit
        self.precharge = precharge
        self._executor: ProcessPoolExecutor | None = None

    def __enter__(self) -> "PopulationEvaluator":
        if self.workers > 1:
            self._executor = ProcessPoolExecutor(
                max_workers=self.workers,
                initializer=_init_worker,
                initargs=(self.s, self.rt, self.early_exit, self.precharge),
            )
        else:
            _init_worker(self.s, self.rt, self.early_exit, self.precharge)
        return self

    def __exit__(self, *exc) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __call__(self, vectors: np.ndarray) -> list[CostReport]:
        if self._executor is None:
            return [_evaluate_vector(x) for x in vectors]
        chunk = max(len(vectors) // (self.workers * 4), 1)
        return list(self._executor.map(_evaluate_vector, list(vectors), chunksize=chunk))


def evaluate_population(
    s: Scenario,
    candidates: list[CandidateSolution],
    rt: RouteTable | None = None,
    workers: int | None = None,
    early_exit: bool = True,
    precharge: bool = True,
) -> list[CostReport]:
    rt = rt or enumerate_routes(s, settings.max_legs_for(len(s.nodes)))
    vectors = np.array([c.to_vector(s) for c in candidates], dtype=float)
    n_workers = settings.default_workers if workers is None else workers
    with PopulationEvaluator(s, rt, n_workers, early_exit, precharge) as evaluate:
        return evaluate(vectors)


def _technology_totals(s: Scenario, c: CandidateSolution) -> tuple[tuple[str, float], ...]:
    totals: dict[str, float] = {}
    for g, v in zip(s.generators, c.generators):
        key = g.technology or g.kind
        totals[key] = totals.get(key, 0.0) + float(v)
    for st, v in zip(s.storages, c.storage_power):
        key = st.technology or "storage"
        totals[key] = totals.get(key, 0.0) + float(v)
    if s.lines:
        totals["transmission"] = float(np.sum(c.lines))
    return tuple(sorted(totals.items()))


def _archive_batch(archive: Archive, s: Scenario, generation: int, vectors: np.ndarray,
                   reports: list[CostReport]) -> None:
    for x, report in zip(vectors, reports):
        c = CandidateSolution.from_vector(s, x)
        archive.append(ArchiveEntry(
            generation=generation,
            vector=tuple(float(v) for v in x),
            sc=report.sc,
            fc=report.fc,
            build_cost=build_cost_vector(c, s).total,
            feasible=report.feasible,
            technologies=_technology_totals(s, c),
        ))


def _seed_vectors(s: Scenario, cfg: DEConfig, space: DecisionSpace) -> np.ndarray:
    seeds = []
    for doc in cfg.initial_guesses:
        c = CandidateSolution.from_document(s, doc)
        seeds.append(np.clip(c.to_vector(s), space.lower, space.upper))
    return np.array(seeds, dtype=float).reshape(len(seeds), space.dimension)


@dataclass(frozen=True, eq=False)
class _FreeObjective:
    """SC of a vector over the free dimensions; fixed dimensions sit at their bound."""

    lower: np.ndarray
    free: np.ndarray

    def expand(self, rows: np.ndarray) -> np.ndarray:
        full = np.tile(self.lower, (len(rows), 1))
        full[:, self.free] = rows
        return full

    def __call__(self, x: np.ndarray) -> float:
        return _evaluate_vector(self.expand(np.atleast_2d(x))[0]).sc


class _ArchivingMap:
    """Map-like ``workers`` argument for scipy's solver.

    Trial populations go through the order-preserving evaluator and every
    report is archived. The first call is the initial population, already
    evaluated and archived as generation 0, so its costs are replayed.
    """

    def __init__(self, s: Scenario, objective: _FreeObjective, evaluate: PopulationEvaluator, archive: Archive,
                 initial_costs: list[float]):
        self.s = s
        self.objective = objective
        self.evaluate = evaluate
        self.archive = archive
        self.initial_costs: list[float] | None = initial_costs
        self.generation = 0

    def __call__(self, func, iterable) -> list[float]:
        if self.initial_costs is not None:
            costs, self.initial_costs = self.initial_costs, None
            return costs
        self.generation += 1
        rows = np.array(list(iterable), dtype=float).reshape(-1, int(self.objective.free.sum()))
        vectors = self.objective.expand(rows)
        reports = self.evaluate(vectors)
        _archive_batch(self.archive, self.s, self.generation, vectors, reports)
        costs = [r.sc for r in reports]
        logger.info("Generation %d: best trial SC %.6g", self.generation, min(costs))
        return costs


def optimize(
    s: Scenario,
    cfg: DEConfig,
    space: DecisionSpace | None = None,
    rt: RouteTable | None = None,
) -> OptimizeResult:
    check_config(cfg)
    space = space or DecisionSpace.from_scenario(s)
    rt = rt or enumerate_routes(s, settings.max_legs_for(len(s.nodes)))
    seed = settings.FIRM_SEED if cfg.seed is None else cfg.seed
    rng = np.random.default_rng(seed)
    workers = settings.default_workers if cfg.workers is None else cfg.workers
    archive = Archive(space.names)
    seeds = _seed_vectors(s, cfg, space)
    free = space.upper > space.lower
    generations_run = 0

    with PopulationEvaluator(s, rt, workers, cfg.early_exit, cfg.precharge) as evaluate:
        if cfg.generations == 0:
            vectors = seeds
        else:
            random_members = space.lower + (space.upper - space.lower) * rng.random((cfg.population, space.dimension))
            vectors = np.vstack([random_members, seeds])
        reports = evaluate(vectors)
        _archive_batch(archive, s, 0, vectors, reports)
        if cfg.generations:
            generations_run = 1

        # a box with no free dimension has nothing left to search
        if cfg.generations > 1 and free.any():
            costs = np.array([r.sc for r in reports])
            order = np.argsort(costs, kind="stable")[:cfg.population]
            objective = _FreeObjective(space.lower, free)
            mapper = _ArchivingMap(s, objective, evaluate, archive, costs[order].tolist())
            differential_evolution(
                objective,
                list(zip(space.lower[free], space.upper[free])),
                strategy="rand1bin",
                maxiter=cfg.generations - 1,
                tol=cfg.tol,
                atol=cfg.atol,
                mutation=tuple(cfg.mutation),
                recombination=cfg.crossover,
                rng=rng,
                init=vectors[order][:, free],
                updating="deferred",
                workers=mapper,
                polish=False,
            )
            generations_run += mapper.generation

    best_index = archive.best()
    best_vector = np.array(archive[best_index].vector)
    best = CandidateSolution.from_vector(s, best_vector)
    report = costing_service.objective(s, best, rt, early_exit=False, precharge=cfg.precharge)
    if not report.feasible:
        logger.warning("Best candidate is infeasible (SC %.6g)", report.sc)
    logger.info("Optimization finished after %d generations and %d evaluations", generations_run, len(archive))
    return OptimizeResult(
        best=best, vector=best_vector, report=report, archive=archive, space=space, generations=generations_run,
    )


def constrained_rerun(
    s: Scenario,
    cfg: DEConfig,
    overrides: dict[str, BoundOverride],
    rt: RouteTable | None = None,
) -> OptimizeResult:
    space = DecisionSpace.from_scenario(s).tightened({k: (v.lower, v.upper) for k, v in overrides.items()})
    return optimize(s, cfg, space=space, rt=rt)


def _with_seed(cfg: DEConfig, s: Scenario, result: OptimizeResult) -> DEConfig:
    return cfg.model_copy(update={"initial_guesses": [*cfg.initial_guesses, result.best.to_document(s)]})


def near_optimal_search(
    s: Scenario,
    cfg: NearOptimalConfig,
    rt: RouteTable | None = None,
) -> list[OptimizeResult]:
    """Unconstrained run, then flexible build capped at its optimum, then a storage floor."""
    rt = rt or enumerate_routes(s, settings.max_legs_for(len(s.nodes)))
    first = optimize(s, cfg.de, rt=rt)

    caps = {
        f"generator:{s.generators[i].id}": BoundOverride(upper=float(first.best.generators[i]) * cfg.flexible_cap_scale)
        for i in s.flexible_indices
    }
    second = constrained_rerun(s, _with_seed(cfg.de, s, first), caps, rt=rt)

    targets = [i for i, st in enumerate(s.storages) if st.technology == cfg.storage_technology]
    if not targets:
        raise DEConfigError(f"no storage with technology '{cfg.storage_technology}'")
    floor = cfg.storage_floor_power
    if floor is None:
        floor = cfg.storage_floor_scale * float(second.best.storage_power[targets].sum())
    space = second.space
    uppers = np.array([space.upper[space.names.index(f"storage_power:{s.storages[i].id}")] for i in targets])
    shares = uppers / uppers.sum() if uppers.sum() > 0 else np.full(len(targets), 1.0 / len(targets))
    floors = dict(caps)
    for i, share in zip(targets, shares):
        name = f"storage_power:{s.storages[i].id}"
        floors[name] = BoundOverride(lower=min(floor * share, space.upper[space.names.index(name)]))
    third = constrained_rerun(s, _with_seed(cfg.de, s, second), floors, rt=rt)
    logger.info("Near-optimal search: stage SCs %.6g, %.6g, %.6g", first.sc, second.sc, third.sc)
    return [first, second, third]
