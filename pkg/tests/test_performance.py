import os
import time

import numpy as np
import pytest

from app.models.candidate import DecisionSpace
from app.services.costing_service import objective
from app.services.evolve_service import PopulationEvaluator
from app.services.scenario_service import load_candidate
from factories import routes_for

pytestmark = pytest.mark.slow


def _best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def test_single_evaluation_under_100ms(tutorial_scenario, fixtures_dir):
    c = load_candidate(tutorial_scenario, fixtures_dir / "tutorial" / "candidate.json")
    rt = routes_for(tutorial_scenario)
    run = lambda: objective(tutorial_scenario, c, rt, early_exit=False)
    run()  # compile
    assert _best_of(run, 5) < 0.1


@pytest.mark.skipif((os.cpu_count() or 1) < 8, reason="needs 8 cores")
def test_eight_workers_scale_population(tutorial_scenario):
    space = DecisionSpace.from_scenario(tutorial_scenario)
    rng = np.random.default_rng(3)
    vectors = space.lower + (space.upper - space.lower) * rng.random((64, space.dimension))
    rt = routes_for(tutorial_scenario)

    def timed(workers: int) -> float:
        with PopulationEvaluator(tutorial_scenario, rt, workers, early_exit=False) as evaluate:
            evaluate(vectors[:workers])  # spin up and compile in every worker
            return _best_of(lambda: evaluate(vectors), 2)

    serial = timed(1)
    parallel = timed(8)
    assert serial / parallel >= 4.0
