from functools import lru_cache

from app.core.config import settings
from app.models.network import RouteTable
from app.models.scenario import Scenario
from app.services.network_service import enumerate_routes
from app.services.scenario_service import load_scenario


@lru_cache(maxsize=settings.FIRM_SCENARIO_CACHE)
def get_scenario(config_path: str, trace_dir: str | None = None) -> tuple[Scenario, RouteTable]:
    s = load_scenario(config_path, trace_dir)
    return s, enumerate_routes(s, settings.max_legs_for(len(s.nodes)))
