import io
import logging
from http import HTTPStatus

import pytest

from app.core.config import Settings
from app.core.exceptions import (
    AggregationError,
    CandidateBoundsError,
    ClusterCountError,
    DEConfigError,
    FirmError,
    ScenarioFileNotFoundError,
    ScenarioValidationError,
)
from app.core.logging_setup import LOG_FORMAT, configure_logging
from app.schemas.scenario import Violation


class TestSettings:
    def test_defaults(self):
        s = Settings(_env_file=None)
        assert s.FIRM_LOG == "INFO"
        assert s.FIRM_DEFICIT_TOLERANCE == 1e-9
        assert s.FIRM_SEED == 0

    def test_max_legs_defaults_to_nodes_minus_one(self):
        s = Settings(_env_file=None)
        assert s.max_legs_for(3) == 2
        assert s.max_legs_for(1) == 1

    def test_max_legs_override(self):
        s = Settings(_env_file=None, FIRM_MAX_LEGS=1)
        assert s.max_legs_for(5) == 1

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv("FIRM_WORKERS", "3")
        assert Settings(_env_file=None).default_workers == 3

    def test_workers_fall_back_to_machine(self):
        assert Settings(_env_file=None, FIRM_WORKERS=0).default_workers >= 1


class TestExceptions:
    def test_status_codes(self):
        assert ScenarioFileNotFoundError("x.json").status_code == HTTPStatus.NOT_FOUND
        assert DEConfigError("bad").status_code == HTTPStatus.BAD_REQUEST
        assert ClusterCountError(5, 3).status_code == HTTPStatus.BAD_REQUEST

    def test_all_derive_from_firm_error(self):
        for exc in (AggregationError("x"), CandidateBoundsError("generator:pv", 2.0, 0.0, 1.0)):
            assert isinstance(exc, FirmError)

    def test_bounds_error_names_variable(self):
        exc = CandidateBoundsError("generator:pv", 2.0, 0.0, 1.0)
        assert exc.variable == "generator:pv"
        assert "generator:pv" in exc.detail

    def test_validation_error_lists_violations(self):
        v = Violation(entity="line 'L1'", rule="node_exists", message="unknown node 'Z'")
        exc = ScenarioValidationError([v])
        assert exc.violations == [v]
        assert "unknown node 'Z'" in exc.detail


def test_configure_logging_writes_format():
    stream = io.StringIO()
    configure_logging(stream=stream)
    logging.getLogger("app.test").info("hello")
    line = stream.getvalue().strip()
    assert line.endswith("[INFO] app.test: hello")
    assert LOG_FORMAT.startswith("%(asctime)s")
