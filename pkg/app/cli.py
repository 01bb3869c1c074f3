"""Command-line front door: file-in/file-out workflows over the planning services."""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import DEConfigError, FirmError, ScenarioFileNotFoundError, ScenarioSchemaError
from app.core.logging_setup import configure_logging
from app.models.analysis import SolutionVector
from app.models.archive import Archive
from app.models.candidate import CandidateSolution
from app.schemas.analysis import SensitivityPlan, SolutionVectorDocument
from app.schemas.evolve import DEConfig
from app.schemas.reports import RunManifest
from app.services import (
    aggregate_service,
    analysis_service,
    costing_service,
    evolve_service,
    export_service,
    scenario_service,
)
from app.services.network_service import enumerate_routes

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the general error status."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


class CommandResult:
    def __init__(self, artifacts: list[Path], scenario_hash: str | None = None, exit_code: int = EXIT_OK):
        self.artifacts = artifacts
        self.scenario_hash = scenario_hash
        self.exit_code = exit_code


def _read_model(model, path: str):
    p = Path(path)
    if not p.is_file():
        raise ScenarioFileNotFoundError(str(p))
    try:
        return model.model_validate_json(p.read_text(encoding="utf-8"))
    except ValidationError as e:
        first = e.errors()[0]
        raise ScenarioSchemaError(".".join(str(part) for part in first["loc"]) or p.name, first["msg"]) from e


def _read_column(path: str, column: str | None) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise ScenarioFileNotFoundError(str(p))
    frame = pd.read_csv(p)
    if column is None:
        column = frame.columns[-1]
    if column not in frame.columns:
        raise ScenarioSchemaError(f"{p.name}:{column}", f"no column '{column}'")
    return scenario_service.numeric_columns(frame, [column], p.name)[:, 0]


def _solution_vector(path: str) -> SolutionVector:
    doc = _read_model(SolutionVectorDocument, path)
    return SolutionVector(labels=tuple(doc.labels), z=np.array(doc.z), a=np.array(doc.a), sc_ref=doc.sc_ref)


def cmd_synth(args, out: Path) -> CommandResult:
    s = scenario_service.make_synthetic(args.seed, args.nodes, args.years, args.resolution)
    config_path = scenario_service.dump_scenario(s, out)
    return CommandResult([config_path], scenario_service.scenario_hash(s))


def cmd_optimize(args, out: Path) -> CommandResult:
    s = scenario_service.load_scenario(args.scenario, args.trace_dir)
    cfg = DEConfig()
    if args.config:
        try:
            cfg = _read_model(DEConfig, args.config)
        except ScenarioSchemaError as e:
            raise DEConfigError(e.detail) from e
    cfg = cfg.model_copy(update={"seed": args.seed if cfg.seed is None else cfg.seed, "workers": args.workers})
    result = evolve_service.optimize(s, cfg)

    best_path = export_service.write_model(result.best.to_document(s), out / "best_candidate.json")
    archive_path = result.archive.to_csv(out / "archive.csv")
    report_path = export_service.write_model(result.report, out / export_service.COST_REPORT_FILE)
    code = EXIT_OK if result.feasible else EXIT_INFEASIBLE
    return CommandResult([best_path, archive_path, report_path], scenario_service.scenario_hash(s), code)


def cmd_dispatch(args, out: Path) -> CommandResult:
    s = scenario_service.load_scenario(args.scenario, args.trace_dir)
    c = scenario_service.load_candidate(s, args.candidate)
    rt = enumerate_routes(s, settings.max_legs_for(len(s.nodes)))
    report, state = costing_service.evaluate(s, c, rt, early_exit=False, precharge=not args.no_precharge)
    artifacts = [export_service.write_model(report, out / export_service.COST_REPORT_FILE)]
    if args.traces and state is not None:
        artifacts += export_service.write_dispatch(state, s, out)
        vector = analysis_service.solution_vector(s, c, state)
        doc = SolutionVectorDocument(labels=list(vector.labels), z=vector.z.tolist(), a=vector.a.tolist(),
                                     sc_ref=vector.sc_ref)
        artifacts.append(export_service.write_model(doc, out / "solution_vector.json"))
    return CommandResult(artifacts, scenario_service.scenario_hash(s))


def cmd_analyze(args, out: Path) -> CommandResult:
    if args.analysis == "l1":
        result = analysis_service.l1_distance(_solution_vector(args.test), _solution_vector(args.reference))
        payload = {"distance": result.distance, "contributions": dict(zip(result.labels, result.contributions.tolist()))}
        return CommandResult([export_service.write_json(payload, out / "l1.json")])

    if args.analysis == "spectrum":
        p = Path(args.soc)
        if not p.is_file():
            raise ScenarioFileNotFoundError(str(p))
        frame = pd.read_csv(p)
        trace = frame.drop(columns=[c for c in ("interval",) if c in frame.columns]).to_numpy(dtype=float)
        spectrum = analysis_service.soc_spectrum(trace, args.resolution)
        path = out / "spectrum.csv"
        pd.DataFrame({"frequency": spectrum.frequency, "magnitude": spectrum.magnitude}).to_csv(path, index=False)
        return CommandResult([path])

    archive = Archive.from_csv(args.archive)
    if args.analysis == "filter":
        kept = analysis_service.filter_near_optimal(archive, args.reference_build, args.threshold)
        return CommandResult([kept.to_csv(out / "near_optimal.csv")])

    scenario_hash = None
    if args.scenario:
        s = scenario_service.load_scenario(args.scenario, args.trace_dir)
        scenario_hash = scenario_service.scenario_hash(s)
        vectors = np.array([
            analysis_service.build_cost_vector(CandidateSolution.from_vector(s, np.array(e.vector)), s).values
            for e in archive
        ])
    else:
        vectors = archive.vectors
    clusters = analysis_service.cluster_candidates(vectors, args.k, seed=args.seed, batch_size=args.batch_size)
    rows = out / "clusters.csv"
    pd.DataFrame({"row": np.arange(len(archive)), "cluster": clusters.labels}).to_csv(rows, index=False)
    medoids = export_service.write_json(
        {str(cid): int(row) for cid, row in enumerate(clusters.medoids)}, out / "clusters.json",
    )
    return CommandResult([rows, medoids], scenario_hash)


def cmd_sensitivity(args, out: Path) -> CommandResult:
    s = scenario_service.load_scenario(args.scenario, args.trace_dir)
    c = scenario_service.load_candidate(s, args.candidate)
    plan = _read_model(SensitivityPlan, args.axes)
    rt = enumerate_routes(s, settings.max_legs_for(len(s.nodes)))
    points = analysis_service.sensitivity_sweep(s, c, plan.axes, rt)
    path = out / "sensitivity.csv"
    pd.DataFrame([vars(p) for p in points]).to_csv(path, index=False)
    return CommandResult([path], scenario_service.scenario_hash(s))


def cmd_aggregate(args, out: Path) -> CommandResult:
    trace = _read_column(args.trace, args.column)
    if args.aggregation == "sample":
        typical = aggregate_service.sample_typical(trace, args.mode, r=args.resolution, seed=args.seed)
        payload = {
            "period_length": typical.period_length,
            "representatives": list(typical.representatives),
            "weights": list(typical.weights),
            "assignments": typical.assignment.tolist(),
        }
        return CommandResult([export_service.write_json(payload, out / "typical_periods.json")])

    day_length = args.day_length
    if len(trace) % day_length:
        trace = trace[:len(trace) - len(trace) % day_length]
        logger.warning("Trailing partial day dropped")
    fit = aggregate_service.fit_blocks if args.aggregation == "fit" else aggregate_service.daily_ldc_blocks
    rows = []
    for day, values in enumerate(trace.reshape(-1, day_length)):
        series = fit(values, args.blocks, tuple(args.weights))
        rows += [{"day": day, "start": b.start, "length": b.length, "level": b.level} for b in series.blocks]
    path = out / "blocks.csv"
    pd.DataFrame(rows, columns=["day", "start", "length", "level"]).to_csv(path, index=False)
    return CommandResult([path])


def _common_flags(suppress: bool) -> argparse.ArgumentParser:
    """Global flags; the subcommand copies suppress defaults so they never mask values given before it."""
    parser = argparse.ArgumentParser(add_help=False)
    defaults = (
        (argparse.SUPPRESS,) * 3 if suppress else (settings.FIRM_SEED, settings.default_workers, ".")
    )
    parser.add_argument("--seed", type=int, default=defaults[0])
    parser.add_argument("--workers", type=int, default=defaults[1])
    parser.add_argument("--out", default=defaults[2])
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags(suppress=True)
    parser = _Parser(prog="firm", description="Business-rules capacity expansion planning",
                        parents=[_common_flags(suppress=False)])
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", parents=[common], help="write a synthetic scenario")
    synth.add_argument("--nodes", type=int, default=3)
    synth.add_argument("--years", type=int, default=1)
    synth.add_argument("--resolution", type=float, default=1.0)
    synth.set_defaults(handler=cmd_synth)

    def scenario_flags(p):
        p.add_argument("--scenario", required=True)
        p.add_argument("--trace-dir", default=None)

    optimize = commands.add_parser("optimize", parents=[common], help="run the capacity search")
    scenario_flags(optimize)
    optimize.add_argument("--config", default=None)
    optimize.set_defaults(handler=cmd_optimize)

    dispatch = commands.add_parser("dispatch", parents=[common], help="dispatch and cost one candidate")
    scenario_flags(dispatch)
    dispatch.add_argument("--candidate", required=True)
    dispatch.add_argument("--no-precharge", action="store_true")
    dispatch.add_argument("--traces", action="store_true")
    dispatch.set_defaults(handler=cmd_dispatch)

    analyze = commands.add_parser("analyze", parents=[common], help="post-optimization analytics")
    kinds = analyze.add_subparsers(dest="analysis", required=True)
    l1 = kinds.add_parser("l1", parents=[common])
    l1.add_argument("--test", required=True)
    l1.add_argument("--reference", required=True)
    spectrum = kinds.add_parser("spectrum", parents=[common])
    spectrum.add_argument("--soc", required=True)
    spectrum.add_argument("--resolution", type=float, default=1.0)
    cluster = kinds.add_parser("cluster", parents=[common])
    cluster.add_argument("--archive", required=True)
    cluster.add_argument("--k", type=int, required=True)
    cluster.add_argument("--batch-size", type=int, default=1024)
    cluster.add_argument("--scenario", default=None)
    cluster.add_argument("--trace-dir", default=None)
    near = kinds.add_parser("filter", parents=[common])
    near.add_argument("--archive", required=True)
    near.add_argument("--reference-build", type=float, required=True)
    near.add_argument("--threshold", type=float, default=0.2)
    analyze.set_defaults(handler=cmd_analyze)

    sensitivity = commands.add_parser("sensitivity", parents=[common], help="one-at-a-time cost sweeps")
    scenario_flags(sensitivity)
    sensitivity.add_argument("--candidate", required=True)
    sensitivity.add_argument("--axes", required=True)
    sensitivity.set_defaults(handler=cmd_sensitivity)

    aggregate = commands.add_parser("aggregate", parents=[common], help="temporal aggregation")
    methods = aggregate.add_subparsers(dest="aggregation", required=True)
    for name in ("fit", "ldc"):
        p = methods.add_parser(name, parents=[common])
        p.add_argument("--trace", required=True)
        p.add_argument("--column", default=None)
        p.add_argument("--blocks", type=int, default=8)
        p.add_argument("--weights", type=float, nargs=4, default=[0.0, 1.0, 0.0, 0.0])
        p.add_argument("--day-length", type=int, default=24)
    sample = methods.add_parser("sample", parents=[common])
    sample.add_argument("--trace", required=True)
    sample.add_argument("--column", default=None)
    sample.add_argument("--mode", choices=sorted(aggregate_service.MODES), default="days_per_month")
    sample.add_argument("--resolution", type=float, default=1.0)
    aggregate.set_defaults(handler=cmd_aggregate)
    return parser


def main(argv: list[str] | None = None) -> int:
    configure_logging(stream=sys.stderr)
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        out = export_service.ensure_out_dir(args.out)
        result = args.handler(args, out)
        manifest = RunManifest(
            command=" ".join(filter(None, (args.command, getattr(args, "analysis", None),
                                           getattr(args, "aggregation", None)))),
            scenario_hash=result.scenario_hash,
            seed=args.seed,
            config={k: v for k, v in vars(args).items() if k != "handler"},
            artifacts=[str(p) for p in result.artifacts],
            duration_seconds=time.perf_counter() - started,
            version=settings.FIRM_VERSION,
        )
        export_service.write_manifest(manifest, out)
    except (FirmError, OSError) as e:
        print(f"error: {getattr(e, 'detail', e)}", file=sys.stderr)
        return EXIT_ERROR
    if result.exit_code == EXIT_INFEASIBLE:
        logger.warning("Best candidate is infeasible")
    return result.exit_code
