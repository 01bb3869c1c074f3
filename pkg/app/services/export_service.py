import json
import logging
import os
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.core.exceptions import OutputDirectoryError
from app.models.dispatch import DispatchState
from app.models.scenario import Scenario
from app.schemas.reports import RunManifest

logger = logging.getLogger(__name__)

DISPATCH_FILE = "dispatch.csv"
SOC_FILE = "soc.csv"
COST_REPORT_FILE = "cost_report.json"
MANIFEST_FILE = "manifest.json"


def ensure_out_dir(path: str | Path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputDirectoryError(str(out)) from e
    if not os.access(out, os.W_OK):
        raise OutputDirectoryError(str(out))
    return out


def dispatch_frame(state: DispatchState, s: Scenario) -> pd.DataFrame:
    """One row per (interval, node), powers in GW; imports and exports are kept apart."""
    t, n = state.load.shape
    fleet = state.fleet
    storage = np.stack([fleet.storage_by_node(row) for row in state.storage]) if t else np.zeros((0, n))
    flexible = np.stack([fleet.flex_by_node(row) for row in state.flexible]) if t else np.zeros((0, n))
    year = np.searchsorted(s.year_starts, np.arange(t), side="right") - 1
    return pd.DataFrame({
        "year": np.repeat(year, n),
        "interval": np.repeat(np.arange(t), n),
        "node": np.tile(np.array(s.nodes, dtype=object), t),
        "load": state.load.ravel(),
        "pv": state.pv.ravel(),
        "wind": state.wind.ravel(),
        "baseload": state.baseload.ravel(),
        "storage_net": storage.ravel(),
        "flexible": flexible.ravel(),
        "imports": state.imports.ravel(),
        "exports": state.exports.ravel(),
        "spillage": state.spillage.ravel(),
        "unserved": state.unserved.ravel(),
    })


def soc_frame(state: DispatchState, s: Scenario) -> pd.DataFrame:
    frame = pd.DataFrame(state.soc, columns=[st.id for st in s.storages])
    frame.insert(0, "interval", np.arange(state.n_intervals))
    return frame


def write_dispatch(state: DispatchState, s: Scenario, out_dir: Path) -> list[Path]:
    dispatch_path = out_dir / DISPATCH_FILE
    soc_path = out_dir / SOC_FILE
    dispatch_frame(state, s).to_csv(dispatch_path, index=False, float_format="%.9g")
    soc_frame(state, s).to_csv(soc_path, index=False, float_format="%.9g")
    logger.info("Wrote dispatch traces to %s", out_dir)
    return [dispatch_path, soc_path]


def write_model(model: BaseModel, path: Path) -> Path:
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    return path


def write_json(payload: dict | list, path: Path) -> Path:
    path.write_text(json.dumps(payload, indent=2, default=float), encoding="utf-8")
    return path


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    path = write_model(manifest, out_dir / MANIFEST_FILE)
    logger.info("Run manifest written to %s", path)
    return path
