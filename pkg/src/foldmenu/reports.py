"""Reading and writing estimation results and tidy analysis tables."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .estimation import EstimationResult
from .panel import FLOAT_FORMAT, Panel

RESULT_FILE = "result.json"
GAMMA_FILE = "gamma.csv"


def save_estimation_result(result: EstimationResult, panel: Panel, outdir) -> Path:
    """Write result.json (parameters, diagnostics) plus the per-market table."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / RESULT_FILE, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2)
    result.gamma_frame(panel).to_csv(
        outdir / GAMMA_FILE, index=False, float_format=FLOAT_FORMAT
    )
    return outdir / RESULT_FILE


def load_estimation_result(path, panel: Panel) -> EstimationResult:
    """Rebuild an EstimationResult from result.json and its sibling gamma.csv.

    The per-market table is realigned to the panel's market order, so the
    panel used for analysis must contain exactly the markets that were
    estimated.
    """
    path = Path(path)
    if path.is_dir():
        path = path / RESULT_FILE
    if not path.exists():
        raise FileNotFoundError(f"no estimation result at {path}")
    with open(path) as fh:
        payload = json.load(fh)
    table = pd.read_csv(path.parent / GAMMA_FILE, float_precision="round_trip")
    t, j = panel.n_markets, panel.n_tiers
    order = {m: i for i, m in enumerate(panel.market_ids)}
    missing = set(panel.market_ids) - set(table["market_id"].astype(str))
    if missing or len(table) != t * j:
        raise ValueError(
            "gamma table does not match the panel (markets or tiers differ)"
        )
    gamma = np.empty((t, j))
    dxi = np.empty((t, j))
    for _, row in table.iterrows():
        ti = order[str(row["market_id"])]
        gamma[ti, int(row["tier"]) - 1] = row["gamma_hat"]
        dxi[ti, int(row["tier"]) - 1] = row["delta_xi_hat"]
    return EstimationResult(
        model=payload["model"],
        theta_hat=float(payload["theta_hat"]),
        xi_hat=np.asarray(payload["xi_hat"], dtype=float),
        delta_xi_hat=dxi,
        gamma_hat=gamma,
        objective_value=float(payload["objective_value"]),
        contraction_iterations=int(payload["contraction_iterations"]),
        converged=bool(payload["converged"]),
        at_bracket_edge=bool(payload["at_bracket_edge"]),
        xi_by_group={
            g: np.asarray(v, dtype=float)
            for g, v in payload.get("xi_by_group", {}).items()
        }
        or None,
        bootstrap_se=payload.get("bootstrap_se"),
        metadata=payload.get("metadata", {}),
    )


def write_tidy_csv(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
