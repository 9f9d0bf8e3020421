"""
CSV output: header row, comma separated, LF newlines, floats at 9 significant digits
"""

import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Optional, Sequence

import pandas as pd

from ..controller import PerformanceBound
from ..dp import MonteCarloEstimate, chebyshev_bound
from ..engine import FeasibilityCell, Metrics

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.9g"


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("wrote %d rows to %s", len(frame), path)
    return path


def _stamp(rows: list[dict], seed: int, config_hash: str) -> pd.DataFrame:
    return pd.DataFrame([{"seed": seed, "config_hash": config_hash, **row} for row in rows])


def metrics_frame(metrics: Metrics, sources: Iterable[int], config_hash: str) -> pd.DataFrame:
    """One row per node; source-only columns are empty for relays"""
    sources = set(sources)
    rows = []
    for node in sorted(metrics.avg_power):
        is_source = node in sources
        rows.append({
            "v": metrics.v,
            "node": node,
            "role": "source" if is_source else "relay",
            "arrival_rate": metrics.arrival_rate[node] if is_source else math.nan,
            "delivered_fraction": metrics.delivered_fraction[node] if is_source else math.nan,
            "reliability": metrics.reliability[node] if is_source else math.nan,
            "avg_power": metrics.avg_power[node],
            "avg_z": metrics.avg_z[node] if is_source else math.nan,
            "avg_x": metrics.avg_x[node],
            "final_z": metrics.final_z[node] if is_source else math.nan,
            "final_x": metrics.final_x[node],
        })
    return _stamp(rows, metrics.seed, config_hash)


def sweep_frame(
    results: Sequence[Metrics],
    config_hash: str,
    constants: Optional[Sequence[PerformanceBound]] = None,
) -> pd.DataFrame:
    """Sum power and mean queue values per V, with B when constants are given"""
    b = max(c.b for c in constants) if constants else math.nan
    frames = []
    for m in results:
        frames.append(_stamp([{
            "V": m.v,
            "avg_sum_power": m.sum_power,
            "avg_Z": m.mean_z,
            "avg_X": m.mean_x,
            "min_reliability": min(m.reliability.values()),
            "objective": m.objective,
            "B": b,
            "bound_utility_gap": b / m.v if m.v > 0 else math.inf,
        }], m.seed, config_hash))
    return pd.concat(frames, ignore_index=True)


def feasibility_frame(cells: Sequence[FeasibilityCell], config_hash: str) -> pd.DataFrame:
    frames = [
        _stamp([{
            "lam": c.lam,
            "rho": c.rho,
            "strategy": c.strategy.value,
            "feasible": int(c.feasible),
            "margin": c.margin,
            "avg_sum_power": c.metrics.sum_power,
            "min_reliability": min(c.metrics.reliability.values()),
        }], c.metrics.seed, config_hash)
        for c in cells
    ]
    return pd.concat(frames, ignore_index=True)


def trace_frame(metrics: Metrics, config_hash: str) -> pd.DataFrame:
    columns = ["slot", "source", "arrived", "mode", "source_power", "relay_power",
               "relays_used", "success", "z", "x_source"]
    rows = [asdict(row) for row in metrics.trace]
    if not rows:
        return pd.DataFrame(columns=["seed", "config_hash", *columns])
    return _stamp(rows, metrics.seed, config_hash)


def dp_frame(
    estimates: Sequence[MonteCarloEstimate],
    epsilons: Sequence[float],
    exact: Optional[float],
    seed: int,
    config_hash: str,
) -> pd.DataFrame:
    """Monte Carlo estimate per n with its Chebyshev bound for each epsilon"""
    rows = [
        {
            "p_s": est.p_s,
            "n": est.n,
            "estimate": est.value,
            "variance": est.variance,
            "exact": math.nan if exact is None else exact,
            "abs_error": math.nan if exact is None else abs(est.value - exact),
            "epsilon": eps,
            "chebyshev_bound": chebyshev_bound(est.variance, est.n, eps),
        }
        for est in estimates
        for eps in epsilons
    ]
    return _stamp(rows, seed, config_hash)
