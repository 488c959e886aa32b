"""Trial metrics (MSE, relative error, wall time) and aggregation."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

# CSV report schema, one row per (solver, snapshots, snr) cell
REPORT_HEADER = (
    "solver",
    "snapshots",
    "snr_db",
    "trials",
    "mse_mean",
    "mse_std",
    "rel_l2_mean",
    "runtime_mean_s",
)

RUNTIME_COLUMNS = ("runtime_mean_s",)


@dataclass(frozen=True)
class TrialMetrics:
    """Per-trial recovery quality and timing for one grid cell."""

    mse: float
    relative_l2: float
    runtime_s: float
    solver: str
    snapshots_m: int
    snr_db: float | None
    trial_seed: int

    def __post_init__(self):
        if self.mse < 0 or self.relative_l2 < 0 or self.runtime_s < 0:
            raise ValueError("mse, relative_l2, and runtime_s must be nonnegative")


@dataclass(frozen=True)
class AggregateCell:
    """Mean/std statistics over the trials of one (solver, M, snr) cell."""

    solver: str
    snapshots_m: int
    snr_db: float | None
    trials: int
    mse_mean: float
    mse_std: float
    rel_l2_mean: float
    runtime_mean_s: float


def mse(x_hat: np.ndarray, x_true: np.ndarray) -> float:
    """Pixel-mean squared error between two equally sized arrays."""
    a = np.asarray(x_hat, dtype=np.float64).reshape(-1)
    b = np.asarray(x_true, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.mean((a - b) ** 2))


def relative_l2(x_hat: np.ndarray, x_true: np.ndarray) -> float:
    """``||x_hat - x_true|| / ||x_true||`` (absolute norm if truth is zero)."""
    a = np.asarray(x_hat, dtype=np.float64).reshape(-1)
    b = np.asarray(x_true, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    denom = np.linalg.norm(b)
    err = np.linalg.norm(a - b)
    return float(err / denom) if denom > 0 else float(err)


def _snr_key(snr_db: float | None):
    # None (noiseless) sorts after any finite SNR
    return (snr_db is None, snr_db if snr_db is not None else 0.0)


def aggregate_trials(trials: list[TrialMetrics]) -> list[AggregateCell]:
    """Group trials by (solver, snapshots, snr) and report mean/std per cell.

    Aggregation is order-independent; std is the population deviation so a
    single trial reports 0.
    """
    if not trials:
        raise ValueError("cannot aggregate an empty trial list")
    groups: dict[tuple, list[TrialMetrics]] = {}
    for t in trials:
        groups.setdefault((t.solver, t.snapshots_m, t.snr_db), []).append(t)
    cells = []
    for (solver, m, snr), ts in groups.items():
        # fix the reduction order so aggregation is exactly permutation-invariant
        ts = sorted(ts, key=lambda t: (t.trial_seed, t.mse, t.relative_l2, t.runtime_s))
        mses = np.array([t.mse for t in ts])
        rels = np.array([t.relative_l2 for t in ts])
        runtimes = np.array([t.runtime_s for t in ts])
        cells.append(
            AggregateCell(
                solver=solver,
                snapshots_m=m,
                snr_db=snr,
                trials=len(ts),
                mse_mean=float(mses.mean()),
                mse_std=float(mses.std()),
                rel_l2_mean=float(rels.mean()),
                runtime_mean_s=float(runtimes.mean()),
            )
        )
    cells.sort(key=lambda c: (c.solver, c.snapshots_m, _snr_key(c.snr_db)))
    return cells


def time_solver(invocation, *args, **kwargs):
    """Run ``invocation(*args, **kwargs)`` and return ``(result, seconds)``.

    Times only the call itself on the monotonic clock; any setup done
    before entering this function is excluded by construction.
    """
    start = time.perf_counter()
    result = invocation(*args, **kwargs)
    return result, time.perf_counter() - start


def cell_to_row(cell: AggregateCell) -> tuple[str, ...]:
    """Render one aggregate cell as CSV fields (schema: REPORT_HEADER)."""
    snr = "noiseless" if cell.snr_db is None else repr(float(cell.snr_db))
    return (
        cell.solver,
        str(cell.snapshots_m),
        snr,
        str(cell.trials),
        repr(cell.mse_mean),
        repr(cell.mse_std),
        repr(cell.rel_l2_mean),
        repr(cell.runtime_mean_s),
    )
