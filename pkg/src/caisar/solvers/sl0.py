"""Smoothed-L0 recovery: graduated Gaussian surrogate with feasibility projection.

Classical scheme: start from the minimum-norm least-squares solution, then
for a geometrically decreasing sequence of widths sigma run a few
gradient-ascent steps on ``sum_i exp(-s_i^2 / sigma^2)`` (pushing small
coefficients toward zero), re-projecting onto ``{s : Phi s = y}`` after
every step.  The equality projection is what makes SL0 fast, and also what
makes it fit the noise exactly on noisy data.
"""

from __future__ import annotations

import time

import numpy as np

from ..encoding import SensingMatrix
from .common import RecoveryResult, RowSpaceProjector, SolverConfig

_ASCENT_STEP = 2.0


def sigma_schedule(sigma0: float, decrease: float, stages: int) -> tuple[float, ...]:
    """Strictly decreasing positive widths ``sigma0 * decrease**t``."""
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    if not (0 < decrease < 1):
        raise ValueError("decrease must be in (0, 1)")
    return tuple(sigma0 * decrease**t for t in range(stages))


def solve_sl0(phi: SensingMatrix, y: np.ndarray, cfg: SolverConfig) -> RecoveryResult:
    """Smoothed-L0 estimate of the sparsest solution of ``Phi x = y``."""
    if cfg.mode != "sl0":
        raise ValueError(f"cfg.mode must be 'sl0', got {cfg.mode!r}")
    start = time.perf_counter()
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    if yv.size != phi.rows:
        raise ValueError(f"y has length {yv.size}, expected {phi.rows}")

    flags: list[str] = []
    projector = RowSpaceProjector(phi.data)
    if projector.rank_deficient:
        flags.append("pinv_fallback")

    s = projector.min_norm_ls(yv)
    peak = float(np.abs(s).max()) if s.size else 0.0
    if peak == 0.0:
        return RecoveryResult(
            x_hat=np.zeros(phi.cols), iterations=0, final_residual=float(np.linalg.norm(yv)),
            objective_trace=(0.0,), wall_time_s=time.perf_counter() - start,
            mode="sl0", converged=True, flags=tuple(flags),
        )

    sigmas = sigma_schedule(2.0 * peak, cfg.sl0_sigma_decrease, cfg.continuation_stages)
    trace = []
    iterations = 0
    for sigma in sigmas:
        for _ in range(cfg.sl0_inner_iters):
            s = s - _ASCENT_STEP * s * np.exp(-(s * s) / (sigma * sigma))
            s = projector.project(s, yv, 0.0)
            iterations += 1
        # smoothed count of nonzeros at this stage's width
        trace.append(float(phi.cols - np.exp(-(s * s) / (sigma * sigma)).sum()))

    residual = float(np.linalg.norm(yv - phi.data @ s))
    return RecoveryResult(
        x_hat=s, iterations=iterations, final_residual=residual,
        objective_trace=tuple(trace), wall_time_s=time.perf_counter() - start,
        mode="sl0", converged=True, flags=tuple(flags),
    )
