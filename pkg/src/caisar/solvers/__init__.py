"""Sparse-recovery solvers: smoothed L1 and TV, SL0, and SBL."""

from __future__ import annotations

import numpy as np

from ..encoding import SensingMatrix
from .common import MODES, RecoveryResult, RowSpaceProjector, SolverConfig, default_config
from .nesta import solve_l1, solve_tv, tv_norm
from .sbl import solve_sbl
from .sl0 import sigma_schedule, solve_sl0

__all__ = [
    "MODES",
    "RecoveryResult",
    "RowSpaceProjector",
    "SolverConfig",
    "default_config",
    "sigma_schedule",
    "solve",
    "solve_l1",
    "solve_sbl",
    "solve_sl0",
    "solve_tv",
    "tv_norm",
]


def solve(phi: SensingMatrix, y: np.ndarray, cfg: SolverConfig, n: int | None = None) -> RecoveryResult:
    """Dispatch to the solver selected by ``cfg.mode``."""
    if cfg.mode == "l1":
        return solve_l1(phi, y, cfg)
    if cfg.mode == "tv":
        side = n if n is not None else phi.side
        return solve_tv(phi, y, side, cfg)
    if cfg.mode == "sl0":
        return solve_sl0(phi, y, cfg)
    if cfg.mode == "sbl":
        return solve_sbl(phi, y, cfg)
    raise ValueError(f"unknown solver mode {cfg.mode!r}")
