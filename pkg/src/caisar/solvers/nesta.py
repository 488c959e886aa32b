"""Nesterov-smoothing solver for constrained L1 and isotropic-TV recovery.

Both problems share one scheme: the nonsmooth objective (L1 norm of the
pixels, or the isotropic TV seminorm) is replaced by its Huber smoothing
with parameter mu, minimized over the measurement set
``{x : ||y - Phi x||_2 <= eps}`` by Nesterov's accelerated two-sequence
method, and mu is driven down geometrically over a handful of
continuation stages, each warm-started from the last.

Every gradient iterate is projected onto the measurement set, so all
iterates are feasible; the solver tracks and returns the feasible iterate
with the smallest true (unsmoothed) objective seen so far, which makes the
per-stage objective trace non-increasing by construction.
"""

from __future__ import annotations

import time

import numpy as np

from ..encoding import SensingMatrix
from .common import RecoveryResult, RowSpaceProjector, SolverConfig


def huber_value(v: np.ndarray, mu: float) -> float:
    """Sum of the Huber smoothing of |.| applied elementwise."""
    a = np.abs(v)
    return float(np.where(a <= mu, a * a / (2 * mu), a - mu / 2).sum())


def huber_grad(v: np.ndarray, mu: float) -> np.ndarray:
    return np.clip(v / mu, -1.0, 1.0)


def image_gradient(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences along rows and columns, zero on the last line."""
    dh = np.zeros_like(x)
    dv = np.zeros_like(x)
    dh[:-1, :] = x[1:, :] - x[:-1, :]
    dv[:, :-1] = x[:, 1:] - x[:, :-1]
    return dh, dv


def image_gradient_adjoint(ph: np.ndarray, pv: np.ndarray) -> np.ndarray:
    """Adjoint of ``image_gradient`` (negative discrete divergence)."""
    out = np.zeros_like(ph)
    out[1:, :] += ph[:-1, :]
    out[:-1, :] -= ph[:-1, :]
    out[:, 1:] += pv[:, :-1]
    out[:, :-1] -= pv[:, :-1]
    return out


def tv_norm(x: np.ndarray) -> float:
    """Isotropic total variation: sum over pixels of the gradient magnitude."""
    img = np.asarray(x, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    dh, dv = image_gradient(img)
    return float(np.sqrt(dh * dh + dv * dv).sum())


def smoothed_tv_value(x: np.ndarray, mu: float) -> float:
    """Huber smoothing of the gradient magnitude, summed over pixels."""
    dh, dv = image_gradient(x)
    mag = np.sqrt(dh * dh + dv * dv)
    return float(np.where(mag <= mu, mag * mag / (2 * mu), mag - mu / 2).sum())


def smoothed_tv_grad(x: np.ndarray, mu: float) -> np.ndarray:
    dh, dv = image_gradient(x)
    mag = np.sqrt(dh * dh + dv * dv)
    scale = 1.0 / np.maximum(mag, mu)
    return image_gradient_adjoint(dh * scale, dv * scale)


class _SmoothedL1:
    lipschitz_scale = 1.0  # Lipschitz constant of the gradient is 1 / mu

    def true_value(self, x):
        return float(np.abs(x).sum())

    def value(self, x, mu):
        return huber_value(x, mu)

    def grad(self, x, mu):
        return huber_grad(x, mu)


class _SmoothedTV:
    lipschitz_scale = 8.0  # ||grad operator||^2 <= 8, so L = 8 / mu

    def __init__(self, n: int):
        self.n = n

    def true_value(self, x):
        return tv_norm(x.reshape(self.n, self.n))

    def value(self, x, mu):
        return smoothed_tv_value(x.reshape(self.n, self.n), mu)

    def grad(self, x, mu):
        return smoothed_tv_grad(x.reshape(self.n, self.n), mu).reshape(-1)


def _nesterov_stage(objective, x0_stage, x_anchor, projector, y, eps, mu, max_iters, tol):
    """One continuation stage; returns (best_x, best_true, iters, converged).

    Implements the two-sequence accelerated scheme: a projected gradient
    point, a projected weighted-average point anchored at the stage start,
    and their convex combination.  Convergence is declared when the
    smoothed objective stops moving relative to its recent mean.
    """
    lip = objective.lipschitz_scale / mu
    x = x0_stage
    grad_acc = np.zeros_like(x0_stage)
    best_x = x0_stage
    best_true = objective.true_value(x0_stage)
    history: list[float] = []
    for k in range(max_iters):
        g = objective.grad(x, mu)
        yk = projector.project(x - g / lip, y, eps)

        f_yk = objective.value(yk, mu)
        true_yk = objective.true_value(yk)
        if true_yk < best_true:
            best_true = true_yk
            best_x = yk

        grad_acc = grad_acc + (0.5 * (k + 1)) * g
        zk = projector.project(x_anchor - grad_acc / lip, y, eps)
        tau = 2.0 / (k + 3.0)
        x = tau * zk + (1.0 - tau) * yk

        history.append(f_yk)
        if len(history) >= 10:
            recent = np.mean(history[-10:])
            if abs(f_yk - recent) <= tol * max(abs(recent), 1e-30):
                return best_x, best_true, k + 1, True
    return best_x, best_true, max_iters, False


def _solve_smoothed(objective, phi: SensingMatrix, y: np.ndarray, cfg: SolverConfig):
    start = time.perf_counter()
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    if yv.size != phi.rows:
        raise ValueError(f"y has length {yv.size}, expected {phi.rows}")

    flags: list[str] = []
    projector = RowSpaceProjector(phi.data)
    if projector.rank_deficient:
        flags.append("rank_deficient")

    if not yv.any() and cfg.epsilon == 0:
        # zero is feasible and has minimal norm
        zero = np.zeros(phi.cols)
        return RecoveryResult(
            x_hat=zero, iterations=0, final_residual=0.0,
            objective_trace=(0.0,), wall_time_s=time.perf_counter() - start,
            mode=cfg.mode, converged=True, flags=tuple(flags),
        )

    x = projector.project(projector.min_norm_ls(yv), yv, cfg.epsilon)

    mu0 = cfg.mu_start_scale * float(np.abs(phi.data.T @ yv).max())
    mu0 = max(mu0, cfg.mu_final)
    stages = cfg.continuation_stages
    if stages == 1 or mu0 == cfg.mu_final:
        mus = [cfg.mu_final] * stages
    else:
        ratio = (cfg.mu_final / mu0) ** (1.0 / (stages - 1))
        mus = [mu0 * ratio**t for t in range(stages)]

    trace: list[float] = []
    total_iters = 0
    converged = True
    best_x = x
    best_true = objective.true_value(x)
    for mu in mus:
        stage_x, stage_true, iters, ok = _nesterov_stage(
            objective, x, x, projector, yv, cfg.epsilon, mu,
            cfg.max_iters_per_stage, cfg.convergence_tol,
        )
        if stage_true < best_true:
            best_true = stage_true
            best_x = stage_x
        x = stage_x
        trace.append(best_true)
        total_iters += iters
        converged = ok
    if not converged:
        flags.append("max_iters")

    residual = float(np.linalg.norm(yv - phi.data @ best_x))
    return RecoveryResult(
        x_hat=best_x, iterations=total_iters, final_residual=residual,
        objective_trace=tuple(trace), wall_time_s=time.perf_counter() - start,
        mode=cfg.mode, converged=converged, flags=tuple(flags),
    )


def solve_l1(phi: SensingMatrix, y: np.ndarray, cfg: SolverConfig) -> RecoveryResult:
    """Basis pursuit: min ||x||_1 subject to ||y - Phi x||_2 <= epsilon."""
    if cfg.mode != "l1":
        raise ValueError(f"cfg.mode must be 'l1', got {cfg.mode!r}")
    return _solve_smoothed(_SmoothedL1(), phi, y, cfg)


def solve_tv(phi: SensingMatrix, y: np.ndarray, n: int, cfg: SolverConfig) -> RecoveryResult:
    """Isotropic-TV recovery: min TV(X) subject to ||y - Phi x||_2 <= epsilon."""
    if cfg.mode != "tv":
        raise ValueError(f"cfg.mode must be 'tv', got {cfg.mode!r}")
    if n * n != phi.cols:
        raise ValueError(f"n**2={n * n} does not match matrix cols {phi.cols}")
    return _solve_smoothed(_SmoothedTV(n), phi, y, cfg)
