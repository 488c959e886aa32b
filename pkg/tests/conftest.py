"""Shared test helpers: instance builders and independent oracles."""

import itertools
import os

# single-threaded BLAS: worker processes on small matrices lose more to
# thread contention than they gain (must be set before numpy loads)
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np

from caisar.encoding import assemble_sensing_matrix, generate_encoded_aperture


def bernoulli_matrix(n, m, p=0.5, seed=0):
    rng = np.random.default_rng(seed)
    return assemble_sensing_matrix(
        [generate_encoded_aperture(n, p, int(s)) for s in rng.integers(0, 2**32, m)]
    )


def spike_vector(n_pixels, k, seed, amplitudes="signed"):
    rng = np.random.default_rng(seed)
    x = np.zeros(n_pixels)
    pos = rng.choice(n_pixels, k, replace=False)
    if amplitudes == "signed":
        x[pos] = rng.choice([-1.0, 1.0], k)
    else:
        x[pos] = rng.uniform(0.5, 1.5, k)
    return x


def lp_basis_pursuit(a, y):
    """Exact BP solution via linear programming (independent oracle)."""
    from scipy.optimize import linprog

    m, n = a.shape
    res = linprog(
        np.ones(2 * n),
        A_eq=np.hstack([a, -a]),
        b_eq=y,
        bounds=[(0, None)] * (2 * n),
        method="highs",
    )
    assert res.status == 0, res.message
    return res.x[:n] - res.x[n:]


def cvxpy_tv(a, y, n):
    """Equality-constrained isotropic-TV minimizer via cvxpy (oracle)."""
    import cvxpy as cp

    x_var = cp.Variable((n, n))
    dh = cp.vstack([x_var[1:, :] - x_var[:-1, :], cp.Constant(np.zeros((1, n)))])
    dv = cp.hstack([x_var[:, 1:] - x_var[:, :-1], cp.Constant(np.zeros((n, 1)))])
    stacked = cp.vstack([
        cp.reshape(dh, (1, n * n), order="C"),
        cp.reshape(dv, (1, n * n), order="C"),
    ])
    objective = cp.sum(cp.norm(stacked, axis=0))
    problem = cp.Problem(
        cp.Minimize(objective), [a @ cp.reshape(x_var, (n * n,), order="C") == y]
    )
    try:
        problem.solve(solver=cp.ECOS)
    except Exception:
        problem.solve(solver=cp.CLARABEL)
    assert problem.status in ("optimal", "optimal_inaccurate"), problem.status
    return x_var.value


def best_k_support(a, y, k):
    """Exhaustive least-squares search over all k-sparse supports (oracle).

    A tiny ridge keeps the batched solve defined on the rare singular
    column triples; it cannot promote a rank-deficient support above the
    true one.
    """
    m, n = a.shape
    gram = a.T @ a
    corr = a.T @ y
    supports = np.array(list(itertools.combinations(range(n), k)))
    g_batch = gram[supports[:, :, None], supports[:, None, :]]
    g_batch = g_batch + (1e-9 * np.trace(gram) / n) * np.eye(k)
    c_batch = corr[supports]
    coef = np.linalg.solve(g_batch, c_batch[..., None])[..., 0]
    fit = np.einsum("bk,bk->b", c_batch, coef)  # ||y||^2 - residual^2
    return tuple(sorted(supports[int(np.argmax(fit))]))


def directional_fd(value_fn, grad_fn, x, rng, h=1e-6):
    """Relative error between analytic and central-difference directional derivative."""
    d = rng.normal(size=x.shape)
    d /= np.linalg.norm(d)
    analytic = float(np.sum(grad_fn(x) * d))
    numeric = (value_fn(x + h * d) - value_fn(x - h * d)) / (2 * h)
    denom = max(abs(analytic), abs(numeric), 1e-12)
    return abs(analytic - numeric) / denom
