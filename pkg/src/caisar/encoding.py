"""Bernoulli encoded apertures, sensing-matrix assembly, and the linear
measurement model.

One encoded aperture is an n x n binary mask of active spot beams drawn
i.i.d. Bernoulli(p).  Flattening M masks row-major gives the M x N sensing
matrix (N = n*n); a snapshot measurement is the scalar sum of the scene
reflectivity under the active beams, so the full measurement vector is
``y = Phi @ x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ApertureGenerationError(RuntimeError):
    """Raised when no valid (non-empty) mask could be drawn."""


def _frozen_array(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EncodedAperture:
    """One snapshot's spot-beam mask: 1 = beam present, 0 = absent."""

    mask: np.ndarray
    seed: int
    bernoulli_p: float

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"mask must be a square 2-D grid, got shape {m.shape}")
        if not np.isin(m, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        if not m.any():
            raise ValueError("mask must have at least one active beam")
        if not (0 < self.bernoulli_p <= 1):
            raise ValueError(f"bernoulli_p must be in (0, 1], got {self.bernoulli_p}")
        object.__setattr__(self, "mask", _frozen_array(m.astype(np.uint8)))

    @property
    def side(self) -> int:
        return self.mask.shape[0]


def generate_encoded_aperture(
    n: int, p: float, seed: int, max_retries: int = 16
) -> EncodedAperture:
    """Draw an n x n Bernoulli(p) mask, deterministic in ``seed``.

    The all-zero mask carries no measurement and is redrawn from the same
    stream, up to ``max_retries`` times.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not (0 < p <= 1):
        raise ValueError(f"p must be in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        mask = (rng.random((n, n)) < p).astype(np.uint8)
        if mask.any():
            return EncodedAperture(mask=mask, seed=seed, bernoulli_p=p)
    raise ApertureGenerationError(
        f"all-zero mask persisted for {max_retries} draws (n={n}, p={p}, seed={seed})"
    )


@dataclass(frozen=True)
class SensingMatrix:
    """M x N binary matrix whose rows are flattened encoded apertures."""

    data: np.ndarray
    side: int
    seeds: tuple[int, ...] = ()

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] < 1:
            raise ValueError(f"data must be a 2-D matrix with M >= 1, got shape {d.shape}")
        if d.shape[1] != self.side * self.side:
            raise ValueError(
                f"cols={d.shape[1]} does not match side**2={self.side * self.side}"
            )
        if not np.isin(d, (0.0, 1.0)).all():
            raise ValueError("sensing-matrix entries must be 0 or 1")
        object.__setattr__(self, "data", _frozen_array(d))
        object.__setattr__(self, "seeds", tuple(self.seeds))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def row_as_mask(self, i: int) -> np.ndarray:
        """Reshape row i back into its n x n aperture mask."""
        return self.data[i].reshape(self.side, self.side).astype(np.uint8)


def assemble_sensing_matrix(apertures: list[EncodedAperture]) -> SensingMatrix:
    """Stack aperture masks, row-major flattened, into the sensing matrix."""
    if not apertures:
        raise ValueError("apertures list must be non-empty")
    n = apertures[0].side
    for i, ap in enumerate(apertures):
        if ap.side != n:
            raise ValueError(f"aperture {i} has side {ap.side}, expected {n}")
    data = np.stack([ap.mask.reshape(-1) for ap in apertures]).astype(np.float64)
    return SensingMatrix(data=data, side=n, seeds=tuple(ap.seed for ap in apertures))


@dataclass(frozen=True)
class MeasurementSet:
    """Length-M echo vector with its noise provenance.

    ``snr_db`` is None for noiseless measurements.
    """

    y: np.ndarray
    snr_db: float | None = None
    noise_seed: int | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise ValueError(f"y must be 1-D, got shape {y.shape}")
        if not np.isfinite(y).all():
            raise ValueError("y must be finite")
        if self.snr_db is not None and not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite or None")
        object.__setattr__(self, "y", _frozen_array(y))

    @classmethod
    def noiseless(cls, y: np.ndarray) -> "MeasurementSet":
        return cls(y=np.array(y, dtype=np.float64), snr_db=None, noise_seed=None)


@dataclass(frozen=True)
class CoherenceReport:
    """RIP-style diagnostics for a sensing matrix."""

    mutual_coherence: float
    max_row_inner_product: float
    is_underdetermined: bool
    duplicate_row_count: int
    zero_column_count: int = 0


def forward_measure(phi: SensingMatrix, x: np.ndarray) -> np.ndarray:
    """Measure a vectorized scene: ``y = Phi @ x``.

    y_i sums the scene values under snapshot i's active beams.
    """
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    if xv.size != phi.cols:
        raise ValueError(f"x has length {xv.size}, expected {phi.cols}")
    return phi.data @ xv


def add_awgn(y: np.ndarray, snr_db: float, seed: int) -> MeasurementSet:
    """Add white Gaussian noise at the given SNR (dB), deterministic in seed.

    Noise variance is ``mean(y**2) / 10**(snr_db / 10)``.
    """
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    power = float(np.mean(yv**2))
    if power == 0:
        raise ValueError("cannot set an SNR on an all-zero measurement vector")
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    noise_var = power / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    noisy = yv + rng.normal(0.0, np.sqrt(noise_var), size=yv.size)
    return MeasurementSet(y=noisy, snr_db=float(snr_db), noise_seed=seed)


def noise_std_for_snr(y_clean: np.ndarray, snr_db: float | None) -> float:
    """Std deviation of the noise ``add_awgn`` would draw for these measurements."""
    if snr_db is None:
        return 0.0
    power = float(np.mean(np.asarray(y_clean, dtype=np.float64) ** 2))
    return float(np.sqrt(power / 10 ** (snr_db / 10)))


def mutual_coherence(phi: SensingMatrix) -> float:
    """Maximum normalized inner product over distinct nonzero column pairs."""
    a = phi.data
    norms = np.linalg.norm(a, axis=0)
    keep = norms > 0
    if int(keep.sum()) < 2:
        raise ValueError("mutual coherence needs at least 2 nonzero columns")
    cols = a[:, keep] / norms[keep]
    gram = np.abs(cols.T @ cols)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def max_row_inner_product(phi: SensingMatrix) -> float:
    """Maximum normalized inner product over distinct nonzero row pairs."""
    a = phi.data
    norms = np.linalg.norm(a, axis=1)
    keep = norms > 0
    rows = a[keep] / norms[keep, None]
    if rows.shape[0] < 2:
        return 0.0
    gram = np.abs(rows @ rows.T)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())


def rip_diagnostics(phi: SensingMatrix) -> CoherenceReport:
    """Report underdeterminedness, coherence, row orthogonality, duplicates.

    Exact row orthogonality cannot hold for independent Bernoulli masks, so
    the normalized row inner product is reported as a proxy instead of being
    enforced.
    """
    zero_cols = int((np.linalg.norm(phi.data, axis=0) == 0).sum())
    unique_rows = np.unique(phi.data, axis=0).shape[0]
    return CoherenceReport(
        mutual_coherence=mutual_coherence(phi),
        max_row_inner_product=max_row_inner_product(phi),
        is_underdetermined=phi.rows < phi.cols,
        duplicate_row_count=phi.rows - unique_rows,
        zero_column_count=zero_cols,
    )
