"""Ground-truth scenes: sparse debris fields, piecewise-constant satellite
silhouettes, and combined scenes.

The test images behind the reference experiments are not published, so
these are parametric stand-ins: debris is a handful of random spikes,
the satellite is a central body with two solar panels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCENE_KINDS = ("debris", "satellite", "combined")

DEFAULT_DEBRIS_COUNT = 10
DEFAULT_DEBRIS_AMP_RANGE = (0.5, 1.5)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle of constant amplitude, grid coordinates."""

    row: int
    col: int
    height: int
    width: int
    amplitude: float

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("rectangle height and width must be >= 1")
        if self.amplitude <= 0:
            raise ValueError("rectangle amplitude must be positive")


@dataclass(frozen=True)
class Scene:
    """Nonnegative n x n reflectivity image plus its provenance."""

    image: np.ndarray
    sparsity_r: int
    kind: str
    seed: int | None = None

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.float64)
        if img.ndim != 2 or img.shape[0] != img.shape[1]:
            raise ValueError(f"image must be square 2-D, got shape {img.shape}")
        if (img < 0).any():
            raise ValueError("scene values must be nonnegative")
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"kind must be one of {SCENE_KINDS}, got {self.kind!r}")
        if self.sparsity_r != int(np.count_nonzero(img)):
            raise ValueError(
                f"sparsity_r={self.sparsity_r} does not match nonzero count "
                f"{int(np.count_nonzero(img))}"
            )
        img.setflags(write=False)
        object.__setattr__(self, "image", img)

    @property
    def side(self) -> int:
        return self.image.shape[0]

    @property
    def x(self) -> np.ndarray:
        """Row-major vectorized view of the scene."""
        return self.image.reshape(-1)


def default_satellite_rects(n: int) -> tuple[Rect, ...]:
    """Body-plus-two-panels silhouette covering roughly 8-10% of the grid."""
    body_h = max(2, round(0.30 * n))
    body_w = max(1, round(0.15 * n))
    panel_h = max(1, round(0.10 * n))
    panel_w = max(2, round(0.25 * n))
    r0 = (n - body_h) // 2
    c0 = (n - body_w) // 2
    pr = (n - panel_h) // 2
    body = Rect(r0, c0, body_h, body_w, 1.0)
    left = Rect(pr, c0 - panel_w, panel_h, panel_w, 0.6)
    right = Rect(pr, c0 + body_w, panel_h, panel_w, 0.6)
    return (body, left, right)


def make_satellite_phantom(n: int, rects: tuple[Rect, ...] | None = None) -> Scene:
    """Deterministic piecewise-constant silhouette from rectangle specs.

    ``rects=None`` uses the default silhouette; an empty tuple yields an
    all-zero scene.  Overlapping rectangles combine by pixelwise maximum.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if rects is None:
        rects = default_satellite_rects(n)
    image = np.zeros((n, n))
    for i, r in enumerate(rects):
        if r.row < 0 or r.col < 0 or r.row + r.height > n or r.col + r.width > n:
            raise ValueError(f"rectangle {i} does not lie within the {n}x{n} grid")
        block = image[r.row : r.row + r.height, r.col : r.col + r.width]
        np.maximum(block, r.amplitude, out=block)
    return Scene(image=image, sparsity_r=int(np.count_nonzero(image)), kind="satellite")


def make_debris_phantom(
    n: int,
    k: int,
    amp_range: tuple[float, float] = DEFAULT_DEBRIS_AMP_RANGE,
    seed: int = 0,
) -> Scene:
    """K spikes at distinct random pixels, amplitudes uniform in amp_range."""
    low, high = amp_range
    if not (0 < low <= high):
        raise ValueError(f"amp_range must satisfy 0 < low <= high, got {amp_range}")
    if k < 1:
        raise ValueError(f"debris count must be >= 1, got {k}")
    if k > n * n:
        raise ValueError(f"debris count {k} exceeds pixel count {n * n}")
    rng = np.random.default_rng(seed)
    positions = rng.choice(n * n, size=k, replace=False)
    amps = rng.uniform(low, high, size=k)
    image = np.zeros(n * n)
    image[positions] = amps
    return Scene(image=image.reshape(n, n), sparsity_r=k, kind="debris", seed=seed)


def make_combined_phantom(
    n: int,
    satellite_rects: tuple[Rect, ...] | None = None,
    k_debris: int = DEFAULT_DEBRIS_COUNT,
    amp_range: tuple[float, float] = DEFAULT_DEBRIS_AMP_RANGE,
    seed: int = 0,
) -> Scene:
    """Satellite silhouette with debris spikes on pixels outside it."""
    sat = make_satellite_phantom(n, satellite_rects)
    if k_debris == 0:
        return Scene(image=sat.image.copy(), sparsity_r=sat.sparsity_r, kind="combined", seed=seed)
    low, high = amp_range
    if not (0 < low <= high):
        raise ValueError(f"amp_range must satisfy 0 < low <= high, got {amp_range}")
    if k_debris < 0:
        raise ValueError(f"debris count must be >= 0, got {k_debris}")
    flat = sat.image.reshape(-1).copy()
    free = np.flatnonzero(flat == 0)
    if k_debris > free.size:
        raise ValueError(
            f"debris count {k_debris} exceeds the {free.size} pixels outside the silhouette"
        )
    rng = np.random.default_rng(seed)
    positions = rng.choice(free, size=k_debris, replace=False)
    flat[positions] = rng.uniform(low, high, size=k_debris)
    return Scene(
        image=flat.reshape(n, n),
        sparsity_r=sat.sparsity_r + k_debris,
        kind="combined",
        seed=seed,
    )


def satellite_support(n: int, rects: tuple[Rect, ...] | None = None) -> np.ndarray:
    """Boolean mask of pixels covered by the satellite silhouette."""
    return make_satellite_phantom(n, rects).image > 0
