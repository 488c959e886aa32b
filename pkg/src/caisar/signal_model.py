"""Rotating point-scatterer echo model and Doppler-bandwidth relations.

Validates the physical premise of coded-aperture ISAR imaging (fast
rotation produces a wide Doppler band) and serves as an independent
physics oracle.  The recovery chain in :mod:`caisar.encoding` and
:mod:`caisar.solvers` treats scenes as static reflectivity images and is
deliberately decoupled from the complex echo model here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_S = 299_792_458.0

# relative slack allowed between wavelength_m and c / center_frequency_hz
_WAVELENGTH_CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class RadarParams:
    """X-band pulse-radar parameters.

    ``wavelength_m`` is stored explicitly and validated against
    ``center_frequency_hz`` so tests can pin exact values.  The HPBW
    angles describe the spot-beam footprint and are metadata only.
    """

    wavelength_m: float
    center_frequency_hz: float
    prf_hz: float = 200.0
    pulse_length_s: float = 50e-6
    hpbw_elevation_rad: float = 1e-3
    hpbw_azimuth_rad: float = 1e-3

    def __post_init__(self):
        if not (self.wavelength_m > 0):
            raise ValueError(f"wavelength_m must be positive, got {self.wavelength_m}")
        if not (self.center_frequency_hz > 0):
            raise ValueError(
                f"center_frequency_hz must be positive, got {self.center_frequency_hz}"
            )
        if not (self.prf_hz > 0):
            raise ValueError(f"prf_hz must be positive, got {self.prf_hz}")
        expected = SPEED_OF_LIGHT_M_S / self.center_frequency_hz
        if abs(self.wavelength_m - expected) > _WAVELENGTH_CONSISTENCY_RTOL * expected:
            raise ValueError(
                f"wavelength_m={self.wavelength_m} inconsistent with "
                f"center_frequency_hz={self.center_frequency_hz} "
                f"(expected {expected})"
            )

    @classmethod
    def from_center_frequency(cls, center_frequency_hz: float, **kwargs) -> "RadarParams":
        """Build params with the wavelength derived from the carrier."""
        return cls(
            wavelength_m=SPEED_OF_LIGHT_M_S / center_frequency_hz,
            center_frequency_hz=center_frequency_hz,
            **kwargs,
        )

    @classmethod
    def from_wavelength(cls, wavelength_m: float, **kwargs) -> "RadarParams":
        """Build params with the carrier derived from the wavelength."""
        return cls(
            wavelength_m=wavelength_m,
            center_frequency_hz=SPEED_OF_LIGHT_M_S / wavelength_m,
            **kwargs,
        )


@dataclass(frozen=True)
class Scatterer:
    """One point scatterer in polar coordinates about the rotation center."""

    reflectivity: complex
    radius_m: float
    phase_rad: float

    def __post_init__(self):
        if self.radius_m < 0:
            raise ValueError(f"radius_m must be nonnegative, got {self.radius_m}")
        if not np.isfinite(complex(self.reflectivity)):
            raise ValueError("reflectivity must be finite")


@dataclass(frozen=True)
class RotatingScene:
    """A set of scatterers rotating rigidly at a common angular velocity."""

    scatterers: tuple[Scatterer, ...]
    angular_velocity_rad_s: float

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        if not np.isfinite(self.angular_velocity_rad_s):
            raise ValueError("angular_velocity_rad_s must be finite")


@dataclass(frozen=True)
class SlowTimeGrid:
    """Strictly increasing slow-time (azimuth) sample instants in seconds."""

    samples: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.samples, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("samples must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "samples", t)

    @classmethod
    def full_rotation(cls, omega_rad_s: float, count: int) -> "SlowTimeGrid":
        """Uniform grid covering one rotation period, endpoint excluded."""
        if omega_rad_s == 0:
            raise ValueError("omega_rad_s must be nonzero for a rotation grid")
        period = 2 * np.pi / abs(omega_rad_s)
        return cls(np.arange(count) * (period / count))


def scatterer_phase(s: Scatterer, scene_omega: float, radar: RadarParams, t_m) -> np.ndarray:
    """Instantaneous echo phase of one scatterer, radians."""
    t = np.asarray(t_m, dtype=float)
    return 4 * np.pi * s.radius_m * np.cos(scene_omega * t + s.phase_rad) / radar.wavelength_m


def baseband_echo(scene: RotatingScene, radar: RadarParams, grid: SlowTimeGrid) -> np.ndarray:
    """De-chirped, motion-compensated echo sampled on the slow-time grid.

    Each sample is the coherent sum over scatterers of
    ``sigma_k * exp(j * 4*pi * r_k * cos(omega*t_m + phi_k) / lambda)``.
    """
    t = grid.samples
    echo = np.zeros(t.shape, dtype=np.complex128)
    for s in scene.scatterers:
        echo += s.reflectivity * np.exp(1j * scatterer_phase(s, scene.angular_velocity_rad_s, radar, t))
    return echo


def doppler_frequency(s: Scatterer, scene_omega: float, radar: RadarParams, t_m) -> np.ndarray:
    """Instantaneous Doppler frequency of one scatterer, Hz.

    Equals the time derivative of the echo phase over ``2*pi``:
    ``-2 * r * omega * sin(omega*t_m + phi) / lambda``.
    """
    t = np.asarray(t_m, dtype=float)
    return -2 * s.radius_m * scene_omega * np.sin(scene_omega * t + s.phase_rad) / radar.wavelength_m


def doppler_bandwidth(r_k: float, omega: float, wavelength: float) -> float:
    """Doppler spread ``4 * r * |omega| / lambda`` of a rotating scatterer, Hz."""
    if not (wavelength > 0):
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if r_k < 0:
        raise ValueError(f"r_k must be nonnegative, got {r_k}")
    if not np.isfinite(omega):
        raise ValueError("omega must be finite")
    return 4 * r_k * abs(omega) / wavelength


def occupied_bandwidth(samples: np.ndarray, sample_rate_hz: float, energy_fraction: float = 0.95) -> float:
    """Width of the central frequency band holding ``energy_fraction`` of the
    spectral energy of a complex baseband signal.

    Computed from the DFT energy distribution: the band edges are the
    lower and upper ``(1 - energy_fraction) / 2`` energy quantiles.
    """
    if not (0 < energy_fraction < 1):
        raise ValueError("energy_fraction must be in (0, 1)")
    x = np.asarray(samples)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("samples must be a 1-D array with at least 2 entries")
    spectrum = np.fft.fftshift(np.fft.fft(x))
    freqs = np.fft.fftshift(np.fft.fftfreq(x.size, d=1.0 / sample_rate_hz))
    energy = np.abs(spectrum) ** 2
    total = energy.sum()
    if total == 0:
        return 0.0
    cdf = np.cumsum(energy) / total
    tail = (1 - energy_fraction) / 2
    lo = int(np.searchsorted(cdf, tail))
    hi = int(np.searchsorted(cdf, 1 - tail))
    hi = min(hi, freqs.size - 1)
    return float(freqs[hi] - freqs[lo])


def single_scatterer_spectral_check(
    r_m: float,
    omega_rad_s: float,
    radar: RadarParams,
    oversample: float = 8.0,
    energy_fraction: float = 0.95,
) -> tuple[float, float]:
    """Return ``(measured, predicted)`` Doppler bandwidths for one scatterer.

    The echo is sampled over one full rotation at ``oversample`` times the
    predicted bandwidth and its occupied bandwidth is measured from the DFT.
    """
    predicted = doppler_bandwidth(r_m, omega_rad_s, radar.wavelength_m)
    if predicted == 0:
        return 0.0, 0.0
    period = 2 * np.pi / abs(omega_rad_s)
    fs = oversample * predicted
    count = int(np.ceil(fs * period))
    grid = SlowTimeGrid.full_rotation(omega_rad_s, count)
    scene = RotatingScene((Scatterer(1.0 + 0j, r_m, 0.0),), omega_rad_s)
    echo = baseband_echo(scene, radar, grid)
    measured = occupied_bandwidth(echo, count / period, energy_fraction)
    return measured, predicted
