"""Time grids and input pulse envelopes.

Envelopes are complex baseband fields A(t) sampled on a uniform grid; the
optical carrier sits in metadata as a detuning from the line centroid, never
as a phase ramp in the samples. Downstream, the cell response is evaluated at
carrier + FFT bin, so a component 24 GHz off the carrier is handled exactly
even though the grid's Nyquist band is only +-10 GHz wide.

Intensity conventions: |A|^2 integrates to the pulse energy in arbitrary
units; shapes here are normalized to unit peak intensity at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid. Defaults resolve a ~2 ns pulse delayed by ~20 ns
    with room for instrument-response tails on both sides."""
    dt_s: float = 50e-12
    n: int = 8192
    t_start_s: float = -102.4e-9

    def __post_init__(self):
        if self.dt_s <= 0 or self.n < 16:
            raise ValueError("need dt > 0 and at least 16 samples")
        if self.n & (self.n - 1):
            raise ValueError("sample count must be a power of two")

    @property
    def times_s(self) -> np.ndarray:
        return self.t_start_s + self.dt_s * np.arange(self.n)

    @property
    def span_s(self) -> float:
        return self.dt_s * self.n

    @property
    def frequencies_hz(self) -> np.ndarray:
        """FFT bin frequencies (two-sided, fftshift order not applied)."""
        return np.fft.fftfreq(self.n, self.dt_s)

    @property
    def nyquist_hz(self) -> float:
        return 0.5 / self.dt_s


@dataclass(frozen=True)
class PulseEnvelope:
    """Baseband samples plus the carrier they ride on.

    carrier_detuning_hz is measured from the hyperfine centroid; the physical
    optical frequency of bin nu is centroid + carrier_detuning + nu.
    """
    grid: TimeGrid
    field: np.ndarray
    carrier_detuning_hz: float

    def __post_init__(self):
        f = np.asarray(self.field, dtype=complex)
        if f.shape != (self.grid.n,):
            raise ValueError(f"field must have shape ({self.grid.n},)")
        object.__setattr__(self, "field", f)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.field) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.intensity) * self.grid.dt_s)

    def normalized_peak(self) -> "PulseEnvelope":
        peak = np.max(np.abs(self.field))
        if peak == 0:
            raise ValueError("empty field")
        return PulseEnvelope(self.grid, self.field / peak, self.carrier_detuning_hz)

    def shifted_carrier(self, new_detuning_hz: float) -> "PulseEnvelope":
        return PulseEnvelope(self.grid, self.field, new_detuning_hz)


def _require_span(grid: TimeGrid, fwhm_s: float):
    # Delays accumulated in the cell must stay on-grid; 20 pulse widths of
    # headroom is the contract.
    if grid.span_s < 20.0 * fwhm_s:
        raise ValueError(f"grid span {grid.span_s:.3g} s too short for a pulse of "
                         f"intensity FWHM {fwhm_s:.3g} s (need >= 20x)")


def gaussian_pulse(grid: TimeGrid, fwhm_intensity_s: float,
                   carrier_detuning_hz: float = 0.0,
                   center_s: float = 0.0) -> PulseEnvelope:
    """Transform-limited Gaussian; intensity FWHM as given.

    The field st. dev. follows from I(t) = exp(-t^2/(2 sigma_I^2)) with
    sigma_I = fwhm / sqrt(8 ln 2) and |A| = sqrt(I). Time-bandwidth product
    (intensity FWHM x intensity spectral FWHM) is 2 ln2 / pi ~ 0.441.
    """
    if fwhm_intensity_s <= 0:
        raise ValueError("fwhm must be positive")
    _require_span(grid, fwhm_intensity_s)
    sigma_i = fwhm_intensity_s / np.sqrt(8.0 * np.log(2.0))
    t = grid.times_s - center_s
    field = np.exp(-t ** 2 / (4.0 * sigma_i ** 2)).astype(complex)
    return PulseEnvelope(grid, field, carrier_detuning_hz)


def exponential_pulse(grid: TimeGrid, lifetime_s: float,
                      carrier_detuning_hz: float = 0.0,
                      start_s: float = 0.0) -> PulseEnvelope:
    """One-sided exponential decay: spontaneous-emission wavepacket.

    Field ~ exp(-t / 2 tau) for t >= start so the intensity decays with the
    radiative lifetime tau; the spectrum is Lorentzian with intensity FWHM
    1 / (2 pi tau).
    """
    if lifetime_s <= 0:
        raise ValueError("lifetime must be positive")
    _require_span(grid, lifetime_s * np.log(2.0))
    t = grid.times_s - start_s
    field = np.where(t >= 0.0, np.exp(-t / (2.0 * lifetime_s)), 0.0).astype(complex)
    return PulseEnvelope(grid, field, carrier_detuning_hz)


@dataclass(frozen=True)
class EmissionModel:
    """Spectral model of the source, laser or quantum dot.

    kind="gaussian_laser": transform-limited Gaussian of spectral intensity
    FWHM bandwidth_hz, no jitter, no companion line.

    kind="qd_two_component": lifetime-limited exponential wavepacket whose
    center jitters slowly against the nominal carrier with Gaussian spread
    sigma_inhomogeneous_hz (so the time-averaged spectrum is the Voigt profile
    seen in a slow scan), plus a spectrally detached companion at
    side_offset_hz carrying side_weight of the counts. Distinct emission
    events carry no mutual coherence, so the companion is mixed in intensity
    downstream, never added in field.
    """
    kind: str = "qd_two_component"
    lifetime_s: float = 1.52e-9
    sigma_inhomogeneous_hz: float = 357.8e6
    side_offset_hz: float = -24.0e9
    side_weight: float = 0.18
    bandwidth_hz: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian_laser", "qd_two_component"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "gaussian_laser":
            if not self.bandwidth_hz or self.bandwidth_hz <= 0:
                raise ValueError("laser source needs a positive bandwidth")
        else:
            if self.lifetime_s <= 0:
                raise ValueError("lifetime must be positive")
            if not (0.0 <= self.side_weight < 1.0):
                raise ValueError("side weight must sit in [0, 1)")
            if self.sigma_inhomogeneous_hz < 0:
                raise ValueError("inhomogeneous width must be non-negative")

    @classmethod
    def laser(cls, bandwidth_hz: float = 220e6) -> "EmissionModel":
        return cls(kind="gaussian_laser", bandwidth_hz=bandwidth_hz,
                   sigma_inhomogeneous_hz=0.0, side_weight=0.0)

    @classmethod
    def quantum_dot(cls, lifetime_s: float = 1.52e-9,
                    sigma_inhomogeneous_hz: float = 357.8e6,
                    side_offset_hz: float = -24.0e9,
                    side_weight: float = 0.18) -> "EmissionModel":
        return cls(kind="qd_two_component", lifetime_s=lifetime_s,
                   sigma_inhomogeneous_hz=sigma_inhomogeneous_hz,
                   side_offset_hz=side_offset_hz, side_weight=side_weight)

    @property
    def lorentzian_fwhm_hz(self) -> float:
        if self.kind == "gaussian_laser":
            return 0.0
        return 1.0 / (TWO_PI * self.lifetime_s)

    @property
    def jitter_sigma_hz(self) -> float:
        return 0.0 if self.kind == "gaussian_laser" else self.sigma_inhomogeneous_hz

    def components(self, carrier_detuning_hz: float):
        """(center detuning, intensity weight) of each spectral component."""
        if self.kind == "gaussian_laser" or self.side_weight == 0.0:
            return [(carrier_detuning_hz, 1.0)]
        return [(carrier_detuning_hz, 1.0 - self.side_weight),
                (carrier_detuning_hz + self.side_offset_hz, self.side_weight)]

    def realization(self, grid: TimeGrid, detuning_hz: float) -> PulseEnvelope:
        """Single emission event at a definite center frequency, unit energy."""
        if self.kind == "gaussian_laser":
            fwhm_t = 2.0 * np.log(2.0) / (np.pi * self.bandwidth_hz)
            pulse = gaussian_pulse(grid, fwhm_t, detuning_hz)
        else:
            pulse = exponential_pulse(grid, self.lifetime_s, detuning_hz)
        return PulseEnvelope(grid, pulse.field / np.sqrt(pulse.energy), detuning_hz)


def jitter_nodes(model: EmissionModel, n_nodes: int = 21):
    """Gauss-Hermite nodes/weights for averaging over the slow center jitter.

    Returns (offsets_hz, weights) with weights summing to 1. The physical
    variable is the emitter detuning x ~ N(0, sigma^2); GH quadrature in
    x = sqrt(2) sigma u absorbs the Gaussian measure.
    """
    if model.jitter_sigma_hz == 0.0:
        return np.zeros(1), np.ones(1)
    u, w = np.polynomial.hermite.hermgauss(n_nodes)
    offsets = np.sqrt(2.0) * model.jitter_sigma_hz * u
    weights = w / np.sqrt(np.pi)
    return offsets, weights / weights.sum()
