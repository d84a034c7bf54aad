"""Frequency-domain pulse propagation through the cell and the observables
read off the transmitted intensity profiles.

The chain mirrors the measurement: build the emitted envelope, multiply its
spectrum by the cell transfer function, average intensities over the slow
emitter jitter (Gauss-Hermite nodes) and over the spectral components of the
source, convolve with the timing-jitter and detector-response Gaussians, and
compare against the same pulse sent through the vapor-free path. Transmission
is the energy ratio of the two paths; delay is the arrival-time difference
under a selectable estimator.

Detunings: functions suffixed _com take centroid-relative values; the scan
front ends accept the scan convention whose zero is the F=4 -> 6^2P_1/2
transition and convert through the table.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from .atomic import TransitionTable
from .envelopes import EmissionModel, PulseEnvelope, TimeGrid, jitter_nodes
from .medium import (ComplexSpectrum, CouplingModel, VaporConditions,
                     number_density_m3, transfer_function, vacuum_spectrum)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class InstrumentResponse:
    """Gaussian timing blurs applied to intensity profiles (not to fields)."""
    sigma_jitter_s: float = 1.0e-9
    sigma_detector_s: float = 200e-12

    def __post_init__(self):
        if self.sigma_jitter_s < 0 or self.sigma_detector_s < 0:
            raise ValueError("instrument sigmas must be non-negative")


@dataclass(frozen=True)
class DelayEstimate:
    delay_s: float
    method: str
    multimodal: bool


@dataclass(frozen=True)
class TransmittedPulse:
    """Jitter-averaged intensity profiles of the cell and reference paths.

    component_intensities holds the per-spectral-component cell-path
    profiles (same order as EmissionModel.components), already weighted;
    their sum equals cell_intensity.
    """
    grid: TimeGrid
    cell_intensity: np.ndarray
    reference_intensity: np.ndarray
    component_intensities: tuple
    transmission: float


@dataclass(frozen=True)
class ScanPoint:
    scan_detuning_hz: float
    transmission: float
    delay_s: float
    fwhm_s: float
    multimodal: bool


@dataclass(frozen=True)
class TemperaturePoint:
    temperature_k: float
    transmission: float
    delay_s: float
    fwhm_s: float
    multimodal: bool


# --- core transforms ------------------------------------------------------

def propagate(pulse: PulseEnvelope, spectrum: ComplexSpectrum,
              min_coverage: float = 0.9999) -> PulseEnvelope:
    """Apply a transfer function to the pulse in the frequency domain.

    The pulse's FFT bins live at carrier_detuning + fftfreq; the spectrum must
    cover at least min_coverage of the spectral energy at those detunings.
    """
    spec = np.fft.fft(pulse.field)
    bins = pulse.carrier_detuning_hz + pulse.grid.frequencies_hz
    inside = (bins >= spectrum.grid_start_hz) & (bins <= spectrum.grid_stop_hz)
    power = np.abs(spec) ** 2
    total = power.sum()
    if total == 0.0:
        raise ValueError("cannot propagate an empty pulse")
    coverage = power[inside].sum() / total
    if coverage < min_coverage:
        raise ValueError(f"transfer function covers {coverage:.6f} of the spectral "
                         f"energy, below the required {min_coverage}")
    out = np.fft.ifft(spec * spectrum.sample(bins))
    return PulseEnvelope(pulse.grid, out, pulse.carrier_detuning_hz)


def cell_spectrum(pulse: PulseEnvelope, cond: VaporConditions, table: TransitionTable,
                  coupling: CouplingModel = CouplingModel(),
                  include_doppler: bool = True) -> ComplexSpectrum:
    """Transfer function evaluated exactly on the pulse's own FFT bins."""
    bins = np.sort(pulse.carrier_detuning_hz + pulse.grid.frequencies_hz)
    return transfer_function(bins, cond, table, coupling, include_doppler)


def instrument_convolve(intensity: np.ndarray, grid: TimeGrid,
                        instrument: InstrumentResponse) -> np.ndarray:
    """Blur an intensity profile with the two response Gaussians in turn."""
    out = np.asarray(intensity, dtype=float)
    for sigma in (instrument.sigma_jitter_s, instrument.sigma_detector_s):
        if sigma == 0.0:
            continue
        half = int(np.ceil(8.0 * sigma / grid.dt_s))
        t = grid.dt_s * np.arange(-half, half + 1)
        kernel = np.exp(-t ** 2 / (2.0 * sigma ** 2))
        kernel /= kernel.sum()
        out = np.convolve(out, kernel, mode="same")
    return out


def transmission(cell_intensity: np.ndarray, reference_intensity: np.ndarray) -> float:
    """Ratio of integrated counts between the two paths (shared grid)."""
    ref = float(np.sum(reference_intensity))
    if ref <= 0.0:
        raise ValueError("reference profile carries no energy")
    return float(np.sum(cell_intensity)) / ref


# --- arrival-time estimators ----------------------------------------------

def _parabolic_refine(y: np.ndarray, i: int) -> float:
    """Sub-bin offset of a local maximum from a 3-point parabola, in bins."""
    if i <= 0 or i >= y.size - 1:
        return 0.0
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if denom >= 0.0:
        return 0.0
    return 0.5 * (y[i - 1] - y[i + 1]) / denom


def _is_multimodal(intensity: np.ndarray) -> bool:
    top = float(intensity.max())
    if top <= 0.0:
        return False
    peaks, _ = find_peaks(intensity, height=0.05 * top, prominence=0.02 * top)
    return peaks.size > 1


def arrival_time_s(intensity: np.ndarray, grid: TimeGrid, method: str = "peak") -> float:
    """Arrival time of a single profile by the selected estimator."""
    y = np.asarray(intensity, dtype=float)
    if not np.any(y > 0.0):
        raise ValueError("flat profile has no arrival time")
    if method == "peak":
        i = int(np.argmax(y))
        return float(grid.times_s[i] + _parabolic_refine(y, i) * grid.dt_s)
    if method == "centroid":
        return float(np.sum(grid.times_s * y) / np.sum(y))
    raise ValueError(f"unknown arrival estimator {method!r}")


def delay(cell_intensity: np.ndarray, reference_intensity: np.ndarray,
          grid: TimeGrid, method: str = "peak") -> DelayEstimate:
    """Signed arrival-time difference cell minus reference."""
    cell = np.asarray(cell_intensity, dtype=float)
    ref = np.asarray(reference_intensity, dtype=float)
    if method in ("peak", "centroid"):
        value = arrival_time_s(cell, grid, method) - arrival_time_s(ref, grid, method)
    elif method == "cross_correlation":
        if not (np.any(cell > 0) and np.any(ref > 0)):
            raise ValueError("flat profile has no arrival time")
        corr = np.correlate(cell, ref, mode="full")
        i = int(np.argmax(corr))
        lag = i - (ref.size - 1) + _parabolic_refine(corr, i)
        value = float(lag * grid.dt_s)
    else:
        raise ValueError(f"unknown delay method {method!r}")
    return DelayEstimate(value, method, _is_multimodal(cell))


def profile_fwhm_s(intensity: np.ndarray, grid: TimeGrid) -> float:
    """Intensity FWHM around the global maximum, linearly interpolated."""
    y = np.asarray(intensity, dtype=float)
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    if half <= 0.0:
        raise ValueError("flat profile has no width")

    def cross(start, step):
        j = start
        while 0 <= j + step < y.size and y[j + step] >= half:
            j += step
        k = j + step
        if k < 0 or k >= y.size:
            return float(grid.times_s[j])
        frac = (y[j] - half) / (y[j] - y[k])
        return float(grid.times_s[j] + frac * step * grid.dt_s)

    return cross(i, +1) - cross(i, -1)


# --- jitter-averaged pipeline ----------------------------------------------

def emission_transfer_grid(model: EmissionModel, carrier_detuning_com_hz: float,
                           grid: TimeGrid, n_jitter_nodes: int = 21,
                           step_hz: float = 1e6):
    """Uniform detuning grid wide enough for every component and jitter node."""
    offsets, _ = jitter_nodes(model, n_jitter_nodes)
    centers = [c for c, _ in model.components(carrier_detuning_com_hz)]
    lo = min(centers) + offsets.min() - grid.nyquist_hz - 2.0 * step_hz
    hi = max(centers) + offsets.max() + grid.nyquist_hz + 2.0 * step_hz
    n = int(np.ceil((hi - lo) / step_hz)) + 1
    return lo + step_hz * np.arange(n)


def inhomogeneous_average(model: EmissionModel, carrier_detuning_com_hz: float,
                          spectrum: ComplexSpectrum, grid: TimeGrid,
                          n_jitter_nodes: int = 21):
    """Per-component intensity profiles averaged over the emitter jitter.

    Returns a list of weighted intensity arrays, one per spectral component
    of the model; the composite profile is their sum. Each emission event is
    propagated as a field and only then averaged in intensity, with the same
    jitter offset applied to every component (the jitter is common mode).
    """
    offsets, weights = jitter_nodes(model, n_jitter_nodes)
    profiles = []
    for center, comp_weight in model.components(carrier_detuning_com_hz):
        acc = np.zeros(grid.n)
        for off, w in zip(offsets, weights):
            event = model.realization(grid, center + off)
            out = propagate(event, spectrum)
            acc += w * out.intensity
        profiles.append(comp_weight * acc)
    return profiles


def transmit(model: EmissionModel, carrier_detuning_com_hz: float,
             cond: VaporConditions, table: TransitionTable,
             coupling: CouplingModel = CouplingModel(),
             grid: TimeGrid = TimeGrid(),
             instrument: InstrumentResponse = InstrumentResponse(),
             n_jitter_nodes: int = 21,
             include_doppler: bool = True,
             h_step_hz: float = 1e6) -> TransmittedPulse:
    """Full two-path pipeline at a fixed carrier detuning (centroid-relative)."""
    nu = emission_transfer_grid(model, carrier_detuning_com_hz, grid,
                                n_jitter_nodes, h_step_hz)
    h_cell = transfer_function(nu, cond, table, coupling, include_doppler)
    h_ref = vacuum_spectrum(nu, cond)

    parts = inhomogeneous_average(model, carrier_detuning_com_hz, h_cell, grid,
                                  n_jitter_nodes)
    ref_parts = inhomogeneous_average(model, carrier_detuning_com_hz, h_ref, grid,
                                      n_jitter_nodes)
    cell = instrument_convolve(np.sum(parts, axis=0), grid, instrument)
    ref = instrument_convolve(np.sum(ref_parts, axis=0), grid, instrument)
    parts = tuple(instrument_convolve(p, grid, instrument) for p in parts)
    return TransmittedPulse(grid, cell, ref, parts, transmission(cell, ref))


def scan_point(model: EmissionModel, scan_detuning_hz: float,
               cond: VaporConditions, table: TransitionTable,
               coupling: CouplingModel = CouplingModel(),
               grid: TimeGrid = TimeGrid(),
               instrument: InstrumentResponse = InstrumentResponse(),
               n_jitter_nodes: int = 21,
               include_doppler: bool = True,
               delay_method: str = "peak") -> ScanPoint:
    """One pipeline evaluation; detuning in the F=4 scan convention."""
    com = table.detuning_f4_to_com(scan_detuning_hz)
    res = transmit(model, com, cond, table, coupling, grid, instrument,
                   n_jitter_nodes, include_doppler)
    est = delay(res.cell_intensity, res.reference_intensity, grid, delay_method)
    width = profile_fwhm_s(res.cell_intensity, grid)
    return ScanPoint(scan_detuning_hz, res.transmission, est.delay_s, width,
                     est.multimodal)


def scan_detuning(model: EmissionModel, start_hz: float, stop_hz: float, step_hz: float,
                  cond: VaporConditions, table: TransitionTable,
                  coupling: CouplingModel = CouplingModel(),
                  grid: TimeGrid = TimeGrid(),
                  instrument: InstrumentResponse = InstrumentResponse(),
                  n_jitter_nodes: int = 21,
                  include_doppler: bool = True,
                  delay_method: str = "peak") -> list:
    """Sweep the carrier across the line; detunings in the F=4 convention."""
    if step_hz <= 0:
        raise ValueError("step must be positive")
    n = int(np.floor((stop_hz - start_hz) / step_hz + 0.5)) + 1
    points = start_hz + step_hz * np.arange(n)
    return [scan_point(model, float(d), cond, table, coupling, grid, instrument,
                       n_jitter_nodes, include_doppler, delay_method)
            for d in points]


def delay_vs_temperature(model: EmissionModel, temperatures_k,
                         cond: VaporConditions, table: TransitionTable,
                         coupling: CouplingModel = CouplingModel(),
                         grid: TimeGrid = TimeGrid(),
                         instrument: InstrumentResponse = InstrumentResponse(),
                         n_jitter_nodes: int = 21,
                         include_doppler: bool = True,
                         delay_method: str = "peak",
                         carrier_com_hz: float | None = None) -> list:
    """Delay/transmission vs cell temperature, carrier parked at the
    ground-hyperfine midpoint unless overridden."""
    if carrier_com_hz is None:
        carrier_com_hz = table.midpoint_offset_hz
    out = []
    for t_k in temperatures_k:
        c_t = replace(cond, temperature_k=float(t_k))
        res = transmit(model, carrier_com_hz, c_t, table, coupling, grid,
                       instrument, n_jitter_nodes, include_doppler)
        est = delay(res.cell_intensity, res.reference_intensity, grid, delay_method)
        width = profile_fwhm_s(res.cell_intensity, grid)
        out.append(TemperaturePoint(float(t_k), res.transmission, est.delay_s,
                                    width, est.multimodal))
    return out


def calibrate_density(target_delay_s: float,
                      model: EmissionModel,
                      cond: VaporConditions, table: TransitionTable,
                      coupling: CouplingModel = CouplingModel(),
                      grid: TimeGrid = TimeGrid(),
                      instrument: InstrumentResponse = InstrumentResponse(),
                      n_jitter_nodes: int = 21,
                      delay_method: str = "peak",
                      carrier_com_hz: float | None = None,
                      span: float = 6.0):
    """Find the density override that reproduces a measured delay.

    Solves delay(density) = target over density in [nominal/span, nominal*span]
    by bisection on the log axis; the delay is monotone in density here.
    Returns (density_m3, achieved_delay_s).
    """
    if carrier_com_hz is None:
        carrier_com_hz = table.midpoint_offset_hz
    nominal = number_density_m3(replace(cond, density_override_m3=None))

    def excess(log_rho):
        trial = replace(cond, density_override_m3=float(np.exp(log_rho)))
        res = transmit(model, carrier_com_hz, trial, table, coupling, grid,
                       instrument, n_jitter_nodes)
        est = delay(res.cell_intensity, res.reference_intensity, grid, delay_method)
        return est.delay_s - target_delay_s

    lo, hi = np.log(nominal / span), np.log(nominal * span)
    root = brentq(excess, lo, hi, xtol=1e-4)
    density = float(np.exp(root))
    achieved = excess(root) + target_delay_s
    return density, float(achieved)
