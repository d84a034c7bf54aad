"""Time grids, pulse shapes, and the source spectral model."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cspulse.envelopes import (
    EmissionModel,
    PulseEnvelope,
    TimeGrid,
    exponential_pulse,
    gaussian_pulse,
    jitter_nodes,
)

GRID = TimeGrid(dt_s=10e-12, n=4096, t_start_s=-10e-9)


def _fwhm(x, y):
    """Full width at half maximum with linear interpolation at the crossings."""
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    lo = np.flatnonzero(y[:k] < half)[-1]
    hi = k + np.flatnonzero(y[k:] < half)[0]
    x_lo = np.interp(half, [y[lo], y[lo + 1]], [x[lo], x[lo + 1]])
    x_hi = np.interp(half, [y[hi], y[hi - 1]], [x[hi], x[hi - 1]])
    return x_hi - x_lo


def test_grid_validation():
    with pytest.raises(ValueError, match="power of two"):
        TimeGrid(dt_s=1e-12, n=100)
    with pytest.raises(ValueError, match="dt > 0"):
        TimeGrid(dt_s=0.0, n=64)
    with pytest.raises(ValueError, match="16 samples"):
        TimeGrid(dt_s=1e-12, n=8)


def test_grid_axes():
    g = TimeGrid(dt_s=2e-12, n=64, t_start_s=-10e-12)
    t = g.times_s
    assert t[0] == -10e-12
    assert t[1] - t[0] == pytest.approx(2e-12)
    assert g.span_s == pytest.approx(128e-12)
    assert g.nyquist_hz == pytest.approx(250e9)
    assert np.array_equal(g.frequencies_hz, np.fft.fftfreq(64, 2e-12))


def test_envelope_shape_checked():
    with pytest.raises(ValueError, match="shape"):
        PulseEnvelope(GRID, np.zeros(7), 0.0)


def test_gaussian_pulse_widths():
    fwhm = 2.0e-9
    p = gaussian_pulse(GRID, fwhm)
    # measured intensity FWHM matches the request
    assert _fwhm(GRID.times_s, p.intensity) == pytest.approx(fwhm, abs=GRID.dt_s)
    # transform limit: intensity FWHM (time) x intensity FWHM (frequency)
    spec = np.fft.fftshift(np.abs(np.fft.fft(p.field)) ** 2)
    f = np.fft.fftshift(GRID.frequencies_hz)
    assert fwhm * _fwhm(f, spec) == pytest.approx(2 * np.log(2) / np.pi, rel=0.01)


def test_gaussian_pulse_center_and_carrier():
    p = gaussian_pulse(GRID, 1e-9, carrier_detuning_hz=3e9, center_s=5e-9)
    assert GRID.times_s[np.argmax(p.intensity)] == pytest.approx(5e-9, abs=GRID.dt_s)
    assert p.carrier_detuning_hz == 3e9


def test_exponential_pulse_lifetime():
    tau = 1.52e-9
    p = exponential_pulse(GRID, tau, start_s=0.0)
    t = GRID.times_s
    i = p.intensity
    assert np.all(i[t < 0] == 0.0)
    # intensity decays as exp(-t/tau)
    i0 = np.interp(1e-9, t, i)
    i1 = np.interp(1e-9 + tau, t, i)
    assert i1 / i0 == pytest.approx(np.exp(-1.0), rel=1e-6)


def test_span_guard():
    small = TimeGrid(dt_s=10e-12, n=64, t_start_s=0.0)
    with pytest.raises(ValueError, match="too short"):
        gaussian_pulse(small, 2e-9)
    with pytest.raises(ValueError, match="positive"):
        gaussian_pulse(GRID, -1e-9)


def test_energy_and_normalization():
    p = gaussian_pulse(GRID, 1e-9)
    sigma_i = 1e-9 / np.sqrt(8 * np.log(2))
    assert p.energy == pytest.approx(np.sqrt(2 * np.pi) * sigma_i, rel=1e-6)
    n = p.normalized_peak()
    assert np.max(np.abs(n.field)) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="empty"):
        PulseEnvelope(GRID, np.zeros(GRID.n), 0.0).normalized_peak()


@given(st.floats(min_value=-40e9, max_value=40e9))
def test_shifted_carrier_keeps_envelope(det):
    p = gaussian_pulse(GRID, 1e-9, carrier_detuning_hz=0.0)
    q = p.shifted_carrier(det)
    assert q.carrier_detuning_hz == det
    assert np.array_equal(q.field, p.field)


def test_emission_model_validation():
    with pytest.raises(ValueError, match="unknown source kind"):
        EmissionModel(kind="comb")
    with pytest.raises(ValueError, match="bandwidth"):
        EmissionModel(kind="gaussian_laser")
    with pytest.raises(ValueError, match="side weight"):
        EmissionModel.quantum_dot(side_weight=1.0)
    with pytest.raises(ValueError, match="lifetime"):
        EmissionModel.quantum_dot(lifetime_s=0.0)


def test_laser_model():
    m = EmissionModel.laser(bandwidth_hz=220e6)
    assert m.lorentzian_fwhm_hz == 0.0
    assert m.jitter_sigma_hz == 0.0
    assert m.components(5e9) == [(5e9, 1.0)]
    r = m.realization(GRID, 5e9)
    assert r.energy == pytest.approx(1.0, rel=1e-9)
    # spectral intensity FWHM equals the stated bandwidth
    spec = np.fft.fftshift(np.abs(np.fft.fft(r.field)) ** 2)
    f = np.fft.fftshift(GRID.frequencies_hz)
    assert _fwhm(f, spec) == pytest.approx(220e6, rel=0.01)


def test_quantum_dot_model():
    m = EmissionModel.quantum_dot()
    assert m.lorentzian_fwhm_hz == pytest.approx(1 / (2 * np.pi * 1.52e-9))
    assert m.jitter_sigma_hz == 357.8e6
    comps = m.components(0.0)
    assert [c for c, _ in comps] == [0.0, -24e9]
    assert [w for _, w in comps] == pytest.approx([0.82, 0.18])
    assert sum(w for _, w in comps) == pytest.approx(1.0)
    r = m.realization(GRID, 0.0)
    assert r.energy == pytest.approx(1.0, rel=1e-9)


def test_jitter_nodes_quadrature():
    m = EmissionModel.quantum_dot()
    offs, w = jitter_nodes(m, 21)
    assert len(offs) == 21 and len(w) == 21
    assert np.sum(w) == pytest.approx(1.0, rel=1e-12)
    # quadrature reproduces the Gaussian's first two moments
    assert np.sum(w * offs) == pytest.approx(0.0, abs=1e-3)
    assert np.sum(w * offs**2) == pytest.approx(m.jitter_sigma_hz**2, rel=1e-9)
    # a laser has no jitter: single node at zero
    offs_l, w_l = jitter_nodes(EmissionModel.laser(), 21)
    assert len(offs_l) == 1 and offs_l[0] == 0.0 and w_l[0] == 1.0
