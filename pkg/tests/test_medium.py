"""Vapor density, susceptibility, and the cell transfer function."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import c

from cspulse.medium import (
    ComplexSpectrum,
    CouplingModel,
    VaporConditions,
    chi_bare,
    chi_doppler,
    doppler_sigma_hz,
    group_delay_s,
    number_density_m3,
    optical_depth,
    transfer_function,
    vacuum_spectrum,
    vapor_pressure_pa,
)

# Frozen densities, m^-3. Worked out by hand from the published pressure fits
# (atm respectively torr to Pa, then ideal gas) before the module existed.
DENSITIES = [
    (298.15, "alcock", 4.892004e16),
    (383.15, "alcock", 2.894343e19),
    (413.15, "alcock", 1.428522e20),
    (413.15, "taylor_langmuir", 1.353877e20),
]


@pytest.mark.parametrize("t_k, model, rho", DENSITIES)
def test_number_density_frozen(t_k, model, rho):
    cond = VaporConditions(temperature_k=t_k, pressure_model=model)
    assert number_density_m3(cond) == pytest.approx(rho, rel=1e-5)


def test_density_override_short_circuits():
    cond = VaporConditions(temperature_k=383.15, density_override_m3=5e18)
    assert number_density_m3(cond) == 5e18


def test_pressure_models_disagree_at_high_t():
    a = vapor_pressure_pa(413.15, "alcock")
    tl = vapor_pressure_pa(413.15, "taylor_langmuir")
    assert a > tl  # the alcock fit runs a few percent hotter here
    assert a / tl == pytest.approx(1.0551, rel=1e-3)


def test_conditions_validation():
    with pytest.raises(ValueError, match="250-500"):
        VaporConditions(temperature_k=200.0)
    with pytest.raises(ValueError, match="cell length"):
        VaporConditions(temperature_k=300.0, cell_length_m=0.0)
    with pytest.raises(ValueError, match="pressure model"):
        VaporConditions(temperature_k=300.0, pressure_model="antoine")
    with pytest.raises(ValueError, match="unknown pressure model"):
        vapor_pressure_pa(300.0, "antoine")


def test_coupling_validation():
    with pytest.raises(ValueError, match="gamma_convention"):
        CouplingModel(gamma_convention="double")
    with pytest.raises(ValueError, match="non-negative"):
        CouplingModel(polarization_factor=-0.1)


def test_doppler_sigma_frozen(table):
    # sigma = f0 * sqrt(kB T / m) / c at 110 C
    cond = VaporConditions(temperature_k=383.15)
    assert doppler_sigma_hz(cond, table) == pytest.approx(173.0631614e6, rel=1e-8)


@given(st.floats(min_value=260.0, max_value=490.0))
def test_doppler_sigma_scales_sqrt_t(t_k):
    from cspulse.atomic import transition_table

    tab = transition_table()
    ref = doppler_sigma_hz(VaporConditions(temperature_k=300.0), tab)
    val = doppler_sigma_hz(VaporConditions(temperature_k=t_k), tab)
    assert val / ref == pytest.approx(np.sqrt(t_k / 300.0), rel=1e-12)


def test_doppler_override_disables_broadening(table):
    cond = VaporConditions(temperature_k=383.15, doppler_sigma_override_hz=0.0)
    nu = np.linspace(-20e9, 20e9, 101)
    assert np.array_equal(chi_doppler(nu, cond, table), chi_bare(nu, cond, table))


def test_chi_bare_line_shape(table):
    cond = VaporConditions(temperature_k=383.15)
    nu = np.linspace(-30e9, 30e9, 2001)
    chi = chi_bare(nu, cond, table)
    # absorptive part positive everywhere, dispersive part odd-ish around
    # each line, and the response decays far from the manifold
    assert np.all(chi.imag > 0)
    assert abs(chi[0]) < 1e-2 * np.max(np.abs(chi))
    # peak absorption at the stationary-atom line positions (grid-limited)
    peak = nu[np.argmax(chi.imag)]
    offsets = [ln.offset_hz for ln in table.lines]
    assert min(abs(peak - o) for o in offsets) < 60e6


def test_faddeeva_matches_quadrature(table):
    cond = VaporConditions(temperature_k=383.15)
    nu = np.linspace(-8e9, 8e9, 9)
    fast = chi_doppler(nu, cond, table, method="faddeeva")
    slow = chi_doppler(nu, cond, table, method="quadrature")
    scale = np.max(np.abs(fast))
    assert np.max(np.abs(fast - slow)) / scale < 5e-7
    with pytest.raises(ValueError, match="unknown method"):
        chi_doppler(nu, cond, table, method="series")


@pytest.mark.parametrize("t_k", [298.15, 383.15, 413.15])
def test_transfer_function_passive(table, t_k):
    cond = VaporConditions(temperature_k=t_k)
    nu = np.linspace(-60e9, 60e9, 4001)
    h = transfer_function(nu, cond, table)
    assert np.max(np.abs(h.values)) <= 1.0 + 1e-12
    # far wings transparent
    assert abs(h.values[0]) > 0.99


def test_optical_depth_identity_and_frozen_value(table):
    cond = VaporConditions(temperature_k=413.15)
    nu = np.linspace(-10e9, 10e9, 101)
    h = transfer_function(nu, cond, table, include_vacuum_phase=False)
    od = optical_depth(nu, cond, table)
    # on resonance |H| underflows at this temperature; check where it exists
    keep = od < 60.0
    assert keep.sum() > 50
    assert np.allclose(od[keep], -2.0 * np.log(np.abs(h.values[keep])),
                       rtol=1e-12, atol=1e-12)
    od_mid = optical_depth(np.array([table.midpoint_offset_hz]), cond, table)[0]
    assert od_mid == pytest.approx(0.22796, rel=1e-4)


def test_group_delay_at_midpoint_frozen(table):
    # 140 C, carrier between the ground manifolds; the two pressure fits
    # bracket the published 15.0 ns slow-light delay
    nu = np.array([table.midpoint_offset_hz])
    a = group_delay_s(nu, VaporConditions(temperature_k=413.15), table)[0]
    tl = group_delay_s(
        nu, VaporConditions(temperature_k=413.15, pressure_model="taylor_langmuir"),
        table)[0]
    assert a == pytest.approx(15.4490e-9, rel=1e-3)
    assert tl == pytest.approx(14.6591e-9, rel=1e-3)


def test_group_delay_far_detuned_approaches_vacuum(table):
    cond = VaporConditions(temperature_k=413.15)
    far = group_delay_s(np.array([900e9]), cond, table)[0]
    assert far == pytest.approx(cond.cell_length_m / c, rel=0.02)


def test_vacuum_spectrum_is_pure_phase(table):
    cond = VaporConditions(temperature_k=383.15)
    nu = np.linspace(-5e9, 5e9, 11)
    h = vacuum_spectrum(nu, cond)
    assert np.allclose(np.abs(h.values), 1.0, atol=1e-15)
    # linear phase slope = L/c group delay
    phase = np.unwrap(np.angle(h.values))
    slope = (phase[-1] - phase[0]) / (nu[-1] - nu[0]) / (-2 * np.pi)
    assert slope == pytest.approx(cond.cell_length_m / c, rel=1e-9)


def test_complex_spectrum_grid_validation():
    with pytest.raises(ValueError, match="uniform"):
        ComplexSpectrum.from_grid([0.0, 1.0, 3.0], [1, 1, 1])
    with pytest.raises(ValueError, match="ascending|uniform"):
        ComplexSpectrum.from_grid([3.0, 2.0, 1.0], [1, 1, 1])
    with pytest.raises(ValueError, match="two grid points"):
        ComplexSpectrum.from_grid([1.0], [1])
    with pytest.raises(ValueError, match="non-empty"):
        ComplexSpectrum(0.0, 1.0, np.array([]))
    with pytest.raises(ValueError, match="step"):
        ComplexSpectrum(0.0, -1.0, np.array([1.0]))


def test_complex_spectrum_sampling():
    grid = np.linspace(-2e9, 2e9, 5)
    vals = np.array([1, 2, 3, 4, 5], dtype=complex) * (1 + 1j)
    spec = ComplexSpectrum.from_grid(grid, vals)
    assert np.allclose(spec.sample(grid), vals)
    assert spec.sample(np.array([-1.5e9]))[0] == pytest.approx(1.5 * (1 + 1j))
    assert spec.covers(np.array([-2e9, 2e9]))
    assert not spec.covers(np.array([2.1e9]))
    assert np.allclose(spec.detunings_hz, grid)
