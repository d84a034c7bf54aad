"""Density-matrix co-propagation: the nonperturbative cross-check of the
linear transfer-function model.

One ground state |1> and the two excited hyperfine levels |2>, |3> of a
single ground manifold evolve under

    d rho / d tau = -(i/hbar) [H, rho] + sum_i 2 gamma_i D[sigma_1i] rho,

with H/hbar = -Delta_2 |2><2| - Delta_3 |3><3| - (Omega_2/2)(|2><1| + h.c.)
- (Omega_3/2)(|3><1| + h.c.) in the frame rotating at the pulse carrier, and
D[c] rho = c rho c^dag - (1/2){c^dag c, rho}. The decay-rate convention
matches the susceptibility route: each line's population decays at
2 gamma_i = S_i Gamma_D1 (so its coherence damps at gamma_i, the half-width in
the Lorentzian denominator there).

The field advances along the cell in the retarded frame tau = t - z/c,

    dE/dz = i k n_atoms / eps0 * (mu_2 rho_21 + mu_3 rho_31).

With the physical field and polarization each split as half envelope plus
conjugate, the polarization envelope is twice n <mu sigma_eg>, which cancels
the half in the usual slowly-varying-envelope source ik P / (2 eps0).
Effective dipoles mu_i = mu_D1 sqrt(p w_F S_i) are shared with the chi route,
so the two models agree analytically in the weak-field linear regime and any
residual disagreement measures discretization error.

Scheme: second-order semi-implicit midpoint in tau (three fixed-point
iterations on the implicit stage; the right-hand side is traceless and the
populations are stored as reals, so the trace is preserved to rounding) and
classical RK4 in z, with the slab count sized by the dispersive phase the
cell imposes. A numba kernel sweeps each z-column over the full time window
with the density matrix unrolled into its six independent components; the
plain-numpy right-hand side below documents the algebra and anchors the
kernel's unit tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.constants import epsilon_0, hbar

from .atomic import TransitionTable
from .envelopes import PulseEnvelope
from .medium import CouplingModel, VaporConditions, doppler_sigma_hz, number_density_m3

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ThreeLevelSystem:
    """Rotating-frame parameters of the one-ground, two-excited model.

    Detunings are angular (rad/s), positive when the line lies above the
    pulse carrier. Dipoles are the effective per-line couplings (C m);
    decays are the coherence half-widths gamma_i (rad/s).
    """
    delta_2: float
    delta_3: float
    dipole_2: float
    dipole_3: float
    gamma_2: float
    gamma_3: float
    density_m3: float
    wavenumber_rad_m: float

    def __post_init__(self):
        if self.gamma_2 <= 0 or self.gamma_3 <= 0:
            raise ValueError("decay rates must be positive")
        if self.density_m3 < 0:
            raise ValueError("density must be non-negative")

    @classmethod
    def from_table(cls, table: TransitionTable, cond: VaporConditions,
                   carrier_detuning_com_hz: float,
                   f_ground: int = 4,
                   coupling: CouplingModel = CouplingModel()) -> "ThreeLevelSystem":
        """Build the two-line system for one ground manifold.

        The effective dipole folds in the polarization average and the
        thermal weight of the chosen manifold so that the weak-field response
        equals the chi route restricted to the same two lines.
        """
        lines = table.subset(f_ground).lines
        if len(lines) != 2:
            raise ValueError(f"expected two lines from F={f_ground}")
        lo, hi = lines
        scale = coupling.polarization_factor * coupling.ground_weight(f_ground)
        gfac = 0.5 if coupling.gamma_convention == "half" else 1.0

        def dip(ln):
            return table.dipole_cm * np.sqrt(scale * float(ln.strength))

        def gam(ln):
            return gfac * float(ln.strength) * table.gamma_d1_rad_s

        return cls(
            delta_2=TWO_PI * (lo.offset_hz - carrier_detuning_com_hz),
            delta_3=TWO_PI * (hi.offset_hz - carrier_detuning_com_hz),
            dipole_2=dip(lo), dipole_3=dip(hi),
            gamma_2=gam(lo), gamma_3=gam(hi),
            density_m3=number_density_m3(cond),
            wavenumber_rad_m=table.wavenumber_rad_m,
        )

    def with_doppler_shift(self, shift_rad_s: float) -> "ThreeLevelSystem":
        return ThreeLevelSystem(
            delta_2=self.delta_2 + shift_rad_s, delta_3=self.delta_3 + shift_rad_s,
            dipole_2=self.dipole_2, dipole_3=self.dipole_3,
            gamma_2=self.gamma_2, gamma_3=self.gamma_3,
            density_m3=self.density_m3, wavenumber_rad_m=self.wavenumber_rad_m)

    def hamiltonian_rad_s(self, rabi_2: complex, rabi_3: complex) -> np.ndarray:
        """H/hbar in the rotating frame; Hermitian by construction."""
        h = np.zeros((3, 3), dtype=np.complex128)
        h[1, 1] = -self.delta_2
        h[2, 2] = -self.delta_3
        h[1, 0] = -0.5 * rabi_2
        h[2, 0] = -0.5 * rabi_3
        h[0, 1] = np.conj(h[1, 0])
        h[0, 2] = np.conj(h[2, 0])
        return h


def lindblad_rhs(rho: np.ndarray, system: ThreeLevelSystem,
                 field_v_m: complex) -> np.ndarray:
    """d rho/d tau for one atom in a field of the given complex amplitude.

    Reference implementation in plain numpy; the numba kernel reproduces it
    to machine precision (tested), and this one documents the algebra.
    """
    rabi_2 = system.dipole_2 * field_v_m / hbar
    rabi_3 = system.dipole_3 * field_v_m / hbar
    h = system.hamiltonian_rad_s(rabi_2, rabi_3)
    out = -1j * (h @ rho - rho @ h)
    for i, g in ((1, system.gamma_2), (2, system.gamma_3)):
        rate = 2.0 * g
        # D[|1><i|]: feeds population i -> 1 and damps the i-coherences.
        out[0, 0] += rate * rho[i, i]
        out[i, i] -= rate * rho[i, i]
        out[i, 0] -= 0.5 * rate * rho[i, 0]
        out[0, i] -= 0.5 * rate * rho[0, i]
        j = 2 if i == 1 else 1
        out[i, j] -= 0.5 * rate * rho[i, j]
        out[j, i] -= 0.5 * rate * rho[j, i]
    return out


@njit(cache=True, fastmath=True)
def _march_column(field, dtau, d2, d3, g2, g3, mu2, mu3, source_pref):
    """Advance all atoms at one z through the whole retarded-time window.

    field: complex E(tau) driving this column. Returns the polarization
    source P(tau) = source_pref * (mu2*rho21 + mu3*rho31) per atom and the
    worst trace deviation seen, for the hygiene checks. Hermiticity is built
    in: only the three (real) populations and three coherences are stored,
    so the trace can only drift by rounding in the population updates.
    """
    n = field.size
    r00 = 1.0
    r11 = 0.0
    r22 = 0.0
    r10 = 0.0 + 0.0j
    r20 = 0.0 + 0.0j
    r21 = 0.0 + 0.0j
    source = np.empty(n, dtype=np.complex128)
    worst_trace = 0.0
    half = 0.5 * dtau
    drive = -0.5 / hbar
    gg = g2 + g3
    d23 = d2 - d3
    for m in range(n):
        source[m] = source_pref * (mu2 * r10 + mu3 * r20)
        if m == n - 1:
            break
        e_mid = 0.5 * (field[m] + field[m + 1])
        g2c = drive * mu2 * e_mid  # H_21/hbar
        g3c = drive * mu3 * e_mid  # H_31/hbar
        b00 = r00
        b11 = r11
        b22 = r22
        b10 = r10
        b20 = r20
        b21 = r21
        # semi-implicit midpoint: rhobar = rho + (dtau/2) F(rhobar), fixed iters
        for _ in range(3):
            p2 = 2.0 * g2 * b11
            p3 = 2.0 * g3 * b22
            q2 = 2.0 * (np.conj(g2c) * b10).imag
            q3 = 2.0 * (np.conj(g3c) * b20).imag
            f10 = -1j * (-d2 * b10 + g2c * (b00 - b11) - g3c * np.conj(b21)) - g2 * b10
            f20 = -1j * (-d3 * b20 + g3c * (b00 - b22) - g2c * b21) - g3 * b20
            f21 = -1j * (d23 * b21 + g3c * np.conj(b10) - np.conj(g2c) * b20) - gg * b21
            b00 = r00 + half * (q2 + q3 + p2 + p3)
            b11 = r11 + half * (-q2 - p2)
            b22 = r22 + half * (-q3 - p3)
            b10 = r10 + half * f10
            b20 = r20 + half * f20
            b21 = r21 + half * f21
        r00 = 2.0 * b00 - r00
        r11 = 2.0 * b11 - r11
        r22 = 2.0 * b22 - r22
        r10 = 2.0 * b10 - r10
        r20 = 2.0 * b20 - r20
        r21 = 2.0 * b21 - r21
        dev = abs(r00 + r11 + r22 - 1.0)
        if dev > worst_trace:
            worst_trace = dev
    return source, worst_trace


@dataclass(frozen=True)
class CopropagationResult:
    output: PulseEnvelope
    max_trace_deviation: float
    z_steps: int


def copropagate(pulse: PulseEnvelope, cond: VaporConditions,
                system: ThreeLevelSystem, z_steps: int = 96,
                check_energy: bool = True) -> CopropagationResult:
    """March the field through the cell against the atomic response.

    The z integrator is classical RK4 over the polarization source (four
    atomic sweeps per slab). Near a bare line the accumulated dispersive
    phase across the cell can reach tens of radians, which makes the naive
    midpoint scheme weakly unstable in z (its growth factor exceeds 1 for
    purely oscillatory steps); RK4 is contractive there and its per-step
    energy error is O(theta^6). Size z_steps so the per-slab phase stays
    below ~0.3 rad. Intended for the weak-field regime (the cross-model
    oracle); a running energy check flags growth beyond 1e-3 as divergence.
    """
    if z_steps < 64:
        raise ValueError("need at least 64 z steps")
    dz = cond.cell_length_m / z_steps
    dtau = pulse.grid.dt_s
    # envelope convention doubles the polarization: P_env = 2 n <mu sigma>
    pref = 1j * system.wavenumber_rad_m * system.density_m3 / epsilon_0
    field = pulse.field.astype(np.complex128).copy()
    e_in = float(np.sum(np.abs(field) ** 2))
    if e_in == 0.0:
        raise ValueError("cannot propagate an empty pulse")
    worst = 0.0

    def source(f):
        return _march_column(f, dtau, system.delta_2, system.delta_3,
                             system.gamma_2, system.gamma_3,
                             system.dipole_2, system.dipole_3, pref)

    for _ in range(z_steps):
        k1, t1 = source(field)
        k2, t2 = source(field + 0.5 * dz * k1)
        k3, t3 = source(field + 0.5 * dz * k2)
        k4, t4 = source(field + dz * k3)
        field = field + (dz / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        worst = max(worst, t1, t2, t3, t4)
        if check_energy and np.sum(np.abs(field) ** 2) > e_in * (1.0 + 1e-3):
            raise FloatingPointError("field energy grew beyond the divergence bound")
    out = PulseEnvelope(pulse.grid, field, pulse.carrier_detuning_hz)
    return CopropagationResult(out, worst, z_steps)


def doppler_average_copropagate(pulse: PulseEnvelope, cond: VaporConditions,
                                system: ThreeLevelSystem, table: TransitionTable,
                                velocity_nodes: int = 9,
                                z_steps: int = 96) -> np.ndarray:
    """Intensity after averaging the atomic response over thermal velocities.

    Each Gauss-Hermite node shifts both excited levels by the same Doppler
    offset; node weights sum to 1. Returns the averaged output intensity.
    """
    if velocity_nodes < 1:
        raise ValueError("need at least one velocity node")
    sigma_hz = doppler_sigma_hz(cond, table)
    if velocity_nodes == 1 or sigma_hz == 0.0:
        return copropagate(pulse, cond, system, z_steps).output.intensity
    u, w = np.polynomial.hermite.hermgauss(velocity_nodes)
    shifts = TWO_PI * np.sqrt(2.0) * sigma_hz * u
    weights = w / np.sqrt(np.pi)
    weights = weights / weights.sum()
    acc = np.zeros(pulse.grid.n)
    for s, wt in zip(shifts, weights):
        shifted = system.with_doppler_shift(float(s))
        acc += wt * copropagate(pulse, cond, shifted, z_steps).output.intensity
    return acc


def _scan_point_budget(det_com_hz: float, cond: VaporConditions, sub_table,
                       coupling: CouplingModel, bandwidth_hz: float):
    """Worst dispersive phase across the cell and worst group delay over the
    band the pulse occupies, both from the bare susceptibility."""
    from .medium import chi_bare

    probe = det_com_hz + np.linspace(-5.0, 5.0, 4001) * bandwidth_hz
    chi = chi_bare(probe, cond, sub_table, coupling)
    half_kl = 0.5 * sub_table.wavenumber_rad_m * cond.cell_length_m
    sigma = bandwidth_hz / np.sqrt(8.0 * np.log(2.0))
    live = np.abs(probe - det_com_hz) < 4.0 * sigma
    phase_max = float(half_kl * np.max(np.abs(chi[live])))
    tau = half_kl * np.gradient(chi.real, TWO_PI * probe)
    delay_max = float(np.max(tau[live]))
    return phase_max, delay_max


def transmission_vs_chi_route(scan_detunings_com_hz, cond: VaporConditions,
                              table: TransitionTable,
                              coupling: CouplingModel = CouplingModel(),
                              f_ground: int = 4,
                              grid=None, bandwidth_hz: float = 220e6,
                              z_steps: int = 96,
                              max_phase_per_step: float = 0.25):
    """Transmission from both models over a scan, Doppler off, weak field.

    Returns a list of (detuning_com_hz, t_chi, t_lindblad, z_steps_used).
    Both routes see only the two lines of the chosen ground manifold and both
    energies are summed over the same finite time window, so tail truncation
    cancels: the chi route runs on a 4x longer grid and keeps only the shared
    window, which removes its circular wrap-around. Per point, the slab count
    is set by two budgets: an accuracy one (per-slab phase below
    max_phase_per_step across the band the pulse occupies) and a stability
    one (per-slab |response| below 2.0 across ALL grid bins, because rounding
    seeds every bin and RK4 only contracts inside |z| < 2.8; the bare-line
    resonant optical depth is what this bounds, so hot-cell densities are out
    of reach for this march and the cross-check belongs at a density where
    the budget stays modest). The window grows with the group delay so the
    slowed pulse stays inside it. Pass an explicit grid to pin the window.
    """
    from .envelopes import TimeGrid, gaussian_pulse
    from .medium import chi_bare, transfer_function
    from .propagation import propagate

    sub_table = table.subset(f_ground)
    fwhm_s = 2.0 * np.log(2.0) / (np.pi * bandwidth_hz)
    half_kl = 0.5 * table.wavenumber_rad_m * cond.cell_length_m
    rows = []
    for det in np.atleast_1d(scan_detunings_com_hz):
        det = float(det)
        phase_max, delay_max = _scan_point_budget(det, cond, sub_table,
                                                  coupling, bandwidth_hz)
        if grid is None:
            # floor of 40.96 ns satisfies the 20x-FWHM envelope rule at 220 MHz
            span_needed = max(20.5 * fwhm_s, 20e-9 + 1.4 * max(delay_max, 0.0))
            n = 8192
            while n * 2.5e-12 < span_needed and n < 65536:
                n *= 2
            if n * 2.5e-12 < span_needed:
                raise ValueError(f"group delay {delay_max:.2e} s needs a window "
                                 "beyond 163.84 ns; lower the density")
            base = TimeGrid(dt_s=2.5e-12, n=n, t_start_s=-10e-9)
        else:
            base = grid
        chi_bins = chi_bare(det + base.frequencies_hz, cond, sub_table, coupling)
        stab = float(half_kl * np.max(np.abs(chi_bins)))
        steps = max(z_steps,
                    int(np.ceil(phase_max / max_phase_per_step)),
                    int(np.ceil(stab / 2.0)))

        # scale far below saturation: peak Rabi at 1e-4 of the D1 decay rate
        sys3 = ThreeLevelSystem.from_table(table, cond, det, f_ground, coupling)
        mu = max(sys3.dipole_2, sys3.dipole_3)
        e_peak = 1e-4 * table.gamma_d1_rad_s * hbar / mu
        weak = PulseEnvelope(
            base, gaussian_pulse(base, fwhm_s, det).field * e_peak, det)
        res = copropagate(weak, cond, sys3, steps)
        t_lin = res.output.energy / weak.energy

        ext = TimeGrid(dt_s=base.dt_s, n=4 * base.n, t_start_s=base.t_start_s)
        weak_ext = PulseEnvelope(
            ext, gaussian_pulse(ext, fwhm_s, det).field * e_peak, det)
        unsorted_bins = det + ext.frequencies_hz
        order = np.argsort(unsorted_bins)
        h = transfer_function(unsorted_bins[order], cond, sub_table, coupling,
                              include_doppler=False, include_vacuum_phase=False)
        out_ext = propagate(weak_ext, h)
        t_chi = (np.sum(np.abs(out_ext.field[:base.n]) ** 2)
                 / np.sum(np.abs(weak_ext.field[:base.n]) ** 2))
        rows.append((det, float(t_chi), float(t_lin), steps))
    return rows
