"""Linear response of the hot cesium vapor column.

The susceptibility is a sum of four complex Lorentzians, one per hyperfine
component,

    chi(nu) = i * (rho / (hbar eps0)) * sum_j  p * w_F(j) * S_j * mu_D1^2
                                               ------------------------------
                                               (gamma_j - i * Delta_j)

with Delta_j = 2 pi (nu - nu_j) the angular detuning from line j, w_F the
thermal ground-state populations (7/16 and 9/16), S_j the transition
strength, and p the isotropic polarization average (1/3: the reduced dipole
is normalized through the total decay rate, i.e. summed over emission
polarizations, while a weak probe of fixed polarization couples to one third
of that on an unoriented ensemble). gamma_j defaults to the half-width
S_j*Gamma_D1/2; the full-rate convention is available as a switch. Doppler
broadening turns each Lorentzian into the complex Voigt function, evaluated
with the scaled complex error function.

Spectral/sign conventions (shared with cspulse.propagation): envelope spectra
use the e^{-2 pi i nu t} analysis kernel and positive bins sit blue of the
carrier. A pure delay t_d is the transfer function e^{-2 pi i nu t_d}, and the
cell's transfer function over a column of length L is

    H(nu) = exp[ -(kL/2) * (Im chi + i Re chi) - 2 pi i nu L / c ],

so |H| = exp(-k L Im chi / 2) <= 1 and the phase carries the dispersion on
top of the vacuum term -2 pi nu L/c. Between the two ground manifolds
d(Re chi)/d(nu) > 0 (normal dispersion) and the group delay exceeds L/c.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c, epsilon_0, hbar, k as k_B
from scipy.special import wofz

from .atomic import TransitionTable

_TORR = 133.32236842105263   # Pa
_ATM = 101325.0              # Pa

TWO_PI = 2.0 * np.pi


# --- vapor pressure -------------------------------------------------------

def _pressure_alcock_pa(t_k: float) -> float:
    # Piecewise fit in atm; melting point 301.65 K separates the branches.
    if t_k < 301.65:
        p_atm = 10.0 ** (4.711 - 3999.0 / t_k)
    else:
        p_atm = 10.0 ** (8.232 - 4062.0 / t_k - 1.3359 * np.log10(t_k))
    return p_atm * _ATM


def _pressure_taylor_langmuir_pa(t_k: float) -> float:
    # Fit in torr; solid branch below the melting point.
    if t_k < 301.65:
        log_p = -219.482 + 1088.676 / t_k - 0.08336185 * t_k + 94.88752 * np.log10(t_k)
    else:
        log_p = 8.22127 - 4006.048 / t_k - 0.00060194 * t_k - 0.19623 * np.log10(t_k)
    return 10.0 ** log_p * _TORR


VAPOR_PRESSURE_MODELS = {
    "alcock": _pressure_alcock_pa,
    "taylor_langmuir": _pressure_taylor_langmuir_pa,
}


@dataclass(frozen=True)
class VaporConditions:
    """Cell state. Temperatures in K, lengths in m.

    density_override_m3 short-circuits the vapor-pressure model (used for
    calibration against a measured delay). doppler_sigma_override_hz forces
    the 1-sigma Doppler width; 0.0 disables Doppler broadening entirely.
    """
    temperature_k: float
    cell_length_m: float = 0.10
    pressure_model: str = "alcock"
    density_override_m3: float | None = None
    doppler_sigma_override_hz: float | None = None

    def __post_init__(self):
        if not (250.0 <= self.temperature_k <= 500.0):
            raise ValueError(f"temperature {self.temperature_k} K outside the modeled 250-500 K range")
        if self.cell_length_m <= 0:
            raise ValueError("cell length must be positive")
        if self.pressure_model not in VAPOR_PRESSURE_MODELS:
            raise ValueError(f"unknown pressure model {self.pressure_model!r}; "
                             f"have {sorted(VAPOR_PRESSURE_MODELS)}")
        if self.density_override_m3 is not None and self.density_override_m3 < 0:
            raise ValueError("density override must be non-negative")


@dataclass(frozen=True)
class CouplingModel:
    """Knobs of the light-matter coupling entering chi (and the Lindblad route).

    ground_weight_f3/f4: thermal populations of the two ground manifolds.
    polarization_factor: isotropic average of the dipole coupling, 1/3 for a
    fixed probe polarization on an unoriented ensemble.
    gamma_convention: "half" puts S_j*Gamma_D1/2 in the Lorentzian denominator,
    "full" puts S_j*Gamma_D1.
    """
    ground_weight_f3: float = 7.0 / 16.0
    ground_weight_f4: float = 9.0 / 16.0
    polarization_factor: float = 1.0 / 3.0
    gamma_convention: str = "half"

    def __post_init__(self):
        if self.gamma_convention not in ("half", "full"):
            raise ValueError("gamma_convention must be 'half' or 'full'")
        for w in (self.ground_weight_f3, self.ground_weight_f4, self.polarization_factor):
            if w < 0:
                raise ValueError("coupling weights must be non-negative")

    def ground_weight(self, f: int) -> float:
        return self.ground_weight_f3 if f == 3 else self.ground_weight_f4


def vapor_pressure_pa(t_k: float, model: str = "alcock") -> float:
    try:
        fn = VAPOR_PRESSURE_MODELS[model]
    except KeyError:
        raise ValueError(f"unknown pressure model {model!r}") from None
    if not (250.0 <= t_k <= 500.0):
        raise ValueError(f"temperature {t_k} K outside the modeled 250-500 K range")
    return fn(t_k)


def number_density_m3(cond: VaporConditions) -> float:
    if cond.density_override_m3 is not None:
        return cond.density_override_m3
    p = vapor_pressure_pa(cond.temperature_k, cond.pressure_model)
    return p / (k_B * cond.temperature_k)


def doppler_sigma_hz(cond: VaporConditions, table: TransitionTable) -> float:
    """1-sigma Doppler width of the optical line (1D thermal velocity)."""
    if cond.doppler_sigma_override_hz is not None:
        return cond.doppler_sigma_override_hz
    v_sigma = np.sqrt(k_B * cond.temperature_k / table.mass_kg)
    return table.centroid_frequency_hz * v_sigma / c


def _line_prefactors(cond: VaporConditions, table: TransitionTable,
                     coupling: CouplingModel):
    """Per-line (weight, gamma) with weight in rad/s: rho*p*w*S*mu^2/(hbar eps0)."""
    rho = number_density_m3(cond)
    base = rho * table.dipole_cm ** 2 / (hbar * epsilon_0)
    gfac = 0.5 if coupling.gamma_convention == "half" else 1.0
    out = []
    for ln in table.lines:
        s = float(ln.strength)
        weight = base * coupling.polarization_factor * coupling.ground_weight(ln.f_ground) * s
        gamma = gfac * s * table.gamma_d1_rad_s
        out.append((ln.offset_hz, weight, gamma))
    return out


def chi_bare(detuning_com_hz, cond: VaporConditions, table: TransitionTable,
             coupling: CouplingModel = CouplingModel()) -> np.ndarray:
    """Susceptibility without Doppler broadening (stationary atoms)."""
    nu = np.asarray(detuning_com_hz, dtype=float)
    chi = np.zeros(nu.shape, dtype=complex)
    for offset, weight, gamma in _line_prefactors(cond, table, coupling):
        delta = TWO_PI * (nu - offset)
        chi += 1j * weight / (gamma - 1j * delta)
    return chi


def chi_doppler(detuning_com_hz, cond: VaporConditions, table: TransitionTable,
                coupling: CouplingModel = CouplingModel(),
                method: str = "faddeeva") -> np.ndarray:
    """Doppler-broadened susceptibility.

    method="faddeeva" evaluates the complex Voigt profile through wofz;
    method="quadrature" convolves chi_bare against the 1D velocity Gaussian
    by trapezoidal quadrature over +-6 sigma (slow; kept as an independent
    cross-check of the closed form).
    """
    sigma_hz = doppler_sigma_hz(cond, table)
    if sigma_hz == 0.0:
        return chi_bare(detuning_com_hz, cond, table, coupling)
    nu = np.asarray(detuning_com_hz, dtype=float)
    sig = TWO_PI * sigma_hz

    if method == "faddeeva":
        chi = np.zeros(nu.shape, dtype=complex)
        for offset, weight, gamma in _line_prefactors(cond, table, coupling):
            delta = TWO_PI * (nu - offset)
            z = (delta + 1j * gamma) / (sig * np.sqrt(2.0))
            chi += 1j * weight * np.sqrt(np.pi / 2.0) / sig * wofz(z)
        return chi
    if method == "quadrature":
        # Direct convolution against the velocity Gaussian, adaptive per point.
        # The Lorentzian core (gamma ~ MHz) is far narrower than sigma, so the
        # integrand needs the v=0 and v=delta break points spelled out.
        from scipy.integrate import quad

        norm = 1.0 / (sig * np.sqrt(TWO_PI))
        flat = np.atleast_1d(nu).ravel()
        chi = np.zeros(flat.shape, dtype=complex)
        for offset, weight, gamma in _line_prefactors(cond, table, coupling):
            for i, f in enumerate(flat):
                delta = TWO_PI * (f - offset)

                def integrand(v, part):
                    val = 1j * weight / (gamma - 1j * v) \
                        * norm * np.exp(-(delta - v) ** 2 / (2.0 * sig ** 2))
                    return val.real if part == "re" else val.imag

                lim = abs(delta) + 8.0 * sig
                pts = [0.0, delta] if abs(delta) < lim else [0.0]
                re, _ = quad(integrand, -lim, lim, args=("re",), points=pts, limit=200)
                im, _ = quad(integrand, -lim, lim, args=("im",), points=pts, limit=200)
                chi[i] += re + 1j * im
        return chi.reshape(np.shape(nu))
    raise ValueError(f"unknown method {method!r}")


# --- transfer function ----------------------------------------------------

@dataclass(frozen=True)
class ComplexSpectrum:
    """Complex response on a uniform detuning grid (Hz, centroid-relative)."""
    grid_start_hz: float
    grid_step_hz: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1D array")
        if self.grid_step_hz <= 0:
            raise ValueError("grid step must be positive")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_grid(cls, detuning_com_hz, values) -> "ComplexSpectrum":
        """Build from an explicit ascending grid, which must be uniform."""
        f = np.asarray(detuning_com_hz, dtype=float)
        if f.ndim != 1 or f.size < 2:
            raise ValueError("need at least two grid points")
        steps = np.diff(f)
        step = (f[-1] - f[0]) / (f.size - 1)
        if step <= 0 or not np.allclose(steps, step, rtol=1e-9, atol=abs(step) * 1e-9):
            raise ValueError("detuning grid must be uniform and ascending")
        return cls(float(f[0]), float(step), values)

    @property
    def detunings_hz(self) -> np.ndarray:
        return self.grid_start_hz + self.grid_step_hz * np.arange(self.values.size)

    @property
    def grid_stop_hz(self) -> float:
        return self.grid_start_hz + self.grid_step_hz * (self.values.size - 1)

    def sample(self, detuning_com_hz) -> np.ndarray:
        """Linear interpolation onto arbitrary detunings (exact on the nodes)."""
        f = np.asarray(detuning_com_hz, dtype=float)
        grid = self.detunings_hz
        re = np.interp(f, grid, self.values.real)
        im = np.interp(f, grid, self.values.imag)
        return re + 1j * im

    def covers(self, detuning_com_hz) -> bool:
        f = np.asarray(detuning_com_hz, dtype=float)
        return bool(f.min() >= self.grid_start_hz and f.max() <= self.grid_stop_hz)


def transfer_function(detuning_com_hz, cond: VaporConditions, table: TransitionTable,
                      coupling: CouplingModel = CouplingModel(),
                      include_doppler: bool = True,
                      include_vacuum_phase: bool = True) -> ComplexSpectrum:
    """Field transfer function of the cell on the given uniform detuning grid."""
    nu = np.asarray(detuning_com_hz, dtype=float)
    chi = (chi_doppler if include_doppler else chi_bare)(nu, cond, table, coupling)
    k = table.wavenumber_rad_m
    L = cond.cell_length_m
    exponent = -(k * L / 2.0) * (chi.imag + 1j * chi.real)
    if include_vacuum_phase:
        exponent = exponent - 1j * TWO_PI * nu * L / c
    return ComplexSpectrum.from_grid(nu, np.exp(exponent))


def vacuum_spectrum(detuning_com_hz, cond: VaporConditions) -> ComplexSpectrum:
    """Transfer function of the same geometric path with the vapor removed."""
    nu = np.asarray(detuning_com_hz, dtype=float)
    return ComplexSpectrum.from_grid(nu, np.exp(-1j * TWO_PI * nu * cond.cell_length_m / c))


def optical_depth(detuning_com_hz, cond: VaporConditions, table: TransitionTable,
                  coupling: CouplingModel = CouplingModel(),
                  include_doppler: bool = True) -> np.ndarray:
    """-2 ln|H| = k L Im chi, the single-pass intensity optical depth."""
    nu = np.asarray(detuning_com_hz, dtype=float)
    chi = (chi_doppler if include_doppler else chi_bare)(nu, cond, table, coupling)
    return table.wavenumber_rad_m * cond.cell_length_m * chi.imag


def group_delay_s(detuning_com_hz, cond: VaporConditions, table: TransitionTable,
                  coupling: CouplingModel = CouplingModel(),
                  include_doppler: bool = True,
                  df_hz: float = 1e6) -> np.ndarray:
    """Analytic-in-all-but-the-derivative group delay L/c + (kL/2) dRe chi/domega.

    Central difference with step df_hz; used by the narrowband consistency
    checks, not by the pulse pipeline (which measures arrival times).
    """
    nu = np.asarray(detuning_com_hz, dtype=float)
    fn = chi_doppler if include_doppler else chi_bare
    hi = fn(nu + df_hz, cond, table, coupling).real
    lo = fn(nu - df_hz, cond, table, coupling).real
    dre = (hi - lo) / (2.0 * TWO_PI * df_hz)
    L = cond.cell_length_m
    return L / c + 0.5 * table.wavenumber_rad_m * L * dre
