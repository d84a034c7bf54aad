"""Cs-133 D1 line data: hyperfine transition table and detuning conventions.

The four hyperfine components F=3,4 -> F'=3,4 are placed about the line
centroid using degeneracy-weighted centers of mass, so the two exact
splittings (ground 9.192631770 GHz, excited 1.167680 GHz) fix all four
offsets. Transition strengths S_{F,F'} are exact rationals; each ground
manifold's strengths sum to one (branching closure), which the loader
enforces.

Detunings carry two conventions:

* internal: Hz relative to the D1 centroid ("com"), positive = blue;
* reported: Hz relative to the F=4 -> 6P1/2 centroid transition, the zero
  used on all scan axes.

The reduced dipole is defined through the spontaneous decay rate
(Gamma = omega^3 mu^2 / (3 pi eps0 hbar c^3)), which is how the 3.1822 e*a0
figure is normalized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from scipy.constants import c, physical_constants

_A0 = physical_constants["Bohr radius"][0]
_QE = physical_constants["elementary charge"][0]
_U = physical_constants["atomic mass constant"][0]

_DATA_FILE = "cs_d1_lines.json"


@dataclass(frozen=True)
class TransitionLine:
    f_ground: int
    f_excited: int
    strength: Fraction          # S_{F,F'}, dimensionless
    offset_hz: float            # line frequency minus D1 centroid

    def label(self) -> str:
        return f"F={self.f_ground} -> F'={self.f_excited}"


@dataclass(frozen=True)
class TransitionTable:
    lines: tuple[TransitionLine, ...]
    centroid_frequency_hz: float
    ground_splitting_hz: float
    excited_splitting_hz: float
    dipole_cm: float            # reduced D1 dipole, C*m
    gamma_d1_rad_s: float       # natural linewidth, angular
    mass_kg: float
    ground_weights: dict[int, Fraction]   # thermal ground-state populations

    @property
    def wavenumber_rad_m(self) -> float:
        return 2.0 * 3.141592653589793 * self.centroid_frequency_hz / c

    @property
    def f4_offset_hz(self) -> float:
        """Offset of the F=4 -> 6P1/2 centroid transition (the scan zero)."""
        return -float(self.ground_weights[3]) * self.ground_splitting_hz

    @property
    def midpoint_offset_hz(self) -> float:
        """Midpoint between the two ground-manifold centroid transitions."""
        f3 = float(self.ground_weights[4]) * self.ground_splitting_hz
        return 0.5 * (f3 + self.f4_offset_hz)

    def line(self, f_ground: int, f_excited: int) -> TransitionLine:
        for ln in self.lines:
            if ln.f_ground == f_ground and ln.f_excited == f_excited:
                return ln
        raise KeyError(f"no line F={f_ground} -> F'={f_excited}")

    def subset(self, f_ground: int) -> "TransitionTable":
        """Table restricted to one ground manifold (used by the two-excited-level checks)."""
        kept = tuple(ln for ln in self.lines if ln.f_ground == f_ground)
        if not kept:
            raise KeyError(f"no lines with F={f_ground}")
        return TransitionTable(
            lines=kept,
            centroid_frequency_hz=self.centroid_frequency_hz,
            ground_splitting_hz=self.ground_splitting_hz,
            excited_splitting_hz=self.excited_splitting_hz,
            dipole_cm=self.dipole_cm,
            gamma_d1_rad_s=self.gamma_d1_rad_s,
            mass_kg=self.mass_kg,
            ground_weights=dict(self.ground_weights),
        )

    def detuning_f4_to_com(self, detuning_hz):
        return detuning_hz + self.f4_offset_hz

    def detuning_com_to_f4(self, detuning_hz):
        return detuning_hz - self.f4_offset_hz

    def wavelength_m(self, detuning_com_hz: float) -> float:
        return c / (self.centroid_frequency_hz + detuning_com_hz)

    def detuning_com_from_wavelength(self, wavelength_m: float) -> float:
        return c / wavelength_m - self.centroid_frequency_hz


def _raw() -> dict:
    with resources.files("cspulse.data").joinpath(_DATA_FILE).open("r") as fh:
        return json.load(fh)


def transition_table() -> TransitionTable:
    """Load the D1 table and derive the four line offsets.

    Raises ValueError if the stored strengths violate branching closure.
    """
    raw = _raw()
    g_split = float(raw["ground_splitting_hz"])
    e_split = float(raw["excited_splitting_hz"])
    g_deg = {int(k): int(v) for k, v in raw["ground_degeneracies"].items()}
    e_deg = {int(k): int(v) for k, v in raw["excited_degeneracies"].items()}
    g_total = sum(g_deg.values())
    e_total = sum(e_deg.values())

    # Level positions relative to each manifold's degeneracy-weighted center.
    # Upper F lies above lower F in both manifolds.
    g_pos = {3: -Fraction(g_deg[4], g_total) * Fraction(g_split),
             4: +Fraction(g_deg[3], g_total) * Fraction(g_split)}
    e_pos = {3: -Fraction(e_deg[4], e_total) * Fraction(e_split),
             4: +Fraction(e_deg[3], e_total) * Fraction(e_split)}

    strengths: dict[tuple[int, int], Fraction] = {}
    lines = []
    for entry in raw["lines"]:
        fg, fe = int(entry["f_ground"]), int(entry["f_excited"])
        num, den = entry["strength"]
        s = Fraction(num, den)
        strengths[(fg, fe)] = s
        offset = float(e_pos[fe] - g_pos[fg])
        lines.append(TransitionLine(fg, fe, s, offset))

    for fg in (3, 4):
        total = sum(s for (g, _), s in strengths.items() if g == fg)
        if total != 1:
            raise ValueError(f"branching closure violated for F={fg}: sum S = {total}")

    gamma_d1 = 2.0 * 3.141592653589793 * float(raw["natural_linewidth_rad_s_over_2pi_hz"])
    dipole = float(raw["reduced_dipole_ea0"]) * _QE * _A0
    weights = {f: Fraction(g_deg[f], g_total) for f in (3, 4)}

    return TransitionTable(
        lines=tuple(sorted(lines, key=lambda ln: ln.offset_hz)),
        centroid_frequency_hz=float(raw["centroid_frequency_hz"]),
        ground_splitting_hz=g_split,
        excited_splitting_hz=e_split,
        dipole_cm=dipole,
        gamma_d1_rad_s=gamma_d1,
        mass_kg=float(raw["atomic_mass_u"]) * _U,
        ground_weights=weights,
    )


def table_rows(table: TransitionTable) -> list[dict]:
    """Rows for the CLI's table printer (and the machine-readable dump)."""
    rows = []
    for ln in table.lines:
        rows.append({
            "transition": ln.label(),
            "strength": f"{ln.strength.numerator}/{ln.strength.denominator}",
            "offset_ghz": ln.offset_hz / 1e9,
            "offset_f4_ghz": table.detuning_com_to_f4(ln.offset_hz) / 1e9,
            "wavelength_nm": table.wavelength_m(ln.offset_hz) * 1e9,
            "partial_rate_mhz_2pi": float(ln.strength) * table.gamma_d1_rad_s
                                    / (2 * 3.141592653589793) / 1e6,
        })
    return rows
