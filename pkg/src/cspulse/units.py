"""Unit helpers.

Everything internal to the package is SI (Hz, s, m, K). The CLI and the
scenario files speak in the lab's units (GHz, ns, cm, degrees Celsius,
millilitres-normal of gas). Conversions live here so nothing else has to
remember the factors.
"""

from __future__ import annotations

GHZ = 1e9
MHZ = 1e6
NS = 1e-9
PS = 1e-12
CM = 1e-2

ZERO_CELSIUS_K = 273.15


def celsius_to_kelvin(t_c: float) -> float:
    return t_c + ZERO_CELSIUS_K


def kelvin_to_celsius(t_k: float) -> float:
    return t_k - ZERO_CELSIUS_K


def ghz(value_hz: float) -> float:
    """Express a frequency in GHz (for reports and CSV columns)."""
    return value_hz / GHZ


def ns(value_s: float) -> float:
    """Express a time in ns (for reports and CSV columns)."""
    return value_s / NS
