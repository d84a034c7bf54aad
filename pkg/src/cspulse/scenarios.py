"""Scenario files: validation, unit conversion, and execution.

A scenario is a JSON object naming one computation kind plus its physical
inputs in lab units (GHz, ns, degrees C, cm, mln; internal code is SI).
Validation is strict: unknown keys, wrong types, or out-of-range values
raise ScenarioError naming the full key path, and nothing is computed or
written afterwards. The same schema backs the shipped presets and the
direct CLI subcommands, which assemble a scenario dict from flags.

execute() is pure compute: it returns named tables (header + rows) and a
summary dict, leaving all file I/O to the caller so that a failed run can
never leave partial outputs behind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Any

import numpy as np

from .atomic import TransitionTable, transition_table
from .envelopes import EmissionModel, TimeGrid
from .fitting import Histogram1D, decompose_side_peak
from .medium import CouplingModel, VaporConditions
from .propagation import (InstrumentResponse, delay, delay_vs_temperature,
                          profile_fwhm_s, scan_detuning, transmit)
from .tuning import (DEFAULT_CONFIG, QDTuningState, TuningConfig, apply_gas,
                     apply_laser)
from .units import GHZ, MHZ, NS, PS, CM, celsius_to_kelvin, kelvin_to_celsius

SCENARIO_KINDS = ("scan", "delay_sweep", "propagate", "decompose",
                  "gas_curve", "ablation_curve")


class ScenarioError(ValueError):
    """Scenario file failed validation; message names the offending key."""


@dataclass(frozen=True)
class Table:
    """One CSV-bound output: column names plus row tuples (pre-formatting)."""
    name: str
    header: tuple[str, ...]
    rows: tuple[tuple, ...]


@dataclass(frozen=True)
class RunResult:
    tables: tuple[Table, ...]
    summary: dict


# ------------------------------------------------------------ validation

_MISSING = object()


class _Reader:
    """Mapping reader that tracks consumed keys and reports full paths."""

    def __init__(self, mapping: dict, path: str = ""):
        if not isinstance(mapping, dict):
            raise ScenarioError(f"scenario key '{path or '<root>'}' must be an object")
        self._map = mapping
        self._path = path
        self._seen: set[str] = set()

    def _name(self, key: str) -> str:
        return f"{self._path}.{key}" if self._path else key

    def take(self, key: str, kind, default=_MISSING):
        self._seen.add(key)
        if key not in self._map:
            if default is _MISSING:
                raise ScenarioError(f"missing scenario key '{self._name(key)}'")
            return default
        value = self._map[key]
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(f"scenario key '{self._name(key)}' must be a number")
            value = float(value)
            if not math.isfinite(value):
                raise ScenarioError(f"scenario key '{self._name(key)}' must be finite")
            return value
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioError(f"scenario key '{self._name(key)}' must be an integer")
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise ScenarioError(f"scenario key '{self._name(key)}' must be true or false")
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ScenarioError(f"scenario key '{self._name(key)}' must be a string")
            return value
        raise AssertionError(f"unsupported kind {kind!r}")

    def sub(self, key: str, required: bool = True) -> "_Reader | None":
        self._seen.add(key)
        if key not in self._map:
            if required:
                raise ScenarioError(f"missing scenario key '{self._name(key)}'")
            return None
        return _Reader(self._map[key], self._name(key))

    def close(self):
        extra = sorted(set(self._map) - self._seen)
        if extra:
            raise ScenarioError(f"unknown scenario key '{self._name(extra[0])}'")

    def positive(self, key: str, kind=float, default=_MISSING):
        value = self.take(key, kind, default)
        if value is not None and value <= 0:
            raise ScenarioError(f"scenario key '{self._name(key)}' must be positive")
        return value


def _grid_from(reader: _Reader | None) -> TimeGrid:
    if reader is None:
        return TimeGrid()
    dt_ps = reader.positive("dt_ps", default=50.0)
    span_ns = reader.positive("span_ns", default=409.6)
    start_ns = reader.take("start_ns", float, default=-span_ns / 4.0)
    reader.close()
    n = 1 << max(4, math.ceil(math.log2(span_ns * 1e3 / dt_ps)))
    return TimeGrid(dt_s=dt_ps * PS, n=n, t_start_s=start_ns * NS)


def _pulse_from(reader: _Reader) -> EmissionModel:
    kind = reader.take("kind", str)
    if kind == "laser":
        bandwidth = reader.positive("bandwidth_MHz", default=220.0)
        reader.close()
        return EmissionModel.laser(bandwidth_hz=bandwidth * MHZ)
    if kind == "quantum_dot":
        lifetime = reader.positive("lifetime_ns", default=1.52)
        sigma_ib = reader.take("sigma_ib_MHz", float, default=357.8)
        offset = reader.take("side_peak_offset_GHz", float, default=-24.0)
        weight = reader.take("side_peak_weight", float, default=0.18)
        reader.take("side_peak_weight_note", str, default="")
        reader.close()
        if sigma_ib < 0:
            raise ScenarioError("scenario key 'pulse.sigma_ib_MHz' must be non-negative")
        if not 0.0 <= weight < 1.0:
            raise ScenarioError("scenario key 'pulse.side_peak_weight' must sit in [0, 1)")
        return EmissionModel.quantum_dot(
            lifetime_s=lifetime * NS, sigma_inhomogeneous_hz=sigma_ib * MHZ,
            side_offset_hz=offset * GHZ, side_weight=weight)
    raise ScenarioError("scenario key 'pulse.kind' must be 'laser' or 'quantum_dot'")


def _medium_from(reader: _Reader) -> VaporConditions:
    temperature = reader.take("temperature_C", float)
    length = reader.positive("cell_length_cm", default=10.0)
    model = reader.take("pressure_model", str, default="alcock")
    override = reader.take("density_override_m3", float, default=None)
    doppler = reader.take("doppler", bool, default=True)
    try:
        return VaporConditions(
            temperature_k=celsius_to_kelvin(temperature),
            cell_length_m=length * CM,
            pressure_model=model,
            density_override_m3=override,
            doppler_sigma_override_hz=None if doppler else 0.0)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def _instrument_from(reader: _Reader | None) -> InstrumentResponse:
    if reader is None:
        return InstrumentResponse()
    jitter = reader.take("sigma_jitter_ns", float, default=1.0)
    detector = reader.take("sigma_detector_ps", float, default=200.0)
    reader.close()
    if jitter < 0 or detector < 0:
        raise ScenarioError("scenario key 'instrument.*' sigmas must be non-negative")
    return InstrumentResponse(sigma_jitter_s=jitter * NS,
                              sigma_detector_s=detector * PS)


def _temperature_axis(reader: _Reader) -> np.ndarray:
    start = reader.take("start_C", float)
    stop = reader.take("stop_C", float)
    step = reader.positive("step_C")
    reader.close()
    if stop < start:
        raise ScenarioError("scenario key 'temperatures_C.stop_C' must be >= start_C")
    n = int(math.floor((stop - start) / step + 0.5)) + 1
    return start + step * np.arange(n)


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: resolved domain objects plus the input echo."""
    name: str
    kind: str
    seed: int
    raw: dict
    medium: VaporConditions | None = None
    pulse: EmissionModel | None = None
    grid: TimeGrid | None = None
    instrument: InstrumentResponse | None = None
    convention: str = "f4"
    delay_method: str = "peak"
    jitter_nodes: int = 21
    scan_start_hz: float = 0.0
    scan_stop_hz: float = 0.0
    scan_step_hz: float = 0.0
    temperatures_c: tuple[float, ...] = ()
    carrier: str | float = "midpoint"
    detuning_hz: float = 0.0
    tuning_state: QDTuningState | None = None
    tuning_config: TuningConfig | None = None
    tuning_steps: int = 0
    tuning_amount: float = 0.0
    tuning_power_mw: float = 0.0
    tuning_duration_s: float = 0.0
    tuning_noise: bool = True


def parse_scenario(data: dict) -> Scenario:
    """Validate a scenario object; raises ScenarioError naming bad keys."""
    root = _Reader(data)
    name = root.take("name", str)
    kind = root.take("kind", str)
    seed = root.take("seed", int, default=0)
    root.take("description", str, default="")
    if kind not in SCENARIO_KINDS:
        raise ScenarioError(
            f"scenario key 'kind' must be one of {', '.join(SCENARIO_KINDS)}")

    if kind in ("gas_curve", "ablation_curve"):
        tun = root.sub("tuning")
        wavelength = tun.positive("wavelength_nm", default=894.95)
        slope = tun.positive("gas_slope_GHz_per_mln", default=11.75)
        a = tun.positive("ablation_a", default=None)
        b = tun.positive("ablation_b", default=0.5)
        noise = tun.take("granularity_noise", bool, default=True)
        steps = tun.positive("steps", int, default=20)
        amount = tun.positive("amount_mln_per_step", default=1.0)
        power = tun.positive("power_mW", default=1.0)
        duration = tun.positive("duration_s_per_step", default=30.0)
        budget = tun.positive("gas_budget_mln", default=DEFAULT_CONFIG.gas_budget_mln)
        tun.close()
        root.close()
        state_kwargs = dict(wavelength_m=wavelength * 1e-9,
                            gas_slope_hz_per_mln=slope * GHZ,
                            ablation_b=b)
        if a is not None:
            state_kwargs["ablation_a"] = a
        try:
            state = QDTuningState(**state_kwargs)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
        config = TuningConfig(gas_budget_mln=budget)
        return Scenario(name=name, kind=kind, seed=seed, raw=data,
                        tuning_state=state, tuning_config=config,
                        tuning_steps=steps, tuning_amount=amount,
                        tuning_power_mw=power, tuning_duration_s=duration,
                        tuning_noise=noise)

    medium = _medium_from(root)
    pulse = _pulse_from(root.sub("pulse"))
    grid = _grid_from(root.sub("grid", required=False))
    instrument = _instrument_from(root.sub("instrument", required=False))
    convention = root.take("detuning_convention", str, default="f4")
    if convention not in ("f4", "com"):
        raise ScenarioError("scenario key 'detuning_convention' must be 'f4' or 'com'")
    method = root.take("delay_method", str, default="peak")
    if method not in ("peak", "centroid"):
        raise ScenarioError("scenario key 'delay_method' must be 'peak' or 'centroid'")
    nodes = root.positive("jitter_nodes", int, default=21)

    kwargs: dict[str, Any] = dict(
        name=name, kind=kind, seed=seed, raw=data, medium=medium, pulse=pulse,
        grid=grid, instrument=instrument, convention=convention,
        delay_method=method, jitter_nodes=nodes)

    if kind == "scan":
        sweep = root.sub("scan")
        start = sweep.take("start_GHz", float)
        stop = sweep.take("stop_GHz", float)
        step = sweep.positive("step_GHz")
        sweep.close()
        if stop < start:
            raise ScenarioError("scenario key 'scan.stop_GHz' must be >= start_GHz")
        kwargs.update(scan_start_hz=start * GHZ, scan_stop_hz=stop * GHZ,
                      scan_step_hz=step * GHZ)
    elif kind == "delay_sweep":
        kwargs.update(temperatures_c=tuple(_temperature_axis(root.sub("temperatures_C"))),
                      carrier=_carrier_from(root))
    else:  # propagate | decompose
        kwargs.update(detuning_hz=root.take("detuning_GHz", float) * GHZ)
    root.close()
    return Scenario(**kwargs)


def _carrier_from(root: _Reader):
    value = root._map.get("carrier", "midpoint")
    root._seen.add("carrier")
    if value == "midpoint":
        return "midpoint"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError("scenario key 'carrier' must be 'midpoint' or a GHz number")
    return float(value)


def _raw_from_file(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"scenario file {path} must hold a JSON object")
    return data


def load_scenario(path: str) -> Scenario:
    return parse_scenario(_raw_from_file(path))


# --------------------------------------------------------------- presets

def preset_names() -> list[str]:
    files = resources.files("cspulse.presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def _raw_from_preset(name: str) -> dict:
    ref = resources.files("cspulse.presets").joinpath(f"{name}.json")
    if not ref.is_file():
        raise ScenarioError(
            f"unknown preset '{name}'; have {', '.join(preset_names())}")
    with ref.open("r") as fh:
        return json.load(fh)


def load_preset(name: str) -> Scenario:
    return parse_scenario(_raw_from_preset(name))


def preset_catalog() -> list[tuple[str, str]]:
    """(name, one-line description) for every shipped preset."""
    out = []
    for name in preset_names():
        data = _raw_from_preset(name)
        out.append((name, data.get("description", data.get("kind", ""))))
    return out


def raw_scenario(source: str) -> dict:
    """The source dict behind a preset name or a scenario file path.

    Kept separate from resolve so callers can echo exactly what they ran.
    """
    if source.endswith(".json"):
        return _raw_from_file(source)
    return _raw_from_preset(source)


def resolve(source: str) -> Scenario:
    """Preset name or path to a scenario file."""
    return parse_scenario(raw_scenario(source))


# -------------------------------------------------------------- execution

def _to_com(scenario: Scenario, table: TransitionTable, detuning_hz: float) -> float:
    if scenario.convention == "f4":
        return table.detuning_f4_to_com(detuning_hz)
    return detuning_hz


def _carrier_com_hz(scenario: Scenario, table: TransitionTable) -> float:
    if scenario.carrier == "midpoint":
        return table.midpoint_offset_hz
    return _to_com(scenario, table, float(scenario.carrier) * GHZ)


def execute(scenario: Scenario, table: TransitionTable | None = None,
            coupling: CouplingModel = CouplingModel()) -> RunResult:
    if table is None:
        table = transition_table()
    runner = _RUNNERS[scenario.kind]
    return runner(scenario, table, coupling)


def _run_scan(scenario: Scenario, table: TransitionTable,
              coupling: CouplingModel) -> RunResult:
    # the scan engine speaks the f4 convention; translate in, echo back out
    # in whichever convention the scenario used
    f4_start = table.detuning_com_to_f4(_to_com(scenario, table, scenario.scan_start_hz))
    points = scan_detuning(
        scenario.pulse, f4_start,
        f4_start + (scenario.scan_stop_hz - scenario.scan_start_hz),
        scenario.scan_step_hz, scenario.medium, table, coupling,
        scenario.grid, scenario.instrument, scenario.jitter_nodes,
        delay_method=scenario.delay_method)
    offset = scenario.scan_start_hz - f4_start
    rows = tuple((
        (p.scan_detuning_hz + offset) / GHZ, p.transmission, p.delay_s / NS,
        p.fwhm_s / NS, int(p.multimodal)) for p in points)
    t_min = min(p.transmission for p in points)
    summary = {
        "points": len(points),
        "min_transmission": t_min,
        "max_delay_ns": max(p.delay_s for p in points) / NS,
    }
    return RunResult(
        (Table("scan", ("detuning_GHz", "transmission", "delay_ns",
                        "fwhm_ns", "multimodal_flag"), rows),),
        summary)


def _run_delay_sweep(scenario: Scenario, table: TransitionTable,
                     coupling: CouplingModel) -> RunResult:
    carrier = _carrier_com_hz(scenario, table)
    temps_k = [celsius_to_kelvin(t) for t in scenario.temperatures_c]
    points = delay_vs_temperature(
        scenario.pulse, temps_k, scenario.medium, table, coupling,
        scenario.grid, scenario.instrument, scenario.jitter_nodes,
        delay_method=scenario.delay_method, carrier_com_hz=carrier)
    rows = tuple((
        kelvin_to_celsius(p.temperature_k), p.transmission, p.delay_s / NS,
        p.fwhm_s / NS, int(p.multimodal)) for p in points)
    summary = {
        "points": len(points),
        "carrier_com_GHz": carrier / GHZ,
        "max_delay_ns": max(p.delay_s for p in points) / NS,
    }
    return RunResult(
        (Table("delay_sweep", ("temperature_C", "transmission", "delay_ns",
                               "fwhm_ns", "multimodal_flag"), rows),),
        summary)


def _transmit_once(scenario: Scenario, table: TransitionTable,
                   coupling: CouplingModel):
    com = _to_com(scenario, table, scenario.detuning_hz)
    res = transmit(scenario.pulse, com, scenario.medium, table, coupling,
                   scenario.grid, scenario.instrument, scenario.jitter_nodes)
    est = delay(res.cell_intensity, res.reference_intensity, scenario.grid,
                scenario.delay_method)
    return res, est


def _profile_table(scenario: Scenario, res) -> Table:
    times = scenario.grid.times_s / NS
    parts = res.component_intensities
    if len(parts) == 2:
        header = ("time_ns", "cell_intensity", "main_intensity",
                  "side_intensity", "reference_intensity")
        columns = (res.cell_intensity, parts[0], parts[1],
                   res.reference_intensity)
    else:
        header = ("time_ns", "cell_intensity", "reference_intensity")
        columns = (res.cell_intensity, res.reference_intensity)
    rows = tuple((t, *(col[i] for col in columns))
                 for i, t in enumerate(times))
    return Table("profile", header, rows)


def _run_propagate(scenario: Scenario, table: TransitionTable,
                   coupling: CouplingModel) -> RunResult:
    res, est = _transmit_once(scenario, table, coupling)
    width = profile_fwhm_s(res.cell_intensity, scenario.grid)
    summary_rows = ((scenario.detuning_hz / GHZ, res.transmission,
                     est.delay_s / NS, width / NS, int(est.multimodal)),)
    summary = {"transmission": res.transmission, "delay_ns": est.delay_s / NS}
    return RunResult(
        (_profile_table(scenario, res),
         Table("summary", ("detuning_GHz", "transmission", "delay_ns",
                           "fwhm_ns", "multimodal_flag"), summary_rows)),
        summary)


def _run_decompose(scenario: Scenario, table: TransitionTable,
                   coupling: CouplingModel) -> RunResult:
    res, est = _transmit_once(scenario, table, coupling)
    grid = scenario.grid
    profile = Histogram1D(grid.t_start_s - 0.5 * grid.dt_s, grid.dt_s,
                          res.cell_intensity)
    fit = decompose_side_peak(profile)
    p, ci = fit.params, fit.ci95
    comp_rows = [("side", p["side_center"] / NS, p["side_hwhm"] / NS,
                  p["side_height"], p["side_area"], p["side_share"])]
    mains = fit.series["main_centers"]
    for j in range(len(mains)):
        comp_rows.append((f"main_{j}", fit.series["main_centers"][j] / NS,
                          fit.series["main_hwhms"][j] / NS,
                          fit.series["main_heights"][j],
                          fit.series["main_areas"][j],
                          fit.series["main_areas"][j] / p["total_area"]))
    summary = {
        "transmission": res.transmission,
        "delay_ns": est.delay_s / NS,
        "side_center_ns": p["side_center"] / NS,
        "side_center_ci95_ns": ci["side_center"] / NS,
        "side_share": p["side_share"],
        "converged": fit.converged,
        "flags": sorted(fit.flags),
    }
    return RunResult(
        (_profile_table(scenario, res),
         Table("components", ("component", "center_ns", "hwhm_ns", "height",
                              "area", "area_share"), tuple(comp_rows)),),
        summary)


def _run_gas_curve(scenario: Scenario, table: TransitionTable,
                   coupling: CouplingModel) -> RunResult:
    rng = np.random.default_rng(scenario.seed) if scenario.tuning_noise else None
    st = scenario.tuning_state
    f0 = st.frequency_hz
    rows = [(0.0, 0.0, st.wavelength_m * 1e9)]
    for _ in range(scenario.tuning_steps):
        st = apply_gas(st, scenario.tuning_amount, scenario.tuning_config, rng)
        rows.append((st.cumulative_gas_mln, (st.frequency_hz - f0) / GHZ,
                     st.wavelength_m * 1e9))
    summary = {"total_mln": rows[-1][0], "total_shift_GHz": rows[-1][1]}
    return RunResult(
        (Table("gas_curve", ("cumulative_mln", "shift_GHz", "wavelength_nm"),
               tuple(rows)),),
        summary)


def _run_ablation_curve(scenario: Scenario, table: TransitionTable,
                        coupling: CouplingModel) -> RunResult:
    rng = np.random.default_rng(scenario.seed) if scenario.tuning_noise else None
    st = scenario.tuning_state
    f0 = st.frequency_hz
    power = scenario.tuning_power_mw
    rows = [(0.0, 0.0, st.wavelength_m * 1e9)]
    for _ in range(scenario.tuning_steps):
        st = apply_laser(st, power, scenario.tuning_duration_s,
                         scenario.tuning_config, rng)
        rows.append((st.cumulative_exposure_s[power],
                     (st.frequency_hz - f0) / GHZ, st.wavelength_m * 1e9))
    summary = {"total_s": rows[-1][0], "total_shift_GHz": rows[-1][1],
               "power_mW": power}
    return RunResult(
        (Table("ablation_curve", ("cumulative_s", "shift_GHz", "wavelength_nm"),
               tuple(rows)),),
        summary)


_RUNNERS = {
    "scan": _run_scan,
    "delay_sweep": _run_delay_sweep,
    "propagate": _run_propagate,
    "decompose": _run_decompose,
    "gas_curve": _run_gas_curve,
    "ablation_curve": _run_ablation_curve,
}
