"""Command line surface.

Every data-producing command writes CSV tables plus a manifest JSON that
echoes the inputs, library versions, seed, and wall time. The output
directory is --out-dir, else $CSPULSE_OUT_DIR, else the working directory.
File contents are rendered in memory first and moved into place atomically,
so a failing command leaves no partial outputs behind. Floats print as
%.9g, which keeps reruns byte-identical.

CLI-facing units are GHz, ns, Celsius, cm, and mln throughout; the chi
table keeps its detuning axis in Hz because that is the resolution the
susceptibility grid is meaningful at.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import tempfile
import time
from dataclasses import replace

import numpy as np
from scipy.constants import c as speed_of_light

from . import __version__
from .atomic import transition_table, table_rows
from .fitting import (Histogram1D, compute_g2, decompose_side_peak, fit_emg,
                      fit_fss, fit_voigt)
from .lindblad import transmission_vs_chi_route
from .medium import VaporConditions, chi_bare, chi_doppler, transfer_function
from .scenarios import ScenarioError, Table, execute, parse_scenario, \
    preset_catalog, raw_scenario
from .tuning import (DEFAULT_CONFIG, Ablate, ConvergenceError, Inject,
                     Measure, QDTuningState, TuningError, tune_to_target)

GHZ = 1e9


# ------------------------------------------------------------- rendering

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.9g" % float(value)
    return str(value)


def _render_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if np.isfinite(v) else repr(v)
    return value


def _manifest(command: str, inputs: dict, seed, wall_s: float,
              outputs, result: dict | None = None) -> str:
    import scipy
    doc = {
        "command": command,
        "inputs": _jsonable(inputs),
        "result": _jsonable(result or {}),
        "seed": seed,
        "outputs": sorted(outputs),
        "versions": {
            "cspulse": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": round(wall_s, 3),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------- output files

def _out_dir(args) -> str:
    return args.out_dir or os.environ.get("CSPULSE_OUT_DIR") or os.getcwd()


def _write_files(out_dir: str, files: dict[str, str]) -> list[str]:
    """Stage every file, then move all into place; nothing lands early."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, content in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w") as fh:
                fh.write(content)
            staged.append((tmp, os.path.join(out_dir, name)))
    except BaseException:
        for tmp, _ in staged:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        raise
    final = []
    for tmp, dest in staged:
        os.replace(tmp, dest)
        final.append(dest)
    return final


def _emit(args, base: str, tables, inputs: dict, seed, t0: float,
          result: dict | None = None) -> None:
    files = {}
    for tb in tables:
        stem = base if tb.name == base else f"{base}_{tb.name}"
        files[f"{stem}.csv"] = _render_csv(tb.header, tb.rows)
    wall = time.perf_counter() - t0
    files[f"{base}_manifest.json"] = _manifest(
        base, inputs, seed, wall, list(files) + [f"{base}_manifest.json"],
        result)
    for key, value in (result or {}).items():
        print(f"{key} = {value if isinstance(value, (bool, str, list)) else _fmt(value)}")
    for path in _write_files(_out_dir(args), files):
        print(f"wrote {path}")


# --------------------------------------------------- scenario assembly

def _medium_dict(args, d: dict) -> None:
    d["temperature_C"] = args.temperature_c
    if args.cell_length_cm is not None:
        d["cell_length_cm"] = args.cell_length_cm
    if args.pressure_model is not None:
        d["pressure_model"] = args.pressure_model
    if args.density_m3 is not None:
        d["density_override_m3"] = args.density_m3
    if args.no_doppler:
        d["doppler"] = False


def _pulse_dict(args, d: dict) -> None:
    qd_given = [v for v in (args.lifetime_ns, args.sigma_ib_mhz,
                            args.side_offset_ghz, args.side_weight)
                if v is not None]
    if args.pulse == "laser":
        if qd_given:
            raise ScenarioError(
                "quantum-dot pulse flags need --pulse quantum-dot")
        p = {"kind": "laser"}
        if args.bandwidth_mhz is not None:
            p["bandwidth_MHz"] = args.bandwidth_mhz
    else:
        if args.bandwidth_mhz is not None:
            raise ScenarioError("--bandwidth-mhz applies to --pulse laser")
        p = {"kind": "quantum_dot"}
        if args.lifetime_ns is not None:
            p["lifetime_ns"] = args.lifetime_ns
        if args.sigma_ib_mhz is not None:
            p["sigma_ib_MHz"] = args.sigma_ib_mhz
        if args.side_offset_ghz is not None:
            p["side_peak_offset_GHz"] = args.side_offset_ghz
        if args.side_weight is not None:
            p["side_peak_weight"] = args.side_weight
    d["pulse"] = p


def _grid_dict(args, d: dict) -> None:
    g = {}
    if args.dt_ps is not None:
        g["dt_ps"] = args.dt_ps
    if args.span_ns is not None:
        g["span_ns"] = args.span_ns
    if args.start_ns is not None:
        g["start_ns"] = args.start_ns
    if g:
        d["grid"] = g
    inst = {}
    if args.jitter_ns is not None:
        inst["sigma_jitter_ns"] = args.jitter_ns
    if args.detector_ps is not None:
        inst["sigma_detector_ps"] = args.detector_ps
    if inst:
        d["instrument"] = inst
    if args.convention is not None:
        d["detuning_convention"] = args.convention
    if args.delay_method is not None:
        d["delay_method"] = args.delay_method
    if args.jitter_nodes is not None:
        d["jitter_nodes"] = args.jitter_nodes


def _run_scenario_dict(args, d: dict) -> int:
    scenario = parse_scenario(d)
    t0 = time.perf_counter()
    res = execute(scenario)
    _emit(args, scenario.name, res.tables, d, scenario.seed, t0, res.summary)
    return 0


def _conditions(args) -> VaporConditions:
    kwargs = {"temperature_k": args.temperature_c + 273.15}
    if args.cell_length_cm is not None:
        kwargs["cell_length_m"] = args.cell_length_cm / 100.0
    if args.pressure_model is not None:
        kwargs["pressure_model"] = args.pressure_model
    if args.density_m3 is not None:
        kwargs["density_override_m3"] = args.density_m3
    return VaporConditions(**kwargs)


# -------------------------------------------------------------- commands

def cmd_scan(args) -> int:
    d = {"name": "scan", "kind": "scan", "seed": args.seed}
    _medium_dict(args, d)
    _pulse_dict(args, d)
    _grid_dict(args, d)
    d["scan"] = {"start_GHz": args.start_ghz, "stop_GHz": args.stop_ghz,
                 "step_GHz": args.step_ghz}
    return _run_scenario_dict(args, d)


def cmd_delay_sweep(args) -> int:
    d = {"name": "delay_sweep", "kind": "delay_sweep", "seed": args.seed}
    args.temperature_c = args.start_c  # base conditions; swept per point
    _medium_dict(args, d)
    _pulse_dict(args, d)
    _grid_dict(args, d)
    d["temperatures_C"] = {"start_C": args.start_c, "stop_C": args.stop_c,
                           "step_C": args.step_c}
    if args.carrier != "midpoint":
        try:
            d["carrier"] = float(args.carrier)
        except ValueError:
            raise ScenarioError(
                "--carrier takes 'midpoint' or a GHz number") from None
    return _run_scenario_dict(args, d)


def cmd_propagate(args) -> int:
    d = {"name": "propagate", "kind": "propagate", "seed": args.seed}
    _medium_dict(args, d)
    _pulse_dict(args, d)
    _grid_dict(args, d)
    d["detuning_GHz"] = args.detuning_ghz
    return _run_scenario_dict(args, d)


def cmd_run(args) -> int:
    raw = raw_scenario(args.scenario)
    scenario = parse_scenario(raw)
    t0 = time.perf_counter()
    res = execute(scenario)
    _emit(args, scenario.name, res.tables, raw, scenario.seed, t0,
          res.summary)
    return 0


def cmd_presets(args) -> int:
    for name, description in preset_catalog():
        print(f"{name:22s} {description}")
    return 0


def cmd_lines(args) -> int:
    header = ("transition", "strength", "offset_ghz", "offset_f4_ghz",
              "wavelength_nm", "partial_rate_mhz_2pi")
    rows = table_rows(transition_table())
    widths = [max(len(h), *(len(_fmt(r[h])) for r in rows)) for h in header]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(_fmt(r[h]).ljust(w) for h, w in zip(header, widths)))
    return 0


def cmd_chi(args) -> int:
    t0 = time.perf_counter()
    table = transition_table()
    cond = _conditions(args)
    if args.points < 2:
        raise ScenarioError("--points must be at least 2")
    if args.stop_ghz <= args.start_ghz:
        raise ScenarioError("--stop-ghz must exceed --start-ghz")
    dets = np.linspace(args.start_ghz, args.stop_ghz, args.points) * GHZ
    com = table.detuning_f4_to_com(dets) if args.convention == "f4" else dets
    chi_fn = chi_bare if args.no_doppler else chi_doppler
    chi = chi_fn(com, cond, table)
    h = transfer_function(com, cond, table,
                          include_doppler=not args.no_doppler,
                          include_vacuum_phase=False).values
    phases = np.unwrap(np.angle(h))
    rows = tuple(zip(dets, chi.real, chi.imag, np.abs(h) ** 2, phases))
    tb = Table("chi", ("detuning_Hz", "re_chi", "im_chi", "transmittance",
                       "phase_rad"), rows)
    inputs = {"temperature_C": args.temperature_c,
              "start_GHz": args.start_ghz, "stop_GHz": args.stop_ghz,
              "points": args.points, "convention": args.convention,
              "doppler": not args.no_doppler}
    result = {"min_transmittance": float(np.min(np.abs(h) ** 2)),
              "max_im_chi": float(np.max(chi.imag))}
    _emit(args, "chi", (tb,), inputs, None, t0, result)
    return 0


def cmd_lindblad_check(args) -> int:
    t0 = time.perf_counter()
    table = transition_table()
    cond = _conditions(args)
    n = int(np.floor((args.stop_ghz - args.start_ghz) / args.step_ghz + 0.5))
    dets_f4 = (args.start_ghz + args.step_ghz * np.arange(n + 1)) * GHZ
    com = table.detuning_f4_to_com(dets_f4)
    points = transmission_vs_chi_route(
        com, cond, table, bandwidth_hz=args.bandwidth_mhz * 1e6)
    rows = tuple(
        (dets_f4[i] / GHZ, t_chi, t_lb, abs(t_chi - t_lb), steps)
        for i, (_, t_chi, t_lb, steps) in enumerate(points))
    tb = Table("lindblad_check",
               ("detuning_GHz", "transmission_transfer",
                "transmission_lindblad", "abs_diff", "z_steps"), rows)
    worst = max(r[3] for r in rows)
    inputs = {"temperature_C": args.temperature_c,
              "start_GHz": args.start_ghz, "stop_GHz": args.stop_ghz,
              "step_GHz": args.step_ghz, "bandwidth_MHz": args.bandwidth_mhz}
    _emit(args, "lindblad_check", (tb,), inputs, None, t0,
          {"worst_abs_diff": worst, "points": len(rows)})
    return 0


# ------------------------------------------------------------------ fit

_FIT_HEADERS = {
    "voigt": ("detuning_GHz", "counts"),
    "emg": ("time_ns", "counts"),
    "g2": ("time_ns", "counts"),
    "fss": ("angle_rad", "energy_GHz"),
    "decompose": ("time_ns", "intensity"),
}

_FIT_COLUMNS = {
    "voigt": (("center", "center_GHz"), ("f_gauss", "f_gauss_GHz"),
              ("f_lorentz", "f_lorentz_GHz"), ("f_voigt", "f_voigt_GHz"),
              ("amplitude", "area_counts_GHz"), ("offset", "offset_counts")),
    "emg": (("lifetime", "lifetime_ns"), ("sigma", "sigma_ns"),
            ("t0", "t0_ns"), ("amplitude", "amplitude_counts")),
    "g2": (("g2_0", "g2_0"), ("g2_std", "g2_std"),
           ("g2_stderr", "g2_stderr"), ("g2_literal_sum", "g2_literal_sum"),
           ("mean_side_area", "mean_side_area_counts")),
    "fss": (("fss", "fss_GHz"), ("phase", "phase_rad"),
            ("offset", "offset_GHz")),
    "decompose": (("side_center", "side_center_ns"),
                  ("side_hwhm", "side_hwhm_ns"),
                  ("side_height", "side_height"), ("side_area", "side_area"),
                  ("side_share", "side_share"), ("main_share", "main_share"),
                  ("total_area", "total_area")),
}


def _read_xy(path: str, expected: tuple[str, str]):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise ScenarioError(f"input file not found: {path}") from None
    rows = [r for r in rows if r]
    if not rows:
        raise ScenarioError(f"{path} is empty")
    header = tuple(cell.strip() for cell in rows[0])
    if header != expected:
        raise ScenarioError(
            f"{path}: expected header {','.join(expected)}, "
            f"got {','.join(header)}")
    x, y = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ScenarioError(f"{path}:{i}: expected 2 columns")
        try:
            x.append(float(row[0]))
            y.append(float(row[1]))
        except ValueError:
            raise ScenarioError(f"{path}:{i}: non-numeric value") from None
    return np.asarray(x), np.asarray(y)


def _uniform_histogram(x, y, label: str) -> Histogram1D:
    if x.size < 2:
        raise ScenarioError(f"need at least 2 rows of {label}")
    width = (x[-1] - x[0]) / (x.size - 1)
    # %.9g round-trips jitter the spacing by up to ~1e-5 of a bin at long
    # axes, so the non-uniformity gate is deliberately loose
    if width <= 0 or np.max(np.abs(np.diff(x) - width)) > 1e-3 * abs(width):
        raise ScenarioError(f"{label} axis must be uniformly spaced ascending")
    try:
        return Histogram1D(float(x[0]) - 0.5 * width, float(width), y)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def cmd_fit(args) -> int:
    kind = args.kind
    if kind == "g2":
        if args.rep_period_ns is None:
            raise ScenarioError("fit g2 needs --rep-period-ns")
    elif args.rep_period_ns is not None or args.side_peaks is not None:
        raise ScenarioError("--rep-period-ns/--side-peaks apply to fit g2")

    x, y = _read_xy(args.input, _FIT_HEADERS[kind])
    t0 = time.perf_counter()
    axis = _FIT_HEADERS[kind][0]
    n_side = 12 if args.side_peaks is None else args.side_peaks
    try:
        if kind == "voigt":
            res = fit_voigt(_uniform_histogram(x, y, axis))
        elif kind == "emg":
            res = fit_emg(_uniform_histogram(x, y, axis))
        elif kind == "g2":
            res = compute_g2(_uniform_histogram(x, y, axis),
                             args.rep_period_ns, n_side_peaks=n_side)
        elif kind == "fss":
            res = fit_fss(x, y)
        else:
            res = decompose_side_peak(_uniform_histogram(x, y, axis))
    except ValueError as exc:
        raise ScenarioError(f"fit {kind}: {exc}") from None

    rows = tuple((name, res.params[key], res.ci95.get(key))
                 for key, name in _FIT_COLUMNS[kind])
    tables = [Table(f"fit_{kind}", ("param", "value", "ci95"), rows)]
    if kind == "decompose":
        s = res.series
        comp_rows = tuple(
            (f"main_{i}", s["main_centers"][i], s["main_hwhms"][i],
             s["main_heights"][i], s["main_areas"][i],
             s["main_areas"][i] / res.params["total_area"])
            for i in range(len(s["main_centers"])))
        side_row = (("side", res.params["side_center"],
                     res.params["side_hwhm"], res.params["side_height"],
                     res.params["side_area"], res.params["side_share"]),)
        tables.append(Table("components",
                            ("component", "center_ns", "hwhm_ns", "height",
                             "area", "area_share"), side_row + comp_rows))
    result = {"converged": res.converged,
              "residual_norm": res.residual_norm, "flags": list(res.flags)}
    inputs = {"kind": kind, "input": os.path.abspath(args.input),
              "rows": int(x.size)}
    if kind == "g2":
        inputs["rep_period_ns"] = args.rep_period_ns
        inputs["side_peaks"] = n_side
    _emit(args, f"fit_{kind}", tables, inputs, None, t0, result)
    return 0


# ----------------------------------------------------------------- tune

def cmd_tune(args) -> int:
    t0 = time.perf_counter()
    state = QDTuningState(
        wavelength_m=args.start_nm * 1e-9,
        gas_slope_hz_per_mln=args.gas_slope_ghz_per_mln * GHZ,
        ablation_a=100e9 / 3600.0 ** args.ablation_b,
        ablation_b=args.ablation_b)
    if args.target_nm is not None:
        target_hz = speed_of_light / (args.target_nm * 1e-9)
    else:
        target_hz = state.frequency_hz + args.offset_ghz * GHZ
    config = replace(DEFAULT_CONFIG,
                     gas_budget_mln=args.gas_budget_mln,
                     max_actions=args.max_actions)
    try:
        plan = tune_to_target(state, target_hz, args.tolerance_ghz * GHZ,
                              config, seed=args.seed,
                              noise=not args.no_noise)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    rows = []
    for i, action in enumerate(plan.actions):
        true_ghz = (plan.true_trace_hz[i] - target_hz) / GHZ
        if isinstance(action, Inject):
            rows.append((i + 1, "inject", action.amount_mln, None, None,
                         None, None, true_ghz))
        elif isinstance(action, Ablate):
            rows.append((i + 1, "ablate", None, action.power_mw,
                         action.duration_s, None, None, true_ghz))
        elif isinstance(action, Measure):
            rows.append((i + 1, "measure", None, None, None,
                         action.instrument,
                         (action.reading_hz - target_hz) / GHZ, true_ghz))
    tb = Table("trace",
               ("step", "action", "amount_mln", "power_mW", "duration_s",
                "instrument", "reading_minus_target_GHz",
                "true_minus_target_GHz"), tuple(rows))
    final = plan.final_state
    result = {
        "steps": plan.steps,
        "achieved_detuning_GHz": plan.achieved_detuning_hz / GHZ,
        "true_residual_GHz": (final.frequency_hz - target_hz) / GHZ,
        "final_wavelength_nm": final.wavelength_m * 1e9,
        "cumulative_gas_mln": final.cumulative_gas_mln,
    }
    inputs = {"start_nm": args.start_nm, "target_nm": args.target_nm,
              "offset_GHz": args.offset_ghz,
              "tolerance_GHz": args.tolerance_ghz,
              "gas_slope_GHz_per_mln": args.gas_slope_ghz_per_mln,
              "ablation_b": args.ablation_b,
              "gas_budget_mln": args.gas_budget_mln,
              "max_actions": args.max_actions,
              "noise": not args.no_noise}
    _emit(args, "tune", (tb,), inputs, args.seed, t0, result)
    return 0


# ----------------------------------------------------------------- main

def _add_out_dir(p) -> None:
    p.add_argument("--out-dir", metavar="DIR", default=None,
                   help="output directory (default $CSPULSE_OUT_DIR or cwd)")


def _add_medium(p, temperature_default=None, temperature=True) -> None:
    if not temperature:
        pass  # swept commands fill args.temperature_c themselves
    elif temperature_default is None:
        p.add_argument("--temperature-c", type=float, required=True,
                       metavar="C", help="cell temperature")
    else:
        p.add_argument("--temperature-c", type=float,
                       default=temperature_default, metavar="C",
                       help=f"cell temperature (default {temperature_default})")
    p.add_argument("--cell-length-cm", type=float, default=None,
                   help="cell length (default 10)")
    p.add_argument("--pressure-model",
                   choices=("alcock", "taylor_langmuir"), default=None,
                   help="vapor pressure curve (default alcock)")
    p.add_argument("--density-m3", type=float, default=None,
                   help="override the vapor-pressure number density")
    p.add_argument("--no-doppler", action="store_true",
                   help="stationary atoms (no Doppler broadening)")


def _add_pulse(p) -> None:
    p.add_argument("--pulse", choices=("laser", "quantum_dot"),
                   default="laser", help="emission model (default laser)")
    p.add_argument("--bandwidth-mhz", type=float, default=None,
                   help="laser linewidth FWHM (default 220)")
    p.add_argument("--lifetime-ns", type=float, default=None,
                   help="quantum-dot lifetime (default 1.52)")
    p.add_argument("--sigma-ib-mhz", type=float, default=None,
                   help="inhomogeneous linewidth sigma (default 357.8)")
    p.add_argument("--side-offset-ghz", type=float, default=None,
                   help="side peak offset from the line (default -24)")
    p.add_argument("--side-weight", type=float, default=None,
                   help="side peak intensity share (default 0.18)")


def _add_grid(p) -> None:
    p.add_argument("--dt-ps", type=float, default=None,
                   help="time grid step (default 50)")
    p.add_argument("--span-ns", type=float, default=None,
                   help="time grid span (default 409.6)")
    p.add_argument("--start-ns", type=float, default=None,
                   help="time grid start (default -span/4)")
    p.add_argument("--jitter-ns", type=float, default=None,
                   help="instrument jitter sigma (default 1.0)")
    p.add_argument("--detector-ps", type=float, default=None,
                   help="detector response sigma (default 200)")
    p.add_argument("--convention", choices=("f4", "com"), default=None,
                   help="detuning zero: F=4 line or line centroid"
                        " (default f4)")
    p.add_argument("--delay-method", choices=("peak", "centroid"),
                   default=None, help="arrival-time estimator (default peak)")
    p.add_argument("--jitter-nodes", type=int, default=None,
                   help="spectral jitter quadrature nodes (default 21)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cspulse",
        description="Pulses through hot cesium vapor: transmission and "
                    "arrival-time scans, spectroscopy fits, and the "
                    "frequency tuning loop.",
        epilog="Outputs land in --out-dir, else $CSPULSE_OUT_DIR, else the "
               "working directory.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")

    p = sub.add_parser("scan", help="transmission and delay vs detuning")
    _add_medium(p)
    _add_pulse(p)
    _add_grid(p)
    p.add_argument("--start-ghz", type=float, required=True)
    p.add_argument("--stop-ghz", type=float, required=True)
    p.add_argument("--step-ghz", type=float, required=True)
    _add_out_dir(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("delay-sweep", help="delay vs cell temperature")
    _add_medium(p, temperature=False)
    _add_pulse(p)
    _add_grid(p)
    p.add_argument("--start-c", type=float, required=True)
    p.add_argument("--stop-c", type=float, required=True)
    p.add_argument("--step-c", type=float, required=True)
    p.add_argument("--carrier", default="midpoint",
                   help="'midpoint' or a carrier detuning in GHz "
                        "(default midpoint)")
    _add_out_dir(p)
    p.set_defaults(func=cmd_delay_sweep)

    p = sub.add_parser("propagate",
                       help="single transmitted pulse profile")
    _add_medium(p)
    _add_pulse(p)
    _add_grid(p)
    p.add_argument("--detuning-ghz", type=float, required=True,
                   help="carrier detuning")
    _add_out_dir(p)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("chi", help="susceptibility and cell transmittance")
    _add_medium(p, temperature_default=110.0)
    p.add_argument("--start-ghz", type=float, default=-45.0)
    p.add_argument("--stop-ghz", type=float, default=45.0)
    p.add_argument("--points", type=int, default=1801)
    p.add_argument("--convention", choices=("f4", "com"), default="f4")
    _add_out_dir(p)
    p.set_defaults(func=cmd_chi)

    p = sub.add_parser("lines", help="print the D1 transition table")
    p.set_defaults(func=cmd_lines)

    p = sub.add_parser("lindblad-check",
                       help="weak-field transmission: density matrix vs "
                            "transfer function")
    _add_medium(p, temperature_default=40.0)
    p.add_argument("--start-ghz", type=float, default=-6.0)
    p.add_argument("--stop-ghz", type=float, default=6.0)
    p.add_argument("--step-ghz", type=float, default=2.0)
    p.add_argument("--bandwidth-mhz", type=float, default=220.0)
    _add_out_dir(p)
    p.set_defaults(func=cmd_lindblad_check)

    p = sub.add_parser("fit", help="run one estimator on a CSV file")
    p.add_argument("kind", choices=("voigt", "emg", "g2", "fss", "decompose"))
    p.add_argument("--input", required=True, metavar="CSV",
                   help="two-column input; see the README for headers")
    p.add_argument("--rep-period-ns", type=float, default=None,
                   help="pulse repetition period (fit g2 only)")
    p.add_argument("--side-peaks", type=int, default=None,
                   help="side peaks fitted per side (fit g2 only, default 12)")
    _add_out_dir(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tune", help="closed-loop frequency tuning run")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--offset-ghz", type=float, default=None,
                       help="target relative to the starting frequency")
    where.add_argument("--target-nm", type=float, default=None,
                       help="absolute target wavelength")
    p.add_argument("--start-nm", type=float, default=894.95,
                   help="starting wavelength (default 894.95)")
    p.add_argument("--tolerance-ghz", type=float, default=0.5)
    p.add_argument("--gas-slope-ghz-per-mln", type=float, default=11.75,
                   help="gas blue-shift slope (default 11.75)")
    p.add_argument("--ablation-b", type=float, default=0.5,
                   help="ablation saturation exponent (default 0.5)")
    p.add_argument("--gas-budget-mln", type=float,
                   default=DEFAULT_CONFIG.gas_budget_mln)
    p.add_argument("--max-actions", type=int,
                   default=DEFAULT_CONFIG.max_actions)
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--no-noise", action="store_true",
                   help="disable measurement and actuation noise")
    _add_out_dir(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("presets", help="list the shipped scenarios")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("run", help="execute a preset or scenario file")
    p.add_argument("scenario",
                   help="preset name or path to a scenario .json")
    _add_out_dir(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except TuningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
