"""Scenario schema validation, preset catalog, and the curve runners."""

import json

import numpy as np
import pytest

from cspulse.scenarios import (
    ScenarioError,
    execute,
    load_preset,
    parse_scenario,
    preset_catalog,
    preset_names,
    raw_scenario,
    resolve,
)

PRESETS = ["fig2b_gas", "fig2c_ablation", "fig4e_scan_laser", "fig4e_scan_qd",
           "fig4f_delay", "fig5b_delay", "figS3_decompose"]


def _scan_dict(**over):
    d = {
        "name": "t",
        "kind": "scan",
        "temperature_C": 25.0,
        "pulse": {"kind": "laser", "bandwidth_MHz": 220.0},
        "scan": {"start_GHz": -40.0, "stop_GHz": -40.0, "step_GHz": 1.0},
    }
    d.update(over)
    return d


def test_preset_catalog():
    assert sorted(preset_names()) == sorted(PRESETS)
    catalog = dict(preset_catalog())
    for name in PRESETS:
        assert catalog[name].strip()
        scenario = load_preset(name)
        assert scenario.name == name
    with pytest.raises(ScenarioError, match="unknown preset"):
        load_preset("fig9_missing")


def test_unknown_keys_rejected_with_path():
    with pytest.raises(ScenarioError, match="unknown scenario key 'bogus'"):
        parse_scenario(_scan_dict(bogus=1))
    bad_pulse = _scan_dict()
    bad_pulse["pulse"]["chirp_MHz"] = 3.0
    with pytest.raises(ScenarioError, match="'pulse.chirp_MHz'"):
        parse_scenario(bad_pulse)
    bad_scan = _scan_dict()
    bad_scan["scan"]["fine_GHz"] = 0.1
    with pytest.raises(ScenarioError, match="'scan.fine_GHz'"):
        parse_scenario(bad_scan)


def test_required_and_typed_keys():
    d = _scan_dict()
    del d["name"]
    with pytest.raises(ScenarioError, match="'name'"):
        parse_scenario(d)
    with pytest.raises(ScenarioError, match="temperature_C"):
        parse_scenario({k: v for k, v in _scan_dict().items()
                        if k != "temperature_C"})
    with pytest.raises(ScenarioError, match="kind"):
        parse_scenario(_scan_dict(kind="sweep"))
    with pytest.raises(ScenarioError, match="detuning_convention"):
        parse_scenario(_scan_dict(detuning_convention="lab"))
    with pytest.raises(ScenarioError, match="delay_method"):
        parse_scenario(_scan_dict(delay_method="median"))
    with pytest.raises(ScenarioError, match="stop_GHz"):
        parse_scenario(_scan_dict(scan={"start_GHz": 0.0, "stop_GHz": -1.0,
                                        "step_GHz": 1.0}))


def test_medium_and_pulse_validation_paths():
    with pytest.raises(ScenarioError, match="unknown pressure model"):
        parse_scenario(_scan_dict(pressure_model="antoine"))
    d = _scan_dict(pulse={"kind": "masers"})
    with pytest.raises(ScenarioError, match="pulse.kind"):
        parse_scenario(d)
    d = _scan_dict(pulse={"kind": "laser", "bandwidth_MHz": -5.0})
    with pytest.raises(ScenarioError, match="bandwidth_MHz"):
        parse_scenario(d)


def test_defaults_applied():
    s = parse_scenario(_scan_dict())
    assert s.seed == 0
    assert s.convention == "f4"
    assert s.delay_method == "peak"
    assert s.jitter_nodes == 21
    assert s.medium.cell_length_m == pytest.approx(0.10)
    assert s.medium.pressure_model == "alcock"
    assert s.grid.dt_s == pytest.approx(50e-12)
    assert s.grid.n == 8192
    assert s.instrument.sigma_jitter_s == pytest.approx(1e-9)
    assert s.instrument.sigma_detector_s == pytest.approx(200e-12)


def test_raw_scenario_sources(tmp_path):
    path = tmp_path / "ok.json"
    path.write_text(json.dumps(_scan_dict()))
    assert raw_scenario(str(path))["name"] == "t"
    assert resolve(str(path)).kind == "scan"
    assert resolve("fig2b_gas").kind == "gas_curve"

    missing = tmp_path / "gone.json"
    with pytest.raises(ScenarioError, match="scenario file not found"):
        raw_scenario(str(missing))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError, match="not valid JSON"):
        raw_scenario(str(bad))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ScenarioError, match="JSON object"):
        raw_scenario(str(arr))


def test_scan_convention_echo(table):
    f4 = execute(parse_scenario(_scan_dict()))
    com_val = -40.0 + table.f4_offset_hz / 1e9
    com = execute(parse_scenario(_scan_dict(
        detuning_convention="com",
        scan={"start_GHz": com_val, "stop_GHz": com_val, "step_GHz": 1.0})))
    (row_f4,), (row_com,) = f4.tables[0].rows, com.tables[0].rows
    # same physics, axis echoed in the scenario's own convention
    assert row_f4[0] == pytest.approx(-40.0, abs=1e-9)
    assert row_com[0] == pytest.approx(com_val, abs=1e-9)
    assert row_com[1] == pytest.approx(row_f4[1], rel=1e-12)
    assert f4.tables[0].header == ("detuning_GHz", "transmission", "delay_ns",
                                   "fwhm_ns", "multimodal_flag")
    assert f4.summary["points"] == 1
    assert row_f4[1] > 0.99  # far red wing is transparent


def test_gas_curve_frozen_total():
    res = execute(load_preset("fig2b_gas"))
    assert res.summary["total_mln"] == pytest.approx(20.0, rel=1e-12)
    assert res.summary["total_shift_GHz"] == pytest.approx(233.2118935389375,
                                                           rel=1e-12)
    tb = res.tables[0]
    assert tb.name == "gas_curve"
    assert tb.header == ("cumulative_mln", "shift_GHz", "wavelength_nm")
    assert len(tb.rows) == 21
    # monotone blue shift, shrinking wavelength
    shifts = [r[1] for r in tb.rows]
    assert all(b > a for a, b in zip(shifts, shifts[1:]))
    assert tb.rows[-1][2] < tb.rows[0][2]


def test_ablation_curve_frozen_total():
    res = execute(load_preset("fig2c_ablation"))
    assert res.summary["total_s"] == pytest.approx(1200.0, rel=1e-12)
    assert res.summary["total_shift_GHz"] == pytest.approx(-58.027261569625,
                                                           rel=1e-12)
    tb = res.tables[0]
    assert tb.header == ("cumulative_s", "shift_GHz", "wavelength_nm")
    assert len(tb.rows) == 41
    # red shifts never reverse; granularity noise clips a step at zero,
    # so plateaus are legal
    shifts = [r[1] for r in tb.rows]
    assert all(b <= a for a, b in zip(shifts, shifts[1:]))
    # saturating power law: later steps buy less
    first, last = shifts[1] - shifts[0], shifts[-1] - shifts[-2]
    assert abs(last) < abs(first)


def test_curve_seed_changes_noise():
    raw = raw_scenario("fig2b_gas")
    other = dict(raw, seed=raw.get("seed", 0) + 1)
    a = execute(parse_scenario(raw))
    b = execute(parse_scenario(other))
    assert a.summary["total_shift_GHz"] != b.summary["total_shift_GHz"]


def test_noise_free_curve_is_exact():
    raw = raw_scenario("fig2b_gas")
    quiet = json.loads(json.dumps(raw))
    quiet["tuning"]["granularity_noise"] = False
    res = execute(parse_scenario(quiet))
    slope = quiet["tuning"].get("gas_slope_GHz_per_mln", 11.75)
    assert res.summary["total_shift_GHz"] == pytest.approx(20.0 * slope, rel=1e-12)
