"""Command-line surface: file outputs, determinism, units, exit codes."""

import json

import pytest

from cspulse.cli import main
from cspulse.fitting import make_emg_decay, make_voigt_scan


def _run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


def _params(path):
    rows = [r.split(",") for r in path.read_text().splitlines()[1:]]
    return {r[0]: float(r[1]) for r in rows}


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "cspulse" in capsys.readouterr().out


def test_no_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("fig2b_gas", "fig4e_scan_laser", "figS3_decompose"):
        assert name in out


def test_lines_table(capsys):
    assert main(["lines"]) == 0
    out = capsys.readouterr().out
    assert "F=4 -> F'=3" in out
    assert "7/12" in out
    assert "894." in out


def test_chi_outputs_and_determinism(tmp_path, capsys):
    args = ("chi", "--temperature-c", "110", "--start-ghz", "-8",
            "--stop-ghz", "8", "--points", "41")
    assert _run(tmp_path, *args) == 0
    csv = tmp_path / "chi.csv"
    manifest = tmp_path / "chi_manifest.json"
    assert csv.exists() and manifest.exists()
    first = csv.read_bytes()
    lines = first.decode().splitlines()
    assert lines[0] == "detuning_Hz,re_chi,im_chi,transmittance,phase_rad"
    assert len(lines) == 42

    meta = json.loads(manifest.read_text())
    assert meta["command"] == "chi"
    assert "versions" in meta and "wall_time_s" in meta
    assert meta["inputs"]["temperature_C"] == 110.0
    assert sorted(meta["outputs"]) == ["chi.csv", "chi_manifest.json"]

    assert _run(tmp_path, *args) == 0
    assert csv.read_bytes() == first  # reruns stay byte-identical


def test_run_rejects_unknown_key_without_outputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "name": "x", "kind": "scan", "temperature_C": 25.0, "bogus_key": 1,
        "pulse": {"kind": "laser", "bandwidth_MHz": 220.0},
        "scan": {"start_GHz": 0.0, "stop_GHz": 1.0, "step_GHz": 1.0},
    }))
    out_dir = tmp_path / "out"
    out_dir.mkdir()
    code = main(["run", str(bad), "--out-dir", str(out_dir)])
    assert code == 2
    assert "bogus_key" in capsys.readouterr().err
    assert list(out_dir.iterdir()) == []  # nothing half-written


def test_fit_voigt_round_trip(tmp_path, capsys):
    # CLI units are GHz in, GHz out
    scan = make_voigt_scan(0.0, 0.84245, 0.105, 500.0, 50.0, 2.0, 161, 5.0,
                           seed=0)
    path = tmp_path / "scan.csv"
    rows = ["detuning_GHz,counts"]
    rows += [f"{x:.9g},{y:.9g}" for x, y in zip(scan.centers, scan.counts)]
    path.write_text("\n".join(rows) + "\n")

    assert _run(tmp_path, "fit", "voigt", "--input", str(path)) == 0
    out = capsys.readouterr().out
    assert "converged = True" in out
    params = _params(tmp_path / "fit_voigt.csv")
    assert params["f_voigt_GHz"] == pytest.approx(0.900, abs=0.02)
    assert params["f_gauss_GHz"] == pytest.approx(0.84245, abs=0.05)
    assert params["center_GHz"] == pytest.approx(0.0, abs=0.02)


def test_fit_emg_round_trip(tmp_path):
    decay = make_emg_decay(1.52, 0.3, 0.7, 1e4, 281, 14.0, -2.0, seed=0)
    path = tmp_path / "decay.csv"
    rows = ["time_ns,counts"]
    rows += [f"{x:.9g},{y:.9g}" for x, y in zip(decay.centers, decay.counts)]
    path.write_text("\n".join(rows) + "\n")
    assert _run(tmp_path, "fit", "emg", "--input", str(path)) == 0
    params = _params(tmp_path / "fit_emg.csv")
    assert params["lifetime_ns"] == pytest.approx(1.52, abs=0.05)
    assert params["sigma_ns"] == pytest.approx(0.3, abs=0.05)


def test_fit_rejects_wrong_header(tmp_path, capsys):
    path = tmp_path / "scan.csv"
    path.write_text("frequency,counts\n0.0,1.0\n1.0,2.0\n")
    assert _run(tmp_path, "fit", "voigt", "--input", str(path)) == 2
    assert "detuning_GHz,counts" in capsys.readouterr().err


def test_fit_g2_needs_rep_period(tmp_path, capsys):
    path = tmp_path / "g2.csv"
    path.write_text("time_ns,counts\n0.0,1.0\n1.0,2.0\n")
    assert _run(tmp_path, "fit", "g2", "--input", str(path)) == 2
    assert "rep-period" in capsys.readouterr().err


def test_fit_g2_flags_rejected_elsewhere(tmp_path, capsys):
    path = tmp_path / "scan.csv"
    path.write_text("detuning_GHz,counts\n0.0,1.0\n1.0,2.0\n")
    assert _run(tmp_path, "fit", "voigt", "--input", str(path),
                "--rep-period-ns", "12.5") == 2
    assert "apply to fit g2" in capsys.readouterr().err


def test_fit_missing_file(tmp_path, capsys):
    assert _run(tmp_path, "fit", "voigt", "--input",
                str(tmp_path / "nope.csv")) == 2
    assert "not found" in capsys.readouterr().err


def test_tune_trace_and_manifest(tmp_path, capsys):
    args = ("tune", "--offset-ghz", "8", "--seed", "3")
    assert _run(tmp_path, *args) == 0
    trace = tmp_path / "tune_trace.csv"
    text = trace.read_text()
    lines = text.splitlines()
    assert lines[0] == ("step,action,amount_mln,power_mW,duration_s,"
                        "instrument,reading_minus_target_GHz,"
                        "true_minus_target_GHz")
    assert {r.split(",")[1] for r in lines[1:]} <= {"inject", "ablate",
                                                    "measure"}
    meta = json.loads((tmp_path / "tune_manifest.json").read_text())
    assert meta["result"]["steps"] == len(lines) - 1
    assert abs(meta["result"]["true_residual_GHz"]) < 1.5
    assert meta["seed"] == 3
    assert "achieved_detuning_GHz" in capsys.readouterr().out

    assert _run(tmp_path, *args) == 0
    assert trace.read_text() == text


def test_tune_requires_exactly_one_target(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["tune"])
    assert exc.value.code == 2
    assert "--offset-ghz" in capsys.readouterr().err


def test_scan_single_point(tmp_path):
    assert _run(tmp_path, "scan", "--temperature-c", "25",
                "--pulse", "laser", "--start-ghz", "-40",
                "--stop-ghz", "-40", "--step-ghz", "1") == 0
    rows = (tmp_path / "scan.csv").read_text().splitlines()
    assert rows[0] == ("detuning_GHz,transmission,delay_ns,fwhm_ns,"
                       "multimodal_flag")
    vals = rows[1].split(",")
    assert float(vals[0]) == pytest.approx(-40.0)
    assert float(vals[1]) > 0.99


def test_out_dir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("CSPULSE_OUT_DIR", str(tmp_path))
    assert main(["chi", "--temperature-c", "80", "--start-ghz", "-2",
                 "--stop-ghz", "2", "--points", "11"]) == 0
    assert (tmp_path / "chi.csv").exists()


def test_run_preset_gas_curve(tmp_path):
    assert main(["run", "fig2b_gas", "--out-dir", str(tmp_path)]) == 0
    csv = tmp_path / "fig2b_gas_gas_curve.csv"
    rows = csv.read_text().splitlines()
    assert rows[0] == "cumulative_mln,shift_GHz,wavelength_nm"
    assert len(rows) == 22
    meta = json.loads((tmp_path / "fig2b_gas_manifest.json").read_text())
    assert meta["result"]["total_shift_GHz"] == pytest.approx(
        233.2118935389375, rel=1e-9)
