from __future__ import annotations

import hashlib
import math

import pytest

from conftest import ELL, ND_PER_ELL3, synthetic_species
from depolgas.cli import main

_BISECTION_COLUMN = "bisection_n_c_over_nD"


def _base_config(**overrides: str) -> str:
    species = synthetic_species()
    values = {
        "species.name": "synthetic",
        "species.omega_rad_per_s": repr(species.omega),
        "species.dipole_Cm": repr(species.dipole),
        "species.core_diameter_m": repr(species.core_diameter),
        "cutoff.ell_m": repr(ELL),
        "validation.min_ell_over_core": "0.8",
    }
    values.update(overrides)
    return "\n".join(f"{k} = {v}" for k, v in values.items() if v is not None) + "\n"


def _write_config(tmp_path, text: str, name: str = "run.conf"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _read_rows(out_dir, command: str):
    lines = (out_dir / f"{command}.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]
            if line and not line.startswith("#")]
    footer = [line for line in lines if line.startswith("#")]
    return rows, footer


def test_kernel_check_runs_and_manifests_are_consistent(tmp_path):
    cfg = _write_config(tmp_path, _base_config(
        **{"kernel_check.r_over_ell": "0.0,1.0,2.0"}))
    out = tmp_path / "out"
    assert main(["kernel-check", "--config", cfg, "--out", str(out)]) == 0
    rows, _ = _read_rows(out, "kernel-check")
    assert [row["r_over_ell"] for row in rows] == ["0", "1", "2"]
    for row in rows:
        assert float(row["route_disagreement"]) < 1e-9
        assert row["error"] == ""
        assert float(row["trK"]) == pytest.approx(float(row["2Gamma"]), rel=1e-12)
    # manifest hash covers the exact CSV body
    body = (out / "kernel-check.csv").read_bytes()
    manifest = (out / "manifest.txt").read_text()
    assert f"csv_sha256 = {hashlib.sha256(body).hexdigest()}" in manifest
    assert "wall_time_s" in manifest
    assert (out / "resolved_config.txt").exists()


def test_kernel_check_workers_do_not_change_output(tmp_path):
    cfg = _write_config(tmp_path, _base_config(
        **{"kernel_check.r_over_ell": "0.0,0.5,1.0,3.0"}))
    out1, out4 = tmp_path / "w1", tmp_path / "w4"
    assert main(["kernel-check", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["kernel-check", "--config", cfg, "--out", str(out4),
                 "--workers", "4"]) == 0
    assert (out1 / "kernel-check.csv").read_bytes() == \
        (out4 / "kernel-check.csv").read_bytes()


def test_shift_outputs_linear_shift(tmp_path):
    cfg = _write_config(tmp_path, _base_config(
        **{"meanfield.density_ratios": "0.0,1.0,2.0",
           "rdf.sigma_m": repr(0.5 * ELL)}))
    out = tmp_path / "out"
    assert main(["shift", "--config", cfg, "--out", str(out)]) == 0
    rows, footer = _read_rows(out, "shift")
    assert float(rows[0]["varsigma"]) == 0.0
    s1 = float(rows[1]["varsigma"])
    s2 = float(rows[2]["varsigma"])
    assert s2 == pytest.approx(2.0 * s1, rel=1e-12)
    assert any(line.startswith("# J_overlap = ") for line in footer)
    assert any(line.startswith("# g_zero = 0") for line in footer)


def test_dispersion_reference_rows(tmp_path):
    # with a vanishing core the hard-step overlap is exactly the unit J,
    # reproducing the reference branch values at rho = 0, 1, 3
    cfg = _write_config(tmp_path, _base_config(
        **{"species.core_diameter_m": "0.0",
           "meanfield.density_ratios": "0.0,1.0,3.0"}))
    out = tmp_path / "out"
    assert main(["dispersion", "--config", cfg, "--out", str(out)]) == 0
    rows, _ = _read_rows(out, "dispersion")
    assert len(rows) == 3
    by_rho = {row["density_ratio"]: row for row in rows}
    assert float(by_rho["0"]["s2_plus_over_wW"]) == pytest.approx(-1.0, rel=1e-12)
    assert float(by_rho["1"]["s2_plus_over_wW"]) == pytest.approx(
        (-4.0 + math.sqrt(10.0)) / 3.0, rel=1e-9)
    assert abs(float(by_rho["3"]["s2_plus_over_wW"])) < 1e-8
    assert by_rho["1"]["stable"] == "true"


def test_critical_small_core_lands_near_three(tmp_path):
    cfg = _write_config(tmp_path, _base_config(
        **{"rdf.sigma_m": repr(0.02 * ELL)}))
    out = tmp_path / "out"
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 0
    rows, footer = _read_rows(out, "critical")
    (row,) = rows
    ratio = float(row["n_c_over_nD"])
    assert abs(ratio - 3.0) < 1e-3
    assert float(row[_BISECTION_COLUMN]) == pytest.approx(ratio, rel=1e-7)
    n_dicke = ND_PER_ELL3 / ELL**3
    assert float(row["n_c_per_m3"]) == pytest.approx(ratio * n_dicke, rel=1e-6)
    assert any(line.startswith("# n_D_per_m3 = ") for line in footer)


def test_critical_reports_missing_instability_in_the_row(tmp_path):
    # an ideal-gas distribution has no critical density; that is a converged
    # answer, reported in the row error column with a success exit code
    cfg = _write_config(tmp_path, _base_config(**{"rdf.model": "ideal"}))
    out = tmp_path / "out"
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 0
    rows, _ = _read_rows(out, "critical")
    (row,) = rows
    assert row["n_c_over_nD"] == ""
    assert "no instability" in row["error"]
    assert float(row["J_overlap"]) == pytest.approx(1.0, abs=1e-9)


def test_microsim_smoke_run_without_crossing(tmp_path):
    # one long-wavelength mode shell; densities far below its threshold
    cfg = _write_config(tmp_path, _base_config(
        **{"microsim.box_over_ell": "8.0",
           "microsim.lambda_min_over_ell": "8.0",
           "microsim.density_ratios": "0.3,0.5",
           "microsim.replicas": "3"}))
    out = tmp_path / "out"
    assert main(["microsim", "--config", cfg, "--out", str(out)]) == 0
    rows, footer = _read_rows(out, "microsim")
    volume = (8.0 * ELL) ** 3
    n_dicke = ND_PER_ELL3 / ELL**3
    for row, rho in zip(rows, (0.3, 0.5)):
        assert float(row["density_over_nD"]) == pytest.approx(rho, rel=1e-12)
        assert int(row["n_atoms"]) == round(rho * n_dicke * volume)
        assert float(row["min_eig_mean"]) > 0.0
        assert row["error"] == ""
    assert "# threshold_low_over_nD = none" in footer


def test_microsim_csv_is_deterministic_and_seed_sensitive(tmp_path):
    text = _base_config(
        **{"microsim.box_over_ell": "6.0",
           "microsim.lambda_min_over_ell": "4.0",
           "microsim.density_ratios": "0.4,0.6",
           "microsim.replicas": "2"})
    cfg = _write_config(tmp_path, text)
    outs = [tmp_path / f"out{i}" for i in range(3)]
    assert main(["microsim", "--config", cfg, "--out", str(outs[0])]) == 0
    assert main(["microsim", "--config", cfg, "--out", str(outs[1])]) == 0
    assert main(["microsim", "--config", cfg, "--out", str(outs[2]),
                 "--seed", "99"]) == 0
    body0 = (outs[0] / "microsim.csv").read_bytes()
    assert body0 == (outs[1] / "microsim.csv").read_bytes()
    assert body0 != (outs[2] / "microsim.csv").read_bytes()
    assert "seed = 99" in (outs[2] / "manifest.txt").read_text()
    # manifests agree line for line except the wall-time entry
    m0 = (outs[0] / "manifest.txt").read_text().splitlines()
    m1 = (outs[1] / "manifest.txt").read_text().splitlines()
    diff = [a for a, b in zip(m0, m1) if a != b]
    assert all(line.startswith("wall_time_s") for line in diff)


def test_output_directory_is_create_only(tmp_path, capsys):
    cfg = _write_config(tmp_path, _base_config(**{"rdf.sigma_m": repr(0.5 * ELL)}))
    out = tmp_path / "out"
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 0
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 2
    assert "refusing to overwrite" in capsys.readouterr().err


def test_missing_required_key_exits_with_config_error(tmp_path, capsys):
    cfg = _write_config(tmp_path, _base_config(**{"species.dipole_Cm": None}))
    assert main(["critical", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "missing required config key" in capsys.readouterr().err


def test_scale_separation_violation_exits_with_config_error(tmp_path, capsys):
    cfg = _write_config(tmp_path, _base_config(
        **{"microsim.lambda_min_over_ell": "1.0"}))
    assert main(["microsim", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "lambda_min >= 4" in capsys.readouterr().err


def test_infeasible_packing_exits_with_sampling_error(tmp_path, capsys):
    # ratio 3.0 keeps the matrix under the dimension guard but pushes the
    # hard-sphere packing fraction to 0.39, past the insertion refusal at 0.3
    cfg = _write_config(tmp_path, _base_config(
        **{"microsim.density_ratios": "3.0", "microsim.replicas": "2"}))
    assert main(["microsim", "--config", cfg, "--out", str(tmp_path / "o")]) == 4
    assert "packing fraction" in capsys.readouterr().err


def test_environment_override_reaches_the_run(tmp_path, monkeypatch):
    monkeypatch.setenv("DEPOLGAS_RDF_SIGMA_M", repr(0.5 * ELL))
    cfg = _write_config(tmp_path, _base_config())
    out = tmp_path / "out"
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 0
    resolved = (out / "resolved_config.txt").read_text()
    assert f"rdf.sigma_m = {0.5 * ELL!r}" in resolved
    rows, _ = _read_rows(out, "critical")
    # sigma = 0.5 ell keeps more of the overlap than the 1.15 ell core would
    assert float(rows[0]["J_overlap"]) > 0.98
