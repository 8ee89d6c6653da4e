import json
import math
import subprocess
import sys

import numpy as np
import pytest

from matgeom.algebra import matrix_to_dict, read_matrix, write_matrix
from matgeom.cli import EXIT_MATH, EXIT_OK, EXIT_USAGE, main
from matgeom.flows import read_csv_columns
from matgeom.geometry import laplacian_apply, make_context

from conftest import I2, SZ


def run(tmp_path, command, config, *extra):
    path = tmp_path / f"{command}.json"
    path.write_text(json.dumps(config))
    return main([command, "--config", str(path), "--output", str(tmp_path / "out"), *extra])


def read_out(tmp_path, name):
    return (tmp_path / "out" / name).read_text()


def test_props_pass(tmp_path):
    assert run(tmp_path, "props", {"n": 4, "props": {"samples": 100}}) == EXIT_OK
    report = json.loads(read_out(tmp_path, "props.json"))
    assert report["pass"] and len(report["properties"]) == 8


def test_props_degenerate_fails(tmp_path, capsys):
    x = np.diag([0.0, 1.0, 2.0])
    write_matrix(tmp_path / "x.json", x)
    cfg = {"n": 3, "generators": {"x": "x.json", "y": "x.json"}, "props": {"samples": 5}}
    assert run(tmp_path, "props", cfg) == EXIT_MATH
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "a" in err["failing"] and "f" in err["failing"]
    report = json.loads(read_out(tmp_path, "props.json"))
    assert not report["pass"]


def test_props_zero_samples_is_usage_error(tmp_path, capsys):
    assert run(tmp_path, "props", {"n": 4, "props": {"samples": 0}}) == EXIT_USAGE
    assert json.loads(capsys.readouterr().err)["kind"] == "config"


def test_spectrum_n2(tmp_path):
    assert run(tmp_path, "spectrum", {"n": 2, "spectrum": {"dump_eigenmatrices": True}}) == EXIT_OK
    text = read_out(tmp_path, "spectrum.csv")
    header = text.splitlines()[0]
    assert header.startswith("# n=2 generators=clock_shift lambda1=")
    cols = read_csv_columns(text)
    np.testing.assert_allclose(cols["eigenvalue"], [0, 1, 1, 2], atol=1e-14)
    phi0 = read_matrix(tmp_path / "out" / "eigenmatrix_0000.json")
    assert abs(abs(np.trace(phi0)) - math.sqrt(2)) < 1e-12


def test_spectrum_n3_single_kernel_row(tmp_path):
    assert run(tmp_path, "spectrum", {"n": 3}) == EXIT_OK
    lam = read_csv_columns(read_out(tmp_path, "spectrum.csv"))["eigenvalue"]
    assert lam.size == 9 and np.sum(lam <= 1e-8 * lam.max()) == 1


def test_spectrum_degenerate_warns(tmp_path, capsys):
    x = np.diag([0.0, 1.0, 2.0])
    cfg = {"n": 3, "generators": {"x": matrix_to_dict(x), "y": matrix_to_dict(x)}}
    assert run(tmp_path, "spectrum", cfg) == EXIT_OK
    assert "warning" in capsys.readouterr().err
    lam = read_csv_columns(read_out(tmp_path, "spectrum.csv"))["eigenvalue"]
    assert np.sum(lam <= 1e-8 * lam.max()) > 1


def test_poisson_solves(tmp_path):
    a = np.array([[0.3, 1 - 2j], [1 + 2j, -0.3]])
    b = laplacian_apply(make_context(2), a)
    write_matrix(tmp_path / "b.json", b)
    assert run(tmp_path, "poisson", {"n": 2, "poisson": {"b": "b.json"}}) == EXIT_OK
    out = json.loads(read_out(tmp_path, "poisson.json"))
    assert set(out) == {"solution", "residual", "projected_source_norm"}
    sol = np.array([[complex(*z) for z in row] for row in out["solution"]["entries"]])
    np.testing.assert_allclose(sol, a, atol=1e-12)
    assert out["residual"] <= 1e-9


def test_poisson_not_solvable(tmp_path, capsys):
    cfg = {"n": 2, "poisson": {"b": matrix_to_dict(I2)}}
    assert run(tmp_path, "poisson", cfg) == EXIT_MATH
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "not solvable: trace = 2"
    assert err["trace"] == [2.0, 0.0]


@pytest.mark.parametrize("integrator", ["exact", "rk4"])
def test_heat_closed_form(tmp_path, integrator):
    cfg = {
        "n": 2,
        "heat": {"u0": matrix_to_dict(2 * I2 + SZ), "t_max": 3.0, "step": 0.01, "record_stride": 10,
                 "integrator": integrator, "dump_times": [1.0]},
    }
    assert run(tmp_path, "heat", cfg) == EXIT_OK
    cols = read_csv_columns(read_out(tmp_path, "trajectory.csv"))
    assert cols["t"][0] == 0 and cols["t"][-1] == pytest.approx(3.0)
    np.testing.assert_allclose(cols["dist_to_mean"], math.sqrt(2) * np.exp(-cols["t"]), atol=1e-8)
    np.testing.assert_allclose(cols["trace_re"], 4, atol=1e-10)
    dumped = read_matrix(tmp_path / "out" / "heat_state_t00010.json")
    np.testing.assert_allclose(dumped, 2 * I2 + math.exp(-1) * SZ, atol=1e-8)


def test_heat_random_u0_csv_round_trip(tmp_path):
    cfg = {"n": 4, "seed": 3, "heat": {"u0": {"random_pd": {"min_eig": 0.1, "unit_trace": True}}, "t_max": 2.0}}
    assert run(tmp_path, "heat", cfg) == EXIT_OK
    cols = read_csv_columns(read_out(tmp_path, "trajectory.csv"))
    np.testing.assert_allclose(cols["trace_re"], 1, atol=1e-10)
    assert np.all(cols["min_eig"] > 0)
    assert np.all(np.diff(cols["entropy"]) >= -1e-9)
    assert np.all(np.diff(cols["log_det"]) >= -1e-9)


def test_stability_identical(tmp_path):
    u = {"random_pd": {"unit_trace": True}}
    cfg = {"n": 3, "stability": {"u0": u, "v0": u, "times": [0, 0.5, 1, 2]}}
    assert run(tmp_path, "stability", cfg) == EXIT_OK
    cols = read_csv_columns(read_out(tmp_path, "stability.csv"))
    for name in ("hs_dist", "trace_dist", "eig_l1_gap", "entropy_gap", "contraction_envelope"):
        assert np.all(cols[name] == 0)
    summary = json.loads(read_out(tmp_path, "stability.json"))
    assert summary["pass"] and summary["fannes_dim"] == 9


def test_stability_bad_times_usage(tmp_path):
    u = {"random_pd": {}}
    cfg = {"n": 3, "stability": {"u0": u, "v0": u, "times": [1, 0]}}
    assert run(tmp_path, "stability", cfg) == EXIT_USAGE


def test_ricci_runs(tmp_path):
    cfg = {"n": 2, "ricci": {"c0": matrix_to_dict(2 * I2 + SZ), "t_max": 2.0, "step": 0.01, "record_stride": 20}}
    assert run(tmp_path, "ricci", cfg) == EXIT_OK
    cols = read_csv_columns(read_out(tmp_path, "ricci_trajectory.csv"))
    np.testing.assert_allclose(cols["trace_re"], 4, atol=1e-12)
    assert np.all(np.diff(cols["entropy"]) >= -1e-9)
    assert np.all(np.diff(cols["dist_to_mean"]) < 0)


def test_ricci_not_positive(tmp_path, capsys):
    cfg = {"n": 2, "ricci": {"c0": matrix_to_dict(SZ), "t_max": 1.0}}
    assert run(tmp_path, "ricci", cfg) == EXIT_MATH
    assert json.loads(capsys.readouterr().err)["kind"] == "NotPositiveError"


def test_usage_errors(tmp_path, capsys):
    assert main(["heat", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["heat", "--config", str(tmp_path / "bad.json")]) == EXIT_USAGE
    assert run(tmp_path, "heat", {"n": 2, "heat": {"t_max": 1.0}}) == EXIT_USAGE
    assert run(tmp_path, "heat", {"n": 2, "heat": {"u0": "nope.json", "t_max": 1.0}}) == EXIT_USAGE
    assert run(tmp_path, "heat", {"n": 3, "heat": {"n": 2}}) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert run(tmp_path, "poisson", {"n": 3, "poisson": {"b": matrix_to_dict(I2)}}) == EXIT_USAGE


def test_non_hermitian_generator(tmp_path):
    cfg = {"n": 2, "generators": {"x": matrix_to_dict(np.array([[0, 1], [0, 0]])), "y": matrix_to_dict(I2)}}
    assert run(tmp_path, "spectrum", cfg) == EXIT_USAGE


def test_seed_override_changes_output(tmp_path):
    cfg = {"n": 3, "seed": 1, "heat": {"u0": {"random_pd": {}}, "t_max": 1.0}}
    assert run(tmp_path, "heat", cfg) == EXIT_OK
    first = read_out(tmp_path, "trajectory.csv")
    assert run(tmp_path, "heat", cfg, "--seed", "2") == EXIT_OK
    assert read_out(tmp_path, "trajectory.csv") != first


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 2}))
    proc = subprocess.run(
        [sys.executable, "-m", "matgeom", "spectrum", "--config", str(cfg), "--output", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "spectrum.csv").exists()


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 2, "heta": {}}))
    assert main(["props", "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err
