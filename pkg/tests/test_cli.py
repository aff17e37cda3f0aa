import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from lremreg import LremModel, SampledWeight
from lremreg.cli import main
from lremreg.errors import ModelFileError
from lremreg.examples import cagan, new_keynesian
from lremreg.io import (
    model_to_dict,
    read_model,
    read_weight,
    weight_to_dict,
    write_model,
    write_weight,
)

from _models import random_model


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def cagan_files(tmp_path, capsys):
    code, _, _ = run(capsys, "example", "cagan", "--out", tmp_path / "cagan.json")
    assert code == 0
    return tmp_path / "cagan.json", tmp_path / "cagan.weight-constant.json", tmp_path / "cagan.weight-band.json"


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


class TestFiles:
    def test_example_cagan_matrices(self, cagan_files):
        m = read_model(cagan_files[0])
        assert np.array_equal(m.Gamma0, [[1, -2], [1, 0]])
        assert np.array_equal(m.Gamma1, [[0, 0], [0, 1]])
        assert np.array_equal(m.Psi, [[1], [0]]) and np.array_equal(m.Pi, [[0], [1]])
        assert np.array_equal(read_weight(cagan_files[1]).W, np.diag([1.0, 0.0]))
        band = read_weight(cagan_files[2])
        assert band.bands[0].lo == pytest.approx(2 * np.pi / 32) and band.bands[0].hi == pytest.approx(2 * np.pi / 4)

    def test_nongeneric_example(self, tmp_path, capsys):
        assert run(capsys, "example", "nongeneric", "--theta", "1e-6", "--out", tmp_path / "ng.json")[0] == 0
        m = read_model(tmp_path / "ng.json")
        assert np.array_equal(m.Psi[:, 0], [-1e-6, 0, 0, 0])
        assert np.array_equal(read_weight(tmp_path / "ng.weight-constant.json").W, np.diag([1.0, 1.0, 0.0, 0.0]))

    def test_nongeneric_theta_zero_rejected(self, tmp_path, capsys):
        assert run(capsys, "example", "nongeneric", "--theta", "0", "--out", tmp_path / "x.json")[0] == 1

    def test_nk_requires_all_parameters(self, tmp_path, capsys):
        code, _, err = run(capsys, "example", "nk", "--tau", "0.5", "--out", tmp_path / "nk.json")
        assert code == 1 and "--beta" in err

    def test_nk_zero_persistence(self):
        m = new_keynesian(tau=0.5, beta=0.99, kappa=0.3, rho_R=0.0, psi1=1.5, psi2=0.2, rho_g=0.0, rho_z=0.0)
        G1 = m.Gamma1
        assert np.array_equal(G1[2:], np.zeros((3, 5)))
        assert G1[1, 0] == 0.3 and G1[1, 4] == -0.3

    def test_unknown_example(self, capsys):
        assert run(capsys, "example", "nope")[0] == 1

    @pytest.mark.parametrize("seed", range(10))
    def test_model_round_trip_bit_exact(self, tmp_path, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng)
        m = LremModel(m.Gamma0 * np.pi, m.Gamma1 / 3.0, m.Psi, m.Pi, Sigma_zz=np.diag(rng.uniform(0.1, 2, m.l)))
        write_model(m, tmp_path / "m.json")
        back = read_model(tmp_path / "m.json")
        for key in ("Gamma0", "Gamma1", "Psi", "Pi", "Sigma_zz"):
            assert np.array_equal(getattr(m, key), getattr(back, key))
            assert getattr(m, key).tobytes() == getattr(back, key).tobytes()

    def test_weight_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        Ws = []
        for _ in range(4):
            G = rng.normal(size=(2, 2))
            Ws.append(G @ G.T)
        spec = SampledWeight(omega=np.sort(rng.uniform(0, np.pi, 4)), W=Ws)
        write_weight(spec, tmp_path / "w.json")
        back = read_weight(tmp_path / "w.json")
        assert np.array_equal(back.omega, spec.omega) and np.array_equal(back.W, spec.W)

    def test_period_quarters(self, tmp_path):
        doc = {"schema": "lrem-weight/1", "variant": "bands", "default": [[1.0]], "bands": [{"period_quarters": [4, 32], "W": [[0.0]]}]}
        spec = read_weight(write_json(tmp_path / "w.json", doc))
        assert spec.bands[0].lo == pytest.approx(2 * np.pi / 32) and spec.bands[0].hi == pytest.approx(np.pi / 2)

    def test_unknown_fields_rejected(self, tmp_path):
        doc = model_to_dict(cagan())
        doc = json.loads(json.dumps({k: (v.tolist() if hasattr(v, "tolist") else v) for k, v in doc.items()}))
        doc["colour"] = "blue"
        doc["Gamma2"] = [[0]]
        with pytest.raises(ModelFileError, match=r"\['Gamma2', 'colour'\]"):
            read_model(write_json(tmp_path / "m.json", doc))

    def test_shape_error_names_field(self, tmp_path):
        doc = json.loads(json.dumps({k: (v.tolist() if hasattr(v, "tolist") else v) for k, v in model_to_dict(cagan()).items()}))
        doc["Psi"] = [1, 2, 3]
        with pytest.raises(ModelFileError, match="'Psi'"):
            read_model(write_json(tmp_path / "m.json", doc))

    def test_json_syntax_error_has_line(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text('{\n  "schema": "lrem-model/1",\n  "n": 2,,\n}')
        code, _, err = run(capsys, "check", p)
        assert code == 1 and "line 3" in err

    def test_weight_schema_checked(self, tmp_path):
        with pytest.raises(ModelFileError, match="schema"):
            read_weight(write_json(tmp_path / "w.json", {"variant": "constant", "W": [[1.0]]}))

    def test_weight_to_dict_tags(self, cagan_files):
        assert weight_to_dict(read_weight(cagan_files[2]))["variant"] == "bands"


class TestCheck:
    def test_cagan_indeterminate(self, cagan_files, capsys):
        code, out, _ = run(capsys, "check", cagan_files[0])
        assert code == 10
        assert "indeterminacy dimension: 1" in out and "verdict: indeterminate" in out

    def test_unique_model(self, tmp_path, capsys):
        m = LremModel(Gamma0=np.eye(2), Gamma1=np.diag([0.5, 0.2]), Psi=np.zeros((2, 0)), Pi=np.zeros((2, 0)))
        write_model(m, tmp_path / "m.json")
        assert run(capsys, "check", tmp_path / "m.json", "--json", tmp_path / "r.json")[0] == 0
        assert json.loads((tmp_path / "r.json").read_text())["verdict"] == "unique"

    def test_nongeneric(self, tmp_path, capsys):
        run(capsys, "example", "nongeneric", "--theta", "0.1", "--out", tmp_path / "ng.json")
        assert run(capsys, "check", tmp_path / "ng.json")[0] == 10

    def test_no_solution(self, tmp_path, capsys):
        m = LremModel(Gamma0=np.eye(2), Gamma1=np.diag([0.5, 2.0]), Psi=[[1.0], [1.0]], Pi=np.zeros((2, 1)))
        write_model(m, tmp_path / "m.json")
        assert run(capsys, "check", tmp_path / "m.json")[0] == 20
        assert run(capsys, "solve", tmp_path / "m.json")[0] == 20

    def test_unit_root(self, tmp_path, capsys):
        m = LremModel(Gamma0=np.eye(1), Gamma1=np.eye(1), Psi=[[1.0]], Pi=[[1.0]])
        write_model(m, tmp_path / "m.json")
        code, _, err = run(capsys, "check", tmp_path / "m.json")
        assert code == 2 and "UnitRoot" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "check", tmp_path / "none.json")[0] == 1

    def test_bad_flag(self, capsys):
        assert run(capsys, "solve", "--frobnicate")[0] == 1


class TestSolve:
    def test_cagan_regularized(self, cagan_files, tmp_path, capsys):
        out = tmp_path / "sol.json"
        assert run(capsys, "solve", cagan_files[0], "--weight", cagan_files[1], "--out", out)[0] == 0
        doc = json.loads(out.read_text())
        assert np.allclose(np.array(doc["impact"])[:, 0], [0.25, -0.375], atol=1e-12)
        assert doc["provenance"] == "regularized"
        assert "B_star" in doc and "Xi" in doc
        assert "0.24999999999999992" in out.read_text()

    def test_cagan_band_differs(self, cagan_files, capsys):
        _, a, _ = run(capsys, "solve", cagan_files[0], "--weight", cagan_files[1])
        _, b, _ = run(capsys, "solve", cagan_files[0], "--weight", cagan_files[2])
        ia, ib = np.array(json.loads(a)["impact"]), np.array(json.loads(b)["impact"])
        assert np.abs(ia - ib).max() > 0.01

    def test_unique_model_regularize_identical(self, tmp_path, capsys):
        m = random_model(np.random.default_rng(4), indeterminate=False)
        write_model(m, tmp_path / "m.json")
        _, plain, _ = run(capsys, "solve", tmp_path / "m.json")
        code, reg, _ = run(capsys, "solve", tmp_path / "m.json", "--regularize")
        assert code == 0 and plain == reg

    def test_non_unique_regularized_exit(self, cagan_files, tmp_path, capsys):
        w = write_json(tmp_path / "zero.json", {"schema": "lrem-weight/1", "variant": "constant", "W": [[0, 0], [0, 0]]})
        out = tmp_path / "sol.json"
        code, _, err = run(capsys, "solve", cagan_files[0], "--weight", w, "--out", out)
        assert code == 11 and "minimal-norm" in err
        assert json.loads(out.read_text())["diagnostics"]["regularization"]["selection"] == "minimal-norm"

    def test_csv_format(self, cagan_files, capsys):
        _, out, _ = run(capsys, "solve", cagan_files[0], "--regularize", "--format", "csv")
        table = rows(out)
        assert {r["matrix"] for r in table} >= {"Theta1", "impact", "eta_load", "Xi"}

    def test_deterministic(self, cagan_files, tmp_path, capsys):
        for name in ("a", "b"):
            run(capsys, "solve", cagan_files[0], "--weight", cagan_files[2], "--out", tmp_path / name)
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


class TestIrfSpectrum:
    def test_cagan_irf(self, cagan_files, capsys):
        _, out, _ = run(capsys, "irf", cagan_files[0], "--weight", cagan_files[1], "--horizon", 2, "--rows", "X")
        vals = [float(r["value"]) for r in rows(out)]
        assert np.allclose(vals, [0.25, -0.375, -0.1875], atol=1e-12)

    def test_horizon_zero(self, cagan_files, capsys):
        _, out, _ = run(capsys, "irf", cagan_files[0], "--horizon", 0)
        assert {r["lag"] for r in rows(out)} == {"0"}

    def test_unknown_row(self, cagan_files, capsys):
        assert run(capsys, "irf", cagan_files[0], "--rows", "Q")[0] == 1

    def test_nongeneric_baseline_lag_one(self, tmp_path, capsys):
        run(capsys, "example", "nongeneric", "--theta", "1e-6", "--out", tmp_path / "ng.json")
        _, out, _ = run(capsys, "irf", tmp_path / "ng.json", "--horizon", 2, "--rows", "X1,X2")
        lag1 = {(r["variable"], r["shock"]): float(r["value"]) for r in rows(out) if r["lag"] == "1"}
        assert lag1[("X1", "eps2")] == pytest.approx(1e6)

    def test_cagan_flat_spectrum(self, cagan_files, capsys):
        _, out, _ = run(capsys, "spectrum", cagan_files[0], "--weight", cagan_files[1], "--grid", 64)
        f11 = np.array([float(r["re"]) for r in rows(out) if r["i"] == "1" and r["j"] == "1"])
        assert len(f11) == 64
        assert np.allclose(f11, 0.25 / (2 * np.pi), rtol=1e-10)

    def test_identity_model_spectrum(self, tmp_path, capsys):
        m = LremModel(Gamma0=np.eye(2), Gamma1=np.zeros((2, 2)), Psi=np.eye(2), Pi=np.zeros((2, 0)))
        write_model(m, tmp_path / "m.json")
        _, out, _ = run(capsys, "spectrum", tmp_path / "m.json", "--grid", 5)
        for r in rows(out):
            expected = 1 / (2 * np.pi) if r["i"] == r["j"] else 0.0
            assert float(r["re"]) == pytest.approx(expected, abs=1e-15)

    def test_spectrum_trapezoid_matches_covariance(self, cagan_files, tmp_path, capsys):
        # baseline Cagan solution; its variance comes from the solve output
        _, out, _ = run(capsys, "spectrum", cagan_files[0], "--grid", 2049)
        table = rows(out)
        w = np.array([float(r["omega"]) for r in table if r["i"] == "1" and r["j"] == "1"])
        f = np.array([float(r["re"]) for r in table if r["i"] == "1" and r["j"] == "1"])
        integral = 2 * np.sum((f[1:] + f[:-1]) / 2 * np.diff(w))
        from lremreg import baseline_solution, decompose, stationary_covariance

        V = stationary_covariance(baseline_solution(decompose(read_model(cagan_files[0]))))
        assert integral == pytest.approx(V[0, 0], rel=1e-8)


class TestSimulate:
    def test_cagan_regularized_passes(self, cagan_files, capsys):
        code, out, err = run(capsys, "simulate", cagan_files[0], "--weight", cagan_files[1], "--T", 10000, "--seed", 1)
        assert code == 0 and "FAIL" not in err
        assert len(rows(out)) == 10000

    def test_byte_identical(self, cagan_files, tmp_path, capsys):
        for name in ("a.csv", "b.csv"):
            run(capsys, "simulate", cagan_files[0], "--regularize", "--T", 200, "--seed", 7, "--out", tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_saved_solution(self, cagan_files, tmp_path, capsys):
        run(capsys, "solve", cagan_files[0], "--regularize", "--out", tmp_path / "s.json")
        code, _, _ = run(capsys, "simulate", cagan_files[0], "--solution", tmp_path / "s.json", "--T", 500)
        assert code == 0

    def test_mismatched_solution_rejected(self, cagan_files, tmp_path, capsys):
        run(capsys, "example", "nongeneric", "--theta", "0.1", "--out", tmp_path / "ng.json")
        run(capsys, "solve", tmp_path / "ng.json", "--out", tmp_path / "ng-sol.json")
        code, _, err = run(capsys, "simulate", cagan_files[0], "--solution", tmp_path / "ng-sol.json")
        assert code == 1 and "do not match" in err

    def test_same_shape_other_model_rejected(self, cagan_files, tmp_path, capsys):
        other = LremModel(Gamma0=[[1.0, -3.0], [1.0, 0.0]], Gamma1=[[0, 0], [0, 1.0]], Psi=[[1.0], [0]], Pi=[[0], [1.0]])
        write_model(other, tmp_path / "o.json")
        run(capsys, "solve", tmp_path / "o.json", "--out", tmp_path / "o-sol.json")
        code, _, err = run(capsys, "simulate", cagan_files[0], "--solution", tmp_path / "o-sol.json")
        assert code == 1 and "different model" in err

    def test_residual_failure_exit(self, cagan_files, tmp_path, capsys):
        run(capsys, "solve", cagan_files[0], "--regularize", "--out", tmp_path / "s.json")
        doc = json.loads((tmp_path / "s.json").read_text())
        doc["impact"] = [[1.0], [1.0]]
        write_json(tmp_path / "s.json", doc)
        assert run(capsys, "simulate", cagan_files[0], "--solution", tmp_path / "s.json", "--T", 100)[0] == 3


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "lremreg", "example", "cagan", "--out", str(tmp_path / "c.json")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    res = subprocess.run([sys.executable, "-m", "lremreg", "check", str(tmp_path / "c.json")], capture_output=True, text=True)
    assert res.returncode == 10
