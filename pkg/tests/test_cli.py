import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from oracles import PLUS, SX, SZ
from qstatfn import cli, io
from qstatfn import operators as op

GOLDEN = Path(__file__).parent / "golden"
PSI = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)


@pytest.fixture
def files(tmp_path):
    mats = {
        "half": np.eye(2) / 2, "sz": SZ, "sx": SX, "plus": PLUS,
        "psi": np.outer(PSI, PSI.conj()), "third": np.eye(3) / 3,
        "mixed": np.diag([0.7, 0.3]), "bad": np.array([[1.0, 2.0], [0.0, 0.0]]),
    }
    paths = {}
    for name, m in mats.items():
        paths[name] = str(tmp_path / f"{name}.json")
        io.write_matrix(paths[name], m)
    paths["dir"] = tmp_path
    return paths


def run(args, capsys):
    code = cli.main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_statefn_golden(files, capsys):
    code, out, _ = run(["statefn", "--state", files["half"], "--obs", files["sz"], "--grid", "0:0.5:2"], capsys)
    assert code == 0
    assert out == (GOLDEN / "statefn_qmgf.csv").read_text()
    assert out.splitlines()[1:] == ["0,1,0", "0.5,1.1276259652,0"]


def test_statefn_functions(files, capsys):
    for fn in ("qcf", "qcgf", "qscf"):
        code, out, _ = run(["statefn", "--state", files["mixed"], "--obs", files["sz"],
                            "--function", fn, "--grid", "-1:1:3"], capsys)
        assert code == 0
        header, rows = io.read_csv(out)
        assert header == ["theta", "re", "im"] and len(rows) == 3
    assert rows[1] == [0.0, 0.0, 0.0]


def test_statefn_multivariable(files, capsys):
    code, out, _ = run(["statefn", "--state", files["psi"], "--obs", files["sx"], "--obs", files["sz"],
                        "--function", "mqmgf", "--ordering", "mh", "--grid", "-1:1:3"], capsys)
    assert code == 0
    header, rows = io.read_csv(out)
    assert header == ["theta_1", "theta_2", "re", "im"] and len(rows) == 9
    assert all(abs(r[3]) < 1e-12 for r in rows)


def test_qscf_zero_crossing_is_numerical_failure(files, capsys):
    code, _, err = run(["statefn", "--state", files["half"], "--obs", files["sz"],
                        "--function", "qscf", "--grid", "0:3.141592653589793:3"], capsys)
    assert code == 3 and err.startswith("error: ")


def test_quasiprob_golden(files, capsys):
    code, out, _ = run(["quasiprob", "--state", files["plus"], "--obs", files["sz"], "--obs", files["sx"]], capsys)
    assert code == 0
    assert out == (GOLDEN / "quasiprob_kd.csv").read_text()
    assert len(out.splitlines()) == 5


def test_quasiprob_bochner(files, capsys):
    report = files["dir"] / "report.json"
    code, out, err = run(["quasiprob", "--state", files["psi"], "--obs", files["sx"], "--obs", files["sz"],
                          "--bochner", "--report", report], capsys)
    assert code == 0
    assert err.strip() == "verdict: ComplexValued"
    data = json.loads(report.read_text())
    assert data["verdict"] == "ComplexValued" and data["grid_size"] == 49


def test_quasiprob_mh_real(files, capsys):
    code, out, _ = run(["quasiprob", "--kind", "mh", "--state", files["psi"],
                        "--obs", files["sx"], "--obs", files["sz"]], capsys)
    assert code == 0
    _, rows = io.read_csv(out)
    assert all(abs(r[-1]) <= 1e-12 for r in rows)


def test_wigner_golden_and_round_trip(files, capsys):
    code, out, _ = run(["wigner", "--state", files["third"]], capsys)
    assert code == 0
    assert out == (GOLDEN / "wigner_identity3.csv").read_text()
    table = files["dir"] / "w.csv"
    table.write_text(out)
    code, out, _ = run(["wigner", "--reconstruct", table], capsys)
    assert code == 0
    np.testing.assert_allclose(io.matrix_from_dict(json.loads(out)), np.eye(3) / 3, atol=1e-9)


def test_wigner_round_trip_d7(files, capsys):
    rho = op.random_density(7, np.random.default_rng(5))
    src = files["dir"] / "r7.json"
    io.write_matrix(src, rho)
    table = files["dir"] / "w7.csv"
    assert run(["wigner", "--state", src, "--output", table], capsys)[0] == 0
    code, out, _ = run(["wigner", "--reconstruct", table], capsys)
    assert code == 0
    np.testing.assert_allclose(io.matrix_from_dict(json.loads(out)), rho, atol=1e-9)


def test_geo_commands(files, capsys):
    code, out, _ = run(["geo", "chernoff", "--a", files["mixed"], "--b", files["mixed"]], capsys)
    assert code == 0
    _, rows = io.read_csv(out)
    assert len(rows) == 11 and all(r[1] == 0 for r in rows)
    code, out, _ = run(["geo", "relent", "--a", files["half"], "--b", files["mixed"]], capsys)
    assert code == 0
    _, rows = io.read_csv(out)
    assert rows[0][0] == pytest.approx(-0.5 * np.log(4 * 0.21), abs=1e-9)
    code, out, _ = run(["geo", "golden-thompson", "--a", files["sx"], "--b", files["sz"]], capsys)
    assert code == 0 and io.read_csv(out)[1][0][2] > 0
    code, out, _ = run(["geo", "mean", "--a", files["half"], "--b", files["mixed"]], capsys)
    assert code == 0
    np.testing.assert_allclose(io.matrix_from_dict(json.loads(out)),
                               np.diag(np.sqrt([0.35, 0.15])), atol=1e-12)
    for op_name in ("fidelity", "geo-mgf"):
        assert run(["geo", op_name, "--a", files["half"], "--b", files["mixed"]], capsys)[0] == 0


def test_estimate_noiseless(files, capsys):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text(json.dumps({
        "model": "tfim", "n_spins": 6, "beta": 0.05, "true_params": {"J": 1.0, "h": 0.5},
        "observables": ["O1", "O2", "O3"], "shots": 0, "seed": 1,
        "method": "qgmm", "moment_variant": "exact"}))
    code, out, _ = run(["estimate", cfg], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["phi_hat"]["J"] == pytest.approx(1.0, abs=1e-8)
    assert res["phi_hat"]["h"] == pytest.approx(0.5, abs=1e-8)
    assert res["std_errors"] == {"J": None, "h": None}


def test_estimate_with_shots_is_seeded(files, capsys):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text(json.dumps({
        "n_spins": 4, "beta": 0.1, "true_params": {"J": 1.0, "h": 0.5},
        "observables": ["O1", "O2"], "shots": 5000, "seed": 9, "method": "qmm"}))
    first = run(["estimate", cfg], capsys)
    assert first[0] == 0 and first == run(["estimate", cfg], capsys)
    other = run(["--seed", "10", "estimate", cfg], capsys)
    assert other[1] != first[1]
    assert json.loads(first[1])["std_errors"]["J"] > 0


@pytest.mark.parametrize("args, code", [
    (["statefn", "--state", "missing.json", "--obs", "x.json"], 2),
    (["bogus"], 2),
    ([], 2),
    (["statefn", "--state", "{half}", "--obs", "{bad}"], 2),
    (["statefn", "--state", "{sz}", "--obs", "{sz}"], 2),
    (["statefn", "--state", "{half}", "--obs", "{sz}", "--grid", "1:2"], 2),
    (["statefn", "--state", "{half}", "--obs", "{sz}", "--obs", "{sx}", "--ordering", "mh"], 2),
    (["wigner", "--state", "{half}"], 2),
    (["geo", "chernoff", "--a", "{plus}", "--b", "{half}"], 2),
    (["quasiprob", "--state", "{half}", "--obs", "{sz}"], 2),
])
def test_exit_codes(files, capsys, args, code):
    args = [a.format(**files) for a in args]
    got, out, err = run(args, capsys)
    assert got == code
    assert err.startswith("error: ") and err.count("\n") == 1
    assert out == ""


def test_negative_grid_values(files, capsys):
    code, out, _ = run(["statefn", "--state", files["half"], "--obs", files["sz"], "--grid", "-1:1:3"], capsys)
    assert code == 0 and out.splitlines()[1].startswith("-1,")


def test_threads_do_not_change_output(files, capsys, monkeypatch):
    args = ["statefn", "--state", files["mixed"], "--obs", files["sx"], "--function", "qcf", "--grid", "-2:2:41"]
    monkeypatch.setenv("QSTATFN_THREADS", "1")
    serial = run(args, capsys)
    monkeypatch.setenv("QSTATFN_THREADS", "4")
    assert run(args, capsys) == serial
    monkeypatch.setenv("QSTATFN_THREADS", "x")
    assert run(args, capsys)[0] == 2


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "qstatfn", "statefn", "--state", files["half"],
                           "--obs", files["sz"]], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "theta,re,im\n0,1,0\n"
