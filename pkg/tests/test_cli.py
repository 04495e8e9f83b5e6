import json

import numpy as np
import pytest

from levy_expfun.cli import main
from levy_expfun.experiments import STANDARD_MODELS


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "brownian.json"
    p.write_text(json.dumps(STANDARD_MODELS["brownian"]))
    return str(p)


def run(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_eval_psi(capsys, model_file):
    code, out = run(capsys, ["eval-psi", "--model", model_file, "--z", "2"])
    assert code == 0 and out["re"] == pytest.approx(2.0) and out["im"] == 0
    code, out = run(capsys, ["eval-psi", "--model", model_file, "--z", "0+1i", "--q", "1"])
    assert out["re"] == pytest.approx(-2.0) and out["im"] == pytest.approx(-1.0)


def test_wiener_hopf(capsys, model_file):
    code, a = run(capsys, ["wiener-hopf", "--model", model_file, "--q", "0.5", "--z", "1"])
    _, b = run(capsys, ["wiener-hopf", "--model", model_file, "--q", "0.5", "--z", "0"])
    rp = (1 + np.sqrt(3)) / 2
    assert code == 0 and a["re"] / b["re"] == pytest.approx((1 + rp) / rp, rel=1e-8)
    assert a["err_estimate"] < 1e-6


def test_bgamma_routes(capsys, model_file):
    _, prod = run(capsys, ["bgamma", "--model", model_file, "--q", "0.5", "--z", "1.7"])
    _, intg = run(capsys, ["bgamma", "--model", model_file, "--q", "0.5", "--z", "1.7",
                           "--route", "integral"])
    assert prod["route"] == "product" and intg["route"] == "integral"
    assert abs(np.log(prod["re"]) - np.log(intg["re"])) < 5e-4


def test_potential_csv(capsys, model_file, tmp_path):
    out_csv = tmp_path / "u.csv"
    code, out = run(capsys, ["potential", "--model", model_file, "--q", "2", "--grid=-30,20,1000", "--out", str(out_csv)])
    assert code == 0 and out["total"] == pytest.approx(0.5, rel=1e-6)
    data = np.loadtxt(out_csv, delimiter=",", skiprows=1)
    assert data.shape == (1000, 2) and data[:, 1].sum() == pytest.approx(0.5, rel=1e-6)


def test_mellin_and_limit_cdf(capsys, model_file):
    code, m = run(capsys, ["mellin", "--model", model_file, "--q", "0.5", "--z", "0.5+3i"])
    assert code == 0 and np.isfinite(m["re"])
    code, lc = run(capsys, ["limit-cdf", "--model", model_file, "--a", "0.5", "--alpha", "2",
                            "--x", "1.0"])
    assert code == 0 and 0 < lc["cdf"] < lc["total_mass"]


def test_simulate(capsys, model_file):
    argv = ["simulate", "--model", model_file, "--t", "1", "--a", "0.5", "--n", "2000",
            "--seed", "42"]
    _, a = run(capsys, argv)
    _, b = run(capsys, argv)
    assert a == b and a["seed"] == 42 and a["n"] == 2000
    _, c = run(capsys, argv + ["--x", "1e300"])
    assert c["mean"] == a["mean"]


def test_experiment_and_check(capsys, model_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(dict(model="brownian.json", a=0.5, t_list=[1.0, 2.0], N=1000,
                                   seed=3, outputs=str(tmp_path / "out"),
                                   experiment="upper_bound_decay", T_list=[2.0, 3.0])))
    code, out = run(capsys, ["experiment", "--config", str(cfg)])
    assert code in (0, 1) and out["name"] == "upper_bound_decay"
    assert (tmp_path / "out" / "upper_bound_decay.csv").exists()
    code, rep = run(capsys, ["check", "--model", model_file])
    assert code == 0 and rep["passed"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gamma": 0.0, "sigma2": -1.0, "jumps": []}))
    code, rep = run(capsys, ["check", "--model", str(bad)])
    assert code == 1 and rep["checks"][0]["name"] == "model_validation"


def test_errors_exit_2(capsys, tmp_path):
    p = tmp_path / "heavy.json"
    p.write_text(json.dumps(STANDARD_MODELS["heavy_tail"]))
    code, out = run(capsys, ["eval-psi", "--model", str(p), "--z", "0.5"])
    assert code == 2 and out["error"] == "DomainError"
    code, out = run(capsys, ["eval-psi", "--model", str(tmp_path / "missing.json"), "--z", "1"])
    assert code == 2
