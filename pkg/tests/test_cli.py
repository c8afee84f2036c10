import csv
import io
import json

import pytest
from mpmath import mp

from qstring.cli import main


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stdout=buf)
    return code, buf.getvalue()


def test_solve_acceptance_run():
    code, text = run("solve", "--q", "0.5", "--kappa", "0", "--n-max", "20", "--bits", "512")
    assert code == 0
    data = json.loads(text)
    assert len(data["a"]) == 20 and data["ok"]
    with mp.workprec(512):
        assert mp.mpf(data["residual_report"]["max_rel_residual"]) < mp.mpf("1e-30")
        assert data["a"][0] == data["a1_from_integral"]


def test_solve_bad_q(capsys):
    code, text = run("solve", "--q", "1.5")
    assert code == 2 and text == ""
    assert "q must lie in (0,1)" in capsys.readouterr().err


def test_solve_precision_exhausted(capsys):
    code, text = run("solve", "--q", "0.5", "--kappa", "0", "--n-max", "40", "--bits", "64")
    assert code == 3 and text == ""
    assert "precision exhausted" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ("solve", "--bits", "notanint"),
    ("solve", "--n-max", "0"),
    ("probe", "--delta", "abc"),
    ("shoot", "--bracket-lo", "0.5", "--bracket-hi", "0.4"),
    ("verify", "--seed-a1", "-1", "--n-max", "2", "--bits", "128"),
    ("frobnicate",),
])
def test_config_errors(argv):
    assert run(*argv)[0] == 2


def test_solve_csv():
    code, text = run("solve", "--n-max", "4", "--bits", "256", "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert code == 0
    assert rows[0] == ["n", "a_n", "residual"] and [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]


def test_shoot_default():
    code, text = run("shoot", "--q", "0.5", "--kappa", "0", "--horizon", "15")
    data = json.loads(text)
    assert code == 0 and data["agreement"] and data["converged"]
    with mp.workprec(512):
        lo, hi = map(mp.mpf, data["a1_interval"])
        assert lo <= mp.mpf(data["mu2"]) <= hi


def test_shoot_bracket_above_boundary(capsys):
    code, text = run("shoot", "--bracket-lo", "0.8", "--bracket-hi", "0.9")
    assert code == 4 and text == ""


def test_shoot_horizon_one():
    code, text = run("shoot", "--horizon", "1", "--bits", "256")
    data = json.loads(text)
    assert code == 0 and data["agreement"]
    with mp.workprec(256):
        assert mp.mpf(data["width"]) > mp.mpf("0.1")


def test_shoot_csv():
    code, text = run("shoot", "--horizon", "5", "--bits", "256", "--format", "csv")
    rows = dict(csv.reader(io.StringIO(text)))
    assert code == 0 and rows["agreement"] == "True" and "certificate.hi.index" in rows


@pytest.mark.parametrize("argv", [
    ("verify",),
    ("verify", "--q", "0.3", "--kappa", "2.5"),
    ("verify", "--n-max", "1", "--bits", "256"),
])
def test_verify_passes(argv):
    code, text = run(*argv)
    data = json.loads(text)
    assert code == 0 and data["ok"]
    assert all(c["pass"] for c in data["checks"].values())


def test_verify_tight_tolerance_fails():
    code, text = run("verify", "--n-max", "6", "--bits", "256", "--tol", "1e-300")
    assert code == 1 and not json.loads(text)["ok"]


def test_probe_reports_violation():
    code, text = run("probe", "--q", "0.5", "--kappa", "0", "--horizon", "40", "--delta", "1e-8")
    data = json.loads(text)
    assert code == 0 and data["perturbed_violation"]["index"] == 8


def test_moments_json_round_trip():
    from qstring.moments import MomentTable, build_table
    from qstring.qcore import PrecisionCfg, QParams
    from qstring.weight import normalize

    code, text = run("moments", "--q", "0.3", "--kappa", "1", "--n-max", "3", "--bits", "256")
    assert code == 0
    back = MomentTable.from_json(text, 256)
    cfg = PrecisionCfg(256)
    ref = build_table(8, normalize(QParams("0.3", "1"), cfg), cfg)
    assert back.mu == ref.mu and back.source == ref.source


def test_solve_output_round_trips():
    from conftest import moment_route

    code, text = run("solve", "--q", "0.5", "--n-max", "10", "--bits", "512")
    data = json.loads(text)
    seq = moment_route("0.5", "0", N=11)[5]
    with mp.workprec(512):
        parsed = [mp.mpf(s) for s in data["a"]]
    assert parsed == seq.values[:10]


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "qstring", "solve", "--n-max", "3", "--bits", "128"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["ok"]
