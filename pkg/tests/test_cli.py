import json
import math

import numpy as np
import pytest

from gordon_kit.cli import main
from gordon_kit.formats import dump_coefficients
from gordon_kit.jacobi import CoeffSeq
from gordon_kit.report import read_csv

BOUND_OK = {"mode": "jacobi-bound", "C": 1.0, "norms": {"norm_a": 1, "norm_ainv": 1, "norm_b": 0}}
CONST = {"generator": "constant", "params": {"a": 1, "b": 0, "window": [-10, 30]}}


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="run.json"):
        p = tmp_path / name
        p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(p)

    return _write


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_jacobi_bound(write, capsys):
    cfg = write({"mode": "jacobi-bound", "C": 2 * math.log(3), "norms": {"norm_a": 1, "norm_ainv": 1, "norm_b": 0}})
    code, out, _ = run_cli(capsys, "jacobi-bound", "--config", cfg)
    assert code == 0
    meta, rows = read_csv(out)
    assert float(rows[0]["disk_radius"]) == pytest.approx(1.0)
    assert meta["disk_radius"] == pytest.approx(1.0)


def test_empty_disk_declines(write, capsys):
    cfg = write({"mode": "jacobi-bound", "C": 0.1, "norms": {"norm_a": 1, "norm_ainv": 1, "norm_b": 0}})
    code, _, err = run_cli(capsys, "jacobi-bound", "--config", cfg)
    assert code == 2 and "declined" in err


def test_periodic_scan_certified_and_thread_independent(write, capsys, tmp_path):
    doc = {"mode": "jacobi-scan", "C": 2 * math.log(3), "coefficients": CONST, "periods": [1, 2, 4],
           "grid": {"counts": [3, 3]}}
    cfg = write(doc)
    outs = []
    for threads in ("1", "3"):
        out_path = str(tmp_path / f"scan{threads}.json")
        code, _, _ = run_cli(capsys, "jacobi-scan", "--config", cfg, "--out", out_path, "--format", "json",
                             "--threads", threads)
        assert code == 0
        outs.append(open(out_path).read())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert len(rep["rows"]) == 27 and all(r["certified"] for r in rep["rows"])
    assert rep["meta"]["uncertified_points"] == 0


def test_nonperiodic_scan_declines(write, capsys, tmp_path):
    rng = np.random.default_rng(1)
    coeffs = CoeffSeq(-10, np.ones(41), 0.5 * rng.normal(size=41))
    dump_coefficients(coeffs, str(tmp_path / "coef.json"))
    cfg = write({"mode": "jacobi-scan", "C": 5.0, "coefficients": {"file": "coef.json"}, "periods": [1, 2, 4],
                 "grid": {"counts": [2, 2]}})
    code, out, _ = run_cli(capsys, "jacobi-scan", "--config", cfg)
    assert code == 2
    meta, rows = read_csv(out)
    assert meta["declined"] is True and meta["uncertified_points"] > 0


def test_spectrum(write, capsys):
    cfg = write({"mode": "spectrum", "N": 10, "coefficients": CONST, "start": 0})
    code, out, _ = run_cli(capsys, "spectrum", "--config", cfg)
    assert code == 0
    _, rows = read_csv(out)
    vals = sorted(float(r["eigenvalue_re"]) for r in rows)
    np.testing.assert_allclose(vals, np.sort(2 * np.cos(np.arange(1, 11) * np.pi / 11)), atol=1e-12)


def test_verify(write, capsys):
    cfg = write({"mode": "verify", "trials": 10, "output": {"format": "json"}})
    code, out, _ = run_cli(capsys, "verify", "--config", cfg)
    assert code == 0
    assert all(r["passed"] for r in json.loads(out)["rows"])


def test_quasi_gen(write, capsys):
    b = {"sampler": "trig", "coeffs": {"1": [5e-7, 0], "-1": [5e-7, 0]}}
    lv = {"generator": "liouville", "params": {"depth": 5, "first_quotient": 1, "b": b}}
    cfg = write({"mode": "quasi-gen", "C": 2 * math.log(2 + 5e-5), "coefficients": lv, "depths": [2, 3, 4]})
    code, out, _ = run_cli(capsys, "quasi-gen", "--config", cfg)
    assert code == 0
    meta, rows = read_csv(out)
    assert meta["decaying"] is True and [r["q"] for r in rows] == ["2", "9", "177149"]
    assert meta["partial_quotients"][-1] == "<354299-bit integer>"
    assert meta["disk_radius"] > 0
    gold = write({"mode": "quasi-gen", "C": 2 * math.log(2 + 5e-5),
                  "coefficients": {"generator": "golden", "params": {"depth": 60, "b": b}},
                  "depths": [3, 4, 5, 6]}, "gold.json")
    code, _, _ = run_cli(capsys, "quasi-gen", "--config", gold)
    assert code == 2


def test_sl_defect_and_bound(write, capsys):
    comb = {"generator": "gordon_comb", "params": {"weight": 0.01}}
    cfg = write({"mode": "sl-defect", "coefficients": comb, "periods": [4, 8, 16]})
    code, out, _ = run_cli(capsys, "sl-defect", "--config", cfg)
    assert code == 0
    _, rows = read_csv(out)
    assert all(float(r["rate"]) > 2 for r in rows)
    cfg = write({"mode": "sl-bound", "C": 1.0, "coefficients": comb}, "b.json")
    code, out, _ = run_cli(capsys, "sl-bound", "--config", cfg)
    assert code == 0
    assert float(read_csv(out)[1][0]["disk_radius"]) == pytest.approx(0.99, abs=1e-3)


def test_toml_config(write, capsys):
    cfg = write('mode = "sl-bound"\nC = 1.0\n[norms]\nnorm_ainv = 1\nmu_unif = 0.5\n', "run.toml")
    code, out, _ = run_cli(capsys, "sl-bound", "--config", cfg, "--format", "json")
    assert code == 0 and json.loads(out)["rows"][0]["disk_radius"] == 0.5


def test_errors(write, capsys):
    bad = write('{"mode": "verify",\n "seed": }', "bad.json")
    code, _, err = run_cli(capsys, "verify", "--config", bad)
    assert code == 1 and "line 2, column" in err
    noc = write({"mode": "jacobi-bound", "norms": {"norm_a": 1, "norm_ainv": 1, "norm_b": 0}}, "noc.json")
    code, _, err = run_cli(capsys, "jacobi-bound", "--config", noc)
    assert code == 1 and "invalid field C" in err
    code, _, err = run_cli(capsys, "verify", "--config", write(BOUND_OK, "ok.json"))
    assert code == 1 and "does not match" in err
    code, _, err = run_cli(capsys, "verify", "--config", noc + ".missing")
    assert code == 1
    missing = write({"mode": "spectrum", "N": 3, "coefficients": {"file": "nowhere.json"}}, "m.json")
    code, _, _ = run_cli(capsys, "spectrum", "--config", missing)
    assert code == 1
    wide = write({"mode": "spectrum", "N": 100, "coefficients": CONST}, "w.json")
    code, _, err = run_cli(capsys, "spectrum", "--config", wide)
    assert code == 1 and "WindowError" in err


def test_argparse_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["not-a-mode", "--config", "x"])
    assert exc.value.code == 2
