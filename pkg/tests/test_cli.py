import json
import subprocess
import sys

import pytest

from lpdissip.cli import main
from lpdissip.harness import EXIT_FAILS, EXIT_HOLDS, EXIT_INDETERMINATE, EXIT_INPUT


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_run_corpus_json(capsys):
    code, out = run(capsys, "run", "--corpus", "example-ex1")
    doc = json.loads(out)
    assert code == EXIT_INDETERMINATE and doc["spec_id"] == "example-ex1"


def test_check_elasticity_exit_codes(capsys):
    assert run(capsys, "check", "elasticity", "--nu", "0.3", "--p", "3")[0] == EXIT_HOLDS
    code, out = run(capsys, "check", "elasticity", "--nu", "0.49", "--p", "4", "--out", "csv")
    assert code == EXIT_FAILS and out.startswith("spec_id,p,criterion,status,margin,certificate_ref")


def test_alpha_range(capsys):
    code, out = run(capsys, "check", "elasticity", "--alpha-range", "3", "--p", "2")
    assert json.loads(out)["alpha_min"] == -3.0


def test_sweep_csv(capsys):
    code, out = run(capsys, "check", "elasticity", "--sweep", "nu=0:0.45:0.15,p=2:4:2")
    assert code == EXIT_HOLDS and len(out.strip().splitlines()) == 9


def test_input_errors(capsys, tmp_path):
    assert run(capsys, "run", "--spec", str(tmp_path / "missing.json"))[0] == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "scalar", "n": "x"}')
    assert run(capsys, "check", "scalar", "--spec", str(bad), "--p", "3")[0] == EXIT_INPUT
    assert run(capsys, "check", "scalar", "--spec", str(bad))[0] == EXIT_INPUT  # --p missing
    assert run(capsys, "check", "elasticity", "--nu", "0.7", "--p", "3")[0] == EXIT_INPUT


def test_sigma_probe(capsys):
    code, out = run(capsys, "probe", "sigma-example")
    assert code == EXIT_FAILS and json.loads(out)["negative"]


def test_nonlocal_oblique_capacity(capsys, tmp_path):
    assert run(capsys, "nonlocal", "--p", "3", "--s", "0.5")[0] == EXIT_HOLDS
    a = tmp_path / "a.json"
    a.write_text(json.dumps({"a": [[1, 0], [0, 0.5]]}))
    assert run(capsys, "oblique", "--a", str(a), "--p", "3")[0] == EXIT_HOLDS
    F = tmp_path / "F.json"
    F.write_text(json.dumps({"ball": {"r": 0.3}}))
    code, out = run(capsys, "capacity", "--set", str(F), "--box", "2", "41")
    assert code == EXIT_HOLDS and json.loads(out)["capacity"] > 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lpdissip", "check", "elasticity", "--nu", "0", "--p", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "ProvenDissipative" in proc.stdout
