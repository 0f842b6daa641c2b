import io
import json
import subprocess
import sys

import pytest

from zhmsp.cli import main
from zhmsp.harness import serialize_instance


def run(argv, stdin=None, capsys=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.TextIOWrapper(io.BytesIO(stdin.encode())))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_pipeline_fn3_is_no():
    cmd = [sys.executable, "-m", "zhmsp"]
    gen = subprocess.run(cmd + ["gen", "fn", "3"], capture_output=True, check=True)
    red = subprocess.run(cmd + ["reduce", "-"], input=gen.stdout, capture_output=True, check=True)
    sol = subprocess.run(cmd + ["solve", "-"], input=red.stdout, capture_output=True, check=True)
    assert sol.stdout.decode().strip() == "no"


def test_solve_chain(tmp_path, chain5, capsys):
    path = tmp_path / "chain.msp"
    path.write_text(serialize_instance(chain5))
    code, out, _ = run(["solve", str(path)], capsys=capsys)
    assert (code, out) == (0, "yes\n")
    code, out, _ = run(["oracle", str(path)], capsys=capsys)
    assert out == "yes\n"


def test_solve_trace_goes_to_stderr(tmp_path, capsys, f2_graph):
    g, rmap = f2_graph
    path = tmp_path / "f2.json"
    path.write_text(serialize_instance(g, {}, rmap))
    code, out, err = run(["solve", str(path), "--trace"], capsys=capsys)
    assert out == "no\n"
    lines = [json.loads(x) for x in err.splitlines()]
    assert lines and set(lines[0]) == {"pass", "kind", "e", "e_prime", "reason"}


def test_validate_and_preprocess(tmp_path, capsys):
    run(["gen", "msp", "6", "3", "0.9", "--seed", "4", "-o", str(tmp_path / "g.json")],
        capsys=capsys)
    code, out, _ = run(["validate", str(tmp_path / "g.json")], capsys=capsys)
    assert (code, out) == (0, "valid\n")
    run(["preprocess", str(tmp_path / "g.json"), "-o", str(tmp_path / "p.json")], capsys=capsys)
    code, out, _ = run(["validate", "--properties", str(tmp_path / "p.json")], capsys=capsys)
    assert code == 0


def test_gen_is_reproducible(capsys):
    _, a, _ = run(["gen", "ksat", "5", "12", "--seed", "9"], capsys=capsys)
    _, b, _ = run(["gen", "ksat", "5", "12", "--seed", "9"], capsys=capsys)
    assert a == b and a.startswith("c ")
    _, php, _ = run(["gen", "php", "2"], capsys=capsys)
    assert "p cnf 6 9" in php


def test_reduce_no_gadgets(tmp_path, capsys):
    cnf = tmp_path / "f.cnf"
    cnf.write_text("p cnf 2 2\n1 2 0\n-1 0\n")
    code, out, _ = run(["reduce", str(cnf), "--no-gadgets"], capsys=capsys)
    assert code == 0 and json.loads(out)["L"] == 5


def test_fuzz_and_report(tmp_path, capsys):
    cfg = tmp_path / "smoke.cfg"
    cfg.write_text(json.dumps({"corpus": [
        {"kind": "msp", "count": 40, "stages": [5, 8], "width": [2, 4], "density": [0.9, 0.95],
         "repair": "mixed", "seed": 1},
        {"kind": "ksat", "count": 10, "n": [3, 5], "m": [2, 4], "seed": 2}]}))
    code, out, _ = run(["fuzz", str(cfg), "-o", str(tmp_path / "out")], capsys=capsys)
    assert code in (0, 3)
    assert "necessity-violation" in out
    last = out.splitlines()[-2].split()
    assert last[0] == "all" and last[3] == "0" and last[-1] == "50"
    code2, out2, _ = run(["report", str(tmp_path / "out")], capsys=capsys)
    assert code2 == code and out2 in out


def test_minimize_cnf(tmp_path, capsys):
    cnf = tmp_path / "f.cnf"
    cnf.write_text("p cnf 2 5\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 0\n1 0\n")
    code, out, _ = run(["minimize", str(cnf), "--predicate", "zh-no"], capsys=capsys)
    assert code == 0
    assert "p cnf" in out


def test_usage_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    code, _, err = run(["solve", str(tmp_path / "missing.json")], capsys=capsys)
    assert code == 1 and "error" in err
    code, _, err = run(["gen", "fn", "2", "3"], capsys=capsys)
    assert code == 1
