import json
import os
import subprocess
import sys

import pytest

from cmpart.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def roundtrip(text):
    line = text.strip()
    assert json.dumps(json.loads(line), sort_keys=True) == line
    return json.loads(line)


def test_compute_1(capsys):
    code, out, _ = run(capsys, "compute", "1", "--json")
    assert code == 0
    obj = roundtrip(out)
    assert obj["p_oracle"] == obj["p_trace"] == "1" and obj["trace"] == "23"
    assert obj["ell"] == "5" and obj["p_mod_ell_ss"] == "1"


def test_compute_3_auto(capsys):
    code, out, _ = run(capsys, "compute", "3", "--json")
    obj = roundtrip(out)
    assert code == 0
    assert obj["ell"] == "7" and obj["p_trace"] == "3" and obj["p_mod_ell_ss"] == "3"
    assert obj["fibers_well_defined"] is False and obj["p_mod_ell_pairing"] is None


def test_compute_3_ell13(capsys):
    code, out, _ = run(capsys, "compute", "3", "--ell", "13", "--json")
    obj = roundtrip(out)
    assert code == 0 and obj["p_mod_ell_ss"] == obj["p_mod_ell_pairing"] == "3"


@pytest.mark.parametrize("argv", [["compute", "0"], ["compute", "x"], ["compute", "3", "--ell", "5"],
                                  ["compute", "3", "--ell", "9"], ["frobnicate"], [],
                                  ["modeq", "13"], ["sweep", "13", "--n-max", "5"]])
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_classpoly(capsys):
    code, out, _ = run(capsys, "classpoly", "2", "--json")
    obj = roundtrip(out)
    assert code == 0
    assert obj["H_coeffs"] == [["1", "1"], ["-94", "1"], ["169659", "47"], ["-65838", "1"],
                               ["1092873176", "2209"], ["1454023", "47"]]


def test_reduce(capsys):
    code, out, _ = run(capsys, "reduce", "1", "5")
    assert code == 0 and "3(x-2)(x^2-x+2)" in out
    code, out, _ = run(capsys, "reduce", "1", "5", "--json")
    obj = roundtrip(out)
    assert obj["report"]["verdict_ss_trace"] is True and obj["report"]["verdict_dot_product"] is True


def test_reduce_ill_defined(capsys):
    code, out, _ = run(capsys, "reduce", "3", "7")
    assert code == 4


def test_modeq(capsys, tmp_path):
    code, out, _ = run(capsys, "modeq", "5", "--terms", "60", "--json", "--cache-dir", str(tmp_path))
    obj = roundtrip(out)
    assert code == 0 and obj["monic"] is True and obj["degree_y"] == "6"
    assert (tmp_path / "modpoly" / "level6_5.txt").exists()
    code, _, err = run(capsys, "modeq", "5", "--terms", "60", "--strict-wa", "--cache-dir", str(tmp_path))
    assert code == 4 and "content" in err


def test_sweep(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("CMPART_CACHE", str(tmp_path))
    code, out, _ = run(capsys, "sweep", "5", "--n-max", "200", "--json")
    obj = roundtrip(out)
    assert code == 0 and obj["ok"] is True and obj["modulus"] == "5"
    assert (tmp_path / "ptable.bin").exists()


def test_brandt(capsys, tmp_path):
    code, out, _ = run(capsys, "brandt", "5", "2", "3", "--json", "--check", "10", "--cache-dir", str(tmp_path))
    obj = roundtrip(out)
    assert code == 0 and obj["s"] == "4" and all(obj["checks"].values())
    assert (tmp_path / "brandt" / "classes_5_6.json").exists()


def test_module_entry():
    env = dict(os.environ)
    src = os.path.join(os.path.dirname(__file__), "..", "src")
    env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
    r = subprocess.run([sys.executable, "-m", "cmpart", "compute", "0"], capture_output=True, env=env)
    assert r.returncode == 2
    r = subprocess.run([sys.executable, "-m", "cmpart", "sweep", "7", "--n-max", "50"], capture_output=True, env=env)
    assert r.returncode == 0 and b"ok" in r.stdout
