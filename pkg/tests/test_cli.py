import json
import subprocess
import sys

import pytest

from padicwander.cli import main


def run(tmp_path, cmd, cfg, *extra):
    src = tmp_path / "in.json"
    src.write_text(json.dumps(cfg))
    out = tmp_path / "out.json"
    code = main([cmd, str(src), "-o", str(out), *extra])
    return code, json.loads(out.read_text())


def test_wander_then_check(tmp_path):
    code, cert = run(tmp_path, "wander", {"p": 2, "depth": 1})
    assert code == 0 and cert["stages"] and all(c["pass"] for c in cert["checks"])
    assert set(cert) >= {"version", "p", "f", "e", "precision", "r_hat_val", "Q", "schedule", "seed",
                         "stages", "checks"}
    code, rep = run(tmp_path, "check", cert)
    assert code == 0 and rep["status"] == "VALID"


def test_check_tampered(tmp_path):
    _, cert = run(tmp_path, "wander", {"p": 2, "depth": 1})
    head, rest = cert["stages"][0]["lambda"].split("[", 1)
    digits = rest.split("]")[0].split(",")
    digits[12] = str(1 - int(digits[12]))
    cert["stages"][0]["lambda"] = head + "[" + ",".join(digits) + "]" + rest.split("]", 1)[1]
    code, rep = run(tmp_path, "check", cert)
    assert code == 3 and rep["failed"]


def test_inadmissible_perturbation(tmp_path):
    code, doc = run(tmp_path, "wander", {"p": 2, "Q": [[0, 1, 1]]})
    assert code == 1 and "admission" in doc["message"]


def test_bad_config(tmp_path):
    assert run(tmp_path, "itinerary", {"p": 4})[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["newton", str(bad), "-o", str(tmp_path / "o.json")]) == 1


def test_stage_failure_document(tmp_path):
    code, doc = run(tmp_path, "wander", {"p": 2, "depth": 2, "max_nodes": 2000})
    assert code == 2 and doc["error"] == "StageFailed"
    assert doc["partial_certificate"]["failed_stage"]["i"] == 1


def test_hensel_newton_itinerary(tmp_path):
    code, doc = run(tmp_path, "hensel", {"p": 5, "precision": 10, "poly": [[0, 1, 1], [2, 1, 1]], "z0": 2})
    assert code == 0 and doc["root"].startswith("p^0 * [2,1,")
    code, doc = run(tmp_path, "newton", {"p": 2, "e": 2, "precision": 40, "poly": [[0, -2, 1], [2, 1, 1]],
                                         "radius_val": "1/2"})
    assert code == 0 and doc["count_on_sphere"] == 2
    code, doc = run(tmp_path, "itinerary", {"p": 2, "e": 2, "precision": 40, "point": 4, "horizon": 4})
    assert code == 0 and doc["word"] == "0000"


def test_verify_lemmas(tmp_path):
    code, doc = run(tmp_path, "verify-lemmas", {"p": 2, "count": 5, "Q": [[0, 4, 1]]})
    assert code == 0 and doc["status"] == "PASS"


def test_deterministic_output(tmp_path):
    cfg = {"p": 2, "depth": 1, "Q": [[0, 4, 1]]}
    a = run(tmp_path, "wander", cfg)[1]
    b = run(tmp_path, "wander", cfg)[1]
    assert json.dumps(a) == json.dumps(b)


def test_help_lists_flags():
    out = subprocess.run([sys.executable, "-m", "padicwander.cli", "check", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "--factor" in out.stdout and "--output" in out.stdout
