import csv
import json
import math
import shutil
from pathlib import Path

import numpy as np
import pytest
from conftest import SM

from canonham.cli import main
from canonham.io import ProblemError, apply_overrides, decode_matrix, encode_matrix, parse_override

PROBLEMS = Path(__file__).resolve().parent.parent / "demos" / "problems"


def run(tmp_path, name, *extra):
    src = PROBLEMS / f"{name}.json"
    return main(["run", str(src), "--out", str(tmp_path), *extra])


def result(tmp_path, name):
    return json.loads((tmp_path / f"{name}.result.json").read_text())


def write_problem(tmp_path, doc, name="p"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(doc))
    return path


def test_matrix_round_trip(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    back = decode_matrix(json.loads(json.dumps(encode_matrix(m))))
    assert np.array_equal(back, m)
    with pytest.raises(ProblemError):
        decode_matrix([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ProblemError):
        decode_matrix([[["a", 0]]])


def test_overrides():
    assert parse_override("a.b=3") == (["a", "b"], 3)
    assert parse_override("x=hello") == (["x"], "hello")
    doc = apply_overrides({"a": {"b": 1}}, ["a.b=[1, 2]", "c.d=true"])
    assert doc == {"a": {"b": [1, 2]}, "c": {"d": True}}
    with pytest.raises(ProblemError):
        parse_override("novalue")


def test_canonicalize_amplitude_damping(tmp_path):
    assert run(tmp_path, "amplitude_damping") == 0
    res = result(tmp_path, "amplitude_damping")
    out = res["outputs"]
    assert np.allclose(decode_matrix(out["canonical_hamiltonian"]["value"]), 0)
    assert out["rates"]["value"] == pytest.approx([0.5])
    jump = decode_matrix(out["jumps"]["value"][0])
    assert np.isclose(abs(jump[0, 1]), 1) and np.allclose(jump / jump[0, 1], SM)
    assert out["markovian"]["value"] is True
    assert "tol" in out["markovian"] and "tol" in out["canonical_hamiltonian"]
    assert all("tol" in c for c in res["certificates"])
    assert len(res["input_sha256"]) == 64


def test_result_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "amplitude_damping") == 0
    assert run(b, "amplitude_damping") == 0
    name = "amplitude_damping.result.json"
    assert (a / name).read_bytes() == (b / name).read_bytes()


def test_non_hpta_generator_exits_3(tmp_path, capsys):
    assert run(tmp_path, "not_hpta") == 3
    assert "trace residual" in capsys.readouterr().err


def test_validation_failures_exit_2(tmp_path, capsys):
    doc = json.loads((PROBLEMS / "amplitude_damping.json").read_text())
    bad = json.loads(json.dumps(doc))
    bad["problem"]["hamiltonian"] = [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]
    assert main(["run", str(write_problem(tmp_path, bad)), "--out", str(tmp_path)]) == 2
    assert "not Hermitian" in capsys.readouterr().err
    bad = dict(doc, schema_version="99")
    assert main(["run", str(write_problem(tmp_path, bad)), "--out", str(tmp_path)]) == 2
    bad = dict(doc, task={"name": "nope"})
    assert main(["run", str(write_problem(tmp_path, bad)), "--out", str(tmp_path)]) == 2
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert run(tmp_path, "amplitude_damping", "--set", "tolerances.hpta=-1") == 2


def test_override_and_seed(tmp_path):
    assert run(tmp_path, "amplitude_damping", "--set", "task.name=verify", "--seed", "3") == 0
    res = result(tmp_path, "amplitude_damping")
    assert res["task"] == "verify" and res["seed"] == 3
    assert res["overrides"] == ["task.name=verify"]


def test_verify_canonical_and_zero(tmp_path, capsys):
    assert main(["verify", str(PROBLEMS / "amplitude_damping.json")]) == 0
    assert main(["verify", str(PROBLEMS / "zero_generator.json")]) == 0
    out = capsys.readouterr().out
    assert "minimality" in out and "FAIL" not in out


def test_verify_flags_shifted_gauge(capsys):
    assert main(["verify", str(PROBLEMS / "shifted_gauge.json")]) == 4
    out = capsys.readouterr().out
    assert "FAIL declared_presentation_minimal" in out


def test_trajectory_full_swap(tmp_path):
    assert run(tmp_path, "full_swap_trajectory") == 0
    res = result(tmp_path, "full_swap_trajectory")
    assert res["outputs"]["invalid_times"] == [pytest.approx(math.pi / 2)]
    with open(tmp_path / res["outputs"]["csv"]) as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    assert header[:3] == ["t", "valid", "cond"]
    assert header[3:5] == ["H_00_re", "H_00_im"] and header[-3:] == ["gamma_1", "gamma_2", "gamma_3"]
    assert len(header) == 3 + 8 + 3
    flags = [r[1] for r in rows[1:]]
    assert flags.count("0") == 1 and rows[21][1] == "0" and rows[21][3] == "nan"
    gammas = [float(x) for x in rows[5][-3:]]
    assert gammas == sorted(gammas, reverse=True)


def test_perturb_task(tmp_path):
    assert run(tmp_path, "weak_coupling_perturb") == 0
    res = result(tmp_path, "weak_coupling_perturb")
    for point in res["outputs"]["points"]:
        assert point["valid"] and point["hamiltonian_difference"] < 1e-5


def test_haar_check(tmp_path, capsys):
    assert main(["haar-check", "--d", "2", "--samples", "20000", "--seed", "1"]) == 0
    assert main(["haar-check", "--d", "1"]) == 2
    shutil.copy(PROBLEMS / "haar_check.json", tmp_path / "h.json")
    assert main(["run", str(tmp_path / "h.json"), "--set", "task.samples=5000"]) == 0
    assert (tmp_path / "h.result.json").exists()
