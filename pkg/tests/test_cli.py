import csv
import io as _io
import json

import pytest

from weingarten_graphs.cli import build_parser, _config_from_args, run

SPHERE = ["--family", "spheres", "--n", "3", "--eps", "1", "--W", "WS", "--c", "12"]


def _run(argv, capsys):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_construct_sphere(capsys, tmp_path):
    out = tmp_path / "m.json"
    code, text, _ = _run(["construct", *SPHERE, "--out", str(out)], capsys)
    assert code == 0
    summary = json.loads(text)
    assert summary["topology"] == "Sphere" and summary["verification_passed"]
    first = out.read_bytes()
    assert run(["construct", *SPHERE, "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_domain_error_exit_1(capsys):
    code, _, err = _run(["construct", "--family", "spheres", "--n", "3", "--eps", "-1",
                         "--W", "WS", "--c=-10"], capsys)
    assert code == 1 and "NoOriginRoot" in err


def test_schema_errors_exit_2(capsys, tmp_path):
    code, _, _ = _run(["construct", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = _run(["construct", "--config", str(bad)], capsys)
    assert code == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"format_version": 1, "family": "spheres", "n": 3, "eps": 1,
                               "W": "WS", "c": 12, "bogus": 1}))
    code, _, _ = _run(["construct", "--config", str(cfg)], capsys)
    assert code == 2


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"format_version": 1, "family": "spheres", "n": 3, "eps": 1,
                               "W": "WS", "c": 12}))
    code, text, _ = _run(["construct", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(text)["topology"] == "Sphere"
    args = build_parser().parse_args(["construct", "--config", str(cfg), "--c", "9"])
    assert _config_from_args(args).c == 9.0


def test_seed_environment(monkeypatch, tmp_path):
    args = build_parser().parse_args(["construct", *SPHERE, "--seed", "3"])
    assert _config_from_args(args).seed == 3
    monkeypatch.setenv("WEINGARTEN_SEED", "17")
    assert _config_from_args(args).seed == 17
    monkeypatch.setenv("WEINGARTEN_SEED", "x")
    assert run(["construct", *SPHERE]) == 2


def test_thresholds(capsys):
    code, text, _ = _run(["thresholds", "--n", "3", "--eps", "1", "--c", "12"], capsys)
    doc = json.loads(text)
    assert code == 0
    assert doc["delta"] == pytest.approx(0.7853981633974483, abs=1e-15)
    assert doc["annuli_threshold"] == pytest.approx(0.42053433528396513, abs=1e-15)
    code, text, _ = _run(["thresholds", "--n", "4", "--eps", "-1", "--c=-2"], capsys)
    assert json.loads(text)["hyperbolic_threshold"] == pytest.approx(1.5444849524223015)


def test_verify_and_export(capsys, tmp_path):
    code, text, _ = _run(["verify", *SPHERE], capsys)
    assert code == 0 and json.loads(text)["passed"]
    stem = tmp_path / "p"
    code, text, _ = _run(["export", *SPHERE, "--format", "profile-csv", "--out", str(stem)],
                         capsys)
    assert code == 0 and len(text.split()) == 2
    obj = tmp_path / "s.obj"
    assert run(["export", *SPHERE, "--format", "revolution-obj", "--out", str(obj),
                "--segments", "6"]) == 0
    assert obj.read_text().startswith("# topology Sphere")


def test_families(capsys):
    code, text, _ = _run(["families"], capsys)
    names = [f["name"] for f in json.loads(text)["families"]]
    assert code == 0 and "horospheres" in names


def _sweep(argv, capsys):
    code, text, _ = _run(["sweep", *argv], capsys)
    assert code == 0
    return list(csv.DictReader(_io.StringIO(text)))


def test_sweep_ws(capsys):
    base = ["--family", "spheres", "--n", "3", "--W", "WS"]
    rows = _sweep([*base, "--eps", "1", "--c", "8,10,12"], capsys)
    assert [r["terminal"] for r in rows] == ["SphereCap"] * 3
    rows = _sweep([*base, "--eps", "-1", "--c=-6,-3,0"], capsys)
    assert [r["terminal"] for r in rows] == ["Degenerate", "Entire", "Entire"]


def test_sweep_h1_parallel_order(capsys):
    base = ["--family", "spheres", "--n", "3", "--eps", "-1", "--W", "Hr:1", "--c", "1:6:1"]
    serial = _sweep(base, capsys)
    parallel = _sweep([*base, "--jobs", "2"], capsys)
    assert serial == parallel
    assert [r["terminal"] for r in serial] == ["Entire", "Entire"] + ["SphereCap"] * 4
