"""Experiment harness: config parsing, artifacts, exit codes, drift."""

import hashlib
import json
import os
import subprocess

import numpy as np
import pytest
from click.testing import CliRunner

from oscint.cli import main
from oscint.errors import ConfigError
from oscint.runio import (ParamSpec, RunManifest, compare_runs, json_ready,
                          make_run_dir, read_config, resolve_params,
                          write_csv, write_json)
from oscint.scenarios import run_scenario, scenario_names, scenario_schema

_FAST_CZ = """\
[scenario]
name = cz-verify
seed = 11

[params]
functions = 3
extents = 256
spacing = 0.03125
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _alltext(result):
    try:
        return result.output + result.stderr
    except ValueError:
        return result.output


# -- config layer -----------------------------------------------------------


def test_read_config_fields_and_anchors(tmp_path):
    path = _write(tmp_path, _FAST_CZ)
    raw = read_config(path)
    assert raw.name == "cz-verify"
    assert raw.seed == 11
    assert raw.params == {"functions": "3", "extents": "256",
                          "spacing": "0.03125"}
    assert raw.where("functions").endswith(":6")
    assert raw.where("name", section="scenario").endswith(":2")


def test_read_config_rejections(tmp_path):
    with pytest.raises(ConfigError, match="scenario"):
        read_config(_write(tmp_path, "[params]\nx = 1\n"))
    with pytest.raises(ConfigError, match="unknown section"):
        read_config(_write(tmp_path,
                           "[scenario]\nname = cz-verify\n[junk]\na = 1\n"))
    with pytest.raises(ConfigError, match="unexpected key"):
        read_config(_write(tmp_path,
                           "[scenario]\nname = cz-verify\nfoo = 2\n"))
    raw = read_config(_write(tmp_path, "[scenario]\nname = cz-verify\n"))
    assert raw.seed == 0


def test_resolve_params_kinds(tmp_path):
    schema = {
        "a": ParamSpec("float_or_auto", None, ""),
        "b": ParamSpec("bool", False, ""),
        "c": ParamSpec("floats", (1.0,), ""),
        "d": ParamSpec("ints", (1,), ""),
        "e": ParamSpec("choice", "x", "", choices=("x", "y")),
        "f": ParamSpec("float", 2.0, ""),
    }
    raw = read_config(_write(tmp_path, (
        "[scenario]\nname = s\n[params]\n"
        "a = auto\nb = yes\nc = 1.5,2.5\nd = 4,8\ne = y\n")))
    got = resolve_params(schema, raw)
    assert got == {"a": None, "b": True, "c": (1.5, 2.5), "d": (4, 8),
                   "e": "y", "f": 2.0}
    bad = read_config(_write(tmp_path, (
        "[scenario]\nname = s\n[params]\nb = maybe\n"), name="bad.ini"))
    with pytest.raises(ConfigError, match="boolean") as ei:
        resolve_params(schema, bad)
    assert ei.value.location.endswith("bad.ini:4")
    unknown = read_config(_write(tmp_path, (
        "[scenario]\nname = s\n[params]\nzz = 1\n"), name="unk.ini"))
    with pytest.raises(ConfigError, match="known:") as ei:
        resolve_params(schema, unknown)
    assert ei.value.location.endswith("unk.ini:4")


def test_choice_rejects_off_list(tmp_path):
    schema = {"e": ParamSpec("choice", "x", "", choices=("x", "y"))}
    raw = read_config(_write(tmp_path,
                             "[scenario]\nname = s\n[params]\ne = z\n"))
    with pytest.raises(ConfigError, match="one of"):
        resolve_params(schema, raw)


# -- serialization ----------------------------------------------------------


def test_write_csv_repr_floats_and_bools(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(str(path), ("x", "ok", "n"), [(0.1, True, 3),
                                            (float("nan"), False, -1)])
    text = path.read_bytes().decode()
    lines = text.split("\n")
    assert lines[0] == "x,ok,n"
    assert lines[1] == "0.1,true,3"
    assert lines[2] == "nan,false,-1"
    assert text.endswith("\n") and "\r" not in text
    assert float(lines[1].split(",")[0]) == 0.1


def test_json_ready_scrubs_nonfinite():
    out = json_ready({"a": float("nan"), "b": np.float64(2.5),
                      "c": [np.int64(3), float("inf")],
                      "d": {"e": np.bool_(True)}})
    assert out == {"a": None, "b": 2.5, "c": [3, None], "d": {"e": True}}
    assert isinstance(out["b"], float) and isinstance(out["c"][0], int)


def test_write_json_sorted_and_stable(tmp_path):
    path = tmp_path / "s.json"
    write_json(str(path), {"b": 1, "a": float("nan")})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert "null" in text and text.endswith("\n")


def test_manifest_digests(tmp_path):
    blob = tmp_path / "out.csv"
    blob.write_bytes(b"x,y\n1,2\n")
    digests = RunManifest.digests(str(tmp_path), ["out.csv"])
    assert digests["out.csv"] == hashlib.sha256(b"x,y\n1,2\n").hexdigest()


def test_make_run_dir_collision_suffix(tmp_path, monkeypatch):
    monkeypatch.setattr("oscint.runio.time.strftime",
                        lambda *a: "20990101T000000Z")
    root = str(tmp_path / "res")
    first = make_run_dir("demo", root)
    second = make_run_dir("demo", root)
    third = make_run_dir("demo", root)
    assert first.endswith("demo-20990101T000000Z")
    assert second == f"{first}-1"
    assert third == f"{first}-2"
    assert all(os.path.isdir(p) for p in (first, second, third))


def test_compare_runs_drift_and_mismatch(tmp_path):
    def fake_run(name, scenario, metrics):
        d = tmp_path / name
        d.mkdir()
        write_json(str(d / "manifest.json"), {"scenario": scenario})
        write_json(str(d / "summary.json"),
                   {"scenario": scenario, "metrics": metrics})
        return str(d)

    a = fake_run("a", "demo", {"top": 1.0, "nest": {"inner": 4.0},
                               "gone": float("nan")})
    b = fake_run("b", "demo", {"top": 1.1, "nest": {"inner": 4.0}})
    rows = {r.metric: r for r in compare_runs(a, b)}
    assert rows["top"].drift == pytest.approx(0.1 / 1.1)
    assert rows["nest.inner"].drift == 0.0
    assert rows["gone"].value_b is None and rows["gone"].drift is None
    c = fake_run("c", "other", {"top": 1.0})
    with pytest.raises(ConfigError, match="scenario"):
        compare_runs(a, c)
    with pytest.raises(ConfigError, match="run directory"):
        compare_runs(a, str(tmp_path / "nope"))


# -- scenario registry ------------------------------------------------------


def test_registry_names_and_schemas():
    names = scenario_names()
    assert names == sorted(names)
    assert set(names) == {"cz-verify", "dilation-identity", "kernel-decay",
                          "seminorm-table", "split-constants",
                          "weak11-euclidean", "weak11-heisenberg"}
    for name in names:
        schema = scenario_schema(name)
        assert schema and all(isinstance(s, ParamSpec)
                              for s in schema.values())
    with pytest.raises(ConfigError, match="unknown scenario"):
        scenario_schema("nope")


def test_run_scenario_is_deterministic():
    params = {"functions": 2, "extents": (128,), "spacing": 0.0625}
    one = run_scenario("cz-verify", params, seed=5)
    two = run_scenario("cz-verify", params, seed=5)
    assert one.metrics == two.metrics
    assert one.tables.keys() == two.tables.keys()
    for stem in one.tables:
        assert one.tables[stem].rows == two.tables[stem].rows
    other = run_scenario("cz-verify", params, seed=6)
    assert other.metrics != one.metrics
    # summary metrics and checks carry dotted module.invariant names
    for key in one.metrics:
        assert "." in key
    for check in one.checks:
        assert "." in check.invariant


# -- command line -----------------------------------------------------------


@pytest.fixture()
def runner():
    return CliRunner()


def test_cli_run_writes_artifacts(tmp_path, runner):
    cfg = _write(tmp_path, _FAST_CZ)
    root = str(tmp_path / "results")
    result = runner.invoke(main, ["run", cfg, "--results-root", root])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    run_dir = lines[-1]
    assert run_dir.startswith(root)
    assert any(line.startswith("pass czd.") for line in lines[:-1])
    files = sorted(os.listdir(run_dir))
    assert "manifest.json" in files and "summary.json" in files
    assert any(f.endswith(".csv") for f in files)
    manifest = json.load(open(os.path.join(run_dir, "manifest.json")))
    assert manifest["scenario"] == "cz-verify"
    assert manifest["seed"] == 11
    for name, digest in manifest["outputs"].items():
        blob = open(os.path.join(run_dir, name), "rb").read()
        assert hashlib.sha256(blob).hexdigest() == digest
    summary = json.load(open(os.path.join(run_dir, "summary.json")))
    assert summary["passed"] is True
    assert all("." in c["invariant"] for c in summary["checks"])


def test_cli_runs_are_byte_identical(tmp_path, runner):
    cfg = _write(tmp_path, _FAST_CZ)
    roots = [str(tmp_path / f"r{i}") for i in (0, 1)]
    dirs = []
    for root in roots:
        result = runner.invoke(main, ["run", cfg, "--results-root", root])
        assert result.exit_code == 0, result.output
        dirs.append(result.output.strip().splitlines()[-1])
    for name in ("summary.json", "constants.csv"):
        a = open(os.path.join(dirs[0], name), "rb").read()
        b = open(os.path.join(dirs[1], name), "rb").read()
        assert a == b, name
    rows = compare_runs(dirs[0], dirs[1])
    assert rows and all(r.drift == 0.0 for r in rows)


def test_cli_results_env_var(tmp_path, runner, monkeypatch):
    root = tmp_path / "envroot"
    monkeypatch.setenv("OSCINT_RESULTS", str(root))
    cfg = _write(tmp_path, _FAST_CZ)
    result = runner.invoke(main, ["run", cfg])
    assert result.exit_code == 0, result.output
    assert result.output.strip().splitlines()[-1].startswith(str(root))


def test_cli_config_errors_exit_2(tmp_path, runner):
    missing = runner.invoke(main, ["run", str(tmp_path / "absent.ini")])
    assert missing.exit_code == 2
    bad_name = _write(tmp_path, "[scenario]\nname = warp\n", name="n.ini")
    result = runner.invoke(main, ["run", bad_name])
    assert result.exit_code == 2
    assert "config error at" in _alltext(result)
    assert "n.ini:2" in _alltext(result)
    bad_key = _write(tmp_path, (
        "[scenario]\nname = cz-verify\n\n[params]\nwhat = 1\n"),
        name="k.ini")
    result = runner.invoke(main, ["run", bad_key])
    assert result.exit_code == 2
    assert "k.ini:5" in _alltext(result)
    bad_val = _write(tmp_path, (
        "[scenario]\nname = cz-verify\n\n[params]\nfunctions = soup\n"),
        name="v.ini")
    result = runner.invoke(main, ["run", bad_val])
    assert result.exit_code == 2
    assert "v.ini:5" in _alltext(result)


def test_cli_numerical_exception_exits_3(tmp_path, runner):
    # a level multiplier under the root average degenerates immediately
    cfg = _write(tmp_path, (
        "[scenario]\nname = cz-verify\n\n[params]\n"
        "functions = 2\nextents = 128\nspacing = 0.0625\n"
        "level_mult = 0.5\n"))
    result = runner.invoke(main, ["run", cfg, "--results-root",
                                  str(tmp_path / "res")])
    assert result.exit_code == 3
    text = _alltext(result)
    assert "numerical failure" in text
    assert "DegenerateLevelError" in text


def test_cli_failed_check_exits_3_with_artifacts(tmp_path, runner):
    # an undersized hull lets wrap-around clamp the refinement rate
    cfg = _write(tmp_path, (
        "[scenario]\nname = dilation-identity\n\n[params]\n"
        "extents = 256\n"))
    root = str(tmp_path / "res")
    result = runner.invoke(main, ["run", cfg, "--results-root", root])
    assert result.exit_code == 3
    text = _alltext(result)
    assert "numerical failure" in text
    assert "spectral.dilation_identity" in text
    produced = os.listdir(root)
    assert len(produced) == 1  # artifacts land even when the gate fails
    files = os.listdir(os.path.join(root, produced[0]))
    assert "summary.json" in files and "manifest.json" in files


def test_cli_compare_and_mismatch(tmp_path, runner):
    cfg = _write(tmp_path, _FAST_CZ)
    dirs = []
    for i in (0, 1):
        root = str(tmp_path / f"c{i}")
        result = runner.invoke(main, ["run", cfg, "--results-root", root])
        assert result.exit_code == 0
        dirs.append(result.output.strip().splitlines()[-1])
    result = runner.invoke(main, ["compare", dirs[0], dirs[1]])
    assert result.exit_code == 0
    assert "drift=0.000e+00" in result.output
    other_cfg = _write(tmp_path, (
        "[scenario]\nname = dilation-identity\n\n[params]\n"
        "extents = 2048\n"), name="d.ini")
    root = str(tmp_path / "c2")
    result = runner.invoke(main, ["run", other_cfg, "--results-root", root])
    assert result.exit_code == 0, result.output
    other_dir = result.output.strip().splitlines()[-1]
    mismatch = runner.invoke(main, ["compare", dirs[0], other_dir])
    assert mismatch.exit_code == 2
    assert "config error" in _alltext(mismatch)


def test_cli_list_scenarios(runner):
    result = runner.invoke(main, ["list-scenarios"])
    assert result.exit_code == 0
    for name in scenario_names():
        assert name in result.output
    with_params = runner.invoke(main, ["list-scenarios", "--params"])
    assert "level_mult" in with_params.output
    assert "default" in with_params.output


def test_console_script_is_installed():
    proc = subprocess.run(["oscint", "list-scenarios"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "weak11-heisenberg" in proc.stdout
