import json
import os
import pathlib
import subprocess

import pytest

from conftest import collinear_case, write_config

CLI = os.environ.get("SQEM_CLI", "sqem")


def sqem(*args, cwd=None, env=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd, env=env)


def test_full_run_succeeds_and_writes_artifacts(workdir):
    out = workdir / "out"
    r = sqem("--config", workdir / "synthetic_config.json", "--out", out)
    assert r.returncode == 0, r.stderr
    assert "ln(Defects) =" in r.stdout
    for name in ["report.json", "model.json", "quantifications.json", "qq.csv", "tree.txt", "prepared.csv"]:
        assert (out / name).exists()


def test_quiet_suppresses_summary(workdir):
    r = sqem("--config", workdir / "ordinal_config.json", "--out", workdir / "o", "-q")
    assert r.returncode == 0
    assert r.stdout == ""


def test_unknown_key_is_a_config_error(workdir):
    cfg = json.loads((workdir / "synthetic_config.json").read_text())
    cfg["regression"]["p_entre"] = 0.05
    r = sqem("--config", write_config(workdir, cfg), "--out", workdir / "o")
    assert r.returncode == 1
    assert "p_entre" in r.stderr


def test_missing_column_is_named(workdir):
    cfg = json.loads((workdir / "csv_config.json").read_text())
    cfg["regression"]["candidates"].append("Budget")
    r = sqem("--config", write_config(workdir, cfg), "--out", workdir / "o")
    assert r.returncode == 1
    assert "Budget" in r.stderr


def test_missing_csv_column_is_named(workdir):
    text = (workdir / "ordinal.csv").read_text().splitlines()
    header = text[0].split(",")
    drop = header.index("Staff")
    trimmed = [",".join(c for i, c in enumerate(line.split(",")) if i != drop) for line in text]
    (workdir / "ordinal.csv").write_text("\n".join(trimmed) + "\n")
    r = sqem("--config", workdir / "ordinal_config.json", "--out", workdir / "o")
    assert r.returncode in (1, 2)
    assert "Staff" in r.stderr


def test_nonpositive_response_names_the_row(workdir):
    lines = (workdir / "ordinal.csv").read_text().splitlines()
    cells = lines[3].split(",")
    cells[1] = "0"
    lines[3] = ",".join(cells)
    (workdir / "ordinal.csv").write_text("\n".join(lines) + "\n")
    r = sqem("--config", workdir / "ordinal_config.json", "--out", workdir / "o")
    assert r.returncode == 2
    assert "row 3" in r.stderr


def test_rank_deficiency_is_a_numerical_failure(tmp_path):
    r = sqem("--config", collinear_case(tmp_path), "--out", tmp_path / "o")
    assert r.returncode == 3
    assert "'B'" in r.stderr


def test_unknown_stage_lists_the_stages(workdir):
    r = sqem("--config", workdir / "synthetic_config.json", "--stage", "plot", "--out", workdir / "o")
    assert r.returncode == 1
    for stage in ["prepare", "screen", "tree", "fit", "recalibrate", "evaluate", "synth"]:
        assert stage in r.stderr


def test_recalibrate_requires_a_model(workdir):
    r = sqem("--config", workdir / "csv_config.json", "--stage", "recalibrate", "--out", workdir / "o")
    assert r.returncode == 1
    assert "missing input artifact" in r.stderr


def test_missing_config_file(tmp_path):
    r = sqem("--config", tmp_path / "nope.json")
    assert r.returncode == 1


def test_stages_compose(workdir):
    whole, staged = workdir / "whole", workdir / "staged"
    assert sqem("--config", workdir / "synthetic_config.json", "--out", whole, "-q").returncode == 0
    assert sqem("--config", workdir / "synthetic_config.json", "--stage", "synth", "--out", staged).returncode == 0
    data = staged / "synthetic.csv"
    assert sqem("--config", workdir / "synthetic_config.json", "--stage", "fit", "--data", data,
                "--out", staged).returncode == 0
    assert (staged / "model.json").read_bytes() == (whole / "model.json").read_bytes()
    r = sqem("--config", workdir / "synthetic_config.json", "--stage", "recalibrate", "--data", data,
             "--model", staged / "model.json", "--out", staged)
    assert r.returncode == 0, r.stderr
    assert (staged / "quantifications.json").read_bytes() == (whole / "quantifications.json").read_bytes()


def test_seed_flag_and_env_out_dir(workdir):
    env = dict(os.environ, SQEM_OUT_DIR=str(workdir / "from-env"))
    r = sqem("--config", workdir / "csv_config.json", "--seed", "99", "-q", env=env)
    assert r.returncode == 0, r.stderr
    report = json.loads((workdir / "from-env" / "report.json").read_text())
    assert report["provenance"]["seed"] == 99


def test_repeated_runs_are_byte_identical(workdir):
    for d in ["a", "b"]:
        assert sqem("--config", workdir / "catreg_config.json", "--out", workdir / d, "-q").returncode == 0
    assert (workdir / "a" / "report.json").read_bytes() == (workdir / "b" / "report.json").read_bytes()
