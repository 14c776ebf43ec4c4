"""Command-line surface: subcommands, config files, exit codes."""

import json
import os
import subprocess
import sys

import pytest

from nilcayley.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_diam_with_explicit_generators(capsys):
    # H(3, 3) with the two superdiagonal units: codes 1 and 3
    code, out, _ = run_cli(["diam", "--spec", "ut:3,3", "--gens", "1,3"], capsys)
    assert code == 0
    assert "diameter=4" in out


def test_diam_with_sampling(capsys):
    code, out, _ = run_cli(["diam", "--spec", "ut:5,3", "--k", "3", "--seed", "2"], capsys)
    assert code == 0
    assert "diameter=" in out


def test_filtration_report(capsys):
    code, out, _ = run_cli(["filtration", "--spec", "ut:5,3", "--k", "3", "--seed", "1"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[1] == "i\tsubgroup_diam\tquotient_diam"
    assert len(lines) == 4  # header rows + layers 1 and 2


def test_synth_verifies(capsys):
    code, out, _ = run_cli(
        ["synth", "--spec", "ut:5,3", "--k", "3", "--seed", "2", "--target", "77"], capsys
    )
    assert code == 0
    assert "verified=1" in out


def test_lattice_enclosure(capsys):
    code, out, _ = run_cli(["lattice", "--descriptor", "lat:k=2;mod=5;g=1,2"], capsys)
    assert code == 0
    lo, hi = (float(tok) for tok in out.strip().split(","))
    assert lo <= hi


def test_montecarlo_and_compare(tmp_path, capsys):
    cfg_a = tmp_path / "a.cfg"
    cfg_b = tmp_path / "b.cfg"
    cfg_a.write_text("kind=group\nspec=ut:5,3\nk=3\nn=8\nseed=4\n")
    cfg_b.write_text("kind=group\nspec=abelian:5,5\nk=3\nn=8\nseed=4\n")
    out_jsonl = tmp_path / "out.jsonl"
    code, out, _ = run_cli(
        ["montecarlo", "--config", str(cfg_a), "--out", str(out_jsonl), "--csv", str(tmp_path / "out.csv")],
        capsys,
    )
    assert code == 0
    lines = out_jsonl.read_text().strip().splitlines()
    assert len(lines) == 8
    json.loads(lines[0])
    assert (tmp_path / "out.csv").read_text().startswith("trial,")

    code, out, _ = run_cli(
        [
            "compare",
            "--config-a",
            str(cfg_a),
            "--config-b",
            str(cfg_b),
            "--out-dir",
            str(tmp_path / "cmp"),
            "--plot",
        ],
        capsys,
    )
    assert code == 0
    assert out.startswith("ks=")
    assert (tmp_path / "cmp" / "cdf_a.tsv").exists()
    assert (tmp_path / "cmp" / "cdf_comparison.png").exists()


def test_filtration_scan(tmp_path, capsys):
    code, out, _ = run_cli(
        [
            "filtration",
            "--scan-q",
            "3,5",
            "--d",
            "3",
            "--k",
            "3",
            "--n",
            "3",
            "--cache-dir",
            str(tmp_path),
            "--plot",
            str(tmp_path / "scan.png"),
        ],
        capsys,
    )
    assert code == 0
    assert out.startswith("q\ti\t")
    assert (tmp_path / "scan.png").exists()


def test_exit_code_precondition(capsys):
    code, _, err = run_cli(["diam", "--spec", "bogus:1", "--gens", "1"], capsys)
    assert code == 2
    assert "error" in err


def test_exit_code_budget(capsys):
    # a symmetric subset of size 4 cannot exist in a group of order 2
    code, _, err = run_cli(
        ["diam", "--spec", "abelian:2", "--k", "2", "--mode", "uniform-symmetric-subset"], capsys
    )
    assert code == 4


def test_thread_env_is_honored(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("kind=group\nspec=ut:5,3\nk=3\nn=5\nseed=6\n")
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"out{threads}.jsonl"
        env = dict(os.environ, NILCAYLEY_THREADS=threads)
        proc = subprocess.run(
            [sys.executable, "-m", "nilcayley.cli", "montecarlo", "--config", str(cfg), "--out", str(out)],
            env=env,
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("NILCAYLEY_THREADS", "zero")
    code, _, err = run_cli(["diam", "--spec", "ut:3,3", "--gens", "1,3"], capsys)
    assert code == 2
