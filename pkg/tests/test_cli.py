import csv
import io
import json
import subprocess
import sys

import pytest

from aplab.cli import main

TINY = ["--x", "10000", "--theta", "11/20", "--H", "4", "--beta", "3/10"]

INVOCATIONS = {
    "pi": ["pi", "--x", "10^6"],
    "pi-ap": ["pi-ap", "--x", "100", "--q", "4", "--a", "3"],
    "factor": ["factor", "--n", "360", "1", "9973"],
    "smooth-shifted": ["smooth-shifted", "--x", "10000", "--beta", "3/10", "1/2", "0.7"],
    "ensemble": ["ensemble", *TINY],
    "gamma": ["gamma", *TINY, "--reading", "display"],
    "singular-series": ["singular-series", "--a", "1", "--l", "2"],
    "mertens": ["mertens", "--x", "10**6", "--theta", "17/32", "--beta", "0.35"],
    "n-count": ["n-count", *TINY, "--mode", "brute"],
    "discrepancy": ["discrepancy", "--x", "1000", "--q", "12"],
    "s-weight": ["s-weight", "--d", "3", "--z", "2", "--x", "100", "--q", "5", "--a", "1"],
    "multilinear": ["multilinear", "--x", "200", "--a", "1", "--factor", "1:3", "--factor", "1:3"],
    "kloosterman": ["kloosterman", "--m", "1", "--n", "1", "--c", "7"],
    "ramanujan": ["ramanujan", "--m", "6", "--c", "12"],
    "weil-audit": ["weil-audit", "--c-max", "30", "--mode", "full"],
    "exp-check": ["exp-check", "--system", "cons0", "--point", "q=15/32,r=1/32-2e,s=1/64-2e,t=1/64-2e"],
    "exp-max": ["exp-max", "--system", "bfi", "--objective", "q+r"],
    "exp-implies": [
        "exp-implies", "--premises", "propQ5_4", "--subst", "q=q1,r=q2+2q3", "--conclusion", "q + r < 8/15 - 30e",
    ],
    "exp-catalog": ["exp-catalog", "--name", "cons0"],
    "constants": ["constants"],
}


def run(argv, capsys):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_every_subcommand_is_covered():
    from aplab.cli import build_parser

    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(sub.choices) == set(INVOCATIONS)


@pytest.mark.parametrize("name", sorted(INVOCATIONS))
def test_json_is_deterministic_across_threads(name, capsys):
    outs = set()
    for threads in ("1", "4", "8", "1"):
        code, out, _ = run(INVOCATIONS[name] + ["--format", "json", "--reproducible", "--threads", threads], capsys)
        assert code == 0
        outs.add(out)
    assert len(outs) == 1
    doc = json.loads(outs.pop())
    assert set(doc) == {"schema_version", "tool", "config", "results"}
    assert doc["config"]["subcommand"] == name


@pytest.mark.parametrize("name", sorted(INVOCATIONS))
def test_table_and_csv_formats(name, capsys):
    code, out, _ = run(INVOCATIONS[name], capsys)
    assert code == 0 and out.strip()
    code, out, _ = run(INVOCATIONS[name] + ["--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) >= 2 and all(len(r) == len(rows[0]) for r in rows)


def test_spec_examples(capsys):
    assert run(["pi", "--x", "1000000"], capsys)[1].splitlines()[0] == "78498"
    code, out, _ = run(["constants", "--format", "json"], capsys)
    consts = {c["name"]: c for c in json.loads(out)["results"]["constants"]}
    assert consts["beta_threshold"]["rendered"].startswith("0.2843")
    assert "29/56 (not attained)" in run(["exp-max", "--system", "bfi", "--objective", "q+r"], capsys)[1]


def test_timestamp_only_without_reproducible(capsys):
    plain = json.loads(run(["pi", "--x", "100", "--format", "json"], capsys)[1])
    assert "timestamp" in plain
    repro = json.loads(run(["pi", "--x", "100", "--format", "json", "--reproducible"], capsys)[1])
    assert "timestamp" not in repro
    assert repro["config"]["params"] == {"x": 100}


def test_pi_csv_header(capsys):
    assert run(["pi", "--x", "1000", "--format", "csv"], capsys)[1] == "x,pi\n1000,168\n"


def test_numeric_syntax(capsys):
    for spelled in ("1000000", "10**6", "10^6", "1e6", "1_000_000"):
        assert run(["pi", "--x", spelled], capsys)[1].startswith("78498")


def test_cache_on_off_identical(tmp_path, capsys, monkeypatch):
    base = ["smooth-shifted", "--x", "200000", "--beta", "1/2", "--format", "json", "--reproducible"]
    plain = run(base, capsys)[1]
    cached = run(base + ["--cache-dir", str(tmp_path)], capsys)[1]
    again = run(base + ["--cache-dir", str(tmp_path)], capsys)[1]
    assert plain == cached == again
    assert any(tmp_path.iterdir())
    env_dir = tmp_path / "env"
    env_dir.mkdir()
    monkeypatch.setenv("APLAB_CACHE_DIR", str(env_dir))
    assert run(base, capsys)[1] == plain
    assert any(env_dir.iterdir())


@pytest.mark.parametrize(
    "argv,code",
    [
        (["nope"], 2),
        (["pi", "--x", "ten"], 2),
        (["pi"], 2),
        (["pi", "--x", "100", "--threads", "0"], 2),
        (["pi", "--x", "-5"], 1),
        (["discrepancy", "--x", "100", "--q", "6", "--a", "3"], 1),
        (["exp-max", "--system", "unknown", "--objective", "q"], 1),
        (["multilinear", "--x", "200", "--a", "1", "--factor", "1:1:2"], 1),
        (["weil-audit", "--c-max", "400", "--mode", "full"], 1),
        (["s-weight", "--q", "5"], 1),
    ],
)
def test_exit_codes(argv, code, capsys):
    got, _, err = run(argv, capsys)
    assert got == code
    assert err


def test_budget_flag(capsys):
    argv = ["multilinear", "--x", "10000", "--a", "1", "--factor", "1:20", "--factor", "1:20", "--budget", "10"]
    code, _, err = run(argv, capsys)
    assert code == 1 and "budget" in err


def test_seeded_sampled_audit(capsys):
    argv = ["weil-audit", "--c-max", "1000", "--mode", "sampled", "--samples", "500", "--format", "json", "--reproducible"]
    a = run(argv + ["--seed", "3"], capsys)[1]
    b = run(argv + ["--seed", "3", "--threads", "4"], capsys)[1]
    c = run(argv + ["--seed", "4"], capsys)[1]
    assert a == b and a != c
    assert json.loads(a)["results"]["seed"] == 3


def test_exp_system_from_file(tmp_path, capsys):
    f = tmp_path / "sys.txt"
    f.write_text("# toy\nq < 1/3\nr < 1/5\n5q + 2r < 2\nq + r < 29/56\n")
    assert "29/56 (not attained)" in run(["exp-max", "--system", str(f), "--objective", "q+r"], capsys)[1]


def test_exp_chains_report(capsys):
    doc = json.loads(run(["exp-implies", "--chains", "--format", "json", "--reproducible"], capsys)[1])
    text = json.dumps(doc)
    for needle in ("qs2_step/literal", "cons0_printed_tuple", "optimal_triple/15/35", "entailed_rescaled"):
        assert needle in text


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "aplab.cli", "pi", "--x", "100"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and proc.stdout.startswith("25")
