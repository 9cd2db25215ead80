import json
import subprocess
import sys

import pytest

from binomtv import cli
from binomtv.rng import SEED_ENV


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_exit(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as e:
        code = e.code
    return code, capsys.readouterr()


@pytest.fixture
def one_clause(tmp_path):
    p = tmp_path / "one.dnf"
    p.write_text("p dnf 5 1\n1 0\n")
    return str(p)


def test_sample(capsys):
    code, out, _ = run(["sample", "--n", "100", "--p", "0.3", "--delta-in", "1e-9",
                        "--count", "5", "--seed", "7"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6
    assert all(0 <= int(x) <= 100 for x in lines[:5])
    rep = json.loads(lines[5])
    assert rep["value"] <= 1e-9 and rep["path"] == "rejection"


def test_sample_fixed_beta_and_mirror(capsys):
    code, out, _ = run(["sample", "--n", "100", "--p", "0.7", "--beta", "64", "--count", "3"],
                       capsys)
    assert code == 0 and all(0 <= int(x) <= 100 for x in out.splitlines()[:3])


@pytest.mark.parametrize("argv", [
    ["sample", "--n", "100", "--p", "1.5", "--delta-in", "1e-9"],
    ["sample", "--n", "100", "--p", "0.3", "--delta-in", "1e-9", "--count", "0"],
    ["sample", "--n", "100", "--p", "0.3"],
    ["sample", "--n", "100", "--p", "0.3", "--beta", "64", "--delta-in", "1e-3"],
    ["bound", "--n", "20", "--p", "0.3", "--beta", "8"],
    ["nope"],
])
def test_usage_errors(argv, capsys):
    code, _ = run_exit(argv, capsys)
    assert code == 2


def test_budget_failures(capsys):
    code, out, err = run(["sample", "--n", "100", "--p", "0.3", "--delta-in", "1e-13"], capsys)
    assert code == 1 and json.loads(err)["error"] == "ZetaFloor" and out == ""


def test_bound_matches_hand_value(capsys):
    code, out, _ = run(["bound", "--n", "20", "--p", "0.3", "--beta", "64", "--c", "20",
                        "--alpha", "1.3", "--zeta", "0"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["value"] == 2 * 71104 * 20 / 2 ** 64
    code, _, err = run(["bound", "--n", "1000000", "--p", "0.5", "--beta", "39"], capsys)
    assert code == 2 and json.loads(err)["error"] == "PrecisionTooLow"
    code, out, _ = run(["bound", "--n", "4", "--p", "0.5", "--beta", "16"], capsys)
    assert json.loads(out)["value"] == 5 / 2 ** 17


def test_select_precision(capsys):
    code, out, _ = run(["select-precision", "--n", "1000", "--p", "0.3", "--delta-in", "1e-9"],
                       capsys)
    rep = json.loads(out)
    assert code == 0 and rep["report"]["value"] <= 1e-9 and rep["beta"] == rep["report"]["beta"]


def test_empirical_dtv(capsys):
    code, out, _ = run(["empirical-dtv", "--n", "20", "--p", "0.5", "--samples", "10"], capsys)
    header, row = out.splitlines()
    assert header == "n,p,beta,S,dtv_sampler,dtv_baseline"
    fields = row.split(",")
    assert fields[:4] == ["20", "0.5", "64", "10"]
    assert 0 <= float(fields[4]) <= 1 and 0 <= float(fields[5]) <= 1
    code, _, err = run(["empirical-dtv", "--n", "1001", "--p", "0.5"], capsys)
    assert code == 2 and json.loads(err)["error"] == "ResourceLimit"


def test_empirical_dtv_paired(capsys):
    code, out, _ = run(["empirical-dtv", "--n", "20", "--p", "0.5", "--samples", "200000",
                        "--seed", "3"], capsys)
    d_s, d_b = map(float, out.splitlines()[1].split(",")[4:])
    assert d_s <= d_b + 0.005


def test_dnf_exact_and_count(one_clause, capsys):
    code, out, _ = run(["dnf", "exact", one_clause], capsys)
    assert code == 0 and json.loads(out)["exact"] == "16"
    code, out, _ = run(["dnf", "count", one_clause, "--seed", "1"], capsys)
    res = json.loads(out)
    assert code == 0 and set(res) == {"estimate", "delta_prime", "T", "final_p_log2", "failed"}
    assert isinstance(res["estimate"], str) and res["failed"] is False


def test_dnf_errors(tmp_path, capsys):
    bad = tmp_path / "bad.dnf"
    bad.write_text("p cnf 3 1\n1 0\n")
    code, _, err = run(["dnf", "count", str(bad)], capsys)
    assert code == 2 and json.loads(err)["error"] == "ParseError"
    wide = tmp_path / "wide.dnf"
    wide.write_text("p dnf 30 1\n1 0\n")
    code, _, err = run(["dnf", "exact", str(wide)], capsys)
    assert code == 2 and json.loads(err)["error"] == "TooManyVariables"
    code, _, err = run(["dnf", "exact", str(tmp_path / "missing.dnf")], capsys)
    assert code == 2


def test_dnf_fail_exit(tmp_path, capsys):
    f = tmp_path / "w.dnf"
    f.write_text("p dnf 20 1\n1 0\n")
    code, out, _ = run(["dnf", "count", str(f), "--kappa", "1e-12"], capsys)
    assert code == 1 and json.loads(out)["failed"] is True


def test_dnf_bench_tiny_kappa(capsys):
    code, out, _ = run(["dnf", "bench", "--instances", "3", "--kappa", "1e-12"], capsys)
    rows = out.splitlines()[1:]
    assert code == 0 and len(rows) == 3 and all(r.endswith(",true") for r in rows)


def test_seed_env_priority(monkeypatch, capsys):
    argv = ["sample", "--n", "50", "--p", "0.5", "--beta", "64", "--count", "20"]
    monkeypatch.delenv(SEED_ENV, raising=False)
    _, default, _ = run(argv, capsys)
    _, zero, _ = run(argv + ["--seed", "0"], capsys)
    monkeypatch.setenv(SEED_ENV, "99")
    _, env, _ = run(argv, capsys)
    _, flag, _ = run(argv + ["--seed", "0"], capsys)
    _, ninety_nine, _ = run(argv + ["--seed", "99"], capsys)
    assert default == zero == flag and env == ninety_nine and env != default


def test_byte_identical_subprocess(one_clause):
    cmds = [
        ["sample", "--n", "1000", "--p", "0.25", "--delta-in", "1e-10", "--count", "50",
         "--seed", "5"],
        ["dnf", "count", one_clause, "--seed", "5"],
        ["dnf", "bench", "--instances", "3", "--seed", "5", "--workers", "2"],
    ]
    for argv in cmds:
        outs = [subprocess.run([sys.executable, "-m", "binomtv.cli", *argv],
                               capture_output=True, check=True).stdout for _ in range(2)]
        assert outs[0] == outs[1] and outs[0]
