import json

from termcert.cli import main
from termcert.fixtures import fixture_path

HALVING = fixture_path("halving_game.prob")
HALVING_CERT = fixture_path("halving_game.cert")
HALVING_DIST = fixture_path("halving_game.dist")
WALK = fixture_path("random_walk.prob")
WALK_CERT = fixture_path("random_walk_super.cert")
WALK_DIST = fixture_path("random_walk.dist")
COINS = fixture_path("coin_loops.prob")
COINS_CERT = fixture_path("coin_loops.cert")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_round_trips_through_stdout(capsys):
    code, out, _ = run_cli(capsys, "parse", HALVING)
    assert code == 0
    assert "if star then" in out


def test_cfg_dump(capsys):
    code, out, _ = run_cli(capsys, "cfg", HALVING)
    assert code == 0
    assert "3 --[call f(n := n div 2)]--> 4" in out


def test_check_pass_exits_zero(capsys):
    code, out, _ = run_cli(
        capsys, "check", HALVING, "--cert", HALVING_CERT, "--kind", "ranking",
        "--dist", HALVING_DIST, "--box", "n=-20..20")
    assert code == 0
    assert "verdict=pass" in out


def test_check_fail_exits_one_and_prints_counterexample(capsys):
    code, out, _ = run_cli(
        capsys, "check", WALK, "--cert", WALK_CERT, "--kind", "ranking",
        "--eps", "1", "--dist", WALK_DIST, "--box", "n=-10..10")
    assert code == 1
    assert "verdict=fail" in out
    assert "counterexample" in out
    assert "at (g, 1)" in out  # the loop head is among the reported failures


def test_usage_error_exits_two(capsys):
    code, _, err = run_cli(
        capsys, "check", HALVING, "--cert", "/nonexistent.cert",
        "--kind", "ranking", "--box", "n=0..1")
    assert code == 2
    assert "error" in err


def test_parse_error_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.prob"
    bad.write_text("f( {")
    code, _, err = run_cli(capsys, "parse", str(bad))
    assert code == 2
    assert "error" in err


def test_bounds_table_lists_lower_and_upper(capsys):
    code, out, _ = run_cli(
        capsys, "bounds", HALVING, "--cert", HALVING_CERT, "--kind", "cdb",
        "--entry", "f", "--args", "n=5", "--k", "112")
    assert code == 0
    assert "56/13" in out
    assert "56" in out
    assert "1/2" in out


def test_bounds_super_uses_fixpoint_period(capsys):
    code, out, _ = run_cli(
        capsys, "bounds", WALK, "--cert", WALK_CERT, "--kind", "super",
        "--entry", "g", "--args", "n=1", "--k", "10000")
    assert code == 0
    assert "tail-sqrt" in out
    assert "as-termination" in out


def test_simulate_table_and_determinism(capsys):
    argv = ("simulate", HALVING, "--entry", "f", "--args", "n=5",
            "--dist", HALVING_DIST, "--scheduler", "uniform",
            "--runs", "400", "--max-steps", "10000", "--tail", "30",
            "--seed", "3", "--workers", "1")
    code, out1, _ = run_cli(capsys, *argv)
    assert code == 0
    code, out2, _ = run_cli(capsys, *argv)
    assert out1 == out2
    assert "mean_T" in out1


def test_simulate_greedy_requires_cert(capsys):
    code, _, err = run_cli(
        capsys, "simulate", HALVING, "--entry", "f", "--dist", HALVING_DIST,
        "--scheduler", "greedy-max", "--runs", "10")
    assert code == 2
    assert "requires --cert" in err


def test_json_output_mirrors_table(capsys):
    argv_base = ("bounds", HALVING, "--cert", HALVING_CERT, "--kind", "ranking",
                 "--entry", "f", "--args", "n=5", "--k", "112,224")
    code, table_out, _ = run_cli(capsys, *argv_base, "--format", "table")
    assert code == 0
    code, json_out, _ = run_cli(capsys, *argv_base, "--format", "json")
    assert code == 0
    payload = json.loads(json_out)
    assert payload["version"]
    assert payload["cert_digest"]
    rows = payload["rows"]
    assert len(rows) == 3  # upper bound + two tail rows
    for row in rows:
        assert str(row["value"]) in table_out


def test_csv_output(capsys):
    code, out, _ = run_cli(
        capsys, "simulate", HALVING, "--entry", "f", "--args", "n=5",
        "--dist", HALVING_DIST, "--scheduler", "always-then", "--runs", "50",
        "--max-steps", "1000", "--seed", "1", "--workers", "1",
        "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "statistic,value,ci95_lo,ci95_hi"
    assert any(line.startswith("mean_T,44") for line in lines)


def test_lab_subcommand(capsys):
    code, out, _ = run_cli(
        capsys, "lab", "--example", "cbounded", "--runs", "5000",
        "--horizon", "100", "--seed", "2", "--tail", "1")
    assert code == 0
    assert "expected_T" in out
    code, out_json, _ = run_cli(
        capsys, "lab", "--example", "cbounded", "--runs", "5000",
        "--horizon", "100", "--seed", "2", "--tail", "1", "--format", "json")
    assert code == 0
    payload = json.loads(out_json)
    assert payload["seed"] == 2
    assert any(r["query"] == "expected_T" for r in payload["rows"])


def test_coin_loop_check_without_dist_file(capsys):
    # the only sampling variable is the desugared coin, so no --dist needed
    code, out, _ = run_cli(
        capsys, "check", COINS, "--cert", COINS_CERT, "--kind", "ranking",
        "--box", "i=0..8", "--box", "n=0..8", "--box", "c=0..1")
    assert code == 0
