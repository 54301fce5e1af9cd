import json
import os

import pytest

from d2dmcast.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_is_deterministic(capsys):
    _, a, _ = run_cli(capsys, "generate", "--seed", "7", "--c", "5")
    _, b, _ = run_cli(capsys, "generate", "--seed", "7", "--c", "5")
    assert a == b
    assert json.loads(a)["c"] == 5


def test_generate_empty(capsys):
    code, out, _ = run_cli(capsys, "generate", "--seed", "1", "--c", "0")
    assert code == 0
    assert json.loads(out)["positions"] == []


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("radius = 400\n")
    code, _, err = run_cli(capsys, "--config", str(cfg), "generate", "--c", "3")
    assert code == 2
    assert "radius" in err


def test_negative_c_is_user_error(capsys):
    code, _, _ = run_cli(capsys, "generate", "--c", "-1")
    assert code == 2


@pytest.mark.parametrize("alg", ["channel-gain", "cluster", "optimal", "bs-broadcast"])
def test_solve_then_validate(tmp_path, capsys, alg):
    scen = tmp_path / "s.json"
    plan = tmp_path / "p.json"
    assert run_cli(capsys, "generate", "--seed", "3", "--c", "6", "-o", str(scen))[0] == 0
    assert run_cli(capsys, "solve", str(scen), "-a", alg, "-o", str(plan))[0] == 0
    code, _, err = run_cli(capsys, "validate", str(scen), str(plan))
    assert code == 0 and "OK" in err


def test_optimal_is_cheapest_of_four(tmp_path, capsys):
    scen = tmp_path / "s.json"
    run_cli(capsys, "generate", "--seed", "11", "--c", "6", "--with-gains", "-o", str(scen))
    powers = {}
    for alg in ("channel-gain", "cluster", "optimal", "bs-broadcast"):
        _, out, _ = run_cli(capsys, "solve", str(scen), "-a", alg)
        powers[alg] = json.loads(out)["metrics"]["total_power_w"]
    assert powers["optimal"] == min(powers.values())


def test_validate_reports_violations(tmp_path, capsys):
    scen = tmp_path / "s.json"
    plan = tmp_path / "p.json"
    run_cli(capsys, "generate", "--seed", "3", "--c", "4", "-o", str(scen))
    run_cli(capsys, "solve", str(scen), "-a", "bs-broadcast", "-o", str(plan))
    doc = json.loads(plan.read_text())
    doc["hops"][0]["groups"][0]["rx"] = [1, 2, 3]
    plan.write_text(json.dumps(doc))
    code, out, _ = run_cli(capsys, "validate", str(scen), str(plan))
    assert code == 1
    assert out.startswith("(9)")


def test_verbose_solve_prints_dbm(tmp_path, capsys):
    scen = tmp_path / "s.json"
    run_cli(capsys, "generate", "--seed", "3", "--c", "4", "-o", str(scen))
    code, _, err = run_cli(capsys, "solve", str(scen), "-v")
    assert code == 0 and "dBm" in err


def test_oracle_cap_exit_code(tmp_path, capsys):
    scen = tmp_path / "s.json"
    run_cli(capsys, "generate", "--seed", "3", "--c", "9", "-o", str(scen))
    code, _, err = run_cli(capsys, "solve", str(scen), "-a", "optimal")
    assert code == 3 and "cap" in err


def test_internal_error_exit_code(tmp_path, capsys, monkeypatch):
    from d2dmcast import cli
    from d2dmcast.plan import MulticastGroup, MulticastPlan

    scen = tmp_path / "s.json"
    run_cli(capsys, "generate", "--seed", "3", "--c", "3", "-o", str(scen))
    monkeypatch.setattr(cli, "solve", lambda alg, g, cfg: MulticastPlan([MulticastGroup(0, (1,), 1)], 3))
    assert run_cli(capsys, "solve", str(scen))[0] == 4


def test_missing_scenario_file(capsys):
    assert run_cli(capsys, "solve", "/nonexistent.json")[0] == 2


def test_experiment_outputs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out, threads in ((a, "1"), (b, "4")):
        code, _, _ = run_cli(capsys, "experiment", "table2", "--trials", "4", "--seed", "1", "--threads", threads, "--output-dir", str(out))
        assert code == 0
    assert sorted(os.listdir(a)) == ["table2.csv", "table2_manifest.json"]
    for name in os.listdir(a):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_experiment_unwritable_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run_cli(capsys, "experiment", "fig3", "--trials", "1", "--output-dir", str(blocker / "sub"))
    assert code == 2


def test_experiment_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("c_values = 3\ntrials = 2\nthreads = 1\n")
    code, _, _ = run_cli(capsys, "--config", str(cfg), "experiment", "fig3", "--output-dir", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "fig3.csv").read_text().splitlines()
    assert len(lines) == 1 + 3
