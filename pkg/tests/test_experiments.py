import csv
import io
import json

import numpy as np
import pytest

from d2dmcast.config import RunConfig
from d2dmcast.experiments import (
    ExperimentConfig,
    InternalInvariantError,
    run,
    run_experiment,
    run_trial,
)
from d2dmcast.oracle import OracleCapExceeded


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_single_md_optimal_equals_channel_gain():
    res = run(ExperimentConfig(trials=1, c_values=(1,), algorithms=("optimal", "channel_gain")))
    assert res.cell("optimal", 1).powers[0] == res.cell("channel_gain", 1).powers[0]
    assert res.ratio_to_optimal("channel_gain", 1) == 1.0


def test_rerun_is_bit_identical():
    cfg = ExperimentConfig(master_seed=5, trials=2, c_values=(3, 6), algorithms=("channel_gain", "cluster", "optimal"))
    a, b = run(cfg), run(cfg)
    for key in a.cells:
        assert a.cells[key].powers.tobytes() == b.cells[key].powers.tobytes()
        assert a.cells[key].coverage == b.cells[key].coverage


def test_parallel_matches_serial():
    base = dict(master_seed=9, trials=6, c_values=(4, 20), algorithms=("channel_gain", "cluster", "bs_broadcast"))
    a = run(ExperimentConfig(threads=1, **base))
    b = run(ExperimentConfig(threads=3, **base))
    for key in a.cells:
        assert a.cells[key].powers.tobytes() == b.cells[key].powers.tobytes()
        assert a.cells[key].hops.tobytes() == b.cells[key].hops.tobytes()


def test_trial_is_independent_of_the_rest_of_the_grid():
    one = run_trial(ExperimentConfig(c_values=(5,), algorithms=("cluster",)), 5, 7)
    grid = run(ExperimentConfig(trials=8, c_values=(2, 5), algorithms=("cluster",)))
    assert grid.cell("cluster", 5).powers[7] == one["cluster"].power_w


def test_seed_changes_results():
    a = run(ExperimentConfig(master_seed=1, trials=3, c_values=(5,), algorithms=("channel_gain",)))
    b = run(ExperimentConfig(master_seed=2, trials=3, c_values=(5,), algorithms=("channel_gain",)))
    assert not np.array_equal(a.cell("channel_gain", 5).powers, b.cell("channel_gain", 5).powers)


def test_stderr_shrinks_like_root_two():
    small = run(ExperimentConfig(trials=400, c_values=(10,), algorithms=("channel_gain",))).cell("channel_gain", 10)
    big = run(ExperimentConfig(trials=800, c_values=(10,), algorithms=("channel_gain",))).cell("channel_gain", 10)
    # heavy-tailed powers make this loose; the estimator should still land near 1/sqrt(2)
    assert 0.45 < big.stderr / small.stderr < 1.0


def test_mean_coverage_pads_finished_trials():
    res = run(ExperimentConfig(trials=5, c_values=(15,), algorithms=("channel_gain",)))
    cell = res.cell("channel_gain", 15)
    curve = cell.mean_coverage()
    assert len(curve) == int(cell.hops.max())
    assert curve[-1] == 1.0
    assert all(a <= b for a, b in zip(curve, curve[1:]))


def test_optimal_above_cap_is_refused():
    with pytest.raises(OracleCapExceeded):
        ExperimentConfig(c_values=(9,), algorithms=("optimal",))


def test_invalid_plan_aborts(monkeypatch):
    from d2dmcast import experiments
    from d2dmcast.plan import MulticastGroup, MulticastPlan

    monkeypatch.setattr(experiments, "solve", lambda alg, g, cfg: MulticastPlan([MulticastGroup(0, (1,), 1)], g.shape[0] - 1))
    with pytest.raises(InternalInvariantError, match="seed="):
        run(ExperimentConfig(trials=1, c_values=(3,), algorithms=("cluster",)))


def small_config(**kw):
    cfg = RunConfig(trials=3, threads=1)
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg.check()


def test_fig3_csv_shape():
    _, files = run_experiment("fig3", small_config(c_values=(1, 5, 10)))
    table = rows(files["fig3.csv"])
    assert table[0] == ["c", "algorithm", "mean_power_w", "stderr_w", "trials"]
    assert len(table) - 1 == 3 * 3
    assert {r[1] for r in table[1:]} == {"channel_gain", "cluster", "bs_broadcast"}


def test_fig4_csv_monotone():
    _, files = run_experiment("fig4", small_config(c_values=(30,)))
    table = rows(files["fig4.csv"])
    assert table[0] == ["hop", "algorithm", "mean_coverage"]
    for alg in ("channel_gain", "cluster"):
        curve = [float(r[2]) for r in table[1:] if r[1] == alg]
        assert all(a <= b for a, b in zip(curve, curve[1:]))
        assert curve[-1] == 1.0


def test_table2_csv_and_manifest():
    _, files = run_experiment("table2", small_config(c_values=(2, 3)))
    table = rows(files["table2.csv"])
    assert table[0] == ["c", "algorithm", "mean_power_w", "ratio_to_optimal"]
    assert all(float(r[3]) >= 1.0 for r in table[1:])
    manifest = json.loads(files["table2_manifest.json"])
    assert manifest["outputs"] == ["table2.csv"]
    assert "threads" not in manifest["config"]
    assert manifest["config"]["trials"] == 3
    assert "PCG64" in manifest["rng"]
