import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dmcast.channel import ChannelParams, InvalidInputError
from d2dmcast.scenario import (
    generate,
    scenario_from_json,
    scenario_to_json,
    trial_seed,
)

P = ChannelParams(sigma_shadow_db=8.0)


def test_empty_cell():
    scen, gains = generate(3, 0, 500.0, P)
    assert scen.positions.shape == (0, 2)
    assert gains.shape == (1, 1)


def test_same_seed_is_bit_identical():
    a, ga = generate(99, 40, 500.0, P)
    b, gb = generate(99, 40, 500.0, P)
    assert a.positions.tobytes() == b.positions.tobytes()
    assert ga.tobytes() == gb.tobytes()


def test_distinct_seeds_distinct_positions():
    a, _ = generate(1, 10, 500.0, P)
    b, _ = generate(2, 10, 500.0, P)
    assert not np.array_equal(a.positions, b.positions)


def test_mean_radius_of_uniform_disk():
    # E[r] = 2R/3 for a point uniform over a disk of radius R
    scen, _ = generate(2024, 5000, 500.0, ChannelParams(sigma_shadow_db=0.0))
    r = np.hypot(*scen.positions.T)
    assert r.mean() == pytest.approx(1000.0 / 3.0, rel=0.03)


@pytest.mark.parametrize("frac", [0.25, 0.5, 0.75])
def test_area_uniformity(frac):
    r = np.concatenate([np.hypot(*generate(s, 2000, 500.0, P)[0].positions.T) for s in range(10)])
    inside = np.mean(r <= frac * 500.0)
    # binomial sd at n=20000 is below 0.0036; allow 4 sd
    assert inside == pytest.approx(frac ** 2, abs=0.015)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 30))
def test_gain_matrix_symmetric_positive_inside_disk(seed, c):
    scen, g = generate(seed, c, 250.0, P)
    off = ~np.eye(c + 1, dtype=bool)
    assert np.array_equal(g[off], g.T[off])
    assert np.all(g[off] > 0)
    assert np.all(np.hypot(*scen.positions.T) <= 250.0) if c else True


def test_zero_sigma_matches_path_loss():
    params = ChannelParams(sigma_shadow_db=0.0)
    scen, g = generate(5, 4, 500.0, params)
    pts = scen.node_positions()
    d = np.maximum(np.hypot(*(pts[1] - pts[3])), 1.0)
    assert 10 * np.log10(g[1, 3]) == pytest.approx(-31.54 - 30 * np.log10(d), abs=1e-9)


def test_trial_seed_is_stable_and_spread():
    assert trial_seed(1, 5, 0) == trial_seed(1, 5, 0)
    seeds = {trial_seed(1, c, t) for c in range(1, 8) for t in range(50)}
    assert len(seeds) == 350
    assert 0 <= trial_seed(2**63, 100, 10**6) < 2**64


def test_bad_arguments():
    with pytest.raises(InvalidInputError):
        generate(1, -1, 500.0, P)
    with pytest.raises(InvalidInputError):
        generate(1, 3, 0.0, P)


def test_json_round_trip_with_and_without_gains():
    scen, g = generate(11, 6, 500.0, P)
    for gains in (g, None):
        text = scenario_to_json(scen, gains)
        back, g2 = scenario_from_json(text)
        assert np.array_equal(back.positions, scen.positions)
        np.testing.assert_array_equal(g2, g)
        assert back.params == scen.params


def test_json_tampered_positions_rejected():
    scen, _ = generate(11, 3, 500.0, P)
    doc = json.loads(scenario_to_json(scen))
    doc["positions"][0][0] += 1.0
    with pytest.raises(InvalidInputError):
        scenario_from_json(json.dumps(doc))
