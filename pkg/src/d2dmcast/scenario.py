"""Random cell layouts: MDs uniform over a disk, BS at the center, and the
realized pairwise gain matrix with log-normal shadowing.

Randomness comes from numpy's PCG64 bit generator. A trial's 64-bit seed is
derived from ``(master_seed, c, trial)`` through ``numpy.random.SeedSequence``
so that any trial can be regenerated on its own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, InvalidInputError

SCENARIO_SCHEMA = "d2dmcast.scenario/1"

BS = 0


def trial_seed(master_seed: int, c: int, trial: int) -> int:
    """64-bit seed of one Monte Carlo trial, independent of execution order."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(c), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class Scenario:
    radius_m: float
    positions: np.ndarray  # (C, 2), metres; MD i sits at row i-1
    seed: int | None = None
    params: ChannelParams = field(default_factory=ChannelParams)
    bs_position: tuple[float, float] = (0.0, 0.0)

    @property
    def c(self) -> int:
        return len(self.positions)

    def node_positions(self) -> np.ndarray:
        """Positions of all nodes, BS first."""
        return np.vstack([np.asarray(self.bs_position, dtype=float).reshape(1, 2), self.positions])


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def _gain_db(d: np.ndarray, shadow_db, params: ChannelParams) -> np.ndarray:
    d = np.maximum(d, params.d0_m)
    return params.k_db - 10.0 * params.beta * np.log10(d / params.d0_m) - shadow_db


def gain_matrix(points: np.ndarray, shadow_db: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Linear gain matrix from node positions and a symmetric shadowing matrix.

    The diagonal is set to NaN; it never describes a link.
    """
    gains = 10.0 ** (_gain_db(pairwise_distances(points), shadow_db, params) / 10.0)
    np.fill_diagonal(gains, np.nan)
    return gains


def _gain_matrix_from_pairs(points: np.ndarray, unit_normals: np.ndarray, params: ChannelParams) -> np.ndarray:
    # row-wise over the upper triangle keeps peak memory near one n x n array
    n = len(points)
    gains = np.empty((n, n))
    x, y = points[:, 0], points[:, 1]
    off = 0
    for i in range(n):
        k = n - i - 1
        d = np.hypot(x[i + 1:] - x[i], y[i + 1:] - y[i])
        row = 10.0 ** (_gain_db(d, params.sigma_shadow_db * unit_normals[off:off + k], params) / 10.0)
        gains[i, i + 1:] = row
        gains[i + 1:, i] = row
        off += k
    np.fill_diagonal(gains, np.nan)
    return gains


def generate(seed: int, c: int, radius_m: float, params: ChannelParams | None = None) -> tuple[Scenario, np.ndarray]:
    """Draw one trial: ``c`` MDs area-uniform in the disk plus their gains.

    Draw order is fixed: radial uniforms, angular uniforms, then one standard
    normal per unordered node pair in row-major upper-triangle order.
    """
    if c < 0:
        raise InvalidInputError(f"c must be >= 0, got {c}")
    if not radius_m > 0:
        raise InvalidInputError(f"radius_m must be > 0, got {radius_m}")
    params = params or ChannelParams()
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.random(c)
    v = rng.random(c)
    r = radius_m * np.sqrt(u)
    theta = 2.0 * np.pi * v
    positions = np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    n = c + 1
    normals = rng.standard_normal(n * (n - 1) // 2)

    scen = Scenario(radius_m=float(radius_m), positions=positions, seed=int(seed), params=params)
    return scen, _gain_matrix_from_pairs(scen.node_positions(), normals, params)


def check_gains(gains: np.ndarray, c: int | None = None) -> np.ndarray:
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 2 or gains.shape[0] != gains.shape[1]:
        raise InvalidInputError(f"gain matrix must be square, got shape {gains.shape}")
    if c is not None and gains.shape[0] != c + 1:
        raise InvalidInputError(f"gain matrix is {gains.shape[0]}x{gains.shape[0]}, expected {c + 1}x{c + 1}")
    off = ~np.eye(gains.shape[0], dtype=bool)
    if not np.all(gains[off] > 0):
        raise InvalidInputError("off-diagonal gains must be positive")
    return gains


def _gain_to_json(g: float):
    return None if np.isnan(g) else float(g)


def scenario_to_dict(scen: Scenario, gains: np.ndarray | None = None) -> dict:
    doc = {
        "schema": SCENARIO_SCHEMA,
        "seed": scen.seed,
        "radius_m": scen.radius_m,
        "c": scen.c,
        "bs_position": list(scen.bs_position),
        "positions": [[float(x), float(y)] for x, y in scen.positions],
        "params": scen.params.to_dict(),
    }
    if gains is not None:
        doc["gains"] = [[_gain_to_json(g) for g in row] for row in gains]
    return doc


def scenario_to_json(scen: Scenario, gains: np.ndarray | None = None) -> str:
    return json.dumps(scenario_to_dict(scen, gains), indent=2) + "\n"


def scenario_from_dict(doc: dict) -> tuple[Scenario, np.ndarray]:
    """Rebuild a scenario and its gains.

    An explicit ``gains`` matrix wins; otherwise the trial is regenerated from
    ``seed`` and the stored positions are checked against the regeneration.
    """
    if doc.get("schema") != SCENARIO_SCHEMA:
        raise InvalidInputError(f"unsupported scenario schema {doc.get('schema')!r}")
    params = ChannelParams(**doc["params"])
    positions = np.asarray(doc["positions"], dtype=float).reshape(-1, 2)
    scen = Scenario(
        radius_m=float(doc["radius_m"]),
        positions=positions,
        seed=doc.get("seed"),
        params=params,
        bs_position=tuple(doc.get("bs_position", (0.0, 0.0))),
    )
    if doc.get("gains") is not None:
        gains = np.array([[np.nan if g is None else g for g in row] for row in doc["gains"]], dtype=float)
        return scen, check_gains(gains, scen.c)
    if scen.seed is None:
        raise InvalidInputError("scenario needs either a gains matrix or a seed")
    regen, gains = generate(scen.seed, scen.c, scen.radius_m, params)
    if not np.array_equal(regen.positions, positions):
        raise InvalidInputError("stored positions do not match the seed; include the gains matrix instead")
    return scen, gains


def scenario_from_json(text: str) -> tuple[Scenario, np.ndarray]:
    return scenario_from_dict(json.loads(text))
