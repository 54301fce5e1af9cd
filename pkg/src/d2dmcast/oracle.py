"""Exhaustive optimal planner for small cells.

Any minimum-power feasible plan can be written as a forest rooted at the BS
in which every MD has exactly one parent (its transmitter); the children of
a parent form that parent's multicast group. The oracle enumerates every
parent array, keeps the acyclic ones within the hop limit and costs them.

Two enumerators exist: :func:`iter_forests`, a plain generator that walks
parent pointers with memoized depths, and :func:`forest_table`, a vectorized
numpy equivalent used for costing. Both produce forests in lexicographic
order of the parent array, so the first minimum is the tie winner.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .channel import ChannelParams, InvalidInputError
from .plan import MulticastPlan, plan_from_parents
from .scenario import check_gains

DEFAULT_CAP = 8
_CHUNK = 1 << 18


class OracleCapExceeded(RuntimeError):
    """Refusal to search a cell larger than the configured cap."""


def forest_depths(parents) -> list[int] | None:
    """Depth of every MD under ``parents`` or None if the array has a cycle."""
    c = len(parents)
    depth = [0] * (c + 1)
    known = [True] + [False] * c
    for start in range(1, c + 1):
        chain = []
        n = start
        while not known[n]:
            if n in chain:
                return None
            chain.append(n)
            n = parents[n - 1]
        d = depth[n]
        for m in reversed(chain):
            d += 1
            depth[m] = d
            known[m] = True
    return depth[1:]


def iter_forests(c: int, h_max: int | None = None):
    """Yield every BS-rooted parent array on ``c`` MDs with depth <= ``h_max``."""
    h_max = c if h_max is None else h_max
    choices = [[p for p in range(c + 1) if p != i] for i in range(1, c + 1)]
    for parents in itertools.product(*choices):
        depths = forest_depths(parents)
        if depths is not None and max(depths, default=0) <= h_max:
            yield parents


def _decode(c: int, lo: int, hi: int) -> np.ndarray:
    # mixed-radix digits over c choices per MD; choice k maps to parent k, skipping self
    idx = np.arange(lo, hi, dtype=np.int64)
    out = np.empty((hi - lo, c), dtype=np.int8)
    for col in range(c - 1, -1, -1):
        digit = idx % c
        idx //= c
        node = col + 1
        out[:, col] = digit + (digit >= node)
    return out


def _depths(block: np.ndarray) -> np.ndarray:
    """Depths per row, -1 where the row contains a cycle."""
    n, c = block.shape
    ext = np.concatenate([np.zeros((n, 1), dtype=np.int8), block], axis=1)
    cur = np.broadcast_to(np.arange(1, c + 1, dtype=np.int64), (n, c)).copy()
    depth = np.full((n, c), -1, dtype=np.int64)
    for step in range(1, c + 1):
        cur = np.take_along_axis(ext, cur, axis=1).astype(np.int64)
        newly = (cur == 0) & (depth < 0)
        depth[newly] = step
    return depth


@lru_cache(maxsize=16)
def forest_table(c: int, h_max: int | None = None) -> np.ndarray:
    """All valid parent arrays as an ``(N, c)`` int8 array in lexicographic order."""
    h_max = c if h_max is None else h_max
    if c == 0:
        return np.zeros((1, 0), dtype=np.int8)
    total = c ** c
    keep = []
    for lo in range(0, total, _CHUNK):
        block = _decode(c, lo, min(lo + _CHUNK, total))
        d = _depths(block)
        ok = (d >= 0).all(axis=1) & (d.max(axis=1) <= h_max)
        keep.append(block[ok])
    table = np.concatenate(keep)
    table.setflags(write=False)
    return table


def _power_matrix(gains: np.ndarray, r_min: float, params: ChannelParams) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        pw = (2.0 ** r_min - 1.0) * params.n0_w / gains
    np.fill_diagonal(pw, 0.0)
    return pw


def forest_costs(table: np.ndarray, gains: np.ndarray, r_min: float, params: ChannelParams) -> np.ndarray:
    """Total power of every forest in ``table``."""
    n, c = table.shape
    pw = _power_matrix(gains, r_min, params)
    out = np.empty(n)
    cols = np.arange(1, c + 1)
    for lo in range(0, n, _CHUNK):
        blk = table[lo:lo + _CHUNK].astype(np.int64)
        link = pw[blk, cols]
        tot = np.zeros(len(blk))
        for p in range(c + 1):
            tot += np.where(blk == p, link, 0.0).max(axis=1)
        out[lo:lo + _CHUNK] = tot
    return out


def solve_optimal(
    gains: np.ndarray,
    r_min: float,
    params: ChannelParams,
    h_max: int | None = None,
    cap: int = DEFAULT_CAP,
) -> MulticastPlan:
    """Minimum total-power plan by exhaustive search.

    ``h_max`` defaults to C. Raises :class:`OracleCapExceeded` when C > ``cap``.
    """
    gains = check_gains(gains)
    c = gains.shape[0] - 1
    if c > cap:
        raise OracleCapExceeded(f"exhaustive search refused for C={c} > cap {cap} (search space is C^C)")
    h_max = c if h_max is None else h_max
    if h_max < 1 and c > 0:
        raise InvalidInputError(f"h_max must be >= 1, got {h_max}")
    if c == 0:
        return MulticastPlan([], 0, h_max=h_max)
    table = forest_table(c, min(h_max, c))
    costs = forest_costs(table, gains, r_min, params)
    best = int(np.argmin(costs))
    return plan_from_parents(table[best], c, h_max=h_max)


def solve_optimal_reference(gains: np.ndarray, r_min: float, params: ChannelParams, h_max: int | None = None) -> MulticastPlan:
    """Sequential scan over :func:`iter_forests`, costing each plan directly."""
    from .plan import total_power

    gains = check_gains(gains)
    c = gains.shape[0] - 1
    h_max = c if h_max is None else h_max
    best = None
    best_cost = np.inf
    for parents in iter_forests(c, h_max):
        plan = plan_from_parents(parents, c, h_max=h_max)
        cost = total_power(plan, gains, r_min, params)
        if cost < best_cost:
            best, best_cost = plan, cost
    return best if best is not None else MulticastPlan([], c, h_max=h_max)
