"""Cluster oriented greedy grouping.

Per hop, every eligible transmitter collects the uncovered MDs whose channel
clears a gain threshold; a greedy set cover then picks the transmitters that
serve the most still-uncovered MDs. When a hop would cover nobody the
threshold is lowered and the hop retried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np

from .channel import ChannelParams, InvalidInputError, group_power, linear_to_db, path_gain_db
from .plan import MulticastGroup, MulticastPlan
from .scenario import check_gains

BS = 0


@dataclass(frozen=True)
class ThresholdSchedule:
    """How the candidate-set threshold (gain / N0, in dB) evolves.

    ``initial_db=None`` means the zero-shadowing gain at a quarter of the
    cell radius, over N0. Every hop starts from the starting threshold; a hop
    that would cover nobody lowers it by ``step_db`` and retries, never going
    below the weakest transmitter-to-uncovered link (where every MD is
    coverable), at most ``retry_budget`` times.

    With ``sweep`` on, the starting threshold itself is tried at every
    ``step_db`` notch from ``initial_db`` down to the level where the BS
    alone covers everyone, and the cheapest resulting plan wins.
    """

    initial_db: float | None = None
    step_db: float = 1.0
    retry_budget: int = 256
    sweep: bool = True

    def __post_init__(self):
        if not self.step_db > 0:
            raise InvalidInputError(f"threshold step must be > 0 dB, got {self.step_db}")
        if self.retry_budget < 0:
            raise InvalidInputError(f"retry budget must be >= 0, got {self.retry_budget}")

    def initial_per_n0(self, radius_m: float, params: ChannelParams) -> float:
        if self.initial_db is not None:
            return 10.0 ** (self.initial_db / 10.0)
        return 10.0 ** (path_gain_db(radius_m / 4.0, params) / 10.0) / params.n0_w

    @property
    def step_factor(self) -> float:
        return 10.0 ** (self.step_db / 10.0)


def build_candidates(covered, uncovered, gains: np.ndarray, threshold_per_n0: float, n0_w: float) -> dict[int, frozenset[int]]:
    """Map each transmitter in ``covered`` to the uncovered MDs it reaches above threshold."""
    covered = sorted(covered)
    uncovered = sorted(uncovered)
    if set(covered) & set(uncovered):
        raise InvalidInputError("covered and uncovered sets overlap")
    if not uncovered:
        return {s: frozenset() for s in covered}
    sub = gains[np.ix_(covered, uncovered)] / n0_w >= threshold_per_n0
    unc = np.asarray(uncovered)
    return {s: frozenset(int(r) for r in unc[sub[i]]) for i, s in enumerate(covered)}


def greedy_set_cover(
    uncovered,
    family: Mapping[Hashable, frozenset[int] | set[int]],
    gains: np.ndarray | None = None,
) -> list[tuple[Hashable, frozenset[int]]]:
    """Greedy cover of ``uncovered`` by the sets in ``family``.

    Repeatedly takes the set with the largest intersection with the remaining
    pool and emits ``(key, intersection)``. Stops when no set adds anything,
    so part of the pool may stay uncovered.

    Ties on intersection size: with ``gains`` given (keys are transmitter
    ids), prefer the set whose weakest member has the highest gain; then the
    smallest key.
    """
    pool = set(uncovered)
    remaining = dict(family)
    out = []
    while pool and remaining:
        best = None
        best_score = None
        for key in sorted(remaining):
            inter = pool & remaining[key]
            if not inter:
                continue
            worst = min(gains[key, r] for r in inter) if gains is not None else 0.0
            score = (len(inter), worst)
            if best_score is None or score > best_score:
                best, best_score = key, score
        if best is None:
            break
        inter = frozenset(pool & remaining.pop(best))
        out.append((best, inter))
        pool -= inter
    return out


def _eligible(hop: int, depth: dict[int, int]) -> list[int]:
    if hop == 1:
        return [BS]
    return sorted(n for n, d in depth.items() if n != BS and d < hop)


def grow(
    gains: np.ndarray,
    h_max: int,
    n0_w: float,
    start_per_n0: float,
    schedule: ThresholdSchedule,
) -> list[MulticastGroup]:
    """Hop-by-hop cover from a fixed starting threshold (no sweep)."""
    c = gains.shape[0] - 1
    depth = {BS: 0}
    uncovered = set(range(1, c + 1))
    groups: list[MulticastGroup] = []
    for hop in range(1, h_max + 1):
        if not uncovered:
            break
        senders = _eligible(hop, depth)
        if not senders:
            continue
        floor = float(np.min(gains[np.ix_(senders, sorted(uncovered))])) / n0_w
        threshold = start_per_n0
        for _ in range(schedule.retry_budget + 1):
            family = build_candidates(senders, uncovered, gains, threshold, n0_w)
            picked = greedy_set_cover(uncovered, family, gains)
            if picked or threshold <= floor:
                break
            threshold = max(threshold / schedule.step_factor, floor)
        for tx, members in picked:
            groups.append(MulticastGroup(tx, tuple(members), hop, threshold_per_n0=threshold))
            for r in members:
                depth[r] = hop
            uncovered -= members
    if uncovered:
        groups.extend(_attach_leftovers(uncovered, depth, gains, h_max))
    return groups


def start_thresholds(gains: np.ndarray, n0_w: float, initial_per_n0: float, schedule: ThresholdSchedule) -> list[float]:
    """Starting thresholds the sweep tries, highest first."""
    if not schedule.sweep:
        return [initial_per_n0]
    # below the weakest BS link the BS covers everyone at hop 1 and nothing changes
    bottom = float(np.min(gains[0, 1:])) / n0_w
    out = [initial_per_n0]
    while out[-1] > bottom:
        out.append(max(out[-1] / schedule.step_factor, bottom))
    return out


def solve_cluster(
    gains: np.ndarray,
    r_min: float,
    h_max: int,
    params: ChannelParams,
    radius_m: float = 500.0,
    schedule: ThresholdSchedule | None = None,
) -> MulticastPlan:
    """Cluster oriented plan with at most ``h_max`` hops.

    Each emitted group records the threshold it was formed under. MDs still
    uncovered after ``h_max`` hops are attached at the last usable hop to
    their best covered transmitter, one group per transmitter, without a
    threshold. Among the sweep's plans the cheapest wins; ties go to the
    higher starting threshold.
    """
    if h_max < 1:
        raise InvalidInputError(f"h_max must be >= 1, got {h_max}")
    gains = check_gains(gains)
    schedule = schedule or ThresholdSchedule()
    c = gains.shape[0] - 1
    if c == 0:
        return MulticastPlan([], 0, h_max=h_max)
    n0 = params.n0_w
    best, best_power = None, math.inf
    for start in start_thresholds(gains, n0, schedule.initial_per_n0(radius_m, params), schedule):
        groups = grow(gains, h_max, n0, start, schedule)
        power = math.fsum(group_power(g.transmitter, g.receivers, gains, r_min, params)[0] for g in groups)
        if power < best_power:
            best, best_power = groups, power
    return MulticastPlan(best, c, h_max=h_max)


def _attach_leftovers(uncovered: set[int], depth: dict[int, int], gains: np.ndarray, h_max: int) -> list[MulticastGroup]:
    hop = h_max
    senders = _eligible(hop, depth)
    if not senders:
        # nobody relayed before the last hop; only the BS can still serve
        hop, senders = 1, [BS]
    by_tx: dict[int, list[int]] = {}
    for r in sorted(uncovered):
        col = gains[senders, r]
        tx = senders[int(np.argmax(col))]
        by_tx.setdefault(tx, []).append(r)
    return [MulticastGroup(tx, tuple(rx), hop) for tx, rx in by_tx.items()]


def max_group_power_bound(threshold_per_n0: float, r_min: float) -> float:
    """Largest power a group formed under ``threshold_per_n0`` can need."""
    return (2.0 ** r_min - 1.0) / threshold_per_n0


def threshold_db(threshold_per_n0: float) -> float:
    return linear_to_db(threshold_per_n0) if threshold_per_n0 > 0 else -math.inf
