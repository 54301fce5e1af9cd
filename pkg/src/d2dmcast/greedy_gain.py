"""Channel-gain oriented greedy grouping.

Starting from the BS, repeatedly link the uncovered MD that has the single
best channel to any node already holding the content, until every MD is
linked. MDs that share a transmitter then form one multicast group. The hop
limit is implicitly C.

Ties on equal gain go to the smaller transmitter id, then the smaller
receiver id.
"""

from __future__ import annotations

import numpy as np

from .plan import MulticastGroup, MulticastPlan
from .scenario import check_gains


def _plan_from_links(links: list[tuple[int, int]], c: int) -> MulticastPlan:
    # hop of a group = 1 + hop at which its transmitter was itself covered
    depth = {0: 0}
    children: dict[int, list[int]] = {}
    for tx, rx in links:
        depth[rx] = depth[tx] + 1
        children.setdefault(tx, []).append(rx)
    groups = [MulticastGroup(tx, tuple(rx), depth[tx] + 1) for tx, rx in children.items()]
    return MulticastPlan(groups, c, h_max=c)


def attach_sequence(gains: np.ndarray) -> list[tuple[int, int]]:
    """Reference scan: the global argmax over covered x uncovered at each step.

    O(C^2) per step, O(C^3) overall.
    """
    gains = check_gains(gains)
    c = gains.shape[0] - 1
    covered = [0]
    uncovered = list(range(1, c + 1))
    links = []
    while uncovered:
        sub = gains[np.ix_(covered, uncovered)]
        # both index lists are ascending, so the first flat argmax is the tie winner
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        tx, rx = covered[i], uncovered[j]
        links.append((tx, rx))
        uncovered.pop(j)
        covered.insert(int(np.searchsorted(covered, rx)), rx)
    return links


def attach_sequence_fast(gains: np.ndarray) -> list[tuple[int, int]]:
    """Same output as :func:`attach_sequence` in O(C^2) total.

    Keeps, for every uncovered MD, its best covered transmitter (smallest id
    among equals) and picks the global winner from those.
    """
    gains = check_gains(gains)
    c = gains.shape[0] - 1
    best_gain = gains[0].copy()
    best_tx = np.zeros(c + 1, dtype=np.int64)
    open_ = np.ones(c + 1, dtype=bool)
    open_[0] = False
    best_gain[0] = -np.inf
    links = []
    for _ in range(c):
        top = best_gain.max()
        cand = np.flatnonzero(best_gain == top)
        tx_c = best_tx[cand]
        rx = int(cand[tx_c == tx_c.min()][0])
        tx = int(best_tx[rx])
        links.append((tx, rx))
        open_[rx] = False
        best_gain[rx] = -np.inf
        row = gains[rx]
        better = open_ & ((row > best_gain) | ((row == best_gain) & (rx < best_tx)))
        best_gain[better] = row[better]
        best_tx[better] = rx
    return links


def solve_channel_gain(gains: np.ndarray, fast: bool = True) -> MulticastPlan:
    """Channel-gain oriented plan for the given gain matrix."""
    links = attach_sequence_fast(gains) if fast else attach_sequence(gains)
    return _plan_from_links(links, gains.shape[0] - 1)
