"""Multicast plans: the grouping decision in materialized form, its
feasibility check and the total-power objective.

A plan is a list of multicast groups. Each group has one transmitter (node 0
is the BS, 1..C are MDs), a non-empty receiver set and a hop index. The
worst-channel member of a group is never stored by the solvers; it is
recomputed from the gains whenever power is needed.

Violation tags name the constraint class that failed:

``"(5)"``
    declared worst receiver is not the weakest link of its group
``"(6)"``
    hop/transmitter mismatch: BS outside hop 1 or an MD at hop 1; in strict
    mode also a relay that was not served by the BS at hop 1
``"(7)"``
    a relay transmits without having received at a strictly earlier hop
``"(8)"``
    declared power leaves some receiver below the rate requirement
``"(9)"``
    an MD is served twice or not at all
``"(10)"``
    a group sits above the hop limit
``"structure"``
    malformed group (bad ids, empty receivers, self-reception, hop < 1)
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, InvalidInputError, group_power, watts_to_dbm

PLAN_SCHEMA = "d2dmcast.plan/1"

# Relative slack on declared powers that went through a JSON round trip.
POWER_RTOL = 1e-9


class PlanInvalidError(ValueError):
    """A plan failed validation; ``violations`` lists every failure."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.constraint}: {v.message}" for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid plan: {lines}{more}")


@dataclass(frozen=True)
class Violation:
    constraint: str
    message: str


@dataclass(frozen=True)
class MulticastGroup:
    transmitter: int
    receivers: tuple[int, ...]
    hop: int
    # Only set on plans read back from JSON; solvers leave them None.
    power_w: float | None = None
    worst_rx: int | None = None
    # Candidate-set threshold (gain / N0) the group was formed under, if any.
    threshold_per_n0: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "receivers", tuple(sorted(int(r) for r in self.receivers)))


@dataclass
class MulticastPlan:
    groups: list[MulticastGroup]
    c: int
    h_max: int | None = None

    def __post_init__(self):
        self.groups = sorted(self.groups, key=lambda g: (g.hop, g.transmitter, g.receivers))

    @property
    def num_hops(self) -> int:
        return max((g.hop for g in self.groups), default=0)

    def receive_hop(self) -> dict[int, int]:
        """Hop at which each MD is served (first occurrence if duplicated)."""
        out: dict[int, int] = {}
        for g in self.groups:
            for r in g.receivers:
                out.setdefault(r, g.hop)
        return out

    def parents(self) -> list[int]:
        """Transmitter of each MD 1..C, as a list indexed by ``md - 1``."""
        par = [-1] * self.c
        for g in self.groups:
            for r in g.receivers:
                par[r - 1] = g.transmitter
        return par


@dataclass
class PlanMetrics:
    total_power_w: float
    num_hops: int
    num_groups: int
    coverage_by_hop: list[float] = field(default_factory=list)


def bs_broadcast_plan(c: int) -> MulticastPlan:
    """The no-D2D baseline: the BS serves every MD in one hop-1 group."""
    if c < 0:
        raise InvalidInputError(f"c must be >= 0, got {c}")
    if c == 0:
        return MulticastPlan([], 0, h_max=1)
    return MulticastPlan([MulticastGroup(0, tuple(range(1, c + 1)), 1)], c, h_max=1)


def plan_from_parents(parents, c: int | None = None, h_max: int | None = None) -> MulticastPlan:
    """Turn a parent array (``parents[i-1]`` transmits to MD i) into a plan.

    Children of a common parent form one group whose hop is one more than the
    parent's own reception hop. The parent array must describe a forest
    rooted at the BS.
    """
    parents = [int(p) for p in parents]
    c = len(parents) if c is None else c
    depth = {0: 0}

    def depth_of(n: int) -> int:
        chain = []
        while n not in depth:
            chain.append(n)
            if len(chain) > c:
                raise InvalidInputError("parent array contains a cycle")
            n = parents[n - 1]
        d = depth[n]
        for m in reversed(chain):
            d += 1
            depth[m] = d
        return depth[chain[0]] if chain else d

    children: dict[int, list[int]] = defaultdict(list)
    for i, p in enumerate(parents, start=1):
        if p == i or not 0 <= p <= c:
            raise InvalidInputError(f"bad parent {p} for MD {i}")
        children[p].append(i)
    groups = [MulticastGroup(p, tuple(kids), depth_of(p) + 1) for p, kids in children.items()]
    return MulticastPlan(groups, c, h_max=h_max)


def validate(
    plan: MulticastPlan,
    gains: np.ndarray,
    r_min: float,
    h_max: int | None,
    params: ChannelParams,
    strict: bool = False,
) -> list[Violation]:
    """Every constraint violation of ``plan``; an empty list means feasible.

    ``h_max=None`` skips the hop bound. ``strict`` applies the literal
    reading of the relay rule, where every relay must have been served
    directly by the BS.
    """
    gains = np.asarray(gains)
    if gains.shape != (plan.c + 1, plan.c + 1):
        raise InvalidInputError(f"plan has C={plan.c} but gain matrix is {gains.shape}")
    c = plan.c
    out: list[Violation] = []

    for g in plan.groups:
        if not 0 <= g.transmitter <= c:
            out.append(Violation("structure", f"transmitter {g.transmitter} out of range"))
        if not g.receivers:
            out.append(Violation("structure", f"group of {g.transmitter} at hop {g.hop} has no receivers"))
        bad = [r for r in g.receivers if not 1 <= r <= c]
        if bad:
            out.append(Violation("structure", f"receivers {bad} out of range 1..{c}"))
        if g.transmitter in g.receivers:
            out.append(Violation("structure", f"node {g.transmitter} receives from itself"))
        if g.hop < 1:
            out.append(Violation("structure", f"hop {g.hop} < 1"))
    if out:
        return out

    counts = Counter(r for g in plan.groups for r in g.receivers)
    dup = sorted(r for r, k in counts.items() if k > 1)
    missing = sorted(set(range(1, c + 1)) - set(counts))
    if dup:
        out.append(Violation("(9)", f"MDs {dup} are served more than once"))
    if missing:
        out.append(Violation("(9)", f"MDs {missing} are never served"))

    hops_of: dict[int, list[int]] = defaultdict(list)
    for g in plan.groups:
        for r in g.receivers:
            hops_of[r].append(g.hop)

    for g in plan.groups:
        tx = g.transmitter
        if tx == 0 and g.hop != 1:
            out.append(Violation("(6)", f"BS transmits at hop {g.hop}; it may only serve hop 1"))
        if tx != 0 and g.hop == 1:
            out.append(Violation("(6)", f"MD {tx} transmits at hop 1, which only the BS serves"))
        if tx != 0:
            if not any(h < g.hop for h in hops_of.get(tx, [])):
                out.append(Violation("(7)", f"MD {tx} transmits at hop {g.hop} without receiving at an earlier hop"))
            if strict and 1 not in hops_of.get(tx, []):
                out.append(Violation("(6)", f"relay {tx} was not served by the BS at hop 1 (strict mode)"))
        if h_max is not None and g.hop > h_max:
            out.append(Violation("(10)", f"group of {tx} at hop {g.hop} exceeds h_max={h_max}"))

        if g.worst_rx is not None or g.power_w is not None:
            need, worst = group_power(tx, g.receivers, gains, r_min, params)
            if g.worst_rx is not None and g.worst_rx != worst:
                if g.worst_rx not in g.receivers or gains[tx, g.worst_rx] != gains[tx, worst]:
                    out.append(Violation("(5)", f"group of {tx}: declared worst receiver {g.worst_rx}, weakest link is {worst}"))
            if g.power_w is not None and g.power_w < need * (1.0 - POWER_RTOL):
                out.append(Violation("(8)", f"group of {tx}: declared {g.power_w:.6g} W is below the {need:.6g} W needed by MD {worst}"))
    return out


def _check(plan, gains, r_min, h_max, params):
    violations = validate(plan, gains, r_min, h_max, params)
    if violations:
        raise PlanInvalidError(violations)


def group_powers(plan: MulticastPlan, gains: np.ndarray, r_min: float, params: ChannelParams) -> list[tuple[float, int]]:
    return [group_power(g.transmitter, g.receivers, gains, r_min, params) for g in plan.groups]


def total_power(plan: MulticastPlan, gains: np.ndarray, r_min: float, params: ChannelParams) -> float:
    """Sum of every group's minimum transmit power, BS groups included."""
    _check(plan, gains, r_min, plan.h_max, params)
    return math.fsum(p for p, _ in group_powers(plan, gains, r_min, params))


def coverage_by_hop(plan: MulticastPlan) -> list[float]:
    if plan.c == 0:
        return []
    per_hop = Counter()
    for g in plan.groups:
        per_hop[g.hop] += len(g.receivers)
    covered = 0
    out = []
    for h in range(1, plan.num_hops + 1):
        covered += per_hop[h]
        out.append(covered / plan.c)
    return out


def metrics(plan: MulticastPlan, gains: np.ndarray, r_min: float, params: ChannelParams) -> PlanMetrics:
    return PlanMetrics(
        total_power_w=total_power(plan, gains, r_min, params),
        num_hops=plan.num_hops,
        num_groups=len(plan.groups),
        coverage_by_hop=coverage_by_hop(plan),
    )


def plan_to_dict(plan: MulticastPlan, gains: np.ndarray, r_min: float, params: ChannelParams) -> dict:
    powers = group_powers(plan, gains, r_min, params)
    hops: dict[int, list[dict]] = defaultdict(list)
    for g, (p, w) in zip(plan.groups, powers):
        entry = {"tx": g.transmitter, "rx": list(g.receivers), "power_w": p, "worst_rx": w}
        if g.threshold_per_n0 is not None:
            entry["threshold_per_n0"] = g.threshold_per_n0
        hops[g.hop].append(entry)
    return {
        "schema": PLAN_SCHEMA,
        "c": plan.c,
        "h_max": plan.h_max,
        "hops": [{"hop": h, "groups": hops[h]} for h in sorted(hops)],
        "total_power_w": math.fsum(p for p, _ in powers),
    }


def plan_to_json(plan: MulticastPlan, gains: np.ndarray, r_min: float, params: ChannelParams) -> str:
    return json.dumps(plan_to_dict(plan, gains, r_min, params), indent=2) + "\n"


def plan_from_dict(doc: dict) -> MulticastPlan:
    if doc.get("schema") != PLAN_SCHEMA:
        raise InvalidInputError(f"unsupported plan schema {doc.get('schema')!r}")
    groups = []
    for hop in doc["hops"]:
        for g in hop["groups"]:
            groups.append(
                MulticastGroup(
                    transmitter=int(g["tx"]),
                    receivers=tuple(g["rx"]),
                    hop=int(hop["hop"]),
                    power_w=g.get("power_w"),
                    worst_rx=g.get("worst_rx"),
                    threshold_per_n0=g.get("threshold_per_n0"),
                )
            )
    return MulticastPlan(groups, int(doc["c"]), h_max=doc.get("h_max"))


def plan_from_json(text: str) -> MulticastPlan:
    return plan_from_dict(json.loads(text))


def describe(plan: MulticastPlan, gains: np.ndarray, r_min: float, params: ChannelParams) -> str:
    """Human-readable summary with powers in both W and dBm."""
    lines = []
    for g, (p, w) in zip(plan.groups, group_powers(plan, gains, r_min, params)):
        lines.append(f"hop {g.hop:>3}  tx {g.transmitter:>4} -> {list(g.receivers)}  {p:.6g} W ({watts_to_dbm(p):.2f} dBm), worst {w}")
    tot = total_power(plan, gains, r_min, params)
    lines.append(f"total {tot:.6g} W ({watts_to_dbm(tot):.2f} dBm), {plan.num_hops} hops, {len(plan.groups)} groups")
    return "\n".join(lines)

