"""Single-cell minimum-load solving at fixed other-cell loads.

Given the loads of all other cells, a cell's UEs see a fixed effective
noise, which induces the SIC decoding order per group. The cell's
minimum load is then the smallest total RU share over the grouping
space of the active policy: singletons only (OMA), a supplied fixed
partition, all partitions into groups of at most two found by exact
maximum-weight matching, or exhaustive partition enumeration for small
cells. Decoding orders and the grouping are recomputed from the current
interference on every call; nothing is cached across fixed-point
iterations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import networkx as nx
import numpy as np

from .model import CellSolution, NetworkModel, decoding_order
from .rate_region import min_group_load, min_group_loads_batch, recover_power_split

__all__ = [
    "GroupingPolicy",
    "solve_cell",
    "optimal_pairing",
    "enumerate_partitions",
]

_MODES = ("oma", "fixed", "pairs", "exhaustive")
_ENUM_CAP = 10  # exhaustive partition enumeration refuses larger cells


@dataclass(frozen=True)
class GroupingPolicy:
    """How a cell's UEs may share RUs.

    mode
        ``oma``: every UE alone on its RUs. ``pairs``: groups of at most
        two, optimized exactly by maximum-weight matching.
        ``fixed``: use ``fixed_groups[cell]`` as the partition.
        ``exhaustive``: try every partition with blocks up to
        ``max_group_size`` (small cells only).
    """

    mode: str = "pairs"
    max_group_size: int = 2
    fixed_groups: Mapping[int, Sequence[Sequence[int]]] | None = None
    load_rtol: float = 1e-9

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown grouping mode {self.mode!r}")
        if self.mode == "pairs" and self.max_group_size != 2:
            raise ValueError("pairs mode requires max_group_size = 2")
        if self.mode == "fixed" and self.fixed_groups is None:
            raise ValueError("fixed mode needs fixed_groups")
        if self.max_group_size < 1:
            raise ValueError("max_group_size must be >= 1")


def _cell_noise(net: NetworkModel, cell: int, rho, ues: np.ndarray) -> np.ndarray:
    """Effective noise of the cell's UEs; the own-cell load entry is unused."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("loads must be finite and nonnegative")
    pr = net.p_ru * rho
    g = net.gain[:, ues]
    g_home = net.gain[cell, ues]
    return (pr @ g - pr[cell] * g_home + net.sigma2) / g_home


def _singleton_loads(w: np.ndarray, d: np.ndarray, p: float) -> np.ndarray:
    """Closed-form per-UE loads ``d / log(1 + p/w)`` (0 where d is 0)."""
    x = np.zeros_like(d)
    pos = d > 0
    x[pos] = d[pos] / np.log1p(p / w[pos])
    return x


def optimal_pairing(
    singleton_loads: Mapping[int, float],
    pair_loads: Mapping[tuple[int, int], float],
) -> list[tuple[int, ...]]:
    """Partition into pairs/singletons with the least total load.

    Equivalent to a maximum-weight matching on the graph whose edge
    (h, j) weighs the saving ``s_h + s_j - x_hj``; solved exactly with
    the blossom algorithm (no greedy shortcut). Blocks are returned
    sorted by their smallest member, members sorted by id; decoding
    order is applied by the caller.
    """
    graph = nx.Graph()
    graph.add_nodes_from(sorted(singleton_loads))
    for h, j in sorted(pair_loads):
        saving = singleton_loads[h] + singleton_loads[j] - pair_loads[h, j]
        if saving > 0.0:
            graph.add_edge(h, j, weight=saving)
    mate = nx.max_weight_matching(graph)
    blocks = [tuple(sorted(edge)) for edge in mate]
    matched = {u for block in blocks for u in block}
    blocks.extend((u,) for u in singleton_loads if u not in matched)
    return sorted(blocks, key=min)


def enumerate_partitions(
    ues: Sequence[int], max_group_size: int
) -> Iterator[list[tuple[int, ...]]]:
    """Yield every partition of ``ues`` with blocks of at most
    ``max_group_size`` members, each exactly once.

    Oracle-grade enumeration; refuses more than 10 UEs.
    """
    items = list(ues)
    if len(items) > _ENUM_CAP:
        raise ValueError(f"refusing to enumerate partitions of {len(items)} > {_ENUM_CAP} UEs")
    if max_group_size < 1:
        raise ValueError("max_group_size must be >= 1")

    def rec(remaining: list[int]) -> Iterator[list[tuple[int, ...]]]:
        if not remaining:
            yield []
            return
        head, rest = remaining[0], remaining[1:]
        for k in range(min(max_group_size - 1, len(rest)) + 1):
            for combo in itertools.combinations(rest, k):
                taken = set(combo)
                left = [u for u in rest if u not in taken]
                for sub in rec(left):
                    yield [(head, *combo)] + sub

    return rec(items)


def _group_allocation(w_by_ue, d_by_ue, block, p, rtol):
    """(ordered members, load, power split) for one group."""
    order = decoding_order(w_by_ue, block)
    w = np.array([w_by_ue[u] for u in order])
    d = np.array([d_by_ue[u] for u in order])
    if len(order) == 1:
        x = float(_singleton_loads(w, d, p)[0])
        q = (p,) if d[0] > 0 else (0.0,)
        return order, x, q
    x, q = min_group_load(w, d, p, rtol=rtol)
    return order, x, tuple(q.tolist())


def _assemble(cell, parts):
    """Build a CellSolution from (order, x, q) blocks; the load is summed
    in canonical block order so equal partitions give equal totals."""
    parts = sorted(parts, key=lambda t: min(t[0]))
    x_arr = np.array([x for _, x, _ in parts], dtype=float)
    return CellSolution(
        cell=cell,
        groups=tuple(order for order, _, _ in parts),
        x=tuple(x_arr.tolist()),
        q=tuple(q for _, _, q in parts),
        load=float(x_arr.sum()),
    )


def solve_cell(net: NetworkModel, cell: int, rho_others, policy: GroupingPolicy) -> CellSolution:
    """Minimum cell load given the other cells' loads.

    ``rho_others`` is the full-length load vector; the own-cell entry
    is ignored (own-cell transmission is intra-cell, not interference).
    The solution is always feasible — load is unconstrained here and
    checked against the limit in post-processing.
    """
    ues = net.cell_ues(cell)
    if len(ues) == 0:
        return CellSolution(cell=cell, groups=(), x=(), q=(), load=0.0)
    w = _cell_noise(net, cell, rho_others, ues)
    d = net.demand[ues]
    p = float(net.p_ru[cell])
    w_by_ue = dict(zip(ues.tolist(), w.tolist()))
    d_by_ue = dict(zip(ues.tolist(), d.tolist()))
    rtol = policy.load_rtol

    if policy.mode == "oma":
        x = _singleton_loads(w, d, p)
        parts = [
            ((int(u),), float(x[i]), (p,) if d[i] > 0 else (0.0,))
            for i, u in enumerate(ues)
        ]
        return _assemble(cell, parts)

    if policy.mode == "fixed":
        partition = [tuple(int(u) for u in g) for g in policy.fixed_groups[cell]]
        flat = [u for g in partition for u in g]
        if sorted(flat) != sorted(ues.tolist()):
            raise ValueError(f"fixed grouping for cell {cell} is not a partition of its UEs")
        parts = [_group_allocation(w_by_ue, d_by_ue, g, p, rtol) for g in partition]
        return _assemble(cell, parts)

    if policy.mode == "pairs":
        s = _singleton_loads(w, d, p)
        singles = dict(zip(ues.tolist(), s.tolist()))
        pair_loads: dict[tuple[int, int], float] = {}
        if len(ues) > 1:
            combos = list(itertools.combinations(range(len(ues)), 2))
            order_ab = [
                (a, b) if (w[a], ues[a]) <= (w[b], ues[b]) else (b, a)
                for a, b in combos
            ]
            wp = np.array([[w[a], w[b]] for a, b in order_ab])
            dp = np.array([[d[a], d[b]] for a, b in order_ab])
            xp = min_group_loads_batch(wp, dp, p, rtol=rtol)
            for (a, b), x_ab in zip(combos, xp):
                pair_loads[int(ues[a]), int(ues[b])] = float(x_ab)
        partition = optimal_pairing(singles, pair_loads)
        parts = []
        for block in partition:
            if len(block) == 1:
                u = block[0]
                parts.append(((u,), singles[u], (p,) if d_by_ue[u] > 0 else (0.0,)))
            else:
                order = decoding_order(w_by_ue, block)
                x = pair_loads[block]
                if x > 0:
                    wv = np.array([w_by_ue[u] for u in order])
                    dv = np.array([d_by_ue[u] for u in order])
                    q = tuple(recover_power_split(wv, dv / x).tolist())
                else:
                    q = (0.0, 0.0)
                parts.append((order, x, q))
        return _assemble(cell, parts)

    # exhaustive: memoize block loads, then scan every partition
    cache: dict[frozenset, tuple] = {}

    def block_alloc(block):
        key = frozenset(block)
        if key not in cache:
            cache[key] = _group_allocation(w_by_ue, d_by_ue, block, p, rtol)
        return cache[key]

    best = None
    for partition in enumerate_partitions(ues.tolist(), policy.max_group_size):
        parts = [block_alloc(g) for g in partition]
        total = float(np.array([x for _, x, _ in sorted(parts, key=lambda t: min(t[0]))]).sum())
        if best is None or total < best[0]:
            best = (total, parts)
    return _assemble(cell, best[1])
