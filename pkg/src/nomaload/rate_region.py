"""Power/rate algebra for a SIC group at fixed interference.

For a group of K UEs indexed in decoding order (ascending effective
noise ``w``, position 1 decodes and cancels everything after it), the
total transmit power needed to deliver per-UE rates ``c`` (nats/RU) is

    R(w, c) = sum_t (w_t - w_{t-1}) * exp(c_t + ... + c_K) - w_K,

with ``w_0 = 0``. The same formula evaluated with the UEs in any other
order describes a region that is never larger; the ascending-``w``
order always needs the least power. :func:`verify_order_optimality`
checks this exhaustively, and :func:`min_group_load` inverts R to find
the smallest RU share a group needs to meet its demand within a power
budget.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EXP_CAP",
    "required_power",
    "recover_power_split",
    "OrderAudit",
    "verify_order_optimality",
    "min_group_load",
]

# Exponent cap: exp(700) is within float64 range, exp(710) is not. Rate
# sums beyond the cap signal "infeasible at any finite power" during
# bracketing rather than propagating inf/nan arithmetic.
EXP_CAP = 700.0


def required_power(w, c, exp_cap: float = EXP_CAP) -> float:
    """Total power (mW) to deliver rates ``c`` to a group ordered by ``w``.

    ``w`` must be listed in the intended decoding order (the member at
    position 0 is decoded by nobody and cancels everyone after it).
    Rates of zero cost nothing: ``required_power(w, 0) == 0``.

    Returns ``math.inf`` when the largest exponent (the total rate sum)
    exceeds ``exp_cap``; this is the infeasible/overflow signal used by
    the load bisection and never arises from ordinary inputs.
    """
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    if w.ndim != 1 or w.shape != c.shape:
        raise ValueError("w and c must be 1-D and of equal length")
    if np.any(c < 0):
        raise ValueError("rates must be nonnegative")
    suffix = np.cumsum(c[::-1])[::-1]
    if suffix[0] > exp_cap:
        return math.inf
    w_prev = np.concatenate(([0.0], w[:-1]))
    return float(((w - w_prev) * np.exp(suffix)).sum() - w[-1])


def _required_power_rows(W: np.ndarray, C: np.ndarray, exp_cap: float) -> np.ndarray:
    """Row-wise :func:`required_power` for same-size groups (m, K)."""
    suffix = np.cumsum(C[:, ::-1], axis=1)[:, ::-1]
    over = suffix[:, 0] > exp_cap
    safe = np.minimum(suffix, exp_cap)
    w_prev = np.concatenate((np.zeros((W.shape[0], 1)), W[:, :-1]), axis=1)
    r = ((W - w_prev) * np.exp(safe)).sum(axis=1) - W[:, -1]
    r[over] = math.inf
    return r


def recover_power_split(w, c, exp_cap: float = EXP_CAP) -> np.ndarray:
    """Per-member power split behind :func:`required_power`.

    Successive inversion of the per-UE rate formula:
    ``q_1 = w_1 (e^{c_1} - 1)`` and
    ``q_t = (q_1 + ... + q_{t-1} + w_t)(e^{c_t} - 1)``.
    The split sums to ``required_power(w, c)`` (up to roundoff) and
    recomputing each member's capacity from it reproduces ``c``.

    Raises ``OverflowError`` when the total rate sum exceeds ``exp_cap``
    (the same condition under which :func:`required_power` signals
    infeasibility).
    """
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    if w.ndim != 1 or w.shape != c.shape:
        raise ValueError("w and c must be 1-D and of equal length")
    if np.any(c < 0):
        raise ValueError("rates must be nonnegative")
    if float(c.sum()) > exp_cap:
        raise OverflowError("rate sum exceeds the exponent cap; no finite power split")
    q = np.empty_like(w)
    acc = 0.0
    for t in range(len(w)):
        q[t] = (acc + w[t]) * math.expm1(c[t])
        acc += q[t]
    return q


@dataclass(frozen=True)
class OrderAudit:
    """Exhaustive permutation table of :func:`required_power`.

    ``table`` lists every permutation of the member positions together
    with its required power. ``ok`` is True iff the SIC order
    (ascending ``w``, ties by position) attains the minimum.
    """

    w: tuple[float, ...]
    c: tuple[float, ...]
    table: tuple[tuple[tuple[int, ...], float], ...]
    sic_order: tuple[int, ...]
    sic_power: float
    min_power: float
    ok: bool
    violations: tuple[tuple[int, ...], ...]

    def to_json(self, indent: int | None = None) -> str:
        doc = {
            "w": list(self.w),
            "c": list(self.c),
            "orders": [{"order": list(p), "power": r} for p, r in self.table],
            "sic_order": list(self.sic_order),
            "sic_power": self.sic_power,
            "min_power": self.min_power,
            "ok": self.ok,
            "violations": [list(p) for p in self.violations],
        }
        return json.dumps(doc, indent=indent, sort_keys=True)


def verify_order_optimality(w, c, max_size: int = 7) -> OrderAudit:
    """Check over all K! orders that ascending-``w`` needs the least power.

    Brute-force oracle for small groups (K <= ``max_size``). A False
    ``ok`` can only come from an implementation bug; ``violations``
    then lists every strictly cheaper permutation.
    """
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    k = len(w)
    if k > max_size:
        raise ValueError(f"refusing exhaustive check for K={k} > {max_size}")
    sic = tuple(sorted(range(k), key=lambda t: (w[t], t)))
    table = []
    for perm in itertools.permutations(range(k)):
        idx = list(perm)
        table.append((perm, required_power(w[idx], c[idx])))
    powers = dict(table)
    sic_power = powers[sic]
    min_power = min(r for _, r in table)
    violations = tuple(p for p, r in table if r < sic_power)
    return OrderAudit(
        w=tuple(w.tolist()),
        c=tuple(c.tolist()),
        table=tuple(table),
        sic_order=sic,
        sic_power=sic_power,
        min_power=min_power,
        ok=sic_power <= min_power,
        violations=violations,
    )


def min_group_load(w, d, p: float, rtol: float = 1e-9, exp_cap: float = EXP_CAP):
    """Smallest RU fraction ``x`` so the group meets demand ``d`` within
    power budget ``p``, plus the corresponding power split.

    Members must already be in decoding order (``w`` ascending). The
    per-RU rates at share ``x`` are ``d / x`` (demand met with
    equality), so ``x`` solves ``required_power(w, d/x) == p``; the
    left side is continuous and strictly decreasing in ``x``, and a
    solution always exists because no upper limit is placed on ``x``.

    A single member is solved in closed form
    (``x = d / log(1 + p/w)``); larger groups by bisection, bracketing
    upward from ``x0 = max(d) / log(1 + p / sum(w))`` by doubling. The
    returned ``x`` is the feasible (upper) end of the final bracket, so
    the split never exceeds the budget beyond roundoff.
    """
    w = np.asarray(w, dtype=float)
    d = np.asarray(d, dtype=float)
    if w.shape != d.shape or w.ndim != 1:
        raise ValueError("w and d must be 1-D and of equal length")
    if np.any(np.diff(w) < 0):
        raise ValueError("w must be ascending (decoding order)")
    if not p > 0:
        raise ValueError("power budget must be positive")
    if np.any(d < 0):
        raise ValueError("demands must be nonnegative")
    if not np.any(d > 0):
        return 0.0, np.zeros_like(w)
    # numpy transcendentals throughout so the batched lockstep variant
    # reproduces this routine bitwise
    if len(w) == 1:
        x = float(d[0] / np.log1p(p / w[0]))
        return x, np.array([float(w[0] * np.expm1(d[0] / x))])
    lo = 0.0
    hi = float(d.max() / np.log1p(p / w.sum()))
    while required_power(w, d / hi, exp_cap) > p:
        lo = hi
        hi = 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if required_power(w, d / mid, exp_cap) > p:
            lo = mid
        else:
            hi = mid
    return hi, recover_power_split(w, d / hi, exp_cap)


def min_group_loads_batch(W, D, p: float, rtol: float = 1e-9,
                          exp_cap: float = EXP_CAP) -> np.ndarray:
    """Row-wise :func:`min_group_load` loads for same-size groups.

    ``W`` and ``D`` are (m, K) with each row ascending in ``W``. Runs
    the bisections in lockstep with per-row masks; every row performs
    exactly the arithmetic of the scalar routine, so results match it
    bitwise. Only the loads are returned (splits are recovered per
    selected group by the callers).
    """
    W = np.asarray(W, dtype=float)
    D = np.asarray(D, dtype=float)
    if W.shape != D.shape or W.ndim != 2:
        raise ValueError("W and D must be 2-D and of equal shape")
    if W.shape[1] == 1:
        out = np.zeros(W.shape[0])
        pos = D[:, 0] > 0
        out[pos] = D[pos, 0] / np.log1p(p / W[pos, 0])
        return out
    m = W.shape[0]
    x = np.zeros(m)
    act = D.any(axis=1)
    if not act.any():
        return x
    Wa, Da = W[act], D[act]
    lo = np.zeros(Wa.shape[0])
    hi = Da.max(axis=1) / np.log1p(p / Wa.sum(axis=1))
    need = _required_power_rows(Wa, Da / hi[:, None], exp_cap) > p
    while need.any():
        lo[need] = hi[need]
        hi[need] = 2.0 * hi[need]
        sub = np.flatnonzero(need)
        still = _required_power_rows(Wa[sub], Da[sub] / hi[sub, None], exp_cap) > p
        need[sub] = still
    open_ = hi - lo > rtol * hi
    while open_.any():
        sub = np.flatnonzero(open_)
        mid = 0.5 * (lo[sub] + hi[sub])
        infeas = _required_power_rows(Wa[sub], Da[sub] / mid[:, None], exp_cap) > p
        lo[sub[infeas]] = mid[infeas]
        hi[sub[~infeas]] = mid[~infeas]
        open_[sub] = hi[sub] - lo[sub] > rtol * hi[sub]
    x[act] = hi
    return x
