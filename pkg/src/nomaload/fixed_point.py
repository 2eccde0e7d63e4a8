"""Network-wide fixed-point iteration on the per-cell load mapping.

Each sweep re-solves every cell's minimum load against the current
loads of the others and feeds the results back, either all at once
(Jacobi) or sequentially with immediate updates (Gauss–Seidel). The
per-cell mapping is a standard interference function, so the iteration
converges to the unique fixed point from any nonnegative start even
though groupings and SIC decoding orders may change from sweep to
sweep; :func:`sif_probe` spot-checks the two defining SIF properties
numerically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import CellSolution, NetworkModel
from .single_cell import GroupingPolicy, solve_cell

__all__ = [
    "SolveConfig",
    "IterationTrace",
    "SolveResult",
    "ConvergenceError",
    "LoadBoundExceeded",
    "solve",
    "check_feasibility",
    "FeasibilityReport",
    "objective",
    "sif_probe",
    "SifProbeReport",
]

_SCHEDULES = ("jacobi", "gauss_seidel")


@dataclass
class SolveConfig:
    """Iteration controls.

    ``abort_above`` stops a solve early once any load exceeds the bound;
    it requires an all-zero start, under which the trajectory increases
    monotonically toward the fixed point, so crossing the bound proves
    the fixed point itself violates it.
    """

    schedule: str = "jacobi"
    epsilon: float = 1e-4
    max_iters: int = 200
    rho0: float | Sequence[float] | None = None
    abort_above: float | None = None

    def __post_init__(self):
        if self.schedule not in _SCHEDULES:
            raise ValueError(f"schedule must be one of {_SCHEDULES}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class IterationTrace:
    """Per-sweep history: iterates, sup-norm deltas, decoding orders."""

    rho: list[np.ndarray] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)
    orders: list[tuple[tuple[tuple[int, ...], ...], ...]] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.deltas)

    def order_flips(self) -> list[list[int]]:
        """Per sweep and cell: groups whose member set persisted from the
        previous sweep but whose decoding order changed."""
        out: list[list[int]] = []
        for k, sweep in enumerate(self.orders):
            row = []
            for i, groups in enumerate(sweep):
                if k == 0:
                    row.append(0)
                    continue
                prev = {frozenset(g): g for g in self.orders[k - 1][i]}
                row.append(sum(
                    1 for g in groups
                    if frozenset(g) in prev and prev[frozenset(g)] != g
                ))
            out.append(row)
        return out

    @property
    def total_order_flips(self) -> int:
        return sum(sum(row) for row in self.order_flips())

    def to_csv(self, path: str | Path) -> None:
        flips = self.order_flips()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "cell", "rho", "delta_sup_norm", "order_flips"])
            for k in range(self.iterations):
                for i, r in enumerate(self.rho[k + 1]):
                    writer.writerow([k + 1, i, repr(float(r)), repr(self.deltas[k]), flips[k][i]])


class ConvergenceError(RuntimeError):
    """No convergence within max_iters; the theory rules this out, so it
    signals an implementation bug. Carries the trace for inspection."""

    def __init__(self, message: str, trace: IterationTrace):
        super().__init__(message)
        self.trace = trace


class LoadBoundExceeded(RuntimeError):
    """An iterate crossed ``abort_above`` (zero start: the fixed point
    provably violates the bound)."""

    def __init__(self, message: str, trace: IterationTrace):
        super().__init__(message)
        self.trace = trace


@dataclass
class SolveResult:
    rho: np.ndarray
    solutions: tuple[CellSolution, ...]
    trace: IterationTrace


def solve(net: NetworkModel, policy: GroupingPolicy, cfg: SolveConfig | None = None) -> SolveResult:
    """Iterate the per-cell load mapping to its fixed point.

    Jacobi sweeps evaluate every cell against the previous iterate;
    Gauss–Seidel updates in cell order so later cells see fresh loads.
    Stops when the sup-norm step drops strictly below ``cfg.epsilon``.
    """
    cfg = cfg if cfg is not None else SolveConfig()
    n = net.n_cells
    if cfg.rho0 is None:
        rho = np.zeros(n)
    else:
        rho = np.broadcast_to(np.asarray(cfg.rho0, dtype=float), (n,)).astype(float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("initial loads must be finite and nonnegative")
    if cfg.abort_above is not None and np.any(rho != 0):
        raise ValueError("abort_above requires an all-zero start")

    trace = IterationTrace(rho=[rho.copy()])
    sols: list[CellSolution] = []
    for _ in range(cfg.max_iters):
        if cfg.schedule == "jacobi":
            sols = [solve_cell(net, i, rho, policy) for i in range(n)]
            new = np.array([s.load for s in sols])
        else:
            work = rho.copy()
            sols = []
            for i in range(n):
                s = solve_cell(net, i, work, policy)
                work[i] = s.load
                sols.append(s)
            new = work
        delta = float(np.max(np.abs(new - rho))) if n else 0.0
        trace.rho.append(new.copy())
        trace.deltas.append(delta)
        trace.orders.append(tuple(s.groups for s in sols))
        rho = new
        if delta < cfg.epsilon:
            trace.converged = True
            return SolveResult(rho=rho, solutions=tuple(sols), trace=trace)
        if cfg.abort_above is not None and np.any(rho > cfg.abort_above):
            raise LoadBoundExceeded(
                f"load exceeded {cfg.abort_above} at sweep {trace.iterations}", trace)
    raise ConvergenceError(
        f"no convergence to {cfg.epsilon} within {cfg.max_iters} sweeps "
        f"(last delta {trace.deltas[-1]:.3e})", trace)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violators: tuple[int, ...]
    limit: float


def check_feasibility(rho_star, limit: float) -> FeasibilityReport:
    """Post-processing: the solved loads are feasible iff every cell is
    at or below the limit (boundary inclusive)."""
    rho_star = np.asarray(rho_star, dtype=float)
    violators = tuple(int(i) for i in np.flatnonzero(rho_star > limit))
    return FeasibilityReport(feasible=not violators, violators=violators, limit=limit)


def objective(rho, kind: str = "sum", weights=None) -> float:
    """Monotone cost of the load vector: ``sum``, ``max``, or ``weighted``."""
    rho = np.asarray(rho, dtype=float)
    if kind == "sum":
        return float(rho.sum())
    if kind == "max":
        return float(rho.max())
    if kind == "weighted":
        if weights is None:
            raise ValueError("weighted objective needs weights")
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        return float(w @ rho)
    raise ValueError(f"unknown objective kind {kind!r}")


@dataclass(frozen=True)
class SifProbeReport:
    """Numerical spot-check of the two SIF properties of the per-cell
    load mapping: monotonicity in the other cells' loads, and strict
    scalability (scaling the argument by a > 1 raises the value by
    strictly less than a, checked on cells with positive demand)."""

    trials: int
    checks: int
    worst_monotonicity_margin: float
    worst_scalability_margin: float
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def sif_probe(net: NetworkModel, policy: GroupingPolicy, trials: int,
              seed: int = 0, rho_scale: float = 1.5) -> SifProbeReport:
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    n = net.n_cells
    worst_mono = np.inf
    worst_scal = np.inf
    failures: list[str] = []
    checks = 0
    for t in range(trials):
        rho = rng.uniform(0.0, rho_scale, n)
        rho_small = rho * rng.uniform(0.0, 0.9, n)
        alpha = 1.0 + max(rng.uniform(0.0, 2.0), 1e-9)
        for i in range(n):
            f = solve_cell(net, i, rho, policy).load
            f_small = solve_cell(net, i, rho_small, policy).load
            f_scaled = solve_cell(net, i, alpha * rho, policy).load
            checks += 1
            mono = f - f_small
            worst_mono = min(worst_mono, mono)
            if mono < 0:
                failures.append(f"trial {t} cell {i}: monotonicity margin {mono:.3e}")
            if net.demand[net.cell_ues(i)].sum() > 0:
                scal = alpha * f - f_scaled
                worst_scal = min(worst_scal, scal)
                if scal <= 0:
                    failures.append(
                        f"trial {t} cell {i}: scalability margin {scal:.3e} at alpha {alpha}")
    return SifProbeReport(
        trials=trials,
        checks=checks,
        worst_monotonicity_margin=worst_mono,
        worst_scalability_margin=worst_scal,
        failures=tuple(failures),
    )
