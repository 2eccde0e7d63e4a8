"""Experiment harness: demand bisection, study drivers, CSV/manifest output.

Every study writes plain CSV plus a ``manifest.json`` listing each
output file with its SHA-256 hash; reruns with the same spec and seed
produce byte-identical files. No plotting here — the CSVs are meant to
be fed to external tools.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._version import __version__
from .fixed_point import (ConvergenceError, LoadBoundExceeded, SolveConfig,
                          check_feasibility, sif_probe, solve)
from .model import capacity
from .rate_region import (min_group_load, recover_power_split, required_power,
                          verify_order_optimality)
from .scenario import ScenarioConfig, generate
from .single_cell import GroupingPolicy, enumerate_partitions, optimal_pairing

__all__ = ["ExperimentSpec", "max_throughput", "run", "KINDS"]

KINDS = (
    "throughput_vs_loadlimit",
    "cell_loads",
    "users_cdf",
    "spectral_vs_edge",
    "convergence_trace",
    "verify",
)


@dataclass
class ExperimentSpec:
    kind: str
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    policy: GroupingPolicy = field(default_factory=GroupingPolicy)
    out_dir: str = "results"
    load_limits: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0)
    demands_bps: tuple[float, ...] = (1.5e6, 0.75e6, 0.15e6)
    ue_counts: tuple[int, ...] = (10, 20, 30, 40, 50)
    edge_percents: tuple[float, ...] = (0.0, 3.33, 6.66, 10.0, 13.33, 16.66, 20.0)
    trials: int = 10
    n_seeds: int = 5
    epsilon: float = 1e-4
    schedule: str = "jacobi"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1 or self.n_seeds < 1:
            raise ValueError("trials and n_seeds must be >= 1")

    @property
    def seeds(self) -> list[int]:
        return [self.scenario.seed + k for k in range(self.n_seeds)]


def max_throughput(net, scn: ScenarioConfig, policy: GroupingPolicy,
                   load_limit: float | None = None,
                   epsilon: float = 1e-4, schedule: str = "jacobi",
                   rtol: float = 1e-4, d0_bps: float = 1e6) -> float:
    """Largest supported uniform per-UE demand, as per-cell throughput in
    bits/s, found by bisection on the demand level.

    A demand is supported iff the fixed point exists and stays within
    the load limit in every cell; probes start from zero load and abort
    as soon as any iterate crosses the limit.
    """
    if load_limit is None:
        load_limit = net.load_limit
    counts = np.bincount(net.ue_home, minlength=net.n_cells)
    if not np.all(counts == counts[0]):
        raise ValueError("uniform demand mode needs the same UE count in every cell")
    per_cell = int(counts[0])

    def feasible(d_bps: float) -> bool:
        if d_bps == 0.0:
            return True
        cfg = SolveConfig(schedule=schedule, epsilon=epsilon, abort_above=load_limit)
        try:
            res = solve(net.with_demand(scn.bps_to_nats(d_bps)), policy, cfg)
        except (LoadBoundExceeded, ConvergenceError):
            return False
        return check_feasibility(res.rho, load_limit).feasible

    lo, hi = 0.0, d0_bps
    while feasible(hi):
        lo = hi
        hi = 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return per_cell * lo


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _spec_doc(spec: ExperimentSpec) -> dict:
    doc = asdict(spec)
    doc["policy"] = {k: v for k, v in doc["policy"].items() if k != "fixed_groups"}
    doc["policy"]["fixed_groups"] = (
        None if spec.policy.fixed_groups is None
        else {str(c): [list(g) for g in gs] for c, gs in spec.policy.fixed_groups.items()})
    return doc


def _finish(spec: ExperimentSpec, out: Path, files: list[Path], extra: dict | None = None) -> dict:
    manifest = {
        "version": __version__,
        "spec": _spec_doc(spec),
        "files": {p.name: _sha256(p) for p in sorted(files)},
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2))
    return manifest


def _series(spec: ExperimentSpec) -> list[tuple[str, GroupingPolicy]]:
    base = [("oma", GroupingPolicy(mode="oma", max_group_size=1))]
    if spec.policy.mode != "oma":
        base.append((spec.policy.mode, spec.policy))
    return base


def _aggregate(rows, key_idx, val_idx):
    """mean/min/max of rows grouped by the key columns (kept in order)."""
    groups: dict[tuple, list[float]] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(row[i] for i in key_idx)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(float(row[val_idx]))
    out = []
    for key in order:
        vals = groups[key]
        out.append((*key, sum(vals) / len(vals), min(vals), max(vals)))
    return out


# ---------------------------------------------------------------------------
# experiment kinds

def _run_throughput(spec: ExperimentSpec, out: Path) -> dict:
    rows = []
    for seed in spec.seeds:
        scn = replace(spec.scenario, seed=seed)
        net = generate(scn)
        for limit in spec.load_limits:
            for name, pol in _series(spec):
                thr = max_throughput(net, scn, pol, limit,
                                     epsilon=spec.epsilon, schedule=spec.schedule)
                rows.append((limit, name, seed, thr / 1e6))
    raw = out / "throughput_raw.csv"
    agg = out / "throughput_agg.csv"
    _write_csv(raw, ["load_limit", "policy", "seed", "mbps"], rows)
    _write_csv(agg, ["load_limit", "policy", "mean_mbps", "min_mbps", "max_mbps"],
               _aggregate(rows, (0, 1), 3))
    return _finish(spec, out, [raw, agg])


def _run_cell_loads(spec: ExperimentSpec, out: Path) -> dict:
    scn = spec.scenario
    net = generate(scn)
    oma = GroupingPolicy(mode="oma", max_group_size=1)
    thr = max_throughput(net, scn, oma, scn.load_limit,
                         epsilon=spec.epsilon, schedule=spec.schedule)
    per_ue = thr / spec.scenario.ues_per_cell
    net_d = net.with_demand(scn.bps_to_nats(per_ue))
    cfg = SolveConfig(schedule=spec.schedule, epsilon=spec.epsilon)
    rho_oma = solve(net_d, oma, cfg).rho
    rho_noma = solve(net_d, spec.policy, cfg).rho
    order = np.argsort(rho_oma)
    rows = [(rank, int(c), rho_oma[c], rho_noma[c])
            for rank, c in enumerate(order)]
    path = out / "cell_loads.csv"
    _write_csv(path, ["rank", "cell", "oma_load", "noma_load"], rows)
    return _finish(spec, out, [path],
                   extra={"oma_max_throughput_mbps": thr / 1e6})


def _feasible_at(scn: ScenarioConfig, policy: GroupingPolicy,
                 epsilon: float, schedule: str) -> bool:
    net = generate(scn)
    cfg = SolveConfig(schedule=schedule, epsilon=epsilon, abort_above=scn.load_limit)
    try:
        res = solve(net, policy, cfg)
    except (LoadBoundExceeded, ConvergenceError):
        return False
    return check_feasibility(res.rho, scn.load_limit).feasible


def _run_users_cdf(spec: ExperimentSpec, out: Path) -> dict:
    rows = []
    for demand in spec.demands_bps:
        for n_ue in spec.ue_counts:
            for name, pol in _series(spec):
                ok = 0
                for t in range(spec.trials):
                    scn = replace(spec.scenario, demand_bps=demand,
                                  ues_per_cell=n_ue, seed=spec.scenario.seed + t)
                    ok += _feasible_at(scn, pol, spec.epsilon, spec.schedule)
                rows.append((demand, n_ue, name, spec.trials, ok, ok / spec.trials))
    path = out / "users_cdf.csv"
    _write_csv(path, ["demand_bps", "ues_per_cell", "policy", "trials",
                      "successes", "support_probability"], rows)
    return _finish(spec, out, [path])


def _run_spectral(spec: ExperimentSpec, out: Path) -> dict:
    rows = []
    for seed in spec.seeds:
        for pct in spec.edge_percents:
            scn = replace(spec.scenario, seed=seed, edge_fraction=pct / 100.0)
            net = generate(scn)
            for name, pol in _series(spec):
                thr = max_throughput(net, scn, pol, scn.load_limit,
                                     epsilon=spec.epsilon, schedule=spec.schedule)
                rows.append((pct, name, seed, thr / scn.total_bw_hz))
    raw = out / "spectral_raw.csv"
    agg = out / "spectral_agg.csv"
    _write_csv(raw, ["edge_percent", "policy", "seed", "bps_per_hz"], rows)
    _write_csv(agg, ["edge_percent", "policy", "mean_bps_per_hz",
                     "min_bps_per_hz", "max_bps_per_hz"],
               _aggregate(rows, (0, 1), 3))
    return _finish(spec, out, [raw, agg])


def _run_convergence(spec: ExperimentSpec, out: Path) -> dict:
    rows = []
    eps = min(spec.epsilon, 1e-8)
    for demand in spec.demands_bps:
        for seed in spec.seeds:
            scn = replace(spec.scenario, demand_bps=demand, seed=seed)
            net = generate(scn)
            res = solve(net, spec.policy, SolveConfig(schedule=spec.schedule, epsilon=eps))
            for k, delta in enumerate(res.trace.deltas, start=1):
                rows.append((demand, seed, k, delta))
    path = out / "convergence.csv"
    _write_csv(path, ["demand_bps", "seed", "iteration", "delta_sup_norm"], rows)
    return _finish(spec, out, [path])


# ---------------------------------------------------------------------------
# verify battery (compact re-runnable property suites)

def _verify_battery(seed: int = 1) -> dict:
    rng = np.random.default_rng(seed)
    report: dict[str, dict] = {}

    bad = 0
    n = 200
    for _ in range(n):
        k = int(rng.integers(2, 6))
        w = rng.uniform(0.01, 10.0, k)
        c = rng.uniform(0.0, 3.0, k)
        if not verify_order_optimality(w, c).ok:
            bad += 1
    report["order_optimality"] = {"checks": n, "failures": bad}

    worst = 0.0
    n = 2000
    for _ in range(n):
        k = int(rng.integers(1, 7))
        w = rng.uniform(0.01, 10.0, k)
        c = rng.uniform(0.0, 3.0, k)
        q = recover_power_split(w, c)
        order = tuple(range(k))
        back = np.array([capacity(q, w[j], order, j) for j in range(k)])
        err = np.max(np.abs(back - c) / np.maximum(np.abs(c), 1e-30))
        worst = max(worst, float(err) if np.any(c > 0) else 0.0)
    report["power_rate_round_trip"] = {"checks": n, "worst_rel_err": worst,
                                       "failures": int(worst > 1e-10)}

    bad = 0
    n = 50
    for _ in range(n):
        m = int(rng.integers(2, 8))
        ids = list(range(m))
        singles = {u: float(rng.uniform(0.1, 2.0)) for u in ids}
        pair_loads = {}
        for h, j in itertools.combinations(ids, 2):
            pair_loads[h, j] = float(rng.uniform(0.5, 1.5) * (singles[h] + singles[j]))
        part = optimal_pairing(singles, pair_loads)

        def total(partition):
            blocks = sorted((tuple(sorted(b)) for b in partition), key=min)
            return float(np.array([
                singles[b[0]] if len(b) == 1 else pair_loads[b] for b in blocks
            ]).sum())

        best = min(total(p) for p in enumerate_partitions(ids, 2))
        if total(part) != best:
            bad += 1
    report["matching_exactness"] = {"checks": n, "failures": bad}

    scn = ScenarioConfig(n_rings=1, ues_per_cell=3, demand_bps=4e5, seed=seed)
    probe = sif_probe(generate(scn), GroupingPolicy(), trials=20, seed=seed)
    report["sif_probe"] = {
        "checks": probe.checks,
        "worst_monotonicity_margin": probe.worst_monotonicity_margin,
        "worst_scalability_margin": probe.worst_scalability_margin,
        "failures": len(probe.failures),
    }

    bad = 0
    n = 5
    for t in range(n):
        scn = ScenarioConfig(n_rings=1, ues_per_cell=2, demand_bps=5e5, seed=seed + t)
        net = generate(scn)
        pol = GroupingPolicy()
        r0 = solve(net, pol, SolveConfig(epsilon=1e-8)).rho
        r1 = solve(net, pol, SolveConfig(epsilon=1e-8, rho0=1.0)).rho
        rg = solve(net, pol, SolveConfig(epsilon=1e-8, schedule="gauss_seidel")).rho
        if np.max(np.abs(r0 - r1)) > 1e-6 or np.max(np.abs(r0 - rg)) > 1e-7:
            bad += 1
    report["fixed_point_uniqueness"] = {"checks": n, "failures": bad}

    report["ok"] = all(v["failures"] == 0 for v in report.values() if isinstance(v, dict))
    return report


def _run_verify(spec: ExperimentSpec, out: Path) -> dict:
    report = _verify_battery(spec.scenario.seed)
    path = out / "verify.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2))
    for name, res in report.items():
        if isinstance(res, dict):
            status = "PASS" if res["failures"] == 0 else "FAIL"
            print(f"[{status}] {name}: {res}")
    return _finish(spec, out, [path], extra={"ok": report["ok"]})


_RUNNERS = {
    "throughput_vs_loadlimit": _run_throughput,
    "cell_loads": _run_cell_loads,
    "users_cdf": _run_users_cdf,
    "spectral_vs_edge": _run_spectral,
    "convergence_trace": _run_convergence,
    "verify": _run_verify,
}


def run(spec: ExperimentSpec) -> dict:
    """Execute one experiment; returns the manifest (also written to
    ``out_dir/manifest.json``)."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[spec.kind](spec, out)
