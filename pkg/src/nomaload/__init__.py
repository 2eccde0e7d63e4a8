"""Multi-cell NOMA load-coupling optimization.

Per-cell minimum-load solving with interference-dependent SIC decoding
order, composed into a provably convergent fixed-point iteration, plus
a reproducible scenario generator and an experiment harness for
OMA-vs-NOMA comparisons.
"""

from ._version import __version__
from .fixed_point import (ConvergenceError, FeasibilityReport, IterationTrace,
                          LoadBoundExceeded, SifProbeReport, SolveConfig,
                          SolveResult, check_feasibility, objective, sif_probe,
                          solve)
from .model import (CellSolution, NetworkModel, capacity, decoding_order,
                    effective_noise, effective_noise_all)
from .rate_region import (EXP_CAP, OrderAudit, min_group_load, recover_power_split,
                          required_power, verify_order_optimality)
from .scenario import ScenarioConfig, cost231_hata_pl_db, generate, write_network_json
from .single_cell import (GroupingPolicy, enumerate_partitions, optimal_pairing,
                          solve_cell)
from .experiments import ExperimentSpec, max_throughput, run

__all__ = [
    "__version__",
    "NetworkModel", "CellSolution",
    "effective_noise", "effective_noise_all", "decoding_order", "capacity",
    "EXP_CAP", "required_power", "recover_power_split", "OrderAudit",
    "verify_order_optimality", "min_group_load",
    "GroupingPolicy", "solve_cell", "optimal_pairing", "enumerate_partitions",
    "SolveConfig", "SolveResult", "IterationTrace", "ConvergenceError",
    "LoadBoundExceeded", "solve", "check_feasibility", "FeasibilityReport",
    "objective", "sif_probe", "SifProbeReport",
    "ScenarioConfig", "generate", "cost231_hata_pl_db", "write_network_json",
    "ExperimentSpec", "max_throughput", "run",
]
