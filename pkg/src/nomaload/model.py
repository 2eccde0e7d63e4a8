"""Network data model and elementary downlink physical-layer formulas.

Conventions used throughout the package:

* all powers are linear milliwatts, all rates are nats per resource unit
  (RU); dB/dBm/bits appear only at I/O boundaries,
* a cell-load vector is a plain 1-D numpy array ``rho`` with one
  nonnegative entry per cell (the fraction of the cell's RUs in use; it
  may exceed 1 before feasibility post-processing),
* effective noise ``w`` is a 1-D array with one entry per UE,
* a *group* is a tuple of UE ids from one cell; the tuple order is the
  SIC decoding order, strongest (lowest ``w``) first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "NetworkModel",
    "CellSolution",
    "effective_noise",
    "effective_noise_all",
    "decoding_order",
    "capacity",
]


@dataclass(frozen=True)
class NetworkModel:
    """Immutable downlink network snapshot.

    Attributes
    ----------
    n_cells : int
        Number of cells.
    ue_home : ndarray of int, shape (n_ues,)
        Home-cell index of each UE.
    gain : ndarray, shape (n_cells, n_ues)
        Linear power gain from each cell's transmitter to each UE.
    p_ru : ndarray, shape (n_cells,)
        Per-RU transmit power of each cell (mW).
    sigma2 : float
        Noise power per RU (mW).
    demand : ndarray, shape (n_ues,)
        Per-UE demand in nats, pre-normalized by the total bandwidth
        (number of RUs times per-RU bandwidth).
    load_limit : float
        Cell load limit in (0, 1], used only in feasibility
        post-processing.
    """

    n_cells: int
    ue_home: np.ndarray
    gain: np.ndarray
    p_ru: np.ndarray
    sigma2: float
    demand: np.ndarray
    load_limit: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ue_home", np.asarray(self.ue_home, dtype=np.int64))
        object.__setattr__(self, "gain", np.asarray(self.gain, dtype=float))
        object.__setattr__(self, "p_ru", np.asarray(self.p_ru, dtype=float))
        object.__setattr__(self, "demand", np.asarray(self.demand, dtype=float))
        if self.gain.shape != (self.n_cells, self.n_ues):
            raise ValueError(f"gain must have shape ({self.n_cells}, {self.n_ues})")
        if self.p_ru.shape != (self.n_cells,):
            raise ValueError("p_ru must have one entry per cell")
        if self.demand.shape != (self.n_ues,):
            raise ValueError("demand must have one entry per UE")
        if not np.all(self.gain > 0) or not np.all(np.isfinite(self.gain)):
            raise ValueError("all gains must be positive and finite")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not np.all(self.p_ru > 0):
            raise ValueError("per-RU powers must be positive")
        if np.any(self.demand < 0):
            raise ValueError("demands must be nonnegative")
        if np.any(self.ue_home < 0) or np.any(self.ue_home >= self.n_cells):
            raise ValueError("ue_home indices out of range")
        if not 0 < self.load_limit <= 1:
            raise ValueError("load_limit must lie in (0, 1]")
        for a in (self.ue_home, self.gain, self.p_ru, self.demand):
            a.setflags(write=False)

    @property
    def n_ues(self) -> int:
        return self.ue_home.shape[0]

    def cell_ues(self, cell: int) -> np.ndarray:
        """UE indices homed in ``cell``."""
        return np.flatnonzero(self.ue_home == cell)

    def with_demand(self, demand) -> "NetworkModel":
        """Copy of the model with the demand vector replaced.

        A scalar is broadcast to all UEs.
        """
        d = np.broadcast_to(np.asarray(demand, dtype=float), (self.n_ues,)).copy()
        return replace(self, demand=d)

    # -- JSON round trip ------------------------------------------------

    def to_dict(self, gain_unit: str = "linear") -> dict:
        if gain_unit not in ("linear", "db"):
            raise ValueError("gain_unit must be 'linear' or 'db'")
        g = self.gain if gain_unit == "linear" else 10.0 * np.log10(self.gain)
        return {
            "n_cells": self.n_cells,
            "ue_home": self.ue_home.tolist(),
            "gain": g.tolist(),
            "gain_unit": gain_unit,
            "p_ru": self.p_ru.tolist(),
            "sigma2": self.sigma2,
            "demand": self.demand.tolist(),
            "load_limit": self.load_limit,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "NetworkModel":
        gain = np.asarray(doc["gain"], dtype=float)
        if doc.get("gain_unit", "linear") == "db":
            gain = 10.0 ** (gain / 10.0)
        return cls(
            n_cells=int(doc["n_cells"]),
            ue_home=np.asarray(doc["ue_home"]),
            gain=gain,
            p_ru=np.asarray(doc["p_ru"]),
            sigma2=float(doc["sigma2"]),
            demand=np.asarray(doc["demand"]),
            load_limit=float(doc.get("load_limit", 1.0)),
        )

    def to_json(self, path: str | Path | None = None, gain_unit: str = "linear") -> str:
        text = json.dumps(self.to_dict(gain_unit), sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "NetworkModel":
        p = Path(source)
        text = p.read_text() if p.exists() else str(source)
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CellSolution:
    """Resource allocation of one cell at fixed interference.

    ``groups`` partition the cell's UEs; every group tuple is in decoding
    order (strongest first). ``x[k]`` is the RU fraction of group k,
    ``q[k]`` the per-member power split (mW, aligned with the group
    tuple), and ``load`` equals ``sum(x)``.
    """

    cell: int
    groups: tuple[tuple[int, ...], ...]
    x: tuple[float, ...]
    q: tuple[tuple[float, ...], ...]
    load: float

    def to_dict(self) -> dict:
        return {
            "cell": self.cell,
            "groups": [list(g) for g in self.groups],
            "x": list(self.x),
            "q": [list(qs) for qs in self.q],
            "load": self.load,
        }


def effective_noise(net: NetworkModel, rho, ue: int) -> float:
    """Inter-cell interference plus noise at ``ue``, over its own gain.

    Computes ``(sum_{k != home} p_k g_{k,ue} rho_k + sigma2) / g_{home,ue}``.
    Nonnegative loads give a strictly positive result that is
    non-decreasing in every load component.
    """
    rho = np.asarray(rho, dtype=float)
    home = int(net.ue_home[ue])
    pr = net.p_ru * rho
    inter = float(pr @ net.gain[:, ue]) - pr[home] * net.gain[home, ue]
    return (inter + net.sigma2) / net.gain[home, ue]


def effective_noise_all(net: NetworkModel, rho) -> np.ndarray:
    """Vector of :func:`effective_noise` over all UEs."""
    rho = np.asarray(rho, dtype=float)
    pr = net.p_ru * rho
    total = pr @ net.gain
    idx = np.arange(net.n_ues)
    g_home = net.gain[net.ue_home, idx]
    return (total - pr[net.ue_home] * g_home + net.sigma2) / g_home


def decoding_order(w, members: Sequence[int]) -> tuple[int, ...]:
    """Sort ``members`` into SIC decoding order: ascending effective
    noise, ties broken by ascending UE id.

    ``w`` may be any structure indexable by UE id (dict or array). The
    result is a deterministic total order; permuting the input does not
    change it.
    """
    if len(members) == 0:
        raise ValueError("a group needs at least one member")
    return tuple(sorted(members, key=lambda j: (w[j], j)))


def capacity(q: Sequence[float], w_j: float, group: Sequence[int], j: int) -> float:
    """Per-RU capacity (nats) of UE ``j`` within ``group``.

    ``q`` is the power split aligned with the group order. Members
    earlier in the group (stronger) are interference at ``j``; later
    members are cancelled by SIC.
    """
    pos = list(group).index(j)
    intra = float(np.sum(np.asarray(q, dtype=float)[:pos]))
    return math.log1p(q[pos] / (intra + w_j))
