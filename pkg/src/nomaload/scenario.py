"""Reproducible cellular scenario generation.

Builds hexagonal multi-cell networks with wrap-around (distances are
taken as the minimum over the cluster's seven mirror displacements, so
every cell sees the same interference geometry), COST-231-Hata path
loss, log-normal shadowing and flat Rayleigh fading drawn once per
(cell, UE) link. Demands are given in bits/s and stored pre-normalized
in nats; all randomness flows from the single config seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .model import NetworkModel

__all__ = [
    "ScenarioConfig",
    "generate",
    "cost231_hata_pl_db",
    "write_network_json",
]

_SQRT3 = math.sqrt(3.0)


def cost231_hata_pl_db(d_km, f_mhz: float, hb_m: float = 30.0, hm_m: float = 1.5):
    """COST-231-Hata path loss in dB (urban, medium-city correction).

    Distances are clamped below at 20 m, where the empirical model
    leaves its validity range. Accepts scalar or array distances.
    """
    d = np.maximum(np.asarray(d_km, dtype=float), 0.02)
    lf = math.log10(f_mhz)
    a_hm = (1.1 * lf - 0.7) * hm_m - (1.56 * lf - 0.8)
    pl = (46.3 + 33.9 * lf - 13.82 * math.log10(hb_m) - a_hm
          + (44.9 - 6.55 * math.log10(hb_m)) * np.log10(d))
    return pl if pl.ndim else float(pl)


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario knobs; defaults follow the reference simulation setup
    (19 cells, 500 m radius, 2 GHz, 20 MHz split into 100 RUs of
    200 kHz, 800 mW per RU, -173 dBm/Hz noise, 6 dB shadowing).

    ``edge_fraction`` controls cell-edge placement: ``None`` places UEs
    uniformly in the cell hexagon; a number forces that share of each
    cell's UEs beyond 80% of the cell radius and the rest strictly
    inside it.
    """

    n_rings: int = 2
    cell_radius_m: float = 500.0
    carrier_ghz: float = 2.0
    total_bw_hz: float = 2.0e7
    n_ru: int = 100
    ru_bw_hz: float | None = None
    ru_power_mw: float = 800.0
    noise_psd_dbm_hz: float = -173.0
    shadowing_sigma_db: float = 6.0
    rayleigh_fading: bool = True
    ues_per_cell: int = 30
    demand_bps: float = 1.5e6
    seed: int = 1
    edge_fraction: float | None = None
    load_limit: float = 1.0
    bs_height_m: float = 30.0
    ue_height_m: float = 1.5

    def __post_init__(self):
        if self.n_rings < 0:
            raise ValueError("n_rings must be >= 0")
        for name in ("cell_radius_m", "carrier_ghz", "total_bw_hz", "ru_power_mw",
                     "bs_height_m", "ue_height_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_ru < 1:
            raise ValueError("n_ru must be >= 1")
        if self.ues_per_cell < 0 or self.demand_bps < 0:
            raise ValueError("ues_per_cell and demand_bps must be nonnegative")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be nonnegative")
        if self.edge_fraction is not None and not 0.0 <= self.edge_fraction <= 1.0:
            raise ValueError("edge_fraction must lie in [0, 1]")
        if not 0 < self.load_limit <= 1:
            raise ValueError("load_limit must lie in (0, 1]")
        if self.ru_bw_hz is not None:
            if abs(self.ru_bw_hz * self.n_ru - self.total_bw_hz) > 1e-6 * self.total_bw_hz:
                raise ValueError("ru_bw_hz * n_ru must equal total_bw_hz")

    @property
    def n_cells(self) -> int:
        r = self.n_rings
        return 1 + 3 * r * (r + 1)

    @property
    def ru_bandwidth_hz(self) -> float:
        return self.ru_bw_hz if self.ru_bw_hz is not None else self.total_bw_hz / self.n_ru

    @property
    def sigma2_mw(self) -> float:
        return 10.0 ** (self.noise_psd_dbm_hz / 10.0) * self.ru_bandwidth_hz

    def bps_to_nats(self, bps) -> float | np.ndarray:
        """Demand in bits/s to internal nats, normalized by the total
        bandwidth (RU count times per-RU bandwidth)."""
        return np.asarray(bps, dtype=float) * math.log(2.0) / (self.n_ru * self.ru_bandwidth_hz)

    def nats_to_bps(self, nats) -> float | np.ndarray:
        return np.asarray(nats, dtype=float) * (self.n_ru * self.ru_bandwidth_hz) / math.log(2.0)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "ScenarioConfig":
        p = Path(source)
        text = p.read_text() if p.exists() else str(source)
        return cls(**json.loads(text))


def _hex_centers(n_rings: int, isd: float) -> np.ndarray:
    """Hexagonal lattice points covering ``n_rings`` rings around origin."""
    a1 = isd * np.array([1.0, 0.0])
    a2 = isd * np.array([0.5, _SQRT3 / 2.0])
    coords = [
        (q, r)
        for q in range(-n_rings, n_rings + 1)
        for r in range(-n_rings, n_rings + 1)
        if abs(q + r) <= n_rings
    ]
    coords.sort(key=lambda qr: (max(abs(qr[0]), abs(qr[1]), abs(qr[0] + qr[1])), qr))
    return np.array([q * a1 + r * a2 for q, r in coords])


def _wrap_displacements(n_rings: int, isd: float) -> np.ndarray:
    """Zero plus the six cluster translations that tile the plane with
    copies of the layout (cluster shift (n_rings+1, n_rings))."""
    a1 = isd * np.array([1.0, 0.0])
    a2 = isd * np.array([0.5, _SQRT3 / 2.0])
    t1 = (n_rings + 1) * a1 + n_rings * a2
    disp = [np.zeros(2)]
    for k in range(6):
        ang = k * math.pi / 3.0
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        disp.append(rot @ t1)
    return np.array(disp)


def _in_hexagon(x: float, y: float, radius: float) -> bool:
    # pointy-top hexagon, circumradius = cell radius
    return abs(x) <= _SQRT3 / 2.0 * radius and abs(y) <= radius - abs(x) / _SQRT3


def _sample_offset(rng: np.random.Generator, radius: float,
                   r_min: float = 0.0, r_max: float = math.inf) -> np.ndarray:
    while True:
        x = rng.uniform(-_SQRT3 / 2.0 * radius, _SQRT3 / 2.0 * radius)
        y = rng.uniform(-radius, radius)
        if not _in_hexagon(x, y, radius):
            continue
        r = math.hypot(x, y)
        if r_min <= r < r_max:
            return np.array([x, y])


def wrapped_distances(points: np.ndarray, anchors: np.ndarray,
                      displacements: np.ndarray) -> np.ndarray:
    """(n_anchors, n_points) distances, minimum over mirror images."""
    diff = points[None, None, :, :] - (anchors[None, :, None, :] + displacements[:, None, None, :])
    return np.sqrt((diff ** 2).sum(axis=-1)).min(axis=0)


def generate(cfg: ScenarioConfig) -> NetworkModel:
    """Draw a network snapshot; identical seeds give identical models."""
    rng = np.random.default_rng(cfg.seed)
    radius = cfg.cell_radius_m
    isd = _SQRT3 * radius
    bs = _hex_centers(cfg.n_rings, isd)
    disp = _wrap_displacements(cfg.n_rings, isd)
    n_cells = cfg.n_cells
    n_ues = n_cells * cfg.ues_per_cell

    ue_pos = np.empty((n_ues, 2))
    ue_home = np.repeat(np.arange(n_cells), cfg.ues_per_cell)
    edge_per_cell = (0 if cfg.edge_fraction is None
                     else int(round(cfg.edge_fraction * cfg.ues_per_cell)))
    k = 0
    for c in range(n_cells):
        for u in range(cfg.ues_per_cell):
            if cfg.edge_fraction is None:
                off = _sample_offset(rng, radius)
            elif u < edge_per_cell:
                off = _sample_offset(rng, radius, r_min=0.8 * radius)
            else:
                off = _sample_offset(rng, radius, r_max=0.8 * radius)
            ue_pos[k] = bs[c] + off
            k += 1

    dist_m = wrapped_distances(ue_pos, bs, disp)
    pl_db = cost231_hata_pl_db(dist_m / 1000.0, f_mhz=cfg.carrier_ghz * 1000.0,
                               hb_m=cfg.bs_height_m, hm_m=cfg.ue_height_m)
    gain_db = -pl_db + rng.normal(0.0, cfg.shadowing_sigma_db, size=pl_db.shape)
    if cfg.rayleigh_fading:
        fade = np.maximum(rng.exponential(1.0, size=pl_db.shape), 1e-15)
        gain_db = gain_db + 10.0 * np.log10(fade)
    gain = 10.0 ** (gain_db / 10.0)

    demand = np.full(n_ues, float(cfg.bps_to_nats(cfg.demand_bps)))
    return NetworkModel(
        n_cells=n_cells,
        ue_home=ue_home,
        gain=gain,
        p_ru=np.full(n_cells, cfg.ru_power_mw),
        sigma2=cfg.sigma2_mw,
        demand=demand,
        load_limit=cfg.load_limit,
    )


def write_network_json(net: NetworkModel, cfg: ScenarioConfig,
                       path: str | Path, gain_unit: str = "linear") -> dict:
    """Emit the network plus a provenance header (config echo, seed,
    generator version)."""
    doc = {
        "generator": {"package": "nomaload", "version": __version__,
                      "seed": cfg.seed, "config": cfg.to_dict()},
        "network": net.to_dict(gain_unit),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))
    return doc
