"""Topology generation: macro grid, small-cell clusters, users, backhaul graph.

All placement is in meters on a rectangular area with the origin in one
corner.  Access points are indexed macro cells first, then small cells, and
that ordering is shared with every matrix in the radio and model layers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .scenario import Deployment

MC_HEIGHT_M = 25.0
SC_HEIGHT_M = 10.0
UE_HEIGHT_M = 1.5

DEFAULT_AREA_M = (600.0, 600.0)
DEFAULT_MC_ISD_M = 200.0
DEFAULT_SC_COUNT_LAW = (3, 10)
SC_MIN_SEPARATION_M = 20.0
WIRELESS_BREAKPOINT_M = 25.0
MC_HOP_LAW = (1, 4)
PER_HOP_DELAY_MS = 1.0
SC_WIRED_CAPACITY_BPS = 1e9
MC_CORE_CAPACITY_BPS = 10e9

SERVICE_EMBB = 0
SERVICE_MMTC = 1


class AreaTooSmall(ValueError):
    """The requested area cannot host a single macro cell."""


class ResampleLimit(RuntimeError):
    """Small-cell minimum separation could not be met within the redraw budget."""


@dataclass(frozen=True)
class Topology:
    """Immutable AP/user placement plus the backhaul graph.

    ``mc_hops`` counts wired hops from each macro cell to the core; a small
    cell adds one hop (wired or wireless) through its parent macro.
    """

    area: tuple[float, float]
    mc_xy: np.ndarray          # (M, 2)
    mc_hops: np.ndarray        # (M,) int
    sc_xy: np.ndarray          # (N, 2)
    sc_parent: np.ndarray      # (N,) int, index into mc_xy
    sc_wireless: np.ndarray    # (N,) bool backhaul kind
    user_xy: np.ndarray        # (U, 2) eMBB then mMTC
    user_service: np.ndarray   # (U,) int, SERVICE_EMBB / SERVICE_MMTC
    mmtc_home_mc: np.ndarray   # (U,) int, generating MC cell (-1 for eMBB)
    mc_height_m: float = MC_HEIGHT_M
    sc_height_m: float = SC_HEIGHT_M
    ue_height_m: float = UE_HEIGHT_M
    per_hop_delay_ms: float = PER_HOP_DELAY_MS
    sc_wired_capacity_bps: float = SC_WIRED_CAPACITY_BPS
    mc_core_capacity_bps: float = MC_CORE_CAPACITY_BPS

    @property
    def n_mc(self) -> int:
        return len(self.mc_xy)

    @property
    def n_sc(self) -> int:
        return len(self.sc_xy)

    @property
    def n_aps(self) -> int:
        return self.n_mc + self.n_sc

    @property
    def ap_xy(self) -> np.ndarray:
        return np.vstack([self.mc_xy, self.sc_xy]) if self.n_sc else self.mc_xy

    @property
    def ap_is_mc(self) -> np.ndarray:
        return np.arange(self.n_aps) < self.n_mc

    @property
    def ap_height_m(self) -> np.ndarray:
        return np.where(self.ap_is_mc, self.mc_height_m, self.sc_height_m)

    @property
    def ap_hops(self) -> np.ndarray:
        return np.concatenate([self.mc_hops, self.mc_hops[self.sc_parent] + 1]) \
            if self.n_sc else self.mc_hops

    @property
    def embb_xy(self) -> np.ndarray:
        return self.user_xy[self.user_service == SERVICE_EMBB]

    @property
    def n_embb(self) -> int:
        return int(np.count_nonzero(self.user_service == SERVICE_EMBB))

    @property
    def n_mmtc(self) -> int:
        return int(np.count_nonzero(self.user_service == SERVICE_MMTC))

    def path_latency_ms(self, ap_index: int) -> float:
        """Core-to-AP path delay; the final radio hop is not part of the path."""
        return float(self.ap_hops[ap_index]) * self.per_hop_delay_ms

    @property
    def ap_path_latency_ms(self) -> np.ndarray:
        return self.ap_hops.astype(float) * self.per_hop_delay_ms

    def sc_parent_distance(self) -> np.ndarray:
        if self.n_sc == 0:
            return np.zeros(0)
        return np.linalg.norm(self.sc_xy - self.mc_xy[self.sc_parent], axis=1)

    def to_json(self) -> str:
        payload = {
            "area": list(self.area),
            "mc_xy": self.mc_xy.tolist(),
            "mc_hops": self.mc_hops.tolist(),
            "sc_xy": self.sc_xy.tolist(),
            "sc_parent": self.sc_parent.tolist(),
            "sc_wireless": self.sc_wireless.astype(int).tolist(),
            "user_xy": self.user_xy.tolist(),
            "user_service": self.user_service.tolist(),
            "mmtc_home_mc": self.mmtc_home_mc.tolist(),
            "mc_height_m": self.mc_height_m,
            "sc_height_m": self.sc_height_m,
            "ue_height_m": self.ue_height_m,
            "per_hop_delay_ms": self.per_hop_delay_ms,
            "sc_wired_capacity_bps": self.sc_wired_capacity_bps,
            "mc_core_capacity_bps": self.mc_core_capacity_bps,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        p = json.loads(text)
        return cls(
            area=tuple(p["area"]),
            mc_xy=np.asarray(p["mc_xy"], dtype=float).reshape(-1, 2),
            mc_hops=np.asarray(p["mc_hops"], dtype=int),
            sc_xy=np.asarray(p["sc_xy"], dtype=float).reshape(-1, 2),
            sc_parent=np.asarray(p["sc_parent"], dtype=int),
            sc_wireless=np.asarray(p["sc_wireless"], dtype=bool),
            user_xy=np.asarray(p["user_xy"], dtype=float).reshape(-1, 2),
            user_service=np.asarray(p["user_service"], dtype=int),
            mmtc_home_mc=np.asarray(p["mmtc_home_mc"], dtype=int),
            mc_height_m=p["mc_height_m"],
            sc_height_m=p["sc_height_m"],
            ue_height_m=p["ue_height_m"],
            per_hop_delay_ms=p["per_hop_delay_ms"],
            sc_wired_capacity_bps=p["sc_wired_capacity_bps"],
            mc_core_capacity_bps=p["mc_core_capacity_bps"],
        )


def generate_macro_grid(area: Sequence[float], isd: float = DEFAULT_MC_ISD_M) -> np.ndarray:
    """Regular macro grid: rows/columns spaced ``isd``, offset ``isd/2`` from the edge.

    Deterministic.  Raises :class:`AreaTooSmall` when no macro cell fits.
    """
    width, height = float(area[0]), float(area[1])
    nx, ny = int(width // isd), int(height // isd)
    if nx < 1 or ny < 1:
        raise AreaTooSmall(f"area {width}x{height} m cannot host a macro cell at ISD {isd} m")
    xs = isd / 2 + isd * np.arange(nx)
    ys = isd / 2 + isd * np.arange(ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def generate_small_cells(
    mc_xy: Sequence[float],
    geometry: Deployment,
    rng: np.random.Generator,
    *,
    count_law: tuple[int, int] = DEFAULT_SC_COUNT_LAW,
    radius_m: float = DEFAULT_MC_ISD_M / 2,
    square_edge_m: float = DEFAULT_MC_ISD_M,
    min_separation_m: float = SC_MIN_SEPARATION_M,
    max_redraws: int = 10_000,
) -> np.ndarray:
    """Drop one macro cell's SC cluster as a homogeneous Poisson process.

    The cluster size is drawn first from ``count_law`` (inclusive discrete
    uniform), then the whole cluster is redrawn until the pairwise minimum
    separation holds; per-point retries would bias the point process.
    """
    mc = np.asarray(mc_xy, dtype=float)
    count = int(rng.integers(count_law[0], count_law[1] + 1))
    if count == 0:
        return np.zeros((0, 2))
    for _ in range(max_redraws):
        if geometry is Deployment.CIRCULAR:
            r = radius_m * np.sqrt(rng.random(count))
            theta = 2 * np.pi * rng.random(count)
            pts = mc + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        else:
            pts = mc + square_edge_m * (rng.random((count, 2)) - 0.5)
        if count == 1:
            return pts
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        if dist.min() >= min_separation_m:
            return pts
    raise ResampleLimit(
        f"no {count}-point cluster with {min_separation_m} m separation found "
        f"in {max_redraws} redraws")


def generate_users(
    area: Sequence[float],
    n_embb: int,
    mmtc_per_mc: int,
    rng_embb: np.random.Generator,
    rng_mmtc: np.random.Generator | None = None,
    *,
    mc_xy: np.ndarray | None = None,
    isd: float = DEFAULT_MC_ISD_M,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Drop eMBB users uniformly over the area and mMTC devices per MC grid cell.

    Separate generators keep eMBB placement identical whether or not mMTC
    devices are requested.  Returns (positions, service labels, home MC).
    """
    width, height = float(area[0]), float(area[1])
    embb = np.column_stack([rng_embb.random(n_embb) * width,
                            rng_embb.random(n_embb) * height])
    parts, services, homes = [embb], [np.full(n_embb, SERVICE_EMBB)], [np.full(n_embb, -1)]
    if mmtc_per_mc > 0:
        if mc_xy is None or len(mc_xy) == 0:
            raise ValueError("mMTC devices need macro cells to home to")
        if rng_mmtc is None:
            rng_mmtc = rng_embb
        for m, mc in enumerate(np.asarray(mc_xy, dtype=float)):
            pts = mc + isd * (rng_mmtc.random((mmtc_per_mc, 2)) - 0.5)
            parts.append(pts)
            services.append(np.full(mmtc_per_mc, SERVICE_MMTC))
            homes.append(np.full(mmtc_per_mc, m))
    return (np.vstack(parts), np.concatenate(services), np.concatenate(homes))


def build_backhaul(
    sc_parent_distance: np.ndarray,
    n_mc: int,
    rng: np.random.Generator,
    *,
    hop_law: tuple[int, int] = MC_HOP_LAW,
    breakpoint_m: float = WIRELESS_BREAKPOINT_M,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw MC hop counts and classify SC backhaul links.

    Small cells within the breakpoint distance of their parent get a wireless
    (mmWave) link; beyond it the link is wired.  Every hop, wired or wireless,
    carries the same per-hop delay.
    """
    mc_hops = rng.integers(hop_law[0], hop_law[1] + 1, size=n_mc)
    sc_wireless = np.asarray(sc_parent_distance) <= breakpoint_m
    return mc_hops, sc_wireless


def build_topology(
    *,
    geometry: Deployment,
    seed_seq: np.random.SeedSequence,
    area: Sequence[float] = DEFAULT_AREA_M,
    isd: float = DEFAULT_MC_ISD_M,
    n_embb: int = 150,
    mmtc_per_mc: int = 0,
    sc_count_law: tuple[int, int] = DEFAULT_SC_COUNT_LAW,
    sc_min_separation_m: float = SC_MIN_SEPARATION_M,
    breakpoint_m: float = WIRELESS_BREAKPOINT_M,
) -> Topology:
    """Assemble a full topology from one seed sequence.

    The sequence is split into independent child streams (per-MC SC clusters,
    eMBB users, mMTC devices, backhaul) so that changing one knob, e.g. the
    mMTC count, leaves every other draw bit-identical.
    """
    mc_xy = generate_macro_grid(area, isd)
    n_mc = len(mc_xy)
    sc_seed, embb_seed, mmtc_seed, bh_seed = seed_seq.spawn(4)
    per_mc = sc_seed.spawn(n_mc)
    clusters, parents = [], []
    for m in range(n_mc):
        pts = generate_small_cells(
            mc_xy[m], geometry, np.random.default_rng(per_mc[m]),
            count_law=sc_count_law, radius_m=isd / 2, square_edge_m=isd,
            min_separation_m=sc_min_separation_m)
        clusters.append(pts)
        parents.append(np.full(len(pts), m))
    sc_xy = np.vstack(clusters) if clusters else np.zeros((0, 2))
    sc_parent = np.concatenate(parents) if parents else np.zeros(0, dtype=int)

    user_xy, user_service, mmtc_home = generate_users(
        area, n_embb, mmtc_per_mc,
        np.random.default_rng(embb_seed), np.random.default_rng(mmtc_seed),
        mc_xy=mc_xy, isd=isd)

    dist = np.linalg.norm(sc_xy - mc_xy[sc_parent], axis=1) if len(sc_xy) else np.zeros(0)
    mc_hops, sc_wireless = build_backhaul(
        dist, n_mc, np.random.default_rng(bh_seed), breakpoint_m=breakpoint_m)

    return Topology(
        area=(float(area[0]), float(area[1])),
        mc_xy=mc_xy, mc_hops=mc_hops,
        sc_xy=sc_xy, sc_parent=sc_parent, sc_wireless=sc_wireless,
        user_xy=user_xy, user_service=user_service, mmtc_home_mc=mmtc_home,
    )
