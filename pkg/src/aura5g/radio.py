"""Channel model and per-trial radio environment.

Pathloss follows the close-in free-space-reference model

    PL(d) = FSPL(f, 1 m) + 10 n log10(d / 1 m) + X_sigma    [dB]

with the exponent ``n`` and lognormal shadowing sigma chosen per cell kind
(macro / small cell) and per LOS state.  LOS states come from the urban-micro
(street canyon) and urban-macro probability curves and are drawn once per
(user, AP) pair per trial; the beamformed and interference-limited regimes
reuse the same draws so regime comparisons are paired.

Bands never mix: macros serve at 3.55 GHz, small cells at 27 GHz, and the
wireless SC backhaul runs at 73 GHz, so interference is summed per band only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .scenario import Regime
from .topology import Topology

SPEED_OF_LIGHT_M_S = 3.0e8
REFERENCE_DISTANCE_M = 1.0


class DomainError(ValueError):
    """Input outside the channel model's validity range."""


class CellKind(str, Enum):
    MC = "mc"
    SC = "sc"


@dataclass(frozen=True)
class ChannelParams:
    """Link-budget and channel constants (defaults are the evaluation set)."""

    mc_freq_ghz: float = 3.55
    sc_access_freq_ghz: float = 27.0
    sc_backhaul_freq_ghz: float = 73.0
    mc_tx_power_dbm: float = 49.0
    sc_tx_power_dbm: float = 23.0
    mc_tx_gain_dbi: float = 17.0
    sc_tx_gain_dbi: float = 30.0
    ue_rx_gain_sc_dbi: float = 14.0
    ue_rx_gain_mc_dbi: float = 0.0
    backhaul_tx_gain_dbi: float = 30.0
    backhaul_rx_gain_dbi: float = 30.0
    noise_dbm_per_hz: float = -174.0
    hpbw_deg: float = 45.0
    # Interferers outside the receive lobe are dropped entirely unless a
    # side-lobe floor (in dBi) is configured.
    side_lobe_floor_dbi: float | None = None
    mc_bandwidth_hz: float = 80e6
    sc_bandwidth_hz: float = 1e9
    backhaul_total_bandwidth_hz: float = 1e9
    mc_options_hz: tuple = (1.5e6, 3e6, 5e6, 10e6, 20e6)
    sc_options_hz: tuple = (50e6, 100e6, 200e6)
    sc_los_exponent: float = 2.1
    sc_nlos_exponent: float = 3.2
    mc_los_exponent: float = 2.0
    mc_nlos_exponent: float = 2.9
    sc_los_shadow_db: float = 4.4
    sc_nlos_shadow_db: float = 8.0
    mc_los_shadow_db: float = 2.4
    mc_nlos_shadow_db: float = 5.7

    def exponent(self, kind: CellKind, los: bool) -> float:
        if kind is CellKind.SC:
            return self.sc_los_exponent if los else self.sc_nlos_exponent
        return self.mc_los_exponent if los else self.mc_nlos_exponent

    def shadow_std_db(self, kind: CellKind, los: bool) -> float:
        if kind is CellKind.SC:
            return self.sc_los_shadow_db if los else self.sc_nlos_shadow_db
        return self.mc_los_shadow_db if los else self.mc_nlos_shadow_db

    def options_hz(self, is_mc: bool) -> tuple:
        return self.mc_options_hz if is_mc else self.sc_options_hz


def fspl_db(freq_ghz: float, ref_distance_m: float = REFERENCE_DISTANCE_M) -> float:
    """Free-space pathloss at the close-in reference distance (default 1 m)."""
    if freq_ghz <= 0:
        raise DomainError("frequency must be positive")
    f_hz = freq_ghz * 1e9
    return 20.0 * np.log10(4.0 * np.pi * f_hz * ref_distance_m / SPEED_OF_LIGHT_M_S)


def los_probability(d2d_m, kind: CellKind, h_ut_m: float = 1.5):
    """LOS probability vs 2-D distance (urban micro for SC, urban macro for MC).

    Vectorized over ``d2d_m``; equals 1 at or below 18 m for both curves.
    The macro curve is defined for terminal heights up to 23 m.
    """
    d = np.asarray(d2d_m, dtype=float)
    if np.any(d < 0):
        raise DomainError("distance must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        base_sc = 18.0 / d + np.exp(-d / 36.0) * (1.0 - 18.0 / d)
        if kind is CellKind.SC:
            p = np.where(d <= 18.0, 1.0, base_sc)
        else:
            if h_ut_m > 23.0:
                raise DomainError("macro LOS curve is defined for h_ut <= 23 m")
            c_h = 0.0 if h_ut_m <= 13.0 else ((h_ut_m - 13.0) / 10.0) ** 1.5
            bracket = 18.0 / d + np.exp(-d / 63.0) * (1.0 - 18.0 / d)
            boost = 1.0 + c_h * 1.25 * (d / 100.0) ** 2 * np.exp(-d / 150.0)
            p = np.where(d <= 18.0, 1.0, bracket * boost)
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.isscalar(d2d_m) else p


def pathloss_db(freq_ghz: float, d3d_m, kind: CellKind, los,
                params: ChannelParams | None = None, shadow_db=0.0):
    """Close-in pathloss in dB; ``shadow_db`` is the realized lognormal draw.

    Vectorized over distance / LOS state.  Distances below the 1 m reference
    are outside the model.
    """
    params = params or ChannelParams()
    d = np.asarray(d3d_m, dtype=float)
    if np.any(d < REFERENCE_DISTANCE_M):
        raise DomainError("pathloss model requires d >= 1 m")
    los_arr = np.asarray(los, dtype=bool)
    n = np.where(los_arr, params.exponent(kind, True), params.exponent(kind, False))
    pl = fspl_db(freq_ghz) + 10.0 * n * np.log10(d / REFERENCE_DISTANCE_M) + shadow_db
    return float(pl) if np.isscalar(d3d_m) and np.isscalar(los) else pl


def noise_dbm(bandwidth_hz: float, params: ChannelParams) -> float:
    return params.noise_dbm_per_hz + 10.0 * np.log10(bandwidth_hz)


def _db_to_lin(db):
    return np.power(10.0, np.asarray(db) / 10.0)


def _lin_to_db(lin):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(lin)


@dataclass(frozen=True)
class ChannelState:
    """Per-trial random channel draws, shared by both directivity regimes."""

    los: np.ndarray                 # (U, A) bool
    shadow_db: np.ndarray           # (U, A) realized shadow fading
    backhaul_shadow_db: np.ndarray  # (N_sc,) 73 GHz link shadowing


def draw_channel_state(topology: Topology, params: ChannelParams,
                       rng: np.random.Generator) -> ChannelState:
    """One LOS draw and one shadow draw per (eMBB user, AP) pair."""
    users = topology.embb_xy
    aps = topology.ap_xy
    d2d = np.linalg.norm(users[:, None, :] - aps[None, :, :], axis=2)
    p_sc = los_probability(d2d, CellKind.SC, topology.ue_height_m)
    p_mc = los_probability(d2d, CellKind.MC, topology.ue_height_m)
    p_los = np.where(topology.ap_is_mc[None, :], p_mc, p_sc)
    los = rng.random(d2d.shape) < p_los
    z = rng.standard_normal(d2d.shape)
    sigma_sc = np.where(los, params.sc_los_shadow_db, params.sc_nlos_shadow_db)
    sigma_mc = np.where(los, params.mc_los_shadow_db, params.mc_nlos_shadow_db)
    shadow = z * np.where(topology.ap_is_mc[None, :], sigma_mc, sigma_sc)
    backhaul_shadow = rng.standard_normal(topology.n_sc) * params.mc_los_shadow_db
    return ChannelState(los=los, shadow_db=shadow, backhaul_shadow_db=backhaul_shadow)


def _rx_power_dbm(topology: Topology, params: ChannelParams, state: ChannelState) -> np.ndarray:
    """Received power before any UE receive gain, per (user, AP)."""
    users = topology.embb_xy
    aps = topology.ap_xy
    d2d = np.linalg.norm(users[:, None, :] - aps[None, :, :], axis=2)
    dh = topology.ap_height_m[None, :] - topology.ue_height_m
    d3d = np.sqrt(d2d ** 2 + dh ** 2)
    is_mc = topology.ap_is_mc[None, :]
    pl_mc = pathloss_db(params.mc_freq_ghz, d3d, CellKind.MC, state.los,
                        params, state.shadow_db)
    pl_sc = pathloss_db(params.sc_access_freq_ghz, d3d, CellKind.SC, state.los,
                        params, state.shadow_db)
    pl = np.where(is_mc, pl_mc, pl_sc)
    tx = np.where(is_mc, params.mc_tx_power_dbm + params.mc_tx_gain_dbi,
                  params.sc_tx_power_dbm + params.sc_tx_gain_dbi)
    return tx - pl


def compute_sinr_omni(topology: Topology, params: ChannelParams,
                      state: ChannelState) -> tuple[np.ndarray, np.ndarray]:
    """SNR and SINR (dB) with isotropic reception: every same-band AP interferes."""
    rx = _rx_power_dbm(topology, params, state)  # 0 dBi UE gain everywhere
    rx_lin = _db_to_lin(rx)
    is_mc = topology.ap_is_mc
    snr_db = np.empty_like(rx)
    sinr_db = np.empty_like(rx)
    for band_mask, bw in ((is_mc, params.mc_bandwidth_hz),
                          (~is_mc, params.sc_bandwidth_hz)):
        if not band_mask.any():
            continue
        noise = _db_to_lin(noise_dbm(bw, params))
        band = rx_lin[:, band_mask]
        total = band.sum(axis=1, keepdims=True)
        interference = total - band
        snr_db[:, band_mask] = _lin_to_db(band / noise)
        sinr_db[:, band_mask] = _lin_to_db(band / (interference + noise))
    return snr_db, sinr_db


def compute_sinr_beam(topology: Topology, params: ChannelParams,
                      state: ChannelState) -> tuple[np.ndarray, np.ndarray]:
    """SNR and SINR (dB) with UE receive beamforming on the small-cell band.

    For each candidate SC the UE beam axis points straight at it: the
    candidate and any SC within half the half-power beamwidth of that axis
    are received with the full UE gain, everything else falls on the
    (configurable) side lobe.  APs still transmit omnidirectionally, so this
    is a lower bound on the beamformed SINR.  The macro band is isotropic.
    """
    rx = _rx_power_dbm(topology, params, state)
    rx_lin = _db_to_lin(rx)
    is_mc = topology.ap_is_mc
    snr_db = np.empty_like(rx)
    sinr_db = np.empty_like(rx)

    noise_mc = _db_to_lin(noise_dbm(params.mc_bandwidth_hz, params))
    if is_mc.any():
        band = rx_lin[:, is_mc]
        total = band.sum(axis=1, keepdims=True)
        snr_db[:, is_mc] = _lin_to_db(band / noise_mc)
        sinr_db[:, is_mc] = _lin_to_db(band / (total - band + noise_mc))

    if (~is_mc).any():
        users = topology.embb_xy
        sc_xy = topology.sc_xy
        noise_sc = _db_to_lin(noise_dbm(params.sc_bandwidth_hz, params))
        gain_lin = _db_to_lin(params.ue_rx_gain_sc_dbi)
        side_lin = 0.0 if params.side_lobe_floor_dbi is None \
            else _db_to_lin(params.side_lobe_floor_dbi)
        half_lobe = np.deg2rad(params.hpbw_deg / 2.0)
        rx_sc = rx_lin[:, ~is_mc]  # (U, N)
        angles = np.arctan2(sc_xy[None, :, 1] - users[:, 1:2],
                            sc_xy[None, :, 0] - users[:, 0:1])  # (U, N)
        # offset[i, j, j'] = |angle(user i -> SC j') - beam axis toward SC j|
        offset = np.abs(angles[:, None, :] - angles[:, :, None])
        offset = np.minimum(offset, 2 * np.pi - offset)
        lobe_gain = np.where(offset <= half_lobe, gain_lin, side_lin)
        interference = (rx_sc[:, None, :] * lobe_gain).sum(axis=2) \
            - rx_sc * gain_lin  # remove the candidate itself (always in lobe)
        signal = rx_sc * gain_lin
        snr_db[:, ~is_mc] = _lin_to_db(signal / noise_sc)
        sinr_db[:, ~is_mc] = _lin_to_db(signal / (interference + noise_sc))
    return snr_db, sinr_db


def shannon_capacity_bps(bandwidth_hz: float, snr_linear: float) -> float:
    """C = W log2(1 + SNR); the wireless backhaul rate law."""
    return float(bandwidth_hz * np.log2(1.0 + snr_linear))


def wireless_backhaul_capacity(distance_m: float, n_sharing: int,
                               params: ChannelParams, shadow_db: float = 0.0) -> float:
    """Shannon capacity of one 73 GHz SC-to-MC link.

    The backhaul bandwidth pool is split equally among the ``n_sharing``
    wireless SCs attached to the same macro.  The link budget uses the macro
    LOS exponent (short range, below the breakpoint) with high-gain horns on
    both ends; noise is integrated over the per-SC share.
    """
    if n_sharing < 1:
        raise ValueError("n_sharing must be >= 1")
    share_hz = params.backhaul_total_bandwidth_hz / n_sharing
    pl = pathloss_db(params.sc_backhaul_freq_ghz, distance_m, CellKind.MC, True,
                     params, shadow_db)
    rx = params.mc_tx_power_dbm + params.backhaul_tx_gain_dbi \
        + params.backhaul_rx_gain_dbi - pl
    snr_lin = _db_to_lin(rx - noise_dbm(share_hz, params))
    return shannon_capacity_bps(share_hz, snr_lin)


def rate_table(sinr_db: np.ndarray, topology: Topology,
               params: ChannelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-(user, AP, option) achievable rate in bps.

    rate[i, j, k] = w_k * log2(1 + sinr_linear[i, j]); entries beyond an AP's
    option count are zero-padded.  Returns (rate, option bandwidths, counts).
    """
    n_users, n_aps = sinr_db.shape
    counts = np.where(topology.ap_is_mc, len(params.mc_options_hz),
                      len(params.sc_options_hz))
    k_max = int(counts.max()) if n_aps else 0
    option_bw = np.zeros((n_aps, k_max))
    for j in range(n_aps):
        opts = params.options_hz(bool(topology.ap_is_mc[j]))
        option_bw[j, :len(opts)] = opts
    se = np.log2(1.0 + _db_to_lin(sinr_db))  # bps/Hz
    rate = se[:, :, None] * option_bw[None, :, :]
    return rate, option_bw, counts


@dataclass(frozen=True)
class RadioEnvironment:
    """All radio-derived inputs the association model needs, immutable per trial."""

    regime: Regime
    snr_db: np.ndarray              # (U, A)
    sinr_db: np.ndarray             # (U, A)
    los: np.ndarray                 # (U, A)
    rate_bps: np.ndarray            # (U, A, Kmax), zero-padded
    option_bw_hz: np.ndarray        # (A, Kmax), zero-padded
    option_count: np.ndarray        # (A,)
    carrier_bw_hz: np.ndarray       # (A,)
    wireless_backhaul_bps: np.ndarray  # (N_sc,), NaN on wired links

    @property
    def n_users(self) -> int:
        return self.snr_db.shape[0]

    @property
    def n_aps(self) -> int:
        return self.snr_db.shape[1]


def build_radio_environment(topology: Topology, params: ChannelParams,
                            state: ChannelState, regime: Regime) -> RadioEnvironment:
    """Compute SNR/SINR, the rate table and wireless backhaul capacities."""
    if regime is Regime.BEAMFORMED:
        snr_db, sinr_db = compute_sinr_beam(topology, params, state)
    else:
        snr_db, sinr_db = compute_sinr_omni(topology, params, state)
    rate, option_bw, counts = rate_table(sinr_db, topology, params)

    wireless_bps = np.full(topology.n_sc, np.nan)
    if topology.n_sc:
        dist2d = topology.sc_parent_distance()
        dh = topology.mc_height_m - topology.sc_height_m
        d3d = np.sqrt(dist2d ** 2 + dh ** 2)
        sharing = np.zeros(topology.n_mc, dtype=int)
        for n in range(topology.n_sc):
            if topology.sc_wireless[n]:
                sharing[topology.sc_parent[n]] += 1
        for n in range(topology.n_sc):
            if topology.sc_wireless[n]:
                wireless_bps[n] = wireless_backhaul_capacity(
                    float(d3d[n]), int(sharing[topology.sc_parent[n]]),
                    params, float(state.backhaul_shadow_db[n]))

    carrier = np.where(topology.ap_is_mc, params.mc_bandwidth_hz, params.sc_bandwidth_hz)
    return RadioEnvironment(
        regime=regime, snr_db=snr_db, sinr_db=sinr_db, los=state.los,
        rate_bps=rate, option_bw_hz=option_bw, option_count=counts,
        carrier_bw_hz=carrier, wireless_backhaul_bps=wireless_bps,
    )
