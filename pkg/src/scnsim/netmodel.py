"""Downlink physical layer and power model for a co-channel small-cell network.

Implements distance-based channel gains, SINR rates with state-dependent
interference, the load-coupled fixed point that ties per-BS loads to rates,
and the two-state base-station power model

    P_total = p_idle                               if sleeping
    P_total = load * level + scale * p_idle        if active, scale > 1

where load is the BS duty cycle and level its transmit power setting.
All powers are in watts, distances in metres, rates in bit/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MACRO = "macro"
SMALL = "small"


class InactiveServerError(RuntimeError):
    """A sleeping BS was asked to serve a UE."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


@dataclass(frozen=True)
class BaseStation:
    """One base station; kind selects the path-loss law and defaults.

    idle_scale_active multiplies the idle draw while the BS is on, so an
    active BS pays idle_scale_active * p_idle even at zero load, while a
    sleeping one pays p_idle alone.
    """

    id: int
    kind: str  # MACRO or SMALL
    position: tuple[float, float]  # metres
    p_max: float  # watts, transmit power ceiling
    p_idle: float  # watts, sleep-state draw
    idle_scale_active: float  # active-state idle multiplier, > 1
    never_sleeps: bool = False

    def __post_init__(self) -> None:
        if self.kind not in (MACRO, SMALL):
            raise ValueError(f"unknown BS kind {self.kind!r}")
        if self.idle_scale_active <= 1.0:
            raise ValueError(
                f"idle_scale_active must exceed 1, got {self.idle_scale_active}"
            )
        if not 0.0 < self.p_idle < self.p_max:
            raise ValueError(
                f"need 0 < p_idle < p_max, got p_idle={self.p_idle}, p_max={self.p_max}"
            )


@dataclass
class UserEquipment:
    id: int
    position: tuple[float, float]  # metres
    traffic_rate: float  # bit/s demanded on the downlink
    serving_bs: int | None = None


@dataclass
class ChannelModel:
    """Log-distance path loss per BS kind, plus thermal noise.

    PL_macro(d) = 128.1 + 37.6 log10(d_km)   [dB]
    PL_small(d) = 140.7 + 37.6 log10(d_km)   [dB]

    Gains are 10^(-PL/10). Distances below the per-kind minimum are clamped
    to that minimum, which also keeps every gain inside (0, 1].
    """

    bandwidth_hz: float = 10e6
    noise_psd_dbm_hz: float = -174.0
    macro_offset_db: float = 128.1
    macro_slope_db: float = 37.6
    small_offset_db: float = 140.7
    small_slope_db: float = 37.6
    min_dist_macro_m: float = 35.0
    min_dist_small_m: float = 10.0
    # optional multiplicative fading hook: (kind, distance_m) -> linear factor
    fading: Callable[[str, np.ndarray], np.ndarray] | None = field(default=None)

    @property
    def noise_w(self) -> float:
        """Thermal noise power over the full band, watts."""
        return dbm_to_watt(self.noise_psd_dbm_hz) * self.bandwidth_hz

    def pathloss_db(self, kind: str, distance_m: np.ndarray | float) -> np.ndarray:
        d = np.asarray(distance_m, dtype=float)
        if kind == MACRO:
            d = np.maximum(d, self.min_dist_macro_m)
            return self.macro_offset_db + self.macro_slope_db * np.log10(d / 1000.0)
        if kind == SMALL:
            d = np.maximum(d, self.min_dist_small_m)
            return self.small_offset_db + self.small_slope_db * np.log10(d / 1000.0)
        raise ValueError(f"unknown BS kind {kind!r}")

    def gain(self, kind: str, distance_m: np.ndarray | float) -> np.ndarray:
        g = 10.0 ** (-self.pathloss_db(kind, distance_m) / 10.0)
        if self.fading is not None:
            g = g * self.fading(kind, np.asarray(distance_m, dtype=float))
        return g

    def gain_matrix(
        self, stations: Sequence[BaseStation], ue_positions: np.ndarray
    ) -> np.ndarray:
        """(n_bs, n_ue) channel gains; ue_positions is (n_ue, 2) in metres."""
        pos = np.asarray(ue_positions, dtype=float).reshape(-1, 2)
        out = np.empty((len(stations), pos.shape[0]))
        for i, bs in enumerate(stations):
            d = np.hypot(pos[:, 0] - bs.position[0], pos[:, 1] - bs.position[1])
            out[i] = self.gain(bs.kind, d)
        return out


@dataclass
class NetworkConfiguration:
    """Joint power/state/load snapshot of all BSs, index-aligned to the station list."""

    power: np.ndarray  # watts, transmit level per BS
    state: np.ndarray  # 1 active, 0 sleeping
    load: np.ndarray  # duty cycle in [0, 1]
    load_raw: np.ndarray  # unclamped load, for cost accounting
    converged: bool = True

    @classmethod
    def all_active(cls, stations: Sequence[BaseStation]) -> "NetworkConfiguration":
        n = len(stations)
        return cls(
            power=np.array([bs.p_max for bs in stations]),
            state=np.ones(n, dtype=np.int64),
            load=np.zeros(n),
            load_raw=np.zeros(n),
        )

    def copy(self) -> "NetworkConfiguration":
        return NetworkConfiguration(
            self.power.copy(), self.state.copy(), self.load.copy(),
            self.load_raw.copy(), self.converged,
        )


def exclusion_matrix(n_bs: int, clusters: Sequence[Sequence[int]] | None) -> np.ndarray:
    """Boolean (n_bs, n_bs); entry [b, b'] True when b' never interferes with b.

    The diagonal is always excluded. Members of a common cluster are mutually
    excluded because the cluster head time-orthogonalizes their transmissions.
    """
    excl = np.eye(n_bs, dtype=bool)
    if clusters is not None:
        for members in clusters:
            idx = np.fromiter(members, dtype=int)
            excl[np.ix_(idx, idx)] = True
    return excl


def rate_matrix(
    stations: Sequence[BaseStation],
    cfg: NetworkConfiguration,
    gains: np.ndarray,
    channel: ChannelModel,
    excl: np.ndarray,
    interference_load: np.ndarray | None = None,
) -> np.ndarray:
    """(n_bs, n_ue) achievable rates, bit/s.

    Entry [b, m] is the Shannon rate BS b offers UE m while every other
    active BS outside b's exclusion set transmits at its duty-cycled power
    rho * P. Sleeping BSs neither serve nor interfere; rows of sleeping BSs
    are 0. interference_load overrides cfg.load for the interference term
    (used to freeze interference while scheduling).
    """
    rho = cfg.load if interference_load is None else interference_load
    w = rho * cfg.power * cfg.state  # effective interference power per BS
    total = w @ gains  # (n_ue,) all-BS interference at each UE
    # remove each serving BS's own exclusion set from the total
    excluded = (excl * w[None, :]) @ gains  # (n_bs, n_ue)
    denom = total[None, :] - excluded + channel.noise_w
    sinr = (cfg.power * cfg.state)[:, None] * gains / denom
    return channel.bandwidth_hz * np.log2(1.0 + sinr)


def rate(
    x: tuple[float, float],
    serving: int,
    stations: Sequence[BaseStation],
    channel: ChannelModel,
    cfg: NetworkConfiguration,
    clusters: Sequence[Sequence[int]] | None = None,
) -> float:
    """Downlink rate (bit/s) from station index `serving` to a UE at x."""
    if cfg.state[serving] == 0:
        raise InactiveServerError(f"BS {serving} is sleeping and cannot serve")
    gains = channel.gain_matrix(stations, np.array([x]))
    excl = exclusion_matrix(len(stations), clusters)
    return float(rate_matrix(stations, cfg, gains, channel, excl)[serving, 0])


def compute_loads(
    stations: Sequence[BaseStation],
    channel: ChannelModel,
    gains: np.ndarray,
    cfg: NetworkConfiguration,
    assignment: np.ndarray,
    traffic: np.ndarray,
    clusters: Sequence[Sequence[int]] | None = None,
    gamma: float = 0.5,
    tol: float = 1e-6,
    max_iter: int = 200,
    init: np.ndarray | None = None,
) -> NetworkConfiguration:
    """Solve the load-coupled fixed point rho_b = sum_m z_bm traffic_m / R_b(x_m).

    Rates depend on every BS's duty cycle through interference, so the load
    vector is iterated with damping gamma until the clamped iterate moves
    less than tol in max-norm (or max_iter is hit; cfg.converged records
    which). Pass max_iter=1, gamma=1.0 with an explicit init for a single
    frozen-interference sweep. Returns a new configuration carrying the
    clamped load, the raw (unclamped) load at the converged interference
    state, and the convergence flag.

    assignment is binary (n_bs, n_ue); every assigned BS must be active.
    """
    n_bs = len(stations)
    serving = np.argmax(assignment, axis=0)
    assigned_any = assignment.sum(axis=0) > 0
    if np.any((cfg.state[serving] == 0) & assigned_any):
        bad = np.where((cfg.state[serving] == 0) & assigned_any)[0]
        raise InactiveServerError(f"UEs {bad.tolist()} assigned to sleeping BSs")

    excl = exclusion_matrix(n_bs, clusters)
    x = np.zeros(n_bs) if init is None else np.clip(np.asarray(init, dtype=float), 0.0, 1.0)
    raw = np.zeros(n_bs)
    converged = False
    for _ in range(max_iter):
        rates = rate_matrix(stations, cfg, gains, channel, excl, interference_load=x)
        serving_rate = rates[serving, np.arange(len(serving))]
        per_ue = np.divide(
            traffic, serving_rate,
            out=np.zeros_like(traffic, dtype=float), where=assigned_any,
        )
        raw = np.bincount(serving[assigned_any], weights=per_ue[assigned_any], minlength=n_bs)
        x_new = (1.0 - gamma) * x + gamma * np.minimum(raw, 1.0)
        if np.max(np.abs(x_new - x)) < tol:
            x = x_new
            converged = True
            break
        x = x_new

    out = cfg.copy()
    out.load = np.minimum(x, 1.0)
    out.load_raw = raw
    out.converged = converged
    return out


def total_power(
    bs: BaseStation, state: int, load: float, power: float | None = None
) -> float:
    """Consumed power per the two-state model; load is the clamped duty cycle.

    power is the configured transmit level (defaults to the BS ceiling).
    """
    if state == 0:
        return bs.p_idle
    level = bs.p_max if power is None else power
    return load * level + bs.idle_scale_active * bs.p_idle


def total_powers(stations: Sequence[BaseStation], cfg: NetworkConfiguration) -> np.ndarray:
    """Vector of consumed powers, watts; uses each BS's configured level."""
    idle = np.array([bs.p_idle for bs in stations])
    scale = np.array([bs.idle_scale_active for bs in stations])
    active = cfg.load * cfg.power + scale * idle
    return np.where(cfg.state == 1, active, idle)


def power_budget_ok(stations: Sequence[BaseStation], cfg: NetworkConfiguration) -> np.ndarray:
    """Boolean per BS: consumed power stays within p_max (constraint on totals).

    With the transmit level at p_max this can only fail at duty cycles above
    1 - idle_scale_active * p_idle / p_max; callers treat a False entry as a
    rejected (invalid) configuration rather than a physical state.
    """
    totals = total_powers(stations, cfg)
    p_max = np.array([bs.p_max for bs in stations])
    return totals <= p_max + 1e-12
