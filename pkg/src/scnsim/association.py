"""Load-aware user association and slow load estimation.

Each UE picks the active station maximizing

    (1 - rho_hat_b)^delta * p_rx_b

where p_rx_b is the received power and rho_hat_b the station's slowly
tracked load estimate. delta = 0 recovers plain strongest-signal (RSSI)
association. Estimates follow a standard decreasing-gain recursion

    rho_hat += nu(t) * (rho(t-1) - rho_hat),    nu(t) = 1 / t^0.9
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NoCoverageError(RuntimeError):
    """No station is active, so a UE cannot attach anywhere."""


@dataclass
class AssociationConfig:
    delta: float = 1.0  # load-awareness exponent, 0 = RSSI
    nu_exponent: float = 0.9  # load-estimate gain decay


@dataclass
class LoadEstimate:
    """Per-station slow load tracker fed with one-step-delayed true loads."""

    rho_hat: np.ndarray
    last_rho: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.rho_hat = np.asarray(self.rho_hat, dtype=float)
        if self.last_rho is None:
            self.last_rho = np.zeros_like(self.rho_hat)


def associate(
    rx_power: np.ndarray,
    state: np.ndarray,
    rho_hat: np.ndarray,
    delta: float = 1.0,
) -> int:
    """Pick the serving station index for one UE.

    Scores active stations by (1 - rho_hat)^delta * rx_power; ties break by
    raw received power, then by lowest station index. Raises NoCoverageError
    when everything sleeps.
    """
    rx_power = np.asarray(rx_power, dtype=float)
    state = np.asarray(state)
    rho_hat = np.asarray(rho_hat, dtype=float)
    active = np.flatnonzero(state != 0)
    if active.size == 0:
        raise NoCoverageError("all stations are asleep")
    # 0^0 = 1 under numpy power, so delta = 0 degrades cleanly to RSSI even
    # at a fully loaded station
    scores = np.power(1.0 - rho_hat[active], delta) * rx_power[active]
    best = scores.max()
    tied = active[scores == best]
    if tied.size > 1:
        strongest = rx_power[tied].max()
        tied = tied[rx_power[tied] == strongest]
    return int(tied[0])


def associate_all(
    rx_power: np.ndarray,
    state: np.ndarray,
    rho_hat: np.ndarray,
    delta: float = 1.0,
) -> np.ndarray:
    """Vectorized associate over columns of rx_power (stations x UEs)."""
    rx_power = np.asarray(rx_power, dtype=float)
    state = np.asarray(state)
    rho_hat = np.asarray(rho_hat, dtype=float)
    if not np.any(state != 0):
        raise NoCoverageError("all stations are asleep")
    weight = np.where(state != 0, np.power(1.0 - rho_hat, delta), -np.inf)
    scores = weight[:, None] * rx_power
    scores[state == 0, :] = -np.inf
    serving = np.argmax(scores, axis=0)
    # argmax keeps the lowest index on exact ties, but the tie rule prefers
    # raw received power first, so re-check columns with ties
    best = scores[serving, np.arange(scores.shape[1])]
    for m in np.flatnonzero(np.sum(scores == best[None, :], axis=0) > 1):
        serving[m] = associate(rx_power[:, m], state, rho_hat, delta)
    return serving


def update_load_estimate(
    estimate: LoadEstimate, rho_prev: np.ndarray, t: int, nu_exponent: float = 0.9
) -> None:
    """One estimator step at time t >= 1 using the previous step's loads."""
    if t < 1:
        raise ValueError("time index starts at 1")
    nu = 1.0 / t**nu_exponent
    rho_prev = np.asarray(rho_prev, dtype=float)
    estimate.rho_hat += nu * (rho_prev - estimate.rho_hat)
    estimate.last_rho = rho_prev.copy()
