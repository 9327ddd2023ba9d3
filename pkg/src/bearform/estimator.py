"""Leader-state recovery from the follower's own measurements.

Given uniformly sampled (rho, alpha2) measurements and the follower's own
applied controls, the shape dynamics can be rearranged to recover the leader's
speed, bearing, and steering:

    v1 cos(a1) = -drho/dt - v2 cos(a2)
    v1 sin(a1) = rho (dalpha2/dt + u2) - v2 sin(a2)
    u1         = -dalpha1/dt + (v1 sin(a1) + v2 sin(a2)) / rho

The pair (v1, a1) is unique because the leader's speed is positive by
assumption. Derivatives come from central differences with optional
moving-average pre-smoothing; u1 needs a second differentiation pass and is
therefore the noisiest output. This is an offline batch estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpeed, SeriesTooShort

MIN_LEADER_SPEED = 1e-6


@dataclass
class MeasurementSeries:
    """Follower-side measurements on a uniform time grid."""

    times: np.ndarray
    rho: np.ndarray
    alpha2: np.ndarray
    v2: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name in ("rho", "alpha2", "v2", "u2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.times.shape:
                raise ValueError(f"{name} length {arr.shape} != times {self.times.shape}")
            setattr(self, name, arr)
        if len(self.times) < 3:
            raise SeriesTooShort(f"need at least 3 samples, got {len(self.times)}")
        dts = np.diff(self.times)
        if np.any(dts <= 0.0) or np.ptp(dts) > 1e-9 * dts[0]:
            raise ValueError("times must be a uniform, increasing grid")
        if np.any(self.rho <= 0.0):
            raise ValueError("rho must be positive")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass
class LeaderEstimate:
    """Recovered leader signals; boundary samples without valid derivatives are NaN.

    ``interior`` slices the fully valid region. ``u1_residual`` is the gap
    between the raw per-sample steering recovery and the reported (smoothed)
    u1_hat -- a cheap local quality metric for the second-derivative estimate.
    """

    times: np.ndarray
    v1_hat: np.ndarray
    alpha1_hat: np.ndarray
    u1_hat: np.ndarray
    u1_residual: np.ndarray
    interior: slice


def _moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the half-window edges are left as NaN."""
    half = window // 2
    out = np.full_like(x, np.nan)
    kernel = np.ones(window) / window
    out[half:len(x) - half] = np.convolve(x, kernel, mode="valid")
    return out


def _central_diff(x: np.ndarray, dt: float) -> np.ndarray:
    """Central differences; one more NaN at each boundary (NaNs propagate)."""
    out = np.full_like(x, np.nan)
    out[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    return out


def estimate_leader(m: MeasurementSeries, window: int = 3) -> LeaderEstimate:
    """Recover (v1, alpha1, u1) series from follower-side measurements.

    ``window`` is the odd moving-average width applied to the measured series
    before differencing and to the recovered steering after it.

    Raises:
        SeriesTooShort: fewer than 2*window + 5 samples.
        DegenerateSpeed: recovered leader speed below 1e-6 m/s somewhere in
            the interior (violates the positive-speed assumption; flagged
            rather than guessed around).
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 3, got {window}")
    n = len(m.times)
    if n <= 2 * window + 4:
        raise SeriesTooShort(f"need more than {2 * window + 4} samples, got {n}")
    dt = m.dt
    half = window // 2

    # alpha2 may be reported wrapped; differencing needs a continuous series.
    alpha2 = np.unwrap(m.alpha2)
    rho_s = _moving_average(m.rho, window)
    alpha2_s = _moving_average(alpha2, window)
    drho = _central_diff(rho_s, dt)
    dalpha2 = _central_diff(alpha2_s, dt)

    cos_a2 = np.cos(alpha2_s)
    sin_a2 = np.sin(alpha2_s)
    v1_cos = -drho - m.v2 * cos_a2
    v1_sin = rho_s * (dalpha2 + m.u2) - m.v2 * sin_a2

    v1_hat = np.hypot(v1_cos, v1_sin)
    with np.errstate(invalid="ignore"):
        alpha1_hat = np.arctan2(v1_sin, v1_cos)
    valid1 = slice(half + 1, n - half - 1)
    if np.any(v1_hat[valid1] < MIN_LEADER_SPEED):
        raise DegenerateSpeed("recovered leader speed is numerically zero")

    # Second differentiation pass for the steering estimate.
    alpha1_cont = alpha1_hat.copy()
    alpha1_cont[valid1] = np.unwrap(alpha1_hat[valid1])
    dalpha1 = _central_diff(alpha1_cont, dt)
    u1_raw = -dalpha1 + (v1_sin + m.v2 * sin_a2) / rho_s
    u1_hat = _moving_average(u1_raw, window)
    u1_residual = u1_raw - u1_hat

    interior = slice(half + window // 2 + 2, n - half - window // 2 - 2)
    return LeaderEstimate(times=m.times, v1_hat=v1_hat, alpha1_hat=alpha1_hat,
                          u1_hat=u1_hat, u1_residual=u1_residual, interior=interior)
