"""Deterministic ODE integration.

Two integrators are provided and kept deliberately independent so one can
cross-validate the other:

* :func:`integrate_adaptive` -- embedded Dormand-Prince 5(4) pair with PI
  step-size control and a 4th-order dense-output interpolant. The propagated
  solution is the 5th-order one; the embedded 4th-order solution supplies the
  local error estimate. Output is sampled on a uniform grid so downstream
  analyses (stroboscopic periodicity in particular) never depend on the
  solver's internal step sequence.
* :func:`integrate_fixed_rk4` -- the classical 4th-order single-step method,
  bitwise reproducible, used as a convergence and agreement oracle.

Both raise on non-finite states instead of returning garbage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteState, StepSizeUnderflow

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# Difference between the 5th- and 4th-order weights, for the error estimate.
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])
# 4th-order dense-output polynomial: y(t0 + x h) = y0 + h K^T P [x, x^2, x^3, x^4].
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents for a 4th-order error estimate.
_BETA1 = 0.7 / 5.0
_BETA2 = 0.4 / 5.0
_MAX_STEPS = 10_000_000


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, step bounds, time span, and output grid spacing."""

    t_span: tuple[float, float]
    rtol: float = 1e-5
    atol: float = 1e-6
    h_init: float = 1e-2
    h_min: float = 1e-12
    h_max: float = 0.5
    sample_dt: float = 1e-2

    def __post_init__(self):
        t0, t1 = self.t_span
        if not t1 > t0:
            raise ValueError(f"t_span must be increasing, got {self.t_span}")
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ValueError("rtol and atol must be > 0")
        if not (0.0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError(
                f"require 0 < h_min <= h_init <= h_max, got "
                f"({self.h_min}, {self.h_init}, {self.h_max})")
        if not self.sample_dt > 0.0:
            raise ValueError("sample_dt must be > 0")


@dataclass
class Trajectory:
    """Uniformly sampled solution curve.

    ``controls`` is filled by the scenario layer (applied per-agent (v, u)
    columns); ``events`` holds (time, tag) annotations such as saturation
    transitions.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray | None = None
    control_labels: tuple[str, ...] = ()
    events: list[tuple[float, str]] = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or len(self.times) != len(self.states):
            raise ValueError("states must be 2-D with one row per sample time")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if self.controls is not None and len(self.controls) != len(self.times):
            raise ValueError("controls must have one row per sample time")


def sample_grid(t_span: tuple[float, float], sample_dt: float) -> np.ndarray:
    """Uniform output grid covering t_span (last point <= t1 + roundoff)."""
    t0, t1 = t_span
    n = int(math.floor((t1 - t0) / sample_dt + 1e-9))
    return t0 + sample_dt * np.arange(n + 1)


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def integrate_adaptive(rhs, state0, cfg: IntegratorConfig, witness=None,
                       kink_h: float = 1e-3) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` with the adaptive 5(4) pair.

    The local error of each step is kept below atol + rtol * |y| component-wise
    (max norm of the scaled error estimate <= 1). Output is evaluated on the
    uniform ``cfg.sample_dt`` grid through the dense-output interpolant, so the
    returned samples are independent of where the solver happened to step.

    ``witness``, when given, is a cheap function of (t, y) returning an int
    signature of the right-hand side's active branch (e.g. which saturation
    clamps are binding). A step whose stages see a signature change is rejected
    and halved until it is below ``kink_h``: crossing a C0 kink in the dynamics
    inside a long step would otherwise defeat the embedded error estimate,
    which assumes smoothness. This is a step-size cap at the switch, not event
    location; crossings are still taken, just with a small step.

    Raises:
        StepSizeUnderflow: the controller demanded a step below cfg.h_min.
        NonFiniteState: the solution left the finite domain.
    """
    y = np.asarray(state0, dtype=float).copy()
    if y.ndim != 1:
        raise ValueError("state0 must be a 1-D vector")
    t0, t1 = cfg.t_span
    grid = sample_grid(cfg.t_span, cfg.sample_dt)
    out = np.empty((len(grid), len(y)))
    out[0] = y
    next_sample = 1

    t = t0
    h = cfg.h_init
    err_prev = 1.0
    k = np.empty((7, len(y)))
    f_now = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f_now)):
        raise NonFiniteState(f"rhs non-finite at t={t}")
    w_now = witness(t, y) if witness is not None else 0
    events: list[tuple[float, str]] = []

    steps = 0
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        steps += 1
        if steps > _MAX_STEPS:
            raise StepSizeUnderflow(f"step budget exhausted at t={t:.6g}")
        if t + 1.01 * h >= t1:
            h = t1 - t
        k[0] = f_now
        crossed = False
        for i in range(1, 7):
            yi = y + h * (k[:i].T @ _A[i])
            k[i] = rhs(t + _C[i] * h, yi)
            if witness is not None and not crossed and witness(t + _C[i] * h, yi) != w_now:
                crossed = True
        if crossed and h > kink_h:
            h = max(0.5 * h, cfg.h_min)
            continue
        y_new = y + h * (k.T @ _B)
        if not np.all(np.isfinite(y_new)):
            raise NonFiniteState(f"state non-finite after step at t={t:.6g}")
        err = _error_norm(h * (k.T @ _E), y, y_new, cfg.rtol, cfg.atol)

        if err <= 1.0:
            # Accepted: fill all output samples that fall inside this step.
            t_new = t + h
            while next_sample < len(grid) and grid[next_sample] <= t_new + 1e-14 * max(1.0, abs(t_new)):
                x = (grid[next_sample] - t) / h
                q = np.array([x, x * x, x**3, x**4])
                out[next_sample] = y + h * (k.T @ (_P @ q))
                next_sample += 1
            factor = _SAFETY * err ** -_BETA1 * err_prev ** _BETA2 if err > 0.0 else _MAX_FACTOR
            err_prev = max(err, 1e-10)
            t, y = t_new, y_new
            f_now = k[6].copy()  # FSAL: stage 7 sits at (t_new, y_new)
            if witness is not None:
                w_new = witness(t, y)
                if crossed or w_new != w_now:
                    events.append((t, f"branch:{w_now}->{w_new}"))
                w_now = w_new
        else:
            if h <= cfg.h_min * (1.0 + 1e-12):
                raise StepSizeUnderflow(
                    f"step rejected at h_min={cfg.h_min:.3e} (t={t:.6g})")
            factor = min(1.0, max(_MIN_FACTOR, _SAFETY * err ** -_BETA1))
        h = min(max(h * min(max(factor, _MIN_FACTOR), _MAX_FACTOR), cfg.h_min), cfg.h_max)

    # Final grid point coincides with t1 when the span is a grid multiple.
    if next_sample < len(grid):
        out[next_sample] = y
        next_sample += 1
    return Trajectory(times=grid[:next_sample], states=out[:next_sample], events=events)


def integrate_fixed_rk4(rhs, state0, h: float, t_span: tuple[float, float],
                        sample_every: int = 1) -> Trajectory:
    """Classical RK4 with a fixed step; bitwise reproducible.

    ``sample_every`` keeps every n-th step in the output (the step count must
    then be a multiple of it), which keeps long oracle runs from storing
    millions of rows.

    Raises:
        NonFiniteState: the solution left the finite domain.
    """
    if not h > 0.0:
        raise ValueError(f"h must be > 0, got {h}")
    t0, t1 = t_span
    n_steps = int(round((t1 - t0) / h))
    if abs(t0 + n_steps * h - t1) > 1e-9 * max(1.0, abs(t1)):
        raise ValueError(f"t_span length must be a multiple of h={h}")
    if n_steps % sample_every != 0:
        raise ValueError("step count must be a multiple of sample_every")

    y = np.asarray(state0, dtype=float).copy()
    out = np.empty((n_steps // sample_every + 1, len(y)))
    out[0] = y
    for i in range(n_steps):
        t = t0 + i * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % sample_every == 0:
            if not np.all(np.isfinite(y)):
                raise NonFiniteState(f"state non-finite at t={t + h:.6g}")
            out[(i + 1) // sample_every] = y
    times = t0 + (h * sample_every) * np.arange(n_steps // sample_every + 1)
    return Trajectory(times=times, states=out)
