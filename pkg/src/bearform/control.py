"""Feedback laws for the follower: constant-bearing steering and speed control.

The steering law regulates the follower's bearing to the leader toward +pi/2;
the two speed laws regulate separation and the leader-side bearing toward
(rho0, -pi/2). The ideal law compensates the leader's turn rate exactly; the
robust law drops that term and trades exactness for leader independence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentAgents, ExcludedInitialCondition, NonpositiveDistance
from .geometry import EPS_RHO, ReducedShapeState, ShapeState, wrap_angle


class Mode(enum.Enum):
    """Speed-law variant."""

    IDEAL = "ideal"
    ROBUST = "robust"


@dataclass(frozen=True)
class PotentialSpec:
    """Separation potential: gain mu_rho and target distance rho0 (both > 0)."""

    mu_rho: float
    rho0: float

    def __post_init__(self):
        if not (math.isfinite(self.mu_rho) and self.mu_rho > 0.0):
            raise ValueError(f"mu_rho must be > 0, got {self.mu_rho}")
        if not (math.isfinite(self.rho0) and self.rho0 > 0.0):
            raise ValueError(f"rho0 must be > 0, got {self.rho0}")


@dataclass(frozen=True)
class LeaderBounds:
    """Declared bounds on the leader program: 0 < v1 <= k_v, |u1| <= k_u."""

    k_v: float
    k_u: float

    def __post_init__(self):
        if not (math.isfinite(self.k_v) and self.k_v > 0.0):
            raise ValueError(f"k_v must be > 0, got {self.k_v}")
        if not (math.isfinite(self.k_u) and self.k_u > 0.0):
            raise ValueError(f"k_u must be > 0, got {self.k_u}")


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and mode of the follower's control stack.

    v_max / u_max, when set, saturate the commanded controls after the
    feedback laws are evaluated (never inside the stability analysis).
    """

    mu1: float
    mu2: float
    potential: PotentialSpec
    mode: Mode = Mode.IDEAL
    v_max: float | None = None
    u_max: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.mu1) and self.mu1 > 0.0):
            raise ValueError(f"mu1 must be > 0, got {self.mu1}")
        if not (math.isfinite(self.mu2) and self.mu2 > 0.0):
            raise ValueError(f"mu2 must be > 0, got {self.mu2}")
        for name, bound in (("v_max", self.v_max), ("u_max", self.u_max)):
            if bound is not None and not (math.isfinite(bound) and bound > 0.0):
                raise ValueError(f"{name} must be > 0 when set, got {bound}")


def potential_f_raw(mu_rho: float, rho0: float, rho: float) -> float:
    return mu_rho * (rho * rho - rho0 * rho0) / (rho * rho)


def potential_g_raw(mu_rho: float, rho0: float, rho: float) -> float:
    return mu_rho * (rho - 2.0 * rho0 + rho0 * rho0 / rho)


def potential_f(spec: PotentialSpec, rho: float) -> float:
    """Restoring term f(rho) = mu_rho (rho^2 - rho0^2) / rho^2.

    Vanishes at rho0 and has the sign of rho - rho0.
    """
    if rho <= 0.0:
        raise NonpositiveDistance(f"rho must be > 0, got {rho}")
    return potential_f_raw(spec.mu_rho, spec.rho0, rho)


def potential_g(spec: PotentialSpec, rho: float) -> float:
    """Separation potential g(rho) = mu_rho (rho - 2 rho0 + rho0^2 / rho).

    The antiderivative of f vanishing at rho0; positive elsewhere and
    unbounded as rho -> 0 or rho -> infinity.
    """
    if rho <= 0.0:
        raise NonpositiveDistance(f"rho must be > 0, got {rho}")
    return potential_g_raw(spec.mu_rho, spec.rho0, rho)


def potential_f_prime(spec: PotentialSpec, rho: float) -> float:
    """df/drho = 2 mu_rho rho0^2 / rho^3; equals 2 mu_rho / rho0 at rho0."""
    if rho <= 0.0:
        raise NonpositiveDistance(f"rho must be > 0, got {rho}")
    return 2.0 * spec.mu_rho * spec.rho0 * spec.rho0 / rho**3


def steering_cb_raw(rho: float, alpha1: float, alpha2: float,
                    v1: float, v2: float, mu2: float) -> float:
    return -mu2 * math.cos(alpha2) + (v1 * math.sin(alpha1) + v2 * math.sin(alpha2)) / rho


def steering_cb(z: ShapeState, v1: float, v2: float, mu2: float) -> float:
    """Constant-bearing steering command for the follower.

    u2 = -mu2 cos(a2) + (v1 sin(a1) + v2 sin(a2)) / rho. Substituted into the
    shape dynamics this cancels the coupling term, leaving da2 = mu2 cos(a2),
    which drives alpha2 to +pi/2 exponentially.
    """
    if z.rho < EPS_RHO:
        raise CoincidentAgents(f"rho={z.rho:.3e} below {EPS_RHO:.1e}")
    return steering_cb_raw(z.rho, z.alpha1, z.alpha2, v1, v2, mu2)


def speed_ideal_raw(rho: float, alpha1: float, v1: float, u1: float,
                    mu1: float, mu_rho: float, rho0: float) -> float:
    f = potential_f_raw(mu_rho, rho0, rho)
    return -v1 * math.sin(alpha1) + rho * (u1 - mu1 * math.cos(alpha1) + v1 * f)


def speed_robust_raw(rho: float, alpha1: float, v1: float,
                     mu1: float, mu_rho: float, rho0: float) -> float:
    f = potential_f_raw(mu_rho, rho0, rho)
    return -v1 * math.sin(alpha1) + rho * (-mu1 * math.cos(alpha1) + v1 * f)


def clamp_speed(raw: float, v_max: float | None) -> float:
    """Apply the nonnegativity floor and the optional speed cap."""
    v = 0.0 if raw < 0.0 else raw
    if v_max is not None and v > v_max:
        v = v_max
    return v


def speed_ideal(z1: ReducedShapeState, v1: float, u1: float, cfg: ControllerConfig) -> float:
    """Speed law with leader-turn compensation.

    v2 = -v1 sin(a1) + rho (u1 - mu1 cos(a1) + v1 f(rho)), then floored at 0
    and capped at cfg.v_max when configured.
    """
    if z1.rho < EPS_RHO:
        raise CoincidentAgents(f"rho={z1.rho:.3e} below {EPS_RHO:.1e}")
    raw = speed_ideal_raw(z1.rho, z1.alpha1, v1, u1,
                          cfg.mu1, cfg.potential.mu_rho, cfg.potential.rho0)
    return clamp_speed(raw, cfg.v_max)


def speed_robust(z1: ReducedShapeState, v1: float, cfg: ControllerConfig) -> float:
    """Leader-independent speed law: the ideal law without the u1 term."""
    if z1.rho < EPS_RHO:
        raise CoincidentAgents(f"rho={z1.rho:.3e} below {EPS_RHO:.1e}")
    raw = speed_robust_raw(z1.rho, z1.alpha1, v1,
                           cfg.mu1, cfg.potential.mu_rho, cfg.potential.rho0)
    return clamp_speed(raw, cfg.v_max)


def closed_form_alpha2(t, alpha2_0: float, mu2: float):
    """Exact solution of da2/dt = mu2 cos(a2).

    sin(a2(t)) = tanh(mu2 t + atanh(sin(a2(0)))), resolved on the branch
    continuously connected to a2(0). Accepts scalar or array t; returns the
    unwrapped angle (it may leave (-pi, pi] for initial bearings below -pi/2).

    Raises:
        ExcludedInitialCondition: a2(0) = -pi/2, the unstable equilibrium
            (indistinguishable from it in double precision).
    """
    t = np.asarray(t, dtype=float)
    w = wrap_angle(alpha2_0)
    offset = alpha2_0 - w
    s0 = math.sin(w)
    if s0 <= -1.0:
        raise ExcludedInitialCondition("alpha2(0) = -pi/2 never converges")
    if s0 >= 1.0:
        result = np.full_like(t, offset + 0.5 * math.pi)
        return result if result.ndim else float(result)
    s = np.tanh(mu2 * t + math.atanh(s0))
    if abs(w) < 0.5 * math.pi:
        alpha = np.arcsin(s)
    elif w > 0.0:
        alpha = math.pi - np.arcsin(s)
    else:
        alpha = -math.pi - np.arcsin(s)
    result = offset + alpha
    return result if result.ndim else float(result)


def saturate(value: float, bound: float, speed: bool = False) -> float:
    """Clamp to [-bound, bound], or to [0, bound] when ``speed`` is set."""
    if not bound > 0.0:
        raise ValueError(f"bound must be > 0, got {bound}")
    lo = 0.0 if speed else -bound
    if value < lo:
        return lo
    if value > bound:
        return bound
    return value
