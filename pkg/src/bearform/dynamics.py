"""Right-hand sides: world-frame unicycle kinematics and shape dynamics.

All functions here are pure and stateless; time dependence only enters through
the leader program at the scenario layer. The rho guard raises instead of
clamping so that stability experiments are never silently corrupted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CoincidentAgents
from .geometry import EPS_RHO, AgentState, ReducedShapeState, ShapeState, Vec2


@dataclass(frozen=True)
class ControlPair:
    """Speed and steering input of one agent: v (m/s, nonnegative), u (rad/s)."""

    v: float
    u: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.u)):
            raise ValueError(f"controls must be finite, got ({self.v}, {self.u})")
        if self.v < 0.0:
            raise ValueError(f"linear speed must be nonnegative, got {self.v}")


@dataclass(frozen=True)
class PoseRates:
    """Time derivative of a world pose."""

    dx: float
    dy: float
    dtheta: float


@dataclass(frozen=True)
class ShapeRates:
    """Time derivative of (rho, alpha1, alpha2)."""

    drho: float
    dalpha1: float
    dalpha2: float


@dataclass(frozen=True)
class ReducedShapeRates:
    """Time derivative of (rho, alpha1) on the alpha2 = pi/2 manifold."""

    drho: float
    dalpha1: float


def world_rhs(s: AgentState, c: ControlPair) -> PoseRates:
    """Unicycle kinematics: dr = v * tangent, dtheta = u."""
    return PoseRates(c.v * math.cos(s.theta), c.v * math.sin(s.theta), c.u)


def world_position_rate(s: AgentState, c: ControlPair) -> Vec2:
    return Vec2(c.v * math.cos(s.theta), c.v * math.sin(s.theta))


def shape_rates_raw(rho: float, alpha1: float, alpha2: float,
                    v1: float, u1: float, v2: float, u2: float) -> tuple[float, float, float]:
    """Float kernel for the full shape dynamics; no guards, used in hot loops."""
    coupling = (v1 * math.sin(alpha1) + v2 * math.sin(alpha2)) / rho
    drho = -v1 * math.cos(alpha1) - v2 * math.cos(alpha2)
    return drho, -u1 + coupling, -u2 + coupling


def shape_rhs(z: ShapeState, leader: ControlPair, follower: ControlPair) -> ShapeRates:
    """Full shape dynamics of a leader-follower pair.

    drho    = -v1 cos(a1) - v2 cos(a2)
    dalpha1 = -u1 + (v1 sin(a1) + v2 sin(a2)) / rho
    dalpha2 = -u2 + (v1 sin(a1) + v2 sin(a2)) / rho

    Raises:
        CoincidentAgents: rho below the singularity threshold.
    """
    if z.rho < EPS_RHO:
        raise CoincidentAgents(f"rho={z.rho:.3e} below {EPS_RHO:.1e}")
    drho, da1, da2 = shape_rates_raw(z.rho, z.alpha1, z.alpha2,
                                     leader.v, leader.u, follower.v, follower.u)
    return ShapeRates(drho, da1, da2)


def reduced_rates_raw(rho: float, alpha1: float, v1: float, u1: float,
                      v2: float) -> tuple[float, float]:
    """Float kernel for the reduced dynamics."""
    return (-v1 * math.cos(alpha1),
            -u1 + (v1 * math.sin(alpha1) + v2) / rho)


def reduced_rhs(z1: ReducedShapeState, leader: ControlPair, v2: float) -> ReducedShapeRates:
    """Shape dynamics restricted to the alpha2 = pi/2 manifold.

    Raises:
        CoincidentAgents: rho below the singularity threshold.
    """
    if z1.rho < EPS_RHO:
        raise CoincidentAgents(f"rho={z1.rho:.3e} below {EPS_RHO:.1e}")
    drho, da1 = reduced_rates_raw(z1.rho, z1.alpha1, leader.v, leader.u, v2)
    return ReducedShapeRates(drho, da1)
