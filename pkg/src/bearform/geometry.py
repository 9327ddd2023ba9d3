"""Planar poses, rotations, and the world <-> shape-coordinate chart.

Shape coordinates describe the relative geometry of a leader-follower pair:
the separation distance rho and the two bearing angles alpha1 (leader's
bearing to the follower) and alpha2 (follower's bearing to the leader).
They are invariant under rigid motions of the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentAgents

TWO_PI = 2.0 * math.pi

# Below this separation the shape chart is numerically meaningless (it divides
# by rho); operations guard against it rather than clamp.
EPS_RHO = 1e-6


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`."""
    wrapped = np.remainder(np.asarray(angles, dtype=float) + math.pi, TWO_PI) - math.pi
    # np.remainder maps to [-pi, pi); move the closed end to +pi
    return np.where(wrapped == -math.pi, math.pi, wrapped)


def angle_difference(a, b):
    """Difference a - b wrapped to (-pi, pi]; works on scalars and arrays."""
    if np.isscalar(a) and np.isscalar(b):
        return wrap_angle(a - b)
    return wrap_angles(np.asarray(a) - np.asarray(b))


@dataclass(frozen=True)
class Vec2:
    """Planar vector in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Vec2 components must be finite, got ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scaled(self, s: float) -> "Vec2":
        return Vec2(s * self.x, s * self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)


def rotate(angle: float, v: Vec2) -> Vec2:
    """Rotate ``v`` counterclockwise by ``angle`` (radians)."""
    c = math.cos(angle)
    s = math.sin(angle)
    return Vec2(c * v.x - s * v.y, s * v.x + c * v.y)


@dataclass(frozen=True)
class AgentState:
    """World-frame pose of one unicycle: position and heading angle.

    The body frame (unit tangent, unit normal) is derived from the heading on
    demand, so it is orthonormal with determinant +1 by construction.
    """

    r: Vec2
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"heading must be finite, got {self.theta}")

    @property
    def tangent(self) -> Vec2:
        return Vec2(math.cos(self.theta), math.sin(self.theta))

    @property
    def normal(self) -> Vec2:
        return Vec2(-math.sin(self.theta), math.cos(self.theta))


@dataclass(frozen=True)
class ShapeState:
    """Relative coordinates (rho, alpha1, alpha2) of a leader-follower pair.

    Angles are wrapped to (-pi, pi] at construction; integration state is kept
    as raw unwrapped arrays elsewhere.
    """

    rho: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0.0):
            raise ValueError(f"rho must be finite and > 0, got {self.rho}")
        object.__setattr__(self, "alpha1", wrap_angle(self.alpha1))
        object.__setattr__(self, "alpha2", wrap_angle(self.alpha2))


@dataclass(frozen=True)
class ReducedShapeState:
    """The (rho, alpha1) pair on the alpha2 = pi/2 manifold."""

    rho: float
    alpha1: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0.0):
            raise ValueError(f"rho must be finite and > 0, got {self.rho}")


def shape_from_world(leader: AgentState, follower: AgentState) -> ShapeState:
    """Compute the shape coordinates of a pose pair.

    rho is the separation; alpha1 rotates the leader's tangent onto the unit
    vector toward the follower, alpha2 rotates the follower's tangent onto the
    unit vector toward the leader.

    Raises:
        CoincidentAgents: separation is at or below ``EPS_RHO``.
    """
    r21 = follower.r - leader.r
    rho = r21.norm()
    if rho <= EPS_RHO:
        raise CoincidentAgents(f"agents {rho:.3e} m apart (threshold {EPS_RHO:.1e})")
    alpha1 = wrap_angle(r21.angle() - leader.theta)
    alpha2 = wrap_angle(math.atan2(-r21.y, -r21.x) - follower.theta)
    return ShapeState(rho, alpha1, alpha2)


def follower_from_shape(leader: AgentState, z: ShapeState) -> AgentState:
    """Reconstruct the follower pose from the leader pose and shape state.

    Inverse of :func:`shape_from_world`: the follower sits at distance rho
    along the leader's tangent rotated by alpha1, heading chosen so its
    bearing back to the leader is alpha2.
    """
    bearing = leader.theta + z.alpha1
    r2 = Vec2(leader.r.x + z.rho * math.cos(bearing), leader.r.y + z.rho * math.sin(bearing))
    theta2 = wrap_angle(bearing + math.pi - z.alpha2)
    return AgentState(r2, theta2)


def shape_from_world_arrays(x1, y1, th1, x2, y2, th2):
    """Vectorized shape extraction for trajectory post-processing.

    Returns (rho, alpha1, alpha2) arrays with angles wrapped to (-pi, pi].
    """
    dx = np.asarray(x2) - np.asarray(x1)
    dy = np.asarray(y2) - np.asarray(y1)
    rho = np.hypot(dx, dy)
    alpha1 = wrap_angles(np.arctan2(dy, dx) - th1)
    alpha2 = wrap_angles(np.arctan2(-dy, -dx) - th2)
    return rho, alpha1, alpha2


def follower_from_shape_arrays(x1, y1, th1, rho, alpha1, alpha2):
    """Vectorized pose reconstruction; returns (x2, y2, theta2) arrays."""
    bearing = np.asarray(th1) + np.asarray(alpha1)
    x2 = np.asarray(x1) + rho * np.cos(bearing)
    y2 = np.asarray(y1) + rho * np.sin(bearing)
    theta2 = wrap_angles(bearing + math.pi - np.asarray(alpha2))
    return x2, y2, theta2
