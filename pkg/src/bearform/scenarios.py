"""Named experiments: two-agent runs (ideal/robust) and the N-agent chain.

A two-agent run integrates the full 3-state shape dynamics together with the
leader's world pose; the follower's world trajectory is reconstructed from the
relative geometry afterward. A chain run integrates all world poses as one
state vector, with each agent treating its predecessor as leader and consuming
the predecessor's actually-applied (post-saturation) controls -- that is what
a sensing-based follower would observe, and it is what lets a steering impulse
propagate down the chain as a whip.

Applied controls are recomputed on the output sample grid after integration
(they are deterministic functions of time and state), which is also where
saturation and speed-floor events are detected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import DescentReport, PeriodicityReport, detect_periodic_orbit, verify_descent
from .control import (ControllerConfig, LeaderBounds, Mode, clamp_speed, speed_ideal_raw,
                      speed_robust_raw, steering_cb_raw)
from .dynamics import ControlPair, shape_rates_raw
from .errors import BoundsViolation, ChainCollision, CoincidentAgents, InfeasibleInitialState
from .geometry import (EPS_RHO, AgentState, follower_from_shape_arrays, shape_from_world,
                       shape_from_world_arrays)
from .integrator import IntegratorConfig, Trajectory, integrate_adaptive

_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class Constant:
    """Constant signal."""

    value: float

    def at(self, t: float) -> float:
        return self.value

    def sample(self, times: np.ndarray) -> np.ndarray:
        return np.full(len(times), self.value)

    def peak(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class Sinusoid:
    """offset + amplitude * sin(omega * t)."""

    offset: float
    amplitude: float
    omega: float

    def at(self, t: float) -> float:
        return self.offset + self.amplitude * math.sin(self.omega * t)

    def sample(self, times: np.ndarray) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(self.omega * times)

    def peak(self) -> float:
        return abs(self.offset) + abs(self.amplitude)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


@dataclass(frozen=True)
class GaussianImpulse:
    """amplitude * exp(-(t - center)^2 / (2 sigma^2))."""

    amplitude: float
    sigma: float
    center: float

    def at(self, t: float) -> float:
        arg = (t - self.center) / self.sigma
        return self.amplitude * math.exp(-0.5 * arg * arg)

    def sample(self, times: np.ndarray) -> np.ndarray:
        arg = (times - self.center) / self.sigma
        return self.amplitude * np.exp(-0.5 * arg * arg)

    def peak(self) -> float:
        return abs(self.amplitude)


@dataclass(frozen=True)
class Zero:
    """Identically zero signal."""

    def at(self, t: float) -> float:
        return 0.0

    def sample(self, times: np.ndarray) -> np.ndarray:
        return np.zeros(len(times))

    def peak(self) -> float:
        return 0.0


SteeringSignal = Constant | Sinusoid | GaussianImpulse | Zero


def derive_bounds(v1: Constant, u1: SteeringSignal) -> LeaderBounds:
    """Tight bounds from the program shapes (used when none are declared)."""
    return LeaderBounds(k_v=v1.peak(), k_u=max(u1.peak(), 1e-9))


@dataclass(frozen=True)
class LeaderProgram:
    """Open-loop leader signals (v1, u1) with their declared bounds."""

    v1: Constant
    u1: SteeringSignal
    bounds: LeaderBounds

    def __post_init__(self):
        if not isinstance(self.v1, Constant):
            raise ValueError("leader speed program must be constant")
        if self.v1.value <= 0.0:
            raise ValueError(f"leader speed must be > 0, got {self.v1.value}")

    def at(self, t: float) -> tuple[float, float]:
        """Evaluate (v1, u1), asserting the declared bounds."""
        v = self.v1.at(t)
        u = self.u1.at(t)
        if not 0.0 < v <= self.bounds.k_v + _BOUND_SLACK:
            raise BoundsViolation(f"v1(t={t:.6g}) = {v} outside (0, {self.bounds.k_v}]")
        if abs(u) > self.bounds.k_u + _BOUND_SLACK:
            raise BoundsViolation(f"|u1(t={t:.6g})| = {abs(u)} > {self.bounds.k_u}")
        return v, u

    def sample(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = self.v1.sample(times)
        u = self.u1.sample(times)
        if np.any(v <= 0.0) or np.any(v > self.bounds.k_v + _BOUND_SLACK):
            raise BoundsViolation("v1 outside (0, k_v] on the sample grid")
        if np.any(np.abs(u) > self.bounds.k_u + _BOUND_SLACK):
            raise BoundsViolation("|u1| > k_u on the sample grid")
        return v, u

    @property
    def period(self) -> float | None:
        return getattr(self.u1, "period", None)


def eval_leader(prog: LeaderProgram, t: float) -> ControlPair:
    """Evaluate the leader program at time t as a control pair."""
    v, u = prog.at(t)
    return ControlPair(v, u)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run one experiment."""

    kind: str  # "two_agent" or "chain"
    leader: LeaderProgram
    leader_state0: AgentState
    follower_states0: tuple[AgentState, ...]
    controller: ControllerConfig
    integrator: IntegratorConfig

    def __post_init__(self):
        if self.kind not in ("two_agent", "chain"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if len(self.follower_states0) < 1:
            raise InfeasibleInitialState("need at least one follower")
        states = [self.leader_state0, *self.follower_states0]
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                if (states[i].r - states[j].r).norm() <= EPS_RHO:
                    raise InfeasibleInitialState(
                        f"agents {i + 1} and {j + 1} start closer than {EPS_RHO} m")

    @property
    def n_agents(self) -> int:
        return 1 + len(self.follower_states0)


@dataclass
class RunResult:
    """Sampled output of one experiment.

    ``poses`` is (n, N, 3) world poses (x, y, theta); ``controls`` is
    (n, N, 2) applied (v, u); ``shapes`` is (n, N-1, 3) per consecutive pair
    (rho, alpha1, alpha2). ``clamped`` marks samples where the speed floor or
    a saturation bound was binding for each agent. ``descent`` holds one
    report per pair; ``periodicity`` is present for robust runs driven by a
    periodic leader when the horizon allows it.
    """

    config: ScenarioConfig
    mode: Mode
    times: np.ndarray
    poses: np.ndarray
    controls: np.ndarray
    shapes: np.ndarray
    clamped: np.ndarray
    events: list[tuple[float, str]] = field(default_factory=list)
    descent: list[DescentReport] = field(default_factory=list)
    periodicity: PeriodicityReport | None = None

    @property
    def n_agents(self) -> int:
        return self.poses.shape[1]

    def shape_traj(self, pair: int = 0) -> Trajectory:
        return Trajectory(times=self.times, states=self.shapes[:, pair, :])

    def world_traj(self) -> Trajectory:
        n = len(self.times)
        return Trajectory(times=self.times, states=self.poses.reshape(n, -1))

    def control_traj(self) -> Trajectory:
        n = len(self.times)
        labels = []
        for i in range(self.n_agents):
            labels += [f"v{i + 1}", f"u{i + 1}"]
        return Trajectory(times=self.times, states=self.controls.reshape(n, -1),
                          control_labels=tuple(labels))


def _follower_commands(rho: float, a1: float, a2: float, v1: float, u1: float,
                       ctrl: ControllerConfig, ideal: bool) -> tuple[float, float, int]:
    """Applied (v2, u2) for one follower plus a bitmask of binding clamps.

    Bits: 1 = speed floor, 2 = v_max cap, 4 = u_max cap. The mask doubles as
    the integrator's kink witness (the closed loop is only C0 where a clamp
    engages or releases).
    """
    pot = ctrl.potential
    if ideal:
        v_raw = speed_ideal_raw(rho, a1, v1, u1, ctrl.mu1, pot.mu_rho, pot.rho0)
    else:
        v_raw = speed_robust_raw(rho, a1, v1, ctrl.mu1, pot.mu_rho, pot.rho0)
    v2 = clamp_speed(v_raw, ctrl.v_max)
    u_raw = steering_cb_raw(rho, a1, a2, v1, v2, ctrl.mu2)
    u2 = u_raw
    if ctrl.u_max is not None:
        u2 = max(-ctrl.u_max, min(ctrl.u_max, u_raw))
    sig = 0
    if v_raw < 0.0:
        sig |= 1
    elif v2 != v_raw:
        sig |= 2
    if u2 != u_raw:
        sig |= 4
    return v2, u2, sig


def _two_agent_rhs(prog: LeaderProgram, ctrl: ControllerConfig, ideal: bool):
    """State layout: [rho, alpha1, alpha2, x1, y1, theta1]."""

    def rhs(t, y):
        rho = y[0]
        if rho < EPS_RHO:
            raise CoincidentAgents(f"rho={rho:.3e} at t={t:.6g}")
        a1 = y[1]
        a2 = y[2]
        v1, u1 = prog.at(t)
        v2, u2, _ = _follower_commands(rho, a1, a2, v1, u1, ctrl, ideal)
        drho, da1, da2 = shape_rates_raw(rho, a1, a2, v1, u1, v2, u2)
        th1 = y[5]
        return np.array([drho, da1, da2,
                         v1 * math.cos(th1), v1 * math.sin(th1), u1])

    def clamp_witness(t, y):
        v1, u1 = prog.at(t)
        return _follower_commands(y[0], y[1], y[2], v1, u1, ctrl, ideal)[2]

    return rhs, clamp_witness


def _widen_with_branch_events(times: np.ndarray, events: list[tuple[float, str]],
                              mask: np.ndarray) -> np.ndarray:
    """Also exclude samples bracketing an integrator branch switch.

    The sample-grid clamp mask misses saturations that engage and release
    within one sample interval; the integrator's witness sees them. Used only
    for certificate checks, never for event reporting.
    """
    widened = mask.copy()
    n = len(times)
    for tau, tag in events:
        if not tag.startswith("branch:"):
            continue
        i = int(np.searchsorted(times, tau))
        for j in (i - 1, i):
            if 0 <= j < n:
                widened[j] = True
    return widened


def _events_from_masks(times: np.ndarray, masks: dict[str, np.ndarray]) -> list[tuple[float, str]]:
    """Turn per-sample boolean masks into (time, "tag:on/off") transitions."""
    events = []
    for tag, mask in masks.items():
        if not np.any(mask):
            continue
        prev = False
        for i, active in enumerate(mask):
            if active and not prev:
                events.append((float(times[i]), f"{tag}:on"))
            elif prev and not active:
                events.append((float(times[i]), f"{tag}:off"))
            prev = bool(active)
    events.sort(key=lambda e: (e[0], e[1]))
    return events


def run_two_agent(cfg: ScenarioConfig, mode: Mode | None = None) -> RunResult:
    """Integrate the full two-agent closed loop and attach certificates.

    The steering command comes from the constant-bearing law and the speed
    command from the selected law evaluated on the current (rho, alpha1) --
    no alpha2 = pi/2 assumption is made inside the loop.
    """
    if cfg.n_agents != 2:
        raise InfeasibleInitialState(f"two-agent run needs 2 agents, got {cfg.n_agents}")
    ctrl = cfg.controller if mode is None else replace(cfg.controller, mode=mode)
    ideal = ctrl.mode is Mode.IDEAL

    leader0 = cfg.leader_state0
    try:
        z0 = shape_from_world(leader0, cfg.follower_states0[0])
    except CoincidentAgents as exc:
        raise InfeasibleInitialState(str(exc)) from exc
    y0 = np.array([z0.rho, z0.alpha1, z0.alpha2, leader0.r.x, leader0.r.y, leader0.theta])

    rhs, clamp_witness = _two_agent_rhs(cfg.leader, ctrl, ideal)
    traj = integrate_adaptive(rhs, y0, cfg.integrator, witness=clamp_witness)
    times = traj.times
    n = len(times)

    rho = traj.states[:, 0]
    a1 = traj.states[:, 1]
    a2 = traj.states[:, 2]
    v1, u1 = cfg.leader.sample(times)

    v2 = np.empty(n)
    u2 = np.empty(n)
    clamp_f = np.zeros(n, dtype=bool)
    for i in range(n):
        v2[i], u2[i], sig = _follower_commands(
            rho[i], a1[i], a2[i], v1[i], u1[i], ctrl, ideal)
        clamp_f[i] = sig != 0

    x2, y2, th2 = follower_from_shape_arrays(
        traj.states[:, 3], traj.states[:, 4], traj.states[:, 5], rho, a1, a2)

    poses = np.empty((n, 2, 3))
    poses[:, 0, 0] = traj.states[:, 3]
    poses[:, 0, 1] = traj.states[:, 4]
    poses[:, 0, 2] = traj.states[:, 5]
    poses[:, 1, 0] = x2
    poses[:, 1, 1] = y2
    poses[:, 1, 2] = th2
    controls = np.empty((n, 2, 2))
    controls[:, 0, 0] = v1
    controls[:, 0, 1] = u1
    controls[:, 1, 0] = v2
    controls[:, 1, 1] = u2
    shapes = traj.states[:, :3].reshape(n, 1, 3)
    clamped = np.zeros((n, 2), dtype=bool)
    clamped[:, 1] = clamp_f

    events = _events_from_masks(times, {"agent2:clamp": clamp_f})
    descent = verify_descent(Trajectory(times=times, states=traj.states[:, :3]),
                             ctrl, u1, cfg.leader.bounds.k_u,
                             clamped=_widen_with_branch_events(times, traj.events, clamp_f))

    periodicity = None
    period = cfg.leader.period
    if ctrl.mode is Mode.ROBUST and period is not None:
        settle = times[0] + 0.75 * (times[-1] - times[0])
        if times[-1] >= settle + 2.0 * period:
            periodicity = detect_periodic_orbit(
                Trajectory(times=times, states=traj.states[:, :2]), period, settle)

    return RunResult(config=cfg, mode=ctrl.mode, times=times, poses=poses,
                     controls=controls, shapes=shapes, clamped=clamped, events=events,
                     descent=[descent], periodicity=periodicity)


def _chain_rhs(prog: LeaderProgram, ctrl: ControllerConfig, n_agents: int):
    """State layout: [x1, y1, th1, x2, y2, th2, ...]; followers run the ideal law."""

    def cascade(t, y, dy):
        sig_all = 0
        v_prev, u_prev = prog.at(t)
        if dy is not None:
            dy[0] = v_prev * math.cos(y[2])
            dy[1] = v_prev * math.sin(y[2])
            dy[2] = u_prev
        for i in range(n_agents - 1):
            b = 3 * i
            f = 3 * (i + 1)
            dx = y[f] - y[b]
            dyv = y[f + 1] - y[b + 1]
            rho = math.hypot(dx, dyv)
            if rho <= EPS_RHO:
                raise ChainCollision(
                    f"agents {i + 1} and {i + 2} collided at t={t:.6g}")
            a1 = math.atan2(dyv, dx) - y[b + 2]
            a2 = math.atan2(-dyv, -dx) - y[f + 2]
            v, u, sig = _follower_commands(rho, a1, a2, v_prev, u_prev, ctrl, True)
            sig_all |= sig << (3 * i)
            if dy is not None:
                dy[f] = v * math.cos(y[f + 2])
                dy[f + 1] = v * math.sin(y[f + 2])
                dy[f + 2] = u
            v_prev, u_prev = v, u
        return sig_all

    def rhs(t, y):
        dy = np.empty(3 * n_agents)
        cascade(t, y, dy)
        return dy

    def clamp_witness(t, y):
        return cascade(t, y, None)

    return rhs, clamp_witness


def run_chain(cfg: ScenarioConfig) -> RunResult:
    """Integrate the chain network in world coordinates.

    Agent 1 follows the leader program; each agent i+1 runs the ideal control
    stack against agent i, reading agent i's applied (post-saturation)
    controls as its leader inputs.
    """
    n_agents = cfg.n_agents
    ctrl = cfg.controller
    states0 = [cfg.leader_state0, *cfg.follower_states0]
    y0 = np.empty(3 * n_agents)
    for i, s in enumerate(states0):
        y0[3 * i:3 * i + 3] = (s.r.x, s.r.y, s.theta)

    rhs, clamp_witness = _chain_rhs(cfg.leader, ctrl, n_agents)
    traj = integrate_adaptive(rhs, y0, cfg.integrator, witness=clamp_witness)
    times = traj.times
    n = len(times)
    poses = traj.states.reshape(n, n_agents, 3)

    # All-pairs collision audit on the sample grid (the RHS only watches
    # consecutive pairs, which are the dynamically singular ones).
    for i in range(n_agents):
        for j in range(i + 1, n_agents):
            d = np.hypot(poses[:, j, 0] - poses[:, i, 0], poses[:, j, 1] - poses[:, i, 1])
            if np.any(d <= EPS_RHO):
                k = int(np.argmax(d <= EPS_RHO))
                raise ChainCollision(
                    f"agents {i + 1} and {j + 1} within {EPS_RHO} m at t={times[k]:.6g}")

    controls = np.empty((n, n_agents, 2))
    clamped = np.zeros((n, n_agents), dtype=bool)
    v1, u1 = cfg.leader.sample(times)
    controls[:, 0, 0] = v1
    controls[:, 0, 1] = u1
    shapes = np.empty((n, n_agents - 1, 3))
    for p in range(n_agents - 1):
        rho, a1, a2 = shape_from_world_arrays(
            poses[:, p, 0], poses[:, p, 1], poses[:, p, 2],
            poses[:, p + 1, 0], poses[:, p + 1, 1], poses[:, p + 1, 2])
        shapes[:, p, 0] = rho
        shapes[:, p, 1] = np.unwrap(a1)
        shapes[:, p, 2] = np.unwrap(a2)
        for i in range(n):
            v, u, sig = _follower_commands(
                shapes[i, p, 0], shapes[i, p, 1], shapes[i, p, 2],
                controls[i, p, 0], controls[i, p, 1], ctrl, True)
            controls[i, p + 1, 0] = v
            controls[i, p + 1, 1] = u
            clamped[i, p + 1] = sig != 0

    masks = {f"agent{p + 2}:clamp": clamped[:, p + 1] for p in range(n_agents - 1)}
    events = _events_from_masks(times, masks)

    ideal_ctrl = replace(ctrl, mode=Mode.IDEAL)
    descent = []
    for p in range(n_agents - 1):
        descent.append(verify_descent(
            Trajectory(times=times, states=shapes[:, p, :]), ideal_ctrl,
            controls[:, p, 1], cfg.leader.bounds.k_u,
            clamped=_widen_with_branch_events(times, traj.events, clamped[:, p + 1])))

    return RunResult(config=cfg, mode=Mode.IDEAL, times=times, poses=poses,
                     controls=controls, shapes=shapes, clamped=clamped,
                     events=events, descent=descent, periodicity=None)
