"""Configuration documents: parsing, validation, defaults, and presets.

The document format is YAML with a fixed nested key layout (see README for
the grammar). Every omitted field takes the default of the baseline two-agent
experiment, so a minimal document only needs the entries it changes. Parsing
produces a fully resolved :class:`ScenarioConfig`; ``config_to_dict`` gives
back the canonical resolved form, which is what run manifests echo and hash.
"""

from __future__ import annotations

import hashlib
import json
import math
from importlib import resources

import yaml

from .control import ControllerConfig, LeaderBounds, Mode, PotentialSpec
from .errors import InfeasibleInitialState, ParseError, ValidationError
from .geometry import AgentState, Vec2
from .integrator import IntegratorConfig
from .scenarios import (Constant, GaussianImpulse, LeaderProgram, ScenarioConfig, Sinusoid,
                        Zero, derive_bounds)

_TWO_AGENT_T_SPAN = (0.0, 40.0)
_CHAIN_T_SPAN = (0.0, 30.0)


def _require_mapping(node, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ValidationError(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: set[str], path: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        name = sorted(unknown)[0]
        where = f"{path}.{name}" if path else name
        raise ValidationError(where, "unknown field")


def _number(node: dict, key: str, path: str, default=None, *, positive=False,
            nonnegative=False, optional=False):
    if key not in node or node[key] is None:
        if key not in node and default is None and not optional:
            raise ValidationError(f"{path}.{key}", "required field is missing")
        if key in node and node[key] is None and optional:
            return None
        value = default
    else:
        value = node[key]
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}.{key}", f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{path}.{key}", "must be finite")
    if positive and not value > 0.0:
        raise ValidationError(f"{path}.{key}", f"must be > 0, got {value}")
    if nonnegative and value < 0.0:
        raise ValidationError(f"{path}.{key}", f"must be >= 0, got {value}")
    return value


def _parse_pose(node, path: str, default: tuple[float, float, float]) -> AgentState:
    node = _require_mapping(node, path)
    _check_keys(node, {"x", "y", "theta"}, path)
    x = _number(node, "x", path, default[0])
    y = _number(node, "y", path, default[1])
    theta = _number(node, "theta", path, default[2])
    return AgentState(Vec2(x, y), theta)


def _parse_steering(node, path: str):
    if node == "zero":
        return Zero()
    node = _require_mapping(node, path)
    if len(node) != 1:
        raise ValidationError(path, "expected exactly one of constant / sinusoid / "
                                    "gaussian_impulse / zero")
    kind, body = next(iter(node.items()))
    if kind == "zero":
        _check_keys(_require_mapping(body, path), set(), path)
        return Zero()
    if kind == "constant":
        if isinstance(body, bool) or not isinstance(body, (int, float)):
            raise ValidationError(f"{path}.constant", "expected a number")
        return Constant(float(body))
    if kind == "sinusoid":
        body = _require_mapping(body, f"{path}.sinusoid")
        _check_keys(body, {"offset", "amplitude", "omega"}, f"{path}.sinusoid")
        return Sinusoid(offset=_number(body, "offset", f"{path}.sinusoid", 0.0),
                        amplitude=_number(body, "amplitude", f"{path}.sinusoid"),
                        omega=_number(body, "omega", f"{path}.sinusoid", positive=True))
    if kind == "gaussian_impulse":
        body = _require_mapping(body, f"{path}.gaussian_impulse")
        _check_keys(body, {"amplitude", "sigma", "center"}, f"{path}.gaussian_impulse")
        return GaussianImpulse(
            amplitude=_number(body, "amplitude", f"{path}.gaussian_impulse"),
            sigma=_number(body, "sigma", f"{path}.gaussian_impulse", positive=True),
            center=_number(body, "center", f"{path}.gaussian_impulse"))
    raise ValidationError(f"{path}.{kind}", "unknown signal kind")


def _parse_leader(node, path: str) -> LeaderProgram:
    node = _require_mapping(node, path)
    _check_keys(node, {"v1", "u1", "bounds"}, path)

    v1_node = node.get("v1", {"constant": 0.5})
    v1 = _parse_steering(v1_node, f"{path}.v1")
    if not isinstance(v1, Constant):
        raise ValidationError(f"{path}.v1", "leader speed must be a constant program")
    if v1.value <= 0.0:
        raise ValidationError(f"{path}.v1.constant", f"must be > 0, got {v1.value}")

    u1_node = node.get("u1", {"sinusoid": {"offset": 0.5, "amplitude": 1.0,
                                           "omega": math.pi}})
    u1 = _parse_steering(u1_node, f"{path}.u1")

    if "bounds" in node and node["bounds"] is not None:
        bnode = _require_mapping(node["bounds"], f"{path}.bounds")
        _check_keys(bnode, {"k_v", "k_u"}, f"{path}.bounds")
        bounds = LeaderBounds(
            k_v=_number(bnode, "k_v", f"{path}.bounds", positive=True),
            k_u=_number(bnode, "k_u", f"{path}.bounds", positive=True))
    else:
        bounds = derive_bounds(v1, u1)
    return LeaderProgram(v1=v1, u1=u1, bounds=bounds)


def _parse_controller(node, path: str, mode: Mode) -> ControllerConfig:
    node = _require_mapping(node, path)
    _check_keys(node, {"mu1", "mu2", "potential", "v_max", "u_max"}, path)
    pnode = _require_mapping(node.get("potential"), f"{path}.potential")
    _check_keys(pnode, {"mu_rho", "rho0"}, f"{path}.potential")
    potential = PotentialSpec(
        mu_rho=_number(pnode, "mu_rho", f"{path}.potential", 2.0, positive=True),
        rho0=_number(pnode, "rho0", f"{path}.potential", 0.5, positive=True))
    return ControllerConfig(
        mu1=_number(node, "mu1", path, 1.0, positive=True),
        mu2=_number(node, "mu2", path, 2.0, positive=True),
        potential=potential, mode=mode,
        v_max=_number(node, "v_max", path, optional=True, positive=True),
        u_max=_number(node, "u_max", path, optional=True, positive=True))


def _parse_integrator(node, path: str, default_span: tuple[float, float]) -> IntegratorConfig:
    node = _require_mapping(node, path)
    _check_keys(node, {"rtol", "atol", "h_init", "h_min", "h_max", "t_span", "sample_dt"},
                path)
    span_node = node.get("t_span", list(default_span))
    if (not isinstance(span_node, (list, tuple)) or len(span_node) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in span_node)):
        raise ValidationError(f"{path}.t_span", "expected [t0, t1]")
    t_span = (float(span_node[0]), float(span_node[1]))
    try:
        return IntegratorConfig(
            t_span=t_span,
            rtol=_number(node, "rtol", path, 1e-5, positive=True),
            atol=_number(node, "atol", path, 1e-6, positive=True),
            h_init=_number(node, "h_init", path, 1e-2, positive=True),
            h_min=_number(node, "h_min", path, 1e-12, positive=True),
            h_max=_number(node, "h_max", path, 0.5, positive=True),
            sample_dt=_number(node, "sample_dt", path, 1e-2, positive=True))
    except ValueError as exc:
        raise ValidationError(path, str(exc)) from exc


def parse_config_dict(data: dict) -> ScenarioConfig:
    """Validate and resolve a configuration mapping into a ScenarioConfig."""
    data = _require_mapping(data, "")
    _check_keys(data, {"scenario", "mode", "leader", "agents", "controller", "integrator"},
                "")
    kind = data.get("scenario", "two_agent")
    if kind not in ("two_agent", "chain"):
        raise ValidationError("scenario", f"must be two_agent or chain, got {kind!r}")
    mode_name = data.get("mode", "ideal")
    if mode_name not in ("ideal", "robust"):
        raise ValidationError("mode", f"must be ideal or robust, got {mode_name!r}")
    if kind == "chain" and mode_name != "ideal":
        raise ValidationError("mode", "chain followers always run the ideal law")
    mode = Mode(mode_name)

    leader = _parse_leader(data.get("leader"), "leader")
    agents = _require_mapping(data.get("agents"), "agents")
    _check_keys(agents, {"leader", "followers"}, "agents")
    leader_state0 = _parse_pose(agents.get("leader"), "agents.leader",
                                (0.0, 0.0, math.pi / 4))
    followers_node = agents.get("followers", [{"x": 0.0, "y": 1.0, "theta": math.pi}])
    if not isinstance(followers_node, list) or not followers_node:
        raise ValidationError("agents.followers", "expected a non-empty list of poses")
    followers = tuple(_parse_pose(f, f"agents.followers[{i}]", (0.0, 1.0, math.pi))
                      for i, f in enumerate(followers_node))
    if kind == "two_agent" and len(followers) != 1:
        raise ValidationError("agents.followers",
                              f"two_agent scenario needs exactly 1 follower, got {len(followers)}")

    controller = _parse_controller(data.get("controller"), "controller", mode)
    default_span = _CHAIN_T_SPAN if kind == "chain" else _TWO_AGENT_T_SPAN
    integrator = _parse_integrator(data.get("integrator"), "integrator", default_span)

    try:
        return ScenarioConfig(kind=kind, leader=leader, leader_state0=leader_state0,
                              follower_states0=followers, controller=controller,
                              integrator=integrator)
    except InfeasibleInitialState as exc:
        raise ValidationError("agents", str(exc)) from exc


def parse_config(text: str) -> ScenarioConfig:
    """Parse a YAML configuration document.

    Raises:
        ParseError: the document is not valid YAML or not a mapping.
        ValidationError: a field violates its invariant (message names the
            offending field path).
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed configuration document: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError(f"configuration root must be a mapping, got {type(data).__name__}")
    return parse_config_dict(data)


def _signal_to_node(sig):
    if isinstance(sig, Zero):
        return "zero"
    if isinstance(sig, Constant):
        return {"constant": sig.value}
    if isinstance(sig, Sinusoid):
        return {"sinusoid": {"offset": sig.offset, "amplitude": sig.amplitude,
                             "omega": sig.omega}}
    if isinstance(sig, GaussianImpulse):
        return {"gaussian_impulse": {"amplitude": sig.amplitude, "sigma": sig.sigma,
                                     "center": sig.center}}
    raise TypeError(f"unknown signal {sig!r}")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical fully resolved form of a config; round-trips through parsing."""
    return {
        "scenario": cfg.kind,
        "mode": cfg.controller.mode.value,
        "leader": {
            "v1": _signal_to_node(cfg.leader.v1),
            "u1": _signal_to_node(cfg.leader.u1),
            "bounds": {"k_v": cfg.leader.bounds.k_v, "k_u": cfg.leader.bounds.k_u},
        },
        "agents": {
            "leader": {"x": cfg.leader_state0.r.x, "y": cfg.leader_state0.r.y,
                       "theta": cfg.leader_state0.theta},
            "followers": [{"x": s.r.x, "y": s.r.y, "theta": s.theta}
                          for s in cfg.follower_states0],
        },
        "controller": {
            "mu1": cfg.controller.mu1,
            "mu2": cfg.controller.mu2,
            "potential": {"mu_rho": cfg.controller.potential.mu_rho,
                          "rho0": cfg.controller.potential.rho0},
            "v_max": cfg.controller.v_max,
            "u_max": cfg.controller.u_max,
        },
        "integrator": {
            "rtol": cfg.integrator.rtol,
            "atol": cfg.integrator.atol,
            "h_init": cfg.integrator.h_init,
            "h_min": cfg.integrator.h_min,
            "h_max": cfg.integrator.h_max,
            "t_span": list(cfg.integrator.t_span),
            "sample_dt": cfg.integrator.sample_dt,
        },
    }


def config_hash(cfg: ScenarioConfig) -> str:
    """Deterministic digest of the resolved configuration."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def list_presets() -> list[str]:
    """Names of the configuration presets shipped with the package."""
    root = resources.files("bearform").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def preset_text(name: str) -> str:
    """Raw YAML text of a shipped preset."""
    path = resources.files("bearform").joinpath("presets").joinpath(f"{name}.yaml")
    try:
        return path.read_text()
    except FileNotFoundError:
        raise ParseError(f"no preset named {name!r}; available: {', '.join(list_presets())}")


def load_preset(name: str) -> ScenarioConfig:
    return parse_config(preset_text(name))
