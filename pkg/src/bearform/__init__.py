"""Constant-bearing leader-follower formation control.

Simulation of planar unicycle pairs and chains under a constant-bearing
steering law and feedback speed laws, with numerical certificates for
asymptotic stability, input-to-state stability, and periodic-orbit
convergence, plus a CLI for running the shipped experiment presets.
"""

__version__ = "0.1.0"

from .analysis import (DescentReport, LinearizationReport, LyapunovSample,
                       PeriodicityReport, detect_periodic_orbit, linearize_equilibrium,
                       lyapunov_v1, lyapunov_v1_dot, verify_descent)
from .control import (ControllerConfig, LeaderBounds, Mode, PotentialSpec,
                      closed_form_alpha2, potential_f, potential_f_prime, potential_g,
                      saturate, speed_ideal, speed_robust, steering_cb)
from .dynamics import (ControlPair, PoseRates, ReducedShapeRates, ShapeRates, reduced_rhs,
                       shape_rhs, world_rhs)
from .estimator import LeaderEstimate, MeasurementSeries, estimate_leader
from .geometry import (EPS_RHO, AgentState, ReducedShapeState, ShapeState, Vec2,
                       follower_from_shape, rotate, shape_from_world, wrap_angle)
from .integrator import (IntegratorConfig, Trajectory, integrate_adaptive,
                         integrate_fixed_rk4)
from .scenarios import (Constant, GaussianImpulse, LeaderProgram, RunResult,
                        ScenarioConfig, Sinusoid, Zero, eval_leader, run_chain,
                        run_two_agent)

__all__ = [
    "__version__",
    "AgentState", "ControlPair", "ControllerConfig", "Constant", "DescentReport",
    "EPS_RHO", "GaussianImpulse", "IntegratorConfig", "LeaderBounds", "LeaderEstimate",
    "LeaderProgram", "LinearizationReport", "LyapunovSample", "MeasurementSeries",
    "Mode", "PeriodicityReport", "PoseRates", "PotentialSpec", "ReducedShapeRates",
    "ReducedShapeState", "RunResult", "ScenarioConfig", "ShapeRates", "ShapeState",
    "Sinusoid", "Trajectory", "Vec2", "Zero",
    "closed_form_alpha2", "detect_periodic_orbit", "estimate_leader", "eval_leader",
    "follower_from_shape", "integrate_adaptive", "integrate_fixed_rk4",
    "linearize_equilibrium", "lyapunov_v1", "lyapunov_v1_dot", "potential_f",
    "potential_f_prime", "potential_g", "reduced_rhs", "rotate", "run_chain",
    "run_two_agent", "saturate", "shape_from_world", "shape_rhs", "speed_ideal",
    "speed_robust", "steering_cb", "verify_descent", "world_rhs", "wrap_angle",
]
