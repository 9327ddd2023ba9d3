"""Exception types shared across the package."""


class BearformError(Exception):
    """Base class for all package-specific errors."""


class CoincidentAgents(BearformError):
    """Two agents are closer than the shape-coordinate singularity threshold."""


class NonpositiveDistance(BearformError):
    """A distance argument that must be strictly positive was not."""


class ExcludedInitialCondition(BearformError):
    """Bearing initial condition sits on the unstable equilibrium of the steering law."""


class StepSizeUnderflow(BearformError):
    """Adaptive integrator needed a step below h_min (stiffness or singularity)."""


class NonFiniteState(BearformError):
    """Integration produced NaN or infinity."""


class SeriesTooShort(BearformError):
    """Measurement series has too few samples for the requested window."""


class DegenerateSpeed(BearformError):
    """Recovered leader speed is numerically zero, violating the positive-speed assumption."""


class WindowTooShort(BearformError):
    """Trajectory does not cover settle time plus two periods."""


class DescentViolation(BearformError):
    """Lyapunov descent check failed; carries the offending sample."""

    def __init__(self, message: str, sample=None):
        super().__init__(message)
        self.sample = sample


class ChainCollision(BearformError):
    """Two chain agents came within the coincidence threshold during integration."""


class BoundsViolation(BearformError):
    """Leader program evaluated outside its declared speed/steering bounds."""


class InfeasibleInitialState(BearformError):
    """Scenario initial states violate a precondition (e.g. coincident agents)."""


class ParseError(BearformError):
    """Configuration document is not well formed."""


class ValidationError(BearformError):
    """Configuration value violates an invariant. ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
