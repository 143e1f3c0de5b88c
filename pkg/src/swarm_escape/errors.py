"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input."""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class SimulationError(RuntimeError):
    """A run produced an unusable state (non-finite values, degenerate geometry)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class CaptureError(SimulationError):
    """An agent sits exactly on the predator, so the escape direction is undefined."""

    def __init__(self, agent: int, step: int | None = None):
        super().__init__(f"agent {agent} coincides with the predator", step)
        self.agent = agent


class SweepError(RuntimeError):
    """A sweep cannot produce a result, e.g. every trial at a grid point failed."""
