"""Exception hierarchy shared by all qdob modules."""


class QdobError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(QdobError, ValueError):
    """Hyperparameters or plant data do not describe a buildable observer."""


class EvaluationError(QdobError, ArithmeticError):
    """A transfer function could not be evaluated at the requested point."""


class PoleProximityError(EvaluationError):
    """The evaluation point lies (numerically) on a pole of the open loop."""


class SimulationError(QdobError, RuntimeError):
    """The closed-loop simulation diverged."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class InsufficientDataError(QdobError, ValueError):
    """Too few samples to run a signal test."""
