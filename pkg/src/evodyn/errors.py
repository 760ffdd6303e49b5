"""Exception hierarchy shared by the simulation and analysis modules."""


class EvodynError(Exception):
    """Base class for all package errors."""


class DimensionError(EvodynError, ValueError):
    """Arrays that must agree in shape do not."""


class ValidationError(EvodynError, ValueError):
    """One or more model constraints are violated.

    ``violations`` holds the individual :class:`~evodyn.model.Violation` records.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ParameterRangeError(EvodynError, ValueError):
    """A derived probability or strategy falls outside its admissible range."""


class InfeasibleMomentsError(EvodynError, ValueError):
    """No payoff distribution on the simplex realizes the requested moments."""


class UnsupportedFamilyError(EvodynError, TypeError):
    """The operation needs a finite-support payoff family."""


class DynamicsUndefinedError(EvodynError, ArithmeticError):
    """Zero aggregate bet on an asset that pays off."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class StepSizeError(EvodynError, ArithmeticError):
    """The integrator needed a large correction to stay on the simplex."""


class PreconditionError(EvodynError, ValueError):
    """A theorem's standing assumption does not hold for the given inputs."""


class RefusalError(EvodynError):
    """A runner declined to run because the configuration is outside its scope."""

    def __init__(self, message, classification=None):
        self.classification = classification
        super().__init__(message)
