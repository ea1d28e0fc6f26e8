"""
Exceptions raised by the sampler, the estimators and the experiment runner.
"""


class BridgeError(Exception):
    """
    Base class of every error raised on purpose by this project.
    """


class ValidationError(BridgeError, ValueError):
    """
    A parameter failed validation.

    Attributes
    ----------
    field: str
        Name of the offending parameter.
    """

    def __init__(self, field: str, message: str):
        super().__init__('{0}: {1}'.format(field, message))
        self.field = field


class DomainError(BridgeError, ValueError):
    """
    An argument lies outside the domain of an operation.
    """


class DivergenceError(BridgeError, ArithmeticError):
    """
    A radial ode integral does not converge.

    Attributes
    ----------
    integral: str
        Which integral failed, 'inner', 'outer' or 'c2'.
    """

    def __init__(self, integral: str, message: str):
        super().__init__('{0} integral: {1}'.format(integral, message))
        self.integral = integral


class PotentialEvaluationError(BridgeError, ArithmeticError):
    """
    A potential evaluator failed at s.
    """

    def __init__(self, s: float, message: str):
        super().__init__('evaluation failed at s={0}: {1}'.format(s, message))
        self.s = s


class SingularConfigurationError(BridgeError, ArithmeticError):
    """
    A singular potential was evaluated at a coincidence of two path points.

    Attributes
    ----------
    indices: tuple
        (k, l, j) for the self energy, (k, i, j) for the external energy, (i, j, t) for the pair energy.
    """

    def __init__(self, indices: tuple, message: str = 'singular potential evaluated at distance 0'):
        super().__init__('{0} at {1}'.format(message, indices))
        self.indices = tuple(int(index) for index in indices)


class DegenerateEstimateError(BridgeError, ArithmeticError):
    """
    Every denominator weight of an estimate vanished.
    """

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ModeError(BridgeError, ValueError):
    """
    The external world is in the wrong mode for the operation.
    """


class SizeError(BridgeError, ValueError):
    """
    A problem is too large to be enumerated exactly.
    """


class UncertifiedPotentialError(BridgeError, ValueError):
    """
    A potential required to be superharmonic failed its certification.

    Attributes
    ----------
    reports: dict
        Potential label -> SuperharmonicReport.
    """

    def __init__(self, reports: dict):
        failed = ', '.join('{0} (worst {1} at s={2})'.format(label, report.worst_value, report.worst_s)
                           for label, report in reports.items() if not report.passed)
        super().__init__('potential not superharmonic: {0}'.format(failed))
        self.reports = reports


class ConfigError(BridgeError, ValueError):
    """
    An experiment configuration holds unknown keys or values of the wrong type.
    """

    def __init__(self, message: str, valid_keys=()):
        if valid_keys:
            message = '{0}\nvalid keys: {1}'.format(message, ', '.join(sorted(valid_keys)))
        super().__init__(message)
        self.valid_keys = tuple(sorted(valid_keys))
