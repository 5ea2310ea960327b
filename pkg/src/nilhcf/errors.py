"""Exception hierarchy.

``exit_code`` is what the command line returns for each failure: 2 for
input/validation problems, 3 for numerical failures.
"""


class HCFError(Exception):
    exit_code = 3


class ValidationError(HCFError):
    exit_code = 2


class NumericalError(HCFError):
    exit_code = 3


class DimensionMismatch(ValidationError):
    pass


class JacobiViolation(ValidationError):
    def __init__(self, residual, triple):
        self.residual = residual
        self.triple = triple
        i, j, l = (x + 1 for x in triple)
        super().__init__(
            f"Jacobi identity fails: relative residual {residual:.3e} at triple ({i},{j},{l})"
        )


class NotTwoStep(ValidationError):
    pass


class BadParameter(ValidationError):
    pass


class ZeroBracket(ValidationError):
    pass


class BadSupport(ValidationError):
    pass


class NotUnitNorm(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class BadMetric(ValidationError):
    pass


class SingularMatrix(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NotFixedPoint(NumericalError):
    pass


class StepFailure(NumericalError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class StructureDrift(NumericalError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NoConvergence(NumericalError):
    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace
