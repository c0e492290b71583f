"""Exception hierarchy for innerorbit.

Every library error derives from InnerOrbitError so callers can catch the
whole family; the CLI maps subfamilies onto exit codes.
"""


class InnerOrbitError(Exception):
    """Base class for all innerorbit errors."""


class DimensionMismatch(InnerOrbitError):
    """Operands live on polydisks of different dimensions."""


class EvaluationOutsideDomain(InnerOrbitError):
    """A point lies outside the closed unit polydisk."""


class PoleHit(InnerOrbitError):
    """A Moebius denominator vanished; the input point is invalid."""


class ValidityError(InnerOrbitError):
    """A construction-time constraint was violated (|alpha| >= 1, |const| > 1, ...)."""


class NoBoundaryConvergence(InnerOrbitError):
    """Moduli of the automorphism parameters never approach the torus."""


class EmptySelection(InnerOrbitError):
    """No permutation repeats within the analysis horizon."""


class SchurParameterOutOfDisk(InnerOrbitError):
    """A Schur parameter reached the unit circle before the requested depth.

    Carries the step at which the recursion terminated and the offending
    parameter so callers can restart with a shallower depth and that
    parameter (normalized) as the tail constant.
    """

    def __init__(self, step: int, parameter: complex):
        self.step = step
        self.parameter = parameter
        super().__init__(
            f"Schur parameter at step {step} has modulus "
            f"{abs(parameter):.17g}; lower the depth to {step}"
        )


class RootFindFailure(InnerOrbitError):
    """The corrector phase solve did not converge."""


class PinNotUnimodular(InnerOrbitError):
    """The approximant is not unimodular at the requested pin point."""


class RadiusOnZeroModulus(InnerOrbitError):
    """A quadrature radius coincides with the modulus of a zero."""


class ProjectionFailed(InnerOrbitError):
    """The projector could not reach the requested tolerance."""

    def __init__(self, achieved: float, requested: float):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"projection achieved {achieved:.17g}, requested {requested:.17g}"
        )


class UnsupportedTargetShape(InnerOrbitError):
    """Multivariate target is not of per-variable product form."""


class SequenceExhausted(InnerOrbitError):
    """No admissible stage index exists within the search horizon."""

    def __init__(self, message: str, best: dict | None = None):
        self.best = best or {}
        super().__init__(message)


class InterferenceBudgetExceeded(InnerOrbitError):
    """A new factor disturbs earlier stage images beyond its budget."""

    def __init__(self, message: str, values: dict | None = None):
        self.values = values or {}
        super().__init__(message)


class ParseError(InnerOrbitError):
    """Function-DSL syntax error with position information."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class ConfigError(InnerOrbitError):
    """Run configuration is missing, unreadable, or inconsistent."""
