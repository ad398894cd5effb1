"""Exception hierarchy.

Two families: `ValidationError` for bad inputs (CLI exit code 1) and
`NumericalError` for failures of an otherwise valid computation (exit code 2).
"""


class ErgocorrError(Exception):
    pass


class ValidationError(ErgocorrError, ValueError):
    pass


class NumericalError(ErgocorrError, ArithmeticError):
    pass


class NotHermitian(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DimensionTooLarge(ValidationError):
    pass


class NegativeEigenvalue(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class NotPure(ValidationError):
    pass


class EnergyMismatch(ValidationError):
    pass


class InteractingHamiltonian(ValidationError):
    pass


class OutOfScopeFamily(ValidationError):
    pass


class NoConvergence(NumericalError):
    pass


class InfeasibleConstraint(NumericalError):
    pass
