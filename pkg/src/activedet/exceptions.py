"""Exception hierarchy shared across the package.

Two families: contract violations (bad inputs, caller errors) and numerical
failures (the math broke down at runtime). The CLI maps the former to exit
code 2 and the latter to exit code 3.
"""


class ContractViolationError(ValueError):
    """An argument violated a documented pre-condition."""


class ConfigurationError(ContractViolationError):
    """A configuration value or file is invalid."""


class DivergentMeanError(ContractViolationError):
    """Interference moments diverge (pathloss exponent at or below 2)."""


class DegeneratePriorError(ContractViolationError):
    """The interference prior has zero variance, so MAP weights are undefined."""


class NumericalFailureError(ArithmeticError):
    """A numerical routine failed in a way no input check could anticipate."""


class SingularUpdateError(NumericalFailureError):
    """A rank-one update would make the covariance singular or indefinite."""


class DegenerateEquationError(NumericalFailureError):
    """A polynomial solve received an identically zero equation."""
