"""Exception hierarchy shared by all modules.

``ParameterError`` means the inputs were rejected before any computation;
``NumericalError`` means a computation ran but could not meet its contract.
The command line maps them to exit codes 2 and 1.
"""


class ParameterError(ValueError):
    """Inputs outside the documented domain."""


class NumericalError(ArithmeticError):
    """A computation failed or could not be certified."""
