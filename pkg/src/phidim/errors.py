"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command line front end:
2 for invalid inputs or arguments, 3 for numeric failures.
"""


class PhidimError(Exception):
    exit_code = 3


class SpecError(PhidimError, ValueError):
    """Invalid input: bad parameters, malformed descriptors, violated preconditions."""

    exit_code = 2


class DomainError(SpecError):
    """An argument lies outside the represented range of an operation."""


class PreconditionError(SpecError):
    pass


class NumericError(PhidimError, ArithmeticError):
    """A computation could not be carried out at the requested accuracy."""


class ResolutionError(NumericError):
    """A scale below the trusted resolution of a finite set was requested."""


class DepthError(NumericError):
    """More levels were needed than are available."""


class CapacityError(NumericError):
    """A size budget (support, node or cell count) would be exceeded."""


class ConstructionError(NumericError):
    """A constructive procedure found no admissible parameters."""


class InconsistencyError(NumericError):
    """Input data contradicts a structural guarantee."""
