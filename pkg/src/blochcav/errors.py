"""Exception types, split by how the CLI maps them to exit codes."""


class BlochcavError(Exception):
    """Base class for all package errors."""


class ValidationError(BlochcavError, ValueError):
    """Bad input: malformed config, invalid mesh, out-of-range parameter.

    CLI exit code 1.
    """


class NumericsError(BlochcavError, ArithmeticError):
    """A numerical procedure failed: ill-conditioned system, unconverged
    lattice sum, invalid root bracket.

    CLI exit code 2.
    """
