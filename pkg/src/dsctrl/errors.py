"""Exception classes shared by all dsctrl modules.

Each class carries the CLI exit code it maps to.
"""


class DsctrlError(Exception):
    exit_code = 3


class DimensionError(DsctrlError, ValueError):
    """Matrix or vector shapes are inconsistent."""

    exit_code = 2


class ArgumentError(DsctrlError, ValueError):
    """An argument is outside its admissible range."""

    exit_code = 2


class NumericalError(DsctrlError, ArithmeticError):
    """A numerical procedure failed to converge or hit a singularity."""

    exit_code = 3


class InfeasibleError(DsctrlError):
    """The input violates a feasibility precondition (e.g. an unstable matrix)."""

    exit_code = 1


class ParseError(DsctrlError, ValueError):
    """A model file could not be parsed.

    ``line`` holds the 1-based line number of the offending line, when known.
    """

    exit_code = 2

    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class GenerationError(DsctrlError):
    exit_code = 3
