"""Exception types shared across the package."""


class MemosError(Exception):
    """Base class for all errors raised by memosim."""


class InvalidCoding(MemosError, ValueError):
    """An (n, p) bit pair of (1, 1) has no trit meaning."""


class Overflow(MemosError, ValueError):
    """An integer does not fit into the requested number of digits."""


class ParseError(MemosError, ValueError):
    """Malformed textual input (SD literal, netlist dump, key=value file)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GuardViolation(MemosError):
    """The internal guard digit of the step-3 adder was nonzero."""


class MissingInput(MemosError, KeyError):
    """A netlist INPUT gate has no value in the assignment."""


class UnloweredGate(MemosError, ValueError):
    """A netlist still contains AND/OR/XOR gates where only NAND/NOR/NOT are allowed."""


class NonFiniteState(MemosError, ArithmeticError):
    """A memristor state update produced NaN or infinity."""


class WidthMismatch(MemosError, ValueError):
    """Operand or report widths do not agree."""


class NoPassingFrequency(MemosError):
    """Even the lowest frequency of a sweep grid produced wrong results."""


class NonMonotoneSweep(MemosError):
    """A frequency passed while a lower one failed."""


class IoFailure(MemosError, OSError):
    """A report or trace file could not be written."""
