"""Balanced ternary signed-digit numbers to base 2.

A number is a sequence of trits ``d_i`` in {-1, 0, +1} worth ``sum(d_i * 2**i)``.
Index 0 is the least significant digit everywhere in this package; the textual
form prints the most significant digit first, with ``T`` standing for -1
(``"10T1"`` is 8 - 2 + 1 = 7).

Each trit travels through the logic as an (n, p) bit pair: -1 -> (1, 0),
0 -> (0, 0), +1 -> (0, 1). The pair (1, 1) is invalid.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidCoding, Overflow, ParseError

MAX_WIDTH = 512

_CHAR_TO_TRIT = {"1": 1, "0": 0, "T": -1}
_TRIT_TO_CHAR = {1: "1", 0: "0", -1: "T"}


class Trit(enum.IntEnum):
    NEG = -1
    ZERO = 0
    POS = 1


@dataclass(frozen=True)
class NPPair:
    """Two-bit (negative, positive) code of one trit."""

    n: int
    p: int

    def __post_init__(self):
        if self.n not in (0, 1) or self.p not in (0, 1):
            raise InvalidCoding(f"bits must be 0 or 1, got ({self.n}, {self.p})")
        if self.n and self.p:
            raise InvalidCoding("(n, p) = (1, 1) is not a trit")

    def __iter__(self):
        yield self.n
        yield self.p


def encode_trit(t) -> NPPair:
    t = Trit(t)
    return NPPair(n=int(t == Trit.NEG), p=int(t == Trit.POS))


def decode_np(c) -> Trit:
    """Inverse of :func:`encode_trit`; accepts an ``NPPair`` or an ``(n, p)`` tuple."""
    n, p = c
    if n and p:
        raise InvalidCoding("(n, p) = (1, 1) is not a trit")
    return Trit(int(p) - int(n))


@dataclass(frozen=True)
class SDNumber:
    """Immutable signed-digit number, ``digits[0]`` least significant."""

    digits: tuple

    def __post_init__(self):
        digits = tuple(int(Trit(d)) for d in self.digits)
        if not 1 <= len(digits) <= MAX_WIDTH:
            raise ValueError(f"width must be in [1, {MAX_WIDTH}], got {len(digits)}")
        object.__setattr__(self, "digits", digits)

    @property
    def width(self) -> int:
        return len(self.digits)

    @classmethod
    def zero(cls, width: int) -> "SDNumber":
        return cls((0,) * width)

    @classmethod
    def from_msb(cls, digits: Iterable[int]) -> "SDNumber":
        """Build from digits listed most significant first, as printed in tables."""
        return cls(tuple(reversed(tuple(digits))))

    @classmethod
    def parse(cls, text: str) -> "SDNumber":
        text = text.strip()
        if not text:
            raise ParseError("empty SD literal")
        try:
            return cls.from_msb(_CHAR_TO_TRIT[ch] for ch in text)
        except KeyError as exc:
            raise ParseError(f"invalid SD literal character {exc.args[0]!r} in {text!r}") from None

    @classmethod
    def from_np(cls, n_bits: Sequence[int], p_bits: Sequence[int]) -> "SDNumber":
        if len(n_bits) != len(p_bits):
            raise ValueError("n and p vectors differ in length")
        return cls(tuple(decode_np((n, p)) for n, p in zip(n_bits, p_bits)))

    def __str__(self) -> str:
        return "".join(_TRIT_TO_CHAR[d] for d in reversed(self.digits))

    def __repr__(self) -> str:
        return f"SDNumber({str(self)!r})"

    @property
    def value(self) -> int:
        return sum(d * (1 << i) for i, d in enumerate(self.digits))

    def __int__(self) -> int:
        return self.value

    def __neg__(self) -> "SDNumber":
        return negate(self)

    def positive_part(self) -> tuple:
        return tuple(int(d == 1) for d in self.digits)

    def negative_part(self) -> tuple:
        return tuple(int(d == -1) for d in self.digits)

    def np_pairs(self) -> tuple:
        return tuple(encode_trit(d) for d in self.digits)

    def padded(self, width: int) -> "SDNumber":
        if width < self.width:
            raise ValueError("cannot pad to a smaller width")
        return SDNumber(self.digits + (0,) * (width - self.width))


def value(x: SDNumber) -> int:
    return x.value


def value_bin(bits: Sequence[int]) -> int:
    """Unsigned value of an lsb-first bit vector."""
    return sum(int(b) << i for i, b in enumerate(bits))


def negate(x: SDNumber) -> SDNumber:
    # swapping n and p of each digit is exactly a sign flip
    return SDNumber.from_np(x.positive_part(), x.negative_part())


def positive_part(x: SDNumber) -> tuple:
    return x.positive_part()


def negative_part(x: SDNumber) -> tuple:
    return x.negative_part()


def from_integer(v: int, width: int) -> SDNumber:
    """Canonical encoding: binary magnitude of ``|v|`` with every one-digit carrying ``sign(v)``."""
    if abs(v) > (1 << width) - 1:
        raise Overflow(f"{v} does not fit into {width} signed digits")
    sign = -1 if v < 0 else 1
    mag = abs(v)
    return SDNumber(tuple(sign * ((mag >> i) & 1) for i in range(width)))


def oracle_add(a: SDNumber, b: SDNumber) -> int:
    return a.value + b.value


def _generator(seed: int) -> np.random.Generator:
    # PCG64 with an integer seed; numpy keeps this stream stable across platforms
    return np.random.Generator(np.random.PCG64(seed))


def random_sd(width: int, seed: int) -> SDNumber:
    """Uniform random trits, reproducible for a given ``(width, seed)``."""
    if width < 1:
        raise ValueError("width must be >= 1")
    return SDNumber(tuple(_generator(seed).integers(-1, 2, size=width).tolist()))


def random_digit_matrix(width: int, count: int, seed: int) -> np.ndarray:
    """``(count, 2, width)`` int8 array of operand-pair digits, lsb first."""
    return _generator(seed).integers(-1, 2, size=(count, 2, width), dtype=np.int8)


def random_pairs(width: int, count: int, seed: int) -> list:
    """``count`` reproducible operand pairs of the given width."""
    mat = random_digit_matrix(width, count, seed)
    return [(SDNumber(tuple(row[0].tolist())), SDNumber(tuple(row[1].tolist()))) for row in mat]


def digits_value(digits: np.ndarray) -> np.ndarray:
    """Values of a ``(..., width)`` digit array as Python ints (object dtype for wide numbers)."""
    digits = np.asarray(digits)
    weights = np.array([1 << i for i in range(digits.shape[-1])], dtype=object)
    return (digits.astype(object) * weights).sum(axis=-1)
