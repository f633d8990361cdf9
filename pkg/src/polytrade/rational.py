"""Exact scalars and coordinate-indexed integer/rational vectors.

All arithmetic is done with :class:`fractions.Fraction`.  The only non-rational
value is :data:`NEG_INF`, used for infeasible bundles in valuation tables.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rat = Fraction


class _MinusInfinity:
    """Sentinel below every rational; absorbs addition with finite values."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "-inf"

    def __hash__(self):
        return hash("polytrade.-inf")

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __add__(self, other):
        if isinstance(other, (int, Fraction, _MinusInfinity)):
            return self
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            return self
        return NotImplemented

    def __reduce__(self):
        return (_MinusInfinity, ())


NEG_INF = _MinusInfinity()
Value = Union[Fraction, _MinusInfinity]


def is_finite(v) -> bool:
    return v is not NEG_INF


def as_rat(value) -> Value:
    """Coerce ints, Fractions and their string spellings ("p/q", "-inf")."""
    if value is NEG_INF:
        return NEG_INF
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        s = value.strip().replace("−", "-")
        if s in ("-inf", "-infinity"):
            return NEG_INF
        return Fraction(s)
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; pass a string like '1/2'")
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rat(value: Value) -> Union[int, str]:
    """Serialize: bare int when integral, "p/q" otherwise, "-inf" for the sentinel."""
    if value is NEG_INF:
        return "-inf"
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Vec:
    """A vector over an explicit, ordered coordinate set.

    ``values[k]`` is the entry for ``index[k]``.  Entries are ints for
    :data:`IntVec` use and Fractions for :data:`RatVec` use.
    """

    index: tuple
    values: tuple

    def __post_init__(self):
        if len(self.index) != len(self.values):
            raise ValueError("index and values differ in length")
        if len(set(self.index)) != len(self.index):
            raise ValueError(f"duplicate coordinates in {self.index!r}")

    @classmethod
    def of(cls, mapping: Mapping, index: Sequence) -> "Vec":
        index = tuple(index)
        missing = [c for c in index if c not in mapping]
        if missing:
            raise KeyError(f"missing coordinates {missing!r}")
        extra = set(mapping) - set(index)
        if extra:
            raise KeyError(f"unknown coordinates {sorted(map(str, extra))!r}")
        return cls(index, tuple(mapping[c] for c in index))

    @classmethod
    def zeros(cls, index: Sequence) -> "Vec":
        index = tuple(index)
        return cls(index, (0,) * len(index))

    def __getitem__(self, coord):
        try:
            return self.values[self.index.index(coord)]
        except ValueError:
            raise KeyError(coord) from None

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def as_dict(self) -> dict:
        return dict(zip(self.index, self.values))

    def _check(self, other: "Vec"):
        if self.index != other.index:
            raise ValueError(f"index mismatch: {self.index!r} vs {other.index!r}")

    def __add__(self, other: "Vec") -> "Vec":
        self._check(other)
        return Vec(self.index, tuple(a + b for a, b in zip(self.values, other.values)))

    def __sub__(self, other: "Vec") -> "Vec":
        self._check(other)
        return Vec(self.index, tuple(a - b for a, b in zip(self.values, other.values)))

    def __neg__(self) -> "Vec":
        return Vec(self.index, tuple(-a for a in self.values))

    def scale(self, k) -> "Vec":
        return Vec(self.index, tuple(k * a for a in self.values))

    def dot(self, other: "Vec"):
        self._check(other)
        return sum((a * b for a, b in zip(self.values, other.values)), Fraction(0))

    def is_integral(self) -> bool:
        return all(Fraction(a).denominator == 1 for a in self.values)

    def to_int(self) -> "Vec":
        if not self.is_integral():
            raise ValueError(f"{self!r} is not integral")
        return Vec(self.index, tuple(int(a) for a in self.values))

    def to_rat(self) -> "Vec":
        return Vec(self.index, tuple(Fraction(a) for a in self.values))

    def __repr__(self):
        body = ", ".join(f"{c}={format_rat(Fraction(v))}" for c, v in zip(self.index, self.values))
        return f"Vec({body})"


IntVec = Vec
RatVec = Vec


def supp_plus(v: Vec) -> set:
    return {c for c, a in zip(v.index, v.values) if a > 0}


def supp_minus(v: Vec) -> set:
    return {c for c, a in zip(v.index, v.values) if a < 0}


def unit_vector(u, index: Sequence) -> Vec:
    index = tuple(index)
    if u not in index:
        raise KeyError(f"unknown coordinate {u!r}")
    return Vec(index, tuple(1 if c == u else 0 for c in index))


def corner_tuples(values: Iterable) -> list[tuple]:
    """Integer corners of the unit hypercube around a tuple of rationals."""
    ranges = []
    for a in values:
        a = Fraction(a)
        lo, hi = math.floor(a), math.ceil(a)
        ranges.append((lo,) if lo == hi else (lo, hi))
    return list(itertools.product(*ranges))


def hypercube_corners(x: Vec) -> list[Vec]:
    return [Vec(x.index, t) for t in corner_tuples(x.values)]


# tuple helpers used on hot paths (points are plain int tuples internally)

def t_add(a: tuple, b: tuple) -> tuple:
    return tuple(p + q for p, q in zip(a, b))


def t_sub(a: tuple, b: tuple) -> tuple:
    return tuple(p - q for p, q in zip(a, b))


def t_move(a: tuple, minus: int, plus: int | None = None) -> tuple:
    """``a - chi_minus (+ chi_plus)``; positions are integer offsets."""
    out = list(a)
    out[minus] -= 1
    if plus is not None:
        out[plus] += 1
    return tuple(out)


def t_shift(a: tuple, plus: int, minus: int | None = None) -> tuple:
    """``a + chi_plus (- chi_minus)``."""
    out = list(a)
    out[plus] += 1
    if minus is not None:
        out[minus] -= 1
    return tuple(out)
