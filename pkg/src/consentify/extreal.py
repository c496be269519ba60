"""Reals extended by a single bottom element, negative infinity."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering
from numbers import Rational, Real


@total_ordering
class ExtendedReal:
    """A finite real (kept as an exact ``Fraction``) or ``NEG_INF``.

    No other non-finite value is admitted.
    """

    __slots__ = ("value",)

    def __init__(self, value: Real | str | None):
        if value is None:
            self.value = None
            return
        if isinstance(value, ExtendedReal):
            self.value = value.value
            return
        if isinstance(value, str):
            if value.strip() in ("-inf", "-infinity"):
                self.value = None
                return
            value = Fraction(value.strip())
        if isinstance(value, float):
            if math.isnan(value) or value == math.inf:
                raise ValueError(f"{value!r} is not an extended real")
            if value == -math.inf:
                self.value = None
                return
        if isinstance(value, bool) or not isinstance(value, Real):
            raise TypeError(f"cannot make an extended real from {value!r}")
        self.value = value if isinstance(value, Fraction) else Fraction(value)

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def __eq__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self.value == other.value

    def __lt__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if self.value is None:
            return other.value is not None
        if other.value is None:
            return False
        return self.value < other.value

    def __hash__(self):
        return hash(("ExtendedReal", self.value))

    def __float__(self):
        return -math.inf if self.value is None else float(self.value)

    def __str__(self):
        return "-inf" if self.value is None else str(self.value)

    def __repr__(self):
        return f"ExtendedReal({str(self)!r})"


def _coerce(x) -> ExtendedReal | None:
    if isinstance(x, ExtendedReal):
        return x
    if isinstance(x, (Rational, float)) and not isinstance(x, bool):
        try:
            return ExtendedReal(x)
        except ValueError:
            return None
    return None


NEG_INF = ExtendedReal(None)


def ext(value) -> ExtendedReal:
    return value if isinstance(value, ExtendedReal) else ExtendedReal(value)


def argmax(items, key):
    """All items attaining the maximum of ``key``, in input order, and that maximum.

    When every key is ``NEG_INF`` the whole input ties.
    """
    best = None
    winners = []
    for item in items:
        v = ext(key(item))
        if best is None or v > best:
            best, winners = v, [item]
        elif v == best:
            winners.append(item)
    if best is None:
        raise ValueError("argmax of an empty collection")
    return winners, best
