"""Exact coefficient arithmetic: rationals times integer powers of pi.

Every exact quantity in this package is a finite sum  sum_e  q_e * pi**e
with q_e rational.  Differentiating a trigonometric monomial multiplies by
2*pi, so closing the coefficient ring under that factor keeps all algebraic
identities (d of d, Cartan, Jacobi, ...) testable with zero residual.

Mixing a :class:`PiRat` with a ``float`` degrades to ``float`` arithmetic;
this is deliberate and is how the numeric (FFT-fitted) branch of the code
reuses the symbolic trig machinery.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Rat = Union[int, Fraction]


class PiRat:
    """A Laurent polynomial in pi with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, Fraction] | None = None):
        self.terms = {e: q for e, q in (terms or {}).items() if q != 0}

    @classmethod
    def of(cls, value: Rat, pi_pow: int = 0) -> "PiRat":
        q = Fraction(value)
        return cls({pi_pow: q}) if q else cls()

    @classmethod
    def zero(cls) -> "PiRat":
        return cls()

    @classmethod
    def one(cls) -> "PiRat":
        return cls({0: Fraction(1)})

    @classmethod
    def two_pi(cls) -> "PiRat":
        return cls({1: Fraction(2)})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, PiRat):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == PiRat.of(other).terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __neg__(self) -> "PiRat":
        return PiRat({e: -q for e, q in self.terms.items()})

    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        if isinstance(other, (int, Fraction)):
            other = PiRat.of(other)
        if not isinstance(other, PiRat):
            return NotImplemented
        out = dict(self.terms)
        for e, q in other.terms.items():
            s = out.get(e, Fraction(0)) + q
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return PiRat(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, (PiRat, int, Fraction)) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            return PiRat({e: c * q for e, c in self.terms.items()}) if q else PiRat()
        if not isinstance(other, PiRat):
            return NotImplemented
        out: dict[int, Fraction] = {}
        for e1, q1 in self.terms.items():
            for e2, q2 in other.terms.items():
                e = e1 + e2
                s = out.get(e, Fraction(0)) + q1 * q2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return PiRat(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        if isinstance(other, (int, Fraction)):
            return self * Fraction(1, 1) / PiRat.of(other)
        if not isinstance(other, PiRat):
            return NotImplemented
        if len(other.terms) != 1:
            raise ZeroDivisionError(
                "division only by nonzero pi-monomials, got %r" % (other,)
            )
        ((e, q),) = other.terms.items()
        return PiRat({e1 - e: q1 / q for e1, q1 in self.terms.items()})

    def __float__(self) -> float:
        return sum((float(q) * math.pi**e for e, q in self.terms.items()), 0.0)

    def __abs__(self) -> float:
        return abs(float(self))

    @property
    def is_rational(self) -> bool:
        return all(e == 0 for e in self.terms)

    def rational_part(self) -> Fraction:
        """The pi**0 coefficient."""
        return self.terms.get(0, Fraction(0))

    def monomial(self) -> tuple[int, Fraction]:
        """Return (exponent, coefficient); requires a single pi-power."""
        if not self.terms:
            return (0, Fraction(0))
        if len(self.terms) != 1:
            raise ValueError("not a pi-monomial: %r" % (self,))
        ((e, q),) = self.terms.items()
        return (e, q)

    def slices(self) -> dict[int, Fraction]:
        """Decomposition by pi-power (a copy)."""
        return dict(self.terms)

    def abs_upper_bound(self) -> float:
        """An upper bound for |value| (sums absolute term values)."""
        return sum(abs(float(q)) * math.pi**e for e, q in self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for e in sorted(self.terms):
            q = self.terms[e]
            if e == 0:
                bits.append(str(q))
            elif e == 1:
                bits.append("%s*pi" % q)
            else:
                bits.append("%s*pi**%d" % (q, e))
        return " + ".join(bits)


ZERO = PiRat.zero()
ONE = PiRat.one()
TWO_PI = PiRat.two_pi()

Coeff = Union[PiRat, float]


def is_zero_coeff(c: Coeff) -> bool:
    return (not c.terms) if isinstance(c, PiRat) else (c == 0.0)


def coeff_float(c: Coeff) -> float:
    return float(c)


def coeff_times_two_pi_int(c: Coeff, m: int) -> Coeff:
    """c * (2*pi*m), exact on the PiRat branch."""
    if m == 0:
        return PiRat() if isinstance(c, PiRat) else 0.0
    if isinstance(c, PiRat):
        return c * PiRat({1: Fraction(2 * m)})
    return c * (2.0 * math.pi * m)
