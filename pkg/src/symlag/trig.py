"""Trigonometric polynomials on a flat torus R^d / Z^d.

A scalar is a finite sum of waves  c * cos(2*pi*k.theta)  and
c * sin(2*pi*k.theta)  with integer frequency vectors k and coefficients in
the pi-rational ring (or floats on the numeric branch).  Keys are stored
canonically: for each pair {k, -k} only the representative whose first
nonzero entry is positive is kept (cos is even, sin is odd), and sin with
k = 0 is identically zero so it is never stored.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .rings import Coeff, PiRat, coeff_times_two_pi_int, is_zero_coeff

COS = 0
SIN = 1

Freq = tuple[int, ...]
Key = tuple[Freq, int]


def canonical_wave(freq: Freq, phase: int, coeff: Coeff) -> tuple[Key, Coeff] | None:
    """Canonicalize one wave; returns None when it is identically zero."""
    lead = 0
    for f in freq:
        if f != 0:
            lead = f
            break
    if lead == 0:
        if phase == SIN:
            return None
        return ((freq, COS), coeff)
    if lead < 0:
        freq = tuple(-f for f in freq)
        if phase == SIN:
            coeff = -coeff
    return ((freq, phase), coeff)


class TrigScalar:
    """A trig polynomial; immutable by convention after construction."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict[Key, Coeff] | None = None):
        self.dim = dim
        self.terms = {k: c for k, c in (terms or {}).items() if not is_zero_coeff(c)}

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "TrigScalar":
        return cls(dim)

    @classmethod
    def const(cls, dim: int, value) -> "TrigScalar":
        c = value if isinstance(value, (PiRat, float)) else PiRat.of(value)
        return cls(dim, {((0,) * dim, COS): c})

    @classmethod
    def wave(cls, dim: int, freq: Iterable[int], phase: int, coeff=1) -> "TrigScalar":
        c = coeff if isinstance(coeff, (PiRat, float)) else PiRat.of(coeff)
        out = cls(dim)
        out._add_wave(tuple(int(f) for f in freq), phase, c)
        return out

    # -- mutation helpers (only used while building a fresh value) ----

    def _add_wave(self, freq: Freq, phase: int, coeff: Coeff) -> None:
        if is_zero_coeff(coeff):
            return
        cw = canonical_wave(freq, phase, coeff)
        if cw is None:
            return
        key, c = cw
        s = self.terms.get(key)
        s = c if s is None else s + c
        if is_zero_coeff(s):
            self.terms.pop(key, None)
        else:
            self.terms[key] = s

    def _add_scalar(self, other: "TrigScalar", factor=None) -> None:
        for (freq, phase), c in other.terms.items():
            self._add_wave(freq, phase, c if factor is None else c * factor)

    # -- ring operations ----------------------------------------------

    def __add__(self, other: "TrigScalar") -> "TrigScalar":
        out = TrigScalar(self.dim, dict(self.terms))
        out._add_scalar(other)
        return out

    def __sub__(self, other: "TrigScalar") -> "TrigScalar":
        out = TrigScalar(self.dim, dict(self.terms))
        out._add_scalar(other, factor=-1)
        return out

    def __neg__(self) -> "TrigScalar":
        return TrigScalar(self.dim, {k: -c for k, c in self.terms.items()})

    def scale(self, factor) -> "TrigScalar":
        if not isinstance(factor, (PiRat, float)):
            factor = PiRat.of(factor)
        if is_zero_coeff(factor):
            return TrigScalar(self.dim)
        return TrigScalar(self.dim, {k: c * factor for k, c in self.terms.items()})

    def __mul__(self, other: "TrigScalar") -> "TrigScalar":
        """Pointwise product, expanded via product-to-sum identities."""
        out = TrigScalar(self.dim)
        half = Fraction(1, 2)
        for (k1, p1), c1 in self.terms.items():
            for (k2, p2), c2 in other.terms.items():
                c = (c1 * c2) * half
                ksum = tuple(a + b for a, b in zip(k1, k2))
                kdif = tuple(a - b for a, b in zip(k1, k2))
                if p1 == COS and p2 == COS:
                    out._add_wave(kdif, COS, c)
                    out._add_wave(ksum, COS, c)
                elif p1 == SIN and p2 == SIN:
                    out._add_wave(kdif, COS, c)
                    out._add_wave(ksum, COS, -c)
                elif p1 == SIN and p2 == COS:
                    out._add_wave(ksum, SIN, c)
                    out._add_wave(kdif, SIN, c)
                else:  # cos * sin
                    out._add_wave(ksum, SIN, c)
                    out._add_wave(kdif, SIN, -c)
        return out

    def partial(self, j: int) -> "TrigScalar":
        """d/d theta_j.  cos -> -2*pi*k_j sin, sin -> 2*pi*k_j cos."""
        out = TrigScalar(self.dim)
        for (freq, phase), c in self.terms.items():
            m = freq[j]
            if m == 0:
                continue
            if phase == COS:
                out._add_wave(freq, SIN, coeff_times_two_pi_int(-c, m))
            else:
                out._add_wave(freq, COS, coeff_times_two_pi_int(c, m))
        return out

    # -- queries --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, TrigScalar) and self.terms == other.terms

    def __hash__(self):
        raise TypeError("TrigScalar is not hashable")

    def freq_radius(self) -> int:
        """Largest |k_i| over the support."""
        r = 0
        for (freq, _), _c in self.terms.items():
            for f in freq:
                r = max(r, abs(f))
        return r

    def l1_bound(self) -> float:
        """sum |coefficients|: an upper bound for the sup norm."""
        total = 0.0
        for c in self.terms.values():
            total += c.abs_upper_bound() if isinstance(c, PiRat) else abs(c)
        return total

    def max_abs_coeff(self) -> float:
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    def to_float(self) -> "TrigScalar":
        return TrigScalar(self.dim, {k: float(c) for k, c in self.terms.items()})

    def depends_only_on(self, axes: Iterable[int]) -> bool:
        allowed = set(axes)
        for (freq, _), _c in self.terms.items():
            for j, f in enumerate(freq):
                if f != 0 and j not in allowed:
                    return False
        return True

    def waves(self) -> Iterator[tuple[Freq, int, Coeff]]:
        for (freq, phase), c in self.terms.items():
            yield freq, phase, c

    # -- evaluation ------------------------------------------------------

    def evaluate(self, point) -> float:
        p = np.asarray(point, dtype=float)
        total = 0.0
        for (freq, phase), c in self.terms.items():
            arg = 2.0 * math.pi * float(np.dot(freq, p))
            total += float(c) * (math.cos(arg) if phase == COS else math.sin(arg))
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on an (G, dim) array of points; returns shape (G,)."""
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[0])
        for (freq, phase), c in self.terms.items():
            arg = 2.0 * math.pi * (pts @ np.asarray(freq, dtype=float))
            out += float(c) * (np.cos(arg) if phase == COS else np.sin(arg))
        return out

    # -- reindexing -------------------------------------------------------

    def pullback_affine(self, matrix, shift=None) -> "TrigScalar":
        """Substitute theta = A u + b; A integer (dim x m), b rational.

        Exact only when every phase offset k.b is a multiple of 1/4 (the
        only shifts the workbench needs); other shifts raise ValueError.
        """
        rows = len(matrix)
        if rows != self.dim:
            raise ValueError("matrix has %d rows, expected %d" % (rows, self.dim))
        m = len(matrix[0]) if rows else 0
        out = TrigScalar(m)
        for (freq, phase), c in self.terms.items():
            new_freq = tuple(
                sum(freq[i] * matrix[i][j] for i in range(rows)) for j in range(m)
            )
            if shift is None:
                off = Fraction(0)
            else:
                off = sum(
                    (Fraction(freq[i]) * Fraction(shift[i]) for i in range(rows)),
                    Fraction(0),
                )
            off %= 1
            if off * 4 != int(off * 4):
                raise ValueError("phase offset %s is not a quarter period" % off)
            quarter = int(off * 4) % 4
            cosv = (1, 0, -1, 0)[quarter]
            sinv = (0, 1, 0, -1)[quarter]
            # cos(a+s) = cos s cos a - sin s sin a; sin(a+s) = cos s sin a + sin s cos a
            if phase == COS:
                if cosv:
                    out._add_wave(new_freq, COS, c * cosv)
                if sinv:
                    out._add_wave(new_freq, SIN, -c * sinv)
            else:
                if cosv:
                    out._add_wave(new_freq, SIN, c * cosv)
                if sinv:
                    out._add_wave(new_freq, COS, c * sinv)
        return out

    def embed(self, dim: int, axis_map: Iterable[int]) -> "TrigScalar":
        """Reinterpret on a larger torus; axis_map[j] = target axis of axis j."""
        amap = list(axis_map)
        out = TrigScalar(dim)
        for (freq, phase), c in self.terms.items():
            new_freq = [0] * dim
            for j, f in enumerate(freq):
                new_freq[amap[j]] = f
            out._add_wave(tuple(new_freq), phase, c)
        return out

    def __repr__(self):
        if not self.terms:
            return "TrigScalar(0)"
        names = ["cos", "sin"]
        bits = [
            "(%r)*%s(2pi*%s.x)" % (c, names[phase], list(freq))
            for (freq, phase), c in sorted(self.terms.items())
        ]
        return " + ".join(bits)
