"""Seeded random generators for exact trig data, shared across the suite."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from symlag.forms import TrigForm, TrigMultiVector
from symlag.rings import PiRat
from symlag.trig import COS, SIN, TrigScalar


def random_pirat(rng: random.Random, with_pi: bool = False) -> PiRat:
    q = Fraction(rng.randint(-4, 4), rng.choice([1, 2, 3]))
    e = rng.choice([-1, 0, 1]) if with_pi else 0
    return PiRat.of(q, e)


def random_scalar(rng: random.Random, dim: int, radius: int = 1, nterms: int = 2,
                  with_pi: bool = False) -> TrigScalar:
    s = TrigScalar.zero(dim)
    for _ in range(nterms):
        freq = tuple(rng.randint(-radius, radius) for _ in range(dim))
        phase = rng.choice([COS, SIN])
        s = s + TrigScalar.wave(dim, freq, phase, random_pirat(rng, with_pi))
    return s


def random_form(rng: random.Random, dim: int, degree: int, radius: int = 1,
                nterms: int = 2) -> TrigForm:
    w = TrigForm.zero(dim, degree)
    index_sets = list(itertools.combinations(range(dim), degree))
    for _ in range(nterms):
        idx = rng.choice(index_sets)
        w = w + TrigForm(dim, degree, {idx: random_scalar(rng, dim, radius)})
    return w


def random_multivector(rng: random.Random, dim: int, degree: int, radius: int = 1,
                       nterms: int = 2) -> TrigMultiVector:
    P = TrigMultiVector.zero(dim, degree)
    index_sets = list(itertools.combinations(range(dim), degree))
    for _ in range(nterms):
        idx = rng.choice(index_sets)
        P = P + TrigMultiVector(dim, degree, {idx: random_scalar(rng, dim, radius)})
    return P
