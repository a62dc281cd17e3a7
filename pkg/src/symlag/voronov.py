"""Higher derived brackets from V-data.

A V-data quadruple (carrier, abelian subalgebra, projection P, element
Delta with [Delta, Delta] = 0 in ker P) induces a shifted L-infinity
structure on carrier[1] (+) abelian with, writing D = [Delta, -]:

    d(x[1], a)            = (-D(x)[1], P(x + D(a)))
    {x[1], y[1]}          = (-1)^{|x|} [x, y] [1]
    {x[1], a_1, ..., a_n} = P [ ... [x, a_1], ..., a_n ]
    {a_1, ..., a_n}       = P [ ... [D(a_1), a_2], ..., a_n ]

and all multibrackets with two or more shifted entries plus extra
arguments vanish.  Arguments are graded symmetric; evaluation reorders
picked legs with Koszul signs.  Everything here is exact.

Two carriers instantiate the interface: trig multivector fields on the
model torus (the working instance, with P = restrict to the zero section
and keep only vertical legs, Delta the canonical Poisson bivector) and a
small matrix Lie algebra used as a fast interface test.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .forms import TrigForm, TrigMultiVector, schouten
from .torus import TorusModel
from .trig import TrigScalar


# ---------------------------------------------------------------------------
# carriers


class TrigMultivectorCarrier:
    """Multivector fields with the Schouten bracket; GLA degree q - 1."""

    def __init__(self, torus: TorusModel):
        self.torus = torus

    def degree(self, x: TrigMultiVector) -> int:
        return x.degree - 1

    def bracket(self, x, y):
        return schouten(x, y)

    def add(self, x, y):
        return x + y

    def scale(self, x, c):
        return x.scale(c)

    def is_zero(self, x) -> bool:
        return x.is_zero()

    def zero(self, degree: int):
        return TrigMultiVector(self.torus.N, degree + 1)

    def residual(self, x) -> float:
        return x.max_abs_coeff()

    def project(self, x: TrigMultiVector) -> TrigMultiVector:
        """Restrict to y = 0, then keep only pure-vertical legs with the
        coefficients extended y-independently."""
        torus = self.torus
        n = torus.n
        incl = torus.inclusion_matrix()
        comps = {}
        for idx, s in x.terms.items():
            if any(i < n for i in idx):
                continue
            restricted = s.pullback_affine(incl)
            if restricted.is_zero():
                continue
            comps[idx] = restricted.embed(torus.N, list(range(n)))
        return TrigMultiVector(torus.N, x.degree, comps)

    def in_abelian(self, x: TrigMultiVector) -> bool:
        return self.project(x) == x


class MatrixLieCarrier:
    """gl_n over Q concentrated in degree 0; a fast V-data interface test.

    The abelian subalgebra is the strictly upper triangular part, the
    projection keeps it, and the kernel (lower triangular) is a
    subalgebra.  Delta = 0 is the only degree-1 element.
    """

    def __init__(self, n: int = 2):
        self.n = n

    def degree(self, x) -> int:
        return 0

    def bracket(self, x, y):
        n = self.n
        return tuple(
            tuple(
                sum(x[i][k] * y[k][j] - y[i][k] * x[k][j] for k in range(n))
                for j in range(n)
            )
            for i in range(n)
        )

    def add(self, x, y):
        return tuple(
            tuple(a + b for a, b in zip(rx, ry)) for rx, ry in zip(x, y)
        )

    def scale(self, x, c):
        return tuple(tuple(a * c for a in row) for row in x)

    def is_zero(self, x) -> bool:
        return all(a == 0 for row in x for a in row)

    def zero(self, degree: int):
        return tuple(tuple(Fraction(0) for _ in range(self.n)) for _ in range(self.n))

    def residual(self, x) -> float:
        return max((abs(float(a)) for row in x for a in row), default=0.0)

    def project(self, x):
        return tuple(
            tuple(x[i][j] if j > i else Fraction(0) for j in range(self.n))
            for i in range(self.n)
        )

    def in_abelian(self, x) -> bool:
        return self.project(x) == tuple(tuple(row) for row in x)


# ---------------------------------------------------------------------------
# V-data and extension elements


@dataclass
class VData:
    carrier: object
    delta: object
    arity_cap: int = 4

    def __post_init__(self):
        c = self.carrier
        if not c.is_zero(self.delta):
            if c.degree(self.delta) != 1:
                raise ValueError("Delta must have degree 1")
        if not c.is_zero(c.project(self.delta)):
            raise ValueError("Delta must lie in ker P")
        if not c.is_zero(c.bracket(self.delta, self.delta)):
            raise ValueError("[Delta, Delta] != 0")

    def D(self, x):
        return self.carrier.bracket(self.delta, x)

    def validate_on_samples(self, samples) -> dict:
        """Spot-checks: P idempotent, ker P closed, abelian really abelian."""
        c = self.carrier
        idem = all(
            c.is_zero(c.add(c.project(c.project(s)), c.scale(c.project(s), -1)))
            for s in samples
        )
        kers = [c.add(s, c.scale(c.project(s), -1)) for s in samples]
        closed = all(
            c.is_zero(c.project(c.bracket(u, v))) for u in kers for v in kers
        )
        abelian = all(
            c.is_zero(c.bracket(c.project(u), c.project(v)))
            for u in samples
            for v in samples
        )
        return {"idempotent": idem, "kernel_closed": closed, "abelian": abelian}


@dataclass
class ExtElement:
    """Homogeneous element (x[1], a) of the extension."""

    degree: int
    x: object | None = None
    a: object | None = None

    @classmethod
    def shifted(cls, v: VData, x) -> "ExtElement":
        return cls(v.carrier.degree(x) - 1, x=x)

    @classmethod
    def abelian(cls, v: VData, a) -> "ExtElement":
        if not v.carrier.in_abelian(a):
            raise ValueError("element is not in the abelian subalgebra")
        return cls(v.carrier.degree(a), a=a)

    def is_zero(self, v: VData) -> bool:
        c = v.carrier
        return (self.x is None or c.is_zero(self.x)) and (
            self.a is None or c.is_zero(self.a)
        )

    def residual(self, v: VData) -> float:
        c = v.carrier
        rx = c.residual(self.x) if self.x is not None else 0.0
        ra = c.residual(self.a) if self.a is not None else 0.0
        return max(rx, ra)


def ext_add(v: VData, e1: ExtElement, e2: ExtElement) -> ExtElement:
    c = v.carrier
    x = e1.x if e2.x is None else (e2.x if e1.x is None else c.add(e1.x, e2.x))
    a = e1.a if e2.a is None else (e2.a if e1.a is None else c.add(e1.a, e2.a))
    return ExtElement(e1.degree, x=x, a=a)


def ext_scale(v: VData, e: ExtElement, fac) -> ExtElement:
    c = v.carrier
    return ExtElement(
        e.degree,
        x=None if e.x is None else c.scale(e.x, fac),
        a=None if e.a is None else c.scale(e.a, fac),
    )


# ---------------------------------------------------------------------------
# multibrackets


def voronov_d(v: VData, e: ExtElement) -> ExtElement:
    return voronov_bracket(v, [e])


def voronov_bracket(v: VData, args: list[ExtElement]) -> ExtElement:
    """The arity-len(args) multibracket on homogeneous extension elements."""
    k = len(args)
    if k == 0:
        raise ValueError("arity must be >= 1")
    if k > v.arity_cap:
        raise ValueError("arity %d above the cap %d" % (k, v.arity_cap))
    c = v.carrier
    out_degree = sum(e.degree for e in args) + 1
    out = ExtElement(out_degree)

    legs_per_arg = []
    for e in args:
        legs = []
        if e.x is not None and not c.is_zero(e.x):
            legs.append(("x", e.x, e.degree))
        if e.a is not None and not c.is_zero(e.a):
            legs.append(("a", e.a, e.degree))
        legs_per_arg.append(legs)

    for combo in itertools.product(*legs_per_arg):
        shifted = [i for i, leg in enumerate(combo) if leg[0] == "x"]
        if len(shifted) > 2:
            continue
        if len(shifted) == 2:
            if k != 2:
                continue  # two shifted entries with extra arguments vanish
            x, y = combo[0][1], combo[1][1]
            sign = -1 if c.degree(x) % 2 else 1
            out = ext_add(v, out, ExtElement(out_degree, x=c.scale(c.bracket(x, y), sign)))
            continue
        if len(shifted) == 1:
            pos = shifted[0]
            x = combo[pos][1]
            if k == 1:
                piece = ExtElement(
                    out_degree, x=c.scale(v.D(x), -1), a=c.project(x)
                )
                out = ext_add(v, out, piece)
                continue
            # Koszul sign for moving the shifted leg to the front
            dx = combo[pos][2]
            below = sum(combo[j][2] for j in range(pos))
            sign = -1 if (dx * below) % 2 else 1
            acc = x
            for j in range(k):
                if j == pos:
                    continue
                acc = c.bracket(acc, combo[j][1])
            out = ext_add(v, out, ExtElement(out_degree, a=c.scale(c.project(acc), sign)))
            continue
        # all abelian
        if k == 1:
            a = combo[0][1]
            out = ext_add(v, out, ExtElement(out_degree, a=c.project(v.D(a))))
            continue
        acc = v.D(combo[0][1])
        for j in range(1, k):
            acc = c.bracket(acc, combo[j][1])
        out = ext_add(v, out, ExtElement(out_degree, a=c.project(acc)))
    return out


# ---------------------------------------------------------------------------
# generalized Jacobi testing


def _unshuffles(m: int, i: int):
    for inner in itertools.combinations(range(m), i):
        rest = tuple(j for j in range(m) if j not in inner)
        yield inner, rest


def _koszul_sign(degrees, inner, rest) -> int:
    sign = 1
    for u in inner:
        for w in rest:
            if w < u and (degrees[u] * degrees[w]) % 2:
                sign = -sign
    return sign


def jacobi_residual(v: VData, args: list[ExtElement]) -> float:
    """Value of the arity-m generalized Jacobi identity on given elements."""
    m = len(args)
    degrees = [e.degree for e in args]
    total = ExtElement(sum(degrees) + 2)
    for i in range(1, m + 1):
        for inner, rest in _unshuffles(m, i):
            sign = _koszul_sign(degrees, inner, rest)
            first = voronov_bracket(v, [args[j] for j in inner])
            outer = voronov_bracket(v, [first] + [args[j] for j in rest])
            total = ext_add(v, total, ext_scale(v, outer, sign))
    return total.residual(v)


def jacobi_test(v: VData, max_arity: int, samples: int, rng=None) -> dict:
    """Max residual per arity over random homogeneous samples (exact)."""
    rng = rng or random.Random(0)
    gen = getattr(v, "sample_factory", None)
    if gen is None:
        raise ValueError("attach a sample_factory to the VData first")
    out = {}
    for m in range(1, max_arity + 1):
        worst = 0.0
        for _ in range(samples):
            args = [gen(rng) for _ in range(m)]
            worst = max(worst, jacobi_residual(v, args))
        out[m] = worst
    return out


# ---------------------------------------------------------------------------
# the working instance


def torus_vdata(torus: TorusModel, arity_cap: int = 4) -> VData:
    carrier = TrigMultivectorCarrier(torus)
    v = VData(carrier, torus.pi_can(), arity_cap)
    v.sample_factory = lambda rng: _random_ext_element(v, torus, rng)
    return v


def matrix_vdata(n: int = 2, arity_cap: int = 4) -> VData:
    carrier = MatrixLieCarrier(n)
    v = VData(carrier, carrier.zero(1), arity_cap)
    v.sample_factory = lambda rng: _random_matrix_element(v, n, rng)
    return v


def _random_vertical(torus: TorusModel, rng, degree: int) -> TrigMultiVector:
    n = torus.n
    idxs = list(itertools.combinations(range(n, 2 * n), degree))
    if not idxs:
        return TrigMultiVector(torus.N, degree)
    idx = rng.choice(idxs)
    freq = tuple(rng.randint(-1, 1) for _ in range(n)) + (0,) * n
    coeff = Fraction(rng.randint(-3, 3), rng.choice([1, 2]))
    if coeff == 0:
        coeff = Fraction(1)
    s = TrigScalar.wave(torus.N, freq, rng.choice([0, 1]), coeff)
    if s.is_zero():
        s = TrigScalar.const(torus.N, coeff)
    return TrigMultiVector(torus.N, degree, {idx: s})


def _random_ext_element(v: VData, torus: TorusModel, rng) -> ExtElement:
    from .forms import TrigMultiVector as MV

    if rng.random() < 0.5:
        deg = rng.randint(1, min(3, torus.N))
        idxs = list(itertools.combinations(range(torus.N), deg))
        idx = rng.choice(idxs)
        freq = tuple(rng.randint(-1, 1) for _ in range(torus.N))
        coeff = Fraction(rng.randint(1, 3), rng.choice([1, 2]))
        s = TrigScalar.wave(torus.N, freq, rng.choice([0, 1]), coeff)
        if s.is_zero():
            s = TrigScalar.const(torus.N, coeff)
        return ExtElement.shifted(v, MV(torus.N, deg, {idx: s}))
    deg = rng.randint(1, torus.n)
    return ExtElement.abelian(v, _random_vertical(torus, rng, deg))


def _random_matrix_element(v: VData, n: int, rng) -> ExtElement:
    vals = [[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(n)]
    x = tuple(tuple(row) for row in vals)
    if rng.random() < 0.5:
        return ExtElement.shifted(v, x)
    return ExtElement.abelian(v, v.carrier.project(x))


# ---------------------------------------------------------------------------
# strict morphism check


@dataclass
class MorphismVerdict:
    form_residual: float
    transported_match: bool
    abelian_residual: float

    @property
    def both_zero(self) -> bool:
        return self.form_residual == 0.0 and self.abelian_residual == 0.0


def strict_morphism_check(torus: TorusModel, pi, beta: TrigForm) -> MorphismVerdict:
    """Compare the form-side MC residual with the Voronov-side residual of
    (transport(beta)[1], 0), truncated at the arities nonzero on it.

    The carrier component of the truncated Voronov residual must equal the
    transported form residual exactly; for relative beta the abelian
    component P(transport(beta)) vanishes.
    """
    from .koszul import mc_residual, transport

    v = torus_vdata(torus)
    x = transport(pi, beta)
    e = ExtElement.shifted(v, x)
    b1 = voronov_bracket(v, [e])
    b2 = voronov_bracket(v, [e, e])
    carrier = v.carrier

    def part(val, degree):
        return val if val is not None else carrier.zero(degree)

    # extension degree of the output; its shifted leg has GLA degree one up
    out_deg = e.degree + 1
    l_part = carrier.add(
        part(b1.x, out_deg + 1),
        carrier.scale(part(b2.x, out_deg + 1), Fraction(1, 2)),
    )
    a_part = part(b1.a, out_deg)

    res_form = mc_residual(pi, beta)
    transported = transport(pi, res_form)
    match = carrier.is_zero(carrier.add(l_part, transported.scale(-1)))
    return MorphismVerdict(
        form_residual=res_form.max_abs_coeff(),
        transported_match=match,
        abelian_residual=carrier.residual(a_part),
    )
