"""Exterior calculus with exact trig-polynomial coefficients on flat tori.

Conventions (fixed once, every sign-sensitive test targets these):

* interior product: (i_X w)(v_2,...,v_p) = w(X, v_2, ..., v_p), and for
  decomposables i_{u ^ v} := i_u o i_v, so i_{u^v} w = w(v, u, ...);
* pairing <d theta_i, d/d theta_j> = delta_ij;
* Schouten bracket realized through odd coordinates xi_i ~ d/d theta_i:
  [F, G] = sum_i ( dF/dxi_i * dG/dtheta_i
                   - (-1)^((p-1)(q-1)) dG/dxi_i * dF/dtheta_i )
  with left xi-derivatives.  It restricts to the Lie bracket on vector
  fields and to X(f) on a (field, function) pair.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from .rings import PiRat
from .trig import COS, SIN, TrigScalar

Idx = tuple[int, ...]


def merge_indices(a: Idx, b: Idx) -> tuple[int, Idx] | None:
    """Merge two strictly increasing tuples; returns (sign, merged) or None
    when they overlap."""
    out: list[int] = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            # b[j] hops over the remaining len(a) - i entries of a
            if (len(a) - i) % 2:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return sign, tuple(out)


def insert_index(j: int, indices: Idx) -> tuple[int, Idx] | None:
    return merge_indices((j,), indices)


def remove_index(j: int, indices: Idx) -> tuple[int, Idx] | None:
    """Left-derivative style removal: sign = (-1)^position."""
    if j not in indices:
        return None
    pos = indices.index(j)
    sign = -1 if pos % 2 else 1
    return sign, indices[:pos] + indices[pos + 1 :]


class GradedTerms:
    """Shared container for forms and multivector fields."""

    __slots__ = ("dim", "degree", "terms")

    def __init__(self, dim: int, degree: int, terms: dict[Idx, TrigScalar] | None = None):
        # degrees outside [0, dim] are allowed as bookkeeping for chained
        # operations, but such objects are identically zero
        if not 0 <= degree <= dim:
            terms = None
        self.dim = dim
        self.degree = degree
        self.terms = {i: s for i, s in (terms or {}).items() if not s.is_zero()}

    # -- linear structure ------------------------------------------------

    def _new(self, dim, degree, terms=None):
        return type(self)(dim, degree, terms)

    def __add__(self, other):
        self._check_compatible(other)
        out = dict(self.terms)
        for idx, s in other.terms.items():
            t = out.get(idx)
            t = s if t is None else t + s
            if t.is_zero():
                out.pop(idx, None)
            else:
                out[idx] = t
        return self._new(self.dim, self.degree, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._new(self.dim, self.degree, {i: -s for i, s in self.terms.items()})

    def scale(self, factor):
        return self._new(
            self.dim, self.degree, {i: s.scale(factor) for i, s in self.terms.items()}
        )

    def scalar_mul(self, f: TrigScalar):
        return self._new(self.dim, self.degree, {i: f * s for i, s in self.terms.items()})

    def _check_compatible(self, other):
        if self.dim != other.dim or self.degree != other.degree:
            raise ValueError(
                "incompatible shapes: (%d,%d) vs (%d,%d)"
                % (self.dim, self.degree, other.dim, other.degree)
            )
        if type(self) is not type(other):
            raise TypeError("cannot mix forms and multivector fields")

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            type(self) is type(other)
            and self.dim == other.dim
            and self.degree == other.degree
            and self.terms == other.terms
        )

    def __hash__(self):
        raise TypeError("not hashable")

    def component(self, indices: Iterable[int]) -> TrigScalar:
        return self.terms.get(tuple(indices), TrigScalar.zero(self.dim))

    def items(self) -> Iterator[tuple[Idx, TrigScalar]]:
        return iter(self.terms.items())

    def wedge(self, other):
        self._check_compatible_dim(other)
        deg = self.degree + other.degree
        if deg > self.dim:
            return self._new(self.dim, deg)
        acc: dict[Idx, TrigScalar] = {}
        for ia, fa in self.terms.items():
            for ib, fb in other.terms.items():
                m = merge_indices(ia, ib)
                if m is None:
                    continue
                sign, idx = m
                s = fa * fb
                if sign < 0:
                    s = -s
                t = acc.get(idx)
                t = s if t is None else t + s
                acc[idx] = t
        return self._new(self.dim, deg, acc)

    def _check_compatible_dim(self, other):
        if self.dim != other.dim or type(self) is not type(other):
            raise TypeError("wedge requires same torus and same kind")

    def freq_radius(self) -> int:
        return max((s.freq_radius() for s in self.terms.values()), default=0)

    def max_abs_coeff(self) -> float:
        return max((s.max_abs_coeff() for s in self.terms.values()), default=0.0)

    def to_float(self):
        return self._new(
            self.dim, self.degree, {i: s.to_float() for i, s in self.terms.items()}
        )

    def evaluate(self, point, args) -> float:
        """Multilinear alternating evaluation on vectors (or covectors)."""
        vs = [np.asarray(v, dtype=float) for v in args]
        if len(vs) != self.degree:
            raise ValueError("expected %d arguments, got %d" % (self.degree, len(vs)))
        total = 0.0
        for idx, f in self.terms.items():
            if self.degree == 0:
                total += f.evaluate(point)
                continue
            mat = np.array([[v[i] for v in vs] for i in idx])
            det = float(np.linalg.det(mat)) if self.degree > 1 else float(mat[0, 0])
            if det:
                total += f.evaluate(point) * det
        return total

    def __repr__(self):
        kind = type(self).__name__
        if not self.terms:
            return "%s(dim=%d, deg=%d, 0)" % (kind, self.dim, self.degree)
        bits = ["%s: %r" % (list(i), s) for i, s in sorted(self.terms.items())]
        return "%s(dim=%d, deg=%d, %s)" % (kind, self.dim, self.degree, "; ".join(bits))


class TrigForm(GradedTerms):
    """Differential form with trig-polynomial coefficients."""

    @classmethod
    def zero(cls, dim: int, degree: int = 0) -> "TrigForm":
        return cls(dim, degree)

    @classmethod
    def from_components(cls, dim, degree, comps: dict[Idx, TrigScalar]) -> "TrigForm":
        return cls(dim, degree, {tuple(i): s for i, s in comps.items()})

    @classmethod
    def basis(cls, dim: int, indices: Iterable[int], coeff=1) -> "TrigForm":
        idx = tuple(indices)
        return cls(dim, len(idx), {idx: TrigScalar.const(dim, coeff)})

    def d(self) -> "TrigForm":
        out: dict[Idx, TrigScalar] = {}
        for idx, f in self.terms.items():
            for j in range(self.dim):
                if j in idx:
                    continue
                df = f.partial(j)
                if df.is_zero():
                    continue
                sign, new_idx = insert_index(j, idx)
                if sign < 0:
                    df = -df
                t = out.get(new_idx)
                t = df if t is None else t + df
                out[new_idx] = t
        return TrigForm(self.dim, self.degree + 1, out)

    def pullback_affine(self, matrix, shift=None) -> "TrigForm":
        """Pull back along u -> A u + b (A integer, maps lattice to lattice)."""
        rows = len(matrix)
        if rows != self.dim:
            raise ValueError("matrix must have %d rows" % self.dim)
        for row in matrix:
            for a in row:
                if int(a) != a:
                    raise ValueError("non-integer matrix entry %r" % (a,))
        m = len(matrix[0]) if rows else 0
        out = TrigForm(m, self.degree)
        for idx, f in self.terms.items():
            fs = f.pullback_affine(matrix, shift)
            if fs.is_zero():
                continue
            # legs: d theta_i -> sum_j A[i][j] du_j, expanded as iterated wedge
            leg = TrigForm(m, 0, {(): fs})
            for i in idx:
                acc: dict[Idx, TrigScalar] = {}
                for j in range(m):
                    if matrix[i][j]:
                        acc[(j,)] = TrigScalar.const(m, matrix[i][j])
                leg = leg.wedge(TrigForm(m, 1, acc))
                if leg.is_zero():
                    leg = TrigForm(m, self.degree)
                    break
            out = out + leg
        return out

    def matrix_at(self, points: np.ndarray) -> np.ndarray:
        """Degree-2 only: antisymmetric matrices B[g,i,j] = w(e_i, e_j)."""
        if self.degree != 2:
            raise ValueError("matrix_at requires a 2-form")
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = np.zeros((pts.shape[0], self.dim, self.dim))
        for (i, j), f in self.terms.items():
            vals = f.evaluate_many(pts)
            out[:, i, j] += vals
            out[:, j, i] -= vals
        return out[0] if single else out

    def covector_at(self, points: np.ndarray) -> np.ndarray:
        """Degree-1 only: rows of component values."""
        if self.degree != 1:
            raise ValueError("covector_at requires a 1-form")
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = np.zeros((pts.shape[0], self.dim))
        for (i,), f in self.terms.items():
            out[:, i] = f.evaluate_many(pts)
        return out[0] if single else out


class TrigMultiVector(GradedTerms):
    """Multivector field with trig-polynomial coefficients."""

    @classmethod
    def zero(cls, dim: int, degree: int = 0) -> "TrigMultiVector":
        return cls(dim, degree)

    @classmethod
    def basis(cls, dim: int, indices: Iterable[int], coeff=1) -> "TrigMultiVector":
        idx = tuple(indices)
        return cls(dim, len(idx), {idx: TrigScalar.const(dim, coeff)})

    def vector_at(self, points: np.ndarray) -> np.ndarray:
        if self.degree != 1:
            raise ValueError("vector_at requires a vector field")
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = np.zeros((pts.shape[0], self.dim))
        for (i,), f in self.terms.items():
            out[:, i] = f.evaluate_many(pts)
        return out[0] if single else out


# -- top-level operations ----------------------------------------------


def exterior_derivative(w: TrigForm) -> TrigForm:
    return w.d()


def wedge(a: GradedTerms, b: GradedTerms) -> GradedTerms:
    return a.wedge(b)


def contract(P: TrigMultiVector, w: TrigForm) -> TrigForm:
    """Iterated interior product i_P w; zero when deg P > deg w."""
    if P.degree > w.degree:
        return TrigForm(w.dim, w.degree - P.degree)
    acc: dict[Idx, TrigScalar] = {}
    for jdx, g in P.terms.items():
        for idx, f in w.terms.items():
            sign = 1
            cur = idx
            ok = True
            # i_{e_{j1} ^ ... ^ e_{jq}} = i_{e_{j1}} o ... o i_{e_{jq}},
            # so the largest index is contracted first.
            for j in reversed(jdx):
                r = remove_index(j, cur)
                if r is None:
                    ok = False
                    break
                s, cur = r
                sign *= s
            if not ok:
                continue
            t = g * f
            if sign < 0:
                t = -t
            prev = acc.get(cur)
            acc[cur] = t if prev is None else prev + t
    return TrigForm(w.dim, w.degree - P.degree, acc)


def lie_derivative(X: TrigMultiVector, w: TrigForm) -> TrigForm:
    """Cartan formula d i_X + i_X d; X must be a vector field."""
    if X.degree != 1:
        raise ValueError("lie_derivative requires a degree-1 field")
    return contract(X, w.d()) + contract(X, w).d()


def schouten(P: TrigMultiVector, Q: TrigMultiVector) -> TrigMultiVector:
    """Schouten-Nijenhuis bracket (sign conventions in the module docstring).

    In the global commuting frame only coefficient derivatives contribute:

      [f xi_I, g xi_J] = (-1)^(p+1)       sum_{i in I} d_xi_i(f xi_I) ^ (d_i g) xi_J
                       + (-1)^(p(q-1)+1)  sum_{j in J} d_xi_j(g xi_J) ^ (d_j f) xi_I

    with left xi-derivatives.  The sign dictionary is pinned by requiring
    the Leibniz rule, the graded Jacobi identity, and the reductions to the
    Lie bracket and to X(f); the test suite checks all four exactly.
    """
    p, q = P.degree, Q.degree
    deg = p + q - 1
    dim = P.dim
    if deg < 0 or deg > dim:
        return TrigMultiVector(dim, deg)
    e1 = -1 if p % 2 == 0 else 1  # (-1)^(p+1)
    e2 = -1 if (p * (q - 1)) % 2 == 0 else 1  # (-1)^(p(q-1)+1)
    acc: dict[Idx, TrigScalar] = {}

    def accumulate(base: Idx, rest: Idx, s: TrigScalar, sign: int) -> None:
        m = merge_indices(base, rest)
        if m is None:
            return
        msign, idx = m
        t = s if sign * msign > 0 else -s
        prev = acc.get(idx)
        acc[idx] = t if prev is None else prev + t

    for idxP, f in P.terms.items():
        for idxQ, g in Q.terms.items():
            for i in idxP:
                dg = g.partial(i)
                if dg.is_zero():
                    continue
                s, red = remove_index(i, idxP)
                accumulate(red, idxQ, f * dg, e1 * s)
            for j in idxQ:
                df = f.partial(j)
                if df.is_zero():
                    continue
                s, red = remove_index(j, idxQ)
                accumulate(red, idxP, g * df, e2 * s)
    return TrigMultiVector(dim, deg, acc)


def pullback_affine(matrix, w: TrigForm, shift=None) -> TrigForm:
    return w.pullback_affine(matrix, shift)


def evaluate(w: TrigForm, point, args) -> float:
    return w.evaluate(point, args)
