"""Symplectic/Poisson pointwise linear algebra.

Matrix conventions (every sign-sensitive routine is tested against these):

* a 2-form w has the antisymmetric matrix B[i][j] = w(e_i, e_j);
* the flat map acts on column vectors as Flat(w) = B^T, i.e.
  (w-flat v)_j = w(v, e_j);
* a bivector q has Q[i][j] = q(dth_i, dth_j) and Sharp(q) = Q^T;
* the Poisson structure of w is pi = -w^{-1}, matrixwise Q = -B^{-1},
  which makes Sharp(pi) Flat(w) = -Id.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .forms import TrigForm, TrigMultiVector, contract
from .grids import default_per_axis, torus_grid
from .linalg import invert_rational_matrix, mat_mul_rational
from .rings import PiRat
from .torus import TorusModel
from .trig import TrigScalar


class DegenerateError(ValueError):
    """Pointwise linear-algebra failure with a witness point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


# ---------------------------------------------------------------------------
# matrix-valued fields


class MatrixField:
    """A torus-point -> matrix map; the common currency of the numeric side."""

    def __init__(self, dim: int, fn):
        self.dim = dim
        self._fn = fn

    def matrices_at(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = self._fn(pts)
        return out[0] if single else out


def as_matrix_field(obj, dim: int | None = None) -> MatrixField:
    if isinstance(obj, MatrixField):
        return obj
    if isinstance(obj, TrigForm):
        return MatrixField(obj.dim, obj.matrix_at)
    if isinstance(obj, SymplecticForm):
        return obj.field
    if hasattr(obj, "matrices_at"):
        return MatrixField(dim or obj.dim, obj.matrices_at)
    raise TypeError("cannot interpret %r as a matrix field" % (obj,))


# ---------------------------------------------------------------------------
# exact constant-matrix helpers


def constant_two_form_matrix(w: TrigForm) -> list[list[Fraction]] | None:
    """Rational matrix of a constant-coefficient 2-form, else None."""
    if w.degree != 2:
        raise ValueError("need a 2-form")
    n = w.dim
    mat = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), f in w.terms.items():
        for freq, phase, coeff in f.waves():
            if any(freq) or not isinstance(coeff, PiRat):
                return None
            if not coeff.is_rational:
                return None
            q = coeff.rational_part()
            mat[i][j] += q
            mat[j][i] -= q
    return mat


def form_from_rational_matrix(dim: int, mat) -> TrigForm:
    comps = {}
    for i in range(dim):
        for j in range(i + 1, dim):
            if mat[i][j]:
                comps[(i, j)] = TrigScalar.const(dim, mat[i][j])
    return TrigForm(dim, 2, comps)


def bivector_from_rational_matrix(dim: int, mat) -> TrigMultiVector:
    comps = {}
    for i in range(dim):
        for j in range(i + 1, dim):
            if mat[i][j]:
                comps[(i, j)] = TrigScalar.const(dim, mat[i][j])
    return TrigMultiVector(dim, 2, comps)


def bivector_matrix(q: TrigMultiVector, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    out = np.zeros((pts.shape[0], q.dim, q.dim))
    for (i, j), f in q.terms.items():
        vals = f.evaluate_many(pts)
        out[:, i, j] += vals
        out[:, j, i] -= vals
    return out[0] if single else out


# ---------------------------------------------------------------------------
# flat and sharp


def flat(w: TrigForm, X: TrigMultiVector) -> TrigForm:
    """Exact w-flat of a vector field: i_X w."""
    if X.degree != 1:
        raise ValueError("flat expects a vector field")
    return contract(X, w)


def sharp(pi: TrigMultiVector, xi: TrigForm) -> TrigMultiVector:
    """Exact pi-sharp of a 1-form, convention pi(xi, eta) = <sharp(xi), eta>."""
    if pi.degree != 2 or xi.degree != 1:
        raise ValueError("sharp expects a bivector and a 1-form")
    dim = pi.dim
    out = TrigMultiVector(dim, 1)
    for (a, b), g in pi.terms.items():
        for (c,), f in xi.terms.items():
            if c == a:
                out = out + TrigMultiVector(dim, 1, {(b,): g * f})
            elif c == b:
                out = out + TrigMultiVector(dim, 1, {(a,): -(g * f)})
    return out


def flat_matrices(two_form_field, points: np.ndarray) -> np.ndarray:
    B = as_matrix_field(two_form_field).matrices_at(points)
    return np.swapaxes(B, -1, -2)


def sharp_matrices(bivector_field, points: np.ndarray) -> np.ndarray:
    if isinstance(bivector_field, TrigMultiVector):
        Q = bivector_matrix(bivector_field, points)
    else:
        Q = as_matrix_field(bivector_field).matrices_at(points)
    return np.swapaxes(Q, -1, -2)


# ---------------------------------------------------------------------------
# symplectic forms and their Poisson inverses


@dataclass
class SymplecticForm:
    torus: TorusModel
    form: TrigForm | None
    field: MatrixField
    min_abs_det: float
    exact_det: Fraction | None = None

    @property
    def dim(self) -> int:
        return self.torus.N

    def matrices_at(self, points):
        return self.field.matrices_at(points)


def symplectic_from_trig(
    torus: TorusModel, w: TrigForm, per_axis: int | None = None
) -> SymplecticForm:
    """Wrap a closed nondegenerate trig 2-form, with certificates."""
    if w.degree != 2 or w.dim != torus.N:
        raise ValueError("expected a 2-form on the model torus")
    if not w.d().is_zero():
        raise ValueError("form is not closed")
    const = constant_two_form_matrix(w)
    if const is not None:
        det = _rational_det(const)
        if det == 0:
            raise DegenerateError("constant form is degenerate (det = 0)")
        return SymplecticForm(torus, w, as_matrix_field(w), abs(float(det)), det)
    grid = torus_grid(torus.N, per_axis or default_per_axis(torus.N))
    dets = np.linalg.det(w.matrix_at(grid))
    min_det = float(np.min(np.abs(dets)))
    if min_det < 1e-9:
        i = int(np.argmin(np.abs(dets)))
        raise DegenerateError(
            "form is degenerate on the verification grid (|det| = %g)" % min_det,
            point=grid[i],
        )
    return SymplecticForm(torus, w, as_matrix_field(w), min_det)


def symplectic_from_field(
    torus: TorusModel, field: MatrixField, per_axis: int | None = None
) -> SymplecticForm:
    grid = torus_grid(torus.N, per_axis or default_per_axis(torus.N))
    dets = np.linalg.det(field.matrices_at(grid))
    min_det = float(np.min(np.abs(dets)))
    if min_det < 1e-9:
        i = int(np.argmin(np.abs(dets)))
        raise DegenerateError("field is degenerate on the grid", point=grid[i])
    return SymplecticForm(torus, None, field, min_det)


@dataclass
class PoissonBivector:
    torus: TorusModel
    bivector: TrigMultiVector | None      # exact when the form is constant
    matrix: list[list[Fraction]] | None   # rational Q with Q = -B^{-1}
    field: MatrixField

    @property
    def dim(self) -> int:
        return self.torus.N

    def sharp_exact(self, xi: TrigForm) -> TrigMultiVector:
        if self.bivector is None:
            raise ValueError("no exact bivector available (non-constant base)")
        return sharp(self.bivector, xi)


def poisson_of(symp: SymplecticForm) -> PoissonBivector:
    """pi = -omega^{-1}; exact when the base form is constant rational."""
    if symp.form is not None:
        const = constant_two_form_matrix(symp.form)
        if const is not None:
            Q = [[-x for x in row] for row in invert_rational_matrix(const)]
            biv = bivector_from_rational_matrix(symp.dim, Q)
            return PoissonBivector(
                symp.torus, biv, Q, MatrixField(symp.dim, lambda pts, b=biv: bivector_matrix(b, pts))
            )

    def fn(pts, field=symp.field):
        B = field.matrices_at(pts)
        return -np.linalg.inv(B)

    return PoissonBivector(symp.torus, None, None, MatrixField(symp.dim, fn))


def sharp_flat_residual(pi: PoissonBivector, symp: SymplecticForm, points) -> float:
    """max |Sharp(pi) Flat(w) + Id| over the points (0 for exact pairs)."""
    S = sharp_matrices(pi.bivector if pi.bivector is not None else pi.field, points)
    F = flat_matrices(symp, points)
    eye = np.eye(symp.dim)
    return float(np.max(np.abs(S @ F + eye)))


def _rational_det(mat) -> Fraction:
    n = len(mat)
    a = [[Fraction(x) for x in row] for row in mat]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            if a[r][col]:
                f = a[r][col] * inv
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


# ---------------------------------------------------------------------------
# the W-neighborhood


def w_norm(wtilde, pi: PoissonBivector, points) -> float:
    """sup over the grid of the operator 2-norm of Sharp(pi)Flat(w~) + Id.

    The Euclidean metric makes the sup over unit vectors equal to the
    matrix 2-norm at each point; w_norm(base form) = 0.
    """
    S = sharp_matrices(pi.bivector if pi.bivector is not None else pi.field, points)
    F = flat_matrices(wtilde, points)
    M = S @ F + np.eye(S.shape[-1])
    svals = np.linalg.svd(M, compute_uv=False)
    return float(np.max(svals))


def in_W(wtilde, pi: PoissonBivector, points, require_closed: bool = True) -> bool:
    """Membership in the convex symplectic neighborhood {norm < 1}.

    Exact closedness is enforced for trig inputs; matrix fields are
    accepted as-is (they arise as pullbacks of closed forms, which are
    closed).
    """
    if isinstance(wtilde, TrigForm):
        if require_closed and not wtilde.d().is_zero():
            raise ValueError("in_W requires a closed form")
    return w_norm(wtilde, pi, points) < 1.0


# ---------------------------------------------------------------------------
# the deformation map F and its Poisson side


@dataclass
class FMapResult:
    exact: TrigForm | None
    field: MatrixField
    min_abs_det: float       # of Id + Sharp(pi) Flat(beta) over the grid

    def deformed(self, omega: SymplecticForm) -> "MatrixField":
        base = omega.field

        def fn(pts):
            return base.matrices_at(pts) + self.field.matrices_at(pts)

        return MatrixField(self.field.dim, fn)


def f_map(
    beta: TrigForm,
    pi: PoissonBivector,
    points=None,
    det_tol: float = 1e-9,
) -> FMapResult:
    """F(beta) with Flat(F) = Flat(beta) (Id + Sharp(pi) Flat(beta))^{-1}.

    Exact when beta is constant rational and pi has an exact rational
    matrix; otherwise a pointwise matrix field.  Raises DegenerateError
    with a witness point when Id + Sharp Flat is (near) singular.
    """
    dim = pi.dim
    const = constant_two_form_matrix(beta) if isinstance(beta, TrigForm) else None
    if const is not None and pi.matrix is not None:
        S = _transpose(pi.matrix)
        Fb = _transpose(const)
        A = _mat_add(_eye(dim), mat_mul_rational(S, Fb))
        det = _rational_det(A)
        if det == 0:
            raise DegenerateError(
                "Id + sharp(pi) flat(beta) is singular (exact det = 0)"
            )
        Fflat = mat_mul_rational(Fb, invert_rational_matrix(A))
        Fmat = _transpose(Fflat)
        form = form_from_rational_matrix(dim, Fmat)
        return FMapResult(form, as_matrix_field(form), abs(float(det)))

    if points is None:
        raise ValueError("non-constant input needs verification points")
    S = sharp_matrices(pi.bivector if pi.bivector is not None else pi.field, points)
    Fb = flat_matrices(beta, points)
    A = np.eye(dim) + S @ Fb
    dets = np.linalg.det(A)
    min_det = float(np.min(np.abs(dets)))
    if min_det < det_tol:
        i = int(np.argmin(np.abs(dets)))
        raise DegenerateError(
            "Id + sharp(pi) flat(beta) is singular at a grid point "
            "(|det| = %g)" % min_det,
            point=np.asarray(points)[i],
        )

    beta_field = as_matrix_field(beta)
    pi_obj = pi.bivector if pi.bivector is not None else pi.field

    def fn(pts):
        Sp = sharp_matrices(pi_obj, pts)
        Fbp = flat_matrices(beta_field, pts)
        Ap = np.eye(dim) + Sp @ Fbp
        Fflat = Fbp @ np.linalg.inv(Ap)
        return np.swapaxes(Fflat, -1, -2)

    return FMapResult(None, MatrixField(dim, fn), min_det)


def f_map_inverse_matrices(G: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Solve F(beta) = G for beta pointwise: Flat(b) = Flat(G)(Id - Sharp Flat(G))^{-1}."""
    dim = G.shape[-1]
    Gf = np.swapaxes(G, -1, -2)
    A = np.eye(dim) - S @ Gf
    bf = Gf @ np.linalg.inv(A)
    return np.swapaxes(bf, -1, -2)


def poisson_side(beta: TrigForm, pi: PoissonBivector) -> TrigMultiVector:
    """pi - wedge^2(sharp)(beta), exact for a constant-coefficient pi.

    (wedge^2 sharp beta)(xi, eta) = beta(sharp xi, sharp eta); matrixwise
    the correction is Q B_beta Q^T on bivector matrices.
    """
    if pi.bivector is None:
        raise ValueError("poisson_side needs the exact bivector")
    dim = pi.dim
    Q = pi.matrix
    correction = TrigMultiVector(dim, 2)
    for (a, b), g in beta.terms.items():
        # wedge^2 sharp of d th_a ^ d th_b expands over 2x2 minors of Q
        for i in range(dim):
            for j in range(i + 1, dim):
                minor = Q[a][i] * Q[b][j] - Q[a][j] * Q[b][i]
                if minor:
                    correction = correction + TrigMultiVector(
                        dim, 2, {(i, j): g.scale(minor)}
                    )
    return pi.bivector - correction


def poisson_side_residual(
    beta: TrigForm, pi: PoissonBivector, omega: SymplecticForm, points
) -> float:
    """max | -(B_w + B_F)^{-1} - (Q - Q B_b Q^T) | over the grid."""
    fres = f_map(beta, pi, points)
    Bw = as_matrix_field(omega).matrices_at(points)
    BF = fres.field.matrices_at(points)
    lhs = -np.linalg.inv(Bw + BF)
    rhs = bivector_matrix(poisson_side(beta, pi), points)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# Lagrangian tests


def is_lagrangian(
    wtilde,
    torus: TorusModel,
    section=None,
    x_points=None,
    tol: float = 1e-10,
) -> tuple[bool, float]:
    """Does the given submanifold pull the 2-form back to zero?

    ``section`` None or zero means the reference sub-torus L, where the
    test is exact for trig forms.  For graphs the pullback is exact when
    the coefficients are y-independent, otherwise a grid residual decides
    within ``tol``.
    """
    from .chart import Section, graph_lagrangian_residual, graph_pullback

    if section is not None and not isinstance(section, Section):
        raise TypeError("section must be a Section or None")
    on_L = section is None or section.is_zero()
    if isinstance(wtilde, SymplecticForm) and wtilde.form is not None:
        wtilde = wtilde.form
    if isinstance(wtilde, TrigForm):
        if on_L:
            rest = torus.restrict_to_L(wtilde)
            return rest.is_zero(), rest.max_abs_coeff()
        try:
            pulled = graph_pullback(torus, wtilde, section)
            return pulled.is_zero(), pulled.max_abs_coeff()
        except ValueError:
            pass  # y-dependent coefficients: fall through to the grid
    if x_points is None:
        x_points = torus_grid(torus.n, default_per_axis(torus.N))
    sec = section if section is not None else _zero_section(torus)
    res = graph_lagrangian_residual(wtilde, sec, x_points)
    return res <= tol, res


def _zero_section(torus: TorusModel):
    from .chart import zero_section

    return zero_section(torus)


def _eye(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def _mat_add(A, B):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(A, B)]


def _transpose(A):
    return [list(row) for row in zip(*A)]
