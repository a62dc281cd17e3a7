"""Deformation pairs and the classification maps.

A pair is a symplectic form together with a chart section encoding the
deformed submanifold.  The pipeline implemented here:

* q: pull the form back through the time-1 flow of the section's cutoff
  vertical field (exact when the section is zero);
* classification: coordinates of [base - q(pair)] in the degree-2
  relative basis, by exact block solves on the exact path and by
  Gauss-Legendre periods over the declared 2-cycles on the numeric path;
* realization: subtract a combination of basis representatives;
* equivalence witnesses: an exact-or-fitted primitive, a Moser flow
  between the q-images, and the five-branch plateau concatenation that
  conjugates it back to the pair level, with tube membership logged;
* cocycle prolongation and the two-square diagram comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .chart import GraphSubmanifold, Section, in_chart, zero_section
from .cohomology import (
    CohomologySpace,
    ConeElement,
    class_coordinates,
    cohomology,
    is_cocycle,
)
from .flows import (
    ChartExitError,
    MoserField,
    NegatedField,
    Plateau,
    Stage,
    concat_isotopy,
    flow,
    pullback_residual,
    run_program,
    section_field,
    wrapped_vertical_excess,
)
from .forms import TrigForm
from .fourier import fit_two_form, solve_relative_primitive
from .grids import default_per_axis, l_grid, torus_grid
from .linalg import invert_rational_matrix
from .rings import PiRat
from .sympoisson import (
    MatrixField,
    PoissonBivector,
    SymplecticForm,
    as_matrix_field,
    constant_two_form_matrix,
    f_map_inverse_matrices,
    form_from_rational_matrix,
    is_lagrangian,
    poisson_of,
    sharp_matrices,
    symplectic_from_trig,
    w_norm,
)
from .torus import CHART_BOUND, TorusModel


class CoordinateMismatch(ValueError):
    """The two pairs do not share a cohomology class; no witness exists."""


class AdmissibilityError(ValueError):
    """The pair is outside the admissible neighborhood (w_norm >= 1)."""


# ---------------------------------------------------------------------------
# context


def default_cycles(n: int) -> list[tuple[int, int]]:
    """Coordinate 2-tori whose periods separate the relative degree-2 basis."""
    if n == 1:
        return [(0, 1)]
    if n == 2:
        # the (x_i, y_j) tori and the vertical (y_1, y_2) torus
        return [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    raise ValueError("declare cycles explicitly for n > 2")


@dataclass
class ModuliContext:
    torus: TorusModel
    omega: SymplecticForm
    pi: PoissonBivector
    rel_space: CohomologySpace
    abs_space: CohomologySpace
    cycles: list[tuple[int, int]]
    budget: int
    per_axis: int
    l_per_axis: int
    steps: int
    quad_nodes: int = 64
    period_matrix: np.ndarray | None = None

    def grid(self) -> np.ndarray:
        return torus_grid(self.torus.N, self.per_axis)

    def lgrid(self) -> np.ndarray:
        return l_grid(self.torus.n, self.l_per_axis)


def make_context(
    torus: TorusModel,
    budget: int = 4,
    per_axis: int | None = None,
    l_per_axis: int | None = None,
    steps: int = 1000,
    quad_nodes: int = 64,
    cycles: list[tuple[int, int]] | None = None,
) -> ModuliContext:
    omega = symplectic_from_trig(torus, torus.omega_can())
    pi = poisson_of(omega)
    rel = cohomology(torus, "REL", 2, budget)
    absM = cohomology(torus, "M", 2, budget)
    cyc = cycles if cycles is not None else default_cycles(torus.n)
    if len(cyc) != rel.dim:
        raise ValueError(
            "need as many cycles as relative basis classes (%d vs %d)"
            % (len(cyc), rel.dim)
        )
    ctx = ModuliContext(
        torus=torus,
        omega=omega,
        pi=pi,
        rel_space=rel,
        abs_space=absM,
        cycles=cyc,
        budget=budget,
        per_axis=per_axis or default_per_axis(torus.N),
        l_per_axis=l_per_axis or default_per_axis(torus.N),
        steps=steps,
        quad_nodes=quad_nodes,
    )
    P = np.zeros((len(cyc), rel.dim))
    for i, axes in enumerate(cyc):
        for j, rep in enumerate(rel.reps):
            P[i, j] = float(torus.exact_period(rep, axes))
    if abs(np.linalg.det(P)) < 1e-12:
        raise ValueError("declared cycles do not separate the basis classes")
    ctx.period_matrix = P
    return ctx


# ---------------------------------------------------------------------------
# pairs


@dataclass
class DeformationPair:
    """(symplectic form, chart section); Lagrangian-validated on creation."""

    form: object          # TrigForm or MatrixField
    section: Section
    lagrangian_residual: float = 0.0

    @property
    def exact(self) -> bool:
        return isinstance(self.form, TrigForm)


def make_pair(ctx: ModuliContext, form, section: Section | None = None,
              tol: float = 1e-8) -> DeformationPair:
    torus = ctx.torus
    sec = section if section is not None else zero_section(torus)
    if not in_chart(sec):
        raise ChartExitError("section leaves the chart tube")
    x_points = ctx.lgrid()[:, : torus.n]
    ok, res = is_lagrangian(form, torus, sec, x_points=x_points, tol=tol)
    if not ok:
        raise ValueError(
            "the graph is not Lagrangian for the given form (residual %g)" % res
        )
    return DeformationPair(form, sec, res)


class FlowPullbackForm(MatrixField):
    """phi^* target as a matrix field, phi the flow of a stored field."""

    def __init__(self, dim, fld, target, t_end=1.0, steps=200):
        self.fld = fld
        self.target = target
        self.t_end = t_end
        self.steps = steps

        def fn(pts):
            fr = flow(self.fld, pts, 0.0, self.t_end, self.steps)
            B = as_matrix_field(self.target).matrices_at(fr.end)
            return np.swapaxes(fr.jac, -1, -2) @ B @ fr.jac

        super().__init__(dim, fn)


def q_map(ctx: ModuliContext, pair: DeformationPair):
    """phi_{L'}^* (form).  Exact identity when the section is zero."""
    if pair.section.is_zero():
        return pair.form
    fld = section_field(ctx.torus, pair.section)
    return FlowPullbackForm(ctx.torus.N, fld, pair.form, 1.0, ctx.steps)


def q_image_norm(ctx: ModuliContext, q_form) -> float:
    return w_norm(q_form, ctx.pi, ctx.grid())


# ---------------------------------------------------------------------------
# classification


def _coords_to_floats(coords) -> np.ndarray:
    return np.array([float(c) for c in coords])


def numeric_periods(ctx: ModuliContext, field) -> np.ndarray:
    """Gauss-Legendre periods of a 2-form field over the declared cycles."""
    nodes, weights = np.polynomial.legendre.leggauss(ctx.quad_nodes)
    u = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    N = ctx.torus.N
    out = np.zeros(len(ctx.cycles))
    mf = as_matrix_field(field, N)
    for i, (a, b) in enumerate(ctx.cycles):
        U, V = np.meshgrid(u, u, indexing="ij")
        pts = np.zeros((ctx.quad_nodes**2, N))
        pts[:, a] = U.ravel()
        pts[:, b] = V.ravel()
        vals = mf.matrices_at(pts)[:, a, b]
        out[i] = float(np.sum((w[:, None] * w[None, :]).ravel() * vals))
    return out


def classify_symplectic(ctx: ModuliContext, w_prime: TrigForm) -> list[PiRat]:
    """Exact coordinates of [base - w'] for forms keeping L Lagrangian."""
    ok, res = is_lagrangian(w_prime, ctx.torus)
    if not ok:
        raise ValueError("L is not Lagrangian for the form (residual %g)" % res)
    if not (w_norm(w_prime, ctx.pi, ctx.grid()) < 1.0):
        raise AdmissibilityError("form is outside the convex neighborhood")
    return class_coordinates(ctx.rel_space, ctx.omega.form - w_prime)


@dataclass
class Classification:
    coords: np.ndarray
    exact: list | None          # PiRat coordinates on the exact path
    q_norm: float
    cross_check: float | None   # |exact - periods| when both paths ran


def classify_pair(ctx: ModuliContext, pair: DeformationPair) -> Classification:
    """Coordinates of [base - q(pair)] in the relative degree-2 basis."""
    q = q_map(ctx, pair)
    qn = q_image_norm(ctx, q)
    if not qn < 1.0:
        raise AdmissibilityError(
            "pair is outside the admissible neighborhood (w_norm %.3f)" % qn
        )
    exact_coords = None
    cross = None
    if isinstance(q, TrigForm):
        try:
            exact_coords = class_coordinates(ctx.rel_space, ctx.omega.form - q)
        except (ValueError, TypeError):
            exact_coords = None
    diff_field = _difference_field(ctx.omega, q)
    periods = numeric_periods(ctx, diff_field)
    coords = np.linalg.solve(ctx.period_matrix, periods)
    if exact_coords is not None:
        cross = float(np.max(np.abs(coords - _coords_to_floats(exact_coords))))
        coords = _coords_to_floats(exact_coords)
    return Classification(coords, exact_coords, qn, cross)


def _difference_field(omega: SymplecticForm, q) -> MatrixField:
    if isinstance(q, TrigForm) and omega.form is not None:
        return as_matrix_field(omega.form - q)
    base = omega.field
    qf = as_matrix_field(q)

    def fn(pts):
        return base.matrices_at(pts) - qf.matrices_at(pts)

    return MatrixField(omega.dim, fn)


def realize_class(
    ctx: ModuliContext, coords, guard: float = 0.5
) -> DeformationPair:
    """(base - sum_i c_i eta_i, L); the guard bounds the coefficient norm."""
    cs = [c if isinstance(c, (PiRat, Fraction, int)) else Fraction(c) for c in coords]
    if len(cs) != ctx.rel_space.dim:
        raise ValueError("expected %d coordinates" % ctx.rel_space.dim)
    size = max((abs(float(c)) for c in cs), default=0.0)
    if size > guard:
        raise ValueError(
            "coordinate norm %.3f exceeds the guard %.3f for certified "
            "membership in the convex neighborhood" % (size, guard)
        )
    w = ctx.omega.form
    for c, rep in zip(cs, ctx.rel_space.reps):
        w = w - rep.scale(c)
    if not (w_norm(w, ctx.pi, ctx.grid()) < 1.0):
        raise AdmissibilityError("realized form leaves the convex neighborhood")
    return make_pair(ctx, w)


# ---------------------------------------------------------------------------
# equivalence witnesses


@dataclass
class EquivalenceWitness:
    pullback_residual: float
    l_match_residual: float
    chart_log: list
    coord_gap: float
    primitive_residual: float
    harmonic_leftover: float

    def ok(self, pullback_tol: float = 1e-5, l_tol: float = 1e-5) -> bool:
        return (
            self.pullback_residual <= pullback_tol
            and self.l_match_residual <= l_tol
        )


def _q_as_trig(ctx: ModuliContext, pair: DeformationPair):
    """The q-image as a trig form: exact when possible, else an FFT fit."""
    q = q_map(ctx, pair)
    if isinstance(q, TrigForm):
        return q, 0.0
    per = 32 if ctx.torus.N == 2 else 12
    fit, tail = fit_two_form(q, ctx.torus.N, per_axis=per, max_freq=per // 2 - 1)
    return fit, tail


def equivalence_witness(
    ctx: ModuliContext,
    p1: DeformationPair,
    p2: DeformationPair,
    coord_tol: float = 1e-6,
    sample_times=None,
) -> EquivalenceWitness:
    """Construct and verify the isotopy taking p1 to p2.

    Requires equal classification coordinates; builds the relative
    primitive between the q-images, the Moser flow between them, and the
    five-branch plateau concatenation
    phi_{L''} o psi_t o phi_{L'}^{-1} with the chart membership of every
    sampled image logged.
    """
    c1 = classify_pair(ctx, p1)
    c2 = classify_pair(ctx, p2)
    gap = float(np.max(np.abs(c1.coords - c2.coords)))
    if gap > coord_tol:
        raise CoordinateMismatch(
            "coordinates differ by %.3g (tolerance %.3g): no witness" % (gap, coord_tol)
        )

    q1, _tail1 = _q_as_trig(ctx, p1)
    q2, _tail2 = _q_as_trig(ctx, p2)
    delta = q2.to_float() - q1.to_float()
    mu, prim_res, harmonic = solve_relative_primitive(
        ctx.torus, delta, budget=max(delta.freq_radius(), 1)
    )
    if harmonic > 50 * coord_tol:
        raise CoordinateMismatch(
            "harmonic mismatch %.3g between the q-images: classes differ" % harmonic
        )

    moser = MoserField(q1.to_float(), mu)
    f1 = section_field(ctx.torus, p1.section)
    f2 = section_field(ctx.torus, p2.section)
    h = Plateau()

    def program(t):
        ht = h(t)
        stages = [Stage(f1, 0.0, -min(3.0 * ht, 1.0))]
        if ht > 1.0 / 3.0:
            stages.append(Stage(moser, 0.0, min(3.0 * ht - 1.0, 1.0)))
        if ht > 2.0 / 3.0:
            stages.append(Stage(f2, 0.0, 3.0 * ht - 2.0))
        return stages

    def expected_section(t):
        ht = h(t)
        if ht <= 1.0 / 3.0:
            fac = Fraction(1) - Fraction(min(3.0 * ht, 1.0)).limit_denominator(1 << 20)
            return p1.section.scale(fac)
        if ht <= 2.0 / 3.0:
            return zero_section(ctx.torus)
        fac = Fraction(3.0 * ht - 2.0).limit_denominator(1 << 20)
        return p2.section.scale(fac)

    times = sample_times if sample_times is not None else np.linspace(0.0, 1.0, 21)
    graph_pts = GraphSubmanifold(p1.section).points(ctx.lgrid()[:, : ctx.torus.n])
    log = concat_isotopy(
        ctx.torus,
        program,
        graph_pts,
        times,
        base_steps=max(ctx.steps // 5, 50),
        expected_section=expected_section,
        section_tol=5e-5,
    )

    grid = ctx.grid()
    end, J = run_program(program(1.0), grid, base_steps=ctx.steps)
    B2 = as_matrix_field(p2.form).matrices_at(end)
    pulled = np.swapaxes(J, -1, -2) @ B2 @ J
    B1 = as_matrix_field(p1.form).matrices_at(grid)
    res = float(np.max(np.abs(pulled - B1)))

    endpoint = log.endpoint
    target = GraphSubmanifold(p2.section).points(endpoint.end[:, : ctx.torus.n] % 1.0)
    dy = endpoint.end[:, ctx.torus.n :] - target[:, ctx.torus.n :]
    dy = (dy + 0.5) % 1.0 - 0.5
    l_res = float(np.max(np.abs(dy))) if dy.size else 0.0

    return EquivalenceWitness(
        pullback_residual=res,
        l_match_residual=l_res,
        chart_log=[(s.time, s.tube_excess, s.section_residual) for s in log.samples],
        coord_gap=gap,
        primitive_residual=prim_res,
        harmonic_leftover=harmonic,
    )


def translate_pair(
    ctx: ModuliContext, pair: DeformationPair, nu: Section, steps: int | None = None
) -> DeformationPair:
    """An equivalent pair: push the submanifold by the vertical flow of nu
    and pull the form back accordingly ((phi^{-1})^* form, sigma + nu)."""
    steps = steps or ctx.steps
    new_sec = pair.section + nu
    if not in_chart(new_sec):
        raise ChartExitError("translated section leaves the chart")
    back = NegatedField(section_field(ctx.torus, nu))
    new_form = FlowPullbackForm(ctx.torus.N, back, pair.form, 1.0, steps)
    return make_pair(ctx, new_form, new_sec, tol=1e-7)


# ---------------------------------------------------------------------------
# cocycle prolongation


@dataclass
class ProlongResult:
    epsilon: float
    times: list
    pairs: list
    sigma_derivative_exact: bool
    omega_fd_residual: float
    fd_pair: tuple  # fitted (eta_hat, beta_hat) at t = 0


def _vertical_field_for(ctx: ModuliContext, beta_ext: TrigForm):
    """Y with i_Y omega_can = -beta_ext for a y-independent dx-leg 1-form:
    the vertical field with the same coefficients."""
    from .forms import TrigMultiVector, contract

    torus = ctx.torus
    comps = {}
    for (i,), s in beta_ext.terms.items():
        if i >= torus.n:
            raise ValueError("extension must have x-legs only")
        comps[(torus.n + i,)] = s
    Y = TrigMultiVector(torus.N, 1, comps)
    if not (contract(Y, ctx.omega.form) + beta_ext).is_zero():
        raise AssertionError("vertical field does not solve the contraction")
    return Y


def prolong_cocycle(
    ctx: ModuliContext,
    eta: TrigForm,
    beta_L: TrigForm,
    n_samples: int = 5,
    fd_step: float = 1.0 / 64.0,
) -> ProlongResult:
    """The unobstructedness path ((phi_t^{-1})^*(base + t zeta), phi_t(L)).

    Exact pieces: zeta = eta - d(extension of beta_L) is closed and
    relative; the generating field is vertical and fiberwise constant, so
    the section path is exactly t * beta_L.  The epsilon guard is the
    largest dyadic with certified tube and convex-neighborhood bounds.
    """
    e = ConeElement(eta, beta_L)
    ok, res = is_cocycle(ctx.torus, e)
    if not ok:
        raise ValueError("input is not a cone cocycle (residual %g)" % res)
    torus = ctx.torus
    beta_ext = torus.extend_to_M(beta_L)
    zeta = eta - beta_ext.d()

    eps = 1.0
    sec1 = Section(torus, beta_L)
    for _ in range(30):
        chart_ok = sec1.scale(Fraction(eps).limit_denominator(1 << 20)).l1_bound() < float(
            CHART_BOUND
        )
        try:
            w_ok = w_norm(ctx.omega.form + zeta.scale(
                Fraction(eps).limit_denominator(1 << 20)), ctx.pi, ctx.grid()) < 1.0
        except ValueError:
            w_ok = False
        if chart_ok and w_ok:
            break
        eps /= 2.0
    else:
        raise ValueError("no admissible epsilon found")

    Y = _vertical_field_for(ctx, beta_ext)
    from .flows import TrigField

    fldY = TrigField(Y)

    times = [eps * k / (n_samples - 1) for k in range(n_samples)] if n_samples > 1 else [0.0]
    pairs = []
    for t in times:
        tfrac = Fraction(t).limit_denominator(1 << 30)
        target = ctx.omega.form + zeta.scale(tfrac)
        if t == 0.0:
            pairs.append(make_pair(ctx, target))
            continue
        back = NegatedField(fldY)
        wt = FlowPullbackForm(torus.N, back, target, t, max(10, int(ctx.steps * t)))
        pairs.append(make_pair(ctx, wt, sec1.scale(tfrac), tol=1e-7))

    # finite-difference first-order data at t = 0 (central)
    d = fd_step * eps
    dfrac = Fraction(d).limit_denominator(1 << 30)
    plus = FlowPullbackForm(
        torus.N, NegatedField(fldY), ctx.omega.form + zeta.scale(dfrac), d,
        max(20, int(ctx.steps * d)),
    )
    minus = FlowPullbackForm(
        torus.N, NegatedField(fldY), ctx.omega.form - zeta.scale(dfrac), -d,
        max(20, int(ctx.steps * d)),
    )
    grid = ctx.grid()
    fd = (plus.matrices_at(grid) - minus.matrices_at(grid)) / (2.0 * d)
    eta_vals = eta.matrix_at(grid)
    omega_fd_residual = float(np.max(np.abs(fd - eta_vals)))

    per = 32 if torus.N == 2 else 12
    fd_field = MatrixField(torus.N, lambda pts: (
        plus.matrices_at(pts) - minus.matrices_at(pts)) / (2.0 * d))
    eta_hat, _tail = fit_two_form(fd_field, torus.N, per_axis=per,
                                  max_freq=per // 2 - 1)

    return ProlongResult(
        epsilon=eps,
        times=times,
        pairs=pairs,
        sigma_derivative_exact=True,
        omega_fd_residual=omega_fd_residual,
        fd_pair=(eta_hat, beta_L),
    )


# ---------------------------------------------------------------------------
# the commuting diagram


@dataclass
class DiagramReport:
    first_square_pointwise: float
    first_square_coords: float
    second_square_exact: bool


def diagram_check(
    ctx: ModuliContext, sec: Section, w_prime: TrigForm
) -> DiagramReport:
    """Both squares of the moduli comparison diagram.

    First square: the time integral of the flowed contraction restricted
    to L equals minus the section, and the pair (base, graph) classifies
    to the class of d(extension of the section).  Second square: the
    relative coordinates of [base - w'] map to the absolute coordinates
    of the same difference, exactly.
    """
    torus = ctx.torus
    if not sec.form.d().is_zero():
        raise ValueError("the section must be closed")
    if not in_chart(sec):
        raise ChartExitError("section leaves the chart")

    # first square, pointwise integral identity
    fld = section_field(torus, sec)
    nodes, weights = np.polynomial.legendre.leggauss(ctx.quad_nodes)
    ts = 0.5 * (nodes + 1.0)
    ws = 0.5 * weights
    order = np.argsort(ts)
    ts = ts[order]
    ws = ws[order]
    lpts = ctx.lgrid()
    fr = flow(fld, lpts, 0.0, 1.0, ctx.steps, checkpoint_times=list(ts))
    acc = np.zeros((lpts.shape[0], torus.n))
    B = ctx.omega.form
    for (t, pts, J), w in zip(fr.checkpoints, ws):
        Bp = B.matrix_at(pts)
        Xp = fld.values(t, pts)
        cov = np.einsum("gi,gij->gj", Xp, Bp)
        acc += w * np.einsum("gj,gjk->gk", cov, J[:, :, : torus.n])
    sigma_vals = sec.values(lpts[:, : torus.n])
    first_pointwise = float(np.max(np.abs(acc + sigma_vals)))

    # first square, class comparison: classify (base, graph sec) against
    # the class of d(extension of sec)
    pair = make_pair(ctx, ctx.omega.form, sec)
    got = classify_pair(ctx, pair)
    dext = torus.extend_to_M(sec.form).d()
    alg = class_coordinates(ctx.rel_space, dext)
    first_coords = float(np.max(np.abs(got.coords - _coords_to_floats(alg))))

    # second square: forget relativity, exactly
    rel_coords = classify_symplectic(ctx, w_prime)
    image = TrigForm.zero(torus.N, 2)
    for c, rep in zip(rel_coords, ctx.rel_space.reps):
        image = image + rep.scale(c)
    lhs = ctx.abs_space.coordinates(image)
    rhs = ctx.abs_space.coordinates(ctx.omega.form - w_prime)
    second_ok = all(a == b for a, b in zip(lhs, rhs))

    return DiagramReport(first_pointwise, first_coords, second_ok)


# ---------------------------------------------------------------------------
# the Maurer-Cartan class of a pair


@dataclass
class MCClassResult:
    beta: TrigForm
    exact: bool
    mc_residual: float
    relativity_residual: float
    roundtrip_residual: float


def to_mc_class(ctx: ModuliContext, pair: DeformationPair,
                tol: float = 1e-8) -> MCClassResult:
    """Solve F(beta) = q(pair) - base pointwise for the MC element."""
    torus = ctx.torus
    q = q_map(ctx, pair)
    qn = q_image_norm(ctx, q)
    if not qn < 1.0:
        raise AdmissibilityError("q-image outside the convex neighborhood")

    if isinstance(q, TrigForm) and ctx.omega.form is not None:
        G = q - ctx.omega.form
        const = constant_two_form_matrix(G)
        if const is not None and ctx.pi.matrix is not None:
            S = [list(row) for row in zip(*ctx.pi.matrix)]
            Gf = [list(row) for row in zip(*const)]
            n = torus.N
            A = [
                [Fraction(int(i == j)) - sum(S[i][k] * Gf[k][j] for k in range(n))
                 for j in range(n)]
                for i in range(n)
            ]
            Bf = _rational_matmul(Gf, invert_rational_matrix(A))
            beta = form_from_rational_matrix(n, [list(r) for r in zip(*Bf)])
            res = koszul_mc_residual(ctx.pi, beta).max_abs_coeff()
            rel_res = torus.restrict_to_L(beta).max_abs_coeff()
            return MCClassResult(beta, True, res, rel_res, 0.0)

    grid = ctx.grid()
    S = sharp_matrices(ctx.pi.bivector, grid)
    Gmat = as_matrix_field(q).matrices_at(grid) - ctx.omega.matrices_at(grid)

    def beta_fn(pts):
        Sp = sharp_matrices(ctx.pi.bivector, pts)
        Gp = as_matrix_field(q).matrices_at(pts) - ctx.omega.matrices_at(pts)
        return f_map_inverse_matrices(Gp, Sp)

    per = 32 if torus.N == 2 else 12
    beta, tail = fit_two_form(MatrixField(torus.N, beta_fn), torus.N,
                              per_axis=per, max_freq=per // 2 - 1)
    res = koszul_mc_residual(ctx.pi, beta).max_abs_coeff()
    rel_res = torus.restrict_to_L(beta).max_abs_coeff()

    from .sympoisson import f_map

    fres = f_map(beta, ctx.pi, grid)
    recon = ctx.omega.matrices_at(grid) + fres.field.matrices_at(grid)
    roundtrip = float(np.max(np.abs(recon - as_matrix_field(q).matrices_at(grid))))
    return MCClassResult(beta, False, res, rel_res, roundtrip)


def _rational_matmul(A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return [
        [sum((A[i][t] * B[t][j] for t in range(k)), Fraction(0)) for j in range(m)]
        for i in range(n)
    ]
