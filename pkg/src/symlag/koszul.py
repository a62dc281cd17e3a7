"""The Koszul shifted dg-Lie algebra on forms and its gauge flows.

The bracket is *defined* by transport through the strict isomorphism

    T = - wedge^k sharp(pi) : k-forms -> k-vector fields,

which is an isomorphism because pi is invertible here.  On the multivector
side the structure maps are  mu_1(Q) = -[pi, Q]  and
mu_2(Q1, Q2) = -(-1)^{|Q1|} [Q1, Q2]  (Schouten bracket, multivector
degrees), and the transported operations are

    lambda_1 = d,      lambda_2(a, b) = T^{-1} mu_2(T a, T b),
    [a, b]_pi = (-1)^{|a|} lambda_2(a, b).

That T intertwines d with mu_1 at every degree is an exact identity of
this codebase, checked by the test suite on random inputs; the classical
one-form formula  L_{sharp a} b - L_{sharp b} a - d pi(a, b)  is used as
an independent oracle, not as the definition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .forms import TrigForm, TrigMultiVector, contract, lie_derivative, schouten
from .grids import default_per_axis, torus_grid
from .rings import PiRat
from .sympoisson import (
    DegenerateError,
    PoissonBivector,
    SymplecticForm,
    f_map,
    is_lagrangian,
    sharp,
    symplectic_from_field,
    symplectic_from_trig,
)
from .torus import TorusModel


# ---------------------------------------------------------------------------
# transport


def wedge_sharp(pi: PoissonBivector, form: TrigForm) -> TrigMultiVector:
    """(wedge^k sharp)(f dth_I) = f sum_J det(Q[I, J]) frame_J (exact)."""
    if pi.matrix is None:
        raise ValueError("transport needs a constant-coefficient pi")
    Q = pi.matrix
    dim = form.dim
    k = form.degree
    out = TrigMultiVector(dim, k)
    for idx, f in form.terms.items():
        for J in itertools.combinations(range(dim), k):
            minor = _minor_det(Q, idx, J)
            if minor:
                out = out + TrigMultiVector(dim, k, {J: f.scale(minor)})
    return out


def wedge_flat(pi: PoissonBivector, mv: TrigMultiVector) -> TrigForm:
    """Inverse of wedge_sharp: expand over minors of Q^{-1}."""
    if pi.matrix is None:
        raise ValueError("transport needs a constant-coefficient pi")
    from .linalg import invert_rational_matrix

    Qinv = invert_rational_matrix(pi.matrix)
    dim = mv.dim
    k = mv.degree
    out = TrigForm(dim, k)
    for idx, f in mv.terms.items():
        for J in itertools.combinations(range(dim), k):
            minor = _minor_det(Qinv, idx, J)
            if minor:
                out = out + TrigForm(dim, k, {J: f.scale(minor)})
    return out


def _minor_det(Q, rows, cols) -> Fraction:
    if not rows:
        return Fraction(1)
    return _minor_det_list([[Q[a][b] for b in cols] for a in rows])


def _minor_det_list(m) -> Fraction:
    k = len(m)
    if k == 1:
        return m[0][0]
    if k == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = Fraction(0)
    for j in range(k):
        sub = [row[:j] + row[j + 1 :] for row in m[1:]]
        total += (-1) ** j * m[0][j] * _minor_det_list(sub)
    return total


def transport(pi: PoissonBivector, form: TrigForm) -> TrigMultiVector:
    """T = - wedge^k sharp."""
    return wedge_sharp(pi, form).scale(-1)


def transport_inverse(pi: PoissonBivector, mv: TrigMultiVector) -> TrigForm:
    return wedge_flat(pi, mv).scale(-1)


# ---------------------------------------------------------------------------
# structure maps


def mu1(pi: PoissonBivector, Q: TrigMultiVector) -> TrigMultiVector:
    if pi.bivector is None:
        raise ValueError("mu1 needs the exact bivector")
    return schouten(pi.bivector, Q).scale(-1)


def mu2(Q1: TrigMultiVector, Q2: TrigMultiVector) -> TrigMultiVector:
    sign = -1 if Q1.degree % 2 == 0 else 1  # -(-1)^{|Q1|}
    return schouten(Q1, Q2).scale(sign)


def lambda1(a: TrigForm) -> TrigForm:
    return a.d()


def lambda2(pi: PoissonBivector, a: TrigForm, b: TrigForm) -> TrigForm:
    return transport_inverse(pi, mu2(transport(pi, a), transport(pi, b)))


def koszul_bracket(pi: PoissonBivector, a: TrigForm, b: TrigForm) -> TrigForm:
    """[a, b]_pi = (-1)^{|a|} lambda_2(a, b)."""
    sign = 1 if a.degree % 2 == 0 else -1
    return lambda2(pi, a, b).scale(sign)


def one_form_bracket_oracle(
    pi: PoissonBivector, a: TrigForm, b: TrigForm
) -> TrigForm:
    """Independent check: [a,b]_pi = L_{sharp a} b - L_{sharp b} a - d pi(a,b)."""
    if a.degree != 1 or b.degree != 1:
        raise ValueError("the classical formula is for 1-forms")
    sa = sharp(pi.bivector, a)
    sb = sharp(pi.bivector, b)
    pair = contract(sa, b)  # <sharp a, b> = pi(a, b)
    return lie_derivative(sa, b) - lie_derivative(sb, a) - pair.d()


def poisson_bracket_functions(pi: PoissonBivector, f: TrigForm, g: TrigForm) -> TrigForm:
    """{f, g} = pi(df, dg) for 0-forms."""
    return contract(sharp(pi.bivector, f.d()), g.d())


def second_koszul_helper(pi: PoissonBivector, a: TrigForm, b: TrigForm) -> TrigForm:
    """i_pi(a^b) - (i_pi a)^b - a^(i_pi b): the quadratic corrector used by
    the coderivation construction; kept standalone (bilinear, symmetric)."""
    ip = pi.bivector
    return (
        contract(ip, a.wedge(b)) - contract(ip, a).wedge(b) - a.wedge(contract(ip, b))
    )


# ---------------------------------------------------------------------------
# Maurer-Cartan elements


@dataclass
class MCElement:
    torus: TorusModel
    beta: TrigForm
    relative: bool = True

    def __post_init__(self):
        if self.beta.degree != 2 or self.beta.dim != self.torus.N:
            raise ValueError("an MC candidate is a 2-form on the model torus")


def relativity_residual(torus: TorusModel, beta: TrigForm) -> float:
    return torus.restrict_to_L(beta).max_abs_coeff()


def mc_residual(pi: PoissonBivector, beta: TrigForm) -> TrigForm:
    """d beta + (1/2) [beta, beta]_pi."""
    br = koszul_bracket(pi, beta, beta)
    return beta.d() + br.scale(Fraction(1, 2))


def i_pi_min_det(pi: PoissonBivector, beta: TrigForm, points) -> float:
    from .sympoisson import flat_matrices, sharp_matrices

    S = sharp_matrices(pi.bivector if pi.bivector is not None else pi.field, points)
    Fb = flat_matrices(beta, points)
    dets = np.linalg.det(np.eye(S.shape[-1]) + S @ Fb)
    return float(np.min(np.abs(dets)))


def mc_to_deformation(
    torus: TorusModel,
    pi: PoissonBivector,
    omega: SymplecticForm,
    element: MCElement,
    points=None,
    tol: float = 1e-10,
) -> SymplecticForm:
    """omega + F(beta) for an MC element; lands in Def_L for relative beta."""
    beta = element.beta
    res = mc_residual(pi, beta)
    if res.max_abs_coeff() > tol:
        raise ValueError(
            "Maurer-Cartan residual %g exceeds tolerance" % res.max_abs_coeff()
        )
    if element.relative and relativity_residual(torus, beta) > tol:
        raise ValueError("element flagged relative but does not vanish on L")
    if points is None:
        points = torus_grid(torus.N, default_per_axis(torus.N))
    fres = f_map(beta, pi, points)
    if fres.exact is not None and omega.form is not None:
        out = symplectic_from_trig(torus, omega.form + fres.exact)
    else:
        out = symplectic_from_field(torus, fres.deformed(omega))
    if element.relative:
        ok, lres = is_lagrangian(out.form if out.form is not None else out.field,
                                 torus, None, tol=max(tol, 1e-9))
        if not ok:
            raise ValueError("deformed form is not Lagrangian-compatible "
                             "(residual %g)" % lres)
    return out


# ---------------------------------------------------------------------------
# gauge flows (float trig coefficients on a capped spectral basis)


class SupportCapError(RuntimeError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


@dataclass
class GaugePath:
    times: list
    betas: list          # TrigForm with float coefficients
    alpha: object        # the generator callable t -> TrigForm
    max_mc_residual: float
    min_i_pi_det: float


def _prune_support(w: TrigForm, cap: int, cap_tol: float, when: float) -> TrigForm:
    """Drop waves outside the frequency cap; loud mass outside is an error."""
    comps = {}
    for idx, s in w.terms.items():
        kept = {}
        for (freq, phase), c in s.terms.items():
            if max((abs(f) for f in freq), default=0) > cap:
                if abs(float(c)) > cap_tol:
                    raise SupportCapError(
                        "frequency support exceeded the cap %d at t=%.4f "
                        "(coefficient %g)" % (cap, when, abs(float(c))),
                        time=when,
                    )
                continue
            kept[(freq, phase)] = c
        if kept:
            comps[idx] = type(s)(s.dim, kept)
    return TrigForm(w.dim, w.degree, comps)


def gauge_flow(
    torus: TorusModel,
    pi: PoissonBivector,
    beta0: TrigForm,
    alpha,
    steps: int = 100,
    cap_multiplier: int = 3,
    cap_tol: float = 1e-9,
    mc_tol: float = 1e-10,
    det_tol: float = 1e-6,
    points=None,
    samples: int = 11,
) -> GaugePath:
    """Integrate  d beta_t / dt = d alpha_t - [alpha_t, beta_t]_pi  by RK4
    on float trig coefficients.

    The spectral support is capped at cap_multiplier times the combined
    input radius; a generated wave outside the cap louder than cap_tol is
    an error, quieter ones are dropped (they sit below the path's accuracy
    floor).  Relativity is preserved by construction and re-enforced by
    subtracting the extension of the pullback, with the projection size
    monitored.  MC residuals and the I_pi determinant are sampled along
    the path.
    """
    if relativity_residual(torus, beta0) > mc_tol:
        raise ValueError("initial element must be relative")
    if mc_residual(pi, beta0).max_abs_coeff() > mc_tol:
        raise ValueError("initial element is not Maurer-Cartan")
    if points is None:
        points = torus_grid(torus.N, default_per_axis(torus.N))

    radius = max(beta0.freq_radius(), alpha(0.0).freq_radius(), 1)
    cap = cap_multiplier * radius

    def rhs(t, b):
        a_t = alpha(t).to_float()
        if relativity_residual(torus, a_t) > 1e-12:
            raise ValueError("gauge generator must be relative at all times")
        out = a_t.d() - koszul_bracket(pi, a_t, b)
        out = _prune_support(out, cap, cap_tol, t)
        drift = torus.restrict_to_L(out)
        if drift.max_abs_coeff() > 1e-10:
            raise SupportCapError(
                "relativity drift %g at t=%.4f" % (drift.max_abs_coeff(), t), time=t
            )
        return out - torus.extend_to_M(drift)

    h = 1.0 / steps
    b = beta0.to_float()
    times = [0.0]
    betas = [b]
    max_res = mc_residual(pi, b).max_abs_coeff()
    min_det = i_pi_min_det(pi, b, points)
    sample_at = set(np.linspace(0, steps, samples, dtype=int).tolist())
    for k in range(steps):
        t = k * h
        k1 = rhs(t, b)
        k2 = rhs(t + h / 2, b + k1.scale(h / 2))
        k3 = rhs(t + h / 2, b + k2.scale(h / 2))
        k4 = rhs(t + h, b + k3.scale(h))
        b = b + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
        b = _prune_support(b, cap, cap_tol, t + h)
        if (k + 1) in sample_at or k == steps - 1:
            res = mc_residual(pi, b).max_abs_coeff()
            det = i_pi_min_det(pi, b, points)
            max_res = max(max_res, res)
            min_det = min(min_det, det)
            if res > max(mc_tol, 1e-8):
                raise SupportCapError(
                    "MC residual drift %g at t=%.4f; reduce the step size"
                    % (res, t + h),
                    time=t + h,
                )
            if det < det_tol:
                raise DegenerateError(
                    "path left I_pi at t=%.4f (min |det| = %g)" % (t + h, det)
                )
            times.append(t + h)
            betas.append(b)
    return GaugePath(times, betas, alpha, max_res, min_det)


@dataclass
class GaugeIsotopyVerdict:
    pullback_residual: float
    l_drift: float
    flow_steps: int

    def ok(self, pullback_tol: float = 1e-5, drift_tol: float = 1e-8) -> bool:
        return self.pullback_residual <= pullback_tol and self.l_drift <= drift_tol


def gauge_vs_isotopy(
    torus: TorusModel,
    pi: PoissonBivector,
    omega: SymplecticForm,
    path: GaugePath,
    steps: int = 1000,
    per_axis: int | None = None,
    l_per_axis: int | None = None,
) -> GaugeIsotopyVerdict:
    """Realize a gauge path as an isotopy and verify the pullback identity.

    The generator alpha_t transports to the vector field X_t = sharp(alpha_t)
    whose flow rho_t satisfies  rho_t^*(omega + F(beta_t)) = omega + F(beta_0)
    and preserves L (X_t is tangent to L because alpha_t vanishes on it).
    """
    from .flows import TimeDependentTrigField, flow, pullback_residual, wrapped_vertical_excess
    from .grids import l_grid

    field = TimeDependentTrigField(
        torus.N, lambda t: sharp(pi.bivector, path.alpha(t))
    )
    pa = per_axis or default_per_axis(torus.N)
    grid = torus_grid(torus.N, pa)
    fr = flow(field, grid, 0.0, 1.0, steps)
    f0 = f_map(path.betas[0], pi, grid)
    f1 = f_map(path.betas[-1], pi, grid)
    target = f1.deformed(omega)
    source = f0.deformed(omega)
    res = pullback_residual(fr, target, source)
    lg = l_grid(torus.n, l_per_axis or default_per_axis(torus.N))
    fl = flow(field, lg, 0.0, 1.0, steps)
    drift = wrapped_vertical_excess(torus, fl.end)
    return GaugeIsotopyVerdict(res, drift, steps)
