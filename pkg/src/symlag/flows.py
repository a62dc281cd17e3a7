"""Numeric flow engine: RK4 with the variational equation, pullback
checks, the Moser solver, the vertical-translation diffeomorphisms of
chart sections, plateau-reparametrized concatenations, and the C^1 bound.

All integrations are fixed-step RK4 on batched numpy state: positions
(G, N) and Jacobians (G, N, N) evolved by dJ/dt = DX(t, p(t)) J.  Results
are deterministic given the step count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .chart import GraphSubmanifold, Section, in_chart, section_to_field
from .forms import TrigForm, TrigMultiVector
from .grids import default_per_axis, l_grid, torus_grid
from .torus import CHART_BOUND, TorusModel


class FlowError(RuntimeError):
    pass


class ChartExitError(RuntimeError):
    def __init__(self, message, time=None, value=None):
        super().__init__(message)
        self.time = time
        self.value = value


# ---------------------------------------------------------------------------
# vector fields


class TrigField:
    """Autonomous field from a degree-1 multivector; exact derivatives."""

    def __init__(self, X: TrigMultiVector):
        if X.degree != 1:
            raise ValueError("need a degree-1 field")
        self.dim = X.dim
        self._comps = {i: s for (i,), s in X.terms.items()}
        self._partials = {
            (i, j): s.partial(j)
            for i, s in self._comps.items()
            for j in range(self.dim)
            if not s.partial(j).is_zero()
        }

    def values(self, t, pts):
        out = np.zeros_like(pts)
        for i, s in self._comps.items():
            out[:, i] = s.evaluate_many(pts)
        return out

    def jacobians(self, t, pts):
        out = np.zeros((pts.shape[0], self.dim, self.dim))
        for (i, j), s in self._partials.items():
            out[:, i, j] = s.evaluate_many(pts)
        return out


class TimeDependentTrigField:
    """Field t -> multivector(t); the factory is cached per stage time."""

    def __init__(self, dim: int, factory):
        self.dim = dim
        self._factory = factory
        self._cache: dict[float, TrigField] = {}

    def _at(self, t: float) -> TrigField:
        got = self._cache.get(t)
        if got is None:
            got = TrigField(self._factory(t))
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[t] = got
        return got

    def values(self, t, pts):
        return self._at(t).values(t, pts)

    def jacobians(self, t, pts):
        return self._at(t).jacobians(t, pts)


class ScaledField:
    """Pointwise scalar multiple f(p) X(p); D(fX) = f DX + X grad(f)^T."""

    def __init__(self, base, cutoff):
        self.dim = base.dim
        self.base = base
        self.cutoff = cutoff

    def values(self, t, pts):
        return self.base.values(t, pts) * self.cutoff.value(pts)[:, None]

    def jacobians(self, t, pts):
        f = self.cutoff.value(pts)
        g = self.cutoff.grad(pts)
        X = self.base.values(t, pts)
        DX = self.base.jacobians(t, pts)
        return DX * f[:, None, None] + X[:, :, None] * g[:, None, :]


class NegatedField:
    def __init__(self, base):
        self.dim = base.dim
        self.base = base

    def values(self, t, pts):
        return -self.base.values(t, pts)

    def jacobians(self, t, pts):
        return -self.base.jacobians(t, pts)


def _form_component_arrays(w: TrigForm, pts) -> np.ndarray:
    return w.matrix_at(pts)


class MoserField:
    """Time-dependent Moser field: i_Y (w1 + t d(beta)) = -beta.

    Positions solve Flat(W_t) Y = -beta; the spatial derivative is
    analytic:  d_k Y = -A^{-1} ((d_k A) Y + d_k beta)  with A = Flat(W_t).
    """

    def __init__(self, w1: TrigForm, beta: TrigForm):
        self.dim = w1.dim
        self.w1 = w1
        self.dbeta = beta.d()
        self.beta = beta
        self._w1_partials = [self._partial_form(w1, k) for k in range(self.dim)]
        self._db_partials = [self._partial_form(self.dbeta, k) for k in range(self.dim)]
        self._beta_partials = [
            self._partial_oneform(beta, k) for k in range(self.dim)
        ]

    @staticmethod
    def _partial_form(w: TrigForm, k: int) -> TrigForm:
        return TrigForm(w.dim, w.degree, {i: s.partial(k) for i, s in w.terms.items()})

    @staticmethod
    def _partial_oneform(b: TrigForm, k: int) -> TrigForm:
        return TrigForm(b.dim, 1, {i: s.partial(k) for i, s in b.terms.items()})

    def _flats(self, t, pts):
        B = self.w1.matrix_at(pts) + t * self.dbeta.matrix_at(pts)
        return np.swapaxes(B, -1, -2)

    def values(self, t, pts):
        A = self._flats(t, pts)
        b = self.beta.covector_at(pts)
        return -np.linalg.solve(A, b[..., None])[..., 0]

    def jacobians(self, t, pts):
        A = self._flats(t, pts)
        Ainv = np.linalg.inv(A)
        Y = -(Ainv @ self.beta.covector_at(pts)[..., None])[..., 0]
        out = np.zeros((pts.shape[0], self.dim, self.dim))
        for k in range(self.dim):
            dBk = self._w1_partials[k].matrix_at(pts) + t * self._db_partials[
                k
            ].matrix_at(pts)
            dAk = np.swapaxes(dBk, -1, -2)
            rhs = (dAk @ Y[..., None])[..., 0] + self._beta_partials[k].covector_at(pts)
            out[:, :, k] = -(Ainv @ rhs[..., None])[..., 0]
        return out


# ---------------------------------------------------------------------------
# the cutoff and the plateau reparametrization


def _smootherstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def _smootherstep_deriv(u):
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 30.0 * u * u * (u - 1.0) * (u - 1.0), 0.0)


class Cutoff:
    """Product of per-coordinate vertical shells: identically 1 on
    {|y|_inf <= 9/32}, zero outside {|y|_inf < 13/32}, C^2 and monotone in
    each |y_i|; depends on y only."""

    PLATEAU = 9.0 / 32.0
    ZERO = 13.0 / 32.0

    def __init__(self, torus: TorusModel):
        self.torus = torus
        self.dim = torus.N

    def _wrapped_y(self, pts):
        y = pts[:, self.torus.n :]
        return (y + 0.5) % 1.0 - 0.5

    def _shells(self, ywrap):
        u = (np.abs(ywrap) - self.PLATEAU) / (self.ZERO - self.PLATEAU)
        return 1.0 - _smootherstep(u)

    def value(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.prod(self._shells(self._wrapped_y(pts)), axis=1)

    def grad(self, pts):
        pts = np.asarray(pts, dtype=float)
        yw = self._wrapped_y(pts)
        shells = self._shells(yw)
        u = (np.abs(yw) - self.PLATEAU) / (self.ZERO - self.PLATEAU)
        dshell = -_smootherstep_deriv(u) / (self.ZERO - self.PLATEAU) * np.sign(yw)
        out = np.zeros((pts.shape[0], self.dim))
        n = self.torus.n
        for j in range(n):
            others = np.prod(np.delete(shells, j, axis=1), axis=1)
            out[:, n + j] = dshell[:, j] * others
        return out


def cutoff_f(torus: TorusModel, point) -> float:
    """Scalar convenience wrapper around :class:`Cutoff`."""
    return float(Cutoff(torus).value(np.asarray(point, dtype=float)[None, :])[0])


class Plateau:
    """The reparametrization h: [0,1] -> [0,1] with plateaus at 1/3 and 2/3.

    Seven conditions: h(0) = 0; diffeomorphisms on (0,1/5), (2/5,3/5),
    (4/5,1); h = 1/3 on [1/5,2/5]; h = 2/3 on [3/5,4/5]; h(1) = 1.  The
    rising pieces are strictly monotone C^2 smootherstep ramps.
    """

    KNOTS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(
            t <= 0.2,
            _smootherstep(5.0 * t) / 3.0,
            np.where(
                t <= 0.4,
                1.0 / 3.0,
                np.where(
                    t <= 0.6,
                    1.0 / 3.0 + _smootherstep(5.0 * t - 2.0) / 3.0,
                    np.where(
                        t <= 0.8,
                        2.0 / 3.0,
                        2.0 / 3.0 + _smootherstep(5.0 * t - 4.0) / 3.0,
                    ),
                ),
            ),
        )
        return float(out) if out.ndim == 0 else out

    def check_conditions(self) -> dict:
        """Exact knot values plus strict monotonicity between plateaus."""
        h = self
        knot_ok = (
            h(0.0) == 0.0
            and h(1.0) == 1.0
            and all(h(t) == 1.0 / 3.0 for t in np.linspace(0.2, 0.4, 11))
            and all(h(t) == 2.0 / 3.0 for t in np.linspace(0.6, 0.8, 11))
        )
        mono_ok = True
        for a, b in ((0.0, 0.2), (0.4, 0.6), (0.8, 1.0)):
            ts = np.linspace(a, b, 201)
            vals = h(ts)
            mono_ok = mono_ok and bool(np.all(np.diff(vals) > 0.0))
        return {"knots": knot_ok, "monotone": mono_ok}


# ---------------------------------------------------------------------------
# RK4 flows with Jacobians


@dataclass
class FlowResult:
    start: np.ndarray
    end: np.ndarray
    jac: np.ndarray
    t0: float
    t1: float
    steps: int
    checkpoints: list = dc_field(default_factory=list)  # (t, pts, jac)

    def displacement(self) -> np.ndarray:
        return self.end - self.start

    def min_det_jac(self) -> float:
        return float(np.min(np.linalg.det(self.jac)))


def flow(
    field,
    points,
    t0: float = 0.0,
    t1: float = 1.0,
    steps: int = 200,
    jac0: np.ndarray | None = None,
    checkpoint_times=None,
) -> FlowResult:
    """Integrate positions and Jacobians of the time-t1 flow map."""
    if steps < 1:
        raise ValueError("steps >= 1 required")
    pts = np.array(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    G, N = pts.shape
    J = np.tile(np.eye(N), (G, 1, 1)) if jac0 is None else np.array(jac0, dtype=float)
    start = pts.copy()

    marks = sorted(checkpoint_times or [], key=lambda s: (s - t0) / (t1 - t0 or 1.0))
    segs = []
    prev = t0
    for m in marks:
        segs.append((prev, m, True))
        prev = m
    segs.append((prev, t1, False))

    total = abs(t1 - t0)
    checkpoints = []
    for a, b, is_mark in segs:
        span = abs(b - a)
        if span == 0.0:
            if is_mark:
                checkpoints.append((b, pts.copy(), J.copy()))
            continue
        nsteps = max(1, int(round(steps * span / total))) if total else 1
        h = (b - a) / nsteps
        t = a
        for _ in range(nsteps):
            pts, J = _rk4_step(field, t, pts, J, h)
            t += h
        if is_mark:
            checkpoints.append((b, pts.copy(), J.copy()))
    if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(J)):
        bad = np.argwhere(~np.isfinite(pts))
        raise FlowError("non-finite state during integration at rows %s" % bad[:3])
    return FlowResult(start, pts, J, t0, t1, steps, checkpoints)


def _rk4_step(field, t, p, J, h):
    k1p = field.values(t, p)
    k1J = field.jacobians(t, p) @ J
    p2 = p + 0.5 * h * k1p
    k2p = field.values(t + 0.5 * h, p2)
    k2J = field.jacobians(t + 0.5 * h, p2) @ (J + 0.5 * h * k1J)
    p3 = p + 0.5 * h * k2p
    k3p = field.values(t + 0.5 * h, p3)
    k3J = field.jacobians(t + 0.5 * h, p3) @ (J + 0.5 * h * k2J)
    p4 = p + h * k3p
    k4p = field.values(t + h, p4)
    k4J = field.jacobians(t + h, p4) @ (J + h * k3J)
    pn = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    Jn = J + (h / 6.0) * (k1J + 2.0 * k2J + 2.0 * k3J + k4J)
    return pn, Jn


def pullback_residual(result: FlowResult, target, source) -> float:
    """sup | (phi^* target) - source | over the flowed grid and frame pairs."""
    from .sympoisson import as_matrix_field

    Bt = as_matrix_field(target).matrices_at(result.end)
    Bs = as_matrix_field(source).matrices_at(result.start)
    pulled = np.swapaxes(result.jac, -1, -2) @ Bt @ result.jac
    return float(np.max(np.abs(pulled - Bs)))


def pullback_matrices(result: FlowResult, target) -> np.ndarray:
    from .sympoisson import as_matrix_field

    Bt = as_matrix_field(target).matrices_at(result.end)
    return np.swapaxes(result.jac, -1, -2) @ Bt @ result.jac


@dataclass
class C1Distance:
    position: float
    jacobian: float

    @property
    def value(self) -> float:
        return max(self.position, self.jacobian)


def c1_distance(a: FlowResult, b: FlowResult) -> C1Distance:
    if a.start.shape != b.start.shape or np.max(np.abs(a.start - b.start)) > 0:
        raise ValueError("flows start from different grids")
    pos = float(np.max(np.abs(a.end - b.end))) if a.end.size else 0.0
    jac = float(np.max(np.abs(a.jac - b.jac))) if a.jac.size else 0.0
    return C1Distance(pos, jac)


def identity_flow(points) -> FlowResult:
    pts = np.array(points, dtype=float)
    G, N = pts.shape
    return FlowResult(pts.copy(), pts.copy(), np.tile(np.eye(N), (G, 1, 1)), 0.0, 1.0, 0)


# ---------------------------------------------------------------------------
# the section diffeomorphisms phi_{L'}


def section_field(torus: TorusModel, sec: Section) -> ScaledField:
    """X_{L'} = f * X_sigma with the fixed vertical cutoff."""
    return ScaledField(TrigField(section_to_field(sec)), Cutoff(torus))


@dataclass
class PhiLResult:
    flow: FlowResult
    graph_residual: float


def phi_L(
    torus: TorusModel,
    sec: Section,
    steps: int = 200,
    per_axis: int | None = None,
    points=None,
) -> PhiLResult:
    """Time-1 flow of f X_sigma on an L-grid; lands on the graph of sigma."""
    if not in_chart(sec):
        raise ChartExitError("section leaves the chart tube V'")
    if points is None:
        points = l_grid(torus.n, per_axis or default_per_axis(torus.N))
    fr = flow(section_field(torus, sec), points, 0.0, 1.0, steps)
    target = GraphSubmanifold(sec).points(np.asarray(points)[:, : torus.n])
    residual = float(np.max(np.abs(fr.end - target))) if fr.end.size else 0.0
    return PhiLResult(fr, residual)


# ---------------------------------------------------------------------------
# Moser solver


@dataclass
class MoserResult:
    field: MoserField
    flow_m: FlowResult
    flow_l: FlowResult
    pullback_residual: float
    l_drift: float


def wrapped_vertical_excess(torus: TorusModel, pts) -> float:
    y = np.asarray(pts)[:, torus.n :]
    yw = (y + 0.5) % 1.0 - 0.5
    return float(np.max(np.abs(yw))) if yw.size else 0.0


def moser_solve(
    torus: TorusModel,
    w1: TrigForm,
    w2: TrigForm,
    beta: TrigForm,
    steps: int = 1000,
    per_axis: int | None = None,
    l_per_axis: int | None = None,
    nondegeneracy_times: int = 9,
) -> MoserResult:
    """Flow along Y_t with i_{Y_t}(w1 + t d beta) = -beta; the endpoint
    pulls w2 back to w1 and the zero section stays put.

    Preconditions are exact: beta is relative and d(beta) = w2 - w1.
    Nondegeneracy of the line of forms is certified on a grid at sampled
    times before integrating.
    """
    if beta.degree != 1:
        raise ValueError("the primitive must be a 1-form")
    if not torus.is_relative(beta):
        raise ValueError("the primitive must be relative (vanish on L)")
    if not (beta.d() == w2 - w1):
        raise ValueError("d(primitive) differs from the difference of forms")

    pa = per_axis or default_per_axis(torus.N)
    grid = torus_grid(torus.N, pa)
    B1 = w1.matrix_at(grid)
    dB = beta.d().matrix_at(grid)
    for t in np.linspace(0.0, 1.0, nondegeneracy_times):
        dets = np.linalg.det(B1 + t * dB)
        mind = float(np.min(np.abs(dets)))
        if mind < 1e-9:
            raise FlowError(
                "interpolated form degenerate at t=%.3f (|det|=%g)" % (t, mind)
            )

    fld = MoserField(w1, beta)
    fm = flow(fld, grid, 0.0, 1.0, steps)
    lg = l_grid(torus.n, l_per_axis or default_per_axis(torus.N))
    fl = flow(fld, lg, 0.0, 1.0, steps)
    res = pullback_residual(fm, w2, w1)
    drift = wrapped_vertical_excess(torus, fl.end)
    return MoserResult(fld, fm, fl, res, drift)


# ---------------------------------------------------------------------------
# plateau-reparametrized concatenation of isotopies


@dataclass
class Stage:
    field: object
    t0: float
    t1: float


@dataclass
class ConcatSample:
    time: float
    end: np.ndarray
    jac: np.ndarray
    tube_excess: float
    section_residual: float | None


@dataclass
class ConcatResult:
    samples: list[ConcatSample]

    @property
    def endpoint(self) -> ConcatSample:
        return self.samples[-1]


def run_program(stages, points, base_steps: int, jac0=None) -> tuple[np.ndarray, np.ndarray]:
    pts = np.array(points, dtype=float)
    J = jac0
    for st in stages:
        if st.t0 == st.t1:
            continue
        fr = flow(
            st.field,
            pts,
            st.t0,
            st.t1,
            steps=max(1, int(math.ceil(base_steps * abs(st.t1 - st.t0)))),
            jac0=J,
        )
        pts, J = fr.end, fr.jac
    if J is None:
        G, N = pts.shape
        J = np.tile(np.eye(N), (G, 1, 1))
    return pts, J


def concat_isotopy(
    torus: TorusModel,
    program,
    l_points,
    sample_times,
    base_steps: int = 200,
    expected_section=None,
    chart_bound: float = float(CHART_BOUND),
    section_tol: float = 1e-6,
) -> ConcatResult:
    """Sample a piecewise isotopy t -> stages(t) on an L-grid.

    Every sampled image must stay inside the vertical tube (else
    ChartExitError names the time), and when the analytic section of the
    image is known, membership is certified through it and the flowed
    points are compared against its graph.
    """
    samples = []
    lpts = np.asarray(l_points, dtype=float)
    for t in sample_times:
        stages = program(t)
        end, J = run_program(stages, lpts, base_steps)
        excess = wrapped_vertical_excess(torus, end)
        sec_res = None
        if expected_section is not None:
            sec = expected_section(t)
            if sec is not None:
                if not in_chart(sec):
                    raise ChartExitError(
                        "expected section leaves the chart at t=%.4f" % t,
                        time=t,
                        value=sec.l1_bound(),
                    )
                target = GraphSubmanifold(sec).points(end[:, : torus.n] % 1.0)
                dy = end[:, torus.n :] - target[:, torus.n :]
                dy = (dy + 0.5) % 1.0 - 0.5
                sec_res = float(np.max(np.abs(dy))) if dy.size else 0.0
                if sec_res > section_tol:
                    raise ChartExitError(
                        "flowed image does not match the declared section "
                        "at t=%.4f (residual %g)" % (t, sec_res),
                        time=t,
                        value=sec_res,
                    )
        if excess >= chart_bound:
            raise ChartExitError(
                "image leaves the tube at t=%.4f (|y| = %.4f)" % (t, excess),
                time=t,
                value=excess,
            )
        samples.append(ConcatSample(t, end, J, excess, sec_res))
    return ConcatResult(samples)


# ---------------------------------------------------------------------------
# Gronwall bound


def field_c1_norm(field, points) -> float:
    vals = field.values(0.0, np.asarray(points, dtype=float))
    jacs = field.jacobians(0.0, np.asarray(points, dtype=float))
    vmax = float(np.max(np.abs(vals))) if vals.size else 0.0
    jmax = float(np.max(np.abs(jacs))) if jacs.size else 0.0
    return max(vmax, jmax)


def _norm_grid(torus: TorusModel, base: np.ndarray) -> np.ndarray:
    """Augment a grid with copies on the maximal-slope shell of the cutoff
    (|y_i| = 11/32, where the smootherstep derivative peaks); a plain grid
    can miss the transition and underestimate the C^1 norm."""
    shell = Cutoff.PLATEAU + 0.5 * (Cutoff.ZERO - Cutoff.PLATEAU)
    copies = [base]
    for i in range(torus.n):
        for s in (shell, -shell):
            g = base.copy()
            g[:, torus.n + i] = s
            copies.append(g)
    return np.concatenate(copies, axis=0)


def gronwall_check(
    torus: TorusModel,
    sec: Section,
    steps: int = 200,
    per_axis: int | None = None,
) -> dict:
    """Measured C^1 distance of phi_{L'} from Id against the integral bound.

    position distance <= |X|_1 and Jacobian distance <= n |X|_1 e^{n |X|_1}
    (n = dim L), each with a small numeric slack.
    """
    fld = section_field(torus, sec)
    grid = torus_grid(torus.N, per_axis or default_per_axis(torus.N))
    norm1 = field_c1_norm(fld, _norm_grid(torus, grid))
    fr = flow(fld, grid, 0.0, 1.0, steps)
    dist = c1_distance(fr, identity_flow(grid))
    n = torus.n
    jac_bound = n * norm1 * math.exp(n * norm1)
    return {
        "norm1": norm1,
        "position": dist.position,
        "jacobian": dist.jacobian,
        "position_bound": norm1,
        "jacobian_bound": jac_bound,
        "position_ok": dist.position <= norm1 + 1e-9,
        "jacobian_ok": dist.jacobian <= jac_bound + 1e-6,
    }
