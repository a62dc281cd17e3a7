"""Sections of the vertical tube and their graphs.

A submanifold near L is the graph of a 1-form sigma = sum_i g_i(x) dx_i on
L; the model tube V' is {|y_i| < 1/4} fiberwise, so chart membership is a
certified sup-norm bound on the coefficients g_i.  The correspondence with
vertical fiberwise-constant vector fields is  X_sigma = sum_i g_i d/dy_i,
pinned by  i_{X_sigma} omega_can = -p^* sigma.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .forms import TrigForm, TrigMultiVector
from .grids import torus_grid
from .torus import CHART_BOUND, TorusModel
from .trig import TrigScalar


@dataclass(frozen=True)
class Section:
    torus: TorusModel
    form: TrigForm  # degree-1 form on L = T^n

    def __post_init__(self):
        if self.form.dim != self.torus.n or self.form.degree != 1:
            raise ValueError("a section is a 1-form on L = T^n")

    def component(self, i: int) -> TrigScalar:
        return self.form.component((i,))

    def is_zero(self) -> bool:
        return self.form.is_zero()

    def scale(self, factor) -> "Section":
        return Section(self.torus, self.form.scale(factor))

    def __add__(self, other: "Section") -> "Section":
        return Section(self.torus, self.form + other.form)

    def values(self, x_points: np.ndarray) -> np.ndarray:
        """(G, n) array of fiber coordinates sigma_i(x)."""
        return self.form.covector_at(x_points)

    def l1_bound(self) -> float:
        """Certified upper bound for sup_i sup_x |sigma_i(x)|."""
        n = self.torus.n
        return max((self.component(i).l1_bound() for i in range(n)), default=0.0)

    def derivative_l1_bound(self) -> float:
        n = self.torus.n
        best = 0.0
        for i in range(n):
            for j in range(n):
                best = max(best, self.component(i).partial(j).l1_bound())
        return best


def zero_section(torus: TorusModel) -> Section:
    return Section(torus, TrigForm.zero(torus.n, 1))


@dataclass(frozen=True)
class GraphSubmanifold:
    section: Section

    @property
    def torus(self) -> TorusModel:
        return self.section.torus

    def points(self, x_points: np.ndarray) -> np.ndarray:
        """(G, N) points (x, sigma(x)) of the graph."""
        x = np.asarray(x_points, dtype=float)
        vals = self.section.values(x)
        return np.concatenate([x, vals], axis=-1)

    def frame(self, x_points: np.ndarray) -> np.ndarray:
        """(G, N, n) pushforwards of the coordinate frame of L."""
        x = np.asarray(x_points, dtype=float)
        n, N = self.torus.n, self.torus.N
        out = np.zeros((x.shape[0], N, n))
        for j in range(n):
            out[:, j, j] = 1.0
        for i in range(n):
            for j in range(n):
                dpart = self.section.component(i).partial(j)
                if not dpart.is_zero():
                    out[:, n + i, j] = dpart.evaluate_many(x)
        return out

    def equals_L(self) -> bool:
        return self.section.is_zero()


def section_to_field(sec: Section) -> TrigMultiVector:
    """The vertical fiberwise-constant field of a section."""
    torus = sec.torus
    comps = {}
    for i in range(torus.n):
        g = sec.component(i)
        if not g.is_zero():
            comps[(torus.n + i,)] = g.embed(torus.N, list(range(torus.n)))
    return TrigMultiVector(torus.N, 1, comps)


def tautological_pullback(sec: Section) -> TrigForm:
    """Pullback of sum_i y_i dx_i along x -> (x, sigma(x)).

    Substituting y_i -> sigma_i(x) and dx_i -> dx_i gives back the section
    itself; the computation below performs the substitution term by term.
    """
    torus = sec.torus
    out = TrigForm.zero(torus.n, 1)
    for i in range(torus.n):
        g = sec.component(i)  # y_i circ graph
        if not g.is_zero():
            out = out + TrigForm(torus.n, 1, {(i,): g})
    return out


def graph_pullback(torus: TorusModel, w: TrigForm, sec: Section) -> TrigForm:
    """Exact pullback of a form on M along x -> (x, sigma(x)).

    The substitution y = sigma(x), dy_i = d sigma_i is a trig-polynomial
    operation only when the coefficients of w do not depend on y; such
    inputs raise ValueError and should use the numeric graph residual.
    """
    n = torus.n
    if w.dim != torus.N:
        raise ValueError("form does not live on the model torus")
    if w.degree > n:
        return TrigForm(n, w.degree)
    legs: list[TrigForm] = []
    for i in range(n):
        legs.append(TrigForm.basis(n, (i,)))
    dsig = [
        TrigForm(n, 0, {(): sec.component(i)}).d() if not sec.component(i).is_zero()
        else TrigForm.zero(n, 1)
        for i in range(n)
    ]
    out = TrigForm(n, w.degree)
    for idx, f in w.terms.items():
        if not f.depends_only_on(range(n)):
            raise ValueError(
                "coefficients depend on y; exact graph pullback unavailable"
            )
        coeff = f.pullback_affine(torus.inclusion_matrix())
        term = TrigForm(n, 0, {(): coeff})
        for i in idx:
            leg = legs[i] if i < n else dsig[i - n]
            term = term.wedge(leg)
            if term.is_zero():
                term = TrigForm(n, w.degree)
                break
        out = out + term
    return out


def graph_lagrangian_residual(
    two_form_field, sec: Section, x_points: np.ndarray
) -> float:
    """max |w(graph point)(frame_a, frame_b)| over the sample grid."""
    from .sympoisson import as_matrix_field

    graph = GraphSubmanifold(sec)
    pts = graph.points(x_points)
    frame = graph.frame(x_points)
    B = as_matrix_field(two_form_field).matrices_at(pts)
    pulled = np.swapaxes(frame, -1, -2) @ B @ frame
    return float(np.max(np.abs(pulled))) if pulled.size else 0.0


def in_chart(sec: Section, bound: Fraction = CHART_BOUND, per_axis: int = 257) -> bool:
    """Certified chart membership sup_i sup_x |sigma_i(x)| < 1/4.

    The coefficient l1 bound decides most cases outright.  When it
    straddles the bound, a sample grid refines the answer: a sample at or
    above the bound is a witness for False, and otherwise the Lipschitz
    bound |sigma(x) - sigma(x')| <= |d sigma|_inf |x - x'| certifies True
    whenever grid_max + lip * h / 2 stays below the bound.  If certification
    fails after refinement the sampled maximum decides (documented
    best-effort fallback for coefficients at the very boundary).
    """
    b = float(bound)
    if sec.l1_bound() < b:
        return True
    lip = sec.derivative_l1_bound()
    per = per_axis
    for _round in range(4):
        x = torus_grid(sec.torus.n, per)
        vals = np.abs(sec.values(x))
        worst = float(np.max(vals)) if vals.size else 0.0
        if worst >= b:
            return False
        h = 1.0 / per
        slack = lip * h * 0.5 * np.sqrt(sec.torus.n)
        if worst + slack < b:
            return True
        per *= 2
    return worst < b
