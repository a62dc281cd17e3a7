"""The flat-torus model T^N = R^N / Z^N with N = 2n.

Coordinates are ordered (x_1, ..., x_n, y_1, ..., y_n), each of period 1.
The reference submanifold is the zero section L = {y = 0}, a sub-torus T^n;
a tubular chart around it is the torus itself with vertical fiber bound
|y_i| < 1/4 (the fiberwise convex tube V').
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .forms import TrigForm, TrigMultiVector
from .trig import TrigScalar

CHART_BOUND = Fraction(1, 4)


@dataclass(frozen=True)
class TorusModel:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need n >= 1")

    @property
    def N(self) -> int:
        return 2 * self.n

    @property
    def x_axes(self) -> range:
        return range(0, self.n)

    @property
    def y_axes(self) -> range:
        return range(self.n, 2 * self.n)

    def coordinate_names(self) -> list[str]:
        return ["x%d" % (i + 1) for i in range(self.n)] + [
            "y%d" % (i + 1) for i in range(self.n)
        ]

    # -- canonical tensors ------------------------------------------------

    def omega_can(self) -> TrigForm:
        """sum_i dx_i ^ dy_i"""
        w = TrigForm.zero(self.N, 2)
        for i in range(self.n):
            w = w + TrigForm.basis(self.N, (i, self.n + i))
        return w

    def pi_can(self) -> TrigMultiVector:
        """The Poisson bivector -omega_can^{-1} = sum_i  dx_i^ -> dy_i^ frame."""
        P = TrigMultiVector.zero(self.N, 2)
        for i in range(self.n):
            P = P + TrigMultiVector.basis(self.N, (i, self.n + i))
        return P

    def theta_taut(self) -> TrigForm:
        """Tautological 1-form sum_i y_i dx_i (linear in y, stored as callable
        coefficients is unnecessary: return None sentinel is avoided by the
        chart module computing its pullback directly)."""
        raise NotImplementedError(
            "y_i is not a trig polynomial; use chart.tautological_pullback"
        )

    # -- restriction to L and extension back -------------------------------

    def inclusion_matrix(self) -> list[list[int]]:
        """Matrix of the inclusion T^n -> T^N, x -> (x, 0)."""
        mat = [[0] * self.n for _ in range(self.N)]
        for i in range(self.n):
            mat[i][i] = 1
        return mat

    def restrict_to_L(self, w: TrigForm) -> TrigForm:
        """Pullback along the inclusion of L = {y = 0}."""
        if w.dim != self.N:
            raise ValueError("form does not live on this torus")
        return w.pullback_affine(self.inclusion_matrix())

    def is_relative(self, w: TrigForm) -> bool:
        return self.restrict_to_L(w).is_zero()

    def extend_to_M(self, b: TrigForm) -> TrigForm:
        """Canonical extension of a form on L: y-independent, no dy legs."""
        if b.dim != self.n:
            raise ValueError("expected a form on L = T^%d" % self.n)
        out: dict[tuple, TrigScalar] = {}
        for idx, f in b.terms.items():
            out[idx] = f.embed(self.N, list(range(self.n)))
        return TrigForm(self.N, b.degree, out)

    def coordinate_torus_matrix(self, axes: tuple[int, int]) -> list[list[int]]:
        """Inclusion T^2 -> T^N onto the coordinate 2-torus spanned by axes."""
        a, b = axes
        mat = [[0, 0] for _ in range(self.N)]
        mat[a][0] = 1
        mat[b][1] = 1
        return mat

    def exact_period(self, w: TrigForm, axes: tuple[int, int]):
        """Integral of a 2-form over a coordinate 2-torus (exact).

        Only the constant term of the pulled-back top form survives the
        integral; all waves integrate to zero over full periods.
        """
        pulled = w.pullback_affine(self.coordinate_torus_matrix(axes))
        f = pulled.component((0, 1))
        zero_key = ((0, 0), 0)
        return f.terms.get(zero_key, 0)
