"""Pointwise symplectic/Poisson algebra: flat/sharp, the W-norm, F, and
the Poisson-side identity.

Derived values frozen from matrix oracles:
  pi_can on T^2 has sharp(dx) = dy^, sharp(dy) = -dx^;
  beta = (1/2) dx^dy with pi = -omega^{-1} gives F(beta) = dx^dy and
  pi - wedge^2 sharp beta = (1/2) dx^ ^ dy^ = -(2 dx^dy)^{-1}.
"""

import random
from fractions import Fraction

import numpy as np
import pytest

from symlag.chart import Section, graph_pullback, zero_section
from symlag.forms import TrigForm, TrigMultiVector
from symlag.grids import torus_grid
from symlag.rings import PiRat
from symlag.sympoisson import (
    DegenerateError,
    f_map,
    flat,
    in_W,
    is_lagrangian,
    poisson_of,
    poisson_side,
    poisson_side_residual,
    sharp,
    sharp_flat_residual,
    symplectic_from_trig,
    w_norm,
)
from symlag.torus import TorusModel
from symlag.trig import COS, SIN, TrigScalar

from helpers import random_form

T2 = TorusModel(1)
T4 = TorusModel(2)
GRID2 = torus_grid(2, 16)
GRID4 = torus_grid(4, 6)


def symp(torus):
    return symplectic_from_trig(torus, torus.omega_can())


class TestFlatSharp:
    def test_flat_of_dx_frame(self):
        w = T2.omega_can()
        X = TrigMultiVector.basis(2, (0,))
        assert flat(w, X) == TrigForm.basis(2, (1,))

    def test_sharp_of_basis_covectors(self):
        pi = poisson_of(symp(T2))
        assert pi.sharp_exact(TrigForm.basis(2, (0,))) == TrigMultiVector.basis(2, (1,))
        assert pi.sharp_exact(TrigForm.basis(2, (1,))) == TrigMultiVector.basis(
            2, (0,)
        ).scale(-1)

    def test_sharp_flat_is_minus_identity(self):
        for torus, grid in ((T2, GRID2), (T4, GRID4)):
            s = symp(torus)
            pi = poisson_of(s)
            assert sharp_flat_residual(pi, s, grid) == 0.0

    def test_sharp_flat_roundtrip_random_vectors(self):
        rng = random.Random(3)
        s = symp(T2)
        pi = poisson_of(s)
        for _ in range(20):
            comps = {
                (i,): TrigScalar.const(2, Fraction(rng.randint(-5, 5), 3))
                for i in range(2)
            }
            v = TrigMultiVector(2, 1, comps)
            assert sharp(pi.bivector, flat(s.form, v)) + v == TrigMultiVector(2, 1)


class TestWNorm:
    def test_base_form_has_norm_zero(self):
        s = symp(T2)
        pi = poisson_of(s)
        assert w_norm(s.form, pi, GRID2) == pytest.approx(0.0, abs=1e-14)

    def test_scaling_gives_abs_c(self):
        s = symp(T2)
        pi = poisson_of(s)
        for c in (0.5, -0.25, 2.0):
            wt = s.form.scale(PiRat.of(Fraction(c).limit_denominator(8)) + PiRat.one())
            expect = abs(float(Fraction(c).limit_denominator(8)))
            assert w_norm(wt, pi, GRID2) == pytest.approx(expect, abs=1e-12)

    def test_degenerate_form_has_norm_at_least_one(self):
        # rank-2 form on T^4: dx1^dy1 only
        s = symp(T4)
        pi = poisson_of(s)
        wt = TrigForm.basis(4, (0, 2))
        assert w_norm(wt, pi, GRID4) >= 1.0

    def test_in_W_membership(self):
        s = symp(T2)
        pi = poisson_of(s)
        assert in_W(s.form, pi, GRID2)
        assert not in_W(s.form.scale(3), pi, GRID2)

    def test_in_W_rejects_non_closed(self):
        s = symp(T4)
        pi = poisson_of(s)
        bad = TrigForm(4, 2, {(0, 1): TrigScalar.wave(4, (0, 0, 1, 0), COS)})
        with pytest.raises(ValueError, match="closed"):
            in_W(bad, pi, GRID4)

    def test_convexity_on_members(self):
        rng = random.Random(13)
        s = symp(T2)
        pi = poisson_of(s)
        count = 0
        while count < 200:
            w1 = s.form + random_form(rng, 2, 2, radius=1, nterms=1).scale(
                Fraction(1, 9)
            )
            w2 = s.form + random_form(rng, 2, 2, radius=1, nterms=1).scale(
                Fraction(1, 9)
            )
            if not (in_W(w1, pi, GRID2) and in_W(w2, pi, GRID2)):
                continue
            t = rng.random()
            mix_norm = w_norm(
                w1.scale(Fraction(t).limit_denominator(64))
                + w2.scale(1 - Fraction(t).limit_denominator(64)),
                pi,
                GRID2,
            )
            assert mix_norm < 1.0
            count += 1


class TestLagrangian:
    def test_zero_section_exact(self):
        ok, res = is_lagrangian(T2.omega_can(), T2)
        assert ok and res == 0.0

    def test_closed_graph_is_lagrangian(self):
        sec = Section(T4, TrigForm(2, 1, {(0,): TrigScalar.wave(2, (1, 0), COS)}))
        # d(cos(2 pi x1) dx1) = 0
        ok, res = is_lagrangian(T4.omega_can(), T4, sec)
        assert ok and res == 0.0

    def test_non_closed_graph_fails(self):
        sec = Section(T4, TrigForm(2, 1, {(1,): TrigScalar.wave(2, (1, 0), SIN)}))
        ok, res = is_lagrangian(T4.omega_can(), T4, sec)
        assert not ok and res > 0.1

    def test_graph_pullback_sign(self):
        # graph^*(omega_can) = -d sigma for the substitution convention here
        sec = Section(T4, TrigForm(2, 1, {(1,): TrigScalar.wave(2, (1, 0), SIN)}))
        pulled = graph_pullback(T4, T4.omega_can(), sec)
        assert pulled == -sec.form.d()

    def test_lagrangian_iff_closed_family(self):
        rng = random.Random(17)
        for _ in range(25):
            form = random_form(rng, 2, 1, radius=2)
            sec = Section(T4, form)
            ok, _ = is_lagrangian(T4.omega_can(), T4, sec)
            assert ok == form.d().is_zero()


class TestFMap:
    def test_zero_beta(self):
        s = symp(T2)
        pi = poisson_of(s)
        res = f_map(TrigForm.zero(2, 2), pi)
        assert res.exact is not None and res.exact.is_zero()

    def test_half_omega_exact(self):
        s = symp(T2)
        pi = poisson_of(s)
        beta = s.form.scale(Fraction(1, 2))
        res = f_map(beta, pi)
        assert res.exact == s.form

    def test_singular_beta_rejected(self):
        s = symp(T2)
        pi = poisson_of(s)
        with pytest.raises(DegenerateError):
            f_map(s.form, pi)  # Id + sharp flat = 0

    def test_f0_is_zero_pointwise(self):
        s = symp(T2)
        pi = poisson_of(s)
        wt = TrigForm(2, 2, {(0, 1): TrigScalar.wave(2, (1, 0), SIN, Fraction(1, 10))})
        res = f_map(wt, pi, GRID2)
        assert res.exact is None
        vals = res.field.matrices_at(GRID2)
        ref = wt.matrix_at(GRID2)
        # small beta: F(beta) = beta + O(beta^2)
        assert np.max(np.abs(vals - ref)) < 0.05


class TestPoissonSide:
    def test_half_omega_bivector(self):
        s = symp(T2)
        pi = poisson_of(s)
        beta = s.form.scale(Fraction(1, 2))
        got = poisson_side(beta, pi)
        assert got == TrigMultiVector.basis(2, (0, 1)).scale(Fraction(1, 2))

    def test_beta_zero(self):
        s = symp(T2)
        pi = poisson_of(s)
        assert poisson_side(TrigForm.zero(2, 2), pi) == pi.bivector

    def test_exact_identity_constant(self):
        # -(omega + F(beta))^{-1} == pi - wedge^2 sharp beta, exact
        s = symp(T2)
        pi = poisson_of(s)
        beta = s.form.scale(Fraction(1, 2))
        res = f_map(beta, pi)
        deformed = symplectic_from_trig(T2, s.form + res.exact)
        assert poisson_of(deformed).bivector == poisson_side(beta, pi)

    @pytest.mark.parametrize("torus,grid", [(T2, GRID2), (T4, GRID4)])
    def test_identity_on_grid_for_trig_beta(self, torus, grid):
        rng = random.Random(23 + torus.n)
        s = symp(torus)
        pi = poisson_of(s)
        for _ in range(5):
            beta = random_form(rng, torus.N, 2, radius=1, nterms=2).scale(
                Fraction(1, 20)
            )
            assert poisson_side_residual(beta, pi, s, grid) <= 1e-12
