"""Koszul dgL[1]a: transport consistency, axioms, brackets, MC elements,
and gauge flows realized as isotopies."""

import random
from fractions import Fraction

import numpy as np
import pytest

from symlag.forms import TrigForm, TrigMultiVector
from symlag.grids import torus_grid
from symlag.koszul import (
    GaugePath,
    MCElement,
    SupportCapError,
    gauge_flow,
    gauge_vs_isotopy,
    koszul_bracket,
    lambda1,
    lambda2,
    mc_residual,
    mc_to_deformation,
    mu1,
    mu2,
    one_form_bracket_oracle,
    poisson_bracket_functions,
    second_koszul_helper,
    transport,
    transport_inverse,
)
from symlag.rings import PiRat
from symlag.sympoisson import DegenerateError, poisson_of, symplectic_from_trig
from symlag.torus import TorusModel
from symlag.trig import COS, SIN, TrigScalar

from helpers import random_form

T2 = TorusModel(1)
T4 = TorusModel(2)


def setup_t(torus):
    s = symplectic_from_trig(torus, torus.omega_can())
    return s, poisson_of(s)


S2, PI2 = setup_t(T2)
S4, PI4 = setup_t(T4)


def rel_random(rng, torus, degree, radius=1, nterms=2):
    w = random_form(rng, torus.N, degree, radius=radius, nterms=nterms)
    return w - torus.extend_to_M(torus.restrict_to_L(w))


class TestTransport:
    @pytest.mark.parametrize("torus,pi", [(T2, PI2), (T4, PI4)])
    def test_roundtrip(self, torus, pi):
        rng = random.Random(5 + torus.n)
        for _ in range(20):
            deg = rng.randint(0, torus.N)
            a = random_form(rng, torus.N, deg, radius=1)
            assert transport_inverse(pi, transport(pi, a)) == a

    @pytest.mark.parametrize("torus,pi", [(T2, PI2), (T4, PI4)])
    def test_intertwines_differentials(self, torus, pi):
        # T(d a) = mu_1(T a) exactly, at every degree
        rng = random.Random(7 + torus.n)
        for _ in range(25):
            deg = rng.randint(0, torus.N - 1)
            a = random_form(rng, torus.N, deg, radius=1)
            assert transport(pi, a.d()) == mu1(pi, transport(pi, a))

    def test_two_form_image_is_minus_wedge_sharp(self):
        # beta = dx^dy maps to -(dy^ ^ (-dx^)) = -(dx^ ^ dy^)
        beta = TrigForm.basis(2, (0, 1))
        got = transport(PI2, beta)
        assert got == TrigMultiVector.basis(2, (0, 1)).scale(-1)


class TestKoszulBracket:
    def test_constant_one_forms(self):
        dx = TrigForm.basis(2, (0,))
        dy = TrigForm.basis(2, (1,))
        assert koszul_bracket(PI2, dx, dy).is_zero()

    def test_sin_dx_with_dy(self):
        a = TrigForm(2, 1, {(0,): TrigScalar.wave(2, (1, 0), SIN)})
        b = TrigForm.basis(2, (1,))
        got = koszul_bracket(PI2, a, b)
        oracle = one_form_bracket_oracle(PI2, a, b)
        assert got == oracle

    @pytest.mark.parametrize("torus,pi", [(T2, PI2), (T4, PI4)])
    def test_matches_one_form_formula(self, torus, pi):
        rng = random.Random(11 + torus.n)
        for _ in range(50):
            a = random_form(rng, torus.N, 1, radius=1)
            b = random_form(rng, torus.N, 1, radius=1)
            assert koszul_bracket(pi, a, b) == one_form_bracket_oracle(pi, a, b)

    def test_exact_forms_bracket_to_poisson_bracket(self):
        # [df, dg]_pi = d {f, g}_pi
        f = TrigForm(2, 0, {(): TrigScalar.wave(2, (1, 0), SIN)})
        g = TrigForm(2, 0, {(): TrigScalar.wave(2, (0, 1), SIN)})
        lhs = koszul_bracket(PI2, f.d(), g.d())
        rhs = poisson_bracket_functions(PI2, f, g).d()
        assert lhs == rhs


class TestAxioms:
    def test_lambda1_squared(self):
        rng = random.Random(13)
        for _ in range(30):
            a = random_form(rng, 4, rng.randint(0, 3), radius=1)
            assert lambda1(lambda1(a)).is_zero()

    @pytest.mark.parametrize("torus,pi", [(T2, PI2), (T4, PI4)])
    def test_graded_symmetry(self, torus, pi):
        # lambda2(a, b) = (-1)^{|a||b|} lambda2(b, a) in form degrees
        rng = random.Random(17 + torus.n)
        for _ in range(25):
            p = rng.randint(1, torus.N - 1)
            q = rng.randint(1, torus.N - 1)
            a = random_form(rng, torus.N, p, radius=1, nterms=1)
            b = random_form(rng, torus.N, q, radius=1, nterms=1)
            sign = -1 if (p * q) % 2 else 1
            assert lambda2(pi, a, b) == lambda2(pi, b, a).scale(sign)

    @pytest.mark.parametrize("torus,pi", [(T2, PI2), (T4, PI4)])
    def test_leibniz(self, torus, pi):
        # the arity-2 generalized Jacobi identity of an L-infinity[1] algebra:
        # lambda1 lambda2(a,b) + lambda2(lambda1 a, b)
        #                      + (-1)^{|a|} lambda2(a, lambda1 b) = 0,
        # |a| the shifted degree (== form degree mod 2)
        rng = random.Random(19 + torus.n)
        for _ in range(25):
            p = rng.randint(1, torus.N - 1)
            q = rng.randint(1, torus.N - 1)
            a = random_form(rng, torus.N, p, radius=1, nterms=1)
            b = random_form(rng, torus.N, q, radius=1, nterms=1)
            total = (
                lambda1(lambda2(pi, a, b))
                + lambda2(pi, lambda1(a), b)
                + lambda2(pi, a, lambda1(b)).scale(-1 if p % 2 else 1)
            )
            assert total.is_zero()

    @pytest.mark.parametrize("torus,pi", [(T2, PI2), (T4, PI4)])
    def test_graded_jacobi(self, torus, pi):
        # sum over cyclic unshuffles of lambda2(lambda2(.,.),.) with the
        # shifted Koszul signs vanishes; shifted degree = form degree mod 2
        rng = random.Random(23 + torus.n)
        for _ in range(20):
            degs = [rng.randint(1, 2) for _ in range(3)]
            a, b, c = (
                random_form(rng, torus.N, d, radius=1, nterms=1) for d in degs
            )
            pa, pb, pc = degs
            t1 = lambda2(pi, lambda2(pi, a, b), c)
            t2 = lambda2(pi, lambda2(pi, b, c), a).scale(
                -1 if (pa * (pb + pc)) % 2 else 1
            )
            t3 = lambda2(pi, lambda2(pi, c, a), b).scale(
                -1 if (pc * (pa + pb)) % 2 else 1
            )
            assert (t1 + t2 + t3).is_zero()

    @pytest.mark.parametrize("torus,pi", [(T2, PI2), (T4, PI4)])
    def test_relative_closure(self, torus, pi):
        rng = random.Random(29 + torus.n)
        for _ in range(20):
            a = rel_random(rng, torus, rng.randint(1, 2))
            b = rel_random(rng, torus, rng.randint(1, 2))
            assert torus.is_relative(lambda1(a))
            assert torus.is_relative(lambda2(pi, a, b))


class TestSecondKoszulHelper:
    def test_bilinear_and_graded_symmetric(self):
        # symmetric for the shifted grading: K2(a,b) = (-1)^{pq} K2(b,a)
        rng = random.Random(31)
        for _ in range(15):
            p = rng.randint(1, 3)
            q = rng.randint(1, 3)
            a = random_form(rng, 4, p, radius=1)
            b = random_form(rng, 4, q, radius=1)
            c = random_form(rng, 4, p, radius=1)
            sign = -1 if (p * q) % 2 else 1
            assert second_koszul_helper(PI4, a, b) == second_koszul_helper(
                PI4, b, a
            ).scale(sign)
            lhs = second_koszul_helper(PI4, a + c, b)
            rhs = second_koszul_helper(PI4, a, b) + second_koszul_helper(PI4, c, b)
            assert lhs == rhs


class TestMC:
    def test_zero_is_mc(self):
        assert mc_residual(PI2, TrigForm.zero(2, 2)).is_zero()

    def test_constant_beta_is_mc(self):
        beta = T2.omega_can().scale(Fraction(1, 2))
        assert mc_residual(PI2, beta).is_zero()

    def test_t2_top_degree_always_mc(self):
        beta = TrigForm(2, 2, {(0, 1): TrigScalar.wave(2, (0, 1), SIN)})
        assert mc_residual(PI2, beta).is_zero()

    def test_t4_residual_nonzero(self):
        rng = random.Random(37)
        found = False
        for _ in range(10):
            beta = rel_random(rng, T4, 2, radius=1)
            if not mc_residual(PI4, beta).is_zero():
                found = True
                break
        assert found

    def test_mc_to_deformation_zero(self):
        out = mc_to_deformation(T2, PI2, S2, MCElement(T2, TrigForm.zero(2, 2)))
        assert out.form == S2.form

    def test_mc_to_deformation_half(self):
        beta = T2.omega_can().scale(Fraction(1, 2))
        out = mc_to_deformation(T2, PI2, S2, MCElement(T2, beta))
        assert out.form == S2.form.scale(2)

    def test_relative_flag_checked(self):
        beta = TrigForm.basis(4, (0, 1))  # not relative on T4
        with pytest.raises(ValueError, match="relative"):
            mc_to_deformation(T4, PI4, S4, MCElement(T4, beta))

    def test_non_mc_rejected(self):
        beta = TrigForm(4, 2, {(0, 3): TrigScalar.wave(4, (0, 0, 1, 0), COS)})
        if mc_residual(PI4, beta).is_zero():
            pytest.skip("unexpectedly MC")
        with pytest.raises(ValueError, match="residual"):
            mc_to_deformation(T4, PI4, S4, MCElement(T4, beta))


def small_alpha(c=0.002, freq=1):
    def alpha(t):
        # relative 1-form with a mild time dependence
        coeff = c * (1.0 + 0.5 * t)
        return TrigForm(2, 1, {(0,): TrigScalar.wave(2, (0, freq), SIN, coeff)})

    return alpha


class TestGaugeFlow:
    def test_zero_generator_is_constant(self):
        beta0 = T2.omega_can().scale(Fraction(1, 20))
        path = gauge_flow(
            T2, PI2, beta0, lambda t: TrigForm.zero(2, 1), steps=20
        )
        assert (path.betas[-1] - beta0.to_float()).max_abs_coeff() == 0.0

    def test_small_path_stays_mc(self):
        beta0 = T2.omega_can().scale(Fraction(1, 20))
        path = gauge_flow(T2, PI2, beta0, small_alpha(), steps=60)
        assert path.max_mc_residual <= 1e-10
        assert path.min_i_pi_det > 0.5

    def test_linearized_derivative(self):
        beta0 = T2.omega_can().scale(Fraction(1, 20))
        alpha = small_alpha(0.01)
        path = gauge_flow(T2, PI2, beta0, alpha, steps=400, samples=401)
        dt = path.times[1] - path.times[0]
        # second-order one-sided difference at t = 0
        fd = (
            path.betas[0].scale(-3.0) + path.betas[1].scale(4.0) - path.betas[2]
        ).scale(1.0 / (2.0 * dt))
        rhs = alpha(0.0).d() - koszul_bracket(PI2, alpha(0.0), beta0.to_float())
        assert (fd - rhs).max_abs_coeff() <= 1e-6

    def test_non_relative_generator_rejected(self):
        beta0 = T2.omega_can().scale(Fraction(1, 20))
        bad = lambda t: TrigForm.basis(2, (0,), Fraction(1, 100))
        with pytest.raises(ValueError, match="relative"):
            gauge_flow(T2, PI2, beta0, bad, steps=10)

    def test_leaving_i_pi_detected(self):
        # drive beta toward omega (where Id + sharp flat beta degenerates)
        beta0 = T2.omega_can().scale(Fraction(3, 4))
        big = lambda t: TrigForm(
            2, 1, {(0,): TrigScalar.wave(2, (0, 1), SIN, 8.0)}
        )
        with pytest.raises((DegenerateError, SupportCapError)) as err:
            gauge_flow(T2, PI2, beta0, big, steps=40, det_tol=0.2, cap_tol=1e30)
        assert getattr(err.value, "time", None) is not None or isinstance(
            err.value, DegenerateError
        )


class TestGaugeIsotopy:
    def test_trivial_path(self):
        beta0 = T2.omega_can().scale(Fraction(1, 20))
        path = GaugePath(
            [0.0, 1.0],
            [beta0.to_float(), beta0.to_float()],
            lambda t: TrigForm.zero(2, 1),
            0.0,
            1.0,
        )
        verdict = gauge_vs_isotopy(T2, PI2, S2, path, steps=10, per_axis=8)
        assert verdict.pullback_residual <= 1e-12
        assert verdict.l_drift == 0.0

    def test_small_gauge_path(self):
        beta0 = T2.omega_can().scale(Fraction(1, 20))
        path = gauge_flow(T2, PI2, beta0, small_alpha(), steps=120)
        verdict = gauge_vs_isotopy(T2, PI2, S2, path, steps=400, per_axis=16)
        assert verdict.pullback_residual <= 1e-5
        assert verdict.l_drift <= 1e-8
