"""V-data, derived multibrackets, generalized Jacobi, strict morphism."""

import random
from fractions import Fraction

import pytest

from symlag.forms import TrigForm, TrigMultiVector, schouten
from symlag.sympoisson import poisson_of, symplectic_from_trig
from symlag.torus import TorusModel
from symlag.trig import COS, SIN, TrigScalar
from symlag.voronov import (
    ExtElement,
    MatrixLieCarrier,
    VData,
    jacobi_residual,
    jacobi_test,
    matrix_vdata,
    strict_morphism_check,
    torus_vdata,
    voronov_bracket,
    voronov_d,
)

T2 = TorusModel(1)
T4 = TorusModel(2)


def vert(torus, i, scalar):
    return TrigMultiVector(torus.N, 1, {(torus.n + i,): scalar})


class TestVData:
    def test_delta_checks(self):
        v = torus_vdata(T2)
        c = v.carrier
        assert c.is_zero(c.project(v.delta))
        assert c.is_zero(c.bracket(v.delta, v.delta))

    def test_validate_on_samples(self):
        rng = random.Random(3)
        for factory in (lambda: torus_vdata(T2), lambda: torus_vdata(T4), matrix_vdata):
            v = factory()
            elems = [v.sample_factory(rng) for _ in range(6)]
            carrier_samples = [e.x if e.x is not None else e.a for e in elems]
            got = v.validate_on_samples(carrier_samples)
            assert got == {"idempotent": True, "kernel_closed": True, "abelian": True}

    def test_bad_delta_rejected(self):
        # the matrix carrier is concentrated in degree 0: no valid Delta != 0
        carrier = MatrixLieCarrier(2)
        bad = ((Fraction(0), Fraction(1)), (Fraction(0), Fraction(0)))
        with pytest.raises(ValueError, match="degree 1"):
            VData(carrier, bad)
        # a vertical constant bivector survives the degree check but is not
        # in ker P
        from symlag.voronov import TrigMultivectorCarrier

        vertical = TrigMultiVector.basis(4, (2, 3))
        with pytest.raises(ValueError, match="ker P"):
            VData(TrigMultivectorCarrier(T4), vertical)


class TestMultibrackets:
    def test_d_of_shifted_delta(self):
        v = torus_vdata(T2)
        e = ExtElement.shifted(v, v.delta)
        assert voronov_d(v, e).is_zero(v)

    def test_d_of_abelian_leg(self):
        v = torus_vdata(T2)
        a = vert(T2, 0, TrigScalar.wave(2, (1, 0), SIN))
        e = ExtElement.abelian(v, a)
        got = voronov_d(v, e)
        assert got.x is None or v.carrier.is_zero(got.x)
        oracle = v.carrier.project(schouten(T2.pi_can(), a))
        assert got.a == oracle

    def test_binary_on_two_shifted_deltas(self):
        v = torus_vdata(T2)
        e = ExtElement.shifted(v, v.delta)
        assert voronov_bracket(v, [e, e]).is_zero(v)

    def test_pair_of_abelian_elements_oracle(self):
        v = torus_vdata(T2)
        a1 = vert(T2, 0, TrigScalar.wave(2, (1, 0), SIN))
        a2 = vert(T2, 0, TrigScalar.wave(2, (1, 0), COS))
        got = voronov_bracket(
            v, [ExtElement.abelian(v, a1), ExtElement.abelian(v, a2)]
        )
        oracle = v.carrier.project(
            schouten(schouten(T2.pi_can(), a1), a2)
        )
        assert got.a == oracle

    def test_mixed_arity4_matches_nesting(self):
        v = torus_vdata(T2, arity_cap=4)
        rng = random.Random(11)
        x = TrigMultiVector(2, 1, {(0,): TrigScalar.wave(2, (1, 0), SIN)})
        a_list = [
            vert(T2, 0, TrigScalar.wave(2, (rng.randint(-1, 1), 0), COS, Fraction(1, 2)))
            for _ in range(3)
        ]
        args = [ExtElement.shifted(v, x)] + [ExtElement.abelian(v, a) for a in a_list]
        got = voronov_bracket(v, args)
        acc = x
        for a in a_list:
            acc = schouten(acc, a)
        assert got.a == v.carrier.project(acc)

    def test_two_shifted_with_extra_abelian_vanishes(self):
        v = torus_vdata(T2, arity_cap=4)
        x = ExtElement.shifted(v, T2.pi_can())
        a = ExtElement.abelian(v, vert(T2, 0, TrigScalar.const(2, 1)))
        assert voronov_bracket(v, [x, x, a]).is_zero(v)

    def test_arity_cap(self):
        v = torus_vdata(T2, arity_cap=3)
        a = ExtElement.abelian(v, vert(T2, 0, TrigScalar.const(2, 1)))
        with pytest.raises(ValueError, match="cap"):
            voronov_bracket(v, [a, a, a, a])


class TestJacobi:
    def test_d_squares_to_zero(self):
        rng = random.Random(17)
        for v in (torus_vdata(T2), matrix_vdata(2)):
            for _ in range(50):
                e = v.sample_factory(rng)
                assert voronov_d(v, voronov_d(v, e)).is_zero(v)

    @pytest.mark.parametrize("arity", [1, 2, 3])
    def test_arities_on_torus_instance(self, arity):
        v = torus_vdata(T2)
        got = jacobi_test(v, arity, 20, random.Random(19 + arity))
        assert got[arity] == 0.0

    def test_arity3_on_t4(self):
        v = torus_vdata(T4)
        got = jacobi_test(v, 3, 10, random.Random(23))
        assert got == {1: 0.0, 2: 0.0, 3: 0.0}

    def test_matrix_instance(self):
        got = jacobi_test(matrix_vdata(2), 3, 40, random.Random(29))
        assert got == {1: 0.0, 2: 0.0, 3: 0.0}


class TestStrictMorphism:
    def setup_method(self):
        self.pi2 = poisson_of(symplectic_from_trig(T2, T2.omega_can()))
        self.pi4 = poisson_of(symplectic_from_trig(T4, T4.omega_can()))

    def test_zero_beta(self):
        got = strict_morphism_check(T2, self.pi2, TrigForm.zero(2, 2))
        assert got.both_zero and got.transported_match

    def test_constant_beta(self):
        got = strict_morphism_check(T2, self.pi2, T2.omega_can().scale(Fraction(1, 2)))
        assert got.both_zero and got.transported_match

    def test_non_mc_beta_residuals_transported(self):
        beta = TrigForm(4, 2, {(0, 3): TrigScalar.wave(4, (0, 0, 1, 0), SIN)})
        assert T4.is_relative(beta)
        got = strict_morphism_check(T4, self.pi4, beta)
        assert got.form_residual > 0
        assert got.transported_match
        assert got.abelian_residual == 0.0  # beta is relative

    def test_non_relative_beta_has_abelian_residual(self):
        beta = TrigForm.basis(4, (0, 1))  # restricts to the L volume form
        got = strict_morphism_check(T4, self.pi4, beta)
        assert got.abelian_residual > 0
