"""Flow engine: closed-form flows, RK4 order, Moser, cutoff, plateau,
concatenation, and the C^1 bound."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from symlag.chart import Section, zero_section
from symlag.flows import (
    ChartExitError,
    Cutoff,
    MoserField,
    Plateau,
    Stage,
    TrigField,
    c1_distance,
    concat_isotopy,
    cutoff_f,
    field_c1_norm,
    flow,
    gronwall_check,
    identity_flow,
    moser_solve,
    phi_L,
    pullback_residual,
    run_program,
    section_field,
)
from symlag.forms import TrigForm, TrigMultiVector
from symlag.grids import l_grid, torus_grid
from symlag.torus import TorusModel
from symlag.trig import COS, SIN, TrigScalar

T2 = TorusModel(1)
GRID = torus_grid(2, 8)


def vfield(comps):
    return TrigField(TrigMultiVector(2, 1, comps))


class TestFlowBasics:
    def test_zero_field(self):
        fr = flow(vfield({}), GRID, steps=5)
        assert np.allclose(fr.end, GRID)
        assert np.allclose(fr.jac, np.eye(2))

    def test_constant_vertical_translation(self):
        c = 0.3
        fld = vfield({(1,): TrigScalar.const(2, Fraction(3, 10))})
        fr = flow(fld, GRID, steps=4)
        assert np.allclose(fr.end[:, 0], GRID[:, 0])
        assert np.allclose(fr.end[:, 1], GRID[:, 1] + c)
        assert np.allclose(fr.jac, np.eye(2), atol=1e-14)

    def test_shear_flow_closed_form(self):
        # X = sin(2 pi x) dy^: x frozen, y translated; J has one off-diagonal
        fld = vfield({(1,): TrigScalar.wave(2, (1, 0), SIN)})
        fr = flow(fld, GRID, steps=6)
        assert np.allclose(fr.end[:, 0], GRID[:, 0])
        assert np.allclose(fr.end[:, 1], GRID[:, 1] + np.sin(2 * np.pi * GRID[:, 0]))
        expect = 2 * np.pi * np.cos(2 * np.pi * GRID[:, 0])
        assert np.allclose(fr.jac[:, 1, 0], expect, atol=1e-12)
        assert np.allclose(fr.jac[:, 0, 0], 1.0)

    def test_rk4_order(self):
        fld = vfield(
            {
                (0,): TrigScalar.wave(2, (0, 1), SIN),
                (1,): TrigScalar.wave(2, (1, 0), SIN),
            }
        )
        pts = torus_grid(2, 4)
        ref = flow(fld, pts, steps=640)
        errs = []
        for steps in (20, 40):
            fr = flow(fld, pts, steps=steps)
            errs.append(np.max(np.abs(fr.end - ref.end)))
        assert errs[0] / errs[1] >= 12.0

    def test_functoriality_autonomous(self):
        fld = vfield(
            {
                (0,): TrigScalar.wave(2, (0, 1), COS, Fraction(1, 3)),
                (1,): TrigScalar.wave(2, (1, 0), SIN, Fraction(1, 2)),
            }
        )
        pts = torus_grid(2, 4)
        full = flow(fld, pts, 0.0, 0.9, steps=360)
        part = flow(fld, pts, 0.0, 0.5, steps=200)
        rest = flow(fld, part.end, 0.5, 0.9, steps=160, jac0=part.jac)
        assert np.max(np.abs(rest.end - full.end)) < 1e-10
        assert np.max(np.abs(rest.jac - full.jac)) < 1e-9

    def test_checkpoints(self):
        fld = vfield({(1,): TrigScalar.const(2, 1)})
        fr = flow(fld, GRID[:4], 0.0, 1.0, steps=10, checkpoint_times=[0.25, 0.5])
        assert [t for t, _, _ in fr.checkpoints] == [0.25, 0.5]
        t, pts, _ = fr.checkpoints[0]
        assert np.allclose(pts[:, 1], GRID[:4, 1] + 0.25)


class TestPullbackCheck:
    def test_identity(self):
        fr = identity_flow(GRID)
        w = T2.omega_can()
        assert pullback_residual(fr, w, w) == 0.0

    def test_translation_invariance(self):
        fld = vfield({(1,): TrigScalar.const(2, Fraction(1, 4))})
        fr = flow(fld, GRID, steps=8)
        w = T2.omega_can()
        assert pullback_residual(fr, w, w) <= 1e-12


class TestC1Distance:
    def test_same_flow(self):
        fr = identity_flow(GRID)
        d = c1_distance(fr, fr)
        assert d.position == 0.0 and d.jacobian == 0.0

    def test_translation_vs_identity(self):
        fld = vfield({(1,): TrigScalar.const(2, Fraction(1, 4))})
        fr = flow(fld, GRID, steps=4)
        d = c1_distance(fr, identity_flow(GRID))
        assert d.position == pytest.approx(0.25, abs=1e-13)
        assert d.jacobian == pytest.approx(0.0, abs=1e-13)

    def test_grid_mismatch_rejected(self):
        with pytest.raises(ValueError):
            c1_distance(identity_flow(GRID), identity_flow(GRID[:4]))


class TestCutoff:
    def test_on_L(self):
        assert cutoff_f(T2, [0.3, 0.0]) == 1.0

    def test_outside_support(self):
        assert cutoff_f(T2, [0.1, 0.49]) == 0.0
        assert cutoff_f(T2, [0.1, -0.45]) == 0.0

    def test_transition_monotone(self):
        vals = [cutoff_f(T2, [0.0, y]) for y in np.linspace(0.28, 0.41, 30)]
        assert vals[0] == 1.0 and vals[-1] == 0.0
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert 0.0 < cutoff_f(T2, [0.0, 0.35]) < 1.0

    def test_plateau_region(self):
        assert cutoff_f(T2, [0.7, 9.0 / 32.0]) == 1.0
        assert cutoff_f(T2, [0.7, 0.25 + 1.0 / 32.0]) == 1.0

    def test_gradient_matches_fd(self):
        c = Cutoff(T2)
        pts = np.array([[0.2, 0.33], [0.9, -0.36], [0.4, 0.1]])
        g = c.grad(pts)
        eps = 1e-6
        for j in range(2):
            shifted = pts.copy()
            shifted[:, j] += eps
            fd = (c.value(shifted) - c.value(pts)) / eps
            assert np.allclose(g[:, j], fd, atol=1e-5)


class TestPlateau:
    def test_seven_conditions(self):
        got = Plateau().check_conditions()
        assert got["knots"] and got["monotone"]

    def test_c2_junctions(self):
        # the junctions are C^2 but not C^3, so the second-difference jump
        # across each knot shrinks linearly with the probe step
        h = Plateau()
        for knot in (0.2, 0.4, 0.6, 0.8):
            jumps = []
            for eps in (1e-4, 1e-5):
                left = (h(knot) - 2 * h(knot - eps) + h(knot - 2 * eps)) / eps**2
                right = (h(knot + 2 * eps) - 2 * h(knot + eps) + h(knot)) / eps**2
                jumps.append(abs(left - right))
            assert jumps[0] <= 5000 * 1e-4
            assert jumps[1] <= 5000 * 1e-5


class TestPhiL:
    def test_zero_section_is_identity(self):
        r = phi_L(T2, zero_section(T2), steps=20)
        assert np.max(np.abs(r.flow.displacement())) == 0.0
        assert r.graph_residual == 0.0

    def test_lands_on_graph(self):
        sec = Section(T2, TrigForm(1, 1, {(0,): TrigScalar.wave(1, (1,), SIN, Fraction(1, 5))}))
        r = phi_L(T2, sec, steps=50)
        assert r.graph_residual <= 1e-10

    def test_chart_violation_rejected(self):
        sec = Section(T2, TrigForm(1, 1, {(0,): TrigScalar.const(1, Fraction(3, 10))}))
        with pytest.raises(ChartExitError):
            phi_L(T2, sec)


def moser_family(eps=Fraction(1, 20)):
    w1 = T2.omega_can()
    beta = TrigForm(2, 1, {(0,): TrigScalar.wave(2, (0, 1), SIN, eps)})
    return w1, w1 + beta.d(), beta


class TestMoser:
    def test_trivial(self):
        w1, _, _ = moser_family()
        r = moser_solve(T2, w1, w1, TrigForm.zero(2, 1), steps=10, per_axis=8)
        assert r.pullback_residual <= 1e-14
        assert r.l_drift == 0.0

    def test_spec_family(self):
        w1, w2, beta = moser_family()
        r = moser_solve(T2, w1, w2, beta, steps=1000, per_axis=16)
        assert r.pullback_residual <= 1e-6
        assert r.l_drift <= 1e-8

    def test_non_relative_primitive_rejected(self):
        w1 = T2.omega_can()
        beta = TrigForm(2, 1, {(0,): TrigScalar.wave(2, (1, 0), SIN, Fraction(1, 20))})
        with pytest.raises(ValueError, match="relative"):
            moser_solve(T2, w1, w1 + beta.d(), beta, steps=10, per_axis=8)

    def test_wrong_primitive_rejected(self):
        w1, w2, beta = moser_family()
        with pytest.raises(ValueError, match="difference"):
            moser_solve(T2, w1, w2, beta.scale(2), steps=10, per_axis=8)


class TestGronwall:
    def test_zero_section(self):
        got = gronwall_check(T2, zero_section(T2), steps=10, per_axis=8)
        assert got["norm1"] == 0.0
        assert got["position"] == 0.0 and got["jacobian"] == 0.0

    def test_sin_section(self):
        sec = Section(T2, TrigForm(1, 1, {(0,): TrigScalar.wave(1, (1,), SIN, Fraction(1, 5))}))
        got = gronwall_check(T2, sec, steps=100, per_axis=16)
        assert got["position_ok"] and got["jacobian_ok"]

    def test_random_chart_sections(self):
        rng = random.Random(101)
        for _ in range(5):
            coeff = Fraction(rng.randint(1, 20), 100)
            freq = rng.randint(1, 2)
            phase = rng.choice([COS, SIN])
            sec = Section(T2, TrigForm(1, 1, {(0,): TrigScalar.wave(1, (freq,), phase, coeff)}))
            got = gronwall_check(T2, sec, steps=60, per_axis=12)
            assert got["position_ok"] and got["jacobian_ok"]


class TestConcat:
    def test_trivial_program(self):
        zero = TrigField(TrigMultiVector(2, 1))
        res = concat_isotopy(
            T2,
            lambda t: [Stage(zero, 0.0, 0.0)],
            l_grid(1, 8),
            sample_times=np.linspace(0, 1, 5),
            base_steps=10,
            expected_section=lambda t: zero_section(T2),
        )
        assert all(s.tube_excess == 0.0 for s in res.samples)
        assert all(s.section_residual == 0.0 for s in res.samples)

    def test_vertical_ramp_with_plateau(self):
        h = Plateau()
        sec = Section(T2, TrigForm(1, 1, {(0,): TrigScalar.wave(1, (1,), SIN, Fraction(1, 5))}))
        fld = section_field(T2, sec)

        def program(t):
            return [Stage(fld, 0.0, min(3.0 * h(t), 1.0))]

        def expected(t):
            return sec.scale(Fraction(min(3.0 * h(t), 1.0)).limit_denominator(1024))

        res = concat_isotopy(
            T2,
            program,
            l_grid(1, 8),
            sample_times=[0.0, 0.1, 0.2, 0.3, 0.5],
            base_steps=50,
            expected_section=expected,
        )
        assert res.samples[-1].tube_excess <= 0.2 + 1e-9

    def test_chart_exit_detected(self):
        big = Section(T2, TrigForm(1, 1, {(0,): TrigScalar.const(1, Fraction(2, 10))}))
        fld = section_field(T2, big)

        def program(t):
            return [Stage(fld, 0.0, 2.0 * t)]  # overshoots the tube for t near 1

        with pytest.raises(ChartExitError) as err:
            concat_isotopy(
                T2,
                program,
                l_grid(1, 4),
                sample_times=np.linspace(0.0, 1.0, 11),
                base_steps=40,
            )
        assert err.value.time is not None


class TestMoserFieldJacobian:
    def test_against_finite_differences(self):
        w1, w2, beta = moser_family(Fraction(1, 8))
        fld = MoserField(w1, beta)
        pts = torus_grid(2, 4)
        J = fld.jacobians(0.35, pts)
        eps = 1e-6
        for k in range(2):
            shifted = pts.copy()
            shifted[:, k] += eps
            fd = (fld.values(0.35, shifted) - fld.values(0.35, pts)) / eps
            assert np.allclose(J[:, :, k], fd, atol=1e-5)
