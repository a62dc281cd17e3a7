"""Numeric-to-spectral bridges: FFT fits of matrix fields to float trig
forms, constrained primitive solves in coefficient space, and
finite-difference closedness checks for matrix-valued 2-forms."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .cohomology import BlockComplex, BlockTables, M_SIDE
from .forms import TrigForm
from .torus import TorusModel
from .trig import COS, SIN, TrigScalar


def _fft_grid(dim: int, per_axis: int) -> np.ndarray:
    axes = [np.arange(per_axis) / per_axis for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def fit_scalar_samples(
    values: np.ndarray, dim: int, per_axis: int, max_freq: int
) -> tuple[TrigScalar, float]:
    """Fit uniform-grid samples to a trig polynomial with |k|_inf <= max_freq.

    Returns the float-coefficient scalar and the largest dropped wave
    amplitude (the spectral tail, a fit-quality certificate).
    """
    if max_freq >= per_axis // 2:
        raise ValueError("max_freq must be below the grid Nyquist frequency")
    C = np.fft.fftn(values.reshape([per_axis] * dim)) / (per_axis**dim)
    terms: dict = {}
    tail = 0.0
    seen = set()
    for raw in itertools.product(range(per_axis), repeat=dim):
        k = tuple(r if r <= per_axis // 2 else r - per_axis for r in raw)
        if k in seen:
            continue
        mk = tuple(-x for x in k)
        seen.add(k)
        seen.add(mk)
        c = C[raw]
        amp_cos = float(np.real(c)) * (1.0 if not any(k) else 2.0)
        amp_sin = float(-np.imag(c)) * 2.0
        loud = max(abs(amp_cos), 0.0 if not any(k) else abs(amp_sin))
        if max(abs(x) for x in k) > max_freq:
            tail = max(tail, loud)
            continue
        lead = next((x for x in k if x != 0), 0)
        if lead < 0:
            k = mk
            amp_sin = -amp_sin
        if amp_cos:
            terms[(k, COS)] = terms.get((k, COS), 0.0) + amp_cos
        if any(k) and amp_sin:
            terms[(k, SIN)] = terms.get((k, SIN), 0.0) + amp_sin
    return TrigScalar(dim, terms), tail


def fit_two_form(
    field, dim: int, per_axis: int = 32, max_freq: int = 8
) -> tuple[TrigForm, float]:
    """Fit a matrix-valued 2-form field to a float trig form."""
    from .sympoisson import as_matrix_field

    grid = _fft_grid(dim, per_axis)
    B = as_matrix_field(field).matrices_at(grid)
    comps = {}
    tail = 0.0
    for i in range(dim):
        for j in range(i + 1, dim):
            s, t = fit_scalar_samples(B[:, i, j], dim, per_axis, max_freq)
            tail = max(tail, t)
            if not s.is_zero():
                comps[(i, j)] = s
    return TrigForm(dim, 2, comps), tail


def two_form_closedness_residual(field, dim: int, points, eps: float = 1e-5) -> float:
    """max |dW(e_i, e_j, e_k)| estimated by central differences."""
    from .sympoisson import as_matrix_field

    f = as_matrix_field(field)
    pts = np.asarray(points, dtype=float)

    def partial(k):
        up = pts.copy()
        dn = pts.copy()
        up[:, k] += eps
        dn[:, k] -= eps
        return (f.matrices_at(up) - f.matrices_at(dn)) / (2 * eps)

    partials = [partial(k) for k in range(dim)]
    worst = 0.0
    for i, j, k in itertools.combinations(range(dim), 3):
        val = partials[i][:, j, k] - partials[j][:, i, k] + partials[k][:, i, j]
        worst = max(worst, float(np.max(np.abs(val))))
    return worst


# ---------------------------------------------------------------------------
# constrained primitive solve: d(mu) = delta with mu relative


def solve_relative_primitive(
    torus: TorusModel, delta: TrigForm, budget: int | None = None
) -> tuple[TrigForm, float, float]:
    """Least-squares solve of d(mu) = delta over relative 1-forms.

    The solve runs per x-frequency block on the exact block matrices (cast
    to floats), with relativity enforced by working in the kernel basis of
    the restriction.  Returns (mu, residual, harmonic_leftover): the
    harmonic part of delta cannot be hit by any primitive and is reported
    separately.
    """
    if delta.degree != 2 or delta.dim != torus.N:
        raise ValueError("expected a 2-form on the model torus")
    if budget is None:
        budget = max(delta.freq_radius(), 1)
    tables = BlockTables(torus, budget)

    by_block: dict[tuple, dict] = {}
    harmonic = 0.0
    zero_freq = (0,) * torus.N
    for idx, s in delta.terms.items():
        for freq, phase, coeff in s.waves():
            if max((abs(f) for f in freq), default=0) > budget:
                raise ValueError("delta has support outside the budget")
            c = float(coeff)
            if freq == zero_freq:
                harmonic = max(harmonic, abs(c))
                continue
            kappa = tuple(freq[: torus.n])
            lab = (M_SIDE, freq, phase, idx)
            blk = by_block.setdefault(kappa, {})
            blk[lab] = blk.get(lab, 0.0) + c

    mu_comps: dict[tuple, TrigScalar] = {}
    worst = 0.0
    for kappa, target in by_block.items():
        block = BlockComplex(tables, "REL", kappa)
        basis = block.basis(1)
        if not basis:
            worst = max(worst, max(abs(v) for v in target.values()))
            continue
        cols = [block.d_rat_vec(v) for v in basis]
        rows = sorted({lab for col in cols for lab in col} | set(target))
        row_of = {lab: i for i, lab in enumerate(rows)}
        D = np.zeros((len(rows), len(cols)))
        for j, col in enumerate(cols):
            for lab, q in col.items():
                D[row_of[lab], j] = float(q) * 2.0 * math.pi
        rhs = np.zeros(len(rows))
        for lab, v in target.items():
            rhs[row_of[lab]] = v
        sol, *_ = np.linalg.lstsq(D, rhs, rcond=None)
        worst = max(worst, float(np.max(np.abs(D @ sol - rhs))))
        for j, coeff in enumerate(sol):
            if coeff == 0.0:
                continue
            for lab, q in basis[j].items():
                _side, freq, phase, idx = lab
                s = mu_comps.setdefault(idx, TrigScalar.zero(torus.N))
                s._add_wave(freq, phase, float(q) * float(coeff))
    mu_comps = {i: s for i, s in mu_comps.items() if not s.is_zero()}
    mu = TrigForm(torus.N, 1, mu_comps)
    return mu, worst, harmonic
