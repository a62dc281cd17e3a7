"""Cochain complexes over the trig model, their cohomology, and the cone.

Four complexes are computed per torus model:

* ``M``    -- forms on the ambient torus,
* ``L``    -- forms on the zero-section sub-torus,
* ``REL``  -- forms on M whose pullback to L vanishes,
* ``CONE`` -- pairs (a, b) with differential (da, a|_L - db).

Everything decomposes into finite blocks indexed by the x-frequency class
of the wave (the differential preserves the full frequency and the
restriction to L collapses the y-frequency, so both respect this
indexing).  The zero block carries the entire cohomology of a torus; the
nonzero blocks are exact, which the workbench verifies by explicit rank
computations rather than assuming.

Ranks are rational throughout: the differential of a wave carries exactly
one factor 2*pi, so d = 2*pi * (rational matrix) on every block, and for
the cone a unit rescaling of the second leg makes the mixed differential
rational as well.  Coordinate solves keep pi exact by slicing vectors by
pi-power and solving one rational system across slices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .forms import TrigForm
from .linalg import ColumnSolver, vec_add_scaled, vec_scale
from .rings import PiRat
from .torus import TorusModel
from .trig import COS, SIN, TrigScalar

M_SIDE = "M"
L_SIDE = "L"

KINDS = ("M", "L", "REL", "CONE")


class BudgetError(ValueError):
    """Frequency support of an input exceeds the block budget."""


# ---------------------------------------------------------------------------
# cone elements


@dataclass
class ConeElement:
    """A pair (a, b): a on M of degree k, b on L of degree k-1."""

    a: TrigForm
    b: TrigForm

    def __post_init__(self):
        if self.b.degree != self.a.degree - 1:
            raise ValueError(
                "cone element needs deg b = deg a - 1, got %d and %d"
                % (self.a.degree, self.b.degree)
            )

    @property
    def degree(self) -> int:
        return self.a.degree

    def __add__(self, other: "ConeElement") -> "ConeElement":
        return ConeElement(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "ConeElement") -> "ConeElement":
        return ConeElement(self.a - other.a, self.b - other.b)

    def scale(self, factor) -> "ConeElement":
        return ConeElement(self.a.scale(factor), self.b.scale(factor))

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def __eq__(self, other) -> bool:
        return isinstance(other, ConeElement) and self.a == other.a and self.b == other.b


def cone_differential(torus: TorusModel, e: ConeElement) -> ConeElement:
    """(a, b) -> (da, a|_L - db)."""
    return ConeElement(e.a.d(), torus.restrict_to_L(e.a) - e.b.d())


def is_cocycle(torus: TorusModel, e: ConeElement) -> tuple[bool, float]:
    """Exact cocycle test; the residual is the largest offending coefficient."""
    de = cone_differential(torus, e)
    residual = max(de.a.max_abs_coeff(), de.b.max_abs_coeff())
    return de.is_zero(), residual


def extend(torus: TorusModel, b: TrigForm) -> TrigForm:
    """Canonical extension to M: y-independent coefficients, no dy legs."""
    return torus.extend_to_M(b)


def normalize_coboundary(torus: TorusModel, e: ConeElement) -> TrigForm:
    """A form z with d_cone(z, 0) = d_cone(e): here z = a - d(extend b)."""
    return e.a - extend(torus, e.b).d()


# ---------------------------------------------------------------------------
# block label bookkeeping

Label = tuple  # (side, freq, phase, idx)


def _canonical_or_none(freq: tuple[int, ...], phase: int):
    lead = next((f for f in freq if f != 0), 0)
    if lead == 0:
        return None if phase == SIN else (freq, phase, 1)
    if lead < 0:
        return (tuple(-f for f in freq), phase, -1 if phase == SIN else 1)
    return (freq, phase, 1)


def form_to_vec(form: TrigForm, side: str) -> dict:
    """Sparse PiRat vector of a form over canonical wave labels."""
    out: dict = {}
    for idx, scalar in form.terms.items():
        for freq, phase, coeff in scalar.waves():
            if not isinstance(coeff, PiRat):
                raise TypeError("exact cohomology requires PiRat coefficients")
            label = (side, freq, phase, idx)
            prev = out.get(label)
            out[label] = coeff if prev is None else prev + coeff
    return {k: v for k, v in out.items() if v}


def pirat_vec_to_rational(vec: dict) -> dict:
    """Drop PiRat wrappers from a pi-free vector (raises on pi terms)."""
    out = {}
    for lab, coeff in vec.items():
        if isinstance(coeff, Fraction):
            out[lab] = coeff
            continue
        e, q = coeff.monomial()
        if e != 0:
            raise AssertionError("vector has a pi-dependent coefficient")
        out[lab] = q
    return out


def vec_to_form(vec: dict, dim: int, degree: int) -> TrigForm:
    comps: dict[tuple, TrigScalar] = {}
    for (side, freq, phase, idx), coeff in vec.items():
        s = comps.setdefault(idx, TrigScalar.zero(dim))
        c = coeff if isinstance(coeff, PiRat) else PiRat.of(coeff)
        s._add_wave(freq, phase, c)
    comps = {i: s for i, s in comps.items() if not s.is_zero()}
    return TrigForm(dim, degree, comps)


class BlockTables:
    """Label enumeration and differential/restriction columns per block."""

    def __init__(self, torus: TorusModel, budget: int):
        self.torus = torus
        self.budget = budget
        self._d_cache: dict[Label, dict] = {}
        self._r_cache: dict[Label, dict] = {}

    # -- enumeration ----------------------------------------------------

    def x_blocks(self):
        """All canonical x-frequency classes within the budget."""
        n, B = self.torus.n, self.budget
        out = []
        for kx in itertools.product(range(-B, B + 1), repeat=n):
            canon = _canonical_or_none(kx, COS)
            if canon and canon[0] == kx:
                out.append(kx)
        return out

    def m_labels(self, degree: int, kappa: tuple[int, ...]) -> list[Label]:
        n, N, B = self.torus.n, self.torus.N, self.budget
        if degree < 0 or degree > N:
            return []
        idxs = list(itertools.combinations(range(N), degree))
        labels = []
        kys = itertools.product(range(-B, B + 1), repeat=n)
        if any(kappa):
            freqs = [kappa + ky for ky in kys]
            phases = {f: (COS, SIN) for f in freqs}
        else:
            freqs = []
            phases = {}
            for ky in kys:
                canon = _canonical_or_none(ky, COS)
                if canon is None or canon[0] != ky:
                    continue
                f = kappa + ky
                freqs.append(f)
                phases[f] = (COS, SIN) if any(ky) else (COS,)
        for f in freqs:
            for ph in phases[f]:
                for idx in idxs:
                    labels.append((M_SIDE, f, ph, idx))
        return labels

    def l_labels(self, degree: int, kappa: tuple[int, ...]) -> list[Label]:
        n = self.torus.n
        if degree < 0 or degree > n:
            return []
        idxs = list(itertools.combinations(range(n), degree))
        phases = (COS, SIN) if any(kappa) else (COS,)
        return [(L_SIDE, kappa, ph, idx) for ph in phases for idx in idxs]

    # -- structure columns (rational; d has its 2*pi factored out) -------

    def _unit_form(self, label: Label) -> TrigForm:
        side, freq, phase, idx = label
        dim = self.torus.N if side == M_SIDE else self.torus.n
        return TrigForm(dim, len(idx), {idx: TrigScalar.wave(dim, freq, phase)})

    def d_rat(self, label: Label) -> dict:
        """Column of d/(2*pi) on the unit wave of the label (rational)."""
        cached = self._d_cache.get(label)
        if cached is not None:
            return cached
        side = label[0]
        vec = form_to_vec(self._unit_form(label).d(), side)
        out: dict = {}
        for lab, coeff in vec.items():
            e, q = coeff.monomial()
            if e != 1:
                raise AssertionError("differential column is not pi-homogeneous")
            out[lab] = q / 2
        self._d_cache[label] = out
        return out

    def restrict_rat(self, label: Label) -> dict:
        """Column of the restriction to L on a unit M wave (rational)."""
        cached = self._r_cache.get(label)
        if cached is not None:
            return cached
        form = self.torus.restrict_to_L(self._unit_form(label))
        out = {}
        for lab, coeff in form_to_vec(form, L_SIDE).items():
            e, q = coeff.monomial()
            if e != 0:
                raise AssertionError("restriction column is not rational")
            out[lab] = q
        self._r_cache[label] = out
        return out


# ---------------------------------------------------------------------------
# per-block basis/differential assembly for each complex kind


class BlockComplex:
    """Basis vectors and differential columns of one kind on one block."""

    def __init__(self, tables: BlockTables, kind: str, kappa: tuple[int, ...]):
        if kind not in KINDS:
            raise ValueError("unknown complex kind %r" % kind)
        self.tables = tables
        self.kind = kind
        self.kappa = kappa
        self._basis_cache: dict[int, list[dict]] = {}

    def basis(self, degree: int) -> list[dict]:
        """Basis of the degree-d block as sparse ambient vectors."""
        got = self._basis_cache.get(degree)
        if got is not None:
            return got
        t = self.tables
        if self.kind == "M":
            vecs = [{lab: Fraction(1)} for lab in t.m_labels(degree, self.kappa)]
        elif self.kind == "L":
            vecs = [{lab: Fraction(1)} for lab in t.l_labels(degree, self.kappa)]
        elif self.kind == "CONE":
            vecs = [{lab: Fraction(1)} for lab in t.m_labels(degree, self.kappa)]
            vecs += [{lab: Fraction(1)} for lab in t.l_labels(degree - 1, self.kappa)]
        else:  # REL: kernel of the restriction within the block
            solver = ColumnSolver(track=True)
            labels = t.m_labels(degree, self.kappa)
            for lab in labels:
                solver.add_column(lab, t.restrict_rat(lab))
            vecs = solver.null_combos
        self._basis_cache[degree] = vecs
        return vecs

    def d_rat_vec(self, vec: dict) -> dict:
        """Rationalized differential of an ambient vector.

        For M/L/REL this is d/(2*pi).  For the cone it is the differential
        in the pi-rescaled second-leg basis, [[A, 0], [R/2, -D_L]], which
        is the rational matrix whose ranks give the cone cohomology.
        """
        t = self.tables
        out: dict = {}
        for lab, q in vec.items():
            side = lab[0]
            if self.kind == "CONE":
                if side == M_SIDE:
                    vec_add_scaled(out, t.d_rat(lab), q)
                    vec_add_scaled(out, t.restrict_rat(lab), q / 2)
                else:
                    vec_add_scaled(out, t.d_rat(lab), -q)
            else:
                vec_add_scaled(out, t.d_rat(lab), q)
        return out

    def d_true_slices(self, vec: dict) -> tuple[dict, dict]:
        """True differential split as (pi^0 part, coefficient of pi^1)."""
        t = self.tables
        c0: dict = {}
        c1: dict = {}
        for lab, q in vec.items():
            side = lab[0]
            if self.kind == "CONE" and side == M_SIDE:
                vec_add_scaled(c1, t.d_rat(lab), 2 * q)
                vec_add_scaled(c0, t.restrict_rat(lab), q)
            elif self.kind == "CONE":
                vec_add_scaled(c1, t.d_rat(lab), -2 * q)
            else:
                vec_add_scaled(c1, t.d_rat(lab), 2 * q)
        return c0, c1

    def dims_and_ranks(self, degree: int) -> tuple[int, int, int]:
        """(dim of degree block, rank of d at degree, rank of d below)."""
        basis = self.basis(degree)
        below = self.basis(degree - 1)
        solver = ColumnSolver(track=False)
        for i, v in enumerate(basis):
            solver.add_column(i, self.d_rat_vec(v))
        rank_here = solver.rank
        solver2 = ColumnSolver(track=False)
        for i, v in enumerate(below):
            solver2.add_column(i, self.d_rat_vec(v))
        return len(basis), rank_here, solver2.rank

    def cohomology_dim(self, degree: int) -> int:
        dim, rank_here, rank_below = self.dims_and_ranks(degree)
        return dim - rank_here - rank_below


# ---------------------------------------------------------------------------
# pi-power sliced solve against representatives and coboundaries


def _slices_of_pirat_vec(vec: dict) -> dict[int, dict]:
    out: dict[int, dict] = {}
    for lab, coeff in vec.items():
        for e, q in coeff.slices().items():
            out.setdefault(e, {})[lab] = q
    return out


def solve_in_block(
    rep_cols: list[dict],
    d_sources: list[tuple[dict, dict]],
    target: dict,
) -> tuple[list[PiRat], list[PiRat]] | None:
    """Solve target = sum_i c_i rep_i + d(sum_j x_j src_j) with pi kept exact.

    rep_cols are rational ambient columns; d_sources are (C0, C1) pairs so
    the differential of source j is C0 + pi*C1.  Returns (c, x) as PiRat
    coefficient lists or None when the system is inconsistent.
    """
    slices = _slices_of_pirat_vec(target)
    if not slices:
        return ([PiRat.zero()] * len(rep_cols), [PiRat.zero()] * len(d_sources))
    emin, emax = min(slices), max(slices)
    rep_range = range(emin, emax + 1)
    src_range = range(emin - 2, emax + 2)

    solver = ColumnSolver(track=True)
    for e in rep_range:
        for i, col in enumerate(rep_cols):
            solver.add_column(("rep", i, e), {(e, lab): q for lab, q in col.items()})
    for e in src_range:
        for j, (c0, c1) in enumerate(d_sources):
            col: dict = {}
            for lab, q in c0.items():
                col[(e, lab)] = col.get((e, lab), Fraction(0)) + q
            for lab, q in c1.items():
                col[(e + 1, lab)] = col.get((e + 1, lab), Fraction(0)) + q
            col = {k: v for k, v in col.items() if v}
            if col:
                solver.add_column(("src", j, e), col)

    rhs = {}
    for e, sl in slices.items():
        for lab, q in sl.items():
            rhs[(e, lab)] = q
    combo = solver.solve(rhs)
    if combo is None:
        return None
    c = [PiRat.zero()] * len(rep_cols)
    x = [PiRat.zero()] * len(d_sources)
    for key, q in combo.items():
        tag, i, e = key
        if tag == "rep":
            c[i] = c[i] + PiRat.of(q, e)
        else:
            x[i] = x[i] + PiRat.of(q, e)
    return c, x


# ---------------------------------------------------------------------------
# cohomology spaces with representatives


@dataclass
class CohomologySpace:
    kind: str
    torus: TorusModel
    budget: int
    degree: int
    dim: int
    reps: list  # TrigForm for M/L/REL, ConeElement for CONE
    _block: BlockComplex = field(repr=False, default=None)
    _rep_vecs: list = field(repr=False, default=None)

    def rep_columns(self) -> list[dict]:
        return self._rep_vecs

    def coordinates(self, element) -> list[PiRat]:
        """Exact class coordinates of a cocycle in this space's basis."""
        if self.kind == "CONE":
            vec = form_to_vec(element.a, M_SIDE)
            vec.update(form_to_vec(element.b, L_SIDE))
        else:
            side = L_SIDE if self.kind == "L" else M_SIDE
            vec = form_to_vec(element, side)
        tables = self._block.tables
        budget = self.budget
        coords = [PiRat.zero()] * self.dim
        for kappa, sub in _split_by_block(vec, self.torus, budget).items():
            block = BlockComplex(tables, self.kind, kappa)
            sources = [block.d_true_slices(v) for v in block.basis(self.degree - 1)]
            reps = self._rep_vecs if kappa == self._block.kappa else []
            got = solve_in_block(reps, sources, sub)
            if got is None:
                raise ValueError(
                    "element is not a cocycle of the budget-%d complex "
                    "(block %s unsolvable)" % (budget, (kappa,))
                )
            c, _ = got
            for i, ci in enumerate(c):
                coords[i] = coords[i] + ci
        return coords


def _split_by_block(vec: dict, torus: TorusModel, budget: int) -> dict:
    out: dict[tuple, dict] = {}
    for lab, coeff in vec.items():
        side, freq = lab[0], lab[1]
        if max((abs(f) for f in freq), default=0) > budget:
            raise BudgetError(
                "frequency %s exceeds the block budget %d" % (list(freq), budget)
            )
        kappa = tuple(freq[: torus.n]) if side == M_SIDE else tuple(freq)
        out.setdefault(kappa, {})[lab] = coeff
    return out


def cohomology(
    torus: TorusModel, kind: str, degree: int, budget: int = 4
) -> CohomologySpace:
    """Dimension and exact representatives (from the zero block)."""
    tables = BlockTables(torus, budget)
    zero = (0,) * torus.n
    block = BlockComplex(tables, kind, zero)

    dim_here = block.cohomology_dim(degree)

    if kind == "CONE":
        rel = cohomology(torus, "REL", degree, budget)
        rep_vecs = [pirat_vec_to_rational(form_to_vec(r, M_SIDE)) for r in rel.reps]
        reps = [
            ConeElement(r, TrigForm.zero(torus.n, degree - 1)) for r in rel.reps
        ]
        # verify independently that these span the cone cohomology
        solver = ColumnSolver(track=False)
        for i, v in enumerate(block.basis(degree - 1)):
            solver.add_column(("im", i), block.d_rat_vec(v))
        indep = 0
        for i, v in enumerate(rep_vecs):
            if solver.add_column(("rep", i), v):
                indep += 1
        if indep != dim_here:
            raise AssertionError(
                "relative representatives do not span the cone cohomology "
                "(%d independent, dim %d)" % (indep, dim_here)
            )
    else:
        im_solver = ColumnSolver(track=False)
        for i, v in enumerate(block.basis(degree - 1)):
            im_solver.add_column(i, block.d_rat_vec(v))
        ker_solver = ColumnSolver(track=True)
        basis = block.basis(degree)
        for i, v in enumerate(basis):
            ker_solver.add_column(i, block.d_rat_vec(v))
        rep_vecs = []
        quotient = im_solver
        for combo in ker_solver.null_combos:
            vec: dict = {}
            for key, q in combo.items():
                vec_add_scaled(vec, basis[key], q)
            red = quotient.residual(vec)
            if red:
                lead = min(red.keys(), key=repr)
                red = vec_scale(red, 1 / red[lead])
                rep_vecs.append(red)
                quotient.add_column(("rep", len(rep_vecs)), red)
        if len(rep_vecs) != dim_here:
            raise AssertionError(
                "representative extraction disagrees with rank computation"
            )
        dim_form = torus.N if kind != "L" else torus.n
        reps = [vec_to_form(v, dim_form, degree) for v in rep_vecs]

    return CohomologySpace(
        kind=kind,
        torus=torus,
        budget=budget,
        degree=degree,
        dim=dim_here,
        reps=reps,
        _block=block,
        _rep_vecs=rep_vecs,
    )


def verify_vanishing_blocks(
    torus: TorusModel, kind: str, budget: int, degrees=None
) -> int:
    """Check H = 0 on every nonzero block in the budget; returns #blocks."""
    tables = BlockTables(torus, budget)
    zero = (0,) * torus.n
    top = torus.N if kind != "L" else torus.n
    if kind == "CONE":
        top += 1
    if degrees is None:
        degrees = range(top + 1)
    count = 0
    for kappa in tables.x_blocks():
        if kappa == zero:
            continue
        block = BlockComplex(tables, kind, kappa)
        for p in degrees:
            h = block.cohomology_dim(p)
            if h != 0:
                raise AssertionError(
                    "nonzero block %s has H^%d of dim %d in %s"
                    % ((kappa,), p, h, kind)
                )
        count += 1
    return count


# ---------------------------------------------------------------------------
# named operations on top of the spaces


def class_coordinates(
    space: CohomologySpace, form: TrigForm
) -> list[PiRat]:
    """Coordinates of a closed relative form in the stored REL basis."""
    if space.kind != "REL":
        raise ValueError("class_coordinates expects the relative space")
    if not form.d().is_zero():
        raise ValueError("not closed: d(form) != 0")
    if not space.torus.is_relative(form):
        raise ValueError("not relative: the pullback to L does not vanish")
    return space.coordinates(form)


def iso_I(
    cone_space: CohomologySpace, form: TrigForm
) -> list[PiRat]:
    """Class of (form, 0) in the cone basis; form must be closed relative."""
    torus = cone_space.torus
    if not form.d().is_zero():
        raise ValueError("representative is not closed")
    if not torus.is_relative(form):
        raise ValueError("representative is not relative")
    e = ConeElement(form, TrigForm.zero(torus.n, form.degree - 1))
    return cone_space.coordinates(e)


def iso_J(
    rel_space: CohomologySpace, e: ConeElement, extension: TrigForm | None = None
) -> list[PiRat]:
    """Class of a - d(extension of b) in the relative basis."""
    torus = rel_space.torus
    ok, _res = is_cocycle(torus, e)
    if not ok:
        raise ValueError("cone element is not a cocycle")
    ext = torus.extend_to_M(e.b) if extension is None else extension
    if torus.restrict_to_L(ext) != e.b:
        raise ValueError("extension does not restrict to the second leg")
    return rel_space.coordinates(e.a - ext.d())


def les_rank_identity(
    torus: TorusModel, degree: int, budget: int = 4
) -> dict:
    """Independent long-exact-sequence oracle at one degree.

    Returns the three ingredient dimensions and the predicted relative
    dimension  dim ker(H^k(M) -> H^k(L)) + dim coker(H^(k-1) -> H^(k-1)).
    """
    hM = cohomology(torus, "M", degree, budget)
    hL = cohomology(torus, "L", degree, budget)
    hM_below = cohomology(torus, "M", degree - 1, budget)
    hL_below = cohomology(torus, "L", degree - 1, budget)

    def restriction_rank(src: CohomologySpace, dst: CohomologySpace) -> int:
        solver = ColumnSolver(track=False)
        for i, rep in enumerate(src.reps):
            coords = dst.coordinates(torus.restrict_to_L(rep))
            col = {}
            for j, c in enumerate(coords):
                e, q = c.monomial()
                if q:
                    if e != 0:
                        raise AssertionError("restriction map is not rational")
                    col[j] = q
            solver.add_column(i, col)
        return solver.rank

    r_here = restriction_rank(hM, hL)
    r_below = restriction_rank(hM_below, hL_below)
    predicted = (hM.dim - r_here) + (hL_below.dim - r_below)
    return {
        "dim_M": hM.dim,
        "dim_L": hL.dim,
        "rank_here": r_here,
        "rank_below": r_below,
        "predicted_rel_dim": predicted,
    }
