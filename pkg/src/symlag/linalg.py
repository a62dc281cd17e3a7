"""Sparse exact linear algebra over the rationals.

Vectors are dicts mapping hashable row labels to nonzero Fractions; the
cohomology blocks produced by the trig model are very sparse (a handful of
entries per differential column), so incremental echelon with pivot
tracking is all the machinery the workbench needs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable

SparseVec = dict

Label = Hashable


def vec_add_scaled(target: SparseVec, source: SparseVec, factor: Fraction) -> None:
    if not factor:
        return
    for k, v in source.items():
        s = target.get(k, Fraction(0)) + v * factor
        if s:
            target[k] = s
        else:
            target.pop(k, None)


def vec_scale(v: SparseVec, factor: Fraction) -> SparseVec:
    if not factor:
        return {}
    return {k: x * factor for k, x in v.items()}


class ColumnSolver:
    """Incremental column echelon with optional combination tracking.

    Columns are added one at a time; each is reduced against the stored
    pivots.  A column that reduces to zero is linearly dependent, and when
    tracking is enabled its combination in terms of previously added
    column keys is recorded (this yields nullspace vectors).  ``solve``
    expresses an arbitrary right-hand side in terms of the added columns.
    """

    def __init__(self, track: bool = True):
        self.track = track
        self.pivots: dict[Label, tuple[SparseVec, SparseVec]] = {}
        self.rank = 0
        self.null_combos: list[SparseVec] = []
        self._keys: list = []

    def _reduce(self, col: SparseVec) -> tuple[SparseVec, SparseVec]:
        col = dict(col)
        combo: SparseVec = {}
        progress = True
        while progress:
            progress = False
            for row in list(col.keys()):
                if row not in col:
                    continue  # eliminated by an earlier pivot in this sweep
                piv = self.pivots.get(row)
                if piv is None:
                    continue
                pvec, pcombo = piv
                factor = col[row]  # pivot vectors are normalized to 1 at row
                vec_add_scaled(col, pvec, -factor)
                if self.track:
                    vec_add_scaled(combo, pcombo, factor)
                progress = True
        return col, combo

    def add_column(self, key, col: SparseVec) -> bool:
        """Returns True when the column is independent of those before it."""
        self._keys.append(key)
        red, combo = self._reduce(col)
        if not red:
            if self.track:
                null = {key: Fraction(1)}
                vec_add_scaled(null, combo, Fraction(-1))
                self.null_combos.append(null)
            return False
        row = min(red.keys(), key=_label_sort_key)
        inv = 1 / red[row]
        red = vec_scale(red, inv)
        if self.track:
            combo = vec_scale(combo, inv)
            combo[key] = combo.get(key, Fraction(0)) + inv
            # normalize: combo expresses THIS pivot vector in added columns
        self.pivots[row] = (red, combo if self.track else {})
        self.rank += 1
        return True

    def solve(self, rhs: SparseVec) -> SparseVec | None:
        """Coefficients over the added column keys, or None if inconsistent."""
        if not self.track:
            raise ValueError("solver built with track=False")
        red, combo = self._reduce(rhs)
        if red:
            return None
        return combo

    def in_span(self, rhs: SparseVec) -> bool:
        red, _ = self._reduce(rhs)
        return not red

    def residual(self, rhs: SparseVec) -> SparseVec:
        red, _ = self._reduce(rhs)
        return red


def rank_of_columns(cols: Iterable[SparseVec]) -> int:
    solver = ColumnSolver(track=False)
    for i, c in enumerate(cols):
        solver.add_column(i, c)
    return solver.rank


def nullspace_of_columns(items: Iterable[tuple[Label, SparseVec]]) -> list[SparseVec]:
    """Kernel vectors (as combos of the given keys) of the column map."""
    solver = ColumnSolver(track=True)
    for key, col in items:
        solver.add_column(key, col)
    return solver.null_combos


def _label_sort_key(label):
    return repr(label)


def invert_rational_matrix(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    """Dense exact inverse (Gauss-Jordan); raises on singular input."""
    n = len(rows)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def mat_mul_rational(A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return [
        [sum((A[i][t] * B[t][j] for t in range(k)), Fraction(0)) for j in range(m)]
        for i in range(n)
    ]
