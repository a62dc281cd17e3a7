"""Uniform verification grids on tori."""

from __future__ import annotations

import numpy as np


def torus_grid(dim: int, per_axis: int) -> np.ndarray:
    """Uniform (per_axis**dim, dim) grid on [0,1)^dim, offset by a half
    cell so symmetry points like y = 0 do not mask sign errors."""
    axes = [(np.arange(per_axis) + 0.5) / per_axis for _ in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def l_grid(n: int, per_axis: int) -> np.ndarray:
    """Grid on the zero section {y = 0}: (per_axis**n, 2n) points."""
    base = torus_grid(n, per_axis)
    out = np.zeros((base.shape[0], 2 * n))
    out[:, :n] = base
    return out


def default_per_axis(dim: int) -> int:
    """32 per axis on T^2, 12 on T^4 (grid defaults of the workbench)."""
    return 32 if dim <= 2 else 12
