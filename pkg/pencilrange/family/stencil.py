"""Uniform-grid finite differences on [-L, L] with Dirichlet rows eliminated"""
from __future__ import annotations

from typing import Any, Callable, Union

import numpy as np
import numpy.typing as npt

from ..errors import InvalidSpec
from ..types import CMatrix, CVector, IndexVector, RVector, TruncationSpec

Coefficient = Callable[[npt.NDArray[Any]], Any]
DEFAULT_STEP = 1 / 40


def grid(spec: TruncationSpec) -> RVector:
    """Interior nodes x_i = -L + (i+1)h, i = 0..N-1"""
    if spec.half_length is None:
        raise InvalidSpec(f"{spec} has no half_length")
    return -spec.half_length + (np.arange(spec.n) + 1) * spec.step


def laplacian(n: int, h: float) -> CMatrix:
    """-d²/dx² as (1/h²) tridiag(-1, 2, -1)"""
    off = -np.ones(n - 1)
    return ((np.diag(2 * np.ones(n)) + np.diag(off, 1) + np.diag(off, -1)) / h**2).astype(
        np.complex128
    )


def gradient(n: int, h: float) -> CMatrix:
    """d/dx as (1/2h) tridiag(-1, 0, 1)"""
    off = np.ones(n - 1)
    return ((np.diag(off, 1) - np.diag(off, -1)) / (2 * h)).astype(np.complex128)


def sample(coefficient: Union[Coefficient, complex, float], nodes: npt.NDArray[Any]) -> CVector:
    """Evaluate a vectorized coefficient (or a constant) on `nodes`"""
    values = coefficient(nodes) if callable(coefficient) else coefficient
    return np.array(np.broadcast_to(np.asarray(values, dtype=np.complex128), nodes.shape))


def window_grid_spec(depth: int, size: int, step: float = DEFAULT_STEP) -> TruncationSpec:
    """Odd-sized grid at step `step` just wide enough for strips at `depth` nodes from the centre"""
    if depth < 0 or size < 1:
        raise InvalidSpec(f"window needs depth >= 0 and size >= 1, got {depth}, {size}")
    n = 2 * (depth + size) + 1
    return TruncationSpec(n=n, half_length=(n + 1) * step / 2)


def strip_indices(n: int, depth: int, size: int) -> IndexVector:
    """Nodes i with depth <= |i - centre| < depth + size"""
    centre = (n - 1) // 2
    if centre - depth - size + 1 < 0:
        raise InvalidSpec(f"strips at depth {depth} of size {size} leave a {n}-grid")
    left = np.arange(centre - depth - size + 1, centre - depth + 1)
    right = np.arange(centre + depth, centre + depth + size)
    return np.unique(np.concatenate((left, right))).astype(np.int64)
