"""Finite-difference families on [-L, L] with Dirichlet conditions

Every family here samples its coefficients on the interior grid of a
TruncationSpec(n=N, half_length=L). Block families stack their two
components, so a section has size 2N.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..errors import InvalidSpec
from ..ranges import PencilSection
from ..region import EssentialRange
from ..types import CMatrix, IndexVector, RVector, TruncationSpec
from .stencil import (
    DEFAULT_STEP,
    Coefficient,
    gradient,
    grid,
    laplacian,
    sample,
    strip_indices,
    window_grid_spec,
)

CoefficientLike = Union[Coefficient, complex, float]


class GridMixin:
    """Grid nodes and strip windows shared by the finite-difference families"""

    components: int

    def nodes(self, spec: TruncationSpec) -> RVector:
        """Interior grid of `spec`"""
        return grid(spec)

    def window_spec(self, depth: int, size: int, step: Optional[float] = None) -> TruncationSpec:
        """Grid holding two strips of `size` nodes, `depth` nodes away from x = 0"""
        return window_grid_spec(depth, size, DEFAULT_STEP if step is None else step)

    def window_indices(self, spec: TruncationSpec, depth: int, size: int) -> IndexVector:
        """Strip nodes of every component"""
        idx = strip_indices(spec.n, depth, size)
        return np.concatenate([k * spec.n + idx for k in range(self.components)])

    @staticmethod
    def _grid(spec: TruncationSpec) -> tuple[RVector, float]:
        if spec.half_length is None:
            raise InvalidSpec(f"finite-difference families need a half_length, got {spec}")
        return grid(spec), spec.step


@dataclass(frozen=True)
class ScalarFamily(GridMixin):
    """A = -d²/dx² + V, B = multiplication by J

    Arguments:
        potential: V
        weight: J, the identity by default
        family_kind: schrodinger1d or sturm_liouville_indefinite
        name: identifier of the family
    """

    potential: CoefficientLike
    weight: CoefficientLike = 1.0
    family_kind: str = "schrodinger1d"
    name: str = "schrodinger1d"
    components: int = field(default=1, init=False)

    @property
    def id(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return self.family_kind

    def section(self, spec: TruncationSpec) -> PencilSection:
        x, h = self._grid(spec)
        A = laplacian(spec.n, h) + np.diag(sample(self.potential, x))
        return PencilSection(A, np.diag(sample(self.weight, x)))


@dataclass(frozen=True)
class DiracFamily(GridMixin):
    """1D Dirac operator [[1 + V, -i d/dx], [-i d/dx, -1 + V]], B = I"""

    potential: CoefficientLike = 0.0
    essran: Optional[EssentialRange] = None
    name: str = "dirac1d"
    components: int = field(default=2, init=False)

    @property
    def id(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return "dirac1d"

    def section(self, spec: TruncationSpec) -> PencilSection:
        x, h = self._grid(spec)
        V = sample(self.potential, x)
        G = -1j * gradient(spec.n, h)
        A = np.block([[np.diag(1 + V), G], [G, np.diag(-1 + V)]])
        return PencilSection(A, np.eye(2 * spec.n))


@dataclass(frozen=True)
class StokesFamily(GridMixin):
    """Stokes-type block operator [[-d²/dx², γ d/dx], [δ d/dx, U]], B = I"""

    potential: CoefficientLike
    gamma: complex = 1.0
    delta: complex = 1.0
    essran: Optional[EssentialRange] = None
    name: str = "stokes1d"
    components: int = field(default=2, init=False)

    @property
    def id(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return "stokes1d"

    def blocks(self, spec: TruncationSpec) -> tuple[CMatrix, CMatrix, CMatrix, CMatrix]:
        """The sections of the four blocks"""
        x, h = self._grid(spec)
        G = gradient(spec.n, h)
        return (
            laplacian(spec.n, h),
            self.gamma * G,
            self.delta * G,
            np.diag(sample(self.potential, x)),
        )

    def section(self, spec: TruncationSpec) -> PencilSection:
        A, B, C, D = self.blocks(spec)
        return PencilSection(np.block([[A, B], [C, D]]), np.eye(2 * spec.n))


@dataclass(frozen=True)
class HainLustFamily(GridMixin):
    """Hain-Lüst-type block operator [[-d²/dx² + Q, W], [V, U]], B = I

    Arguments:
        bound: b with |V|² <= b|Q| on the grid the family was checked on
    """

    Q: CoefficientLike
    W: CoefficientLike
    V: CoefficientLike
    U: CoefficientLike
    essran: Optional[EssentialRange] = None
    bound: float = 1.0
    name: str = "hain_lust"
    components: int = field(default=2, init=False)

    @property
    def id(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return "hain_lust"

    def section(self, spec: TruncationSpec) -> PencilSection:
        x, h = self._grid(spec)
        A = np.block(
            [
                [laplacian(spec.n, h) + np.diag(sample(self.Q, x)), np.diag(sample(self.W, x))],
                [np.diag(sample(self.V, x)), np.diag(sample(self.U, x))],
            ]
        )
        return PencilSection(A, np.eye(2 * spec.n))
