from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ..errors import InvalidSpec
from ..ranges import PencilSection
from ..types import CVector, IndexVector, TruncationSpec
from .stencil import Coefficient, sample


@dataclass(frozen=True)
class DiagonalFamily:
    """Pencil of diagonal operators diag(a_n) - λ diag(b_n) on l², n >= 1

    Arguments:
        a: vectorized coefficient n -> a_n
        b: vectorized coefficient n -> b_n
        name: identifier of the family
    """

    a: Coefficient
    b: Coefficient
    name: str = "diagonal"

    @property
    def id(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return "diagonal"

    @property
    def components(self) -> int:
        return 1

    def coefficients(self, indices: IndexVector) -> tuple[CVector, CVector]:
        """(a_n, b_n) for the 1-based `indices`"""
        return sample(self.a, indices), sample(self.b, indices)

    def nodes(self, spec: TruncationSpec) -> IndexVector:
        return np.arange(1, spec.n + 1, dtype=np.int64)

    def section(self, spec: TruncationSpec) -> PencilSection:
        """Compression to span{e_1, ..., e_N}"""
        a, b = self.coefficients(self.nodes(spec))
        return PencilSection(np.diag(a), np.diag(b))

    def window_spec(self, depth: int, size: int, step: Optional[float] = None) -> TruncationSpec:
        if depth < 0 or size < 1:
            raise InvalidSpec(f"window needs depth >= 0 and size >= 1, got {depth}, {size}")
        return TruncationSpec(n=max(depth + size, 2))

    def window_indices(self, spec: TruncationSpec, depth: int, size: int) -> IndexVector:
        """0-based positions of e_{depth+1}, ..., e_{depth+size}"""
        if depth + size > spec.n:
            raise InvalidSpec(f"window {depth}+{size} exceeds {spec}")
        return np.arange(depth, depth + size, dtype=np.int64)


@dataclass(frozen=True)
class BlockFamily:
    """Block-diagonal pencil diag(upper, lower) of two diagonal families

    A section of size N holds N/2 basis vectors of each block, upper block first.
    """

    upper: DiagonalFamily
    lower: DiagonalFamily
    name: str = "block2x2"

    @property
    def id(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return "block2x2"

    @property
    def components(self) -> int:
        return 2

    def _half(self, spec: TruncationSpec) -> TruncationSpec:
        if spec.n % 2:
            raise InvalidSpec(f"block sections need an even size, got {spec}")
        return TruncationSpec(n=max(spec.n // 2, 2))

    def nodes(self, spec: TruncationSpec) -> IndexVector:
        return np.arange(1, spec.n // 2 + 1, dtype=np.int64)

    def section(self, spec: TruncationSpec) -> PencilSection:
        half = self._half(spec)
        if 2 * half.n != spec.n:
            raise InvalidSpec(f"block sections need at least 4 rows, got {spec}")
        top = self.upper.section(half)
        bottom = self.lower.section(half)
        return PencilSection(
            scipy.linalg.block_diag(top.A, bottom.A),
            scipy.linalg.block_diag(top.B, bottom.B),
        )

    def window_spec(self, depth: int, size: int, step: Optional[float] = None) -> TruncationSpec:
        return TruncationSpec(n=2 * self.upper.window_spec(depth, size).n)

    def window_indices(self, spec: TruncationSpec, depth: int, size: int) -> IndexVector:
        half = spec.n // 2
        idx = self.upper.window_indices(TruncationSpec(n=half), depth, size)
        return np.concatenate((idx, half + idx))
