from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np
import numpy.typing as npt

from ..errors import InvalidSpec
from ..ranges import PencilSection
from ..types import CMatrix, IndexVector, Multiplier, PencilFamily, TruncationSpec
from .stencil import Coefficient, sample

CoefficientLike = Union[Coefficient, complex, float]


@dataclass(frozen=True)
class FunctionMultiplier:
    """Multiplication by a bounded function of the family's nodes, on every component"""

    function: CoefficientLike
    name: str = "function"

    @property
    def id(self) -> str:
        return self.name

    def matrix(self, family: PencilFamily, spec: TruncationSpec) -> CMatrix:
        values = sample(self.function, family.nodes(spec))
        return np.diag(np.tile(values, family.components))


@dataclass(frozen=True)
class BlockMultiplier:
    """diag(upper, lower) on a two-component family"""

    upper: CoefficientLike
    lower: CoefficientLike
    name: str = "block"

    @property
    def id(self) -> str:
        return self.name

    def matrix(self, family: PencilFamily, spec: TruncationSpec) -> CMatrix:
        if family.components != 2:
            raise InvalidSpec(f"{self.name} needs a two-component family, got {family.id}")
        nodes = family.nodes(spec)
        return np.diag(np.concatenate((sample(self.upper, nodes), sample(self.lower, nodes))))


@dataclass(frozen=True, eq=False)
class MatrixMultiplier:
    """A constant matrix, only valid at the section size it was built for"""

    values: npt.NDArray[Any]
    name: str = "matrix"

    @property
    def id(self) -> str:
        return self.name

    def matrix(self, family: PencilFamily, spec: TruncationSpec) -> CMatrix:
        size = family.section(spec).n
        if self.values.shape != (size, size):
            raise InvalidSpec(
                f"{self.name} has shape {self.values.shape}, the section has size {size}"
            )
        return np.asarray(self.values, dtype=np.complex128)


@dataclass(frozen=True)
class MultipliedFamily:
    """The pencil (M A, M B) for a bounded multiplier M, applied at every resolution

    Multiplication by a function commutes with domain truncation, so a section
    is the multiplier sample times the base section.
    """

    base: PencilFamily
    multiplier: Multiplier

    @property
    def id(self) -> str:
        return f"{self.multiplier.id}*{self.base.id}"

    @property
    def kind(self) -> str:
        return "multiplied"

    @property
    def components(self) -> int:
        return self.base.components

    def nodes(self, spec: TruncationSpec) -> npt.NDArray[Any]:
        return self.base.nodes(spec)

    def section(self, spec: TruncationSpec) -> PencilSection:
        return self.base.section(spec).multiplied(self.multiplier.matrix(self.base, spec))

    def window_spec(self, depth: int, size: int, step: Optional[float] = None) -> TruncationSpec:
        return self.base.window_spec(depth, size, step)

    def window_indices(self, spec: TruncationSpec, depth: int, size: int) -> IndexVector:
        return self.base.window_indices(spec, depth, size)
