from __future__ import annotations

from abc import abstractmethod
from dataclasses import dataclass
from typing import (
    TYPE_CHECKING,
    Any,
    Optional,
    Protocol,
    TypedDict,
    Union,
    runtime_checkable,
)

import numpy as np
import numpy.typing as npt

from .errors import InvalidSpec

if TYPE_CHECKING:
    from .ranges import PencilSection


# pylint: disable=too-few-public-methods

CMatrix = npt.NDArray[np.complex128]
RVector = npt.NDArray[np.float64]
CVector = npt.NDArray[np.complex128]
IndexVector = npt.NDArray[np.int64]


@dataclass(frozen=True)
class TruncationSpec:
    """Resolution of one truncation level

    Arguments:
        n: section size for coordinate families,
            number of interior grid points for differential families
        half_length: half-length L of the interval [-L, L],
            only used by differential families
    """

    n: int
    half_length: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InvalidSpec(f"n must be at least 2, got {self.n}")
        if self.half_length is not None and not self.half_length > 0:
            raise InvalidSpec(f"half_length must be positive, got {self.half_length}")

    @property
    def step(self) -> float:
        """Grid step h = 2L/(N+1) of a differential truncation"""
        if self.half_length is None:
            raise InvalidSpec("a grid step needs a half_length")
        return 2 * self.half_length / (self.n + 1)

    def __str__(self) -> str:
        if self.half_length is None:
            return f"N={self.n}"
        return f"L={self.half_length:g},N={self.n}"


@runtime_checkable
class PencilFamily(Protocol):
    """Interface of a recipe producing matched truncations (A_n, B_n)"""

    @property
    @abstractmethod
    def id(self) -> str:  # pragma: no cover
        """Identifier used in run artifacts and events"""
        ...

    @property
    @abstractmethod
    def kind(self) -> str:  # pragma: no cover
        """One of the family kinds, e.g. "diagonal" or "dirac1d" """
        ...

    @property
    @abstractmethod
    def components(self) -> int:  # pragma: no cover
        """Number of diagonal blocks of a section (1 for scalar families)"""
        ...

    @abstractmethod
    def section(self, spec: TruncationSpec) -> PencilSection:  # pragma: no cover
        """Should return the truncated pencil at `spec`

        Raises:
            InvalidSpec: when `spec` does not fit the family
        """
        ...

    @abstractmethod
    def nodes(self, spec: TruncationSpec) -> npt.NDArray[Any]:  # pragma: no cover
        """Should return the sample points of one component:
        the indices n for coordinate families, the grid x for differential ones"""
        ...

    @abstractmethod
    def window_spec(
        self, depth: int, size: int, step: Optional[float] = None
    ) -> TruncationSpec:  # pragma: no cover
        """Should return the smallest truncation containing the window at `depth`

        Raises:
            UnsupportedFamily: when the family has no coordinate structure
        """
        ...

    @abstractmethod
    def window_indices(
        self, spec: TruncationSpec, depth: int, size: int
    ) -> IndexVector:  # pragma: no cover
        """Should return the basis indices of the window at `depth` inside `spec`"""
        ...


@runtime_checkable
class Multiplier(Protocol):
    """Interface of a bounded multiplier applied from the left to both pencil members"""

    @property
    @abstractmethod
    def id(self) -> str:  # pragma: no cover
        """Identifier used in run artifacts"""
        ...

    @abstractmethod
    def matrix(
        self, family: PencilFamily, spec: TruncationSpec
    ) -> CMatrix:  # pragma: no cover
        """Should return the multiplier sampled on the basis of `family` at `spec`"""
        ...


ComplexJson = Union[float, int, list[float]]


class BoxDict(TypedDict):
    """Dict representation of a Box"""

    re_min: float
    re_max: float
    im_min: float
    im_max: float


class RasterDict(TypedDict):
    """Dict representation of a Raster, the mask run-length encoded

    rle_mask starts with a run of False cells, row-major from the bottom row
    """

    box: BoxDict
    nx: int
    ny: int
    rle_mask: list[int]


class SupportFnDict(TypedDict):
    """Dict representation of a SupportFn"""

    angles_count: int
    values: list[float]


class EssentialRangeDict(TypedDict, total=False):
    """Dict representation of an essential-range descriptor"""

    points: list[ComplexJson]
    polygon: list[ComplexJson]
    circle: dict[str, Any]


class EnclosureDict(TypedDict):
    """Dict representation of an EnclosureSpec"""

    kind: str
    hull: list[list[float]]
    params: dict[str, Any]


class LevelDict(TypedDict, total=False):
    """Dict representation of one level of a SpectralRun"""

    spec: dict[str, Any]
    eigenvalues: list[list[float]]
    fallback: bool
    error: Optional[str]


class ClusterDict(TypedDict):
    """Dict representation of a Cluster"""

    location: list[float]
    persistence: int
    drift: list[float]
    classification: str


class SpectralRunDict(TypedDict, total=False):
    """Dict representation of a SpectralRun"""

    family: str
    levels: list[LevelDict]
    clusters: list[ClusterDict]
    degenerate: bool


class MetricEntryType(TypedDict):
    """Dict representation of an events entry"""

    timestamp: str
    level: str
    experiment: str
    step: str
    event: str
    value: str
    message: str
