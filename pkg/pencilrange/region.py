"""Subsets of the complex plane: convex sets by support functions, general sets by rasters"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError, cKDTree
from typeguard import check_type

from .errors import EmptyRegion, GridMismatch
from .types import (
    BoxDict,
    ComplexJson,
    CVector,
    EssentialRangeDict,
    RasterDict,
    RVector,
    SupportFnDict,
)

DEFAULT_ANGLES = 720
DEFAULT_RESOLUTION = (800, 800)
CIRCLE_VERTICES = 256

BoolGrid = npt.NDArray[np.bool_]


def complex_from_json(value: ComplexJson) -> complex:
    """[re, im] pairs and plain numbers to complex"""
    if isinstance(value, list):
        if len(value) != 2:
            raise ValueError(f"complex values are [re, im] pairs, got {value}")
        return complex(value[0], value[1])
    return complex(value)


def complex_to_json(value: complex) -> list[float]:
    """complex to an [re, im] pair"""
    return [float(np.real(value)), float(np.imag(value))]


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle of the complex plane"""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self) -> None:
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate box {self}")

    @classmethod
    def from_list(cls, values: Sequence[float]) -> Box:
        """Build from [re_min, re_max, im_min, im_max]"""
        if len(values) != 4:
            raise ValueError(f"a box needs 4 values, got {len(values)}")
        return cls(*(float(value) for value in values))

    @classmethod
    def around(cls, points: Iterable[complex], margin: float = 1.0) -> Box:
        """Smallest box containing `points`, widened by `margin` on every side"""
        values = np.asarray(list(points), dtype=np.complex128)
        return cls(
            float(values.real.min()) - margin,
            float(values.real.max()) + margin,
            float(values.imag.min()) - margin,
            float(values.imag.max()) + margin,
        )

    def to_list(self) -> list[float]:
        """Return [re_min, re_max, im_min, im_max]"""
        return [self.re_min, self.re_max, self.im_min, self.im_max]

    def to_dict(self) -> BoxDict:
        """Dict representation of the box"""
        return BoxDict(
            re_min=self.re_min,
            re_max=self.re_max,
            im_min=self.im_min,
            im_max=self.im_max,
        )

    @property
    def center(self) -> complex:
        """Center of the box"""
        return complex((self.re_min + self.re_max) / 2, (self.im_min + self.im_max) / 2)


@dataclass
class SupportFn:
    """Support function h(θ) = max Re(e^{-iθ}z) of a compact convex set on a uniform angle grid"""

    values: RVector

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 3:
            raise ValueError("a support function needs at least 3 angles")

    @property
    def angles(self) -> RVector:
        """The uniform angle grid over [0, 2π)"""
        return 2 * np.pi * np.arange(self.values.size) / self.values.size

    @property
    def scale(self) -> float:
        """Largest absolute support value"""
        return float(np.max(np.abs(self.values)))

    @classmethod
    def from_points(cls, points: Iterable[complex], angles: int = DEFAULT_ANGLES) -> SupportFn:
        """Support function of the convex hull of `points`"""
        values = np.asarray(list(points), dtype=np.complex128)
        grid = 2 * np.pi * np.arange(angles) / angles
        return cls(np.max(np.real(np.exp(-1j * grid)[:, None] * values[None, :]), axis=1))

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        """See :func:`support_contains`"""
        return support_contains(self, z, slack)

    def vertices(self) -> CVector:
        """Vertices of the polygon cut out by the supporting half-planes"""
        theta = self.angles
        nxt = np.roll(theta, -1)
        h, h_next = self.values, np.roll(self.values, -1)
        # intersect x cos t + y sin t = h for consecutive angles
        det = np.sin(nxt - theta)
        x = (h * np.sin(nxt) - h_next * np.sin(theta)) / det
        y = (h_next * np.cos(theta) - h * np.cos(nxt)) / det
        return (x + 1j * y).astype(np.complex128)

    def resample(self, angles: int) -> SupportFn:
        """Support function of the induced polygon on another angle grid"""
        return SupportFn.from_points(self.vertices(), angles)

    def distance(self, z: complex) -> float:
        """Euclidean distance from `z` to the induced polygon"""
        return polygon_distance(np.asarray([z]), convex_hull(self.vertices()))[0]

    def rasterize(
        self, box: Box, nx: int, ny: int, slack: Optional[float] = None
    ) -> Raster:
        """Cell-center raster, `slack` defaults to one cell diagonal"""
        raster = Raster.empty(box, nx, ny)
        slack = raster.diagonal if slack is None else slack
        centers = raster.centers
        rotated = np.real(
            np.exp(-1j * self.angles)[:, None, None] * centers[None, :, :]
        )
        mask = np.all(rotated <= self.values[:, None, None] + slack, axis=0)
        return Raster(box, nx, ny, mask)

    def to_dict(self) -> SupportFnDict:
        """Dict representation of the support function"""
        return SupportFnDict(
            angles_count=int(self.values.size), values=[float(v) for v in self.values]
        )

    @classmethod
    def from_dict(cls, data: SupportFnDict) -> SupportFn:
        """Build a support function from its dict representation"""
        check_type("support", data, SupportFnDict)
        if len(data["values"]) != data["angles_count"]:
            raise ValueError("angles_count does not match the number of values")
        return cls(np.asarray(data["values"], dtype=float))


def support_contains(s: SupportFn, z: complex, slack: float = 0.0) -> bool:
    """True iff Re(e^{-iθ}z) <= h(θ) + slack on every grid angle"""
    if slack < 0:
        raise ValueError("slack must be non-negative")
    return bool(np.all(np.real(np.exp(-1j * s.angles) * z) <= s.values + slack))


@dataclass
class Raster:
    """Cell-center membership mask over a box

    mask[j, i] is the membership of the center of cell column i, row j,
    rows counted upward from im_min
    """

    box: Box
    nx: int
    ny: int
    mask: BoolGrid = field(repr=False)

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"resolution must be positive, got {self.nx}x{self.ny}")
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (self.ny, self.nx):
            raise ValueError(
                f"mask shape {self.mask.shape} does not match resolution "
                f"{self.nx}x{self.ny}"
            )

    @classmethod
    def empty(cls, box: Box, nx: int, ny: int) -> Raster:
        """Raster without members"""
        return cls(box, nx, ny, np.zeros((ny, nx), dtype=bool))

    @classmethod
    def from_predicate(
        cls,
        box: Box,
        nx: int,
        ny: int,
        predicate: Callable[[npt.NDArray[np.complex128]], BoolGrid],
    ) -> Raster:
        """Raster of a vectorized predicate evaluated on the cell centers"""
        raster = cls.empty(box, nx, ny)
        raster.mask = np.asarray(predicate(raster.centers), dtype=bool)
        return raster

    @property
    def dx(self) -> float:
        """Cell width"""
        return (self.box.re_max - self.box.re_min) / self.nx

    @property
    def dy(self) -> float:
        """Cell height"""
        return (self.box.im_max - self.box.im_min) / self.ny

    @property
    def diagonal(self) -> float:
        """Length of a cell diagonal"""
        return math.hypot(self.dx, self.dy)

    @property
    def re(self) -> RVector:
        """Real parts of the cell centers per column"""
        return self.box.re_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def im(self) -> RVector:
        """Imaginary parts of the cell centers per row"""
        return self.box.im_min + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def centers(self) -> npt.NDArray[np.complex128]:
        """All cell centers, shaped like the mask"""
        return (self.re[None, :] + 1j * self.im[:, None]).astype(np.complex128)

    @property
    def count(self) -> int:
        """Number of member cells"""
        return int(np.count_nonzero(self.mask))

    def is_empty(self) -> bool:
        """True if no cell is a member"""
        return not self.mask.any()

    def points(self) -> CVector:
        """Centers of the member cells"""
        return self.centers[self.mask]

    def same_grid(self, other: Raster) -> bool:
        """True if both rasters share box and resolution"""
        return self.box == other.box and (self.nx, self.ny) == (other.nx, other.ny)

    def cell_of(self, z: complex) -> Optional[tuple[int, int]]:
        """(row, column) of the cell containing `z`, None outside the box"""
        col = math.floor((z.real - self.box.re_min) / self.dx)
        row = math.floor((z.imag - self.box.im_min) / self.dy)
        if 0 <= col < self.nx and 0 <= row < self.ny:
            return row, col
        return None

    def contains(self, z: complex, dilation: int = 0) -> bool:
        """True if the cell of `z`, or one within `dilation` cells, is a member"""
        cell = self.cell_of(complex(z))
        if cell is None:
            return False
        row, col = cell
        return bool(
            self.mask[
                max(row - dilation, 0) : row + dilation + 1,
                max(col - dilation, 0) : col + dilation + 1,
            ].any()
        )

    def dilate(self, cells: int = 1) -> Raster:
        """Raster grown by `cells` in every direction (8-neighbourhood)"""
        if cells <= 0:
            return Raster(self.box, self.nx, self.ny, self.mask.copy())
        structure = np.ones((3, 3), dtype=bool)
        mask = ndimage.binary_dilation(self.mask, structure=structure, iterations=cells)
        return Raster(self.box, self.nx, self.ny, mask)

    def boundary(self) -> Raster:
        """Member cells with a non-member 4-neighbour or touching the box edge"""
        eroded = ndimage.binary_erosion(self.mask, border_value=0)
        return Raster(self.box, self.nx, self.ny, self.mask & ~eroded)

    def complement(self) -> Raster:
        """Cells that are not members"""
        return Raster(self.box, self.nx, self.ny, ~self.mask)

    def distance_to(self, points: Iterable[complex]) -> RVector:
        """Distance of every point to the nearest member cell center

        Raises:
            EmptyRegion: for an empty raster
        """
        if self.is_empty():
            raise EmptyRegion("distance to an empty raster")
        tree = cKDTree(_planar(self.points()))
        distances, _ = tree.query(_planar(np.asarray(list(points), dtype=np.complex128)))
        return np.atleast_1d(distances).astype(float)

    def to_dict(self) -> RasterDict:
        """Dict representation with a run-length encoded mask"""
        return RasterDict(
            box=self.box.to_dict(), nx=self.nx, ny=self.ny, rle_mask=_rle(self.mask)
        )

    @classmethod
    def from_dict(cls, data: RasterDict) -> Raster:
        """Build a raster from its dict representation"""
        check_type("raster", data, RasterDict)
        box = Box(**data["box"])
        flat = np.zeros(data["nx"] * data["ny"], dtype=bool)
        position, value = 0, False
        for run in data["rle_mask"]:
            flat[position : position + run] = value
            position += run
            value = not value
        if position != flat.size:
            raise ValueError("run lengths do not cover the raster")
        return cls(box, data["nx"], data["ny"], flat.reshape(data["ny"], data["nx"]))


def _rle(mask: BoolGrid) -> list[int]:
    flat = mask.ravel()
    changes = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = [int(run) for run in np.diff(bounds)]
    if flat.size and flat[0]:
        runs.insert(0, 0)
    return runs


def _planar(points: CVector) -> npt.NDArray[np.float64]:
    return np.column_stack((np.real(points), np.imag(points)))


def _check_grids(a: Raster, b: Raster) -> None:
    if not a.same_grid(b):
        raise GridMismatch(
            f"rasters differ: {a.box} {a.nx}x{a.ny} vs {b.box} {b.nx}x{b.ny}"
        )


def raster_intersect(a: Raster, b: Raster) -> Raster:
    """Cellwise conjunction

    Raises:
        GridMismatch: when the boxes or resolutions differ
    """
    _check_grids(a, b)
    return Raster(a.box, a.nx, a.ny, a.mask & b.mask)


def raster_union(a: Raster, b: Raster) -> Raster:
    """Cellwise disjunction

    Raises:
        GridMismatch: when the boxes or resolutions differ
    """
    _check_grids(a, b)
    return Raster(a.box, a.nx, a.ny, a.mask | b.mask)


def _directed_hausdorff(source: CVector, target: CVector) -> float:
    distances, _ = cKDTree(_planar(target)).query(_planar(source))
    return float(np.max(distances))


def point_hausdorff(raster: Raster, points: Iterable[complex]) -> float:
    """Symmetric Hausdorff distance between the member centers and a point set

    Raises:
        EmptyRegion: when either side is empty
    """
    values = np.asarray(list(points), dtype=np.complex128)
    if raster.is_empty() or values.size == 0:
        raise EmptyRegion("Hausdorff distance needs non-empty sets")
    members = raster.points()
    return max(
        _directed_hausdorff(members, values), _directed_hausdorff(values, members)
    )


def hausdorff(a: Raster, b: Raster) -> float:
    """Symmetric Hausdorff distance between the member cell centers

    Raises:
        GridMismatch: when the grids differ
        EmptyRegion: when either raster is empty
    """
    _check_grids(a, b)
    if a.is_empty() or b.is_empty():
        raise EmptyRegion("Hausdorff distance needs non-empty rasters")
    return point_hausdorff(a, b.points())


def convex_hull(points: Iterable[complex]) -> CVector:
    """Vertices of the convex hull in counterclockwise order

    Collinear input gives its two extreme points, a single point itself.
    """
    values = np.unique(np.asarray(list(points), dtype=np.complex128))
    if values.size <= 2:
        return values
    try:
        hull = ConvexHull(_planar(values))
    except QhullError:
        # collinear: keep the extremes along the principal direction
        centered = values - values.mean()
        direction = centered[np.argmax(np.abs(centered))]
        projection = np.real(centered * np.conj(direction))
        return values[[int(np.argmin(projection)), int(np.argmax(projection))]]
    return values[hull.vertices]


def _segment_distance(z: CVector, start: complex, stop: complex) -> RVector:
    edge = stop - start
    length = abs(edge) ** 2
    if length == 0:
        return np.abs(z - start)
    t = np.clip(np.real((z - start) * np.conj(edge)) / length, 0.0, 1.0)
    return np.abs(z - (start + t * edge))


def polygon_contains(z: CVector, vertices: CVector) -> npt.NDArray[np.bool_]:
    """Membership in a convex polygon given counterclockwise (no area: always False)"""
    z = np.asarray(z, dtype=np.complex128)
    if vertices.size < 3:
        return np.zeros(z.shape, dtype=bool)
    inside = np.ones(z.shape, dtype=bool)
    for start, stop in zip(vertices, np.roll(vertices, -1)):
        inside &= np.imag(np.conj(stop - start) * (z - start)) >= 0
    return inside


def polygon_distance(z: CVector, vertices: CVector) -> RVector:
    """Distance to a convex polygon given by counterclockwise vertices, 0 inside"""
    z = np.asarray(z, dtype=np.complex128)
    if vertices.size == 1:
        return np.abs(z - vertices[0])
    distance = np.full(z.shape, np.inf)
    for start, stop in zip(vertices, np.roll(vertices, -1)):
        distance = np.minimum(distance, _segment_distance(z, start, stop))
    return np.where(polygon_contains(z, vertices), 0.0, distance)


@dataclass
class EssentialRange:
    """Declared essential range of a coefficient: a point set, a convex polygon or a circle

    Arguments:
        points: finite essential range
        polygon: vertices of a convex polygon (the filled polygon is the range)
        center: center of a circle essential range
        radius: radius of a circle essential range (the circle line, not the disk)
    """

    points: Optional[CVector] = None
    polygon: Optional[CVector] = None
    center: Optional[complex] = None
    radius: Optional[float] = None

    def __post_init__(self) -> None:
        given = [
            self.points is not None,
            self.polygon is not None,
            self.radius is not None,
        ]
        if sum(given) != 1:
            raise ValueError("give exactly one of points, polygon or circle")
        if self.points is not None:
            self.points = np.atleast_1d(np.asarray(self.points, dtype=np.complex128))
            if self.points.size == 0:
                raise ValueError("points must not be empty")
        if self.polygon is not None:
            self.polygon = convex_hull(self.polygon)
        if self.radius is not None:
            if self.radius < 0:
                raise ValueError("radius must be non-negative")
            self.center = complex(self.center or 0)

    @classmethod
    def of(cls, *values: complex) -> EssentialRange:
        """Finite essential range"""
        return cls(points=np.asarray(values, dtype=np.complex128))

    @property
    def kind(self) -> str:
        """One of points, polygon, circle"""
        if self.points is not None:
            return "points"
        if self.polygon is not None:
            return "polygon"
        return "circle"

    def distance(self, z: Union[complex, CVector]) -> Any:
        """Distance from `z` (scalar or array) to the essential range"""
        values = np.asarray(z, dtype=np.complex128)
        if self.points is not None:
            result = np.min(np.abs(values[..., None] - self.points), axis=-1)
        elif self.polygon is not None:
            result = polygon_distance(values, self.polygon)
        else:
            assert self.center is not None and self.radius is not None
            result = np.abs(np.abs(values - self.center) - self.radius)
        return float(result) if np.ndim(result) == 0 else result

    def hull(self) -> CVector:
        """Vertices of the convex hull (circles by an inscribed polygon)"""
        if self.points is not None:
            return convex_hull(self.points)
        if self.polygon is not None:
            return self.polygon
        assert self.center is not None and self.radius is not None
        angles = 2 * np.pi * np.arange(CIRCLE_VERTICES) / CIRCLE_VERTICES
        return convex_hull(self.center + self.radius * np.exp(1j * angles))

    def to_dict(self) -> EssentialRangeDict:
        """Dict representation of the descriptor"""
        if self.points is not None:
            return EssentialRangeDict(points=[complex_to_json(p) for p in self.points])
        if self.polygon is not None:
            return EssentialRangeDict(polygon=[complex_to_json(p) for p in self.polygon])
        assert self.center is not None
        return EssentialRangeDict(
            circle={"center": complex_to_json(self.center), "radius": self.radius}
        )

    @classmethod
    def from_dict(cls, data: EssentialRangeDict) -> EssentialRange:
        """Build a descriptor from {"points"}, {"polygon"} or {"circle"}"""
        check_type("essran", data, EssentialRangeDict)
        if "points" in data:
            return cls(points=np.asarray([complex_from_json(p) for p in data["points"]]))
        if "polygon" in data:
            return cls(
                polygon=np.asarray([complex_from_json(p) for p in data["polygon"]])
            )
        if "circle" in data:
            circle = data["circle"]
            return cls(
                center=complex_from_json(circle.get("center", 0)),
                radius=float(circle["radius"]),
            )
        raise ValueError("essran needs points, polygon or circle")
