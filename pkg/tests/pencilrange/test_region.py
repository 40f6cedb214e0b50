import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pencilrange.errors import EmptyRegion, GridMismatch
from pencilrange.region import (
    Box,
    EssentialRange,
    Raster,
    SupportFn,
    convex_hull,
    hausdorff,
    point_hausdorff,
    polygon_distance,
    raster_intersect,
    raster_union,
)

BOX = Box(-1.0, 1.0, -1.0, 1.0)


def disk(radius, nx=20, ny=20):
    return Raster.from_predicate(BOX, nx, ny, lambda z: np.abs(z) <= radius)


@pytest.mark.parametrize("values", ([0, 0, 1, 1], [1, 0, 0, 1], [0, 1, 0]))
def test_box_invalid(values):
    """Test if degenerate boxes and wrong lengths are refused"""
    with pytest.raises(ValueError):
        Box.from_list(values)


def test_box_around():
    """Test if Box.around widens the bounding box by the margin"""
    box = Box.around([1 + 1j, -2 + 0j], margin=0.5)
    assert box.to_list() == [-2.5, 1.5, -0.5, 1.5]
    assert box.center == complex(-0.5, 0.5)


def test_raster_geometry():
    """Test cell sizes, centers and the cell lookup"""
    raster = Raster.empty(Box(0.0, 4.0, 0.0, 2.0), 4, 2)
    assert raster.dx == 1.0 and raster.dy == 1.0
    assert raster.diagonal == pytest.approx(np.sqrt(2))
    assert raster.centers[0, 0] == 0.5 + 0.5j
    assert raster.centers[1, 3] == 3.5 + 1.5j
    assert raster.cell_of(3.2 + 0.1j) == (0, 3)
    assert raster.cell_of(5 + 0j) is None


def test_raster_mask_shape():
    """Test if the mask must be (ny, nx)"""
    with pytest.raises(ValueError):
        Raster(BOX, 3, 2, np.zeros((3, 2), dtype=bool))


def test_raster_contains_dilation():
    """Test membership with and without dilation"""
    raster = Raster.empty(Box(0.0, 5.0, 0.0, 5.0), 5, 5)
    raster.mask[2, 2] = True
    assert raster.contains(2.5 + 2.5j)
    assert not raster.contains(3.5 + 2.5j)
    assert raster.contains(3.5 + 3.5j, dilation=1)
    assert not raster.contains(4.5 + 2.5j, dilation=1)
    assert raster.dilate(1).count == 9
    assert raster.dilate(0).count == 1


def test_raster_algebra():
    """Test intersection and union of nested disks"""
    small, large = disk(0.4), disk(0.8)
    assert np.array_equal(raster_intersect(small, large).mask, small.mask)
    assert np.array_equal(raster_union(small, large).mask, large.mask)
    assert np.array_equal(small.complement().complement().mask, small.mask)


def test_raster_grid_mismatch():
    """Test if rasters on different grids cannot be combined"""
    with pytest.raises(GridMismatch):
        raster_intersect(disk(0.5, 20, 20), disk(0.5, 10, 10))


def test_hausdorff():
    """Test the Hausdorff distance of nested disks and of a point set"""
    small, large = disk(0.3), disk(0.8)
    distance = hausdorff(small, large)
    assert 0.4 < distance < 0.6
    assert distance == hausdorff(large, small)
    assert point_hausdorff(small, [0.0]) == pytest.approx(np.max(np.abs(small.points())))
    with pytest.raises(EmptyRegion):
        hausdorff(small, Raster.empty(BOX, 20, 20))


def test_boundary_and_distance():
    """Test if the boundary is a ring and distances vanish on members"""
    raster = disk(0.8)
    boundary = raster.boundary()
    assert 0 < boundary.count < raster.count
    assert not boundary.contains(0.05 + 0.05j)
    assert np.allclose(raster.distance_to(raster.points()), 0.0)
    with pytest.raises(EmptyRegion):
        Raster.empty(BOX, 4, 4).distance_to([0j])


@given(
    st.lists(st.booleans(), min_size=12, max_size=12),
)
def test_raster_dict_round_trip(flags):
    """Test if the run-length encoding restores the mask"""
    raster = Raster(Box(0.0, 4.0, 0.0, 3.0), 4, 3, np.asarray(flags).reshape(3, 4))
    data = raster.to_dict()
    assert sum(data["rle_mask"]) == 12
    restored = Raster.from_dict(data)
    assert np.array_equal(restored.mask, raster.mask)
    assert restored.box == raster.box


def test_support_function_square():
    """Test the support function of a square: vertices, membership and distance"""
    square = [1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]
    support = SupportFn.from_points(square, angles=8)
    assert support.values[0] == pytest.approx(1.0)
    assert support.values[1] == pytest.approx(np.sqrt(2))
    assert support.contains(0.5 + 0.5j)
    assert not support.contains(1.5 + 0j)
    assert support.contains(1.05 + 0j, slack=0.1)
    assert support.distance(3 + 0j) == pytest.approx(2.0)
    for vertex in square:
        assert np.min(np.abs(support.vertices() - vertex)) < 1e-9


def test_support_function_rasterize():
    """Test if rasterizing keeps the interior and drops far cells"""
    support = SupportFn.from_points([0.5 + 0.5j, -0.5 + 0.5j, -0.5 - 0.5j, 0.5 - 0.5j])
    raster = support.rasterize(BOX, 20, 20, slack=0.0)
    assert raster.contains(0j)
    assert not raster.contains(0.9 + 0.9j)
    assert raster.count == 100


def test_support_function_invalid():
    """Test if fewer than three angles and negative slack are refused"""
    with pytest.raises(ValueError):
        SupportFn(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        SupportFn.from_points([0j], angles=4).contains(0j, slack=-1.0)


def test_convex_hull():
    """Test hulls of generic, collinear and single-point input"""
    hull = convex_hull([0, 1, 1j, 1 + 1j, 0.5 + 0.5j])
    assert hull.size == 4
    assert 0.5 + 0.5j not in hull
    collinear = convex_hull([0, 1, 2, 3])
    assert set(collinear) == {0, 3}
    assert convex_hull([2j, 2j]).tolist() == [2j]


def test_polygon_distance():
    """Test distances to the unit square, zero inside"""
    square = convex_hull([0, 1, 1j, 1 + 1j])
    distances = polygon_distance(np.array([0.5 + 0.5j, 2 + 0.5j, -1 - 1j]), square)
    assert np.allclose(distances, [0.0, 1.0, np.sqrt(2)])


@pytest.mark.parametrize(
    "essran, z, expected",
    (
        (EssentialRange.of(0, 2), 1.5, 0.5),
        (EssentialRange(polygon=np.array([0, 1, 1j])), 0.25 + 0.25j, 0.0),
        (EssentialRange(center=1j, radius=2.0), 1j, 2.0),
    ),
)
def test_essential_range_distance(essran, z, expected):
    """Test distances to the three descriptor kinds"""
    assert essran.distance(z) == pytest.approx(expected)


def test_essential_range_invalid():
    """Test if exactly one descriptor is required"""
    with pytest.raises(ValueError):
        EssentialRange()
    with pytest.raises(ValueError):
        EssentialRange(points=np.array([0j]), radius=1.0)
    with pytest.raises(ValueError):
        EssentialRange(points=np.array([]))


@pytest.mark.parametrize(
    "essran",
    (
        EssentialRange.of(1, 2j),
        EssentialRange(polygon=np.array([0, 1, 1j])),
        EssentialRange(center=1 + 0j, radius=3.0),
    ),
)
def test_essential_range_dict(essran):
    """Test if the dict form rebuilds the same descriptor"""
    restored = EssentialRange.from_dict(essran.to_dict())
    assert restored.kind == essran.kind
    assert np.allclose(np.sort_complex(restored.hull()), np.sort_complex(essran.hull()))
