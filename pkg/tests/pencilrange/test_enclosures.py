import math

import numpy as np
import pytest

from pencilrange import enclosures, gallery, ranges
from pencilrange.enclosures import EnclosureSpec, MultiplierBounds
from pencilrange.errors import GapViolated, NotApplicable, SingularB
from pencilrange.ranges import PencilSection
from pencilrange.region import Box, EssentialRange
from pencilrange.types import TruncationSpec

SEGMENT = EssentialRange(polygon=np.array([-0.3, 0.3 + 0.4j]))
STOKES_U = complex(-1, 1)
GAPPED = np.diag([-3.0, -1.0, 2.0, 5.0])


@pytest.fixture
def free_dirac():
    return EnclosureSpec("dirac", EssentialRange.of(0.0))


@pytest.mark.parametrize(
    "kind, essran, params, error",
    [
        ("spiral", EssentialRange.of(0.0), {}, ValueError),
        ("stokes", None, {}, ValueError),
        ("gap", None, {"a": 2.0, "b": 1.0}, GapViolated),
    ],
)
def test_spec_invalid(kind, essran, params, error):
    """Test if unknown kinds, missing ranges and reversed gaps are rejected"""
    with pytest.raises(error):
        EnclosureSpec(kind, essran, params)


def test_spec_dict_round_trip():
    """Test if the essential range travels with the parameters"""
    spec = EnclosureSpec("dirac", SEGMENT, {"phi_grid": 64})
    data = spec.to_dict()
    assert sorted(data["hull"]) == [[-0.3, 0.0], [0.3, 0.4]]
    restored = EnclosureSpec.from_dict(data)
    assert restored.phi_grid == 64
    assert np.allclose(np.sort_complex(restored.hull), np.sort_complex(spec.hull))


def test_spec_from_hull_only():
    """Test if a bare hull is turned into an essential range"""
    restored = EnclosureSpec.from_dict(
        {"kind": "stokes", "hull": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], "params": {}}
    )
    assert restored.essran is not None
    assert restored.essran.kind == "polygon"


def test_dirac_excludes_zero(free_dirac):
    """Test if λ = 0 is excluded for V ≡ 0 at φ = π/4 with bound 2"""
    result = enclosures.dirac_excluded(free_dirac, 0.0)
    assert result.excluded
    assert result.best_phi == pytest.approx(math.pi / 4)
    assert result.bound == pytest.approx(2.0)


@pytest.mark.parametrize("lam, excluded", [(2.0, False), (-1.5, False), (0.5j, True), (0.3, True)])
def test_dirac_free_spectrum(free_dirac, lam, excluded):
    """Test if the free spectrum (-∞, -1] ∪ [1, ∞) survives and its complement is excluded"""
    assert enclosures.dirac_excluded(free_dirac, lam).excluded is excluded


def test_dirac_exclusion_bounds_resolvent():
    """Test if the sector bound dominates the resolvent norm of a constant-potential section"""
    spec = EnclosureSpec("dirac", EssentialRange.of(0.2j))
    lam = 0.1 + 0.5j
    result = enclosures.dirac_excluded(spec, lam)
    assert result.excluded
    section = gallery.dirac1d(0.2j).section(TruncationSpec(n=60, half_length=5.0))
    eigenvalues = np.linalg.eigvals(section.A)
    # A - 0.2i is Hermitian, so the resolvent norm is 1/dist(λ, σ)
    assert 1 / np.min(np.abs(eigenvalues - lam)) <= result.bound + 1e-9


def test_dirac_region():
    """Test if the sector region keeps the shifted half-lines and drops the gap"""
    spec = EnclosureSpec("dirac", SEGMENT)
    region = enclosures.dirac_region(spec, Box(-3.0, 3.0, -1.0, 1.0), (30, 10), phi_grid=64)
    assert region.contains(2.1 + 0.1j)
    assert region.contains(-2.1 + 0.1j)
    assert not region.contains(0.1 + 0.1j)
    threaded = enclosures.dirac_region(spec, Box(-3.0, 3.0, -1.0, 1.0), (30, 10), 64, threads=2)
    assert np.array_equal(threaded.mask, region.mask)


@pytest.mark.parametrize(
    "essran, lam, expected",
    [
        (EssentialRange.of(0.0), 2.0, True),
        (EssentialRange.of(0.0), 0.5, False),
        (EssentialRange.of(0.0), 2.0 + 0.1j, False),
        (SEGMENT, 1.5 + 0.2j, True),
        (SEGMENT, 0.5 + 0.2j, False),
    ],
)
def test_half_lines_member(essran, lam, expected):
    """Test if membership follows ((-∞, -1] ∪ [1, ∞)) + conv(essran)"""
    spec = EnclosureSpec("half_lines", essran)
    assert enclosures.half_lines_member(spec, lam) is expected


@pytest.mark.parametrize(
    "lam, expected",
    [
        (-0.5 + 0.5j, True),
        (-3.0, False),
        (2.0, True),
        (1 + 1j, False),
        (0.1 + 1j, False),
        (0.5 + 0.01j, True),
    ],
)
def test_stokes_member(lam, expected):
    """Test if the three pieces of the Stokes enclosure are honoured"""
    assert enclosures.stokes_member(EssentialRange.of(STOKES_U), lam) is expected


def test_stokes_member_vectorized():
    """Test if arrays give arrays"""
    values = enclosures.stokes_member(EssentialRange.of(STOKES_U), np.array([2.0, -3.0]))
    assert values.tolist() == [True, False]


def test_stokes_region():
    """Test if the region raster evaluates the predicate at the cell centers"""
    spec = EnclosureSpec("stokes", EssentialRange.of(STOKES_U))
    region = enclosures.stokes_region(spec, Box(-3.0, 5.0, -3.0, 4.0), (80, 70))
    assert region.contains(4.0)
    assert region.contains(-0.9 + 0.9j)
    assert not region.contains(-2.9 - 2.9j)
    expected = enclosures.stokes_member(spec.essran, region.centers)
    assert np.array_equal(region.mask, expected)


def test_rotated_distance():
    """Test if r = inf Re(e^{iφ} W(A - λ))"""
    A = np.diag([1.0, 2.0])
    assert enclosures.rotated_distance(A, 0.0, 0.0) == pytest.approx(1.0)
    assert enclosures.rotated_distance(A, 0.0, math.pi) == pytest.approx(-2.0)
    assert enclosures.rotated_distance(A, 0.5, 0.0) == pytest.approx(0.5)


def test_stokes_multiplier_excludes():
    """Test if the block multiplier criterion excludes λ away from essran(U)"""
    blocks = (np.diag([2.0, 3.0]), np.eye(2), np.eye(2), STOKES_U * np.eye(2))
    bounds = MultiplierBounds.stokes(0.0)
    essran = EssentialRange.of(STOKES_U)
    assert enclosures.stokes_multiplier_excludes(blocks, 0.0, 0.0, bounds, essran)
    # D given as a matrix: ‖(D - λ)^{-1}‖ = 1/|U - λ|
    assert enclosures.stokes_multiplier_excludes(blocks, 0.0, 0.0, bounds)
    assert not enclosures.stokes_multiplier_excludes(blocks, STOKES_U, 0.0, bounds, essran)
    with pytest.raises(NotApplicable):
        enclosures.stokes_multiplier_excludes(blocks, 5.0, 0.0, bounds, essran)


def test_stokes_epsilon():
    """Test if ε = 1/((b + a/r)‖(D - λ)^{-1}‖²)"""
    bounds = MultiplierBounds.stokes(math.pi / 3)
    assert bounds.b == pytest.approx(2.0)
    assert enclosures.stokes_epsilon(2.0, bounds, 0.5) == pytest.approx(2.0)
    with pytest.raises(NotApplicable):
        enclosures.stokes_epsilon(0.0, bounds, 1.0)


def test_gap_region_selfadjoint():
    """Test if real blocks give two real half-lines"""
    spec = enclosures.gap_region((-3.0, -1.0), (2.0, 5.0))
    assert spec.params["a"] == -1.0
    assert spec.params["b"] == 2.0
    assert spec.params["selfadjoint"]
    assert not enclosures.gap_member(spec, 0.0)
    assert enclosures.gap_member(spec, -2.0)
    assert enclosures.gap_member(spec, 3.0)
    assert not enclosures.gap_member(spec, 3.0 + 0.1j)
    assert enclosures.gap_member(spec, 3.0 + 0.1j, slack=0.2)


def test_gap_region_half_planes():
    """Test if a complex block widens the region to half-planes"""
    spec = enclosures.gap_region(np.array([-3 + 1j, -1.0]), (2.0, 5.0))
    assert not spec.params["selfadjoint"]
    assert enclosures.gap_member(spec, 3.0 + 1j)
    assert not enclosures.gap_member(spec, 0.5 + 1j)


def test_gap_region_violated():
    """Test if overlapping ranges raise GapViolated"""
    with pytest.raises(GapViolated):
        enclosures.gap_region((0.0, 3.0), (2.0, 5.0))
    with pytest.raises(GapViolated):
        enclosures.gap_region_from_blocks(np.diag([0.0, 3.0]), np.diag([2.0, 5.0]))


def test_gap_region_from_blocks():
    """Test if the endpoints come from the real parts of the block ranges"""
    spec = enclosures.gap_region_from_blocks(np.diag([-3.0, -1.0]), np.diag([2.0, 5.0]))
    assert spec.params["a"] == pytest.approx(-1.0)
    assert spec.params["b"] == pytest.approx(2.0)
    assert spec.params["selfadjoint"]


def test_gap_pencil_on_real_line():
    """Test if W(BT, B) on ℝ is exactly (-∞, a] ∪ [b, ∞) for B = diag(-I, I)"""
    B = enclosures.gap_multiplier(2, 2)
    assert np.allclose(np.diagonal(B), [-1, -1, 1, 1])
    intervals = ranges.pencil_range_on_line(PencilSection(B @ GAPPED, B), -4.0, 6.0)
    assert len(intervals) == 2
    assert intervals[0][1] == pytest.approx(-1.0, abs=1e-9)
    assert intervals[1][0] == pytest.approx(2.0, abs=1e-9)


def test_enclosure_region_gap():
    """Test if the gap raster keeps the real half-lines within one cell"""
    spec = enclosures.gap_region((-3.0, -1.0), (2.0, 5.0))
    region = enclosures.enclosure_region(spec, Box(-4.0, 6.0, -1.0, 1.0), (50, 10))
    assert region.contains(-2.0)
    assert region.contains(4.0)
    assert not region.contains(0.5)
    assert not region.contains(-2.0 + 0.5j)


def test_enclosure_region_half_lines():
    """Test if the half-line raster follows the shifted hull"""
    spec = EnclosureSpec("half_lines", SEGMENT)
    region = enclosures.enclosure_region(spec, Box(-3.0, 3.0, -1.0, 1.0), (30, 10))
    assert region.contains(2.1 + 0.1j)
    assert not region.contains(0.1 + 0.1j)
    assert not region.contains(2.1 - 0.5j)


def test_enclosure_member_dispatch(free_dirac):
    """Test if each kind uses its own predicate"""
    assert not enclosures.enclosure_member(free_dirac, 0.0)
    assert enclosures.enclosure_member(free_dirac, 2.0)
    stokes = EnclosureSpec("stokes", EssentialRange.of(STOKES_U))
    assert enclosures.enclosure_member(stokes, 2.0)
    gap = enclosures.gap_region((-3.0, -1.0), (2.0, 5.0))
    assert enclosures.enclosure_member(gap, 0.0 + 0.05j, slack=0.1) is False
    assert enclosures.enclosure_member(gap, -1.0 + 0.05j, slack=0.1)


def test_multiplier_spectrum_estimate():
    """Test if a polar multiplier cuts the numerical range down to the spectrum"""
    T = np.diag([1.0, 2.0, 5.0])
    multipliers = enclosures.polar_multipliers(T, [3.5])
    assert len(multipliers) == 2
    estimate = enclosures.multiplier_spectrum_estimate(
        T, multipliers, Box(0.0, 6.0, -1.0, 1.0), (60, 20)
    )
    for eigenvalue in (1.0, 2.0, 5.0):
        assert estimate.contains(eigenvalue)
    assert not estimate.contains(3.5)
    identity_only = enclosures.multiplier_spectrum_estimate(
        T, multipliers[:1], Box(0.0, 6.0, -1.0, 1.0), (60, 20)
    )
    assert identity_only.contains(3.5)


def test_multiplier_spectrum_estimate_invalid():
    """Test if no multipliers or a singular one are rejected"""
    with pytest.raises(ValueError):
        enclosures.multiplier_spectrum_estimate(np.eye(2), [], Box(-1, 1, -1, 1), (4, 4))
    with pytest.raises(SingularB):
        enclosures.multiplier_spectrum_estimate(
            np.eye(2), [np.zeros((2, 2))], Box(-1, 1, -1, 1), (4, 4)
        )


def test_multiplier_resolvent_bound(rng):
    """Test if the multiplied bound dominates the resolvent norm"""
    T = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    B = np.exp(0.3j) * np.eye(4)
    result = enclosures.multiplier_resolvent_bound(T, B, 10.0 + 10j)
    assert result.bound is not None
    assert result.bound >= result.actual * (1 - 1e-9)


def test_hull_of():
    """Test if the descriptor kind follows the number of hull vertices"""
    assert enclosures.hull_of([0, 1, 1j, 0.2 + 0.2j]).kind == "polygon"
    assert enclosures.hull_of([0, 1, 2]).kind == "points"
