"""Numerical ranges of matrices and pencils

Membership of λ in W(A, B) reduces to the distance of 0 to the convex set
W(A - λB). That distance is bracketed by a min-norm-point iteration over
support points of W (:func:`nrange_gap`), which only ever needs the top
eigenpair of Re(e^{-iθ}M). Diagonal and tridiagonal sections get exact
support oracles without dense eigensolves.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt
from scipy.spatial import ConvexHull, QhullError

from . import matkernel
from .errors import NotHermitian, NotPositive
from .region import (
    DEFAULT_ANGLES,
    Box,
    Raster,
    SupportFn,
    convex_hull,
    raster_intersect,
)
from .types import CMatrix, CVector, IndexVector, PencilFamily
from .utils.concurrency import parallel_map
from .utils.metrics import log_event

Oracle = Callable[[float], tuple[float, complex]]
Resolution = tuple[int, int]

INITIAL_DIRECTIONS = (0.0, 2 * math.pi / 3, 4 * math.pi / 3)
MAX_GAP_ITERATIONS = 64
BAND_ROWS = 8
LINE_SAMPLES = 256


def diagonal_oracle(values: CVector) -> Oracle:
    """Support oracle of the normal matrix diag(values)"""

    def oracle(theta: float) -> tuple[float, complex]:
        rotated = np.real(cmath.exp(-1j * theta) * values)
        k = int(np.argmax(rotated))
        return float(rotated[k]), complex(values[k])

    return oracle


def tridiagonal_oracle(main: CVector, upper: CVector, lower: CVector) -> Oracle:
    """Support oracle of a tridiagonal matrix given by its three bands"""

    def oracle(theta: float) -> tuple[float, complex]:
        rot = cmath.exp(-1j * theta)
        diagonal = np.real(rot * main)
        sub = (rot * lower + np.conj(rot * upper)) / 2
        value, v = matkernel.tridiagonal_max(diagonal, sub)
        point = np.vdot(v, main * v)
        if v.size > 1:
            point += np.vdot(v[:-1], upper * v[1:]) + np.vdot(v[1:], lower * v[:-1])
        return value, complex(point)

    return oracle


def dense_oracle(M: CMatrix) -> Oracle:
    """Support oracle through the top eigenpair of Re(e^{-iθ}M)"""
    adjoint = M.conj().T

    def oracle(theta: float) -> tuple[float, complex]:
        rot = cmath.exp(-1j * theta)
        value, v = matkernel.hermitian_max((rot * M + np.conj(rot) * adjoint) / 2)
        return value, complex(np.vdot(v, M @ v))

    return oracle


def structure(*matrices: CMatrix) -> str:
    """"diagonal", "tridiagonal" or "dense", the sparsest pattern shared by `matrices`"""
    pattern = sum(np.abs(M) for M in matrices)
    if not np.any(pattern - np.diag(np.diagonal(pattern))):
        return "diagonal"
    if not np.any(np.triu(pattern, 2)) and not np.any(np.tril(pattern, -2)):
        return "tridiagonal"
    return "dense"


def support_oracle(M: CMatrix) -> Oracle:
    """The cheapest exact support oracle for M"""
    kind = structure(M)
    if kind == "diagonal":
        return diagonal_oracle(np.diagonal(M).astype(np.complex128))
    if kind == "tridiagonal":
        return tridiagonal_oracle(np.diagonal(M), np.diagonal(M, 1), np.diagonal(M, -1))
    return dense_oracle(M)


@dataclass(eq=False)
class PencilSection:
    """Finite section (A, B) of the pencil λ ↦ A - λB"""

    A: CMatrix
    B: CMatrix

    def __post_init__(self) -> None:
        self.A = matkernel.as_cmatrix(self.A)
        self.B = matkernel.as_cmatrix(self.B)
        if self.A.shape != self.B.shape:
            raise ValueError(
                f"pencil members differ in shape: {self.A.shape} vs {self.B.shape}"
            )

    @property
    def n(self) -> int:
        """Dimension of the section"""
        return int(self.A.shape[0])

    def at(self, lam: complex) -> CMatrix:
        """The matrix A - λB"""
        return self.A - lam * self.B

    def restrict(self, indices: Union[IndexVector, Sequence[int]]) -> PencilSection:
        """Compression to the span of the coordinate vectors `indices`"""
        idx = np.asarray(indices, dtype=int)
        return PencilSection(self.A[np.ix_(idx, idx)], self.B[np.ix_(idx, idx)])

    def swapped(self) -> PencilSection:
        """The pencil (B, A)"""
        return PencilSection(self.B, self.A)

    def multiplied(self, M: CMatrix) -> PencilSection:
        """The pencil (MA, MB)"""
        return PencilSection(M @ self.A, M @ self.B)

    @cached_property
    def structure(self) -> str:
        """Sparsity pattern shared by A and B"""
        return structure(self.A, self.B)

    @cached_property
    def _bands(self) -> tuple[CVector, ...]:
        if self.structure == "diagonal":
            return np.diagonal(self.A).copy(), np.diagonal(self.B).copy()
        return tuple(
            np.diagonal(M, k).copy() for M in (self.A, self.B) for k in (0, 1, -1)
        )

    def oracle(self, lam: complex) -> Oracle:
        """Support oracle of W(A - λB)"""
        if self.structure == "diagonal":
            a, b = self._bands
            return diagonal_oracle(a - lam * b)
        if self.structure == "tridiagonal":
            a0, a1, am, b0, b1, bm = self._bands
            return tridiagonal_oracle(a0 - lam * b0, a1 - lam * b1, am - lam * bm)
        return dense_oracle(self.at(lam))

    @cached_property
    def lipschitz(self) -> float:
        """‖B‖, bounds |dist(0, W(A-λB)) - dist(0, W(A-μB))| / |λ - μ|"""
        return matkernel.spectral_norm(self.B)


def nrange(M: CMatrix, angles: int = DEFAULT_ANGLES) -> SupportFn:
    """Support function of W(M): h(θ) = λ_max((e^{-iθ}M + e^{iθ}M*)/2)"""
    oracle = support_oracle(matkernel.as_cmatrix(M))
    grid = 2 * np.pi * np.arange(angles) / angles
    return SupportFn(np.array([oracle(theta)[0] for theta in grid]))


def nrange_boundary(M: CMatrix, angles: int = DEFAULT_ANGLES) -> CVector:
    """Boundary points <Mv, v> of W(M) for the top eigenvectors v per angle"""
    oracle = support_oracle(matkernel.as_cmatrix(M))
    grid = 2 * np.pi * np.arange(angles) / angles
    return np.array([oracle(theta)[1] for theta in grid], dtype=np.complex128)


@dataclass(frozen=True)
class ZeroGap:
    """Bracket on the position of 0 relative to a numerical range W

    Arguments:
        lower: certified lower bound of dist(0, W)
        upper: certified upper bound of dist(0, W)
        depth: certified lower bound of the distance from 0 to the boundary of W
            when 0 lies inside (0 otherwise)
        iterations: number of support evaluations
    """

    lower: float
    upper: float
    depth: float
    iterations: int

    def certified_in(self, tol: float, margin: float = 0.0) -> bool:
        """dist(0, W') <= tol for every W' within Hausdorff distance `margin`"""
        return self.upper + margin - self.depth <= tol

    def certified_out(self, tol: float, margin: float = 0.0) -> bool:
        """dist(0, W') > tol for every W' within Hausdorff distance `margin`"""
        return self.lower - margin > tol

    def member(self, tol: float) -> bool:
        """Decide dist(0, W) <= tol, falling back to the bracket midpoint"""
        if self.certified_in(tol):
            return True
        if self.certified_out(tol):
            return False
        return (self.lower + self.upper) / 2 <= tol

    @property
    def distance(self) -> float:
        """Best estimate of dist(0, W)"""
        return (max(self.lower, 0.0) + self.upper) / 2


class _Nearest(NamedTuple):
    point: complex
    depth: float
    direction: Optional[float]


def _nearest_to_origin(points: list[complex]) -> _Nearest:
    """Nearest point to 0 of the hull of `points`

    When 0 is inside, point is 0, depth its distance to the hull boundary and
    direction the outward normal of the closest facet.
    """
    values = np.unique(np.asarray(points, dtype=np.complex128))
    hull = None
    if values.size >= 3:
        try:
            hull = ConvexHull(np.column_stack((values.real, values.imag)))
        except QhullError:
            hull = None
    if hull is None:
        ends = convex_hull(values)
        if ends.size == 1:
            return _Nearest(complex(ends[0]), 0.0, None)
        start, stop = complex(ends[0]), complex(ends[1])
        edge = stop - start
        t = min(max(-(start * edge.conjugate()).real / abs(edge) ** 2, 0.0), 1.0)
        point = start + t * edge
        return _Nearest(point, 0.0, cmath.phase(1j * edge))
    offsets = hull.equations[:, 2]
    if np.all(offsets < 0):
        k = int(np.argmax(offsets))
        normal = hull.equations[k, :2]
        return _Nearest(0j, float(-offsets[k]), math.atan2(normal[1], normal[0]))
    starts = values[hull.simplices[:, 0]]
    edges = values[hull.simplices[:, 1]] - starts
    t = np.clip(-np.real(starts * np.conj(edges)) / np.abs(edges) ** 2, 0.0, 1.0)
    candidates = starts + t * edges
    return _Nearest(complex(candidates[np.argmin(np.abs(candidates))]), 0.0, None)


def _tried(theta: float, thetas: list[float]) -> bool:
    return any(abs(cmath.exp(1j * theta) - cmath.exp(1j * t)) < 1e-12 for t in thetas)


def zero_gap(
    oracle: Oracle,
    tol: float = 0.0,
    margin: float = 0.0,
    max_iter: int = MAX_GAP_ITERATIONS,
) -> ZeroGap:
    """Min-norm-point iteration on support points of W (see :func:`nrange_gap`)"""
    thetas = list(INITIAL_DIRECTIONS)
    values = []
    points = []
    for theta in thetas:
        value, point = oracle(theta)
        values.append(value)
        points.append(point)
    lower = max(-v for v in values)
    while True:
        nearest = _nearest_to_origin(points)
        upper = abs(nearest.point)
        scale = max(max(abs(p) for p in points), 1e-300)
        gap = ZeroGap(lower, upper, nearest.depth, len(thetas))
        if gap.certified_out(tol, margin) or gap.certified_in(tol, margin):
            return gap
        if nearest.depth > 0:
            converged = min(values) - nearest.depth <= 1e-12 * scale
        else:
            converged = upper - lower <= 1e-12 * scale
        if converged or len(thetas) >= max_iter:
            return gap
        if upper > 0:
            theta = cmath.phase(-nearest.point)
        elif nearest.direction is not None:
            theta = nearest.direction
        else:
            return gap
        if _tried(theta, thetas):
            theta += math.pi
            if _tried(theta, thetas):
                return gap
        value, point = oracle(theta)
        thetas.append(theta)
        values.append(value)
        points.append(point)
        lower = max(lower, -value)


def nrange_gap(
    M: CMatrix, tol: float = 0.0, margin: float = 0.0, max_iter: int = MAX_GAP_ITERATIONS
) -> ZeroGap:
    """Certified bounds on the distance of 0 to W(M)

    Gilbert's min-norm-point iteration: support points in the direction of the
    current nearest point shrink the bracket [lower, upper] on dist(0, W(M)).
    Iteration stops as soon as the bracket decides dist <= tol (or > tol)
    for every matrix within numerical-range Hausdorff distance `margin`.
    """
    return zero_gap(support_oracle(matkernel.as_cmatrix(M)), tol, margin, max_iter)


def zero_in_nrange(M: CMatrix, tol: float = 0.0) -> bool:
    """True iff 0 lies within `tol` of W(M), i.e. min_θ h_M(θ) >= -tol"""
    return nrange_gap(M, tol).member(tol)


def pencil_member(P: PencilSection, lam: complex, tol: float = 0.0) -> bool:
    """True iff dist(0, W(A - λB)) <= tol"""
    return zero_gap(P.oracle(lam), tol).member(tol)


def _decide_block(
    P: PencilSection,
    centers: npt.NDArray[np.complex128],
    tol: float,
    out: npt.NDArray[np.bool_],
) -> None:
    rows, cols = centers.shape
    lam = (centers[0, 0] + centers[-1, -1]) / 2
    radius = abs(centers[-1, -1] - centers[0, 0]) / 2
    gap = zero_gap(P.oracle(lam), tol, P.lipschitz * radius)
    if rows * cols == 1:
        out[...] = gap.member(tol)
        return
    if gap.certified_out(tol, P.lipschitz * radius):
        out[...] = False
        return
    if gap.certified_in(tol, P.lipschitz * radius):
        out[...] = True
        return
    row_cut = (rows + 1) // 2 if rows > 1 else rows
    col_cut = (cols + 1) // 2 if cols > 1 else cols
    for row_slice in (slice(0, row_cut), slice(row_cut, rows)):
        for col_slice in (slice(0, col_cut), slice(col_cut, cols)):
            if centers[row_slice, col_slice].size:
                _decide_block(
                    P, centers[row_slice, col_slice], tol, out[row_slice, col_slice]
                )


def pencil_range(
    P: PencilSection,
    box: Box,
    resolution: Resolution,
    tol: Optional[float] = None,
    threads: Optional[int] = None,
) -> Raster:
    """Raster of W(A, B) = {λ : 0 ∈ closure W(A - λB)}

    A cell is a member when dist(0, W(A - λB)) at its center is at most `tol`,
    one cell diagonal by default. Blocks of cells are decided at once when the
    bracket at the block center clears ‖B‖ times the block radius.
    """
    nx, ny = resolution
    raster = Raster.empty(box, nx, ny)
    tol = raster.diagonal if tol is None else tol
    centers = raster.centers

    def band(start: int) -> npt.NDArray[np.bool_]:
        block = centers[start : start + BAND_ROWS]
        out = np.zeros(block.shape, dtype=bool)
        _decide_block(P, block, tol, out)
        return out

    bands = parallel_map(band, range(0, ny, BAND_ROWS), threads)
    raster.mask = np.vstack(bands)
    return raster


def pencil_range_on_line(
    P: PencilSection,
    start: complex,
    stop: complex,
    samples: int = LINE_SAMPLES,
    tol: float = 0.0,
    precision: float = 1e-13,
) -> list[tuple[complex, complex]]:
    """Intervals of W(A, B) along the segment [start, stop]

    Membership is sampled at `samples` points and every change of membership is
    located by bisection to `precision` times the segment length. Components
    shorter than the sampling step may be missed.
    """
    length = abs(stop - start)
    ts = np.linspace(0.0, 1.0, samples)

    def inside(t: float) -> bool:
        return pencil_member(P, start + t * (stop - start), tol)

    flags = [inside(t) for t in ts]

    def crossing(t_in: float, t_out: float) -> float:
        while abs(t_out - t_in) * max(length, 1.0) > precision:
            middle = (t_in + t_out) / 2
            if inside(middle):
                t_in = middle
            else:
                t_out = middle
        return t_in

    intervals = []
    opened: Optional[float] = 0.0 if flags[0] else None
    for k in range(1, samples):
        if flags[k] and not flags[k - 1]:
            opened = crossing(ts[k], ts[k - 1])
        elif flags[k - 1] and not flags[k]:
            assert opened is not None
            intervals.append((opened, crossing(ts[k - 1], ts[k])))
            opened = None
    if opened is not None:
        intervals.append((opened, 1.0))
    return [(start + a * (stop - start), start + b * (stop - start)) for a, b in intervals]


def w_range_hpd(P: PencilSection, angles: int = DEFAULT_ANGLES) -> SupportFn:
    """w(A, B) = W(B^{-1/2} A B^{-1/2}) for Hermitian positive definite B

    Raises:
        NotPositive: when B is not positive definite
    """
    S = matkernel.hpd_invsqrt(P.B)
    return nrange(S @ P.A @ S, angles)


def _windows(
    F: PencilFamily, depths: Sequence[int], size: int, step: Optional[float]
) -> list[tuple[int, PencilSection]]:
    sections = []
    for depth in depths:
        spec = F.window_spec(depth, size, step)
        sections.append((depth, F.section(spec).restrict(F.window_indices(spec, depth, size))))
    return sections


def ess_range_tail(
    F: PencilFamily,
    box: Box,
    resolution: Resolution,
    tail_depths: Sequence[int],
    section_size: int,
    step: Optional[float] = None,
    threads: Optional[int] = None,
) -> Raster:
    """Outer estimate of W_e(A, B): pencil ranges of coordinate windows intersected over depths

    Raises:
        UnsupportedFamily: for families without coordinate windows
    """
    if not tail_depths:
        raise ValueError("tail_depths must not be empty")
    result: Optional[Raster] = None
    for depth, window in _windows(F, tail_depths, section_size, step):
        raster = pencil_range(window, box, resolution, threads=threads)
        log_event("tail.members", raster.count, step=f"depth={depth}")
        result = raster if result is None else raster_intersect(result, raster)
        log_event(
            "tail.intersection", result.count, step=f"depth={depth}", level=logging.DEBUG
        )
    assert result is not None
    return result


def ess_ratio_range_tail(
    F: PencilFamily,
    box: Box,
    resolution: Resolution,
    tail_depths: Sequence[int],
    section_size: int,
    step: Optional[float] = None,
    angles: int = DEFAULT_ANGLES,
) -> Raster:
    """Outer estimate of w_e(A, B) for uniformly positive B: windowed w_range_hpd intersected over depths

    Raises:
        NotPositive: when a window of B is not positive definite
    """
    if not tail_depths:
        raise ValueError("tail_depths must not be empty")
    nx, ny = resolution
    result: Optional[Raster] = None
    for depth, window in _windows(F, tail_depths, section_size, step):
        raster = w_range_hpd(window, angles).rasterize(box, nx, ny)
        log_event("tail.members", raster.count, step=f"depth={depth}")
        result = raster if result is None else raster_intersect(result, raster)
    assert result is not None
    return result


def qnr_sample(
    T: CMatrix, p: int, q: int, samples: int, rng_seed: int = 0
) -> CVector:
    """Eigenvalues of 2x2 compressions T_{x,y} for random unit x ∈ C^p, y ∈ C^q

    T_{x,y} = [[<Ax,x>, <By,x>], [<Cx,y>, <Dy,y>]] for T = [[A, B], [C, D]]
    """
    T = matkernel.as_cmatrix(T)
    if p < 1 or q < 1 or p + q != T.shape[0]:
        raise ValueError(f"block sizes ({p}, {q}) do not split a {T.shape[0]}-matrix")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(rng_seed)
    x = rng.standard_normal((samples, p)) + 1j * rng.standard_normal((samples, p))
    y = rng.standard_normal((samples, q)) + 1j * rng.standard_normal((samples, q))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return compression_eigenvalues(T, p, x, y)


def compression_eigenvalues(
    T: CMatrix, p: int, x: CMatrix, y: CMatrix
) -> CVector:
    """Both eigenvalues of T_{x,y} for every row pair of unit vectors (x, y)"""
    A, B = T[:p, :p], T[:p, p:]
    C, D = T[p:, :p], T[p:, p:]
    a = np.einsum("si,ij,sj->s", x.conj(), A, x)
    b = np.einsum("si,ij,sj->s", x.conj(), B, y)
    c = np.einsum("si,ij,sj->s", y.conj(), C, x)
    d = np.einsum("si,ij,sj->s", y.conj(), D, y)
    half = (a - d) / 2
    root = np.sqrt(half * half + b * c)
    mean = (a + d) / 2
    return np.concatenate((mean + root, mean - root)).astype(np.complex128)


@dataclass(frozen=True)
class ResolventBound:
    """Bound on ‖(A - λB)^{-1}‖ next to its actual value

    Arguments:
        bound: 1/(dist(0, W(B)) dist(λ, W(A, B))), None when 0 ∈ W(B) or λ ∈ W(A, B)
        actual: 1/σ_min(A - λB), inf for singular A - λB
        exact_distance: True if dist(λ, W(A, B)) was computed exactly,
            False if the lower bound dist(0, W(A - λB))/‖B‖ was used
    """

    bound: Optional[float]
    actual: float
    exact_distance: bool = field(default=False)


def _unimodular_hpd(B: CMatrix) -> Optional[tuple[complex, CMatrix]]:
    """(e^{iψ}, H^{-1/2}) when B = e^{iψ}H with H Hermitian positive definite"""
    trace = np.trace(B)
    if trace == 0:
        return None
    rotation = trace / abs(trace)
    try:
        return rotation, matkernel.hpd_invsqrt(B / rotation)
    except (NotHermitian, NotPositive):
        return None


def resolvent_bound(P: PencilSection, lam: complex) -> ResolventBound:
    """The pencil resolvent bound ‖(A-λB)^{-1}‖ <= 1/(dist(0, W(B)) dist(λ, W(A, B)))

    Distances enter as certified lower bounds, so `bound` never undercuts
    the true resolvent norm.
    """
    smallest = matkernel.sigma_min(P.at(lam))
    actual = math.inf if smallest == 0 else 1 / smallest
    to_b = nrange_gap(P.B).lower
    if to_b <= 0:
        return ResolventBound(None, actual)
    reduced = _unimodular_hpd(P.B)
    if reduced is not None:
        rotation, S = reduced
        shifted = S @ P.A @ S - rotation * lam * np.eye(P.n)
        to_range = nrange_gap(shifted).lower
        exact = True
    else:
        to_range = zero_gap(P.oracle(lam)).lower / P.lipschitz
        exact = False
    if to_range <= 0:
        return ResolventBound(None, actual, exact)
    return ResolventBound(1 / (to_b * to_range), actual, exact)

