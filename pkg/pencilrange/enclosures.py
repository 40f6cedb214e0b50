"""Spectral enclosures obtained with bounded multipliers

Every test here excludes λ by exhibiting a multiplier B with 0 ∉ W(B(T - λ)).
The Dirac test searches a grid of sector angles, the Stokes and gap regions
evaluate closed-form predicates cellwise.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from . import matkernel
from .errors import GapViolated, NotApplicable, SingularB
from .ranges import PencilSection, ResolventBound, pencil_range, resolvent_bound, support_oracle
from .region import (
    Box,
    EssentialRange,
    Raster,
    complex_from_json,
    complex_to_json,
    convex_hull,
    raster_intersect,
)
from .types import CMatrix, CVector, EnclosureDict
from .utils.concurrency import parallel_map
from .utils.metrics import log_event

ENCLOSURE_KINDS = ("dirac", "stokes", "gap", "half_lines")
DEFAULT_PHI_GRID = 256
REGION_BAND = 32

Resolution = tuple[int, int]
Interval = Union[tuple[float, float], CVector, Sequence[complex]]


@dataclass
class EnclosureSpec:
    """Enclosure of a spectrum described by an essential range and scalar parameters

    Arguments:
        kind: one of dirac, stokes, gap, half_lines
        essran: essential range of the potential (dirac, half_lines, stokes)
        params: a, b (gap), essential, selfadjoint (gap), phi_grid (dirac)
    """

    kind: str
    essran: Optional[EssentialRange] = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ENCLOSURE_KINDS:
            raise ValueError(f"kind must be one of {ENCLOSURE_KINDS}, got {self.kind!r}")
        if self.kind == "gap":
            a, b = float(self.params["a"]), float(self.params["b"])
            if a >= b:
                raise GapViolated(f"gap needs a < b, got a = {a}, b = {b}")
        elif self.essran is None:
            raise ValueError(f"a {self.kind} enclosure needs an essential range")

    @property
    def hull(self) -> CVector:
        """Vertices of conv(essran), counterclockwise"""
        if self.essran is None:
            return np.zeros(0, dtype=np.complex128)
        return self.essran.hull()

    @property
    def phi_grid(self) -> int:
        return int(self.params.get("phi_grid", DEFAULT_PHI_GRID))

    def to_dict(self) -> EnclosureDict:
        params = dict(self.params)
        if self.essran is not None:
            params["essran"] = self.essran.to_dict()
        return {
            "kind": self.kind,
            "hull": [complex_to_json(z) for z in self.hull],
            "params": params,
        }

    @classmethod
    def from_dict(cls, data: EnclosureDict) -> EnclosureSpec:
        params = dict(data.get("params", {}))
        essran_data = params.pop("essran", None)
        if essran_data is not None:
            essran: Optional[EssentialRange] = EssentialRange.from_dict(essran_data)
        elif data.get("hull"):
            essran = hull_of([complex_from_json(z) for z in data["hull"]])
        else:
            essran = None
        return cls(data["kind"], essran, params)


class DiracExclusion(NamedTuple):
    """Result of the sector test: the best angle realizes the smallest resolvent bound"""

    excluded: bool
    best_phi: Optional[float]
    bound: Optional[float]


def _sector_scores(
    hull: CVector, lam: npt.NDArray[np.complex128], phi_grid: int
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Largest cos φ · margin over the angle grid and both orientations, with its signed angle"""
    best = np.zeros(lam.shape)
    best_phi = np.full(lam.shape, np.nan)
    for k in range(phi_grid):
        phi = (math.pi / 2) * k / phi_grid
        for s in (1, -1):
            left = np.exp(1j * s * phi)
            right = np.exp(-1j * s * phi)
            base_left = np.imag(left * (-1 - lam))
            base_right = np.imag(right * (1 - lam))
            shift_left = np.imag(left * hull)
            shift_right = np.imag(right * hull)
            upper = np.maximum(base_left + shift_left.max(), base_right + shift_right.max())
            lower = np.minimum(base_left + shift_left.min(), base_right + shift_right.min())
            margin = np.where(upper < 0, -upper, np.where(lower > 0, lower, 0.0))
            score = math.cos(phi) * margin
            better = score > best
            best = np.where(better, score, best)
            best_phi = np.where(better, s * phi, best_phi)
    return best, best_phi


def dirac_excluded(
    spec: EnclosureSpec, lam: complex, phi_grid: Optional[int] = None
) -> DiracExclusion:
    """Whether a sector multiplier diag(e^{-isφ}, e^{isφ}) excludes λ from the Dirac spectrum

    λ is excluded when Im(e^{isφ}(-1 + v - λ)) and Im(e^{-isφ}(1 + v - λ)) share
    one strict sign over every hull vertex v, for some φ = (π/2)k/phi_grid and
    s = ±1. The margin is the smallest absolute value and ‖(T - λ)^{-1}‖ <=
    1/(cos φ · margin).
    """
    grid = spec.phi_grid if phi_grid is None else phi_grid
    score, phi = _sector_scores(spec.hull, np.array([complex(lam)]), grid)
    if score[0] <= 0:
        return DiracExclusion(False, None, None)
    return DiracExclusion(True, float(phi[0]), float(1 / score[0]))


def dirac_region(
    spec: EnclosureSpec,
    box: Box,
    resolution: Resolution,
    phi_grid: Optional[int] = None,
    threads: Optional[int] = None,
) -> Raster:
    """Raster of the cells the sector search does not exclude"""
    grid = spec.phi_grid if phi_grid is None else phi_grid
    raster = Raster.empty(box, *resolution)
    centers = raster.centers
    bands = parallel_map(
        lambda start: _sector_scores(spec.hull, centers[start : start + REGION_BAND], grid)[0] <= 0,
        range(0, raster.ny, REGION_BAND),
        threads,
    )
    raster.mask = np.vstack(bands)
    return raster


def _hull_slice(hull: CVector, y: float) -> Optional[tuple[float, float]]:
    """Real extent of conv(hull) ∩ {Im z = y}"""
    if hull.size == 1:
        z = complex(hull[0])
        return (z.real, z.real) if abs(z.imag - y) <= 1e-12 else None
    xs = []
    edges = zip(hull, np.roll(hull, -1)) if hull.size > 2 else [(hull[0], hull[1])]
    for start, stop in edges:
        low, high = sorted((start.imag, stop.imag))
        if y < low - 1e-12 or y > high + 1e-12:
            continue
        if abs(stop.imag - start.imag) <= 1e-15:
            xs.extend((start.real, stop.real))
        else:
            t = (y - start.imag) / (stop.imag - start.imag)
            xs.append(start.real + t * (stop.real - start.real))
    if not xs:
        return None
    return min(xs), max(xs)


def half_lines_member(spec: EnclosureSpec, lam: complex) -> bool:
    """λ ∈ ((-∞, -1] + hull) ∪ ([1, ∞) + hull)"""
    extent = _hull_slice(spec.hull, lam.imag)
    if extent is None:
        return False
    left, right = extent
    return bool(lam.real + 1 <= right or lam.real - 1 >= left)


def stokes_member(essran: EssentialRange, lam: Union[complex, CVector]) -> Any:
    """Membership in the Stokes enclosure (vectorized)

    {Re λ < 0, d <= 1} ∪ [0, ∞) ∪ {Re λ >= 0, Im λ ≠ 0, d <= |λ|/|Im λ|}
    with d = dist(λ, essran U).
    """
    z = np.asarray(lam, dtype=np.complex128)
    d = np.asarray(essran.distance(z))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(z.imag != 0, np.abs(z) / np.abs(z.imag), np.inf)
    member = np.where(z.real < 0, d <= 1, (z.imag == 0) | (d <= ratio))
    return bool(member) if np.ndim(member) == 0 else member


def stokes_region(spec: EnclosureSpec, box: Box, resolution: Resolution) -> Raster:
    """Cellwise raster of the Stokes enclosure"""
    assert spec.essran is not None
    raster = Raster.empty(box, *resolution)
    raster.mask = np.asarray(stokes_member(spec.essran, raster.centers), dtype=bool)
    return raster


@dataclass(frozen=True)
class MultiplierBounds:
    """Relative bounds ‖Bg‖ <= a‖g‖ + b‖(D - λ)g‖, ‖Cf‖ <= c‖f‖ + d‖(A - λ)f‖ under the multiplier"""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def stokes(cls, phi: float) -> MultiplierBounds:
        """a = c = 0, b = d = 1/cos φ"""
        return cls(0.0, 1 / math.cos(phi), 0.0, 1 / math.cos(phi))


def rotated_distance(A: CMatrix, lam: complex, phi: float) -> float:
    """r = inf Re(e^{iφ} W(A - λ))"""
    M = matkernel.as_cmatrix(A) - lam * np.eye(A.shape[0])
    # inf Re(e^{iφ}z) = -max Re(e^{-iθ}z) at θ = -(φ + π)
    return -support_oracle(M)(-(phi + math.pi))[0]


def _resolvent_norm(D: Optional[CMatrix], essran: Optional[EssentialRange], lam: complex) -> float:
    if essran is not None:
        distance = float(essran.distance(lam))
    elif D is not None:
        distance = matkernel.sigma_min(matkernel.as_cmatrix(D) - lam * np.eye(D.shape[0]))
    else:
        raise ValueError("give D or its essential range")
    return math.inf if distance == 0 else 1 / distance


def stokes_multiplier_excludes(
    blocks: tuple[CMatrix, CMatrix, CMatrix, CMatrix],
    lam: complex,
    phi: float,
    bounds: MultiplierBounds,
    essran: Optional[EssentialRange] = None,
) -> bool:
    """(b + a/r)(d + c/r) < 1/‖(D - λ)^{-1}‖² for T = [[A, B], [C, D]]

    ‖(D - λ)^{-1}‖ is 1/dist(λ, essran) for a multiplication operator D,
    1/σ_min(D - λ) for a matrix D.

    Raises:
        NotApplicable: when r = inf Re(e^{iφ} W(A - λ)) <= 0
    """
    A, _, _, D = blocks
    r = rotated_distance(A, lam, phi)
    if r <= 0:
        raise NotApplicable(f"r = {r:.3e} <= 0 at λ = {lam}, φ = {phi}")
    norm = _resolvent_norm(D, essran, lam)
    if math.isinf(norm):
        return False
    return (bounds.b + bounds.a / r) * (bounds.d + bounds.c / r) < 1 / norm**2


def stokes_epsilon(r: float, bounds: MultiplierBounds, resolvent_norm: float) -> float:
    """ε = 1/((b + a/r)‖(D - λ)^{-1}‖²) of the multiplier diag(I, ε(D - λ)^{-1})"""
    if r <= 0:
        raise NotApplicable(f"r = {r:.3e} <= 0")
    return 1 / ((bounds.b + bounds.a / r) * resolvent_norm**2)


def _extent(values: Interval) -> tuple[float, float, bool]:
    """(min Re, max Re, real) of an interval or a hull"""
    if isinstance(values, tuple) and len(values) == 2 and all(
        isinstance(v, (int, float)) for v in values
    ):
        low, high = sorted(float(v) for v in values)
        return low, high, True
    z = np.atleast_1d(np.asarray(values, dtype=np.complex128))
    if z.size == 0:
        raise ValueError("empty range")
    return float(z.real.min()), float(z.real.max()), bool(np.all(z.imag == 0))


def gap_region(first: Interval, second: Interval, essential: bool = False) -> EnclosureSpec:
    """Gap enclosure of W(BT, B) for T = diag(T1, T2), B = diag(-I, I)

    a = sup Re(first), b = inf Re(second). For real ranges (selfadjoint T)
    the region is the pair of real half-lines (-∞, a] ∪ [b, ∞), otherwise the
    half-planes Re λ <= a, Re λ >= b. With `essential` the endpoints are
    a_e, b_e of the essential ranges and the region bounds W_e(BT, B).

    Raises:
        GapViolated: when a >= b
    """
    _, a, real_first = _extent(first)
    b, _, real_second = _extent(second)
    return EnclosureSpec(
        "gap",
        params={"a": a, "b": b, "essential": essential, "selfadjoint": real_first and real_second},
    )


def gap_region_from_blocks(T1: CMatrix, T2: CMatrix, essential: bool = False) -> EnclosureSpec:
    """gap_region from the real parts of W(T1) and W(T2)"""
    T1 = matkernel.as_cmatrix(T1)
    T2 = matkernel.as_cmatrix(T2)
    a = matkernel.hermitian_max((T1 + T1.conj().T) / 2)[0]
    b = -matkernel.hermitian_max(-(T2 + T2.conj().T) / 2)[0]
    selfadjoint = matkernel.is_hermitian(T1) and matkernel.is_hermitian(T2)
    if a >= b:
        raise GapViolated(f"gap needs sup Re W(T1) < inf Re W(T2), got {a} >= {b}")
    return EnclosureSpec(
        "gap", params={"a": a, "b": b, "essential": essential, "selfadjoint": selfadjoint}
    )


def gap_multiplier(p: int, q: int) -> CMatrix:
    """diag(-I_p, I_q)"""
    return np.diag(np.concatenate((-np.ones(p), np.ones(q)))).astype(np.complex128)


def gap_member(spec: EnclosureSpec, lam: Union[complex, CVector], slack: float = 0.0) -> Any:
    """Membership in a gap region (vectorized), real half-lines thickened by `slack`"""
    z = np.asarray(lam, dtype=np.complex128)
    a, b = spec.params["a"], spec.params["b"]
    member = (z.real <= a + slack) | (z.real >= b - slack)
    if spec.params.get("selfadjoint"):
        member &= np.abs(z.imag) <= slack
    return bool(member) if np.ndim(member) == 0 else member


def enclosure_member(spec: EnclosureSpec, lam: complex, slack: float = 0.0) -> bool:
    """Membership of λ in the enclosure described by `spec`"""
    if spec.kind == "dirac":
        return not dirac_excluded(spec, lam).excluded
    if spec.kind == "half_lines":
        return half_lines_member(spec, lam)
    if spec.kind == "stokes":
        assert spec.essran is not None
        return bool(stokes_member(spec.essran, lam))
    return bool(gap_member(spec, lam, slack))


def enclosure_region(
    spec: EnclosureSpec, box: Box, resolution: Resolution, threads: Optional[int] = None
) -> Raster:
    """Raster of the enclosure, real half-lines kept within one cell diagonal"""
    if spec.kind == "dirac":
        return dirac_region(spec, box, resolution, threads=threads)
    if spec.kind == "stokes":
        return stokes_region(spec, box, resolution)
    raster = Raster.empty(box, *resolution)
    if spec.kind == "gap":
        raster.mask = np.asarray(gap_member(spec, raster.centers, raster.diagonal / 2), dtype=bool)
    else:
        raster.mask = np.vectorize(lambda z: half_lines_member(spec, z))(raster.centers)
    return raster


def multiplier_spectrum_estimate(
    T: CMatrix,
    multipliers: Sequence[CMatrix],
    box: Box,
    resolution: Resolution,
    threads: Optional[int] = None,
) -> Raster:
    """Intersection of W(BT, B) over the multipliers, an outer estimate of σ(T)

    Raises:
        SingularB: for a multiplier with condition number above 1e10
    """
    T = matkernel.as_cmatrix(T)
    if not multipliers:
        raise ValueError("give at least one multiplier")
    result: Optional[Raster] = None
    for k, B in enumerate(multipliers):
        B = matkernel.as_cmatrix(B)
        condition = matkernel.condition_number(B)
        if condition > matkernel.SINGULAR_COND:
            raise SingularB(condition)
        raster = pencil_range(PencilSection(B @ T, B), box, resolution, threads=threads)
        log_event("multiplier.members", raster.count, step=f"multiplier={k}")
        result = raster if result is None else raster_intersect(result, raster)
    assert result is not None
    return result


def polar_multipliers(T: CMatrix, points: Sequence[complex]) -> list[CMatrix]:
    """The identity followed by the polar multipliers of T at every point"""
    T = matkernel.as_cmatrix(T)
    return [np.eye(T.shape[0], dtype=np.complex128)] + [
        matkernel.polar_multiplier(T, lam) for lam in points
    ]


def multiplier_resolvent_bound(T: CMatrix, B: CMatrix, lam: complex) -> ResolventBound:
    """‖(T - λ)^{-1}‖ <= ‖B‖ ‖(BT - λB)^{-1}‖, the latter bounded through W(BT, B)

    For B = diag(a, d) this is max(|a|, |d|)/(dist(0, conv{a, d}) dist(λ, W(BT, B))).
    """
    T = matkernel.as_cmatrix(T)
    B = matkernel.as_cmatrix(B)
    pencil = resolvent_bound(PencilSection(B @ T, B), lam)
    smallest = matkernel.sigma_min(T - lam * np.eye(T.shape[0]))
    actual = math.inf if smallest == 0 else 1 / smallest
    bound = None if pencil.bound is None else pencil.bound * matkernel.spectral_norm(B)
    log_event("multiplier.bound", bound, step=str(lam), level=logging.DEBUG)
    return ResolventBound(bound, actual, pencil.exact_distance)


def hull_of(points: Sequence[complex]) -> EssentialRange:
    """Essential range descriptor of the convex hull of `points`"""
    vertices = convex_hull(points)
    if vertices.size >= 3:
        return EssentialRange(polygon=vertices)
    return EssentialRange(points=vertices)
