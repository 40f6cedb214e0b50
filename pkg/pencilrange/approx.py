"""Galerkin and truncation sweeps, cluster classification and pollution injection"""
from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from os import PathLike
from typing import IO, Any, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.ndimage
import scipy.optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from tqdm import tqdm  # type: ignore

from . import matkernel
from .errors import (
    ConfigError,
    NoOppositePair,
    OutsideEssentialRange,
    PencilRangeError,
    SingularB,
    UnsupportedFamily,
)
from .family import DiagonalFamily
from .ranges import PencilSection, nrange_gap
from .region import Box, Raster, complex_from_json, complex_to_json
from .types import (
    ClusterDict,
    CMatrix,
    CVector,
    LevelDict,
    PencilFamily,
    SpectralRunDict,
    TruncationSpec,
)
from .utils.concurrency import parallel_map
from .utils.metrics import log_event

DEFAULT_TOL_DRIFT = 1e-3
DEFAULT_MIN_PERSISTENCE = 2
FALLBACK_GRID = 64
INJECTION_TOL = 1e-9
ANTIPARALLEL_TOL = 1e-9


class Classification(str, Enum):
    """Verdict on an eigenvalue cluster"""

    CONVERGED = "converged"
    SPURIOUS = "spurious-candidate"
    UNRESOLVED = "unresolved"


@dataclass
class Level:
    """Eigenvalues of one section of a sweep

    Arguments:
        spec: the truncation
        eigenvalues: all eigenvalues of the section, or the σ_min minima when `fallback`
        fallback: eigenvalues were located by minimizing σ_min(A - λB)
        error: message of the error that stopped this level
    """

    spec: TruncationSpec
    eigenvalues: CVector
    fallback: bool = False
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> LevelDict:
        spec: dict[str, Any] = {"n": self.spec.n}
        if self.spec.half_length is not None:
            spec["half_length"] = self.spec.half_length
        return {
            "spec": spec,
            "eigenvalues": [complex_to_json(z) for z in self.eigenvalues],
            "fallback": self.fallback,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: LevelDict) -> Level:
        spec = data.get("spec", {})
        return cls(
            TruncationSpec(n=int(spec["n"]), half_length=spec.get("half_length")),
            np.array(
                [complex_from_json(z) for z in data.get("eigenvalues", [])],
                dtype=np.complex128,
            ),
            bool(data.get("fallback", False)),
            data.get("error"),
        )


@dataclass
class Cluster:
    """Eigenvalues of consecutive levels linked into one trail

    Arguments:
        location: member eigenvalue at the last level of the longest run
        persistence: number of consecutive levels of the longest run
        drift: distances between the trail positions of consecutive levels in the run
        classification: verdict of :func:`classify`
        levels: indices of the levels in the run
    """

    location: complex
    persistence: int
    drift: list[float]
    classification: Classification = Classification.UNRESOLVED
    levels: list[int] = field(default_factory=list)

    @property
    def max_drift(self) -> float:
        return max(self.drift, default=0.0)

    def to_dict(self) -> ClusterDict:
        return {
            "location": complex_to_json(self.location),
            "persistence": self.persistence,
            "drift": list(self.drift),
            "classification": self.classification.value,
        }


@dataclass
class Reference:
    """What a sweep is compared with

    Arguments:
        spectrum: known eigenvalues of the limit problem
        zone: raster where pollution may occur, e.g. an estimate of W_e(A, B)
    """

    spectrum: Optional[CVector] = None
    zone: Optional[Raster] = None

    def on_spectrum(self, z: complex, radius: float) -> bool:
        if self.spectrum is None or self.spectrum.size == 0:
            return False
        return bool(np.min(np.abs(self.spectrum - z)) <= radius)

    def in_zone(self, z: complex) -> bool:
        return self.zone is None or self.zone.contains(z, dilation=1)


@dataclass
class SpectralRun:
    """Eigenvalues of a family over a sequence of truncations"""

    family: str
    levels: list[Level]
    reference: Optional[Reference] = None
    clusters: list[Cluster] = field(default_factory=list)
    degenerate: bool = False

    @property
    def specs(self) -> list[TruncationSpec]:
        return [level.spec for level in self.levels]

    @property
    def eigenvalues(self) -> list[CVector]:
        return [level.eigenvalues for level in self.levels]

    @property
    def failed(self) -> bool:
        """True if any level stopped with an error"""
        return any(level.failed for level in self.levels)

    def by_classification(self, verdict: Classification) -> list[Cluster]:
        return [c for c in self.clusters if c.classification is verdict]

    def to_dict(self) -> SpectralRunDict:
        return {
            "family": self.family,
            "levels": [level.to_dict() for level in self.levels],
            "clusters": [cluster.to_dict() for cluster in self.clusters],
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, data: SpectralRunDict) -> SpectralRun:
        clusters = [
            Cluster(
                complex_from_json(c["location"]),
                c["persistence"],
                list(c["drift"]),
                Classification(c["classification"]),
            )
            for c in data.get("clusters", [])
        ]
        return cls(
            data.get("family", ""),
            [Level.from_dict(level) for level in data.get("levels", [])],
            clusters=clusters,
            degenerate=data.get("degenerate", False),
        )

    def to_json(self, stream: IO[str]) -> None:
        json.dump(self.to_dict(), stream, indent=2)

    def to_csv(self, stream: IO[str]) -> None:
        """One row per eigenvalue per level"""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["level", "n", "half_length", "index", "re", "im", "fallback"])
        for k, level in enumerate(self.levels):
            half_length = "" if level.spec.half_length is None else repr(float(level.spec.half_length))
            for index, z in enumerate(level.eigenvalues):
                writer.writerow(
                    [k, level.spec.n, half_length, index, repr(float(z.real)), repr(float(z.imag)), int(level.fallback)]
                )

    def save(self, json_path: PathLike[str] | str, csv_path: PathLike[str] | str | None = None) -> None:
        with open(json_path, "w", encoding="utf-8") as stream:
            self.to_json(stream)
        if csv_path is not None:
            with open(csv_path, "w", encoding="utf-8", newline="") as stream:
                self.to_csv(stream)


def _check_resolutions(specs: Sequence[TruncationSpec]) -> None:
    if len(specs) < 3:
        raise ValueError(f"a sweep needs at least 3 truncations, got {len(specs)}")
    for coarse, fine in zip(specs, specs[1:]):
        length_coarse = coarse.half_length or 0.0
        length_fine = fine.half_length or 0.0
        grows = fine.n >= coarse.n and length_fine >= length_coarse
        if not grows or (fine.n, length_fine) == (coarse.n, length_coarse):
            raise ValueError(f"truncations must increase strictly, got {coarse} then {fine}")


def sigma_min_minima(
    P: PencilSection, box: Box, resolution: int = FALLBACK_GRID
) -> CVector:
    """Local minima of λ ↦ σ_min(A - λB) on a grid, refined by Nelder-Mead

    Only minima where σ_min drops below 1e-6 ‖(A, B)‖ are reported.
    """
    raster = Raster.empty(box, resolution, resolution)
    centers = raster.centers
    values = np.vectorize(lambda lam: matkernel.sigma_min(P.at(lam)))(centers)
    minima = values == scipy.ndimage.minimum_filter(values, size=3, mode="nearest")
    threshold = 1e-6 * max(matkernel.spectral_norm(P.A), matkernel.spectral_norm(P.B), 1.0)
    found: list[complex] = []
    for lam in centers[minima]:
        result = scipy.optimize.minimize(
            lambda v: matkernel.sigma_min(P.at(complex(v[0], v[1]))),
            np.array([lam.real, lam.imag]),
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14},
        )
        z = complex(result.x[0], result.x[1])
        if result.fun <= threshold and all(abs(z - w) > raster.diagonal for w in found):
            found.append(z)
    return np.array(sorted(found, key=lambda z: (z.real, z.imag)), dtype=np.complex128)


def _default_fallback_box(P: PencilSection) -> Box:
    """Box around the finite QZ eigenvalues of (A, B)"""
    values = scipy.linalg.eigvals(P.A, P.B)
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return Box(-1.0, 1.0, -1.0, 1.0)
    return Box.around(finite, margin=1.0)


def solve_level(
    F: PencilFamily,
    spec: TruncationSpec,
    fallback_box: Optional[Box] = None,
    backend: Optional[str] = None,
) -> Level:
    """Eigenvalues of one section, errors kept on the level"""
    try:
        section = F.section(spec)
        try:
            values = matkernel.generalized_eig(section.A, section.B, backend)
            level = Level(spec, np.sort_complex(values))
        except SingularB as exc:
            box = fallback_box if fallback_box is not None else _default_fallback_box(section)
            log_event("level.fallback", exc.condition, step=str(spec))
            level = Level(spec, sigma_min_minima(section, box), fallback=True)
    except ConfigError:
        raise
    except (PencilRangeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log_event("level.error", type(exc).__name__, message=str(exc), step=str(spec), level=logging.ERROR)
        return Level(spec, np.zeros(0, dtype=np.complex128), error=f"{type(exc).__name__}: {exc}")
    log_event("level.dimension", section.n, step=str(spec))
    log_event("level.eigenvalues", level.eigenvalues.size, step=str(spec), level=logging.DEBUG)
    return level


def _distance_to_zero(M: CMatrix) -> float:
    return max(nrange_gap(M).lower, 0.0)


def is_degenerate(F: PencilFamily, coarse: TruncationSpec, fine: TruncationSpec) -> bool:
    """Both 0 ∉ W(A_n) and 0 ∉ W(B_n), yet both distances at least halve from coarse to fine

    A sweep of such a pair carries no information about W(A, B), which may be ℂ
    in the limit.
    """
    first, last = F.section(coarse), F.section(fine)
    a0, b0 = _distance_to_zero(first.A), _distance_to_zero(first.B)
    a1, b1 = _distance_to_zero(last.A), _distance_to_zero(last.B)
    return min(a0, b0, a1, b1) > 0 and a1 < a0 / 2 and b1 < b0 / 2


def run_sweep(
    F: PencilFamily,
    specs: Sequence[TruncationSpec],
    reference: Optional[Reference] = None,
    threads: Optional[int] = None,
    fallback_box: Optional[Box] = None,
    backend: Optional[str] = None,
    progress: bool = False,
) -> SpectralRun:
    """Eigenvalues of F at every truncation, levels computed concurrently

    A level whose eigensolve fails records the error and the sweep carries on.

    Raises:
        ValueError: for fewer than 3 truncations or a non-increasing sequence
    """
    specs = list(specs)
    _check_resolutions(specs)
    with tqdm(total=len(specs), disable=not progress, desc=F.id) as bar:

        def level(spec: TruncationSpec) -> Level:
            result = solve_level(F, spec, fallback_box, backend)
            bar.update()
            return result

        levels = parallel_map(level, specs, threads)
    try:
        degenerate = is_degenerate(F, specs[0], specs[-1])
    except (PencilRangeError, ArithmeticError):
        degenerate = False
    if degenerate:
        log_event("run.degenerate", True, step=F.id, level=logging.WARNING)
    return SpectralRun(F.id, levels, reference, degenerate=degenerate)


def _trails(levels: list[Level], radius: float) -> list[list[tuple[int, complex]]]:
    """Single-linkage components of eigenvalues within `radius` in consecutive levels"""
    points = [(k, z) for k, level in enumerate(levels) for z in level.eigenvalues]
    if not points:
        return []
    coords = np.array([[z.real, z.imag] for _, z in points])
    tree = cKDTree(coords)
    pairs = [
        (i, j)
        for i, j in tree.query_pairs(radius, output_type="ndarray")
        if abs(points[i][0] - points[j][0]) == 1
    ]
    count = len(points)
    rows = np.array([p[0] for p in pairs], dtype=int)
    cols = np.array([p[1] for p in pairs], dtype=int)
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(count, count))
    _, labels = connected_components(graph, directed=False)
    trails: dict[int, list[tuple[int, complex]]] = {}
    for label, point in zip(labels, points):
        trails.setdefault(int(label), []).append(point)
    return [sorted(trail, key=lambda p: p[0]) for _, trail in sorted(trails.items())]


def _trace(trail: list[tuple[int, complex]]) -> Cluster:
    """Longest run of consecutive levels of a trail, ties broken by the latest run"""
    per_level: dict[int, list[complex]] = {}
    for k, z in trail:
        per_level.setdefault(k, []).append(z)
    runs: list[list[int]] = []
    for k in sorted(per_level):
        if runs and runs[-1][-1] == k - 1:
            runs[-1].append(k)
        else:
            runs.append([k])
    run = max(reversed(runs), key=len)
    positions: list[complex] = []
    for k in run:
        members = np.array(per_level[k])
        target = positions[-1] if positions else complex(np.mean(members))
        positions.append(complex(members[np.argmin(np.abs(members - target))]))
    drift = [abs(b - a) for a, b in zip(positions, positions[1:])]
    return Cluster(positions[-1], len(run), drift, levels=run)


def classify(
    run: SpectralRun,
    tol_drift: float = DEFAULT_TOL_DRIFT,
    min_persistence: int = DEFAULT_MIN_PERSISTENCE,
    cluster_radius: Optional[float] = None,
) -> SpectralRun:
    """Link eigenvalues across levels into clusters and classify them

    A cluster is stationary when it persists over `min_persistence` consecutive
    levels with drift at most `tol_drift`. Stationary clusters are converged
    unless the reference lists a spectrum they miss while lying in the
    pollution zone; drifting clusters in the zone are spurious candidates,
    drifting clusters on the reference spectrum stay unresolved.
    """
    radius = 10 * tol_drift if cluster_radius is None else cluster_radius
    reference = run.reference
    clusters = []
    for trail in _trails(run.levels, radius):
        cluster = _trace(trail)
        stationary = cluster.persistence >= min_persistence and cluster.max_drift <= tol_drift
        if reference is None:
            verdict = Classification.CONVERGED if stationary else Classification.UNRESOLVED
        else:
            on_spectrum = reference.on_spectrum(cluster.location, radius)
            in_zone = reference.in_zone(cluster.location)
            if stationary:
                spurious = reference.spectrum is not None and not on_spectrum and in_zone
                verdict = Classification.SPURIOUS if spurious else Classification.CONVERGED
            elif on_spectrum or not in_zone:
                verdict = Classification.UNRESOLVED
            else:
                verdict = Classification.SPURIOUS
        cluster.classification = verdict
        log_event(
            "cluster.classification",
            verdict.value,
            message=complex_to_json(cluster.location),
            step=run.family,
            level=logging.DEBUG,
        )
        clusters.append(cluster)
    clusters.sort(key=lambda c: (c.location.real, c.location.imag))
    run.clusters = clusters
    for verdict in Classification:
        log_event("run.clusters", len(run.by_classification(verdict)), step=verdict.value)
    return run


@dataclass(eq=False)
class Injection:
    """Compression of a diagonal family to span{e_1, ..., e_N, x_1, ..., x_m}

    Arguments:
        basis: orthonormal columns e_1, ..., e_N, x_1, ..., x_m
        section: the compressed pencil (Q^H A Q, Q^H B Q)
        targets: injected values, one per vector x
        supports: 1-based coordinate indices carrying each x
        weights: |coefficient|² of each x on its support
        noop: True when every target already was a base eigenvalue
    """

    basis: CMatrix
    section: PencilSection
    targets: list[complex]
    supports: list[tuple[int, ...]]
    weights: list[tuple[float, ...]]
    noop: bool = False


def _opposite_pair(d: CVector, scale: float) -> Optional[tuple[tuple[int, ...], tuple[float, ...]]]:
    for j in range(d.size):
        if abs(d[j]) <= INJECTION_TOL * scale:
            return (j,), (1.0,)
    for j, k in itertools.combinations(range(d.size), 2):
        product = d[j] * np.conj(d[k])
        if product.real < 0 and abs(product.imag) <= ANTIPARALLEL_TOL * abs(product):
            total = abs(d[j]) + abs(d[k])
            return (j, k), (abs(d[k]) / total, abs(d[j]) / total)
    return None


def _opposite_triple(d: CVector) -> Optional[tuple[tuple[int, ...], tuple[float, ...]]]:
    for triple in itertools.combinations(range(d.size), 3):
        values = d[list(triple)]
        system = np.array([values.real, values.imag, np.ones(3)])
        if abs(np.linalg.det(system)) < 1e-14 * max(np.max(np.abs(values)) ** 2, 1e-300):
            continue
        weights = np.linalg.solve(system, np.array([0.0, 0.0, 1.0]))
        if np.all(weights >= 0):
            return triple, tuple(float(w) for w in weights)
    return None


def inject_pollution(
    F: PencilFamily,
    base_N: int,
    targets: Sequence[complex],
    search_depth: int,
    offset: int = 0,
    zone: Optional[Raster] = None,
) -> Injection:
    """Add unit vectors x ⊥ e_1, ..., e_N with <(A - μB)x, x> = 0 for every target μ

    Each x combines two tail coordinates e_j, e_k, N + offset < j, k <= N +
    offset + search_depth, whose values a - μb point in opposite directions,
    or three coordinates whose values surround 0. The compression then has μ
    as an eigenvalue while the base eigenvalues are unchanged. Targets use
    disjoint coordinates.

    Raises:
        UnsupportedFamily: for families other than DiagonalFamily
        OutsideEssentialRange: for a target outside `zone`
        NoOppositePair: when the tail up to `search_depth` holds no suitable coordinates
    """
    if not isinstance(F, DiagonalFamily):
        raise UnsupportedFamily(f"pollution injection needs a diagonal family, got {F.kind}")
    if base_N < 1 or search_depth < 1 or offset < 0:
        raise ValueError(f"invalid injection sizes N={base_N}, depth={search_depth}, offset={offset}")
    total = base_N + offset + search_depth
    a, b = F.coefficients(np.arange(1, total + 1))
    base = np.divide(a[:base_N], b[:base_N], out=np.full(base_N, np.inf, dtype=np.complex128), where=b[:base_N] != 0)
    used: set[int] = set()
    columns = [np.eye(total, base_N, dtype=np.complex128)]
    injected: list[complex] = []
    supports: list[tuple[int, ...]] = []
    weights: list[tuple[float, ...]] = []
    tail = np.arange(base_N + offset, total)
    for mu in targets:
        mu = complex(mu)
        if zone is not None and not zone.contains(mu):
            raise OutsideEssentialRange(f"target {mu} lies outside the pollution zone")
        if np.any(np.abs(base - mu) <= 1e-8):
            log_event("inject.noop", complex_to_json(mu), step=F.id)
            continue
        free = np.array([i for i in tail if i not in used], dtype=int)
        d = a[free] - mu * b[free]
        scale = max(float(np.max(np.abs(d), initial=0.0)), 1e-300)
        found = _opposite_pair(d, scale) or _opposite_triple(d)
        if found is None:
            raise NoOppositePair(
                f"no tail coordinates in {base_N + offset + 1}..{total} surround 0 for μ = {mu}"
            )
        picks, picked_weights = found
        indices = tuple(int(free[p]) for p in picks)
        x = np.zeros(total, dtype=np.complex128)
        x[list(indices)] = np.sqrt(picked_weights)
        columns.append(x[:, None])
        used.update(indices)
        injected.append(mu)
        supports.append(tuple(i + 1 for i in indices))
        weights.append(tuple(picked_weights))
        log_event("inject.target", list(supports[-1]), message=complex_to_json(mu), step=F.id)
    Q = np.hstack(columns)
    section = PencilSection((Q.conj().T * a) @ Q, (Q.conj().T * b) @ Q)
    return Injection(Q, section, injected, supports, weights, noop=not injected)


def injected_sweep(
    F: PencilFamily,
    base_Ns: Sequence[int],
    targets: Sequence[complex],
    search_depth: int,
    offset: int = 0,
    reference: Optional[Reference] = None,
    zone: Optional[Raster] = None,
) -> SpectralRun:
    """SpectralRun of injected compressions at every base size"""
    levels = []
    for base_N in base_Ns:
        injection = inject_pollution(F, base_N, targets, search_depth, offset, zone)
        values = matkernel.generalized_eig(injection.section.A, injection.section.B)
        spec = TruncationSpec(n=injection.section.n)
        log_event("level.dimension", injection.section.n, step=str(spec))
        levels.append(Level(spec, np.sort_complex(values)))
    return SpectralRun(F.id, levels, reference)

