"""Figure presets: Stokes enclosures, Dirac sectors and a JT sweep"""
from __future__ import annotations

import math
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import approx, enclosures, gallery, matkernel
from .region import DEFAULT_RESOLUTION, Box, EssentialRange, Raster
from .types import CVector, TruncationSpec
from .utils.metrics import log_event
from .utils.svg import CurveLayer, Layer, PointLayer, RasterLayer, Style, write_svg

STOKES_U = complex(-1, 1)
STOKES_ANGLES = tuple(k * math.pi / 6 for k in range(7))
STOKES_RADII = (1.0, 3.0, 10.0)
SYMBOL_POINTS = 2000
SYMBOL_K_MAX = 20.0
CIRCLE_SAMPLES = 24
DIRAC_HULL = (complex(-0.3, 0), complex(0.3, 0.4))
JT_SIZES = (10, 20, 40)
JT_TARGETS = (0.25, 0.5, 0.75)
JT_BASE = 20

Resolution = tuple[int, int]

CLASSIFICATION_COLORS = {
    approx.Classification.CONVERGED: "tab:blue",
    approx.Classification.SPURIOUS: "tab:red",
    approx.Classification.UNRESOLVED: "tab:orange",
}


def symbol_curve(U0: complex, gamma_delta: complex, points: int = SYMBOL_POINTS) -> CVector:
    """Both branches of the Stokes symbol for k ∈ [0, SYMBOL_K_MAX], NaN-separated"""
    k = np.linspace(0.0, SYMBOL_K_MAX, points)
    upper, lower = gallery.stokes_symbol(U0, gamma_delta, k)
    return np.concatenate((upper, [np.nan], lower)).astype(np.complex128)


@dataclass
class StokesPanel:
    """Stokes enclosure of one essential range and the symbol curves inside it"""

    essran: EssentialRange
    region: Raster
    curves: dict[str, CVector]


def stokes_const(
    box: Optional[Box] = None, resolution: Optional[Resolution] = None
) -> StokesPanel:
    """U ≡ -1 + i with γδ = e^{iφ} for φ = 0, π/6, ..., π"""
    essran = EssentialRange.of(STOKES_U)
    box = box or Box(-3.0, 5.0, -3.0, 4.0)
    nx, ny = resolution or DEFAULT_RESOLUTION
    region = enclosures.stokes_region(enclosures.EnclosureSpec("stokes", essran), box, (nx, ny))
    curves = {
        f"φ = {phi:.4f}": symbol_curve(STOKES_U, np.exp(1j * phi)) for phi in STOKES_ANGLES
    }
    return StokesPanel(essran, region, curves)


def stokes_circle(
    radius: float, box: Optional[Box] = None, resolution: Optional[Resolution] = None
) -> StokesPanel:
    """essran(U) the circle |z| = R, γδ = 1, symbol curves for U sampled on the circle"""
    essran = EssentialRange(center=0j, radius=radius)
    extent = radius + 2.0
    box = box or Box(-extent, extent, -extent, extent)
    nx, ny = resolution or DEFAULT_RESOLUTION
    region = enclosures.stokes_region(enclosures.EnclosureSpec("stokes", essran), box, (nx, ny))
    angles = 2 * math.pi * np.arange(CIRCLE_SAMPLES) / CIRCLE_SAMPLES
    curves = {
        f"U = {radius * np.exp(1j * t):.3f}": symbol_curve(radius * np.exp(1j * t), 1.0, 400)
        for t in angles
    }
    return StokesPanel(essran, region, curves)


def hole_near_origin(panel: StokesPanel, radius: float) -> bool:
    """True if some cell within |λ| < R/2 is excluded"""
    near = np.abs(panel.region.centers) < radius / 2
    return bool(np.any(near & ~panel.region.mask))


def dirac_sectors(
    box: Optional[Box] = None,
    resolution: Optional[Resolution] = None,
    threads: Optional[int] = None,
) -> tuple[Raster, CVector]:
    """Σ̃ for conv(essran V) = [-0.3, 0.3 + 0.4i] and a Dirac section with V on that segment"""
    essran = EssentialRange(polygon=np.asarray(DIRAC_HULL))
    spec = enclosures.EnclosureSpec("dirac", essran)
    box = box or Box(-4.0, 4.0, -2.0, 2.0)
    resolution = resolution or DEFAULT_RESOLUTION
    region = enclosures.dirac_region(spec, box, resolution, threads=threads)
    start, stop = DIRAC_HULL

    def potential(x: np.ndarray) -> np.ndarray:  # type: ignore[type-arg]
        return start + (stop - start) * (1 + np.tanh(x)) / 2

    family = gallery.dirac1d(potential, essran)
    section = family.section(TruncationSpec(n=200, half_length=10.0))
    return region, matkernel.generalized_eig(section.A, section.B)


def jt_sweep(threads: Optional[int] = None) -> tuple[approx.SpectralRun, approx.SpectralRun]:
    """The JT pencil sweep and the operator form with pollution injected at 0.25, 0.5, 0.75"""
    pencil = approx.classify(
        approx.run_sweep(
            gallery.jt_pencil(), [TruncationSpec(n=2 * n) for n in JT_SIZES], threads=threads
        ),
        min_persistence=1,
    )
    k = np.arange(1, 4 * JT_BASE + 1, dtype=float)
    spectrum = np.concatenate((k, -k)).astype(np.complex128)
    operator = approx.classify(
        approx.injected_sweep(
            gallery.jt_operator(),
            [JT_BASE, 2 * JT_BASE, 4 * JT_BASE],
            JT_TARGETS,
            search_depth=16,
            reference=approx.Reference(spectrum=spectrum),
        )
    )
    return pencil, operator


def sweep_layers(run: approx.SpectralRun) -> list[Layer]:
    """Eigenvalue trails of every level, cluster locations colored by classification"""
    layers: list[Layer] = []
    if run.reference is not None and run.reference.zone is not None:
        layers.append(RasterLayer(run.reference.zone, color="0.85", gid="zone"))
    for index, level in enumerate(run.levels):
        layers.append(PointLayer(level.eigenvalues, color="0.5", size=4.0, gid=f"level-{index}"))
    for verdict, color in CLASSIFICATION_COLORS.items():
        clusters = run.by_classification(verdict)
        points = np.asarray([c.location for c in clusters], dtype=np.complex128)
        if points.size:
            layers.append(PointLayer(points, color=color, gid=verdict.value, label=verdict.value))
    return layers


def _panel_layers(panel: StokesPanel) -> list[Layer]:
    layers: list[Layer] = [RasterLayer(panel.region, gid="enclosure")]
    colors = [f"C{k % 10}" for k in range(len(panel.curves))]
    for index, ((name, curve), color) in enumerate(zip(panel.curves.items(), colors)):
        layers.append(CurveLayer(curve, color=color, gid=f"symbol-{index}", width=0.8, label=name))
    return layers


def _render_stokes_const(
    directory: Path, threads: Optional[int], resolution: Optional[Resolution], box: Optional[Box]
) -> list[Path]:
    panel = stokes_const(box, resolution)
    path = directory / "stokes-const.svg"
    style = Style(title="Stokes enclosure, U = -1 + i")
    return [write_svg(path, _panel_layers(panel), panel.region.box, style)]


def _render_stokes_circles(
    directory: Path, threads: Optional[int], resolution: Optional[Resolution], box: Optional[Box]
) -> list[Path]:
    paths = []
    for radius in STOKES_RADII:
        panel = stokes_circle(radius, box, resolution)
        log_event("figure.hole", hole_near_origin(panel, radius), step=f"R={radius:g}")
        path = directory / f"stokes-circles-R{radius:g}.svg"
        style = Style(title=f"Stokes enclosure, essran(U) = {{|z| = {radius:g}}}")
        paths.append(write_svg(path, _panel_layers(panel), panel.region.box, style))
    return paths


def _render_dirac_sectors(
    directory: Path, threads: Optional[int], resolution: Optional[Resolution], box: Optional[Box]
) -> list[Path]:
    region, eigenvalues = dirac_sectors(box, resolution, threads)
    layers: list[Layer] = [
        RasterLayer(region, gid="sectors"),
        PointLayer(eigenvalues, gid="eigenvalues", size=4.0),
    ]
    style = Style(title="Dirac sector enclosure")
    return [write_svg(directory / "dirac-sectors.svg", layers, region.box, style)]


def _render_jt_sweep(
    directory: Path, threads: Optional[int], resolution: Optional[Resolution], box: Optional[Box]
) -> list[Path]:
    pencil, operator = jt_sweep(threads)
    paths = []
    for name, run in (("jt-pencil", pencil), ("jt-operator", operator)):
        extent = box or Box(-45.0, 45.0, -1.0, 1.0)
        style = Style(title=run.family, legend=True, height=3.0)
        paths.append(write_svg(directory / f"{name}.svg", sweep_layers(run), extent, style))
    return paths


FIGURES: dict[
    str,
    Callable[[Path, Optional[int], Optional[Resolution], Optional[Box]], list[Path]],
] = {
    "stokes-const": _render_stokes_const,
    "stokes-circles": _render_stokes_circles,
    "dirac-sectors": _render_dirac_sectors,
    "jt-sweep": _render_jt_sweep,
}


def render(
    name: str,
    directory: PathLike[str] | str,
    threads: Optional[int] = None,
    resolution: Optional[Resolution] = None,
    box: Optional[Box] = None,
) -> list[Path]:
    """Write the SVG files of a figure preset into `directory`

    Raises:
        KeyError: for an unknown preset
    """
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}, expected one of {sorted(FIGURES)}")
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    paths = FIGURES[name](target, threads, resolution, box)
    for path in paths:
        log_event("figure.written", str(path), step=name)
    return paths
