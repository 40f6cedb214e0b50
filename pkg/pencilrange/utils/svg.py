"""Deterministic SVG figures of the complex plane"""
from __future__ import annotations

import io
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.axes import Axes
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

from ..region import Box, Raster
from ..types import CVector

# Fixed salt and no date metadata keep identical inputs byte-identical
SVG_RC = {"svg.hashsalt": "pencilrange", "svg.fonttype": "none", "path.simplify": False}
SVG_METADATA = {"Date": None, "Creator": None}


@dataclass(frozen=True, eq=False)
class RasterLayer:
    """Member cells of a raster filled with `color`"""

    raster: Raster
    color: str = "white"
    gid: str = "raster"
    alpha: float = 1.0


@dataclass(frozen=True, eq=False)
class CurveLayer:
    """Polyline through `points` (NaN entries break the line)"""

    points: CVector
    color: str = "black"
    gid: str = "curve"
    width: float = 1.0
    label: Optional[str] = None


@dataclass(frozen=True, eq=False)
class PointLayer:
    """One marker per point"""

    points: CVector
    color: str = "tab:red"
    gid: str = "points"
    size: float = 9.0
    label: Optional[str] = None


Layer = Union[RasterLayer, CurveLayer, PointLayer]


@dataclass(frozen=True)
class Style:
    """Figure-wide appearance"""

    title: str = ""
    background: str = "0.3"
    width: float = 6.0
    height: float = 6.0
    legend: bool = False


def _box_of(layers: Sequence[Layer]) -> Box:
    for layer in layers:
        if isinstance(layer, RasterLayer):
            return layer.raster.box
    points = np.concatenate(
        [np.asarray(layer.points, dtype=np.complex128).ravel() for layer in layers]
    )
    points = points[np.isfinite(points)]
    if points.size == 0:
        return Box(-1.0, 1.0, -1.0, 1.0)
    spread = max(float(np.ptp(points.real)), float(np.ptp(points.imag)), 1.0)
    return Box.around(points, margin=0.1 * spread)


def _draw(ax: Axes, layer: Layer) -> None:
    if isinstance(layer, RasterLayer):
        raster = layer.raster
        if raster.is_empty():
            return
        box = raster.box
        ax.imshow(
            raster.mask.astype(np.uint8),
            origin="lower",
            extent=(box.re_min, box.re_max, box.im_min, box.im_max),
            cmap=ListedColormap([(0.0, 0.0, 0.0, 0.0), layer.color]),
            vmin=0,
            vmax=1,
            interpolation="nearest",
            alpha=layer.alpha,
            aspect="auto",
            gid=layer.gid,
        )
    elif isinstance(layer, CurveLayer):
        points = np.asarray(layer.points, dtype=np.complex128)
        ax.plot(
            points.real,
            points.imag,
            color=layer.color,
            linewidth=layer.width,
            label=layer.label,
            gid=layer.gid,
        )
    else:
        points = np.asarray(layer.points, dtype=np.complex128).ravel()
        # one group per point, ids "<gid>.<k>"
        for k, z in enumerate(points[np.isfinite(points)]):
            ax.plot(
                [z.real],
                [z.imag],
                linestyle="none",
                marker="o",
                markersize=float(np.sqrt(layer.size)),
                markeredgewidth=0,
                color=layer.color,
                label=layer.label if k == 0 else None,
                gid=f"{layer.gid}.{k}",
            )


def emit_svg(
    layers: Sequence[Layer], box: Optional[Box] = None, style: Style = Style()
) -> str:
    """Render `layers` in order on the complex plane and return the SVG document

    Raises:
        ValueError: without layers or when raster layers disagree on the box
    """
    if not layers:
        raise ValueError("emit_svg needs at least one layer")
    boxes = {layer.raster.box for layer in layers if isinstance(layer, RasterLayer)}
    if len(boxes) > 1:
        raise ValueError(f"raster layers disagree on the box: {sorted(map(str, boxes))}")
    box = box or _box_of(layers)

    with matplotlib.rc_context(SVG_RC):
        figure = Figure(figsize=(style.width, style.height))
        FigureCanvasSVG(figure)
        ax = figure.add_subplot()
        ax.set_facecolor(style.background)
        for layer in layers:
            _draw(ax, layer)
        ax.set_xlim(box.re_min, box.re_max)
        ax.set_ylim(box.im_min, box.im_max)
        ax.set_xlabel("Re λ")
        ax.set_ylabel("Im λ")
        if style.title:
            ax.set_title(style.title)
        if style.legend and any(getattr(layer, "label", None) for layer in layers):
            ax.legend(loc="upper right", fontsize="small")
        buffer = io.StringIO()
        figure.savefig(buffer, format="svg", metadata=SVG_METADATA)
    return buffer.getvalue()


def write_svg(
    path: PathLike[str] | str,
    layers: Sequence[Layer],
    box: Optional[Box] = None,
    style: Style = Style(),
) -> Path:
    """emit_svg into `path`, creating its directory"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(emit_svg(layers, box, style), encoding="utf-8")
    return target
