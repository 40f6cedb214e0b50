import numpy as np
import pytest

from pencilrange import approx, figures
from pencilrange.approx import Level, SpectralRun
from pencilrange.region import Box, EssentialRange, Raster
from pencilrange.types import TruncationSpec
from pencilrange.utils.svg import PointLayer, RasterLayer

SMALL = (24, 24)


def test_symbol_curve():
    """Test if both symbol branches are joined by a NaN separator"""
    curve = figures.symbol_curve(figures.STOKES_U, 1.0, points=50)

    assert curve.shape == (101,)
    assert np.isnan(curve[50])
    assert np.all(np.isfinite(curve[:50]))
    assert np.all(np.isfinite(curve[51:]))


def test_stokes_const():
    """Test if the constant-U panel has one curve per angle on the requested raster"""
    panel = figures.stokes_const(resolution=SMALL)

    assert len(panel.curves) == len(figures.STOKES_ANGLES)
    assert panel.region.nx == SMALL[0]


def test_stokes_circle():
    """Test if the circle panel uses the circle as essential range and samples U on it"""
    panel = figures.stokes_circle(3.0, resolution=SMALL)

    assert panel.essran.radius == 3.0
    assert len(panel.curves) == figures.CIRCLE_SAMPLES
    assert panel.region.box == Box(-5.0, 5.0, -5.0, 5.0)


def test_hole_near_origin():
    """Test if hole_near_origin looks at cells within half the radius only"""
    box = Box(-4.0, 4.0, -4.0, 4.0)
    ring = Raster.from_predicate(box, 40, 40, lambda z: np.abs(z) < 1.0)
    panel = figures.StokesPanel(EssentialRange(center=0j, radius=4.0), ring, {})

    assert figures.hole_near_origin(panel, 4.0)
    assert not figures.hole_near_origin(panel, 1.0)


def test_sweep_layers():
    """Test if a run is drawn as one layer per level and per classification"""
    levels = [
        Level(TruncationSpec(n=n), np.array([1.0, drift], dtype=np.complex128))
        for n, drift in ((4, 5.0), (8, 5.5), (16, 6.0))
    ]
    run = approx.classify(SpectralRun("synthetic", levels))

    layers = figures.sweep_layers(run)

    gids = [layer.gid for layer in layers]
    assert gids[:3] == ["level-0", "level-1", "level-2"]
    assert "converged" in gids
    assert all(isinstance(layer, PointLayer) for layer in layers)


def test_sweep_layers_zone():
    """Test if the pollution zone of the reference is drawn first"""
    zone = Raster.empty(Box(-1.0, 1.0, -1.0, 1.0), 4, 4)
    levels = [Level(TruncationSpec(n=4), np.array([0.5], dtype=np.complex128))]
    run = SpectralRun("synthetic", levels, approx.Reference(zone=zone))

    layers = figures.sweep_layers(run)

    assert isinstance(layers[0], RasterLayer)
    assert layers[0].gid == "zone"


def test_render_stokes_const(tmp_path):
    """Test if a preset writes its SVG into the output directory"""
    paths = figures.render("stokes-const", tmp_path / "figures", resolution=SMALL)

    assert paths == [tmp_path / "figures" / "stokes-const.svg"]
    assert paths[0].read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_render_unknown(tmp_path):
    """Test if an unknown preset raises a KeyError"""
    with pytest.raises(KeyError):
        figures.render("nope", tmp_path)
