import csv
import io

import numpy as np
import pytest

from pencilrange import approx, gallery
from pencilrange.approx import Classification, Level, Reference, SpectralRun
from pencilrange.errors import (
    ExpressionError,
    NoConvergence,
    NoOppositePair,
    OutsideEssentialRange,
    UnsupportedFamily,
)
from pencilrange.family import DiagonalFamily
from pencilrange.region import Box, Raster
from pencilrange.types import TruncationSpec
from pencilrange.utils.expr import Expression


class FailingFamily(DiagonalFamily):
    def section(self, spec):
        if spec.n == 8:
            raise NoConvergence("stuck")
        return super().section(spec)


def make_run(reference=None):
    """A stationary eigenvalue at 1 and one drifting 5 -> 5.5 -> 6"""
    levels = [
        Level(TruncationSpec(n=n), np.array([1.0, drift], dtype=np.complex128))
        for n, drift in ((4, 5.0), (8, 5.5), (16, 6.0))
    ]
    return SpectralRun("synthetic", levels, reference)


@pytest.fixture
def tail_values():
    k = np.arange(1, 41, dtype=float)
    return np.concatenate((k, -k)).astype(np.complex128)


def test_run_sweep_jt_pencil():
    """Test if every level of the JT pencil holds exactly ±1..±n"""
    run = approx.run_sweep(gallery.jt_pencil(), [TruncationSpec(n=2 * n) for n in (2, 4, 6)])
    assert run.family == "jt_pencil"
    assert not run.failed
    k = np.arange(1, 7, dtype=float)
    assert np.allclose(run.levels[-1].eigenvalues, np.sort_complex(np.concatenate((-k, k))))
    assert [spec.n for spec in run.specs] == [4, 8, 12]


def test_run_sweep_threads_agree():
    """Test if concurrent levels give the same run"""
    specs = [TruncationSpec(n=n) for n in (4, 6, 8)]
    serial = approx.run_sweep(gallery.unifposb(), specs, threads=1)
    threaded = approx.run_sweep(gallery.unifposb(), specs, threads=3)
    for a, b in zip(serial.eigenvalues, threaded.eigenvalues):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("sizes", [(4, 8), (4, 8, 8), (8, 4, 12)])
def test_run_sweep_invalid_resolutions(sizes):
    """Test if short or non-increasing sweeps are rejected"""
    with pytest.raises(ValueError):
        approx.run_sweep(gallery.unifposb(), [TruncationSpec(n=n) for n in sizes])


def test_run_sweep_keeps_failed_level():
    """Test if a failing level records its error and the sweep carries on"""
    family = FailingFamily(lambda n: n * 1.0, lambda n: 1.0, "failing")
    run = approx.run_sweep(family, [TruncationSpec(n=n) for n in (4, 8, 12)])
    assert run.failed
    assert run.levels[1].error == "NoConvergence: stuck"
    assert run.levels[1].eigenvalues.size == 0
    assert run.levels[2].eigenvalues.size == 12


def test_solve_level_fallback():
    """Test if a singular B falls back to the minima of σ_min(A - λB)"""
    family = DiagonalFamily(lambda n: n * 1.0, lambda n: np.where(n == 1, 0.0, 1.0))
    level = approx.solve_level(family, TruncationSpec(n=4))
    assert level.fallback
    assert not level.failed
    assert np.allclose(level.eigenvalues, [2.0, 3.0, 4.0], atol=1e-5)


def test_solve_level_expression_error():
    """Test if an invalid coefficient is raised instead of recorded as a failed level"""
    family = DiagonalFamily(Expression("sign(n, n)", "n", "family.a"), lambda n: np.ones(n.shape))

    with pytest.raises(ExpressionError) as excinfo:
        approx.solve_level(family, TruncationSpec(n=4))

    assert excinfo.value.field == "family.a"


def test_sigma_min_minima():
    """Test if the eigenvalues inside the box are located"""
    P = gallery.unifposb().section(TruncationSpec(n=3))
    found = approx.sigma_min_minima(P, Box(1.2, 1.8, -0.3, 0.3), resolution=32)
    # a_n/b_n = 2, 1.5, 4/3
    for expected in (4 / 3, 1.5):
        assert np.min(np.abs(found - expected)) < 1e-5


def test_degenerate_sweep():
    """Test if A = B = diag(1/n) is flagged degenerate"""
    specs = [TruncationSpec(n=n) for n in (4, 6, 10)]
    assert approx.is_degenerate(gallery.inverse_harmonic(), specs[0], specs[-1])
    assert approx.run_sweep(gallery.inverse_harmonic(), specs).degenerate
    assert not approx.is_degenerate(gallery.unifposb(), specs[0], specs[-1])


def test_classify_without_reference():
    """Test if stationary clusters converge and drifting ones stay unresolved"""
    run = approx.classify(make_run())
    converged = run.by_classification(Classification.CONVERGED)
    assert [c.location for c in converged] == [1.0]
    assert converged[0].persistence == 3
    assert converged[0].max_drift == 0
    assert len(run.by_classification(Classification.UNRESOLVED)) == 3


def test_classify_links_trail():
    """Test if a wider radius links the drifting eigenvalue into one trail"""
    run = approx.classify(make_run(), cluster_radius=1.0)
    unresolved = run.by_classification(Classification.UNRESOLVED)
    assert len(unresolved) == 1
    assert unresolved[0].location == 6.0
    assert unresolved[0].drift == pytest.approx([0.5, 0.5])
    assert unresolved[0].levels == [0, 1, 2]


def test_classify_drifting_in_zone_is_spurious():
    """Test if a drifting cluster off the known spectrum is a spurious candidate"""
    run = approx.classify(make_run(Reference(spectrum=np.array([1.0 + 0j]))), cluster_radius=1.0)
    assert [c.location for c in run.by_classification(Classification.CONVERGED)] == [1.0]
    assert [c.location for c in run.by_classification(Classification.SPURIOUS)] == [6.0]


def test_classify_stationary_off_spectrum():
    """Test if a stationary cluster missing the known spectrum is spurious inside the zone only"""
    reference = Reference(spectrum=np.array([2.0 + 0j]))
    run = approx.classify(make_run(reference))
    assert 1.0 in [c.location for c in run.by_classification(Classification.SPURIOUS)]
    zone = Raster.from_predicate(Box(4.0, 7.0, -1.0, 1.0), 30, 20, lambda z: np.ones(z.shape, bool))
    run = approx.classify(make_run(Reference(spectrum=np.array([2.0 + 0j]), zone=zone)))
    assert 1.0 in [c.location for c in run.by_classification(Classification.CONVERGED)]


def test_classify_min_persistence():
    """Test if a single level never makes a cluster stationary by default"""
    levels = [
        Level(TruncationSpec(n=n), np.array([float(n)], dtype=np.complex128)) for n in (2, 3, 4)
    ]
    run = approx.classify(SpectralRun("lonely", levels))
    assert all(c.classification is Classification.UNRESOLVED for c in run.clusters)
    run = approx.classify(SpectralRun("lonely", levels), min_persistence=1)
    assert all(c.classification is Classification.CONVERGED for c in run.clusters)


def test_inject_pair():
    """Test if an antiparallel tail pair injects the target and keeps the base"""
    injection = approx.inject_pollution(gallery.jt_operator(), 20, [0.5], search_depth=16)
    assert injection.basis.shape == (36, 21)
    assert injection.targets == [0.5]
    assert injection.supports == [(21, 22)]
    assert sum(injection.weights[0]) == pytest.approx(1.0)
    values = np.linalg.eigvals(injection.section.A)
    assert np.min(np.abs(values - 0.5)) < 1e-10
    for k in range(1, 11):
        assert np.min(np.abs(values - k)) < 1e-10
        assert np.min(np.abs(values + k)) < 1e-10
    assert np.allclose(injection.basis.conj().T @ injection.basis, np.eye(21))


def test_inject_triple():
    """Test if three coordinates surrounding 0 inject a complex target"""
    family = DiagonalFamily(lambda n: np.exp(2j * np.pi * n / 3), 1.0, "roots")
    injection = approx.inject_pollution(family, 3, [0.0], search_depth=3)
    assert len(injection.supports[0]) == 3
    assert injection.weights[0] == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    values = np.linalg.eigvals(injection.section.A)
    assert np.min(np.abs(values)) < 1e-10


def test_inject_noop():
    """Test if a target that already is an eigenvalue adds nothing"""
    injection = approx.inject_pollution(gallery.jt_operator(), 20, [1.0], search_depth=4)
    assert injection.noop
    assert injection.section.n == 20


def test_inject_errors():
    """Test if unsupported families, bad sizes, far targets and closed tails are rejected"""
    with pytest.raises(UnsupportedFamily):
        approx.inject_pollution(gallery.jt_pencil(), 10, [0.5], 4)
    with pytest.raises(ValueError):
        approx.inject_pollution(gallery.jt_operator(), 0, [0.5], 4)
    zone = Raster.empty(Box(-1.0, 1.0, -1.0, 1.0), 4, 4)
    with pytest.raises(OutsideEssentialRange):
        approx.inject_pollution(gallery.jt_operator(), 10, [0.5], 4, zone=zone)
    with pytest.raises(NoOppositePair):
        approx.inject_pollution(gallery.unifposb(), 10, [0.5], 8)


def test_injected_sweep_flags_targets(tail_values):
    """Test if injected targets come out as spurious candidates"""
    run = approx.classify(
        approx.injected_sweep(
            gallery.jt_operator(), [20, 40, 80], [0.25, 0.5], 16, reference=Reference(tail_values)
        )
    )
    spurious = sorted(c.location.real for c in run.by_classification(Classification.SPURIOUS))
    assert spurious == pytest.approx([0.25, 0.5])
    assert [level.spec.n for level in run.levels] == [22, 42, 82]
    assert all(
        c.classification is not Classification.SPURIOUS
        for c in run.clusters
        if np.min(np.abs(tail_values - c.location)) < 1e-6
    )


def test_spectral_run_dict_round_trip():
    """Test if levels and clusters survive to_dict and from_dict"""
    run = approx.classify(make_run())
    restored = SpectralRun.from_dict(run.to_dict())
    assert restored.family == "synthetic"
    assert [level.spec for level in restored.levels] == run.specs
    assert np.array_equal(restored.levels[2].eigenvalues, run.levels[2].eigenvalues)
    assert [c.classification for c in restored.clusters] == [c.classification for c in run.clusters]


def test_spectral_run_csv():
    """Test if the CSV has one row per eigenvalue per level"""
    stream = io.StringIO()
    make_run().to_csv(stream)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert rows[0] == ["level", "n", "half_length", "index", "re", "im", "fallback"]
    assert len(rows) == 1 + 6
    assert rows[1] == ["0", "4", "", "0", "1.0", "0.0", "0"]


def test_spectral_run_save(tmp_path):
    """Test if save writes both artifacts"""
    run = make_run()
    run.save(tmp_path / "run.json", tmp_path / "run.csv")
    assert (tmp_path / "run.json").read_text(encoding="utf-8").startswith("{")
    assert (tmp_path / "run.csv").exists()
