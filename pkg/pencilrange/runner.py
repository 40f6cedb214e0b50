"""Execution of experiment documents and persistence of their artifacts"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import IO, Any, Callable, Iterator, Optional

import numpy as np

from . import approx, enclosures, figures, matkernel, ranges
from .errors import ConfigError, NotHermitian, NotPositive, SingularB
from .figures import sweep_layers
from .region import Box, EssentialRange, Raster, complex_from_json, complex_to_json
from .types import CVector, PencilFamily
from .utils.metrics import MetricsExporter, log_event, setup_metrics
from .utils.parse import ExperimentConfig, PencilRangeJSONEncoder, load_config
from .utils.svg import CurveLayer, Layer, PointLayer, RasterLayer, Style, write_svg

DEFAULT_TAIL_WINDOW = 100


@dataclass
class Outcome:
    """Artifacts and summary of one experiment

    Arguments:
        failed: True if a numerical step failed, artifacts written so far are kept
    """

    name: str
    directory: Path
    artifacts: list[Path] = field(default_factory=list)
    summary: list[str] = field(default_factory=list)
    failed: bool = False

    def add(self, path: Path) -> Path:
        self.artifacts.append(path)
        log_event("experiment.artifact", str(path), step=self.name)
        return path

    def write_json(self, suffix: str, payload: Any) -> Path:
        """Write `payload` as `<name>.<suffix>.json`"""
        path = self.directory / f"{self.name}.{suffix}.json"
        with path.open("w", encoding="utf-8") as stream:
            json.dump(payload, stream, cls=PencilRangeJSONEncoder, indent=1, sort_keys=True)
        return self.add(path)

    def write_svg(self, suffix: str, layers: list[Layer], box: Optional[Box], title: str) -> Path:
        path = self.directory / f"{self.name}.{suffix}.svg"
        return self.add(write_svg(path, layers, box, Style(title=title, legend=True)))

    def write_report(self) -> Path:
        """Markdown summary listing the artifacts"""
        lines = [f"# {self.name}", "", *self.summary, "", "## Artifacts", ""]
        lines += [f"- `{path.name}`" for path in self.artifacts]
        if self.failed:
            lines += ["", "**A numerical step failed, see the events log.**"]
        path = self.directory / f"{self.name}.report.md"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return self.add(path)


@dataclass
class Runner:
    """Runs one experiment document

    Arguments:
        config: the validated experiment
        filename: events file, defaults to the output directory
        stream: optional additional events stream
        level: events level, DEBUG records per-item events
        max_bytes: roll the events file over when exceeded, 0 never does
        progress: show tqdm bars for long sweeps
    """

    config: ExperimentConfig
    filename: str | PathLike[str] | None = None
    stream: Optional[IO[str]] = None
    level: int = logging.INFO
    max_bytes: int = 0
    progress: bool = False

    def __post_init__(self) -> None:
        self._metrics: MetricsExporter | None = None

    @property
    def output(self) -> Iterator[PathLike[str]]:
        """Return the filename(s) of the events file handler"""
        if self._metrics:
            yield from self._metrics.output

    def run(self) -> Outcome:
        """Execute the experiment and write its artifacts

        Raises:
            ConfigError: when the document lacks what its kind needs
            ArithmeticError: for numerical failures outside sweep levels
        """
        config = self.config
        directory = config.directory
        directory.mkdir(parents=True, exist_ok=True)
        self._metrics = setup_metrics(
            filename=self.filename or directory,
            level=self.level,
            stream=self.stream,
            max_bytes=self.max_bytes,
            experiment=config.name,
        )
        matkernel.set_default_backend(config.backend)
        outcome = Outcome(config.name, directory)
        try:
            log_event("experiment.start", config.kind, message=config.to_dict(), step=config.name)
            EXPERIMENTS[config.kind](self, outcome)
            outcome.write_report()
            log_event("experiment.done", int(outcome.failed), step=config.name)
        finally:
            matkernel.set_default_backend(None)
            self._metrics.stop_metrics()
        return outcome

    @property
    def threads(self) -> Optional[int]:
        return self.config.threads

    def require_box(self) -> Box:
        if self.config.box is None:
            raise ConfigError(f"a {self.config.kind} experiment needs a box", field="box")
        return self.config.box

    def svg_enabled(self) -> bool:
        return bool(self.config.output.get("svg", True))

    def csv_enabled(self) -> bool:
        return bool(self.config.output.get("csv", True))

    def tail_zone(self, F: PencilFamily) -> Raster:
        """Estimate of W_e(A, B) from the `tail` table"""
        tail = self.config.tail
        depths = tail.get("depths")
        if not depths:
            raise ConfigError("the tail table needs depths", field="tail.depths")
        window = tail.get("window", DEFAULT_TAIL_WINDOW)
        box, resolution, step = self.require_box(), self.config.resolution, tail.get("step")
        if tail.get("ratio", False):
            return ranges.ess_ratio_range_tail(
                F, box, resolution, depths, window, step, angles=self.config.angles
            )
        return ranges.ess_range_tail(F, box, resolution, depths, window, step, self.threads)

    def reference(self, F: PencilFamily) -> Optional[approx.Reference]:
        data = self.config.reference
        if not data:
            return None
        spectrum = None
        if "spectrum" in data:
            spectrum = np.asarray(
                [complex_from_json(z) for z in data["spectrum"]], dtype=np.complex128
            )
        zone = None
        if data.get("zone") == "tail":
            zone = self.tail_zone(F)
        elif data.get("zone") == "enclosure":
            zone = enclosures.enclosure_region(
                self.enclosure_spec(), self.require_box(), self.config.resolution, self.threads
            )
        elif "zone" in data:
            raise ConfigError(
                f"zone must be 'tail' or 'enclosure', got {data['zone']!r}", field="reference.zone"
            )
        return approx.Reference(spectrum, zone)

    def enclosure_spec(self) -> enclosures.EnclosureSpec:
        """EnclosureSpec of the `enclosure` table"""
        data = self.config.enclosure
        if data is None:
            raise ConfigError("an enclosure table is required", field="enclosure")
        kind = data["kind"]
        try:
            if kind == "gap":
                first = [complex_from_json(z) for z in data.get("first", [])]
                second = [complex_from_json(z) for z in data.get("second", [])]
                return enclosures.gap_region(first, second, bool(data.get("essential", False)))
            essran = EssentialRange.from_dict(data["essran"]) if "essran" in data else None
            params = {"phi_grid": data["phi_grid"]} if "phi_grid" in data else {}
            return enclosures.EnclosureSpec(kind, essran, params)
        except (KeyError, TypeError) as exc:
            raise ConfigError(str(exc), field="enclosure") from exc
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), field="enclosure") from exc


def _eigenvalues(P: ranges.PencilSection) -> CVector:
    try:
        return matkernel.generalized_eig(P.A, P.B)
    except SingularB:
        return np.zeros(0, dtype=np.complex128)


def _is_hpd(B: Any) -> bool:
    try:
        matkernel.hpd_invsqrt(B)
    except (NotHermitian, NotPositive):
        return False
    return True


def _closed(points: CVector) -> CVector:
    return np.concatenate((points, points[:1])) if points.size else points


def run_range(runner: Runner, outcome: Outcome) -> None:
    """W(A) of the literal matrix or the finest section's A member"""
    config = runner.config
    A = config.build_section().A
    support = ranges.nrange(A, config.angles)
    boundary = ranges.nrange_boundary(A, config.angles)
    eigenvalues = matkernel.general_eig(A)
    outcome.write_json(
        "range",
        {
            "support": support.to_dict(),
            "boundary": [complex_to_json(z) for z in boundary],
            "eigenvalues": [complex_to_json(z) for z in eigenvalues],
        },
    )
    outcome.summary.append(f"- W(A) of a {A.shape[0]}x{A.shape[0]} matrix, {config.angles} angles")
    if runner.svg_enabled():
        layers: list[Layer] = [
            CurveLayer(_closed(support.vertices()), gid="range", label="W(A)"),
            PointLayer(eigenvalues, gid="eigenvalues", label="σ(A)"),
        ]
        outcome.write_svg("range", layers, config.box, "Numerical range")


def run_pencil_range(runner: Runner, outcome: Outcome) -> None:
    """Raster of W(A, B), intervals along `line` and w(A, B) when B is HPD"""
    config = runner.config
    P = config.build_section()
    eigenvalues = _eigenvalues(P)
    box = config.box or Box.around(eigenvalues if eigenvalues.size else [0j])
    raster = ranges.pencil_range(P, box, config.resolution, threads=runner.threads)
    payload: dict[str, Any] = {"raster": raster.to_dict()}
    outcome.summary.append(f"- W(A, B) covers {raster.count} of {raster.nx * raster.ny} cells")
    if config.line is not None:
        intervals = ranges.pencil_range_on_line(P, *config.line)
        payload["intervals"] = [[complex_to_json(a), complex_to_json(b)] for a, b in intervals]
        for start, stop in intervals:
            outcome.summary.append(f"- interval on the line: [{start:.12g}, {stop:.12g}]")
    layers: list[Layer] = [RasterLayer(raster, gid="pencil-range")]
    if _is_hpd(P.B):
        ratio = ranges.w_range_hpd(P, config.angles)
        payload["w_range"] = ratio.to_dict()
        layers.append(CurveLayer(_closed(ratio.vertices()), gid="w-range", label="w(A, B)"))
        outcome.summary.append("- B is positive definite, w(A, B) = W(S A S) written")
    payload["eigenvalues"] = [complex_to_json(z) for z in eigenvalues]
    outcome.write_json("pencil-range", payload)
    if runner.svg_enabled():
        layers.append(PointLayer(eigenvalues, gid="eigenvalues", label="σ(A, B)"))
        outcome.write_svg("pencil-range", layers, box, "Pencil numerical range")


def run_ess_range(runner: Runner, outcome: Outcome) -> None:
    """Tail estimate of W_e(A, B), or of w_e(A, B) with `tail.ratio`"""
    F = runner.config.build_family()
    raster = runner.tail_zone(F)
    outcome.write_json(
        "ess-range", {"family": F.id, "raster": raster.to_dict(), "tail": runner.config.tail}
    )
    outcome.summary.append(f"- essential range estimate of {F.id}: {raster.count} cells")
    if runner.svg_enabled():
        outcome.write_svg("ess-range", [RasterLayer(raster, gid="ess-range")], raster.box, F.id)


def _save_run(runner: Runner, outcome: Outcome, run: approx.SpectralRun, suffix: str) -> None:
    outcome.write_json(suffix, run.to_dict())
    if runner.csv_enabled():
        path = outcome.directory / f"{outcome.name}.{suffix}.csv"
        with path.open("w", encoding="utf-8", newline="") as stream:
            run.to_csv(stream)
        outcome.add(path)
    for verdict in approx.Classification:
        outcome.summary.append(f"- {verdict.value}: {len(run.by_classification(verdict))} clusters")
    for cluster in run.clusters:
        outcome.summary.append(
            f"  - {cluster.classification.value} at {cluster.location:.8g}, "
            f"persistence {cluster.persistence}, max drift {cluster.max_drift:.3g}"
        )
    if run.degenerate:
        outcome.summary.append("- both sections approach 0 ∈ W: the run is degenerate")
    failed = [str(level.spec) for level in run.levels if level.failed]
    if failed:
        outcome.failed = True
        outcome.summary.append(f"- failed levels: {', '.join(failed)}")
    if runner.svg_enabled():
        outcome.write_svg(suffix, sweep_layers(run), runner.config.box, run.family)


def _classified(runner: Runner, run: approx.SpectralRun) -> approx.SpectralRun:
    options = runner.config.classify
    return approx.classify(
        run,
        tol_drift=options.get("tol_drift", approx.DEFAULT_TOL_DRIFT),
        min_persistence=options.get("min_persistence", approx.DEFAULT_MIN_PERSISTENCE),
        cluster_radius=options.get("cluster_radius"),
    )


def run_sweep(runner: Runner, outcome: Outcome) -> None:
    """Eigenvalues over the truncations, classified into clusters"""
    config = runner.config
    F = config.build_family()
    reference = runner.reference(F)
    try:
        run = approx.run_sweep(
            F,
            config.truncations,
            reference,
            threads=runner.threads,
            fallback_box=config.box,
            backend=config.backend,
            progress=runner.progress,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), field="truncations") from exc
    _save_run(runner, outcome, _classified(runner, run), "sweep")


def run_inject(runner: Runner, outcome: Outcome) -> None:
    """Compressions of a diagonal family with spurious eigenvalues placed at `targets`"""
    config = runner.config
    F = config.build_family()
    if not config.targets:
        raise ConfigError("an inject experiment needs targets", field="targets")
    sizes = config.base_sizes or [spec.n for spec in config.truncations]
    if not sizes:
        raise ConfigError("give base_sizes or truncations", field="base_sizes")
    reference = runner.reference(F)
    zone = reference.zone if reference is not None else None
    run = approx.injected_sweep(
        F, sizes, config.targets, config.search_depth, reference=reference, zone=zone
    )
    _save_run(runner, outcome, _classified(runner, run), "inject")


def _multipliers(runner: Runner, T: Any) -> list[Any]:
    result = [np.eye(T.shape[0], dtype=np.complex128)]
    for index, data in enumerate(runner.config.multipliers):
        kind = data.get("kind")
        if kind == "polar":
            points = [complex_from_json(z) for z in data.get("points", [])]
            result += enclosures.polar_multipliers(T, points)[1:]
        elif kind == "gap":
            split = data.get("split", T.shape[0] // 2)
            result.append(enclosures.gap_multiplier(split, T.shape[0] - split))
        else:
            raise ConfigError(
                f"matrix multipliers are polar or gap, got {kind!r}",
                field=f"multipliers.{index}.kind",
            )
    return result


def run_enclosure(runner: Runner, outcome: Outcome) -> None:
    """Analytic enclosure region, or the multiplier intersection estimate of σ(T)"""
    config = runner.config
    box = runner.require_box()
    layers: list[Layer] = []
    if config.enclosure is not None and config.enclosure["kind"] == "multiplier":
        P = config.build_section()
        T = matkernel.as_cmatrix(np.linalg.solve(P.B, P.A))
        multipliers = _multipliers(runner, T)
        raster = enclosures.multiplier_spectrum_estimate(
            T, multipliers, box, config.resolution, runner.threads
        )
        payload: dict[str, Any] = {"multipliers": len(multipliers), "raster": raster.to_dict()}
        eigenvalues = matkernel.general_eig(T)
    else:
        spec = runner.enclosure_spec()
        raster = enclosures.enclosure_region(spec, box, config.resolution, runner.threads)
        payload = {"enclosure": spec.to_dict(), "raster": raster.to_dict()}
        eigenvalues = np.zeros(0, dtype=np.complex128)
        if config.family is not None and config.truncations:
            eigenvalues = _eigenvalues(config.build_section())
            slack = raster.diagonal
            outside = [
                z
                for z in eigenvalues
                if box_contains(box, z) and not enclosures.enclosure_member(spec, z, slack)
            ]
            payload["outside"] = [complex_to_json(z) for z in outside]
            outcome.summary.append(
                f"- {len(outside)} section eigenvalues in the box lie outside the enclosure"
            )
            for z in outside:
                log_event(
                    "enclosure.outside", complex_to_json(z), step=spec.kind, level=logging.WARNING
                )
    payload["eigenvalues"] = [complex_to_json(z) for z in eigenvalues]
    outcome.summary.append(f"- region covers {raster.count} of {raster.nx * raster.ny} cells")
    outcome.write_json("enclosure", payload)
    if runner.svg_enabled():
        layers.append(RasterLayer(raster, gid="enclosure"))
        if eigenvalues.size:
            layers.append(PointLayer(eigenvalues, gid="eigenvalues", label="σ"))
        outcome.write_svg("enclosure", layers, box, "Spectral enclosure")


def box_contains(box: Box, z: complex) -> bool:
    return box.re_min <= z.real <= box.re_max and box.im_min <= z.imag <= box.im_max


def run_figure(runner: Runner, outcome: Outcome) -> None:
    """One of the figure presets"""
    config = runner.config
    if config.preset is None:
        raise ConfigError("a figure experiment needs a preset", field="preset")
    try:
        paths = figures.render(
            config.preset,
            outcome.directory,
            threads=runner.threads,
            resolution=config.resolution if config.box is not None else None,
            box=config.box,
        )
    except KeyError as exc:
        raise ConfigError(str(exc), field="preset") from exc
    for path in paths:
        outcome.add(path)
    outcome.summary.append(f"- figure preset {config.preset}: {len(paths)} files")


EXPERIMENTS: dict[str, Callable[[Runner, Outcome], None]] = {
    "range": run_range,
    "pencil-range": run_pencil_range,
    "ess-range": run_ess_range,
    "sweep": run_sweep,
    "inject": run_inject,
    "enclosure": run_enclosure,
    "figure": run_figure,
}


OVERRIDES = ("seed", "threads", "box", "resolution", "backend")


def apply_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Replace config attributes by the overrides that are not None

    Raises:
        ConfigError: for unknown keys and invalid values
    """
    for key, value in overrides.items():
        if key not in OVERRIDES:
            raise ConfigError(f"{key} cannot be overridden", field=key)
        if value is not None:
            setattr(config, key, value)
    config.__post_init__()
    return config


def run_file(
    path: PathLike[str] | str,
    level: int = logging.INFO,
    progress: bool = False,
    **overrides: Any,
) -> Outcome:
    """Load an experiment document, apply `overrides` (see OVERRIDES) and run it"""
    config = apply_overrides(load_config(path), **overrides)
    return Runner(config, level=level, progress=progress).run()
