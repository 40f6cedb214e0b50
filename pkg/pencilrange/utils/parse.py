"""Experiment documents: JSON schema, validation and construction of families"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, is_dataclass
from enum import Enum
from json import JSONEncoder
from os import PathLike
from pathlib import Path
from typing import Any, Optional, TypedDict, Union

import numpy as np
from typeguard import check_type

from .. import gallery
from ..errors import ConfigError
from ..family import BlockFamily, DiagonalFamily, HainLustFamily, MultipliedFamily
from ..matkernel import BACKENDS
from ..ranges import PencilSection
from ..region import DEFAULT_ANGLES, Box, EssentialRange, complex_from_json, complex_to_json
from ..types import ComplexJson, EssentialRangeDict, Multiplier, PencilFamily, TruncationSpec
from .expr import parse_coefficient

EXPERIMENT_KINDS = ("range", "pencil-range", "ess-range", "sweep", "inject", "enclosure", "figure")
FAMILY_KINDS = (
    "diagonal",
    "schrodinger1d",
    "sturm_liouville_indefinite",
    "dirac1d",
    "stokes1d",
    "hain_lust",
    "block2x2",
    "multiplied",
    "preset",
)
MULTIPLIER_KINDS = (
    "function",
    "block",
    "sl-rotation",
    "schrodinger-rotation",
    "dirac",
    "hain-lust",
    "polar",
    "gap",
)
DEFAULT_RESOLUTION = [200, 200]

CoefficientJson = Union[str, float, int, list[float]]


class TruncationDictN(TypedDict):
    """Mandatory keys of a truncation"""

    n: int


class TruncationDict(TruncationDictN, total=False):
    """Dict representation of a TruncationSpec"""

    half_length: float


class TailDict(TypedDict, total=False):
    """Coordinate windows of the essential-range estimates"""

    depths: list[int]
    window: int
    step: float
    ratio: bool


class ClassifyDict(TypedDict, total=False):
    """Thresholds of the cluster classification"""

    tol_drift: float
    min_persistence: int
    cluster_radius: float


class ReferenceDict(TypedDict, total=False):
    """Reference of a sweep: a known spectrum and/or a pollution zone ("tail")"""

    spectrum: list[ComplexJson]
    zone: str


class OutputDict(TypedDict, total=False):
    """Where and what to write"""

    directory: str
    svg: bool
    csv: bool


class LineDict(TypedDict):
    """Segment for pencil_range_on_line"""

    start: ComplexJson
    stop: ComplexJson


class MatrixDict(TypedDict, total=False):
    """Literal pencil members, entries as numbers or [re, im]"""

    A: list[list[ComplexJson]]
    B: list[list[ComplexJson]]


class FamilyDictKind(TypedDict):
    """Mandatory keys of a family descriptor"""

    kind: str


class FamilyDict(FamilyDictKind, total=False):
    """Family descriptor, the keys in use depend on `kind`"""

    name: str
    a: CoefficientJson
    b: CoefficientJson
    V: CoefficientJson
    U: CoefficientJson
    Q: CoefficientJson
    W: CoefficientJson
    well: CoefficientJson
    mminus: float
    mplus: float
    left: float
    right: float
    decaying: bool
    gamma: ComplexJson
    delta: ComplexJson
    essran: EssentialRangeDict
    upper: dict[str, Any]
    lower: dict[str, Any]
    base: dict[str, Any]
    multiplier: dict[str, Any]
    params: dict[str, Any]


MultiplierDict = TypedDict(
    "MultiplierDict",
    {
        "kind": str,
        "expr": CoefficientJson,
        "upper": CoefficientJson,
        "lower": CoefficientJson,
        "phi": float,
        "phi_minus": float,
        "phi_plus": float,
        "left": float,
        "right": float,
        "theta": float,
        "lambda": ComplexJson,
        "points": list[ComplexJson],
        "split": int,
    },
    total=False,
)


class EnclosureConfigDictKind(TypedDict):
    """Mandatory keys of an enclosure descriptor"""

    kind: str


class EnclosureConfigDict(EnclosureConfigDictKind, total=False):
    """Enclosure descriptor: dirac, stokes, half_lines, gap or multiplier"""

    essran: EssentialRangeDict
    first: list[ComplexJson]
    second: list[ComplexJson]
    essential: bool
    phi_grid: int


class ExperimentDictKind(TypedDict):
    """Mandatory keys of an experiment document"""

    kind: str


class ExperimentDict(ExperimentDictKind, total=False):
    """Dict representation of the experiment file-format"""

    name: str
    seed: int
    threads: Optional[int]
    backend: Optional[str]
    family: FamilyDict
    matrix: MatrixDict
    truncations: list[TruncationDict]
    box: list[float]
    resolution: list[int]
    angles: int
    line: LineDict
    tail: TailDict
    multipliers: list[MultiplierDict]
    targets: list[ComplexJson]
    base_sizes: list[int]
    search_depth: int
    enclosure: EnclosureConfigDict
    classify: ClassifyDict
    reference: ReferenceDict
    preset: str
    output: OutputDict


_ITEM = re.compile(r'dict item "([^"]+)"')
_KEYS = re.compile(r'key\(s\) \("([^"]+)"')


def _field_of(message: str) -> Optional[str]:
    """Dotted path of the offending key in a typeguard message

    typeguard names nested items innermost first, e.g.
    `dict item "n" for dict item "truncations" for config[0]`.
    """
    parts = _ITEM.findall(message)[::-1]
    keys = _KEYS.search(message)
    if keys is not None:
        parts.append(keys.group(1))
    return ".".join(parts) or None


def validate(name: str, value: Any, expected: Any) -> None:
    """check_type with a ConfigError naming the offending field"""
    try:
        check_type(name, value, expected)
    except TypeError as exc:
        field_name = _field_of(str(exc))
        path = f"{name}.{field_name}" if field_name and name != "config" else field_name or name
        raise ConfigError(str(exc), field=path) from exc


def _matrix(rows: list[list[ComplexJson]], path: str) -> np.ndarray:  # type: ignore[type-arg]
    try:
        M = np.array([[complex_from_json(v) for v in row] for row in rows], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=path) from exc
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {M.shape}", field=path)
    return M


def build_section(data: MatrixDict) -> PencilSection:
    """PencilSection of literal members, B defaults to the identity"""
    if "A" not in data:
        raise ConfigError("a matrix needs the member A", field="matrix.A")
    A = _matrix(data["A"], "matrix.A")
    B = _matrix(data["B"], "matrix.B") if "B" in data else np.eye(A.shape[0], dtype=np.complex128)
    if A.shape != B.shape:
        raise ConfigError(f"A and B differ in shape: {A.shape} vs {B.shape}", field="matrix.B")
    return PencilSection(A, B)


def _essran(data: FamilyDict, path: str) -> Optional[EssentialRange]:
    if "essran" not in data:
        return None
    try:
        return EssentialRange.from_dict(data["essran"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=f"{path}.essran") from exc


def _require(data: dict[str, Any], key: str, path: str) -> Any:
    if key not in data:
        raise ConfigError(f"missing key {key!r}", field=f"{path}.{key}")
    return data[key]


def build_family(
    data: FamilyDict, truncations: Optional[list[TruncationSpec]] = None, path: str = "family"
) -> PencilFamily:
    """Construct the family a descriptor names

    Raises:
        ConfigError: for unknown kinds, missing keys and invalid expressions
    """
    validate(path, data, FamilyDict)
    kind = data["kind"]
    name = data.get("name", kind)

    def coefficient(key: str, variable: str = "x", default: Any = None) -> Any:
        value = data.get(key, default) if default is not None else _require(dict(data), key, path)
        return parse_coefficient(value, variable, f"{path}.{key}")

    try:
        if kind == "diagonal":
            return DiagonalFamily(coefficient("a", "n"), coefficient("b", "n"), name)
        if kind == "schrodinger1d":
            return gallery.schrodinger1d(coefficient("V"), name)
        if kind == "sturm_liouville_indefinite":
            return gallery.sl_indefinite(
                float(data.get("mminus", 1.0)),
                float(data.get("mplus", 1.0)),
                coefficient("well", default=0.0),
                float(data.get("left", 0.0)),
                float(data.get("right", 0.0)),
                bool(data.get("decaying", False)),
                name,
            )
        if kind == "dirac1d":
            return gallery.dirac1d(coefficient("V", default=0.0), _essran(data, path), name)
        if kind == "stokes1d":
            return gallery.stokes1d(
                coefficient("U"),
                complex_from_json(data.get("gamma", 1.0)),
                complex_from_json(data.get("delta", 1.0)),
                _essran(data, path),
                name,
            )
        if kind == "hain_lust":
            if not truncations:
                raise ConfigError("hain_lust needs truncations to check its coefficients", field=path)
            return gallery.hain_lust(
                coefficient("Q"),
                coefficient("W"),
                coefficient("V"),
                coefficient("U"),
                truncations[-1],
                _essran(data, path),
                name=name,
            )
        if kind == "block2x2":
            upper = build_family(_require(dict(data), "upper", path), truncations, f"{path}.upper")
            lower = build_family(_require(dict(data), "lower", path), truncations, f"{path}.lower")
            if not isinstance(upper, DiagonalFamily) or not isinstance(lower, DiagonalFamily):
                raise ConfigError("block2x2 blocks must be diagonal families", field=path)
            return BlockFamily(upper, lower, name)
        if kind == "multiplied":
            base = build_family(_require(dict(data), "base", path), truncations, f"{path}.base")
            multiplier = build_multiplier(_require(dict(data), "multiplier", path), base, f"{path}.multiplier")
            return MultipliedFamily(base, multiplier)
        if kind == "preset":
            params = {key: _preset_param(value) for key, value in data.get("params", {}).items()}
            return gallery.preset(_require(dict(data), "name", path), **params)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=path) from exc
    raise ConfigError(f"unknown family kind {kind!r}, expected one of {FAMILY_KINDS}", field=f"{path}.kind")


def _preset_param(value: Any) -> Any:
    if isinstance(value, list):
        return complex_from_json(value)
    return value


def build_multiplier(data: MultiplierDict, base: PencilFamily, path: str = "multiplier") -> Multiplier:
    """Construct a family multiplier from its descriptor"""
    validate(path, data, MultiplierDict)
    kind = data.get("kind")
    variable = "n" if base.kind in ("diagonal", "block2x2") else "x"
    raw = dict(data)
    if kind == "function":
        return gallery.function_multiplier(
            parse_coefficient(_require(raw, "expr", path), variable, f"{path}.expr")
        )
    if kind == "block":
        return gallery.block_multiplier(
            parse_coefficient(_require(raw, "upper", path), variable, f"{path}.upper"),
            parse_coefficient(_require(raw, "lower", path), variable, f"{path}.lower"),
        )
    if kind == "sl-rotation":
        return gallery.sl_rotation_multiplier(
            float(_require(raw, "phi", path)), float(raw.get("left", 0.0)), float(raw.get("right", 0.0))
        )
    if kind == "schrodinger-rotation":
        return gallery.schrodinger_rotation_multiplier(
            float(_require(raw, "phi_minus", path)),
            float(_require(raw, "phi_plus", path)),
            float(raw.get("left", 0.0)),
            float(raw.get("right", 0.0)),
        )
    if kind == "dirac":
        return gallery.dirac_multiplier(float(_require(raw, "theta", path)))
    if kind == "hain-lust":
        if not isinstance(base, HainLustFamily):
            raise ConfigError("a hain-lust multiplier needs a hain_lust base", field=path)
        multiplier, _ = gallery.hain_lust_multiplier(
            base, complex_from_json(_require(raw, "lambda", path))
        )
        return multiplier
    raise ConfigError(
        f"multiplier kind {kind!r} does not apply to families, expected one of "
        f"{MULTIPLIER_KINDS[:6]}",
        field=f"{path}.kind",
    )


@dataclass
class ExperimentConfig:  # pylint: disable=too-many-instance-attributes
    """A validated experiment document

    Descriptors stay as documents next to the objects built from them so
    that `to_dict` reproduces the document with defaults filled in.
    """

    kind: str
    name: str = "experiment"
    seed: int = 0
    threads: Optional[int] = None
    backend: Optional[str] = None
    family: Optional[FamilyDict] = None
    matrix: Optional[MatrixDict] = None
    truncations: list[TruncationSpec] = field(default_factory=list)
    box: Optional[Box] = None
    resolution: tuple[int, int] = (DEFAULT_RESOLUTION[0], DEFAULT_RESOLUTION[1])
    angles: int = DEFAULT_ANGLES
    line: Optional[tuple[complex, complex]] = None
    tail: TailDict = field(default_factory=dict)  # type: ignore[assignment]
    multipliers: list[MultiplierDict] = field(default_factory=list)
    targets: list[complex] = field(default_factory=list)
    base_sizes: list[int] = field(default_factory=list)
    search_depth: int = 16
    enclosure: Optional[EnclosureConfigDict] = None
    classify: ClassifyDict = field(default_factory=dict)  # type: ignore[assignment]
    reference: ReferenceDict = field(default_factory=dict)  # type: ignore[assignment]
    preset: Optional[str] = None
    output: OutputDict = field(default_factory=dict)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"unknown experiment kind {self.kind!r}, expected one of {EXPERIMENT_KINDS}",
                field="kind",
            )
        if self.backend is not None and self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}", field="backend")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be at least 1", field="threads")

    def build_family(self) -> PencilFamily:
        """The family of the document"""
        if self.family is None:
            raise ConfigError(f"a {self.kind} experiment needs a family", field="family")
        return build_family(self.family, self.truncations)

    def build_section(self) -> PencilSection:
        """The literal pencil, or the family section at the finest truncation"""
        if self.matrix is not None:
            return build_section(self.matrix)
        if not self.truncations:
            raise ConfigError("give a matrix or truncations", field="truncations")
        return self.build_family().section(self.truncations[-1])

    @property
    def directory(self) -> Path:
        return Path(self.output.get("directory", "."))

    def to_dict(self) -> ExperimentDict:
        data: dict[str, Any] = {
            "kind": self.kind,
            "name": self.name,
            "seed": self.seed,
            "threads": self.threads,
            "backend": self.backend,
            "truncations": [_truncation_dict(spec) for spec in self.truncations],
            "resolution": list(self.resolution),
            "angles": self.angles,
            "tail": dict(self.tail),
            "multipliers": [dict(m) for m in self.multipliers],
            "targets": [complex_to_json(z) for z in self.targets],
            "base_sizes": list(self.base_sizes),
            "search_depth": self.search_depth,
            "classify": dict(self.classify),
            "reference": dict(self.reference),
            "output": dict(self.output),
        }
        if self.family is not None:
            data["family"] = self.family
        if self.matrix is not None:
            data["matrix"] = self.matrix
        if self.box is not None:
            data["box"] = self.box.to_list()
        if self.line is not None:
            data["line"] = {"start": complex_to_json(self.line[0]), "stop": complex_to_json(self.line[1])}
        if self.enclosure is not None:
            data["enclosure"] = self.enclosure
        if self.preset is not None:
            data["preset"] = self.preset
        return data  # type: ignore[return-value]


def _truncation_dict(spec: TruncationSpec) -> TruncationDict:
    data = TruncationDict(n=spec.n)
    if spec.half_length is not None:
        data["half_length"] = spec.half_length
    return data


def config_from_dict(data: ExperimentDict) -> ExperimentConfig:
    """Validate a document and build its ExperimentConfig"""
    validate("config", data, ExperimentDict)
    try:
        truncations = [
            TruncationSpec(n=t["n"], half_length=t.get("half_length"))
            for t in data.get("truncations", [])
        ]
    except ValueError as exc:
        raise ConfigError(str(exc), field="truncations") from exc
    try:
        box = Box.from_list(data["box"]) if "box" in data else None
    except ValueError as exc:
        raise ConfigError(str(exc), field="box") from exc
    resolution = data.get("resolution", DEFAULT_RESOLUTION)
    if len(resolution) != 2 or min(resolution) < 1:
        raise ConfigError(f"resolution must be [nx, ny], got {resolution}", field="resolution")
    line = None
    if "line" in data:
        line = (complex_from_json(data["line"]["start"]), complex_from_json(data["line"]["stop"]))
    return ExperimentConfig(
        kind=data["kind"],
        name=data.get("name", "experiment"),
        seed=data.get("seed", 0),
        threads=data.get("threads"),
        backend=data.get("backend"),
        family=data.get("family"),
        matrix=data.get("matrix"),
        truncations=truncations,
        box=box,
        resolution=(resolution[0], resolution[1]),
        angles=data.get("angles", DEFAULT_ANGLES),
        line=line,
        tail=data.get("tail", TailDict()),
        multipliers=list(data.get("multipliers", [])),
        targets=[complex_from_json(z) for z in data.get("targets", [])],
        base_sizes=list(data.get("base_sizes", [])),
        search_depth=data.get("search_depth", 16),
        enclosure=data.get("enclosure"),
        classify=data.get("classify", ClassifyDict()),
        reference=data.get("reference", ReferenceDict()),
        preset=data.get("preset"),
        output=data.get("output", OutputDict()),
    )


def load_config(path: PathLike[str] | str) -> ExperimentConfig:
    """Read and validate an experiment document

    Raises:
        ConfigError: with the line of a JSON syntax error or the offending field
        OSError: when the file cannot be read
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigError("an experiment document must be an object", line=1)
    return config_from_dict(data)  # type: ignore[arg-type]


class PencilRangeJSONEncoder(JSONEncoder):
    """JSON Encoder for results

    Complex numbers become [re, im]; numpy arrays, enums and dataclasses
    (through their `to_dict` when they have one) are converted.

    Example:
        ```
        json.dumps(run, cls=PencilRangeJSONEncoder)
        ```
    """

    def default(self, o: Any) -> Any:
        if hasattr(o, "to_dict"):
            return o.to_dict()
        if isinstance(o, (complex, np.complexfloating)):
            return complex_to_json(complex(o))
        if isinstance(o, np.ndarray):
            return o.tolist() if not np.iscomplexobj(o) else [complex_to_json(z) for z in o.ravel()]
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, Path):
            return str(o)
        if is_dataclass(o) and not isinstance(o, type):
            return asdict(o)
        return super().default(o)
