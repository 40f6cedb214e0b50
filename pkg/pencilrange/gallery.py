"""Named families, presets and multipliers of the operator gallery"""
from __future__ import annotations

import logging
import warnings
from typing import Any, Callable, Optional, Union

import numpy as np
import numpy.typing as npt

from .errors import ConditionViolated, NotApplicable
from .family import (
    BlockFamily,
    BlockMultiplier,
    DiagonalFamily,
    DiracFamily,
    FunctionMultiplier,
    HainLustFamily,
    MatrixMultiplier,
    ScalarFamily,
    StokesFamily,
)
from .family.stencil import Coefficient, grid, sample
from .region import EssentialRange
from .types import CMatrix, CVector, PencilFamily, TruncationSpec
from .utils.metrics import log_event

CoefficientLike = Union[Coefficient, complex, float]
Array = npt.NDArray[Any]


def ramp(x: Array, left: float, right: float) -> Array:
    """0 left of `left`, 1 right of `right`, linear in between (a jump at x = left when equal)"""
    x = np.asarray(x, dtype=float)
    if right <= left:
        return (x >= left).astype(float)
    return np.clip((x - left) / (right - left), 0.0, 1.0)


def diagonal(a: Coefficient, b: Coefficient, name: str = "diagonal") -> DiagonalFamily:
    """Diagonal pencil diag(a_n) - λ diag(b_n)"""
    return DiagonalFamily(a, b, name)


def _sign(n: Array) -> Array:
    return np.where(np.asarray(n) % 2 == 0, 1.0, -1.0)


def unifposb() -> DiagonalFamily:
    """a_n = n² + n, b_n = n²: w(A, B) = (1, 2]"""
    return DiagonalFamily(lambda n: n**2.0 + n, lambda n: n**2.0, "unifposb")


def notclosed() -> DiagonalFamily:
    """a_n = (-1)^n n⁴ + in, b_n = n³ + i(-1)^n n²: W_e(A, B) = ℝ \\ {0}"""
    return DiagonalFamily(
        lambda n: _sign(n) * n**4.0 + 1j * n,
        lambda n: n**3.0 + 1j * _sign(n) * n**2.0,
        "notclosed",
    )


def line() -> DiagonalFamily:
    """a_n = (-1)^n n³ + in, b_n = n²: w_e(A, B) = ℝ while W_e(A, B) is empty"""
    return DiagonalFamily(
        lambda n: _sign(n) * n**3.0 + 1j * n, lambda n: n**2.0, "line"
    )


def inverse_harmonic() -> DiagonalFamily:
    """A = B = diag(1/n): every section has spectrum {1}"""
    return DiagonalFamily(lambda n: 1.0 / n, lambda n: 1.0 / n, "inverse_harmonic")


def jt_pencil() -> BlockFamily:
    """(T, J) with T = diag(S, S), S = diag(n), J = diag(I, -I): eigenvalues ±n, no pollution"""
    return BlockFamily(
        DiagonalFamily(lambda n: n * 1.0, lambda n: 1.0, "jt_upper"),
        DiagonalFamily(lambda n: n * 1.0, lambda n: -1.0, "jt_lower"),
        "jt_pencil",
    )


def jt_operator() -> DiagonalFamily:
    """The operator JT in an interleaved basis: a_{2k-1} = k, a_{2k} = -k, B = I

    Its essential numerical range is ℝ, so Galerkin sections may pollute anywhere on it.
    """

    def a(n: Array) -> Array:
        n = np.asarray(n)
        k = (n + 1) // 2
        return np.where(n % 2 == 1, k, -k).astype(float)

    return DiagonalFamily(a, lambda n: 1.0, "jt_operator")


def two_level(c: complex) -> DiagonalFamily:
    """A = I, B alternating 1 and c: W_e(A, B) = {1/μ : μ ∈ conv{1, c}}"""
    return DiagonalFamily(
        lambda n: 1.0, lambda n: np.where(np.asarray(n) % 2 == 1, 1.0, c), "two_level"
    )


PRESETS: dict[str, Callable[..., PencilFamily]] = {
    "unifposb": unifposb,
    "notclosed": notclosed,
    "line": line,
    "inverse_harmonic": inverse_harmonic,
    "jt_pencil": jt_pencil,
    "jt_operator": jt_operator,
    "two_level": two_level,
}


def preset(name: str, **params: Any) -> PencilFamily:
    """Build a preset family by name"""
    try:
        factory = PRESETS[name]
    except KeyError as exc:
        raise ValueError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}") from exc
    return factory(**params)


def schrodinger1d(potential: CoefficientLike, name: str = "schrodinger1d") -> ScalarFamily:
    """-d²/dx² + V with B = I"""
    return ScalarFamily(potential, 1.0, "schrodinger1d", name)


def sl_indefinite(
    mminus: float,
    mplus: float,
    well: CoefficientLike = 0.0,
    a: float = 0.0,
    b: float = 0.0,
    decaying: bool = False,
    name: str = "sturm_liouville_indefinite",
) -> ScalarFamily:
    """Indefinite Sturm-Liouville pencil (-d²/dx² + V, J)

    V tends to m- on the left and m+ on the right (both 0 when `decaying`),
    plus the compactly supported `well`. J is -1 left of a, 1 right of b and
    linear in between.
    """
    if decaying:
        mminus = mplus = 0.0
    elif not (mminus > 0 and mplus > 0):
        raise ValueError(f"m- and m+ must be positive, got {mminus}, {mplus}")

    def potential(x: Array) -> Array:
        step = ramp(x, a, b)
        return mminus + (mplus - mminus) * step + sample(well, np.asarray(x))

    def weight(x: Array) -> Array:
        return 2 * ramp(x, a, b) - 1

    return ScalarFamily(potential, weight, "sturm_liouville_indefinite", name)


def dirac1d(
    potential: CoefficientLike = 0.0,
    essran: Optional[EssentialRange] = None,
    name: str = "dirac1d",
) -> DiracFamily:
    """1D Dirac operator with a bounded potential V, essran(V) as declared"""
    return DiracFamily(potential, essran, name)


def stokes1d(
    potential: CoefficientLike,
    gamma: complex = 1.0,
    delta: complex = 1.0,
    essran: Optional[EssentialRange] = None,
    name: str = "stokes1d",
) -> StokesFamily:
    """Stokes-type block operator with |γδ| = 1"""
    if not np.isclose(abs(gamma * delta), 1.0):
        raise ValueError(f"|γδ| must be 1, got {abs(gamma * delta)}")
    return StokesFamily(potential, gamma, delta, essran, name)


def hain_lust(  # pylint: disable=too-many-arguments
    Q: CoefficientLike,
    W: CoefficientLike,
    V: CoefficientLike,
    U: CoefficientLike,
    check: TruncationSpec,
    essran: Optional[EssentialRange] = None,
    sector: Optional[float] = None,
    name: str = "hain_lust",
) -> HainLustFamily:
    """Hain-Lüst-type operator, coefficient conditions checked on the grid of `check`

    The sector condition |arg Q| <= θ < π/2 and the bound |V|² <= b|Q| are
    sampled; b is fitted as max |V|²/|Q|. Violations warn ConditionViolated.
    """
    x = grid(check)
    q, v = sample(Q, x), sample(V, x)
    angle = float(np.max(np.abs(np.angle(q[q != 0])), initial=0.0))
    if angle >= np.pi / 2 or (sector is not None and angle > sector):
        _violated(name, "sector", angle, f"|arg Q| reaches {angle:.4f}")
    vanishing = (np.abs(q) == 0) & (np.abs(v) > 0)
    if np.any(vanishing):
        _violated(name, "bound", float(np.inf), "V does not vanish where Q does")
    ratio = np.abs(v[q != 0]) ** 2 / np.abs(q[q != 0])
    bound = float(np.max(ratio, initial=0.0))
    log_event("condition.bound", bound, step=name, level=logging.DEBUG)
    return HainLustFamily(Q, W, V, U, essran, max(bound, np.finfo(float).tiny), name)


def _violated(name: str, condition: str, value: float, message: str) -> None:
    warnings.warn(f"{name}: {message}", ConditionViolated)
    log_event("condition.violated", value, message=message, step=f"{name}.{condition}")


def stokes_symbol(U0: complex, gamma_delta: complex, k: Union[float, Array]) -> tuple[CVector, CVector]:
    """Both eigenvalues (k² + U)/2 ± sqrt(((k² - U)/2)² - γδk²) of the Stokes symbol"""
    k = np.asarray(k, dtype=float)
    half_sum = (k**2 + U0) / 2
    root = np.sqrt(((k**2 - U0) / 2) ** 2 - gamma_delta * k**2 + 0j)
    return (
        np.atleast_1d(half_sum + root).astype(np.complex128),
        np.atleast_1d(half_sum - root).astype(np.complex128),
    )


def function_multiplier(function: CoefficientLike, name: str = "function") -> FunctionMultiplier:
    """Multiplication by a bounded function on every component"""
    return FunctionMultiplier(function, name)


def block_multiplier(
    upper: CoefficientLike, lower: CoefficientLike, name: str = "block"
) -> BlockMultiplier:
    """diag(upper, lower) on a two-component family"""
    return BlockMultiplier(upper, lower, name)


def matrix_multiplier(values: CMatrix, name: str = "matrix") -> MatrixMultiplier:
    """A constant matrix multiplier"""
    return MatrixMultiplier(np.asarray(values, dtype=np.complex128), name)


def sl_rotation_multiplier(phi: float, a: float, b: float) -> FunctionMultiplier:
    """e^{iφ} left of a, e^{itφ} with t = (b - x)/(b - a) on (a, b), 1 right of b"""

    def rotation(x: Array) -> Array:
        return np.exp(1j * phi * (1 - ramp(x, a, b)))

    return FunctionMultiplier(rotation, f"sl_rotation({phi:g})")


def schrodinger_rotation_multiplier(
    phi_minus: float, phi_plus: float, a: float, b: float
) -> FunctionMultiplier:
    """e^{-iφ-} left of a, e^{-iφ+} right of b, the phase interpolated linearly between

    For V = ix³ the angles φ± = ±π/4 turn both tails of the multiplied pencil
    away from 0, leaving an empty essential numerical range.
    """

    def rotation(x: Array) -> Array:
        t = 1 - ramp(x, a, b)
        return np.exp(-1j * (t * phi_minus + (1 - t) * phi_plus))

    return FunctionMultiplier(rotation, f"schrodinger_rotation({phi_minus:g},{phi_plus:g})")


def dirac_multiplier(theta: float) -> BlockMultiplier:
    """B_θ = diag(e^{-iθ}, e^{iθ})"""
    return BlockMultiplier(np.exp(-1j * theta), np.exp(1j * theta), f"dirac({theta:g})")


def hain_lust_multiplier(
    family: HainLustFamily, lam: complex
) -> tuple[BlockMultiplier, float]:
    """B_λ = diag(I, ε(U - λ)^{-1}) with ε = 1/(b ‖(U - λ)^{-1}‖²) = dist(λ, essran U)²/b

    Raises:
        NotApplicable: without an essential range or for λ in it
    """
    if family.essran is None:
        raise NotApplicable(f"{family.id} declares no essential range of U")
    distance = float(family.essran.distance(lam))
    if distance <= 0:
        raise NotApplicable(f"λ = {lam} lies in essran(U)")
    epsilon = distance**2 / family.bound
    U = family.U

    def lower(x: Array) -> Array:
        return epsilon / (sample(U, np.asarray(x)) - lam)

    return BlockMultiplier(1.0, lower, f"hain_lust({lam})"), epsilon
