"""Dense complex linear-algebra kernels

Two backends provide the eigensolvers:

- ``"lapack"`` (default) routes through :mod:`scipy.linalg`
- ``"native"`` runs the in-house Householder tridiagonalization + implicit QL
  (Hermitian) and Householder-Hessenberg + Wilkinson-shifted QR (general)

The backend is chosen per call, else by :func:`set_default_backend`,
else by the ``PENCILRANGE_BACKEND`` environment variable.
"""
from __future__ import annotations

import math
import os
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NotHermitian, NotPositive, SingularB
from .types import CMatrix, CVector, RVector

BACKENDS = ("lapack", "native")
DEFAULT_BACKEND = "lapack"
HERMITIAN_TOL = 1e-12
SINGULAR_COND = 1e10
HPD_THRESHOLD = 1e-12
SWEEPS_PER_ROW = 30

_default_backend: Optional[str] = None


def get_default_backend() -> str:
    """Return the backend used when a call does not name one"""
    if _default_backend is not None:
        return _default_backend
    return os.environ.get("PENCILRANGE_BACKEND", DEFAULT_BACKEND)


def set_default_backend(backend: Optional[str]) -> None:
    """Set the process-wide backend, None restores the environment/default lookup"""
    global _default_backend  # pylint: disable=global-statement
    if backend is not None:
        _check_backend(backend)
    _default_backend = backend


def _check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
    return backend


def _resolve(backend: Optional[str]) -> str:
    return _check_backend(backend if backend is not None else get_default_backend())


def as_cmatrix(M: object) -> CMatrix:
    """Return `M` as a square complex128 array"""
    arr = np.array(M, dtype=np.complex128, ndmin=2)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def is_hermitian(M: CMatrix, tol: float = HERMITIAN_TOL) -> bool:
    """True iff max|M - M*| <= tol * max|M|"""
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    return float(np.max(np.abs(M - M.conj().T), initial=0.0)) <= tol * scale


def _require_hermitian(M: CMatrix) -> None:
    if not is_hermitian(M):
        deviation = float(np.max(np.abs(M - M.conj().T)))
        raise NotHermitian(f"max|M - M*| = {deviation:.3e}")


def hermitian_eig(
    M: CMatrix, backend: Optional[str] = None
) -> tuple[RVector, CMatrix]:
    """Eigen-decomposition of a Hermitian matrix

    Returns:
        ascending eigenvalues and a unitary matrix of eigenvectors (columns)

    Raises:
        NotHermitian: when M is not Hermitian within the tolerance
        NoConvergence: when the iteration cap is exceeded
    """
    M = as_cmatrix(M)
    _require_hermitian(M)
    H = (M + M.conj().T) / 2
    if _resolve(backend) == "lapack":
        try:
            values, vectors = scipy.linalg.eigh(H)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
        return values, vectors.astype(np.complex128)
    return _native_hermitian_eig(H)


def hermitian_max(M: CMatrix, backend: Optional[str] = None) -> tuple[float, CVector]:
    """Largest eigenvalue of a Hermitian matrix and a unit eigenvector"""
    M = as_cmatrix(M)
    n = M.shape[0]
    if _resolve(backend) == "lapack":
        try:
            values, vectors = scipy.linalg.eigh(
                (M + M.conj().T) / 2, subset_by_index=[n - 1, n - 1]
            )
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
        return float(values[0]), vectors[:, 0].astype(np.complex128)
    values, vectors = hermitian_eig(M, backend="native")
    return float(values[-1]), vectors[:, -1]


def tridiagonal_max(
    diagonal: RVector, offdiagonal: CVector
) -> tuple[float, CVector]:
    """Largest eigenvalue and eigenvector of a Hermitian tridiagonal matrix

    Arguments:
        diagonal: the real main diagonal
        offdiagonal: the (complex) subdiagonal, M[k+1, k]
    """
    n = diagonal.shape[0]
    if n == 1:
        return float(diagonal[0]), np.ones(1, dtype=np.complex128)
    magnitude = np.abs(offdiagonal)
    # diagonal similarity making the subdiagonal real and non-negative
    unit = np.ones_like(offdiagonal)
    nonzero = magnitude > 0
    unit[nonzero] = offdiagonal[nonzero] / magnitude[nonzero]
    phases = np.concatenate(([1.0 + 0.0j], np.cumprod(unit)))
    try:
        values, vectors = scipy.linalg.eigh_tridiagonal(
            diagonal, magnitude, select="i", select_range=(n - 1, n - 1)
        )
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return float(values[0]), phases * vectors[:, 0]


def general_eig(M: CMatrix, backend: Optional[str] = None) -> CVector:
    """All eigenvalues of a square complex matrix"""
    M = as_cmatrix(M)
    if _resolve(backend) == "lapack":
        try:
            return scipy.linalg.eigvals(M).astype(np.complex128)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
    return _native_general_eig(M)


def _is_diagonal(M: CMatrix) -> bool:
    return not np.any(M - np.diag(np.diagonal(M)))


def condition_number(M: CMatrix) -> float:
    """2-norm condition number, inf for singular matrices"""
    if _is_diagonal(M):
        magnitude = np.abs(np.diagonal(M))
        smallest = float(magnitude.min())
        return math.inf if smallest == 0 else float(magnitude.max()) / smallest
    values = scipy.linalg.svdvals(M)
    return math.inf if values[-1] == 0 else float(values[0] / values[-1])


def generalized_eig(
    A: CMatrix, B: CMatrix, backend: Optional[str] = None
) -> CVector:
    """Eigenvalues of the pencil A - λB through B^{-1}A

    Raises:
        SingularB: when cond(B) exceeds 1e10, the caller then locates
            eigenvalues by membership instead
    """
    A = as_cmatrix(A)
    B = as_cmatrix(B)
    if A.shape != B.shape:
        raise ValueError(f"pencil members differ in shape: {A.shape} vs {B.shape}")
    condition = condition_number(B)
    if condition > SINGULAR_COND:
        raise SingularB(condition)
    if _is_diagonal(A) and _is_diagonal(B):
        return (np.diagonal(A) / np.diagonal(B)).astype(np.complex128)
    return general_eig(scipy.linalg.solve(B, A), backend=backend)


def sigma_min(M: CMatrix) -> float:
    """Smallest singular value"""
    return float(scipy.linalg.svdvals(as_cmatrix(M))[-1])


def spectral_norm(M: CMatrix) -> float:
    """Largest singular value"""
    if _is_diagonal(M):
        return float(np.max(np.abs(np.diagonal(M)), initial=0.0))
    return float(scipy.linalg.svdvals(as_cmatrix(M))[0])


def polar_multiplier(T: CMatrix, lam: complex) -> CMatrix:
    """The adjoint B = U* of the polar factor of T - λ = U|T - λ|

    B(T - λ) equals |T - λ|. For singular T - λ the partial isometry
    is returned, vanishing on the kernel.
    """
    T = as_cmatrix(T)
    n = T.shape[0]
    left, values, right = scipy.linalg.svd(T - lam * np.eye(n))
    rank = int(np.count_nonzero(values > n * np.finfo(float).eps * values[0]))
    return (right[:rank].conj().T @ left[:, :rank].conj().T).astype(np.complex128)


def hpd_invsqrt(B: CMatrix, backend: Optional[str] = None) -> CMatrix:
    """S = B^{-1/2} for Hermitian positive definite B

    Raises:
        NotPositive: when the smallest eigenvalue is below 1e-12
    """
    B = as_cmatrix(B)
    if _is_diagonal(B):
        _require_hermitian(B)
        diagonal = np.real(np.diagonal(B))
        if diagonal.min() < HPD_THRESHOLD:
            raise NotPositive(f"smallest eigenvalue {diagonal.min():.3e} is below threshold")
        return np.diag(1 / np.sqrt(diagonal)).astype(np.complex128)
    values, vectors = hermitian_eig(B, backend=backend)
    if values[0] < HPD_THRESHOLD:
        raise NotPositive(f"smallest eigenvalue {values[0]:.3e} is below threshold")
    S = (vectors / np.sqrt(values)) @ vectors.conj().T
    return ((S + S.conj().T) / 2).astype(np.complex128)


def _householder(x: CVector) -> Optional[CVector]:
    """Unit vector v with (I - 2vv*)x parallel to e_1, None if x[1:] vanishes"""
    if not np.any(x[1:]):
        return None
    alpha = float(np.linalg.norm(x))
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
    v = x.copy()
    v[0] += phase * alpha
    return v / np.linalg.norm(v)


def _native_hermitian_eig(M: CMatrix) -> tuple[RVector, CMatrix]:
    n = M.shape[0]
    T = M.copy()
    Q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        v = _householder(T[k + 1 :, k])
        if v is None:
            continue
        T[k + 1 :, :] -= 2 * np.outer(v, v.conj() @ T[k + 1 :, :])
        T[:, k + 1 :] -= 2 * np.outer(T[:, k + 1 :] @ v, v.conj())
        Q[:, k + 1 :] -= 2 * np.outer(Q[:, k + 1 :] @ v, v.conj())

    # phase the subdiagonal to real non-negative values
    sub = np.diagonal(T, -1).copy()
    phase = 1.0 + 0.0j
    for k in range(n - 1):
        if sub[k] != 0:
            phase = phase * sub[k] / abs(sub[k])
        Q[:, k + 1] *= phase

    d = np.real(np.diagonal(T)).copy()
    e = np.concatenate((np.abs(sub), [0.0]))
    _implicit_ql(d, e, Q)
    order = np.argsort(d)
    return d[order], Q[:, order]


def _implicit_ql(d: RVector, e: RVector, Z: CMatrix) -> None:
    """Implicit QL with Wilkinson-type shifts on a real symmetric tridiagonal

    d is the diagonal, e[k] couples k and k+1. Rotations accumulate in the
    columns of Z. Works in place.
    """
    n = d.shape[0]
    eps = np.finfo(float).eps
    cap = SWEEPS_PER_ROW * n
    iterations = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= eps * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            iterations += 1
            if iterations > cap:
                raise NoConvergence(f"implicit QL exceeded {cap} iterations")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                column = Z[:, i + 1].copy()
                Z[:, i + 1] = s * Z[:, i] + c * column
                Z[:, i] = c * Z[:, i] - s * column
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0


def _hessenberg(M: CMatrix) -> CMatrix:
    H = M.copy()
    n = H.shape[0]
    for k in range(n - 2):
        v = _householder(H[k + 1 :, k])
        if v is None:
            continue
        H[k + 1 :, :] -= 2 * np.outer(v, v.conj() @ H[k + 1 :, :])
        H[:, k + 1 :] -= 2 * np.outer(H[:, k + 1 :] @ v, v.conj())
    return H


def _wilkinson_shift(block: CMatrix) -> complex:
    """Eigenvalue of the trailing 2x2 closest to the last diagonal entry"""
    a, b = block[-2, -2], block[-2, -1]
    c, d = block[-1, -2], block[-1, -1]
    half = (a - d) / 2
    root = np.sqrt(half * half + b * c)
    first, second = (a + d) / 2 + root, (a + d) / 2 - root
    return complex(first if abs(first - d) < abs(second - d) else second)


def _qr_step(block: CMatrix, shift: complex) -> None:
    """One explicitly shifted QR step on an upper Hessenberg block, in place"""
    m = block.shape[0]
    block -= shift * np.eye(m)
    rotations = []
    for k in range(m - 1):
        x, y = block[k, k], block[k + 1, k]
        r = math.hypot(abs(x), abs(y))
        c, s = (1.0 + 0.0j, 0.0j) if r == 0 else (x / r, y / r)
        G = np.array([[np.conj(c), np.conj(s)], [-s, c]])
        block[k : k + 2, k:] = G @ block[k : k + 2, k:]
        rotations.append(G)
    for k, G in enumerate(rotations):
        block[: k + 2, k : k + 2] = block[: k + 2, k : k + 2] @ G.conj().T
    block += shift * np.eye(m)


def _native_general_eig(M: CMatrix) -> CVector:
    n = M.shape[0]
    H = _hessenberg(M)
    eps = np.finfo(float).eps
    cap = SWEEPS_PER_ROW * n
    iterations = 0
    stalled = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0:
            if abs(H[lo, lo - 1]) <= eps * (abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])):
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stalled = 0
            continue
        iterations += 1
        stalled += 1
        if iterations > cap:
            raise NoConvergence(f"shifted QR exceeded {cap} iterations")
        block = H[lo : hi + 1, lo : hi + 1]
        if stalled % 10 == 0:
            # exceptional shift
            shift = complex(block[-1, -1] + 1.5 * abs(block[-1, -2]))
        else:
            shift = _wilkinson_shift(block)
        _qr_step(block, shift)
    return np.diagonal(H).copy()
