import numpy as np
import pytest

from pencilrange import matkernel
from pencilrange.errors import NotHermitian, NotPositive, SingularB


def random_matrix(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


@pytest.mark.parametrize("backend", matkernel.BACKENDS)
@pytest.mark.parametrize("n", (1, 2, 7))
def test_hermitian_eig(rng, backend, n):
    """Test if both backends diagonalize a Hermitian matrix with orthonormal vectors"""
    M = random_matrix(rng, n)
    H = (M + M.conj().T) / 2
    values, vectors = matkernel.hermitian_eig(H, backend)
    assert np.allclose(values, np.linalg.eigvalsh(H), atol=1e-10)
    assert np.allclose(H @ vectors, vectors * values, atol=1e-9)
    assert np.allclose(vectors.conj().T @ vectors, np.eye(n), atol=1e-9)


def test_hermitian_eig_rejects_non_hermitian():
    """Test if a non-Hermitian input raises NotHermitian"""
    with pytest.raises(NotHermitian):
        matkernel.hermitian_eig(np.array([[1, 2], [0, 1]]))


@pytest.mark.parametrize("backend", matkernel.BACKENDS)
def test_hermitian_max(rng, backend):
    """Test if the top eigenpair is returned"""
    M = random_matrix(rng, 5)
    H = (M + M.conj().T) / 2
    value, vector = matkernel.hermitian_max(H, backend)
    assert value == pytest.approx(np.linalg.eigvalsh(H)[-1])
    assert np.allclose(H @ vector, value * vector, atol=1e-9)


def test_tridiagonal_max(rng):
    """Test if the tridiagonal shortcut matches the dense solver for complex bands"""
    n = 6
    diagonal = rng.standard_normal(n)
    sub = rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
    H = np.diag(diagonal).astype(complex) + np.diag(sub, -1) + np.diag(sub.conj(), 1)
    value, vector = matkernel.tridiagonal_max(diagonal, sub)
    assert value == pytest.approx(np.linalg.eigvalsh(H)[-1])
    assert np.allclose(H @ vector, value * vector, atol=1e-9)


@pytest.mark.parametrize("backend", matkernel.BACKENDS)
def test_general_eig(rng, backend):
    """Test if the eigenvalues of a general complex matrix are found"""
    M = random_matrix(rng, 6)
    values = matkernel.general_eig(M, backend)
    expected = np.linalg.eigvals(M)
    assert values.shape == (6,)
    for value in values:
        assert np.min(np.abs(expected - value)) < 1e-8


def test_general_eig_triangular():
    """Test if a triangular matrix gives its diagonal"""
    M = np.array([[1, 5, 2], [0, 2j, 1], [0, 0, -3]])
    values = np.sort_complex(matkernel.general_eig(M, "native"))
    assert np.allclose(values, np.sort_complex(np.array([1, 2j, -3])), atol=1e-10)


def test_generalized_eig(rng):
    """Test if the pencil eigenvalues solve det(A - λB) = 0"""
    A = random_matrix(rng, 4)
    B = random_matrix(rng, 4) + 4 * np.eye(4)
    for lam in matkernel.generalized_eig(A, B):
        assert matkernel.sigma_min(A - lam * B) < 1e-8 * np.linalg.norm(A)


def test_generalized_eig_diagonal():
    """Test if diagonal pencils divide elementwise"""
    values = matkernel.generalized_eig(np.diag([2.0, 6.0]), np.diag([1.0, 3.0]))
    assert np.allclose(values, [2.0, 2.0])


def test_generalized_eig_singular_b():
    """Test if a numerically singular B raises SingularB"""
    with pytest.raises(SingularB) as excinfo:
        matkernel.generalized_eig(np.eye(2), np.diag([1.0, 1e-12]))
    assert excinfo.value.condition > matkernel.SINGULAR_COND


def test_hpd_invsqrt(rng):
    """Test if S B S = I for HPD B"""
    C = random_matrix(rng, 4)
    B = C @ C.conj().T + np.eye(4)
    S = matkernel.hpd_invsqrt(B)
    assert np.allclose(S @ B @ S, np.eye(4), atol=1e-10)


@pytest.mark.parametrize(
    "B", (np.diag([1.0, -1.0]), np.array([[1.0, 2.0], [2.0, 1.0]]))
)
def test_hpd_invsqrt_not_positive(B):
    """Test if indefinite matrices raise NotPositive"""
    with pytest.raises(NotPositive):
        matkernel.hpd_invsqrt(B)


def test_polar_multiplier(rng):
    """Test if B(T - λ) is positive semidefinite and B is unitary"""
    T = random_matrix(rng, 5)
    lam = 0.3 - 0.2j
    B = matkernel.polar_multiplier(T, lam)
    product = B @ (T - lam * np.eye(5))
    assert np.allclose(product, product.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(product).min() > -1e-10
    assert np.allclose(B @ B.conj().T, np.eye(5), atol=1e-10)


def test_norms():
    """Test sigma_min, spectral_norm and condition_number on a diagonal matrix"""
    M = np.diag([3.0, -0.5, 2.0])
    assert matkernel.sigma_min(M) == pytest.approx(0.5)
    assert matkernel.spectral_norm(M) == pytest.approx(3.0)
    assert matkernel.condition_number(M) == pytest.approx(6.0)
    assert matkernel.condition_number(np.diag([1.0, 0.0])) == np.inf


def test_default_backend(monkeypatch):
    """Test the precedence of explicit, process-wide and environment backends"""
    monkeypatch.setenv("PENCILRANGE_BACKEND", "native")
    assert matkernel.get_default_backend() == "native"
    matkernel.set_default_backend("lapack")
    assert matkernel.get_default_backend() == "lapack"
    matkernel.set_default_backend(None)
    assert matkernel.get_default_backend() == "native"
    with pytest.raises(ValueError):
        matkernel.set_default_backend("cuda")


def test_as_cmatrix():
    """Test if scalars become 1x1 matrices and non-square input is refused"""
    assert matkernel.as_cmatrix(2.0).shape == (1, 1)
    with pytest.raises(ValueError):
        matkernel.as_cmatrix(np.ones((2, 3)))
