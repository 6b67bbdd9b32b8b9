import numpy as np
import pytest

from mra_lab.linalg import jacobi_eigh, principal_angles, projector_bases


@pytest.mark.parametrize("d", [1, 2, 3, 6, 12, 33])
def test_jacobi_matches_numpy(d):
    rng = np.random.default_rng(d)
    A = rng.standard_normal((d, d))
    A = 0.5 * (A + A.T)
    vals, vecs = jacobi_eigh(A)
    ref = np.sort(np.linalg.eigvalsh(A))[::-1]
    assert np.allclose(vals, ref, atol=1e-10)
    # eigenvector property and orthonormality
    assert np.abs(A @ vecs - vecs * vals).max() <= 1e-9 * max(1.0, np.abs(vals).max())
    assert np.abs(vecs.T @ vecs - np.eye(d)).max() <= 1e-10


def test_jacobi_descending_order_and_signs():
    A = np.diag([3.0, -1.0, 2.0])
    vals, vecs = jacobi_eigh(A)
    assert np.array_equal(vals, np.array([3.0, 2.0, -1.0]))
    # canonical sign: the largest-magnitude entry of each column is positive
    for k in range(3):
        assert vecs[np.argmax(np.abs(vecs[:, k])), k] > 0


def test_jacobi_zero_matrix():
    vals, vecs = jacobi_eigh(np.zeros((4, 4)))
    assert np.array_equal(vals, np.zeros(4))
    assert np.array_equal(vecs, np.eye(4))


def test_jacobi_is_deterministic():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((8, 8))
    A = A + A.T
    v1 = jacobi_eigh(A)
    v2 = jacobi_eigh(A)
    assert np.array_equal(v1[0], v2[0])
    assert np.array_equal(v1[1], v2[1])


def test_projector_bases():
    P = np.diag([1.0, 0.0, 1.0, 0.0])
    rng_basis, null_basis = projector_bases(P)
    assert rng_basis.shape == (4, 2)
    assert null_basis.shape == (4, 2)
    assert np.abs(P @ rng_basis - rng_basis).max() <= 1e-12
    assert np.abs(P @ null_basis).max() <= 1e-12


def test_principal_angles():
    a = np.eye(3)[:, :2]
    assert principal_angles(a, a).max() <= 1e-12
    b = np.eye(3)[:, 1:]
    angles = principal_angles(a, b)
    assert angles.min() == pytest.approx(0.0, abs=1e-12)  # shared axis
    assert angles.max() == pytest.approx(np.pi / 2, abs=1e-12)
    assert principal_angles(np.empty((3, 0)), b).size == 0
