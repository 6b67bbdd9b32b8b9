"""Small dense symmetric eigensolver and subspace angle helpers.

A cyclic Jacobi sweep is plenty at the dimensions used here (d <= 64),
is deterministic across platforms, and lets the package pin its own
eigenvector sign and ordering conventions.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateEigensolveError

__all__ = ["jacobi_eigh", "projector_bases", "principal_angles"]


def jacobi_eigh(A, max_sweeps: int = 50, tol: float = 1e-14):
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.

    Columns of the returned matrix are eigenvectors; each is normalized so
    its largest-magnitude entry is positive (deterministic signs).
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    d = A.shape[0]
    work = 0.5 * (A + A.T)
    vecs = np.eye(d)
    scale = max(1.0, float(np.abs(work).max()))
    for _ in range(max_sweeps):
        off_diag = work - np.diag(np.diag(work))
        if np.sqrt((off_diag**2).sum()) <= tol * scale * d:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = work[p, q]
                if abs(apq) <= tol * scale:
                    continue
                tau = (work[q, q] - work[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot_p = c * work[:, p] - s * work[:, q]
                rot_q = s * work[:, p] + c * work[:, q]
                work[:, p], work[:, q] = rot_p, rot_q
                rot_p = c * work[p, :] - s * work[q, :]
                rot_q = s * work[p, :] + c * work[q, :]
                work[p, :], work[q, :] = rot_p, rot_q
                rot_p = c * vecs[:, p] - s * vecs[:, q]
                rot_q = s * vecs[:, p] + c * vecs[:, q]
                vecs[:, p], vecs[:, q] = rot_p, rot_q
    else:
        raise DegenerateEigensolveError(f"Jacobi did not converge in {max_sweeps} sweeps")
    eigenvalues = np.diag(work).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vecs = vecs[:, order]
    for k in range(d):
        j = int(np.argmax(np.abs(vecs[:, k])))
        if vecs[j, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return eigenvalues, vecs


def projector_bases(projector: np.ndarray):
    """Orthonormal bases of the range and null space of an orthogonal projector."""
    eigenvalues, vecs = jacobi_eigh(projector)
    in_range = eigenvalues > 0.5
    return vecs[:, in_range], vecs[:, ~in_range]


def principal_angles(basis_a: np.ndarray, basis_b: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between two orthonormal column spans."""
    if basis_a.shape[1] == 0 or basis_b.shape[1] == 0:
        return np.empty(0)
    cosines = np.linalg.svd(basis_a.T @ basis_b, compute_uv=False)
    return np.arccos(np.clip(cosines, -1.0, 1.0))
