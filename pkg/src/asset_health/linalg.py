"""Small dense symmetric linear algebra used by PCA.

Matrices are 2-D float64 numpy arrays. The eigensolver is a cyclic Jacobi
iteration, which is simple and robust for the ~20x20 covariance matrices
this package produces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError


def as_matrix(a) -> np.ndarray:
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix has non-finite entries")
    return m


def matmul(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} x {B.shape}")
    return A @ B


def center_columns(X):
    """Subtract each column's mean."""
    X = as_matrix(X)
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    return X - X.mean(axis=0)


def gram(X) -> np.ndarray:
    """Sample covariance ``X^T X / (rows - 1)`` of an already-centered matrix."""
    X = as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("covariance needs at least 2 rows")
    S = X.T @ X / (n - 1)
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class SymEigen:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]
    sweeps: int = 0


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.sqrt(np.sum(off * off)))


def sym_eig(S, tol: float = 1e-12, max_sweeps: int = 100, psd: bool = False) -> SymEigen:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below ``tol``. With
    ``psd=True`` tiny negative eigenvalues (>= -1e-10 relative to the
    largest magnitude) are clamped to zero. Eigenvector signs are fixed so
    that each column's largest-magnitude entry is positive.
    """
    A = as_matrix(S)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {A.shape}")
    scale = max(float(np.abs(A).max()), 1.0) if n else 1.0
    if np.abs(A - A.T).max(initial=0.0) > 1e-9 * scale:
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)

    sweeps = 0
    while _off_norm(A) >= tol:
        if sweeps >= max_sweeps:
            raise NumericalError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app, aqq = A[p, p], A[q, q]
                # annihilate entries that can no longer move the diagonal
                g = 100.0 * abs(apq)
                if sweeps > 4 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq

    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")
    lam, V = lam[order], V[:, order]
    if psd:
        floor = -1e-10 * max(float(np.abs(lam).max(initial=0.0)), 1.0)
        if (lam < floor).any():
            raise NumericalError(f"covariance has a negative eigenvalue {lam.min():.3e}")
        lam = np.maximum(lam, 0.0)
    for j in range(n):
        k = int(np.argmax(np.abs(V[:, j])))
        if V[k, j] < 0:
            V[:, j] = -V[:, j]
    return SymEigen(lam, V, sweeps)
