"""Cyclic Jacobi eigenvalue iteration for real symmetric matrices.

Works on a single ``(M, M)`` matrix or a stack ``(..., M, M)``; every matrix
in the stack is rotated at the same ``(p, q)`` pivot with its own angle, so a
batch of small adjacency matrices costs one vectorised sweep per pivot.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 100


class JacobiConvergenceError(RuntimeError):
    pass


def off_diagonal_norm(a: np.ndarray) -> np.ndarray:
    off = ~np.eye(a.shape[-1], dtype=bool)
    return np.sqrt(np.square(a[..., off]).sum(axis=-1))


def jacobi_eigenvalues(a, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Eigenvalues (ascending) of symmetric ``a`` via cyclic Jacobi sweeps.

    Sweeps stop once the Frobenius norm of the off-diagonal part is at most
    ``tol`` for every matrix in the stack.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if not np.allclose(a, np.swapaxes(a, -1, -2)):
        raise ValueError("matrix is not symmetric")
    single = a.ndim == 2
    a = a.reshape(-1, a.shape[-1], a.shape[-1])
    m = a.shape[-1]

    for _ in range(max_sweeps + 1):
        if np.all(off_diagonal_norm(a) <= tol):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[:, p, q]
                active = np.abs(apq) > 1e-300
                if not active.any():
                    continue
                safe = np.where(active, apq, 1.0)
                theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
                big = np.abs(theta) > 1e150
                theta_s = np.where(big, 1.0, theta)
                t = np.where(theta_s >= 0, 1.0, -1.0) / (np.abs(theta_s) + np.sqrt(theta_s * theta_s + 1.0))
                # theta^2 would overflow; t -> 1/(2 theta)
                t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c = np.where(active, c, 1.0)[:, None]
                s = np.where(active, s, 0.0)[:, None]
                col_p = a[:, :, p].copy()
                col_q = a[:, :, q]
                a[:, :, p] = c * col_p - s * col_q
                a[:, :, q] = s * col_p + c * col_q
                row_p = a[:, p, :].copy()
                row_q = a[:, q, :]
                a[:, p, :] = c * row_p - s * row_q
                a[:, q, :] = s * row_p + c * row_q
    else:
        raise JacobiConvergenceError(f"no convergence after {max_sweeps} sweeps")

    eig = np.sort(np.diagonal(a, axis1=-2, axis2=-1), axis=-1)
    return eig[0] if single else eig
