"""Small dense linear algebra in working precision.

numpy's LAPACK routines stop at double precision; the systems here are at
most a few dozen unknowns, so plain elimination is enough.
"""
from __future__ import annotations

import numpy as np

from .series_core import WORK_DTYPE


class SingularMatrix(ArithmeticError):
    pass


def solve(A, B) -> np.ndarray:
    """``A X = B`` by Gaussian elimination with partial pivoting."""
    A = np.array(A, dtype=WORK_DTYPE)
    B = np.array(B, dtype=WORK_DTYPE)
    vec = B.ndim == 1
    if vec:
        B = B[:, None]
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n:
        raise ValueError("shape mismatch")
    M = np.concatenate([A, B], axis=1)
    for c in range(n):
        p = c + int(np.argmax(np.abs(M[c:, c])))
        if M[p, c] == 0:
            raise SingularMatrix("matrix is singular")
        if p != c:
            M[[c, p]] = M[[p, c]]
        M[c + 1:] -= np.outer(M[c + 1:, c] / M[c, c], M[c])
    X = np.zeros((n, M.shape[1] - n), dtype=WORK_DTYPE)
    for r in range(n - 1, -1, -1):
        X[r] = (M[r, n:] - M[r, r + 1:n] @ X[r + 1:]) / M[r, r]
    return X[:, 0] if vec else X


def inv(A) -> np.ndarray:
    return solve(A, np.eye(len(A), dtype=WORK_DTYPE))


def lstsq(A, y, refine: int = 2) -> np.ndarray:
    """Least squares in double precision with iterative refinement of the residual."""
    A = np.asarray(A, dtype=WORK_DTYPE)
    y = np.asarray(y, dtype=WORK_DTYPE)
    Ad = A.astype(complex)
    x = np.linalg.lstsq(Ad, y.astype(complex), rcond=None)[0].astype(WORK_DTYPE)
    for _ in range(refine):
        r = y - A @ x
        x = x + np.linalg.lstsq(Ad, r.astype(complex), rcond=None)[0].astype(WORK_DTYPE)
    return x


def cond(A) -> float:
    A = np.asarray(A)
    return float(np.linalg.cond(A.astype(complex))) if A.size else 1.0
