"""Least squares through a column-pivoted QR decomposition."""

from __future__ import annotations

import numpy as np
from scipy.linalg import qr, solve_triangular

from .errors import InsufficientData, RankDeficientDesign

PIVOT_RTOL = 1e-10


def solve_least_squares(X: np.ndarray, y: np.ndarray, rtol: float = PIVOT_RTOL) -> np.ndarray:
    """Minimise ``||y - X b||`` for full-column-rank ``X``.

    Raises :class:`RankDeficientDesign` when a pivot of the R factor falls
    below ``rtol`` times the largest one.  ``y`` may be a matrix, in which
    case each column is solved separately.
    """
    n, p = X.shape
    if n < p:
        raise InsufficientData(f"{n} rows for {p} unknowns")
    Q, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[0] == 0.0 or diag[-1] < rtol * diag[0]:
        raise RankDeficientDesign(f"design is numerically rank deficient (pivot ratio {diag[-1] / max(diag[0], 1e-300):.3g})")
    z = solve_triangular(R, Q.T @ y)
    b = np.empty_like(z)
    b[piv] = z
    return b
