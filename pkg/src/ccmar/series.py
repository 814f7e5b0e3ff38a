"""Series least squares for the partially linear model ``Y = theta'U + rho(V) + eps``.

``rho`` is approximated on ``[0, 1]`` by the cosine basis
``phi_0 = 1, phi_k(x) = cos(pi k x)``; ``phi_0`` plays the role of the
intercept.  Complete-case fits use only the ``delta == 1`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MarDataset
from .errors import DegenerateResiduals, DomainError, InsufficientData
from .linalg import solve_least_squares

DEGENERATE_RTOL = 1e-12


def cosine_basis(k: int, x):
    """``cos(pi k x)`` on ``[0, 1]``; exactly 1 for ``k == 0``."""
    x = np.asarray(x, dtype=float)
    if k < 0:
        raise DomainError(f"basis index must be >= 0, got {k}")
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise DomainError("cosine basis is defined on [0, 1]")
    out = np.ones_like(x) if k == 0 else np.cos(np.pi * k * x)
    return float(out) if out.ndim == 0 else out


def cosine_design(v, K: int) -> np.ndarray:
    """Columns ``phi_0(v), ..., phi_K(v)``."""
    v = np.asarray(v, dtype=float)
    return np.column_stack([cosine_basis(k, v) for k in range(K + 1)])


def choose_K(n_effective: int) -> int:
    """Number of cosine terms beyond the constant: ``max(1, round(n ** 0.25))``."""
    if n_effective < 1:
        raise DomainError("n_effective must be >= 1")
    return max(1, int(round(n_effective**0.25)))


@dataclass(frozen=True, eq=False)
class SeriesFit:
    theta_hat: np.ndarray
    beta_hat: np.ndarray
    K: int
    residuals: np.ndarray
    sigma_hat: float
    used_indices: np.ndarray
    response_scale: float = 1.0

    @property
    def n_used(self) -> int:
        return self.residuals.shape[0]

    def rho_hat(self, v):
        return cosine_design(v, self.K) @ self.beta_hat

    def predict(self, u, v):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return u @ self.theta_hat + self.rho_hat(v)

    def summary(self) -> dict:
        return {
            "theta_hat": self.theta_hat.tolist(),
            "beta_hat": self.beta_hat.tolist(),
            "sigma_hat": self.sigma_hat,
            "K": self.K,
            "N": self.n_used,
        }


def fit_series_ls(u, v, y, weights=None, K: int | None = None) -> SeriesFit:
    """Least squares of ``y`` on ``[u, phi_0(v), ..., phi_K(v)]`` over weight-1 rows.

    Parameters
    ----------
    u : array_like, shape (n, m)
    v, y : array_like, shape (n,)
        ``y`` on weight-0 rows is never read (it may be ``nan``).
    weights : array_like of 0/1, optional
        Row selector; all ones by default.
    K : int, optional
        Highest cosine index; ``choose_K`` of the number of used rows by default.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = u.shape
    weights = np.ones(n, dtype=np.int8) if weights is None else np.asarray(weights)
    used = np.flatnonzero(weights == 1)
    N = used.shape[0]
    if K is None:
        K = choose_K(max(N, 1))
    if N < m + K + 1:
        raise InsufficientData(f"{N} usable rows for {m + K + 1} coefficients")
    X = np.hstack([u[used], cosine_design(v[used], K)])
    yu = y[used]
    coef = solve_least_squares(X, yu)
    residuals = yu - X @ coef
    sigma_hat = float(np.sqrt(np.mean(residuals**2)))
    scale = float(np.sqrt(np.mean(yu**2)))
    return SeriesFit(coef[:m], coef[m:], K, residuals, sigma_hat, used, scale)


def fit_complete_case(data: MarDataset, K: int | None = None) -> SeriesFit:
    """Series fit on the observed rows, with ``K`` chosen from ``N`` by default."""
    return fit_series_ls(data.u, data.v, data.y, data.delta, K)


def normalized_residuals(fit: SeriesFit) -> np.ndarray:
    """Residuals divided by ``sigma_hat``.

    Residuals at rounding level (``sigma_hat <= 1e-12 * rms(y)``) count as
    exactly zero.
    """
    if not fit.sigma_hat > DEGENERATE_RTOL * fit.response_scale:
        raise DegenerateResiduals(f"residual scale {fit.sigma_hat:.3g} is zero to working precision")
    return fit.residuals / fit.sigma_hat
