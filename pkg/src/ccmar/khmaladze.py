"""Martingale-transform ingredients for testing standard normality.

With ``h(x) = (1, x, x^2 - 1)``,

    Gamma(x) = int_x^inf h(z) h(z)' phi(z) dz
    H(t)     = int_-inf^t h(x)' Gamma(x)^{-1} phi(x) dx

``Gamma`` has a closed form in ``phi(x)`` and ``Q(x) = 1 - Phi(x)``.  It
degenerates as ``x -> inf``, so ``H`` is only tabulated up to ``T_MAX``.
The table stores values and exact derivatives on a uniform grid, and
evaluation is by cubic Hermite interpolation.
"""

from __future__ import annotations

import functools

import numpy as np
from scipy.special import ndtr

from ._kernels_py import _hermite
from .errors import SingularGamma

T_MIN = -10.0
T_MAX = 5.0
GRID_STEP = 0.005
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _phi(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


def h_vec(x):
    """``(1, x, x^2 - 1)``; vectorises over the trailing axis."""
    x = np.asarray(x, dtype=float)
    return np.stack([np.ones_like(x), x, x * x - 1.0], axis=-1)


def gamma_matrix(x):
    """Upper-tail second-moment matrix of ``h(Z)``, ``Z ~ N(0, 1)``.

    Accepts a scalar or an array; the result has shape ``x.shape + (3, 3)``.
    """
    x = np.asarray(x, dtype=float)
    q = ndtr(-x)
    p = _phi(x)
    g = np.empty(x.shape + (3, 3))
    g[..., 0, 0] = q
    g[..., 0, 1] = g[..., 1, 0] = p
    g[..., 0, 2] = g[..., 2, 0] = x * p
    g[..., 1, 1] = x * p + q
    g[..., 1, 2] = g[..., 2, 1] = (x * x + 1.0) * p
    g[..., 2, 2] = (x**3 + x) * p + 2.0 * q
    return g


def h_integrand(x):
    """``h(x)' Gamma(x)^{-1} phi(x)``, the derivative of ``H``."""
    x = np.asarray(x, dtype=float)
    g = gamma_matrix(x)
    rhs = h_vec(x)[..., None]
    out = np.linalg.solve(g, rhs)[..., 0]
    return out * _phi(x)[..., None]


class HTable:
    """Tabulated ``H`` on ``[T_MIN, T_MAX]`` with Hermite interpolation."""

    def __init__(self, t_min: float = T_MIN, t_max: float = T_MAX, step: float = GRID_STEP):
        n_panels = int(round((t_max - t_min) / step))
        self.knots = np.linspace(t_min, t_max, n_panels + 1)
        self.t_min, self.t_max = float(self.knots[0]), float(self.knots[-1])
        self.step = (self.t_max - self.t_min) / n_panels
        half = 0.5 * self.step
        mids = self.knots[:-1] + half
        nodes = mids[:, None] + half * _GL_NODES[None, :]
        panel = half * np.einsum("k,pkj->pj", _GL_WEIGHTS, h_integrand(nodes))
        self.values = np.vstack([np.zeros((1, 3)), np.cumsum(panel, axis=0)])
        self.derivs = h_integrand(self.knots)

    def __call__(self, t):
        """``H(t)``, shape ``t.shape + (3,)``; zero below the table."""
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t_max + 1e-12):
            raise SingularGamma(f"H is only available for t <= {self.t_max}")
        return _hermite(t, self.t_min, self.step, self.values, self.derivs)

    def derivative(self, t):
        return h_integrand(t)


@functools.lru_cache(maxsize=1)
def default_table() -> HTable:
    return HTable()


def h_transform(t):
    """Row vector ``H(t)`` for ``t <= T_MAX``."""
    return default_table()(t)
