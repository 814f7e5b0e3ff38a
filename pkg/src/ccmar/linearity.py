"""Test that ``rho`` is constant (or linear) via a marked residual process.

Under the null the model is ``Y = beta'Z + eps`` with ``Z = (1, U)``, or
``Z = (1, U, V)`` when testing a linear ``rho``.  A weight function ``chi``
of ``V`` is regressed on ``Z``; its residuals ``R_j``, scaled to unit mean
square, mark the null residuals:

    T = sup_t | N^{-1/2} sum_j W_j 1[eps0_j <= t] |.

Since ``sum R_j = 0`` the process is a bridge and its null limit is the
Kolmogorov law ``sup |B0|``.  The process only moves at the residuals, so
the supremum is a running maximum of partial sums taken in residual order.
The error density is assumed uniformly continuous; nothing here checks it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .data import MarDataset
from .errors import DegenerateChi, EmptyInput, InputError, InsufficientData, NonConstantChiRequired
from .kernels import marked_partial_sum_max
from .limits import SUP_BRIDGE, p_value, upper_critical_value
from .linalg import solve_least_squares

DEGENERATE_RTOL = 1e-10


class NullDesign(str, Enum):
    CONSTANT_RHO = "constant_rho"
    LINEAR_RHO = "linear_rho"

    @classmethod
    def parse(cls, value) -> NullDesign:
        aliases = {"constant": cls.CONSTANT_RHO, "linear": cls.LINEAR_RHO}
        if isinstance(value, cls):
            return value
        return aliases.get(value) or cls(value)


CHI_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "cos1": lambda v: np.cos(np.pi * v),
    "cos2": lambda v: np.cos(2.0 * np.pi * v),
    "poly2": lambda v: v * v,
}

DEFAULT_CHI = {NullDesign.CONSTANT_RHO: "cos1", NullDesign.LINEAR_RHO: "cos2"}


@dataclass(frozen=True)
class LinearityReport:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    n_used: int
    chi_name: str
    null_design: str
    sup_location: float
    alpha: float

    def to_dict(self) -> dict:
        return asdict(self)


def null_design_matrix(u, v, null_design=NullDesign.CONSTANT_RHO) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    cols = [np.ones(u.shape[0]), u]
    if NullDesign.parse(null_design) is NullDesign.LINEAR_RHO:
        cols.append(np.asarray(v, dtype=float))
    return np.column_stack(cols)


def _used(weights, n: int) -> np.ndarray:
    weights = np.ones(n, dtype=np.int8) if weights is None else np.asarray(weights)
    return np.flatnonzero(weights == 1)


def fit_null_linear(u, v, y, weights=None, null_design=NullDesign.CONSTANT_RHO):
    """Least squares of ``y`` on ``Z`` over weight-1 rows.

    Returns ``(beta_hat, residuals)``; residuals are for the used rows only,
    in row order.
    """
    Z = null_design_matrix(u, v, null_design)
    used = _used(weights, Z.shape[0])
    if used.size < Z.shape[1] + 1:
        raise InsufficientData(f"{used.size} usable rows for a {Z.shape[1]}-parameter null fit")
    Zu = Z[used]
    yu = np.asarray(y, dtype=float)[used]
    beta = solve_least_squares(Zu, yu)
    return beta, yu - Zu @ beta


def resolve_chi(chi) -> tuple[str, Callable[[np.ndarray], np.ndarray]]:
    if callable(chi):
        return getattr(chi, "__name__", "custom"), chi
    try:
        return chi, CHI_FUNCTIONS[chi]
    except KeyError:
        raise InputError(f"unknown chi {chi!r}; choose from {sorted(CHI_FUNCTIONS)}") from None


def chi_weights(u, v, weights=None, chi="cos1", null_design=NullDesign.CONSTANT_RHO):
    """Residuals ``R`` of ``chi(V)`` on ``Z`` and their normalised version ``W``.

    Both are returned for the used rows only; ``mean(W**2) == 1``.
    """
    _, fn = resolve_chi(chi)
    grid = np.linspace(0.0, 1.0, 101)
    on_grid = np.asarray(fn(grid), dtype=float)
    if np.ptp(on_grid) <= 1e-12 * (1.0 + np.max(np.abs(on_grid))):
        raise NonConstantChiRequired("chi must be non-constant on [0, 1]")
    Z = null_design_matrix(u, v, null_design)
    used = _used(weights, Z.shape[0])
    if used.size < Z.shape[1] + 1:
        raise InsufficientData(f"{used.size} usable rows for the chi regression")
    Zu = Z[used]
    target = np.asarray(fn(np.asarray(v, dtype=float)[used]), dtype=float)
    gamma = solve_least_squares(Zu, target)
    R = target - Zu @ gamma
    rms = float(np.sqrt(np.mean(R**2)))
    if not rms > DEGENERATE_RTOL * max(float(np.sqrt(np.mean(target**2))), 1e-300):
        raise DegenerateChi("chi(V) lies in the span of the null design")
    return R, R / rms


def linearity_statistic(W, residuals, normalizer: int | None = None) -> tuple[float, float]:
    """``max |partial sums of W in residual order| / sqrt(normalizer)``.

    Tied residuals are summed before the partial sum is read.  Returns the
    statistic and the residual at which the maximum is reached.
    """
    W = np.asarray(W, dtype=float).ravel()
    e = np.asarray(residuals, dtype=float).ravel()
    if W.size == 0:
        raise EmptyInput("no observations")
    if W.shape != e.shape:
        raise InputError("marks and residuals differ in length")
    normalizer = W.size if normalizer is None else normalizer
    if normalizer < 1:
        raise InputError("normalizer must be >= 1")
    order = np.argsort(e, kind="stable")
    best, loc = marked_partial_sum_max(np.ascontiguousarray(e[order]), np.ascontiguousarray(W[order]))
    return float(best / np.sqrt(normalizer)), loc


def run_linearity_test(
    data: MarDataset,
    alpha: float = 0.05,
    chi=None,
    null_design=NullDesign.CONSTANT_RHO,
) -> LinearityReport:
    """Complete-case test of a constant (or linear) ``rho``."""
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    design = NullDesign.parse(null_design)
    chi_name, fn = resolve_chi(DEFAULT_CHI[design] if chi is None else chi)
    _, resid = fit_null_linear(data.u, data.v, data.y, data.delta, design)
    _, W = chi_weights(data.u, data.v, data.delta, fn, design)
    stat, loc = linearity_statistic(W, resid, resid.size)
    crit = upper_critical_value(SUP_BRIDGE, alpha)
    return LinearityReport(
        statistic=stat,
        critical_value=crit,
        p_value=p_value(SUP_BRIDGE, stat),
        reject=bool(stat > crit),
        n_used=int(resid.size),
        chi_name=chi_name,
        null_design=design.value,
        sup_location=loc,
        alpha=alpha,
    )


def run_full_data_linearity_test(u, v, y, alpha: float = 0.05, chi=None, null_design=NullDesign.CONSTANT_RHO):
    n = np.asarray(v).shape[0]
    return run_linearity_test(MarDataset(u, v, y, np.ones(n, dtype=np.int8)), alpha, chi, null_design)
