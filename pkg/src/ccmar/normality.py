"""Martingale-transform test that the regression errors are normal.

The statistic is the supremum over ``t`` of

    | N^{-1/2} sum_j ( 1[Z_j <= t] - H(t ^ Z_j) h(Z_j) ) |

where ``Z_j`` are the standardized residuals of the complete-case series
fit.  Under normal errors it converges to ``sup_{[0,1]} |B|``.

Sorting the residuals turns the process into ``A_i - H(t) . S_i`` on the
gap between the i-th and (i+1)-th distinct residual, with ``A_i`` a prefix
sum and ``S_i`` the suffix sum of ``h(Z_j)``.  Each gap is scanned on a
grid by the compiled kernel and the best candidates are then polished with
a bounded scalar search.  The supremum is restricted to ``t <= T_MAX``
(``Gamma`` is numerically singular beyond it).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .data import MarDataset
from .errors import EmptyInput, InsufficientData, InputError
from .khmaladze import T_MAX, T_MIN, HTable, default_table, h_vec
from .kernels import martingale_gap_max
from .limits import SUP_BM, p_value, upper_critical_value
from .series import choose_K, fit_series_ls, normalized_residuals

N_REFINE = 50
_POLISH_CANDIDATES = 8


@dataclass(frozen=True)
class NormalityReport:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    n_used: int
    K_used: int
    sup_location: float
    alpha: float

    def to_dict(self) -> dict:
        return asdict(self)


def _process_pieces(z: np.ndarray, table: HTable):
    """Gap endpoints, levels ``A_i`` and slopes ``S_i`` of the transformed process."""
    z = np.sort(z)
    u, first, counts = np.unique(z, return_index=True, return_counts=True)
    hz = h_vec(z)
    hs = np.add.reduceat(hz, first, axis=0)
    G = int(np.searchsorted(u, T_MAX, side="right"))
    Hu = table(u[:G])
    inc = counts[:G] - np.einsum("gc,gc->g", Hu, hs[:G])
    level = np.concatenate([[0.0], np.cumsum(inc)])
    suffix = np.cumsum(hs[::-1], axis=0)[::-1]
    slope = np.vstack([suffix[: G + 1], np.zeros((max(0, G + 1 - suffix.shape[0]), 3))])[: G + 1]
    start = min(table.t_min, float(u[0]))
    lo = np.concatenate([[start], u[:G]])
    hi = np.concatenate([u[:G], [table.t_max]])
    return lo, hi, level, np.ascontiguousarray(slope)


def martingale_statistic(
    zhat,
    table: HTable | None = None,
    n_refine: int = N_REFINE,
    polish: bool = True,
) -> tuple[float, float]:
    """Supremum of the transformed empirical process of ``zhat``.

    Returns ``(statistic, sup_location)``; the normalisation is by
    ``sqrt(len(zhat))``.
    """
    z = np.asarray(zhat, dtype=float).ravel()
    if z.size == 0:
        raise EmptyInput("no residuals")
    if not np.all(np.isfinite(z)):
        raise InputError("residuals must be finite")
    table = default_table() if table is None else table
    lo, hi, level, slope = _process_pieces(z, table)
    vals, locs = martingale_gap_max(lo, hi, level, slope, table.t_min, table.step, table.values, table.derivs, n_refine)
    g = int(np.argmax(vals))
    best, best_t = float(vals[g]), float(locs[g])
    if polish:
        for g in np.argsort(vals)[::-1][:_POLISH_CANDIDATES]:
            if vals[g] < best - 1e-3 * max(1.0, best):
                break
            width = (hi[g] - lo[g]) / (n_refine + 1)
            if width <= 0.0:
                continue
            a, b = max(lo[g], locs[g] - width), min(hi[g], locs[g] + width)
            lvl, slp = level[g], slope[g]

            def neg(t, lvl=lvl, slp=slp):
                return -abs(lvl - float(table(t) @ slp))

            res = minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
            if -res.fun > best:
                best, best_t = float(-res.fun), float(res.x)
    return float(best / np.sqrt(z.size)), best_t


def normality_test_from_residuals(zhat, alpha: float = 0.05, K_used: int = -1) -> NormalityReport:
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    stat, loc = martingale_statistic(zhat)
    crit = upper_critical_value(SUP_BM, alpha)
    return NormalityReport(
        statistic=stat,
        critical_value=crit,
        p_value=p_value(SUP_BM, stat),
        reject=bool(stat > crit),
        n_used=int(np.size(zhat)),
        K_used=K_used,
        sup_location=loc,
        alpha=alpha,
    )


def complete_case_residuals(data: MarDataset, K: int | None = None) -> tuple[np.ndarray, int]:
    """Standardized complete-case residuals and the ``K`` used."""
    N = data.n_observed
    K = choose_K(max(N, 1)) if K is None else K
    if N < data.dim_u + K + 2:
        raise InsufficientData(f"{N} complete cases; the normality test needs at least {data.dim_u + K + 2}")
    fit = fit_series_ls(data.u, data.v, data.y, data.delta, K)
    return normalized_residuals(fit), K


def run_normality_test(data: MarDataset, alpha: float = 0.05, K: int | None = None) -> NormalityReport:
    """Complete-case normality test: series fit, standardize, transform, compare."""
    zhat, K = complete_case_residuals(data, K)
    return normality_test_from_residuals(zhat, alpha, K)


def run_full_data_normality_test(u, v, y, alpha: float = 0.05, K: int | None = None) -> NormalityReport:
    """The same test on fully observed data."""
    n = np.asarray(v).shape[0]
    return run_normality_test(MarDataset(u, v, y, np.ones(n, dtype=np.int8)), alpha, K)


__all__ = [
    "NormalityReport",
    "martingale_statistic",
    "normality_test_from_residuals",
    "complete_case_residuals",
    "run_normality_test",
    "run_full_data_normality_test",
    "T_MAX",
    "T_MIN",
]
