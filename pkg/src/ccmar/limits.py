"""Laws of ``sup |B(t)|`` and ``sup |B0(t)|`` over ``[0, 1]``.

``B`` is standard Brownian motion and ``B0`` the Brownian bridge; the
normality test uses the first, the linearity test the second (the
Kolmogorov distribution).  Each CDF has two classical series, one fast for
small and one for large arguments:

sup |B|
    ``(4/pi) sum_k (-1)^k/(2k+1) exp(-pi^2 (2k+1)^2 / (8x^2))``  and
    ``1 - 4 sum_k (-1)^k Q((2k+1)x)`` with ``Q`` the normal upper tail.
sup |B0|
    ``sqrt(2 pi)/x sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8x^2))``  and
    ``1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .errors import DomainError
from .kernels import sup_abs_walk

SERIES_TOL = 1e-14
_MAX_TERMS = 100_000
_SWITCH = 1.0


class LawKind(str, Enum):
    SUP_ABS_BROWNIAN_MOTION = "sup_abs_brownian_motion"
    SUP_ABS_BROWNIAN_BRIDGE = "sup_abs_brownian_bridge"


_ALIASES = {
    "bm": LawKind.SUP_ABS_BROWNIAN_MOTION,
    "bridge": LawKind.SUP_ABS_BROWNIAN_BRIDGE,
}


@dataclass(frozen=True)
class LimitLaw:
    kind: LawKind
    series_terms: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", _ALIASES.get(self.kind, None) or LawKind(self.kind))
        if self.series_terms < 10:
            raise ValueError("series_terms must be at least 10")

    @property
    def is_bridge(self) -> bool:
        return self.kind is LawKind.SUP_ABS_BROWNIAN_BRIDGE

    def cdf(self, x: float) -> float:
        return cdf(self, x)

    def sf(self, x: float) -> float:
        return sf(self, x)

    def quantile(self, q: float) -> float:
        return quantile(self, q)


SUP_BM = LimitLaw(LawKind.SUP_ABS_BROWNIAN_MOTION)
SUP_BRIDGE = LimitLaw(LawKind.SUP_ABS_BROWNIAN_BRIDGE)


def _sum_series(term, min_terms: int) -> float:
    total = 0.0
    for k in range(_MAX_TERMS):
        t = term(k)
        total += t
        if k + 1 >= min_terms and abs(term(k + 1)) < SERIES_TOL:
            break
    return total


def _check_x(x: float) -> float:
    x = float(x)
    if not x > 0.0 or math.isnan(x):
        raise DomainError(f"argument must be > 0, got {x!r}")
    return x


def _bm_small(x: float, terms: int) -> float:
    c = math.pi**2 / (8.0 * x * x)
    return 4.0 / math.pi * _sum_series(lambda k: (-1) ** k / (2 * k + 1) * math.exp(-c * (2 * k + 1) ** 2), terms)


def _bm_tail(x: float, terms: int) -> float:
    return 4.0 * _sum_series(lambda k: (-1) ** k * float(ndtr(-(2 * k + 1) * x)), terms)


def _bridge_small(x: float, terms: int) -> float:
    c = math.pi**2 / (8.0 * x * x)
    return math.sqrt(2.0 * math.pi) / x * _sum_series(lambda k: math.exp(-c * (2 * k + 1) ** 2), terms)


def _bridge_tail(x: float, terms: int) -> float:
    return 2.0 * _sum_series(lambda k: (-1) ** k * math.exp(-2.0 * (k + 1) ** 2 * x * x), terms)


def cdf(law: LimitLaw, x: float) -> float:
    """``P(sup <= x)`` for ``x > 0``."""
    x = _check_x(x)
    if law.is_bridge:
        value = _bridge_small(x, law.series_terms) if x < _SWITCH else 1.0 - _bridge_tail(x, law.series_terms)
    else:
        value = _bm_small(x, law.series_terms) if x < _SWITCH else 1.0 - _bm_tail(x, law.series_terms)
    return min(1.0, max(0.0, value))


def sf(law: LimitLaw, x: float) -> float:
    """``P(sup > x)``, accurate in the upper tail."""
    x = _check_x(x)
    if x < _SWITCH:
        return 1.0 - cdf(law, x)
    value = _bridge_tail(x, law.series_terms) if law.is_bridge else _bm_tail(x, law.series_terms)
    return min(1.0, max(0.0, value))


def quantile(law: LimitLaw, q: float) -> float:
    """Solve ``cdf(x) = q`` by bracketed root finding."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q!r}")
    lo, hi = 0.05, 1.0
    while cdf(law, lo) > q:
        lo /= 2.0
    while cdf(law, hi) < q:
        hi *= 2.0
    return float(brentq(lambda x: cdf(law, x) - q, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


def upper_critical_value(law: LimitLaw, alpha: float) -> float:
    """The upper ``alpha`` quantile."""
    return quantile(law, 1.0 - alpha)


def p_value(law: LimitLaw, statistic: float) -> float:
    if statistic <= 0.0:
        return 1.0
    return sf(law, statistic)


def simulate_sup(
    law: LimitLaw,
    paths: int,
    steps: int = 10_000,
    rng: np.random.Generator | int | None = None,
    chunk_elements: int = 4_000_000,
) -> np.ndarray:
    """Sup of ``|path|`` over a ``steps``-point grid for simulated paths.

    Paths are Gaussian random walks with variance ``1/steps`` per step; for
    the bridge law the walk is pinned to zero at ``t = 1``.  The discrete
    maximum is biased low by roughly ``0.58 / sqrt(steps)``.  Output depends
    only on ``(rng state, paths, steps)``, not on the chunk size.
    """
    if paths < 1 or steps < 100:
        raise DomainError("need paths >= 1 and steps >= 100")
    rng = np.random.default_rng(rng)
    scale = 1.0 / math.sqrt(steps)
    rows = max(1, chunk_elements // steps)
    out = np.empty(paths)
    for start in range(0, paths, rows):
        stop = min(paths, start + rows)
        inc = rng.standard_normal((stop - start, steps))
        inc *= scale
        out[start:stop] = sup_abs_walk(inc, law.is_bridge)
    return out


def brownian_paths(law: LimitLaw, paths: int, steps: int, rng=None) -> np.ndarray:
    """Full simulated paths on the grid ``k/steps, k = 0..steps`` (small sizes only)."""
    rng = np.random.default_rng(rng)
    inc = rng.standard_normal((paths, steps)) / math.sqrt(steps)
    walk = np.concatenate([np.zeros((paths, 1)), np.cumsum(inc, axis=1)], axis=1)
    if law.is_bridge:
        frac = np.arange(steps + 1) / steps
        walk = walk - frac[None, :] * walk[:, -1:]
    return walk
