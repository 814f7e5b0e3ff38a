"""Monte Carlo scenarios for the MAR partially linear model.

A :class:`ScenarioConfig` fixes the data-generating process

    (U, V) ~ covariate law,  eps ~ error law (independent),
    Y = theta'U + rho(V) + eps,  delta | (U, V, Y) ~ Bernoulli(pi(U, V)).

Named components are written ``name`` or ``name(arg, ...)``, e.g.
``rho = sin2pi``, ``pi = linear_v(0.6, 0.3)``, ``covariates = correlated(1.0)``.

Replication ``i`` always draws from the stream ``SeedSequence(seed,
spawn_key=(i,))``, so results do not depend on the thread count or on the
order in which replications finish.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Any, Callable

import numpy as np
from scipy.special import expit
from scipy.stats import ks_2samp

from .data import MarDataset, extract_complete_cases
from .errors import CcmarError, InvalidConfig, ReplicationError, StatisticalPreconditionError
from .normality import complete_case_residuals, martingale_statistic
from .series import fit_complete_case
from .transfer import StatisticFamily, binomial_index_sample, complete_case_statistic

_SPEC_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


def parse_component(text: str) -> tuple[str, tuple[float, ...]]:
    """``"linear_v(0.6, 0.3)"`` -> ``("linear_v", (0.6, 0.3))``; bare numbers mean ``const``."""
    text = str(text).strip()
    try:
        return "const", (float(text),)
    except ValueError:
        pass
    match = _SPEC_RE.match(text)
    if not match:
        raise InvalidConfig(f"cannot parse component {text!r}")
    name, args = match.group(1), match.group(2)
    try:
        values = tuple(float(a) for a in args.split(",")) if args and args.strip() else ()
    except ValueError:
        raise InvalidConfig(f"non-numeric argument in {text!r}") from None
    return name, values


def _format_component(name: str, args: tuple[float, ...]) -> str:
    return name if not args else f"{name}({', '.join(repr(a) for a in args)})"


# regression functions on [0, 1]; all twice continuously differentiable
_RHO: dict[str, Callable[..., Callable[[np.ndarray], np.ndarray]]] = {
    "const": lambda c=0.5: (lambda v: np.full_like(v, c)),
    "zero": lambda: (lambda v: np.zeros_like(v)),
    "linear": lambda a=0.0, b=1.0: (lambda v: a + b * v),
    "sin2pi": lambda amp=1.0: (lambda v: amp * np.sin(2.0 * np.pi * v)),
    "cos1": lambda amp=1.0: (lambda v: amp * np.cos(np.pi * v)),
    "quadratic": lambda amp=1.0: (lambda v: amp * (v - 0.5) ** 2),
    "exp": lambda amp=1.0: (lambda v: amp * np.exp(v)),
}


# each builder returns (pi(u, v), inf pi, sup pi)
def _pi_const(p):
    return (lambda u, v: np.full(v.shape, p)), p, p


def _pi_linear_v(a, b):
    return (lambda u, v: a + b * v), min(a, a + b), max(a, a + b)


def _pi_logistic(a, b_v, b_u, floor=0.2):
    return (lambda u, v: floor + (1.0 - floor) * expit(a + b_v * v + b_u * u[:, 0])), floor, 1.0


_PI = {"const": _pi_const, "linear_v": _pi_linear_v, "logistic": _pi_logistic}


def _cov_uniform_normal():
    def draw(rng, n, m):
        v = rng.random(n)
        u = rng.standard_normal((n, m))
        return u, v

    return draw


def _cov_correlated(c=1.0):
    def draw(rng, n, m):
        v = rng.random(n)
        u = c * (v[:, None] - 0.5) + rng.standard_normal((n, m))
        return u, v

    return draw


_COVARIATES = {"uniform_normal": _cov_uniform_normal, "correlated": _cov_correlated}
_ERRORS = ("normal", "student_t", "centered_mixture")
_MIX_SHIFT, _MIX_SD = 1.0, 0.5


@dataclass(frozen=True)
class ScenarioConfig:
    """Data-generating process for one Monte Carlo experiment."""

    n: int = 200
    m: int = 1
    theta: tuple[float, ...] = (1.0,)
    rho: str = "sin2pi"
    error: str = "normal"
    sigma: float = 1.0
    df: float = 5.0
    pi: str = "linear_v(0.6, 0.3)"
    covariates: str = "uniform_normal"
    pi_scale: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", tuple(float(t) for t in np.atleast_1d(self.theta)))
        if self.n < 1 or self.m < 1:
            raise InvalidConfig("n and m must be positive")
        if len(self.theta) != self.m:
            raise InvalidConfig(f"theta has {len(self.theta)} entries for m={self.m}")
        if self.error not in _ERRORS:
            raise InvalidConfig(f"error must be one of {_ERRORS}")
        if not self.sigma > 0:
            raise InvalidConfig("sigma must be positive")
        if self.error == "student_t" and not self.df > 4:
            raise InvalidConfig("student_t errors need df > 4 (finite fourth moment)")
        self.rho_function  # validates
        self.covariate_sampler
        _, pi_lo, pi_hi = self._pi_parts()
        if not (pi_lo * self.pi_scale > 0.0):
            raise InvalidConfig("propensity must be bounded away from zero")
        if pi_hi * self.pi_scale > 1.0 + 1e-12:
            raise InvalidConfig("propensity exceeds 1")

    # components
    @property
    def rho_function(self) -> Callable[[np.ndarray], np.ndarray]:
        name, args = parse_component(self.rho)
        if name not in _RHO:
            raise InvalidConfig(f"unknown rho {name!r}; known: {sorted(_RHO)}")
        return _RHO[name](*args)

    def _pi_parts(self):
        name, args = parse_component(self.pi)
        if name not in _PI:
            raise InvalidConfig(f"unknown propensity {name!r}; known: {sorted(_PI)}")
        try:
            return _PI[name](*args)
        except TypeError:
            raise InvalidConfig(f"bad arguments for propensity {self.pi!r}") from None

    def propensity(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        fn = self._pi_parts()[0]
        p = self.pi_scale * fn(u, v)
        if np.any(p > 1.0 + 1e-12) or np.any(p <= 0.0):
            raise InvalidConfig("propensity left (0, 1]")
        return np.minimum(p, 1.0)

    @property
    def pi_min(self) -> float:
        return self._pi_parts()[1] * self.pi_scale

    @property
    def covariate_sampler(self):
        name, args = parse_component(self.covariates)
        if name not in _COVARIATES:
            raise InvalidConfig(f"unknown covariate law {name!r}; known: {sorted(_COVARIATES)}")
        return _COVARIATES[name](*args)

    def draw_errors(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.error == "normal":
            return self.sigma * rng.standard_normal(n)
        if self.error == "student_t":
            return self.sigma * math.sqrt((self.df - 2.0) / self.df) * rng.standard_t(self.df, n)
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        raw = signs * _MIX_SHIFT + _MIX_SD * rng.standard_normal(n)
        return self.sigma * raw / math.sqrt(_MIX_SHIFT**2 + _MIX_SD**2)

    def error_density(self, t):
        """Density of the error law (used by the residual expansion check)."""
        from scipy import stats

        t = np.asarray(t, dtype=float)
        if self.error == "normal":
            return stats.norm.pdf(t, scale=self.sigma)
        if self.error == "student_t":
            scale = self.sigma * math.sqrt((self.df - 2.0) / self.df)
            return stats.t.pdf(t, self.df, scale=scale)
        s = self.sigma / math.sqrt(_MIX_SHIFT**2 + _MIX_SD**2)
        return 0.5 * (stats.norm.pdf(t, -_MIX_SHIFT * s, _MIX_SD * s) + stats.norm.pdf(t, _MIX_SHIFT * s, _MIX_SD * s))

    def with_(self, **changes) -> ScenarioConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "theta": list(self.theta),
            "rho": self.rho,
            "error": self.error,
            "sigma": self.sigma,
            "df": self.df,
            "pi": self.pi,
            "covariates": self.covariates,
            "pi_scale": self.pi_scale,
            "seed": self.seed,
        }


_INT_KEYS = {"n", "m", "seed"}
_FLOAT_KEYS = {"sigma", "df", "pi_scale"}
_TEXT_KEYS = {"rho", "error", "pi", "covariates"}


def load_scenario(path: str | PathLike) -> ScenarioConfig:
    """Read ``key = value`` lines (``#`` starts a comment)."""
    values: dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            try:
                if key in _INT_KEYS:
                    values[key] = int(value)
                elif key in _FLOAT_KEYS:
                    values[key] = float(value)
                elif key == "theta":
                    values[key] = tuple(float(t) for t in value.split(","))
                elif key in _TEXT_KEYS:
                    values[key] = value
                else:
                    raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
            except ValueError:
                raise InvalidConfig(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    if "theta" in values and "m" not in values:
        values["m"] = len(values["theta"])
    if "m" in values and "theta" not in values:
        values["theta"] = (1.0,) * values["m"]
    return ScenarioConfig(**values)


@dataclass(frozen=True, eq=False)
class ScenarioDraw:
    """A generated sample together with the latent quantities."""

    data: MarDataset
    errors: np.ndarray
    y_full: np.ndarray
    propensity: np.ndarray


def draw_scenario(config: ScenarioConfig, rng: np.random.Generator, n: int | None = None) -> ScenarioDraw:
    """Draw ``n`` rows; the order of random draws does not depend on ``rho``."""
    n = config.n if n is None else n
    u, v = config.covariate_sampler(rng, n, config.m)
    eps = config.draw_errors(rng, n)
    unif = rng.random(n)
    pi = config.propensity(u, v)
    y = u @ np.asarray(config.theta) + config.rho_function(v) + eps
    delta = (unif < pi).astype(np.int8)
    return ScenarioDraw(MarDataset(u, v, np.where(delta == 1, y, np.nan), delta), eps, y, pi)


def generate_scenario(config: ScenarioConfig, rng: np.random.Generator) -> MarDataset:
    return draw_scenario(config, rng).data


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def replicate(
    config: ScenarioConfig,
    reps: int,
    analysis: Callable[[MarDataset], Any],
    seed: int | None = None,
    threads: int = 1,
    pass_draw: bool = False,
) -> list:
    """Apply ``analysis`` to ``reps`` independent scenario draws, in index order.

    With ``pass_draw`` the analysis receives the full :class:`ScenarioDraw`
    instead of the dataset.
    """
    if reps < 1:
        raise InvalidConfig("reps must be >= 1")
    seed = config.seed if seed is None else seed

    def one(i: int):
        draw = draw_scenario(config, replication_rng(seed, i))
        try:
            return analysis(draw if pass_draw else draw.data)
        except CcmarError as exc:
            raise ReplicationError(i, exc) from exc

    if threads <= 1:
        return [one(i) for i in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(reps)))


def rejection_rate(reports) -> float:
    return float(np.mean([r.reject for r in reports]))


# --- efficiency -------------------------------------------------------------


@dataclass(frozen=True)
class EfficiencyTarget:
    J_f: float
    W_tilde: np.ndarray
    E_delta: float

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.J_f * self.W_tilde) / self.E_delta


def efficiency_target(config: ScenarioConfig, draws: int = 1_000_000, bins: int = 200, seed: int = 12345) -> EfficiencyTarget:
    """Oracle for the efficient covariance of the complete-case slope.

    ``E[delta]`` is the mean propensity over ``draws`` covariate draws and the
    conditional mean of ``U`` given ``V`` among complete cases is estimated by
    propensity-weighted means over ``bins`` equal-width ``V`` bins.
    """
    if config.error != "normal":
        raise InvalidConfig("the efficiency target is only available for normal errors")
    rng = np.random.default_rng(seed)
    u, v = config.covariate_sampler(rng, draws, config.m)
    w = config.propensity(u, v)
    b = np.minimum((v * bins).astype(np.intp), bins - 1)
    mass = np.bincount(b, weights=w, minlength=bins)
    mu = np.column_stack([np.bincount(b, weights=w * u[:, k], minlength=bins) for k in range(config.m)])
    mu /= mass[:, None]
    centred = u - mu[b]
    W_tilde = (centred * w[:, None]).T @ centred / w.sum()
    return EfficiencyTarget(1.0 / config.sigma**2, W_tilde, float(w.mean()))


@dataclass(frozen=True)
class EfficiencyCheck:
    empirical: np.ndarray
    target: np.ndarray
    E_delta: float
    estimates: np.ndarray = field(repr=False)

    @property
    def ratio(self) -> np.ndarray:
        return self.empirical / self.target


def efficiency_variance_check(
    config: ScenarioConfig,
    reps: int,
    n: int | None = None,
    oracle_draws: int = 1_000_000,
    threads: int = 1,
) -> EfficiencyCheck:
    """Empirical covariance of ``sqrt(n) (theta_hat_c - theta)`` against its efficient target."""
    if config.error != "normal":
        raise InvalidConfig("efficiency check requires normal errors")
    if n is not None:
        config = config.with_(n=n)
    theta = np.asarray(config.theta)
    estimates = np.array(replicate(config, reps, lambda d: fit_complete_case(d).theta_hat, threads=threads))
    scaled = math.sqrt(config.n) * (estimates - theta)
    empirical = np.atleast_2d(np.cov(scaled, rowvar=False))
    target = efficiency_target(config, oracle_draws)
    return EfficiencyCheck(empirical, np.atleast_2d(target.covariance), target.E_delta, estimates)


# --- transfer principle -----------------------------------------------------


def rows_of(data: MarDataset) -> np.ndarray:
    """Complete cases as an ``(N, m + 2)`` array of ``[u..., v, y]`` rows."""
    cc = extract_complete_cases(data)
    return np.column_stack([cc.u, cc.v, cc.y])


def sample_conditional_rows(config: ScenarioConfig, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` i.i.d. rows from the law of ``(U, V, Y)`` given ``delta = 1``, by rejection."""
    out = np.empty((0, config.m + 2))
    while out.shape[0] < k:
        need = k - out.shape[0]
        batch = max(16, int(1.5 * need / max(config.pi_min, 1e-3)))
        draw = draw_scenario(config, rng, batch)
        out = np.vstack([out, rows_of(draw.data)])
    return out[:k]


def mean_response_family() -> StatisticFamily:
    """Mean of the observed responses (last column of a row array)."""
    return StatisticFamily(lambda rows: np.mean(np.asarray(rows)[:, -1]), 1, [0.0], "mean_response")


def normality_statistic_family(m: int = 1) -> StatisticFamily:
    """The normality statistic on a row array; 0 when too few rows for the fit."""

    def evaluate(rows):
        rows = np.asarray(rows)
        k = rows.shape[0]
        data = MarDataset(rows[:, :m], rows[:, m], rows[:, m + 1], np.ones(k, dtype=np.int8))
        try:
            zhat, _ = complete_case_residuals(data)
        except StatisticalPreconditionError:
            return 0.0
        return martingale_statistic(zhat)[0]

    return StatisticFamily(evaluate, 1, [0.0], "normality_statistic")


@dataclass(frozen=True)
class TransferCheck:
    distance: float
    p: float
    mar_values: np.ndarray = field(repr=False)
    binomial_values: np.ndarray = field(repr=False)


def observation_probability(config: ScenarioConfig, draws: int = 1_000_000, seed: int = 54321) -> float:
    """``E[delta] = E[pi(U, V)]`` from a large covariate sample."""
    rng = np.random.default_rng(seed)
    u, v = config.covariate_sampler(rng, draws, config.m)
    return float(np.mean(config.propensity(u, v)))


def verify_transfer(
    config: ScenarioConfig,
    family: StatisticFamily,
    reps: int,
    seed: int | None = None,
    p: float | None = None,
    threads: int = 1,
) -> TransferCheck:
    """Two-sample Kolmogorov distance between the complete-case law and the binomial-index law.

    The first sample evaluates the complete-case statistic on ``reps`` MAR
    datasets.  The second draws ``K ~ Binomial(n, E[delta])`` and evaluates
    the same family on ``K`` rows sampled from the complete-case law.
    """
    if reps < 1:
        raise InvalidConfig("reps must be >= 1")
    seed = config.seed if seed is None else seed
    p = observation_probability(config) if p is None else p

    def mar_value(data: MarDataset):
        return complete_case_statistic(family, data.delta, rows_of(data))[0]

    mar = np.array(replicate(config, reps, mar_value, seed=seed, threads=threads))
    base = np.random.SeedSequence(seed, spawn_key=(2**31 - 1,))
    rngs = [np.random.default_rng(s) for s in base.spawn(reps)]

    def sampler_for(rng):
        return lambda k, _rng: sample_conditional_rows(config, k, rng)

    def bin_value(i: int):
        rng = rngs[i]
        return binomial_index_sample(family, config.n, p, sampler_for(rng), rng)[0]

    if threads <= 1:
        binom = np.array([bin_value(i) for i in range(reps)])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            binom = np.array(list(pool.map(bin_value, range(reps))))
    distance = float(ks_2samp(mar, binom).statistic)
    return TransferCheck(distance, p, mar, binom)


# --- residual expansion -----------------------------------------------------


def residual_expansion_discrepancy(draw: ScenarioDraw, config: ScenarioConfig, grid_points: int = 2001) -> float:
    """``sup_t |N^{-1/2} sum (1[res <= t] - 1[eps <= t] - f(t) eps)|`` over complete cases."""
    fit = fit_complete_case(draw.data)
    res = fit.residuals
    eps = draw.errors[fit.used_indices]
    N = res.size
    pts = np.concatenate([res, eps, np.linspace(-6 * config.sigma, 6 * config.sigma, grid_points)])
    pts = np.unique(pts)
    sr, se = np.sort(res), np.sort(eps)
    drift = eps.sum()
    f = config.error_density(pts)
    right = np.searchsorted(sr, pts, side="right") - np.searchsorted(se, pts, side="right") - f * drift
    left = np.searchsorted(sr, pts, side="left") - np.searchsorted(se, pts, side="left") - f * drift
    return float(max(np.max(np.abs(right)), np.max(np.abs(left))) / math.sqrt(N))
