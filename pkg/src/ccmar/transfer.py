"""Complete-case statistics and their exact finite-sample law.

A *statistic family* is a sequence of functions ``t_k`` defined on samples
of every size ``k >= 1`` plus a constant ``t0`` for the empty sample.  Given
response indicators ``delta_1..delta_n``, its complete-case version evaluates
``t_N`` on the ``N = sum(delta)`` observed values, in their original order.

If the pairs ``(delta_i, xi_i)`` are i.i.d. with ``P(delta = 1) = p`` and
``Q`` denotes the law of ``xi`` given ``delta = 1``, the complete-case
statistic is distributed as the binomial mixture

    H_n = sum_k  C(n, k) p^k (1 - p)^(n - k)  R_k,

where ``R_k`` is the law of ``t_k`` on ``k`` i.i.d. draws from ``Q`` and
``R_0`` is the point mass at ``t0``.  Equivalently it is the law of
``t_K(xi~_1..xi~_K)`` with ``K ~ Binomial(n, p)`` drawn independently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.stats import binom

from .errors import ArityMismatch, InvalidProbability

__all__ = [
    "StatisticFamily",
    "DiscreteLaw",
    "EmpiricalLaw",
    "MixtureDistribution",
    "mean_family",
    "complete_case_statistic",
    "binomial_weights",
    "lemma1_mixture",
    "exact_component_laws",
    "empirical_component_laws",
    "binomial_index_sample",
    "binomial_index_samples",
    "enumerate_complete_case_law",
    "ks_distance_to_law",
]


@dataclass(frozen=True)
class StatisticFamily:
    """A statistic defined for every sample size.

    Parameters
    ----------
    eval_k : callable
        Maps a sample (sequence or array whose first axis indexes
        observations, length ``k >= 1``) to a value in ``R^m``.
    t0 : array_like, optional
        Value on the empty sample.  Defaults to the zero vector.
    output_dim : int
    name : str
    """

    eval_k: Callable[[Any], Any]
    output_dim: int = 1
    t0: Any = None
    name: str = "statistic"

    def __post_init__(self) -> None:
        t0 = np.zeros(self.output_dim) if self.t0 is None else np.atleast_1d(np.asarray(self.t0, dtype=float))
        if t0.shape != (self.output_dim,):
            raise ValueError(f"t0 must have shape ({self.output_dim},), got {t0.shape}")
        object.__setattr__(self, "t0", t0)

    def __call__(self, sample) -> np.ndarray:
        if len(sample) == 0:
            return self.t0.copy()
        return np.atleast_1d(np.asarray(self.eval_k(sample), dtype=float))

    def scaled(self, alpha: float) -> StatisticFamily:
        """The family ``k**alpha * t_k``; the empty-sample value is kept."""
        base = self.eval_k

        def eval_scaled(sample):
            return len(sample) ** alpha * np.asarray(base(sample), dtype=float)

        return StatisticFamily(eval_scaled, self.output_dim, self.t0, f"{self.name}*k^{alpha}")


def mean_family(psi: Callable[[Any], Any] | None = None, t0: float = 0.0) -> StatisticFamily:
    """Sample mean of ``psi(xi)``; identity ``psi`` by default."""
    if psi is None:

        def evaluate(sample):
            return np.mean(np.asarray(sample, dtype=float), axis=0)

    else:

        def evaluate(sample):
            return np.mean([psi(x) for x in sample], axis=0)

    return StatisticFamily(evaluate, 1, [t0], "mean")


def complete_case_statistic(family: StatisticFamily, deltas, observations) -> np.ndarray:
    """Evaluate ``t_N`` on the observed values; ``t0`` when nothing is observed.

    ``observations`` holds only the values at ``delta == 1`` positions, in
    index order.
    """
    deltas = np.asarray(deltas)
    n_obs = int(np.sum(deltas))
    if len(observations) != n_obs:
        raise ArityMismatch(f"{len(observations)} observations for {n_obs} observed positions")
    return family(observations)


def _check_p(p: float) -> None:
    if not (0.0 < p <= 1.0) or not np.isfinite(p):
        raise InvalidProbability(f"p must lie in (0, 1], got {p!r}")


def binomial_weights(n: int, p: float) -> np.ndarray:
    """``C(n, k) p^k (1-p)^(n-k)`` for ``k = 0..n``.

    scipy's binomial pmf works through the regularized incomplete beta
    derivative, so it neither overflows for large ``n`` nor accumulates the
    rounding error of a ``gammaln`` difference.
    """
    _check_p(p)
    return binom.pmf(np.arange(n + 1), n, p)


class DiscreteLaw:
    """Finite-support law on ``R^m`` with merged atoms (sorted lexicographically)."""

    def __init__(self, atoms, probs, merge_tol: float = 0.0):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        probs = np.asarray(probs, dtype=float)
        order = np.lexsort(atoms.T[::-1])
        atoms, probs = atoms[order], probs[order]
        keep_atoms, keep_probs = [], []
        for a, q in zip(atoms, probs):
            if keep_atoms and np.all(np.abs(a - keep_atoms[-1]) <= merge_tol):
                keep_probs[-1] += q
            else:
                keep_atoms.append(a)
                keep_probs.append(q)
        self.atoms = np.array(keep_atoms).reshape(-1, atoms.shape[1])
        self.probs = np.array(keep_probs)

    def cdf(self, b) -> float:
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return float(self.probs[np.all(self.atoms <= b, axis=1)].sum())

    @staticmethod
    def point_mass(t0) -> DiscreteLaw:
        return DiscreteLaw(np.atleast_2d(np.asarray(t0, dtype=float)), [1.0])

    def as_dict(self, decimals: int = 12) -> dict[tuple[float, ...], float]:
        out: dict[tuple[float, ...], float] = {}
        for a, q in zip(self.atoms, self.probs):
            key = tuple(np.round(a, decimals) + 0.0)
            out[key] = out.get(key, 0.0) + q
        return out


class EmpiricalLaw:
    """Law represented by a Monte Carlo sample (rows are draws)."""

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        self.samples = samples

    def cdf(self, b) -> float:
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return float(np.mean(np.all(self.samples <= b, axis=1)))


@dataclass
class MixtureDistribution:
    """Binomial mixture over component laws ``R_0..R_n``."""

    n: int
    p: float
    weights: np.ndarray
    components: list = field(repr=False)

    def cdf(self, b) -> float:
        return float(sum(w * c.cdf(b) for w, c in zip(self.weights, self.components) if w > 0.0))

    def discrete(self, merge_tol: float = 1e-12) -> DiscreteLaw:
        """Collapse to a single :class:`DiscreteLaw`; all components must be discrete."""
        atoms, probs = [], []
        for w, c in zip(self.weights, self.components):
            if w == 0.0:
                continue
            if not isinstance(c, DiscreteLaw):
                raise TypeError("discrete() needs exact component laws")
            atoms.append(c.atoms)
            probs.append(w * c.probs)
        return DiscreteLaw(np.vstack(atoms), np.concatenate(probs), merge_tol)


def exact_component_laws(
    family: StatisticFamily, support: Sequence, probs: Sequence[float]
) -> Callable[[int], DiscreteLaw]:
    """Component provider enumerating ``t_k`` over all ``k``-tuples of a finite support."""
    support = list(support)
    probs = np.asarray(probs, dtype=float)

    def law(k: int) -> DiscreteLaw:
        atoms, weights = [], []
        for combo in itertools.product(range(len(support)), repeat=k):
            atoms.append(family([support[i] for i in combo]))
            weights.append(np.prod(probs[list(combo)]))
        return DiscreteLaw(np.array(atoms), weights, merge_tol=1e-12)

    return law


def empirical_component_laws(
    family: StatisticFamily, sampler: Callable, size: int, rng: np.random.Generator
) -> Callable[[int], EmpiricalLaw]:
    """Component provider drawing ``size`` Monte Carlo values of ``t_k``.

    ``sampler(k, rng)`` must return ``k`` i.i.d. draws from the conditional
    law of an observation given ``delta == 1``.
    """

    def law(k: int) -> EmpiricalLaw:
        return EmpiricalLaw([family(sampler(k, rng)) for _ in range(size)])

    return law


def lemma1_mixture(
    family: StatisticFamily, n: int, p: float, component_law: Callable[[int], Any]
) -> MixtureDistribution:
    """Exact law of the complete-case statistic as a binomial mixture."""
    if n < 1:
        raise ValueError("n must be at least 1")
    weights = binomial_weights(n, p)
    components = [DiscreteLaw.point_mass(family.t0)]
    for k in range(1, n + 1):
        components.append(component_law(k) if weights[k] > 0.0 else None)
    return MixtureDistribution(n, p, weights, components)


def binomial_index_sample(
    family: StatisticFamily, n: int, p: float, sampler: Callable, rng: np.random.Generator
) -> np.ndarray:
    """One draw of ``t_K`` on ``K ~ Binomial(n, p)`` fresh conditional draws."""
    _check_p(p)
    k = int(rng.binomial(n, p))
    if k == 0:
        return family.t0.copy()
    return family(sampler(k, rng))


def binomial_index_samples(
    family: StatisticFamily, n: int, p: float, sampler: Callable, rng: np.random.Generator, size: int
) -> np.ndarray:
    return np.array([binomial_index_sample(family, n, p, sampler, rng) for _ in range(size)])


def enumerate_complete_case_law(
    family: StatisticFamily, n: int, joint_support: Sequence[tuple[int, Any]], joint_probs: Sequence[float]
) -> DiscreteLaw:
    """Law of the complete-case statistic by brute force over all ``(delta, xi)`` configurations.

    ``joint_support`` lists the possible ``(delta, xi)`` pairs of a single
    observation and ``joint_probs`` their probabilities.  Runs in
    ``len(joint_support) ** n`` evaluations and is meant as an oracle.
    """
    joint_probs = np.asarray(joint_probs, dtype=float)
    atoms, weights = [], []
    for combo in itertools.product(range(len(joint_support)), repeat=n):
        deltas = [joint_support[i][0] for i in combo]
        obs = [joint_support[i][1] for i in combo if joint_support[i][0] == 1]
        atoms.append(complete_case_statistic(family, deltas, obs))
        weights.append(np.prod(joint_probs[list(combo)]))
    return DiscreteLaw(np.array(atoms), weights, merge_tol=1e-12)


def ks_distance_to_law(samples, law) -> float:
    """Kolmogorov distance between a univariate sample and a finite-support law.

    Both step functions can only jump at atoms of ``law`` (samples outside
    the support would make the comparison meaningless), so the supremum is
    attained at an atom or just to its left.
    """
    samples = np.sort(np.asarray(samples, dtype=float).ravel())
    if isinstance(law, MixtureDistribution):
        law = law.discrete()
    points = law.atoms[:, 0]
    emp = np.searchsorted(samples, points, side="right") / samples.size
    theo = np.cumsum(law.probs)
    emp_left = np.searchsorted(samples, points, side="left") / samples.size
    theo_left = theo - law.probs
    return float(max(np.max(np.abs(emp - theo)), np.max(np.abs(emp_left - theo_left))))
