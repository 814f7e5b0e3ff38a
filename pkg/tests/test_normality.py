from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import cumulative_simpson

from ccmar.data import MarDataset
from ccmar.errors import DegenerateResiduals, EmptyInput, InputError, InsufficientData
from ccmar.khmaladze import h_integrand, h_vec
from ccmar.limits import SUP_BM
from ccmar.normality import (
    complete_case_residuals,
    martingale_statistic,
    normality_test_from_residuals,
    run_full_data_normality_test,
    run_normality_test,
)
from ccmar.simulation import ScenarioConfig, replicate, residual_expansion_discrepancy

_ORACLE_STEP = 1e-4


class BruteForce:
    """Dense-grid evaluation of the transformed process with an independent H."""

    def __init__(self, upper=5.0):
        self.x = np.arange(-12.0, upper + _ORACLE_STEP / 2, _ORACLE_STEP)
        self.H = cumulative_simpson(h_integrand(self.x), x=self.x, axis=0, initial=0.0)

    def Hof(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.x, self.H[:, k], left=0.0) for k in range(3)], axis=-1)

    def process(self, z, t, left=False):
        z = np.asarray(z, dtype=float)
        t = np.asarray(t, dtype=float)
        hz = h_vec(z)
        ind = (z[None, :] < t[:, None]) if left else (z[None, :] <= t[:, None])
        Hmin = self.Hof(np.minimum(t[:, None], z[None, :]))
        return (ind.sum(axis=1) - np.einsum("tjc,jc->t", Hmin, hz)) / np.sqrt(z.size)

    def sup(self, z, lo=-8.0, hi=8.0):
        grid = np.arange(lo, hi + _ORACLE_STEP / 2, _ORACLE_STEP)
        best = 0.0
        for chunk in np.array_split(grid, max(1, grid.size * len(z) // 2_000_000 + 1)):
            best = max(best, float(np.max(np.abs(self.process(z, chunk)))))
        jumps = np.unique(z)
        best = max(best, float(np.max(np.abs(self.process(z, jumps)))))
        best = max(best, float(np.max(np.abs(self.process(z, jumps, left=True)))))
        return best


@pytest.fixture(scope="module")
def brute():
    return BruteForce()


def test_single_residual_matches_brute_force(brute):
    stat, _ = martingale_statistic([0.0])
    assert stat == pytest.approx(brute.sup([0.0]), abs=1e-6)


def test_five_residuals_match_brute_force(brute):
    z = [-1.2, -0.3, 0.1, 0.8, 2.0]
    stat, loc = martingale_statistic(z)
    assert stat == pytest.approx(brute.sup(z), abs=1e-6)
    # the reported location attains the supremum (one of the one-sided values)
    at = max(abs(brute.process(z, [loc])[0]), abs(brute.process(z, [loc], left=True)[0]))
    assert at == pytest.approx(stat, abs=1e-6)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_residuals_match_brute_force(brute, seed):
    z = np.random.default_rng(seed).normal(size=25)
    z = z[z < 4.5]
    stat, _ = martingale_statistic(z)
    assert stat == pytest.approx(brute.sup(z), abs=1e-6)


def test_ties_match_brute_force(brute):
    z = [-0.5, -0.5, 0.3, 0.3, 0.3, 1.1]
    stat, _ = martingale_statistic(z)
    assert stat == pytest.approx(brute.sup(z), abs=1e-6)


def test_residuals_above_guard(brute):
    z = [-1.0, 0.2, 6.5]
    stat, loc = martingale_statistic(z)
    assert loc <= 5.0
    # above the guard only t <= 5 is searched; compare on the same range
    assert stat == pytest.approx(brute.sup(z, hi=5.0), abs=1e-6)


def test_permutation_invariance():
    z = np.random.default_rng(3).normal(size=50)
    a, _ = martingale_statistic(z)
    b, _ = martingale_statistic(z[::-1].copy())
    c, _ = martingale_statistic(np.random.default_rng(4).permutation(z))
    assert a == b == c


def test_unrefined_search_is_a_lower_bound():
    z = np.random.default_rng(5).normal(size=60)
    coarse, _ = martingale_statistic(z, n_refine=2, polish=False)
    fine, _ = martingale_statistic(z)
    assert coarse <= fine + 1e-12


def test_martingale_statistic_errors():
    with pytest.raises(EmptyInput):
        martingale_statistic([])
    with pytest.raises(InputError):
        martingale_statistic([0.0, np.nan])


def _data(seed, n=150, scale=1.0, p_obs=0.75, in_span=False):
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(n, 1)), rng.random(n)
    rho = 1.0 + 0.5 * np.cos(np.pi * v) if in_span else np.sin(2 * np.pi * v)
    y = 2.0 * u[:, 0] + rho + scale * rng.normal(size=n)
    delta = (rng.random(n) < p_obs).astype(np.int8)
    return MarDataset(u, v, np.where(delta == 1, y, np.nan), delta)


def test_error_scale_invariance():
    a = run_normality_test(_data(6, in_span=True))
    b = run_normality_test(_data(6, scale=7.3, in_span=True))
    assert a.statistic == pytest.approx(b.statistic, abs=1e-10)


def test_response_scale_invariance():
    d = _data(7)
    scaled = MarDataset(d.u, d.v, 3.0 * d.y, d.delta)
    assert run_normality_test(d).statistic == pytest.approx(run_normality_test(scaled).statistic, abs=1e-10)


def test_report_invariants():
    for seed in range(5):
        rep = run_normality_test(_data(seed, n=80))
        assert rep.reject == (rep.statistic > rep.critical_value)
        assert rep.reject == (rep.p_value < rep.alpha)
        assert 0.0 <= rep.p_value <= 1.0
        assert rep.critical_value == pytest.approx(SUP_BM.quantile(0.95), abs=1e-12)
        assert rep.n_used == _data(seed, n=80).n_observed


def test_all_observed_equals_full_data_test():
    d = _data(8, p_obs=1.1)
    assert d.n_observed == d.n
    cc = run_normality_test(d)
    full = run_full_data_normality_test(d.u, d.v, d.y)
    assert cc == full


def test_complete_case_uses_only_observed_rows():
    d = _data(9)
    z, K = complete_case_residuals(d)
    assert z.size == d.n_observed
    assert np.mean(z**2) == pytest.approx(1.0, abs=1e-12)
    u = np.array(d.u)
    v = np.array(d.v)
    u[d.delta == 0] = 99.0
    v[d.delta == 0] = 0.0
    other = MarDataset(u, v, d.y, d.delta)
    assert run_normality_test(other) == run_normality_test(d)


def test_insufficient_data():
    # m = 1 and K = 1 need at least four complete cases
    d = MarDataset(np.arange(6.0)[:, None], np.linspace(0, 1, 6), [1.0, 2.0, 0.5, np.nan, np.nan, np.nan], [1, 1, 1, 0, 0, 0])
    with pytest.raises(InsufficientData):
        run_normality_test(d)


def test_degenerate_residuals():
    u, v = np.arange(10.0)[:, None], np.linspace(0, 1, 10)
    with pytest.raises(DegenerateResiduals):
        run_normality_test(MarDataset(u, v, 1.0 + u[:, 0], np.ones(10)))


def test_alpha_validation():
    with pytest.raises(InputError):
        normality_test_from_residuals([0.1, -0.2], alpha=1.5)


@pytest.mark.slow
def test_residual_expansion_shrinks():
    config = ScenarioConfig(n=200, seed=31)

    def disc(draw):
        return residual_expansion_discrepancy(draw, config)

    small = np.median(replicate(config, 200, disc, pass_draw=True))
    large_config = config.with_(n=2000)
    large = np.median(
        replicate(large_config, 200, lambda d: residual_expansion_discrepancy(d, large_config), pass_draw=True)
    )
    assert large < small
