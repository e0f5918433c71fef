"""Partition calculus: V weights, EPPFs, C tables and cluster-count laws.

Every closed-form quantity is checked against direct enumeration over set
partitions or compositions (tests/helpers.py) on small n.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.special import gammaln, logsumexp

from helpers import brute_log_c, compositions, set_partitions
from telemix.partitions import (
    Partition,
    c_table,
    conditional_eppf_given_k,
    dpm_expected_K_plus,
    dpm_prior_K_plus,
    expected_K_plus,
    log_eppf_conditional,
    log_eppf_marginal,
    log_ewens,
    log_r_factor,
    log_v,
    predictive_new_cluster,
    prior_K_plus,
    relabel_by_appearance,
    static_V_recursion_check,
    _log_c_rows,
)
from telemix.priors import ComponentCountPrior, ConcentrationSpec


def block_sizes(part):
    return [len(b) for b in part]


# ---------------------------------------------------------------------------
# basic partition plumbing

def test_partition_type():
    p = Partition.from_labels([3, 1, 3, 2, 3])
    assert sorted(p.sizes) == [1, 1, 3]
    assert p.n == 5 and p.k_plus == 3
    with pytest.raises(ValueError):
        Partition(())
    with pytest.raises(ValueError):
        Partition((2, 0))


def test_relabel_by_appearance():
    np.testing.assert_array_equal(relabel_by_appearance([5, 5, 2, 5, 9]), [1, 1, 2, 1, 3])
    np.testing.assert_array_equal(relabel_by_appearance([1, 2, 3]), [1, 2, 3])
    lbl = np.random.default_rng(0).integers(0, 6, size=40)
    out = relabel_by_appearance(lbl)
    # same partition, canonical names
    assert set(out) == set(range(1, len(np.unique(lbl)) + 1))
    for a in np.unique(lbl):
        assert len(np.unique(out[lbl == a])) == 1


# ---------------------------------------------------------------------------
# V weights and the conditional EPPF

def test_log_v_small_cases():
    # K < K+ is impossible
    assert log_v(4, 3, 2, 0.5) == -np.inf
    # n=1, K+=1: V = Gamma(gK) K / Gamma(gK+1) = K/(gK) = 1/g
    for k, g in [(1, 0.5), (4, 0.5), (7, 2.0)]:
        assert log_v(1, 1, k, g) == pytest.approx(-np.log(g), rel=1e-12)
    vec = log_v(5, 2, np.array([1, 2, 3]), 0.7)
    assert vec[0] == -np.inf and np.all(np.isfinite(vec[1:]))


@pytest.mark.parametrize("gamma", [0.3, 1.0, 2.5])
@pytest.mark.parametrize("k_comp", [1, 2, 3, 5, 8])
def test_conditional_eppf_normalizes_over_set_partitions(gamma, k_comp):
    # summing p(C | K, gamma_K) over all set partitions of n gives 1
    for n in (1, 3, 6):
        tot = 0.0
        for part in set_partitions(n):
            lp = log_eppf_conditional(block_sizes(part), k_comp, gamma)
            tot += np.exp(lp)
        assert tot == pytest.approx(1.0, abs=1e-12)


def test_conditional_eppf_vectorized_matches_scalar():
    sizes = [4, 2, 1]
    ks = np.array([3, 5, 9])
    gs = np.array([0.5, 0.5, 0.5])
    vec = log_eppf_conditional(sizes, ks, gs)
    for i, k in enumerate(ks):
        assert vec[i] == pytest.approx(log_eppf_conditional(sizes, int(k), 0.5), rel=1e-13)


def test_ewens_plus_correction_equals_conditional_eppf():
    # the finite-K law factorizes as Ewens times a correction that only
    # depends on (sizes, K); exercised over every partition of n <= 6
    for n in (2, 4, 6):
        for alpha in (0.5, 2.0):
            for part in set_partitions(n):
                sizes = block_sizes(part)
                kp = len(sizes)
                for k in (kp, kp + 1, 9):
                    lhs = log_eppf_conditional(sizes, k, alpha / k)
                    rhs = log_ewens(sizes, alpha) + log_r_factor(sizes, k, alpha)
                    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_correction_vanishes_in_dpm_limit():
    # R -> 1 as K -> infinity; leading error is the occupancy factor
    # k+(k+-1)/(2K), so the all-singleton partition converges slowest
    for sizes in ([3, 3], [5, 5], [2, 2, 2, 2, 2]):
        assert abs(log_r_factor(sizes, 10_000, 1.0)) < 1e-3
        assert abs(log_r_factor(sizes, 10_000_000, 1.0)) < 1e-6
    assert abs(log_r_factor([1] * 10, 10_000, 1.0)) == pytest.approx(0.0045, abs=5e-4)
    assert log_r_factor([3, 2], 1, 1.0) == -np.inf


def test_ewens_normalizes():
    for n in (3, 5, 7):
        for alpha in (0.4, 1.0, 3.0):
            tot = sum(np.exp(log_ewens(block_sizes(p), alpha)) for p in set_partitions(n))
            assert tot == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# C tables: Toeplitz-style table vs triangle vs composition enumeration

@pytest.mark.parametrize("gamma", [0.1, 1.0, 5.0])
def test_c_table_matches_enumeration(gamma):
    for n in range(1, 10):
        table = c_table(n, gamma).log_values
        for k in range(1, n + 1):
            assert table[k - 1] == pytest.approx(brute_log_c(n, k, gamma=gamma), rel=1e-12)


def test_dpm_c_table_matches_enumeration():
    for n in range(1, 10):
        table = c_table(n, dpm=True).log_values
        for k in range(1, n + 1):
            assert table[k - 1] == pytest.approx(brute_log_c(n, k, dpm=True), rel=1e-12)


def test_triangle_rows_match_c_table():
    # the batched triangle recursion and the single-gamma table are
    # independent algorithms for the same numbers
    n = 40
    gammas = np.array([1e-3, 0.1, 1.0, 5.0, 80.0])
    rows = _log_c_rows(n, gammas)
    for i, g in enumerate(gammas):
        ref = c_table(n, float(g)).log_values
        np.testing.assert_allclose(rows[i], ref, rtol=1e-9, atol=1e-12)


def test_c_table_cache_returns_consistent_objects():
    a = c_table(25, 0.5).log_values
    b = c_table(25, 0.5).log_values
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# marginal EPPF and the K+ pmf

STATIC_SPEC = ConcentrationSpec.static_fixed(0.7)
DYNAMIC_SPEC = ConcentrationSpec.dynamic_fixed(1.3)
PRIORS = [
    ComponentCountPrior.geometric(0.5),
    ComponentCountPrior.uniform(8),
    ComponentCountPrior.bnb(1, 4, 3),
    ComponentCountPrior.pointmass(3),
]


@pytest.mark.parametrize("spec", [STATIC_SPEC, DYNAMIC_SPEC], ids=["static", "dynamic"])
@pytest.mark.parametrize("prior", PRIORS, ids=lambda p: p.family)
def test_marginal_eppf_normalizes(spec, prior):
    for n in (1, 4, 6):
        tot = sum(np.exp(log_eppf_marginal(block_sizes(p), prior, spec))
                  for p in set_partitions(n))
        assert tot == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("spec", [STATIC_SPEC, DYNAMIC_SPEC], ids=["static", "dynamic"])
@pytest.mark.parametrize("prior", PRIORS, ids=lambda p: p.family)
def test_prior_K_plus_matches_enumeration(spec, prior):
    for n in (2, 5, 6):
        pmf = prior_K_plus(n, prior, spec)
        assert pmf.shape == (n,)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        brute = np.zeros(n)
        for part in set_partitions(n):
            sizes = block_sizes(part)
            brute[len(sizes) - 1] += np.exp(log_eppf_marginal(sizes, prior, spec))
        np.testing.assert_allclose(pmf, brute, atol=1e-12)


def test_prior_K_plus_pointmass_one():
    pmf = prior_K_plus(12, ComponentCountPrior.pointmass(1), STATIC_SPEC)
    assert pmf[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(pmf[1:] == 0.0)


def test_expected_K_plus_bounded_by_expected_K():
    prior = ComponentCountPrior.bnb(1, 4, 3)
    for spec in (ConcentrationSpec.static_fixed(1.0), ConcentrationSpec.dynamic_fixed(1.0)):
        e = expected_K_plus(60, prior, spec)
        assert 1.0 < e < prior.mean()


def test_v_recursion():
    for prior in (ComponentCountPrior.geometric(0.5), ComponentCountPrior.bnb(1, 4, 3)):
        for gamma in (0.2, 1.0, 3.0):
            for n in (1, 4, 10):
                assert static_V_recursion_check(n, prior, gamma) < 1e-8


# ---------------------------------------------------------------------------
# DPM limit laws

def test_dpm_prior_K_plus_matches_ewens_enumeration():
    for n in (3, 5, 7):
        for alpha in (0.5, 1.0, 2.0):
            pmf = dpm_prior_K_plus(n, alpha)
            assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
            brute = np.zeros(n)
            for part in set_partitions(n):
                sizes = block_sizes(part)
                brute[len(sizes) - 1] += np.exp(log_ewens(sizes, alpha))
            np.testing.assert_allclose(pmf, brute, atol=1e-13)


def test_dpm_expected_K_plus_identity():
    for n, alpha in [(10, 0.5), (82, 1.0), (1000, 2.0)]:
        pmf = dpm_prior_K_plus(n, alpha)
        from_pmf = float(np.arange(1, n + 1) @ pmf)
        assert dpm_expected_K_plus(n, alpha) == pytest.approx(from_pmf, rel=1e-10)


def test_dynamic_pmf_approaches_dpm_as_k_grows():
    # with p(K) concentrated at a huge K the dynamic model is a DPM
    n, alpha = 9, 1.0
    spec = ConcentrationSpec.dynamic_fixed(alpha)
    big = prior_K_plus(n, ComponentCountPrior.pointmass(100_000), spec)
    np.testing.assert_allclose(big, dpm_prior_K_plus(n, alpha), atol=1e-4)


# ---------------------------------------------------------------------------
# composition laws given the number of clusters

def test_conditional_given_k_normalizes():
    prior = ComponentCountPrior.geometric(0.5)
    for n in (4, 6):
        for kp in (1, 2, 3):
            for kwargs in ({"mode": "dpm"},
                           {"mode": "static", "gamma": 0.6},
                           {"mode": "dynamic", "alpha": 1.2, "prior": prior}):
                tot = sum(np.exp(conditional_eppf_given_k(list(c), **kwargs))
                          for c in compositions(n, kp))
                assert tot == pytest.approx(1.0, abs=1e-10)


def test_conditional_given_k_uniform_at_gamma_one():
    # static gamma=1 weighs every ordered size vector equally
    vals = {conditional_eppf_given_k(list(c), mode="static", gamma=1.0)
            for c in compositions(7, 3)}
    assert max(vals) - min(vals) < 1e-12


def test_predictive_new_cluster_bound():
    rng = np.random.default_rng(42)
    priors = [ComponentCountPrior.bnb(1, 4, 3), ComponentCountPrior.geometric(0.1),
              ComponentCountPrior.uniform(30), ComponentCountPrior.poisson(4)]
    for _ in range(200):
        kp = int(rng.integers(1, 6))
        sizes = rng.integers(1, 8, size=kp)
        alpha = float(rng.uniform(0.05, 8.0))
        prior = priors[int(rng.integers(0, len(priors)))]
        p = predictive_new_cluster(sizes, alpha, prior)
        bound = alpha / (alpha + sizes.sum())
        assert 0.0 <= p <= bound + 1e-12


def test_predictive_new_cluster_limits():
    # no room for a new cluster when K is pinned at K+
    assert predictive_new_cluster([3, 2], 1.0, ComponentCountPrior.pointmass(2)) \
        == pytest.approx(0.0, abs=1e-14)
    # DPM limit attains the bound
    p = predictive_new_cluster([3, 2], 1.0, ComponentCountPrior.pointmass(100_000))
    assert p == pytest.approx(1.0 / 6.0, rel=1e-4)


def test_predictive_agrees_with_pmf_ratio():
    # P(new cluster) = p(C union {n+1}) / p(C) with the marginal EPPF
    prior = ComponentCountPrior.geometric(0.3)
    alpha = 1.7
    spec = ConcentrationSpec.dynamic_fixed(alpha)
    for sizes in ([1], [2, 1], [3, 2, 2]):
        direct = np.exp(log_eppf_marginal(list(sizes) + [1], prior, spec)
                        - log_eppf_marginal(sizes, prior, spec))
        assert predictive_new_cluster(sizes, alpha, prior) == pytest.approx(direct, rel=1e-10)


# ---------------------------------------------------------------------------
# behavior under large n and thread hammering

def test_prior_K_plus_large_n_stable():
    prior = ComponentCountPrior.bnb(1, 4, 3)
    pmf = prior_K_plus(200, prior, ConcentrationSpec.dynamic_fixed(1.0))
    assert np.all(np.isfinite(pmf)) and pmf.sum() == pytest.approx(1.0, abs=1e-10)
    pmf = prior_K_plus(400, prior, ConcentrationSpec.static_fixed(1.0))
    assert np.all(np.isfinite(pmf)) and pmf.sum() == pytest.approx(1.0, abs=1e-10)


def test_caches_are_thread_safe():
    prior = ComponentCountPrior.bnb(1, 4, 3)
    spec = ConcentrationSpec.static_fixed(1.0)

    def work(_):
        return prior_K_plus(50, prior, spec), c_table(50, 1.0).log_values

    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(work, range(16)))
    ref_pmf, ref_tab = results[0]
    for pmf, tab in results[1:]:
        np.testing.assert_array_equal(pmf, ref_pmf)
        np.testing.assert_array_equal(tab, ref_tab)


def test_transfer_to_filled_count_grows_with_n():
    # more observations fill more components under both regimes
    prior = ComponentCountPrior.bnb(1, 4, 3)
    for spec in (ConcentrationSpec.static_fixed(1.0), ConcentrationSpec.dynamic_fixed(1.0)):
        means = [expected_K_plus(n, prior, spec) for n in (20, 100, 400)]
        assert means[0] < means[1] < means[2]
