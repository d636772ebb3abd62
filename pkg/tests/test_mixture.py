"""Mixture recovery: spectral fits, posteriors, priors, and alignment."""

import numpy as np
import pytest

from latentcause import (
    DimensionMismatch,
    InvalidConfig,
    KernelSpec,
    KTooLarge,
    PosteriorMatrix,
    RankDeficiency,
    align_permutation,
    density,
    fit_discrete_multiview,
    fit_multiview,
    fit_symmetric_spectral,
    map_assign,
    oracle_posteriors,
    posteriors,
    priors_from_lambdas,
    simulate_multiproxy,
    three_cluster_gaussian,
)

from frozen import PRIOR_FROM_LAMBDA_TWO
from oracles import brute_force_alignment, discrete_posteriors_loop


def symmetric_views(priors, n, seed, means=(-2.0, 2.0), sigma=0.6):
    rng = np.random.default_rng(seed)
    u = rng.choice(len(priors), size=n, p=priors)
    locs = np.asarray(means)[u]
    return [locs + sigma * rng.standard_normal(n) for _ in range(3)], u


def test_priors_from_lambdas_spot_value():
    raw, usable = priors_from_lambdas(np.array([2.0, 2.0 ** -0.5]))
    assert abs(raw[0] - PRIOR_FROM_LAMBDA_TWO) <= 1e-15
    assert abs(raw[1] - 2.0) <= 1e-12
    assert abs(usable.sum() - 1.0) <= 1e-12


def test_symmetric_fit_recovers_priors_and_raw_contract():
    views, _ = symmetric_views([0.4, 0.6], 6000, seed=0)
    est = fit_symmetric_spectral(*views, 2, kernel=KernelSpec(bandwidth=0.6), seed=1)
    assert np.max(np.abs(np.sort(est.priors) - np.array([0.4, 0.6]))) <= 0.05
    assert np.max(np.abs(est.priors_raw - est.lambdas ** -2.0)) <= 1e-12


def test_symmetric_fit_posterior_separation():
    views, labels = symmetric_views([0.5, 0.5], 4000, seed=3)
    est = fit_symmetric_spectral(*views, 2, kernel=KernelSpec(bandwidth=0.6), seed=0)
    w = posteriors(est, *views)
    hard = map_assign(w)
    flips = min(np.mean(hard != labels), np.mean(hard != 1 - labels))
    assert flips <= 0.01


def test_crossmoment_fit_on_three_cluster_design():
    scenario = three_cluster_gaussian()
    data, labels = simulate_multiproxy(scenario, 3000, seed=2)
    est = fit_multiview(data["z1"], data["z2"], data["z3"], 3,
                        kernel=KernelSpec(bandwidth=1.0), seed=0)
    assert abs(est.priors.sum() - 1.0) <= 1e-12
    w = posteriors(est, data["z1"], data["z2"], data["z3"])
    oracle = oracle_posteriors(scenario, data)
    perm = align_permutation(w.weights[:200].T, oracle.weights[:200].T)
    mad = float(np.mean(np.abs(w.weights[:, perm] - oracle.weights)))
    assert mad <= 0.05
    assert np.max(np.abs(np.sort(est.priors) - np.sort(scenario.priors))) <= 0.05


def test_cyclic_strategy_agrees_with_symmetric_fit_on_symmetric_views():
    views, _ = symmetric_views([0.5, 0.5], 3000, seed=5)
    kernel = KernelSpec(bandwidth=0.6)
    sym = fit_symmetric_spectral(*views, 2, kernel=kernel, seed=7)
    cyc = fit_multiview(*views, 2, kernel=kernel, seed=7, strategy="cyclic")
    perm = align_permutation(cyc.priors[:, None], sym.priors[:, None])
    assert np.max(np.abs(cyc.priors[perm] - sym.priors)) <= 1e-6


def test_posteriors_rows_are_stochastic():
    views, _ = symmetric_views([0.3, 0.7], 2000, seed=8)
    est = fit_symmetric_spectral(*views, 2, kernel=KernelSpec(bandwidth=0.6), seed=0)
    w = posteriors(est, *views)
    assert w.flavor == "proxy_only"
    assert np.all(w.weights >= 0.0)
    assert np.max(np.abs(w.weights.sum(axis=1) - 1.0)) <= 1e-12


def test_discrete_fit_and_posterior_oracle_equivalence():
    rng = np.random.default_rng(4)
    priors = np.array([0.35, 0.65])
    emissions = np.array([
        [0.70, 0.05],
        [0.15, 0.10],
        [0.05, 0.10],
        [0.05, 0.15],
        [0.05, 0.60],
    ])
    n = 6000
    u = rng.choice(2, size=n, p=priors)
    views = [np.array([rng.choice(5, p=emissions[:, ui]) for ui in u])
             for _ in range(3)]
    est = fit_discrete_multiview(*views, 2, seed=0)
    perm = align_permutation(est, np.vstack([emissions] * 3).T)
    assert np.max(np.abs(est.priors[perm] - priors)) <= 0.05
    for v in range(3):
        assert np.max(np.abs(est.emissions[v][:, perm] - emissions)) <= 0.06
        cols = est.emissions[v].sum(axis=0)
        assert np.max(np.abs(cols - 1.0)) <= 1e-10

    w = posteriors(est, *views)
    want = discrete_posteriors_loop(est.priors, est.emissions, *views)
    assert np.max(np.abs(w.weights - want)) <= 1e-12


def test_discrete_k1_short_circuit():
    rng = np.random.default_rng(6)
    views = [rng.integers(0, 4, size=500) for _ in range(3)]
    est = fit_discrete_multiview(*views, 1, seed=0)
    assert est.priors.shape == (1,)
    assert abs(est.priors[0] - 1.0) <= 1e-15
    for v in range(3):
        counts = np.bincount(views[v], minlength=4) / 500
        assert np.max(np.abs(est.emissions[v][:, 0] - counts)) <= 1e-12


def test_density_discrete_lookup_and_kernel_positivity():
    rng = np.random.default_rng(9)
    views = [rng.integers(0, 3, size=400) for _ in range(3)]
    est = fit_discrete_multiview(*views, 1, seed=0)
    val = density(est, 0, 0, 1)
    assert abs(val - est.emissions[0][1, 0]) <= 1e-15

    cont, _ = symmetric_views([1.0], 500, seed=1, means=(0.0,), sigma=1.0)
    kest = fit_symmetric_spectral(*cont, 1, kernel=KernelSpec(bandwidth=1.0), seed=0)
    assert density(kest, 0, 0, np.array([0.0])) > 0.0


def test_recovered_density_mass_is_component_independent():
    # every recovered component density carries the same total mass,
    # sqrt(2 pi) * bandwidth, regardless of its mixing weight
    views, _ = symmetric_views([0.25, 0.75], 8000, seed=12)
    est = fit_symmetric_spectral(*views, 2, kernel=KernelSpec(bandwidth=0.6), seed=0)
    grid = np.linspace(-6.0, 6.0, 481)
    masses = []
    for c in range(2):
        vals = np.array([density(est, 0, c, np.array([g])) for g in grid])
        masses.append(float(np.trapezoid(vals, grid)))
    expected = np.sqrt(2.0 * np.pi) * 0.6
    assert abs(masses[0] - masses[1]) <= 0.05 * expected
    assert np.max(np.abs(np.array(masses) - expected)) <= 0.08 * expected


def test_rank_deficiency_when_views_lack_components():
    views, _ = symmetric_views([1.0], 1500, seed=10, means=(0.0,), sigma=1.0)
    with pytest.raises((RankDeficiency, DimensionMismatch)):
        fit_multiview(*views, 40, kernel=KernelSpec(bandwidth=1.0,
                                                    landmark_count=30), seed=0)


def test_align_permutation_matches_brute_force():
    rng = np.random.default_rng(13)
    for _ in range(20):
        k = int(rng.integers(2, 6))
        ref = rng.standard_normal((k, 3))
        perm_true = rng.permutation(k)
        est = ref[perm_true] + 0.01 * rng.standard_normal((k, 3))
        got = align_permutation(est, ref)
        want, _ = brute_force_alignment(est, ref)
        assert np.array_equal(got, want)


def test_align_permutation_greedy_warning_beyond_exhaustive_budget():
    rng = np.random.default_rng(14)
    ref = rng.standard_normal((9, 2))
    with pytest.warns(RuntimeWarning):
        perm = align_permutation(ref.copy(), ref)
    assert np.array_equal(perm, np.arange(9))
    with pytest.raises(KTooLarge):
        align_permutation(ref.copy(), ref, method="exhaustive")


def test_posterior_matrix_validation():
    with pytest.raises(InvalidConfig):
        PosteriorMatrix(weights=np.array([[0.5, 0.6]]), flavor="proxy_only")
    with pytest.raises(InvalidConfig):
        PosteriorMatrix(weights=np.array([[0.5, 0.5]]), flavor="rumor")
    with pytest.raises(DimensionMismatch):
        PosteriorMatrix(weights=np.ones(3), flavor="proxy_only")
