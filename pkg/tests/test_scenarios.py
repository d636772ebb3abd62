"""Built-in designs: frozen parameters, simulation, and oracle quantities."""

import numpy as np
import pytest

from latentcause import (
    InvalidConfig,
    oracle_ate,
    oracle_discrete_posteriors,
    oracle_posteriors,
    simulate_multiproxy,
    simulate_multitreatment,
    three_cluster_gaussian,
    true_ate_multiproxy,
    true_ate_multitreatment,
    two_state_discrete,
)

import frozen
from oracles import proxy_posteriors_loop, treatment_updated_row


def test_three_cluster_parameters_match_frozen_reference():
    s = three_cluster_gaussian()
    assert np.array_equal(s.priors, frozen.THREE_CLUSTER_PRIORS)
    for v in range(3):
        assert np.array_equal(s.means[v], frozen.THREE_CLUSTER_MEANS[v])
    assert s.proxy_sigma == frozen.THREE_CLUSTER_PROXY_SIGMA[0]
    assert np.array_equal(s.alpha, frozen.THREE_CLUSTER_ALPHA)
    assert np.array_equal(s.treatment_var, frozen.THREE_CLUSTER_TREATMENT_VAR)
    assert np.array_equal(s.beta, frozen.THREE_CLUSTER_BETA)
    assert s.outcome_sigma == frozen.THREE_CLUSTER_OUTCOME_SIGMA


def test_two_state_parameters_match_frozen_reference():
    s = two_state_discrete()
    assert np.array_equal(s.priors, frozen.TWO_STATE_PRIORS)
    assert s.levels == frozen.TWO_STATE_LEVELS
    assert np.array_equal(s.gamma, frozen.TWO_STATE_GAMMA)
    for v in range(3):
        em = s.emissions[v]
        assert em.shape == (frozen.TWO_STATE_LEVELS, 2)
        assert np.max(np.abs(em.sum(axis=0) - 1.0)) <= 1e-12


def test_simulate_multiproxy_shapes_and_determinism():
    s = three_cluster_gaussian()
    data, labels = simulate_multiproxy(s, 300, seed=9)
    assert labels.shape == (300,)
    for key in ("z1", "z2", "z3"):
        assert data[key].shape == (300, 3)
    assert data["a"].shape == (300,) and data["y"].shape == (300,)
    again, labels2 = simulate_multiproxy(s, 300, seed=9)
    assert np.array_equal(labels, labels2)
    assert all(np.array_equal(data[k], again[k]) for k in data)
    other, _ = simulate_multiproxy(s, 300, seed=10)
    assert not np.array_equal(data["z1"], other["z1"])


def test_simulate_multiproxy_respects_generating_equations():
    s = three_cluster_gaussian()
    data, labels = simulate_multiproxy(s, 200000, seed=4)
    for u in range(3):
        mask = labels == u
        assert np.max(np.abs(data["z1"][mask].mean(axis=0) - s.means[0][u])) <= 0.02
        resid = data["a"][mask] - data["z1"][mask] @ s.alpha[u]
        assert abs(np.var(resid) - s.treatment_var[u]) <= 0.02
        feats = np.column_stack([np.ones(mask.sum()), data["a"][mask],
                                 data["z1"][mask]])
        out_resid = data["y"][mask] - feats @ s.beta[u]
        assert abs(np.mean(out_resid)) <= 0.02
        assert abs(np.var(out_resid) - s.outcome_sigma ** 2) <= 0.03


def test_simulate_multitreatment_shapes_and_levels():
    s = two_state_discrete()
    data, labels = simulate_multitreatment(s, 500, seed=2)
    for key in ("a1", "a2", "a3"):
        vals = data[key]
        assert vals.shape == (500,)
        assert vals.min() >= 0 and vals.max() < s.levels
    assert data["y"].shape == (500,)
    assert set(np.unique(labels)) <= {0, 1}


def test_oracle_posteriors_match_loop_oracle():
    s = three_cluster_gaussian()
    data, _ = simulate_multiproxy(s, 50, seed=5)
    w = oracle_posteriors(s, data)
    sigma = np.full(3, s.proxy_sigma)
    want = proxy_posteriors_loop(s.priors, s.means, sigma,
                                 data["z1"], data["z2"], data["z3"])
    assert w.flavor == "proxy_only"
    assert np.max(np.abs(w.weights - want)) <= 1e-12


def test_oracle_posteriors_treatment_updated_flavor():
    s = three_cluster_gaussian()
    data, _ = simulate_multiproxy(s, 80, seed=6)
    w = oracle_posteriors(s, data, flavor="treatment_updated")
    assert w.flavor == "treatment_updated"
    assert np.max(np.abs(w.weights.sum(axis=1) - 1.0)) <= 1e-12
    base = oracle_posteriors(s, data)
    for i in range(80):
        means = [float(s.alpha[u] @ data["z1"][i]) for u in range(3)]
        want = treatment_updated_row(base.weights[i], float(data["a"][i]),
                                     means, s.treatment_var)
        assert np.max(np.abs(w.weights[i] - want)) <= 1e-12


def test_oracle_discrete_posteriors_rows_sum_to_one():
    s = two_state_discrete()
    data, _ = simulate_multitreatment(s, 120, seed=3)
    w = oracle_discrete_posteriors(s, data)
    assert np.max(np.abs(w.weights.sum(axis=1) - 1.0)) <= 1e-12


def test_true_ate_multiproxy_slope():
    s = three_cluster_gaussian()
    slope = true_ate_multiproxy(s, 1.0) - true_ate_multiproxy(s, 0.0)
    assert abs(slope - frozen.THREE_CLUSTER_ATE_SLOPE) <= 1e-12


def test_true_ate_matches_monte_carlo_oracle():
    s = three_cluster_gaussian()
    value, se = oracle_ate(s, 0.7, draws=200_000, seed=12)
    assert abs(true_ate_multiproxy(s, 0.7) - value) <= 4.0 * se


def test_true_ate_multitreatment_at_ones():
    s = two_state_discrete()
    assert abs(true_ate_multitreatment(s, (1, 1, 1))
               - frozen.TWO_STATE_ATE_AT_ONES) <= 1e-12


def test_simulate_rejects_negative_n():
    with pytest.raises(InvalidConfig):
        simulate_multiproxy(three_cluster_gaussian(), -1)
