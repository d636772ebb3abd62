"""Kernel configuration, Gram matrices, and bandwidth rules."""

import math

import numpy as np
import pytest

from latentcause import InvalidConfig, KernelSpec, gram, median_heuristic, power_rule_bandwidth


def test_gram_matches_direct_formula():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((7, 3))
    y = rng.standard_normal((5, 3))
    spec = KernelSpec(bandwidth=1.3)
    got = gram(spec, x, y)
    for i in range(7):
        for j in range(5):
            want = math.exp(-float(np.sum((x[i] - y[j]) ** 2)) / (2.0 * 1.3 ** 2))
            assert abs(got[i, j] - want) <= 1e-14


def test_gram_diagonal_is_one_on_shared_points():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 2))
    got = gram(KernelSpec(bandwidth=0.7), x, x)
    assert np.allclose(np.diag(got), 1.0, atol=1e-15)
    assert np.max(np.abs(got - got.T)) <= 1e-15


def test_gram_requires_resolved_bandwidth():
    with pytest.raises(InvalidConfig):
        gram(KernelSpec(), np.zeros((2, 1)), np.zeros((2, 1)))


def test_median_heuristic_matches_brute_force():
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((40, 2))
    dists = [float(np.linalg.norm(pts[i] - pts[j]))
             for i in range(40) for j in range(i + 1, 40)]
    got = median_heuristic(pts, np.random.default_rng(0))
    assert abs(got - float(np.median(dists))) <= 1e-12


def test_median_heuristic_rejects_identical_points():
    pts = np.ones((5, 2))
    with pytest.raises(InvalidConfig):
        median_heuristic(pts, np.random.default_rng(0))


def test_power_rule_value():
    got = power_rule_bandwidth(2.0, 2.0, 1000, 3)
    assert abs(got - 2.0 * 1000 ** (-1.0 / 25.0)) <= 1e-15


def test_resolve_median_and_power_rules():
    rng = np.random.default_rng(4)
    pts = rng.standard_normal((200, 2))
    resolved = KernelSpec().resolve(pts, 200, np.random.default_rng(1))
    assert resolved.is_resolved and resolved.bandwidth > 0
    fixed = KernelSpec(bandwidth=0.9).resolve(pts, 200, np.random.default_rng(1))
    assert fixed.bandwidth == 0.9
    powered = KernelSpec(rule="power_rule", power_c=1.5).resolve(pts, 200,
                                                                 np.random.default_rng(1))
    assert abs(powered.bandwidth - power_rule_bandwidth(1.5, 2.0, 200, 2)) <= 1e-15


def test_kernel_spec_validation():
    with pytest.raises(InvalidConfig):
        KernelSpec(family="laplace")
    with pytest.raises(InvalidConfig):
        KernelSpec(bandwidth=-1.0)
    with pytest.raises(InvalidConfig):
        KernelSpec(rule="guess")
