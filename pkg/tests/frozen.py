"""Frozen ground-truth constants for the bundled benchmark scenarios.

These literals are the reference the test suite trusts. They are duplicated
here on purpose: the package's scenario defaults must match them exactly, so
a typo in either copy fails loudly instead of silently shifting every
downstream tolerance.
"""

import math

import numpy as np

# --- three-cluster Gaussian proxy design (scenario name "paper-7.1") -------

THREE_CLUSTER_PRIORS = np.array([0.33, 0.33, 0.34])

# means[v][u] = mean vector of proxy view v under component u
THREE_CLUSTER_MEANS = (
    np.array([[-3.0, 0.0, 0.0], [0.0, 3.0, 0.0], [3.0, -1.0, 2.0]]),
    np.array([[0.0, -3.0, 1.0], [-2.0, 0.0, 3.0], [3.0, 0.0, 0.0]]),
    np.array([[3.0, 1.0, -1.0], [1.0, 0.0, 3.0], [0.0, -2.0, 0.0]]),
)

THREE_CLUSTER_PROXY_SIGMA = np.array([0.8, 0.8, 0.8])

# treatment A | Z, U ~ N(alpha_U . z1, sigma2_U); features are view-1 coords
THREE_CLUSTER_ALPHA = np.array([
    [1.0, 0.5, -0.5],
    [-0.5, 1.0, 0.5],
    [0.5, -0.5, 1.0],
])
THREE_CLUSTER_TREATMENT_VAR = np.array([0.6, 1.0, 0.8])

# outcome Y | A, Z, U ~ N(beta_U . [1, a, z1], 1)
THREE_CLUSTER_BETA = np.array([
    [1.0, 2.5, 0.5, 0.5, 0.5],
    [5.0, -1.0, -0.5, 0.5, -0.5],
    [2.0, 4.0, 1.0, -1.0, 1.0],
])
THREE_CLUSTER_OUTCOME_SIGMA = 1.0

# the slope-on-a column of beta, the target the benchmark tracks
THREE_CLUSTER_TARGET_SLOPES = np.array([2.5, -1.0, 4.0])

# average slope: sum_u pi_u * beta_{u, a}
THREE_CLUSTER_ATE_SLOPE = 1.855
assert abs(float(THREE_CLUSTER_PRIORS @ THREE_CLUSTER_BETA[:, 1]) - THREE_CLUSTER_ATE_SLOPE) < 1e-12

# --- two-state discrete treatment design (scenario name "paper-7.2") -------

TWO_STATE_PRIORS = np.array([0.5, 0.5])
TWO_STATE_LEVELS = 5

TWO_STATE_GAMMA = np.array([
    [1.0, 0.5, 2.5, -0.5],
    [-1.0, 1.5, -1.0, 0.8],
])

TWO_STATE_GAMMA_NORMS = np.array([math.sqrt(7.75), math.sqrt(4.89)])
assert np.allclose(np.linalg.norm(TWO_STATE_GAMMA, axis=1), TWO_STATE_GAMMA_NORMS)
# rounded values used in the acceptance thresholds
assert abs(TWO_STATE_GAMMA_NORMS[0] - 2.784) < 5e-4
assert abs(TWO_STATE_GAMMA_NORMS[1] - 2.211) < 5e-4

# average effect at a = (1, 1, 1): 0.5 * 3.5 + 0.5 * 0.3
TWO_STATE_ATE_AT_ONES = 1.9
assert abs(float(TWO_STATE_PRIORS @ (TWO_STATE_GAMMA @ np.array([1.0, 1.0, 1.0, 1.0]))) - TWO_STATE_ATE_AT_ONES) < 1e-12

# --- closed-form spot values ------------------------------------------------

# posterior of component 1 for 1-d N(0,1) vs N(2,1), equal priors, three
# identical views at z = 0: per-view log likelihood ratio is 2, so
# w1 = 1 / (1 + exp(-6))
POSTERIOR_THREE_VIEW_SPOT = 1.0 / (1.0 + math.exp(-6.0))

# standard normal density at its mean
NORMAL_DENSITY_AT_MEAN = 1.0 / math.sqrt(2.0 * math.pi)

# tensor eigenvalue 2 maps to class probability 1/4
PRIOR_FROM_LAMBDA_TWO = 0.25
