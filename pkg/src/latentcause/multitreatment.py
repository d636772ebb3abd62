"""Causal effects from three conditionally independent categorical treatments.

No proxies here: the treatments themselves are the three views. The hidden
state is recovered from them with the discrete mixture backend, every sample
is scored with its posterior weights, and the per-state outcome coefficients
come from the same stacked weighted regression the proxy pipeline uses.
Effect summaries are then plain dot products, since the treatment levels are
set by intervention rather than averaged over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .causal import FeatureMap, _stacked_regression, outcome_feature_map
from .errors import DimensionMismatch, InvalidConfig
from .mixture import MixtureEstimate, fit_discrete_multiview, posteriors


@dataclass(frozen=True)
class MultiTreatmentModel:
    """Fitted treatment-only pipeline: mixture plus outcome coefficients."""

    mixture: MixtureEstimate
    gamma: np.ndarray                        # K x M outcome coefficients
    xi_map: FeatureMap
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mixture.backend != "discrete":
            raise InvalidConfig("the treatment-only pipeline is categorical")
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != self.mixture.n_components:
            raise DimensionMismatch("need one gamma row per component")
        if not np.all(np.isfinite(g)):
            raise InvalidConfig("outcome coefficients must be finite")
        if g.shape[1] != self.xi_map.output_dim:
            raise DimensionMismatch("gamma columns must match the feature map")
        object.__setattr__(self, "gamma", g)

    @property
    def priors(self) -> np.ndarray:
        return self.mixture.priors

    @property
    def emissions(self) -> tuple:
        return self.mixture.emissions

    @property
    def n_components(self) -> int:
        return self.mixture.n_components


def fit_multitreatment(a1, a2, a3, y, k: int, xi_map: FeatureMap | None = None,
                       seed=0, levels: int | None = None,
                       ridge: float = 0.0) -> MultiTreatmentModel:
    """Recover the hidden state from the treatments and fit the outcome.

    The default basis is [1, a1, a2, a3], matching a linear structural
    model. Rank or alignment failures from the mixture stage propagate.
    """
    est = fit_discrete_multiview(a1, a2, a3, k, seed=seed, levels=levels)
    w = posteriors(est, a1, a2, a3)
    y_vec = np.asarray(y, dtype=float).ravel()
    if y_vec.shape[0] != w.weights.shape[0]:
        raise DimensionMismatch("outcome length must match the treatments")
    if not np.all(np.isfinite(y_vec)):
        raise InvalidConfig("outcome values must be finite")
    fm = xi_map if xi_map is not None else outcome_feature_map(0, treat_dim=3)
    treats = np.column_stack([np.asarray(a, dtype=float).ravel()
                              for a in (a1, a2, a3)])
    feats = fm.evaluate(a=treats)
    gamma, used = _stacked_regression(feats, w.weights, y_vec, ridge)
    return MultiTreatmentModel(
        mixture=est,
        gamma=gamma,
        xi_map=fm,
        diagnostics={"ridge": used, "fallbacks": w.fallback_count},
    )


def _point_features(m: MultiTreatmentModel, a) -> np.ndarray:
    point = np.asarray(a, dtype=float).reshape(1, -1)
    return m.xi_map.evaluate(a=point)[0]


def mt_cate(m: MultiTreatmentModel, u: int, a) -> float:
    """Effect under component u at treatment combination a."""
    if not isinstance(u, (int, np.integer)) or not 0 <= int(u) < m.n_components:
        raise InvalidConfig(
            f"component index must lie in 0..{m.n_components - 1}, got {u!r}"
        )
    return float(m.gamma[int(u)] @ _point_features(m, a))


def mt_ate(m: MultiTreatmentModel, a) -> float:
    """Prior-weighted effect at treatment combination a."""
    return float(m.priors @ (m.gamma @ _point_features(m, a)))
