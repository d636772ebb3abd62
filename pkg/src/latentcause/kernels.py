"""Gaussian RBF kernel, bandwidth rules, and Gram matrix evaluation.

The kernel convention is k(x, y) = exp(-||x - y||^2 / (2 s^2)) with
bandwidth s, so two points at distance sqrt(2)*s have kernel value e^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfig

MEDIAN_SUBSAMPLE = 1000


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian RBF kernel configuration.

    ``bandwidth`` may be given directly; otherwise it is resolved from the
    data by ``rule``: the median pairwise distance over a subsample
    ("median_heuristic", the default) or the shrinking power rule
    s = c * n^(-1 / (2b + 7d)) ("power_rule") with user-supplied constants.
    ``landmark_count`` caps the anchor set used by the spectral fits.
    """

    family: str = "gaussian_rbf"
    bandwidth: float | None = None
    rule: str = "median_heuristic"
    power_c: float = 1.0
    power_b: float = 2.0
    landmark_count: int = 1000

    def __post_init__(self):
        if self.family != "gaussian_rbf":
            raise InvalidConfig(f"unsupported kernel family: {self.family!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise InvalidConfig(f"bandwidth must be positive, got {self.bandwidth}")
        if self.rule not in ("median_heuristic", "power_rule"):
            raise InvalidConfig(f"unknown bandwidth rule: {self.rule!r}")
        if self.landmark_count < 1:
            raise InvalidConfig("landmark_count must be at least 1")

    @property
    def is_resolved(self) -> bool:
        return self.bandwidth is not None

    def resolve(self, points: np.ndarray, n: int, rng: np.random.Generator) -> "KernelSpec":
        """Return a copy with a concrete bandwidth chosen from the data."""
        if self.bandwidth is not None:
            return self
        if self.rule == "median_heuristic":
            s = median_heuristic(points, rng)
        else:
            d = points.shape[1] if points.ndim > 1 else 1
            s = power_rule_bandwidth(self.power_c, self.power_b, n, d)
        return replace(self, bandwidth=float(s))


def median_heuristic(points: np.ndarray, rng: np.random.Generator,
                     subsample: int = MEDIAN_SUBSAMPLE) -> float:
    """Median pairwise Euclidean distance over at most ``subsample`` points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise InvalidConfig("cannot resolve a bandwidth from zero points")
    if pts.shape[0] > subsample:
        idx = rng.choice(pts.shape[0], size=subsample, replace=False)
        pts = pts[idx]
    sq = _sq_dists(pts, pts)
    iu = np.triu_indices(pts.shape[0], k=1)
    if iu[0].size == 0:
        return 1.0
    med = float(np.median(np.sqrt(np.maximum(sq[iu], 0.0))))
    if med <= 0.0:
        raise InvalidConfig("median pairwise distance is zero; supply a bandwidth")
    return med


def power_rule_bandwidth(c: float, b: float, n: int, d: int) -> float:
    """Shrinking bandwidth s = c * n^(-1 / (2b + 7d))."""
    if n < 1:
        raise InvalidConfig("power rule needs at least one sample")
    return float(c) * float(n) ** (-1.0 / (2.0 * b + 7.0 * d))


def _sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xx = np.sum(x * x, axis=1)[:, None]
    yy = np.sum(y * y, axis=1)[None, :]
    sq = xx + yy - 2.0 * (x @ y.T)
    return np.maximum(sq, 0.0)


def gram(kernel: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Kernel matrix with entry (i, j) = k(x_i, y_j)."""
    if not kernel.is_resolved:
        raise InvalidConfig("bandwidth not resolved; call KernelSpec.resolve first")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    s2 = kernel.bandwidth ** 2
    return np.exp(_sq_dists(x, y) / (-2.0 * s2))
