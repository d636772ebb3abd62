"""Latent mixture recovery from three conditionally independent views.

A hidden categorical variable U with K states generates three views that are
independent given U. This module recovers the mixing weights and the
per-view, per-component densities from samples alone, using second- and
third-order moments: whiten the cross-view second moment, decompose the
whitened third moment with the tensor power method, and read off weights and
component embeddings from the eigenpairs.

Continuous views are handled in a reproducing-kernel space (component
densities are represented by coefficient vectors over anchor points);
categorical views are handled with one-hot features (component densities are
emission matrices). Bayes posteriors over the hidden state, rank selection
from the moment spectrum, and permutation alignment of component labels
round out the toolkit.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    AlignmentAmbiguity,
    DimensionMismatch,
    EmptyInput,
    InvalidConfig,
    KTooLarge,
    NotPSD,
    RankDeficiency,
    UnfittedModel,
)
from .kernels import KernelSpec, gram
from .tensor_spectral import (
    Moment2,
    build_whitener,
    robust_power_method,
    top_k_eigh,
    whitened_third_moment,
)

DENSITY_FLOOR = 1e-12
PRIOR_MIN = 1e-6
PRIOR_MAX = 1.0
MAX_JITTER = 1e-4
RANK_FLOOR_REL = 1e-10
EXHAUSTIVE_K_MAX = 8
HOLDOUT_ROWS = 512
ALIGN_MARGIN = 1e-6


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixtureEstimate:
    """Fitted mixture: priors plus per-view component representations.

    ``backend`` is "kernel" (densities are anchor-coefficient expansions) or
    "discrete" (densities are emission matrices). ``priors_raw`` keeps the
    inverse-square tensor eigenvalues before clamping and renormalization so
    the eigenvalue-to-weight map stays checkable after the fact.
    """

    backend: str
    priors: np.ndarray                       # K, clamped + renormalized
    priors_raw: np.ndarray                   # K, lambdas ** -2 exactly
    lambdas: np.ndarray                      # K tensor eigenvalues
    density_floor: float = DENSITY_FLOOR
    kernel: KernelSpec | None = None
    anchors: tuple | None = None             # per view: m_v x d anchor points
    coefficients: tuple | None = None        # per view: K x m_v rows
    emissions: tuple | None = None           # per view: S x K column-stochastic
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.backend not in ("kernel", "discrete"):
            raise InvalidConfig(f"unknown backend {self.backend!r}")
        p = np.asarray(self.priors, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DimensionMismatch("priors must be a nonempty vector")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise InvalidConfig("priors must be nonnegative and sum to 1")
        if self.backend == "kernel":
            if self.kernel is None or self.anchors is None or self.coefficients is None:
                raise UnfittedModel("kernel backend needs kernel, anchors, coefficients")
        elif self.emissions is None:
            raise UnfittedModel("discrete backend needs emission matrices")
        if not self.density_floor > 0:
            raise InvalidConfig("density_floor must be positive")

    @property
    def n_components(self) -> int:
        return self.priors.shape[0]


@dataclass(frozen=True)
class PosteriorMatrix:
    """Per-sample component weights; rows are probability vectors."""

    weights: np.ndarray
    flavor: str                              # proxy_only | treatment_updated
    fallback_count: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise DimensionMismatch(f"weights must be 2-d, got shape {w.shape}")
        if self.flavor not in ("proxy_only", "treatment_updated"):
            raise InvalidConfig(f"unknown flavor {self.flavor!r}")
        if np.any(w < -1e-12) or np.any(w > 1.0 + 1e-12):
            raise InvalidConfig("posterior entries must lie in [0, 1]")
        if w.size and np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-12:
            raise InvalidConfig("posterior rows must sum to 1")
        object.__setattr__(self, "weights", np.clip(w, 0.0, 1.0))

    @property
    def n_components(self) -> int:
        return self.weights.shape[1]


# ---------------------------------------------------------------------------
# shared validation and small utilities
# ---------------------------------------------------------------------------

def _root_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _seed_value(seed) -> int | None:
    return seed if isinstance(seed, (int, np.integer)) else None


def _as_views(z1, z2, z3):
    out = []
    for z in (z1, z2, z3):
        a = np.asarray(z, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise DimensionMismatch(f"view must be 1-d or 2-d, got shape {a.shape}")
        out.append(a)
    if not (out[0].shape == out[1].shape == out[2].shape):
        raise DimensionMismatch(
            f"views must share one shape, got {[v.shape for v in out]}"
        )
    if out[0].shape[0] == 0:
        raise EmptyInput("views contain no samples")
    return out


def _check_k(k: int):
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidConfig(f"component count must be a positive integer, got {k!r}")


def priors_from_lambdas(lambdas: np.ndarray):
    """Mixing weights from tensor eigenvalues.

    Returns the raw inverse squares and the usable weights: raw values are
    clamped to [1e-6, 1] (finite samples can push them outside the simplex)
    and renormalized to sum to 1.
    """
    lam = np.asarray(lambdas, dtype=float)
    with np.errstate(divide="ignore"):
        raw = lam ** -2.0
    clipped = np.clip(raw, PRIOR_MIN, PRIOR_MAX)
    return raw, clipped / clipped.sum()


# ---------------------------------------------------------------------------
# Cholesky with escalating jitter
# ---------------------------------------------------------------------------

def _chol_with_jitter(g: np.ndarray, jitter: float = 0.0):
    """Upper-triangular R with R'R = G + jitter*I, escalating jitter on failure."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {g.shape}")
    gs = (g + g.T) / 2.0
    eye = np.eye(gs.shape[0])
    j = float(jitter)
    while True:
        try:
            lower = np.linalg.cholesky(gs + j * eye)
            return lower.T, j
        except np.linalg.LinAlgError:
            j = 1e-10 if j == 0.0 else j * 10.0
            if j > MAX_JITTER:
                raise NotPSD(
                    f"Cholesky failed up to jitter {MAX_JITTER:.0e}; "
                    "matrix is not positive semidefinite"
                ) from None


def chol_psd(g: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """Triangular factor R with R'R = G + jitter*I.

    The jitter escalates by factors of 10 (starting at 1e-10 when zero) until
    factorization succeeds or 1e-4 is exceeded, at which point the matrix is
    declared not PSD.
    """
    r, _ = _chol_with_jitter(g, jitter)
    return r


# ---------------------------------------------------------------------------
# symmetric kernel fit
# ---------------------------------------------------------------------------

def fit_symmetric_spectral(z1, z2, z3, k: int, kernel: KernelSpec | None = None,
                           seed=0) -> MixtureEstimate:
    """Spectral mixture fit assuming the three views share one distribution.

    Stacks views 1 and 2 into a paired anchor set, solves the generalized
    eigenproblem of the symmetrized cross-view second moment through the
    anchor Gram matrices, whitens all samples, decomposes the third moment,
    and maps tensor eigenpairs back to anchor-coefficient densities and
    mixing weights. Deterministic for a fixed seed.

    When n exceeds the kernel's landmark budget, the eigenproblem runs on a
    uniform subsample of sample pairs; moment averages still use every row.
    """
    views = _as_views(z1, z2, z3)
    _check_k(k)
    n = views[0].shape[0]
    kernel = kernel if kernel is not None else KernelSpec()
    root = _root_seq(seed)
    band_ss, sub_ss, power_ss = root.spawn(3)
    kernel = kernel.resolve(np.vstack(views), n, np.random.default_rng(band_ss))

    anchors, coeff, lam, raw, priors, info = _symmetric_core(
        views, k, kernel, sub_ss, power_ss
    )
    info["method"] = "symmetric_spectral"
    return MixtureEstimate(
        backend="kernel",
        priors=priors,
        priors_raw=raw,
        lambdas=lam,
        kernel=kernel,
        anchors=(anchors, anchors, anchors),
        coefficients=(coeff, coeff, coeff),
        seed=_seed_value(seed),
        diagnostics=info,
    )


def _symmetric_core(views, k, kernel, sub_ss, power_ss):
    """One symmetric spectral fit; returns anchor set, K x m coefficients."""
    z1, z2, z3 = views
    n = z1.shape[0]
    n_a = min(n, kernel.landmark_count)
    if n_a < n:
        idx = np.sort(np.random.default_rng(sub_ss).choice(n, size=n_a, replace=False))
    else:
        idx = np.arange(n)
    anchors = np.vstack((z1[idx], z2[idx]))
    partners = np.vstack((z2[idx], z1[idx]))
    m = anchors.shape[0]

    omega = gram(kernel, anchors, anchors)
    lmat = gram(kernel, partners, partners)
    r, jitter = _chol_with_jitter(omega)
    core = r @ lmat @ r.T / float(m * m)
    svals_sq, gamma_t = top_k_eigh(Moment2((core + core.T) / 2.0, n), k)
    sv = np.sqrt(svals_sq)
    gamma = scipy.linalg.solve_triangular(r, gamma_t, lower=False)

    # The third moment averages over the same rows that built the anchor
    # eigensystem; feeding it rows the whitener never saw lets the two
    # empirical class frequencies drift apart, and the drift enters the
    # eigenvalues (hence the priors) with a cubed amplification.
    scale = 1.0 / np.sqrt(sv)
    xi = [gram(kernel, z[idx], anchors) @ gamma * scale[None, :] for z in views]
    t_hat = whitened_third_moment(*xi)
    eig = robust_power_method(t_hat, k, seed=power_ss)
    raw, priors = priors_from_lambdas(eig.lambdas)

    # Undo the whitening: each component embedding is (sum_j gamma_j s_j^{1/2})
    # v_u scaled by its tensor eigenvalue, expressed over the anchor points.
    basis = gamma * np.sqrt(sv)[None, :]
    coeff = (basis @ (eig.vectors.T * eig.lambdas[None, :])).T

    info = {
        "jitter": jitter,
        "anchor_count": m,
        "power_residual": eig.residual,
        "moment_spectrum": sv,
    }
    return anchors, coeff, eig.lambdas, raw, priors, info


# ---------------------------------------------------------------------------
# asymmetric (per-view) fits
# ---------------------------------------------------------------------------

def fit_multiview(z1, z2, z3, k: int, kernel: KernelSpec | None = None,
                  seed=0, strategy: str = "crossmoment") -> MixtureEstimate:
    """Mixture fit allowing each view its own component distributions.

    The default "crossmoment" strategy maps views 1 and 2 into view 3's
    coordinate system through Nystroem features and the two-view
    cross-moment transformations, then runs one whitened decomposition; it
    handles arbitrarily view-specific components. It raises RankDeficiency
    when the views do not carry k components.

    strategy "cyclic" instead runs the symmetric fit three times with
    rotated view roles, aligns components across runs by prior proximity
    and posterior agreement on a holdout of training rows, and unmixes
    per-view densities from the three pair-blended estimates. On
    identically distributed views it reproduces fit_symmetric_spectral
    exactly; the more the views differ, the less decomposable the blended
    third moment becomes, and the power iteration stops converging. It
    raises AlignmentAmbiguity when two cross-run matchings are closer than
    1e-6 in total cost, which signals components too similar to track.
    """
    views = _as_views(z1, z2, z3)
    _check_k(k)
    if strategy not in ("cyclic", "crossmoment"):
        raise InvalidConfig(f"unknown strategy {strategy!r}")
    n = views[0].shape[0]
    kernel = kernel if kernel is not None else KernelSpec()
    root = _root_seq(seed)
    if strategy == "cyclic":
        return _fit_cyclic(views, k, kernel, seed, root)
    band_ss, sub_ss, power_ss = root.spawn(3)
    kernel = kernel.resolve(np.vstack(views), n, np.random.default_rng(band_ss))
    return _fit_kernel_crossmoment(views, k, kernel, sub_ss, power_ss, seed)


def _fit_cyclic(views, k, kernel, seed, root):
    z1, z2, z3 = views
    n = z1.shape[0]
    children = root.spawn(6)
    # children[0] is by construction the same stream the first run derives
    # internally for bandwidth resolution, so resolving here changes nothing.
    kernel = kernel.resolve(np.vstack(views), n, np.random.default_rng(children[0]))

    run1 = fit_symmetric_spectral(z1, z2, z3, k, kernel=kernel, seed=seed)
    run2 = fit_symmetric_spectral(z2, z3, z1, k, kernel=kernel, seed=children[3])
    run3 = fit_symmetric_spectral(z3, z1, z2, k, kernel=kernel, seed=children[4])

    h = min(n, HOLDOUT_ROWS)
    hidx = np.random.default_rng(children[5]).choice(n, size=h, replace=False)
    w1 = posteriors(run1, z1[hidx], z2[hidx], z3[hidx]).weights
    w2 = posteriors(run2, z2[hidx], z3[hidx], z1[hidx]).weights
    w3 = posteriors(run3, z3[hidx], z1[hidx], z2[hidx]).weights

    perm2, margin2 = _match_components(run2.priors, w2, run1.priors, w1)
    perm3, margin3 = _match_components(run3.priors, w3, run1.priors, w1)

    # Each run blends the densities of its two anchor views; adding the two
    # blends that contain a view and subtracting the one that does not
    # isolates that view's density.
    blends = (
        (run1.anchors[0], run1.coefficients[0]),
        (run2.anchors[0], run2.coefficients[0][perm2]),
        (run3.anchors[0], run3.coefficients[0][perm3]),
    )
    signs_per_view = ((1.0, -1.0, 1.0), (1.0, 1.0, -1.0), (-1.0, 1.0, 1.0))
    anchors, coeffs = [], []
    for signs in signs_per_view:
        anchors.append(np.vstack([a for a, _ in blends]))
        coeffs.append(np.hstack([s * c for s, (_, c) in zip(signs, blends)]))

    diagnostics = {
        "method": "cyclic",
        "alignment_margin": min(margin2, margin3),
        "run_jitters": [r.diagnostics["jitter"] for r in (run1, run2, run3)],
        "anchor_count": run1.diagnostics["anchor_count"],
    }
    return MixtureEstimate(
        backend="kernel",
        priors=run1.priors,
        priors_raw=run1.priors_raw,
        lambdas=run1.lambdas,
        kernel=kernel,
        anchors=tuple(anchors),
        coefficients=tuple(coeffs),
        seed=_seed_value(seed),
        diagnostics=diagnostics,
    )


def _match_components(priors_est, post_est, priors_ref, post_ref):
    """Best component permutation between two fits of the same data.

    Cost per pair is the mean absolute gap between posterior columns on the
    shared holdout plus the prior gap. Returns the permutation (est index per
    ref slot) and the cost margin to the runner-up.
    """
    k = priors_ref.shape[0]
    cost = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            cost[i, j] = (
                np.mean(np.abs(post_est[:, i] - post_ref[:, j]))
                + abs(priors_est[i] - priors_ref[j])
            )
    perm, best, second = _best_two_assignments(cost)
    if second - best < ALIGN_MARGIN and k > 1:
        raise AlignmentAmbiguity(
            f"two component matchings differ by {second - best:.2e} (< 1e-6); "
            "components are not separated enough to align"
        )
    margin = second - best if np.isfinite(second) else np.inf
    return perm, margin


def _best_two_assignments(cost: np.ndarray):
    """Exhaustive best and second-best assignment totals for a K x K cost."""
    k = cost.shape[0]
    best_perm, best, second = None, np.inf, np.inf
    for p in itertools.permutations(range(k)):
        total = float(sum(cost[p[j], j] for j in range(k)))
        if total < best:
            best_perm, best, second = p, total, best
        elif total < second:
            second = total
    return np.array(best_perm, dtype=int), best, second


def _nystrom_features(view, kernel, rng, floor_rel=RANK_FLOOR_REL):
    """Whitened landmark features for one view: (features, basis, landmarks).

    The basis diagonalizes the landmark gram and rescales by inverse root
    eigenvalues, so the features have near-identity second moment and the
    view's density coefficients are ``basis @ feature_means``.
    """
    n = view.shape[0]
    n_a = min(n, kernel.landmark_count)
    if n_a < n:
        idx = np.sort(rng.choice(n, size=n_a, replace=False))
    else:
        idx = np.arange(n)
    landmarks = view[idx]
    kmm = gram(kernel, landmarks, landmarks)
    vals, vecs = np.linalg.eigh((kmm + kmm.T) / 2.0)
    keep = vals > max(float(vals[-1]), 0.0) * floor_rel
    basis = vecs[:, keep] / np.sqrt(vals[keep])[None, :]
    return gram(kernel, view, landmarks) @ basis, basis, landmarks


def _fit_kernel_crossmoment(views, k, kernel, sub_ss, power_ss, seed):
    rng = np.random.default_rng(sub_ss)
    n_a = min(views[0].shape[0], kernel.landmark_count)
    feats, bases, anchor_sets = [], [], []
    for v in range(3):
        f, basis, landmarks = _nystrom_features(views[v], kernel, rng)
        feats.append(f)
        bases.append(basis)
        anchor_sets.append(landmarks)

    lam, raw, priors, means, info = _cross_moment_core(feats, k, power_ss)
    coeffs = tuple((bases[v] @ means[v]).T for v in range(3))
    info["method"] = "crossmoment"
    info["anchor_count"] = n_a
    return MixtureEstimate(
        backend="kernel",
        priors=priors,
        priors_raw=raw,
        lambdas=lam,
        kernel=kernel,
        anchors=tuple(anchor_sets),
        coefficients=coeffs,
        seed=_seed_value(seed),
        diagnostics=info,
    )


def _pinv_rank(c: np.ndarray, k: int) -> np.ndarray:
    """Rank-k pseudo-inverse; fails loudly when the k-th singular value dies."""
    u, s, vt = np.linalg.svd(c, full_matrices=False)
    if s.shape[0] < k or s[k - 1] < RANK_FLOOR_REL * max(s[0], 1e-300):
        tail = s[k - 1] if s.shape[0] >= k else 0.0
        raise RankDeficiency(
            f"cross-moment singular value {k} is {tail:.3e}; "
            "views carry fewer than K components"
        )
    return vt[:k].T @ (u[:, :k] / s[:k][None, :]).T


def _cross_moment_core(feats, k, power_ss):
    """Shared third-order decomposition over arbitrary per-view features.

    Views 1 and 2 are mapped into view 3's coordinates with the two-view
    cross-moment transformations, after which the problem is symmetric and
    one whitened decomposition recovers priors and all three conditional
    feature means.
    """
    f1, f2, f3 = feats
    n = f1.shape[0]
    c12 = f1.T @ f2 / n
    c21 = c12.T
    c13 = f1.T @ f3 / n
    c23 = f2.T @ f3 / n
    c31 = c13.T
    c32 = c23.T

    p1 = c32 @ _pinv_rank(c12, k)
    p2 = c31 @ _pinv_rank(c21, k)
    x1 = f1 @ p1.T
    x2 = f2 @ p2.T
    m2 = (x1.T @ x2 + x2.T @ x1) / (2.0 * n)
    whitener = build_whitener(Moment2(m2, n), k)

    t_hat = whitened_third_moment(x1 @ whitener.map, x2 @ whitener.map,
                                  f3 @ whitener.map)
    eig = robust_power_method(t_hat, k, seed=power_ss)
    raw, priors = priors_from_lambdas(eig.lambdas)

    unwhiten = whitener.map * whitener.spectrum[None, :]
    m3 = unwhiten @ (eig.vectors.T * eig.lambdas[None, :])
    m3_pinv_t = np.linalg.pinv(m3).T
    m1 = c13 @ m3_pinv_t / priors[None, :]
    m2v = c23 @ m3_pinv_t / priors[None, :]

    info = {"power_residual": eig.residual,
            "moment_spectrum": np.sqrt(whitener.spectrum)}
    return eig.lambdas, raw, priors, [m1, m2v, m3], info


def fit_discrete_multiview(a1, a2, a3, k: int, seed=0,
                           levels: int | None = None) -> MixtureEstimate:
    """Mixture fit for three categorical views coded 0..S-1.

    One-hot features feed the shared cross-moment decomposition; recovered
    conditional means are clamped at the density floor and renormalized into
    column-stochastic emission matrices. k = 1 short-circuits to empirical
    marginals.
    """
    _check_k(k)
    views = []
    for a in (a1, a2, a3):
        arr = np.asarray(a)
        if arr.ndim != 1:
            raise DimensionMismatch(f"categorical views must be 1-d, got {arr.shape}")
        if arr.size == 0:
            raise EmptyInput("views contain no samples")
        if not np.all(arr == arr.astype(int)) or np.any(arr < 0):
            raise InvalidConfig("categorical views must hold nonnegative integers")
        views.append(arr.astype(int))
    if not (views[0].shape == views[1].shape == views[2].shape):
        raise DimensionMismatch("views must share one length")
    n = views[0].shape[0]
    s = int(levels) if levels is not None else int(max(v.max() for v in views)) + 1
    if any(v.max() >= s for v in views):
        raise InvalidConfig("a view holds a level outside 0..S-1")
    if s < k:
        raise InvalidConfig(f"need at least k={k} levels, views have {s}")

    if k == 1:
        emissions = tuple(
            _stochastic_columns(np.bincount(v, minlength=s)[:, None] / n)
            for v in views
        )
        lam = np.ones(1)
        raw, priors = priors_from_lambdas(lam)
        return MixtureEstimate(
            backend="discrete", priors=priors, priors_raw=raw, lambdas=lam,
            emissions=emissions, seed=_seed_value(seed),
            diagnostics={"method": "discrete_marginal", "levels": s},
        )

    eye = np.eye(s)
    feats = [eye[v] for v in views]
    power_ss = _root_seq(seed).spawn(1)[0]
    lam, raw, priors, means, info = _cross_moment_core(feats, k, power_ss)
    emissions = tuple(_stochastic_columns(m) for m in means)
    info["method"] = "discrete_cross_moment"
    info["levels"] = s
    return MixtureEstimate(
        backend="discrete", priors=priors, priors_raw=raw, lambdas=lam,
        emissions=emissions, seed=_seed_value(seed), diagnostics=info,
    )


def _stochastic_columns(m: np.ndarray) -> np.ndarray:
    clamped = np.maximum(np.asarray(m, dtype=float), DENSITY_FLOOR)
    return clamped / clamped.sum(axis=0, keepdims=True)


# ---------------------------------------------------------------------------
# densities and posteriors
# ---------------------------------------------------------------------------

def _check_fitted(est):
    if not isinstance(est, MixtureEstimate):
        raise UnfittedModel("expected a fitted MixtureEstimate")


def density(est: MixtureEstimate, view: int, component: int, z) -> float:
    """Recovered density of one view under one component, floor-clamped."""
    _check_fitted(est)
    if est.backend == "discrete":
        return float(np.maximum(est.emissions[view][int(z), component],
                                est.density_floor))
    pts = np.atleast_2d(np.asarray(z, dtype=float))
    val = gram(est.kernel, pts, est.anchors[view]) @ est.coefficients[view][component]
    return float(np.maximum(val[0], est.density_floor))


def _density_matrix(est: MixtureEstimate, view: int, z) -> np.ndarray:
    """n x K matrix of clamped per-component densities for one view."""
    if est.backend == "discrete":
        levels = np.asarray(z).astype(int).ravel()
        dm = est.emissions[view][levels, :]
    else:
        pts = np.asarray(z, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        dm = gram(est.kernel, pts, est.anchors[view]) @ est.coefficients[view].T
    return np.maximum(dm, est.density_floor)


def posteriors(est: MixtureEstimate, z1, z2, z3) -> PosteriorMatrix:
    """Bayes weights over components given all three views of each sample.

    Likelihood products are accumulated in log space. Rows where every
    component's product collapses to the cube of the density floor carry no
    information; they fall back to the prior vector and are counted.
    """
    _check_fitted(est)
    if est.backend == "discrete":
        zs = [np.asarray(z).ravel() for z in (z1, z2, z3)]
        if not (zs[0].shape == zs[1].shape == zs[2].shape):
            raise DimensionMismatch("views must share one length")
        if zs[0].size == 0:
            raise EmptyInput("no rows to score")
    else:
        zs = _as_views(z1, z2, z3)
    n = zs[0].shape[0]
    k = est.n_components

    log_w = np.tile(np.log(est.priors), (n, 1))
    at_floor = np.ones((n, k), dtype=bool)
    for v in range(3):
        dm = _density_matrix(est, v, zs[v])
        at_floor &= dm <= est.density_floor
        log_w += np.log(dm)

    log_w -= log_w.max(axis=1, keepdims=True)
    w = np.exp(log_w)
    w /= w.sum(axis=1, keepdims=True)

    fallback = at_floor.all(axis=1)
    count = int(fallback.sum())
    if count:
        w[fallback] = est.priors
        warnings.warn(
            f"{count} of {n} rows had every likelihood at the floor; "
            "their posteriors fall back to the priors",
            RuntimeWarning, stacklevel=2,
        )
    return PosteriorMatrix(weights=w, flavor="proxy_only", fallback_count=count)


# ---------------------------------------------------------------------------
# rank selection
# ---------------------------------------------------------------------------

def scree(z1, z2, kernel: KernelSpec | None = None, max_k: int = 10,
          seed=0) -> np.ndarray:
    """Leading cross-view correlation spectrum, for picking the rank.

    Both views are mapped to whitened landmark features and the singular
    values of their cross moment are returned. Conditional independence
    makes the population version of that operator rank K exactly (the
    constant direction plus K - 1 mixture directions), so the spectrum
    drops off right after the true component count.
    """
    a1 = np.asarray(z1, dtype=float)
    a2 = np.asarray(z2, dtype=float)
    if a1.ndim == 1:
        a1 = a1[:, None]
    if a2.ndim == 1:
        a2 = a2[:, None]
    if a1.shape != a2.shape:
        raise DimensionMismatch("views must share one shape")
    n = a1.shape[0]
    if n == 0:
        raise EmptyInput("views contain no samples")
    if max_k < 1 or max_k > n:
        raise InvalidConfig(f"max_k must lie in 1..n, got {max_k}")

    kernel = kernel if kernel is not None else KernelSpec()
    root = _root_seq(seed)
    band_ss, sub_ss = root.spawn(2)
    kernel = kernel.resolve(np.vstack((a1, a2)), n, np.random.default_rng(band_ss))
    rng = np.random.default_rng(sub_ss)
    f1, _, _ = _nystrom_features(a1, kernel, rng)
    f2, _, _ = _nystrom_features(a2, kernel, rng)
    sv = np.linalg.svd(f1.T @ f2 / n, compute_uv=False)
    return sv[: min(max_k, sv.shape[0])]


def scree_discrete(a1, a2, max_k: int = 10, levels: int | None = None) -> np.ndarray:
    """Cross-view correlation spectrum for two categorical views."""
    v1 = np.asarray(a1).ravel()
    v2 = np.asarray(a2).ravel()
    if v1.shape != v2.shape:
        raise DimensionMismatch("views must share one length")
    n = v1.shape[0]
    if n == 0:
        raise EmptyInput("views contain no samples")
    for v in (v1, v2):
        if not np.issubdtype(v.dtype, np.integer) or np.any(v < 0):
            raise InvalidConfig("categorical views must be nonnegative integers")
    s = int(levels) if levels is not None else int(max(v1.max(), v2.max())) + 1
    if v1.max() >= s or v2.max() >= s:
        raise InvalidConfig(f"levels {s} does not cover the observed values")
    if max_k < 1 or max_k > n:
        raise InvalidConfig(f"max_k must lie in 1..n, got {max_k}")

    counts = np.zeros((s, s))
    np.add.at(counts, (v1, v2), 1.0)
    c12 = counts / n
    p1 = c12.sum(axis=1)
    p2 = c12.sum(axis=0)
    keep1 = p1 > 0
    keep2 = p2 > 0
    core = (c12[keep1][:, keep2]
            / np.sqrt(p1[keep1])[:, None] / np.sqrt(p2[keep2])[None, :])
    sv = np.linalg.svd(core, compute_uv=False)
    return sv[: min(max_k, sv.shape[0])]


def select_rank(singular_values: np.ndarray) -> int:
    """Component count from the largest successive spectral-gap ratio."""
    sv = np.asarray(singular_values, dtype=float)
    if sv.ndim != 1 or sv.shape[0] < 2:
        raise InvalidConfig("need at least two singular values to pick a rank")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(sv[1:] > 0.0, sv[:-1] / sv[1:], np.inf)
    return int(np.argmax(ratios)) + 1


# ---------------------------------------------------------------------------
# label alignment
# ---------------------------------------------------------------------------

def align_permutation(estimated, reference, method: str = "auto") -> np.ndarray:
    """Component permutation matching an estimate to a reference.

    Inputs are K x p summary blocks (one row per component), or discrete
    MixtureEstimates, whose stacked emission matrices serve as summaries.
    Returns perm with estimated[perm[j]] matched to reference[j]; applying
    it minimizes the total per-pair Euclidean distance. Exhaustive search
    for K <= 8; beyond that "auto" falls back to greedy matching with a
    warning, while "exhaustive" refuses.
    """
    a = _component_blocks(estimated)
    b = _component_blocks(reference)
    if a.shape != b.shape:
        raise DimensionMismatch(f"summary shapes differ: {a.shape} vs {b.shape}")
    k = a.shape[0]
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    if k <= EXHAUSTIVE_K_MAX or method == "exhaustive":
        if k > EXHAUSTIVE_K_MAX:
            raise KTooLarge(f"exhaustive alignment over {k}! permutations refused")
        perm, _, _ = _best_two_assignments(cost)
        return perm
    warnings.warn(
        f"K={k} exceeds the exhaustive alignment budget; using greedy matching",
        RuntimeWarning, stacklevel=2,
    )
    return _greedy_assignment(cost)


def _component_blocks(obj) -> np.ndarray:
    if isinstance(obj, MixtureEstimate):
        if obj.backend != "discrete":
            raise InvalidConfig(
                "kernel estimates have no anchor-free component summary; "
                "pass K x p blocks instead"
            )
        return np.vstack(obj.emissions).T
    a = np.asarray(obj, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatch(f"summary blocks must be 2-d, got {a.shape}")
    return a


def _greedy_assignment(cost: np.ndarray) -> np.ndarray:
    k = cost.shape[0]
    perm = np.full(k, -1, dtype=int)
    open_rows = np.ones(k, dtype=bool)
    open_cols = np.ones(k, dtype=bool)
    masked = cost.copy()
    for _ in range(k):
        masked_view = np.where(open_rows[:, None] & open_cols[None, :], masked, np.inf)
        i, j = np.unravel_index(int(np.argmin(masked_view)), cost.shape)
        perm[j] = i
        open_rows[i] = False
        open_cols[j] = False
    return perm


def map_assign(p: PosteriorMatrix) -> np.ndarray:
    """Hard labels: per-row argmax component, ties to the smallest index."""
    if not isinstance(p, PosteriorMatrix):
        raise UnfittedModel("expected a PosteriorMatrix")
    return np.argmax(p.weights, axis=1)
