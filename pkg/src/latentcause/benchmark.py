"""Seeded trial sweeps over the built-in designs, one CSV row per estimate.

Each trial simulates a fresh dataset, runs the full pipeline, aligns the
fitted components to the generating truth, and reports per-component
errors. Trials are independent and seed-split up front, so results are
identical whether they run inline or across a process pool.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .causal import fit_effects
from .errors import InvalidConfig, LatentCauseError
from .kernels import KernelSpec
from .mixture import align_permutation, fit_multiview
from .multitreatment import fit_multitreatment
from .scenarios import (
    simulate_multiproxy,
    simulate_multitreatment,
    three_cluster_gaussian,
    two_state_discrete,
)

WORKERS_ENV = "LATENTCAUSE_WORKERS"


def default_workers() -> int:
    """Worker count: the environment cap if set, else the logical cores."""
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise InvalidConfig(
                f"{WORKERS_ENV} must be an integer, got {raw!r}"
            ) from None
        if value < 1:
            raise InvalidConfig(f"{WORKERS_ENV} must be positive, got {value}")
        return value
    return os.cpu_count() or 1


def _error_row(label, n, trial, seed_val, message):
    return [{
        "scenario": label, "n": n, "trial": trial, "seed": seed_val,
        "component": "", "parameter": "", "estimate": "", "truth": "",
        "aligned_abs_error": "", "wall_ms": "", "error": message,
    }]


def _multiproxy_trial(payload) -> list[dict]:
    label, n, trial, data_seed, fit_seed, k, bandwidth, landmarks = payload
    scenario = three_cluster_gaussian()
    start = time.perf_counter()
    try:
        data, _ = simulate_multiproxy(scenario, n, seed=data_seed)
        kernel = KernelSpec(bandwidth=bandwidth, landmark_count=landmarks)
        est = fit_multiview(data["z1"], data["z2"], data["z3"], k,
                            kernel=kernel, seed=fit_seed)
        ce = fit_effects(data, est)
    except LatentCauseError as exc:
        return _error_row(label, n, trial, data_seed, str(exc))
    wall_ms = (time.perf_counter() - start) * 1000.0
    perm = align_permutation(ce.outcome.beta, scenario.beta)
    rows = []
    for u in range(scenario.n_states):
        for parameter, estimate, truth in (
            ("beta_a", ce.outcome.beta[perm[u], 1], scenario.beta[u, 1]),
            ("prior", ce.priors[perm[u]], scenario.priors[u]),
        ):
            rows.append({
                "scenario": label, "n": n, "trial": trial, "seed": data_seed,
                "component": u, "parameter": parameter,
                "estimate": float(estimate), "truth": float(truth),
                "aligned_abs_error": float(abs(estimate - truth)),
                "wall_ms": wall_ms, "error": "",
            })
    return rows


def _multitreatment_trial(payload) -> list[dict]:
    label, n, trial, data_seed, fit_seed, k, _, _ = payload
    scenario = two_state_discrete()
    start = time.perf_counter()
    try:
        data, _ = simulate_multitreatment(scenario, n, seed=data_seed)
        model = fit_multitreatment(data["a1"], data["a2"], data["a3"],
                                   data["y"], k, seed=fit_seed)
    except LatentCauseError as exc:
        return _error_row(label, n, trial, data_seed, str(exc))
    wall_ms = (time.perf_counter() - start) * 1000.0
    perm = align_permutation(model.gamma, scenario.gamma)
    truth_norms = np.linalg.norm(scenario.gamma, axis=1)
    rows = []
    for u in range(scenario.n_states):
        norm_est = float(np.linalg.norm(model.gamma[perm[u]]))
        for parameter, estimate, truth in (
            ("gamma_norm", norm_est, float(truth_norms[u])),
            ("prior", float(model.priors[perm[u]]), float(scenario.priors[u])),
        ):
            rows.append({
                "scenario": label, "n": n, "trial": trial, "seed": data_seed,
                "component": u, "parameter": parameter,
                "estimate": estimate, "truth": truth,
                "aligned_abs_error": float(abs(estimate - truth)),
                "wall_ms": wall_ms, "error": "",
            })
    return rows


def run_benchmark(mode: str, ns, trials: int, seed=0, workers: int | None = None,
                  k: int | None = None, bandwidth: float | None = 1.0,
                  landmarks: int = 1000, label: str | None = None) -> list[dict]:
    """All trial rows for one design over the given sample sizes.

    Trials are seeded from one root, so the output is a pure function of
    the arguments. Failed trials become rows with the error column filled
    in; they never abort the sweep.
    """
    if mode == "multiproxy":
        trial_fn, default_k = _multiproxy_trial, 3
    elif mode == "multitreatment":
        trial_fn, default_k = _multitreatment_trial, 2
    else:
        raise InvalidConfig(f"unknown benchmark mode {mode!r}")
    ns = [int(n) for n in ns]
    if not ns or any(n < 1 for n in ns):
        raise InvalidConfig("sample sizes must be positive")
    if trials < 1:
        raise InvalidConfig("need at least one trial")
    k = default_k if k is None else int(k)
    label = label if label is not None else mode

    children = np.random.SeedSequence(seed).spawn(len(ns) * trials)
    payloads = []
    for i, n in enumerate(ns):
        for trial in range(trials):
            state = children[i * trials + trial].generate_state(2)
            payloads.append((label, n, trial, int(state[0]), int(state[1]),
                             k, bandwidth, landmarks))

    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(payloads) == 1:
        results = [trial_fn(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(trial_fn, payloads))
    return [row for rows in results for row in rows]


def summarize(rows) -> list[dict]:
    """Median aligned error per (n, parameter), error rows counted apart."""
    groups: dict = {}
    failures: dict = {}
    for row in rows:
        if row.get("error"):
            key = row["n"]
            failures[key] = failures.get(key, 0) + 1
            continue
        key = (row["n"], row["parameter"])
        groups.setdefault(key, []).append(float(row["aligned_abs_error"]))
    out = []
    for (n, parameter), errs in sorted(groups.items(), key=lambda kv: kv[0]):
        out.append({
            "n": n, "parameter": parameter,
            "median_abs_error": float(np.median(errs)),
            "p90_abs_error": float(np.quantile(errs, 0.9)),
            "rows": len(errs), "failed_trials": failures.get(n, 0),
        })
    return out
