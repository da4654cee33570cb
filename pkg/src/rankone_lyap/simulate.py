"""Monte Carlo estimates of Lyapunov exponents from actual matrix products.

These are the independent check on the closed forms. Every trial draws its
own random stream ``make_rng(seed, trial)`` so the result of trial ``t`` does
not depend on how many trials run or in what order; aggregation is always in
trial-index order.

Two oracles share one index stream: :func:`simulate_iid_dense` multiplies the
``d x d`` matrices explicitly, :func:`simulate_iid_telescoped` sums scalar log
inner products along the path. They agree to rounding on every trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .analysis import as_distribution, stationary_distribution, validate_kernel
from .ensemble import NEG_INF, RankOneEnsemble, cost_matrix, make_rng


@dataclass(frozen=True)
class SimulationResult:
    estimate: float
    std_error: float
    trials: int
    steps_per_trial: int
    seed: int
    per_trial: np.ndarray

    @classmethod
    def from_rates(cls, rates, steps: int, seed: int) -> "SimulationResult":
        rates = np.asarray(rates, dtype=float)
        rates.setflags(write=False)
        if np.any(np.isneginf(rates)):
            # the product is exactly zero on some path; nothing to average
            return cls(NEG_INF, 0.0, rates.size, steps, seed, rates)
        se = float(np.std(rates, ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0
        return cls(float(np.mean(rates)), se, rates.size, steps, seed, rates)


def _check_run(k: int, trials: int):
    if k < 1:
        raise ValueError("need at least one step")
    if trials < 1:
        raise ValueError("need at least one trial")


def _cdf(p: np.ndarray) -> np.ndarray:
    """Cumulative table whose entries from the last positive mass on are exactly 1."""
    c = np.cumsum(p)
    c /= c[-1]
    last = np.flatnonzero(p > 0)[-1]
    c[last:] = 1.0
    return c


def iid_indices(p, k: int, trials: int, seed: int) -> np.ndarray:
    """``(trials, k)`` i.i.d. index streams; row ``t`` comes from ``make_rng(seed, t)``."""
    cdf = _cdf(as_distribution(p))
    out = np.empty((trials, k), dtype=np.int64)
    for t in range(trials):
        u = make_rng(seed, t).random(k)
        out[t] = np.searchsorted(cdf, u, side="right")
    return out


def telescoped_rates(E: RankOneEnsemble, idx: np.ndarray) -> np.ndarray:
    """Per-row ``(sum_t raw[s_t, s_t+1] + log|u_last| + log|v_first|) / k``."""
    raw = cost_matrix(E).raw
    k = idx.shape[1]
    with np.errstate(divide="ignore"):
        log_u = np.log(np.linalg.norm(E.U, axis=1))
        log_v = np.log(np.linalg.norm(E.V, axis=1))
    steps = raw[idx[:, :-1], idx[:, 1:]]
    total = steps.sum(axis=1) + log_u[idx[:, -1]] + log_v[idx[:, 0]]
    return total / k


def dense_rates(E: RankOneEnsemble, idx: np.ndarray) -> np.ndarray:
    """Per-row ``log ||A_{s_k} ... A_{s_1}||_2 / k`` by explicit renormalized products."""
    logs, P = kernels.dense_products(E.matrices(), idx)
    k = idx.shape[1]
    rates = np.full(idx.shape[0], NEG_INF)
    alive = np.isfinite(logs)
    if np.any(alive):
        norms = np.linalg.norm(P[alive], ord=2, axis=(1, 2))
        with np.errstate(divide="ignore"):
            rates[alive] = (logs[alive] + np.log(norms)) / k
    return rates


def _check_dims(E: RankOneEnsemble, p) -> np.ndarray:
    return as_distribution(p, E.n)


def simulate_iid_dense(E: RankOneEnsemble, p, k: int, trials: int, seed: int) -> SimulationResult:
    """Exponent estimate from explicit ``d x d`` products of i.i.d. draws."""
    _check_run(k, trials)
    p = _check_dims(E, p)
    return SimulationResult.from_rates(dense_rates(E, iid_indices(p, k, trials, seed)), k, seed)


def simulate_iid_telescoped(E: RankOneEnsemble, p, k: int, trials: int, seed: int) -> SimulationResult:
    """Exponent estimate from the scalar expansion of the product along the path."""
    _check_run(k, trials)
    p = _check_dims(E, p)
    return SimulationResult.from_rates(telescoped_rates(E, iid_indices(p, k, trials, seed)), k, seed)


def markov_indices(Q, k: int, trials: int, seed: int) -> np.ndarray:
    """Stationary Markov index streams; start drawn from the stationary law."""
    Q = validate_kernel(Q)
    pi = stationary_distribution(Q)
    start_cdf = _cdf(pi)
    cum = np.vstack([_cdf(row) for row in Q])
    starts = np.empty(trials, dtype=np.int64)
    uniforms = np.empty((trials, k - 1))
    for t in range(trials):
        u = make_rng(seed, t).random(k)
        starts[t] = np.searchsorted(start_cdf, u[0], side="right")
        uniforms[t] = u[1:]
    return kernels.markov_paths(cum, starts, uniforms)


def simulate_markov(E: RankOneEnsemble, Q, k: int, trials: int, seed: int) -> SimulationResult:
    """Telescoped exponent estimate along stationary Markov switching paths."""
    _check_run(k, trials)
    Q = validate_kernel(Q)
    if Q.shape[0] != E.n:
        raise ValueError(f"kernel is {Q.shape[0]}x{Q.shape[0]}, ensemble has n={E.n}")
    idx = markov_indices(Q, k, trials, seed)
    return SimulationResult.from_rates(telescoped_rates(E, idx), k, seed)


def simulate_sphere(d: int, k: int, trials: int, seed: int) -> SimulationResult:
    """Exponent of ``u u^T`` with ``u`` uniform on the unit sphere in ``R^d``.

    Unit vectors are normalized standard Gaussians; the boundary terms of the
    telescoped sum vanish, leaving ``sum_t log|u_t . u_t+1| / k``.
    """
    if d < 2:
        raise ValueError("sphere simulation needs d >= 2")
    _check_run(k, trials)
    rates = np.empty(trials)
    for t in range(trials):
        Z = make_rng(seed, t).standard_normal((k, d))
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        dots = np.abs(np.einsum("ij,ij->i", Z[:-1], Z[1:]))
        with np.errstate(divide="ignore"):
            rates[t] = np.log(dots).sum() / k
    return SimulationResult.from_rates(rates, k, seed)
