"""Optimal Markov switching through minimum cycle means.

The best stationary Markov rate over kernels on ``n`` states is the minimum
mean weight of a directed cycle in the complete digraph (self-loops
included) with edge weights ``raw[i, j] = log|u_i . v_j|``. A minimizing
cycle becomes a circulation and then a kernel that attains it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import markov_rate, stationary_distribution
from .ensemble import NEG_INF, CostMatrix, RankOneEnsemble, cost_matrix

BRUTE_CYCLE_CAP = 8
RATE_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class WeightedDigraph:
    """Complete digraph with edge weights ``W[i, j]`` for ``i -> j``; ``-inf`` allowed."""

    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 1:
            raise ValueError(f"weights must be a non-empty square matrix, got shape {W.shape}")
        if np.any(np.isnan(W)) or np.any(W == math.inf):
            raise ValueError("weights must be finite or -inf")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.W.shape[0]


def _digraph(G) -> WeightedDigraph:
    return G if isinstance(G, WeightedDigraph) else WeightedDigraph(G)


def cost_digraph(E: RankOneEnsemble | CostMatrix, ortho_tol: float = 0.0) -> WeightedDigraph:
    M = E if isinstance(E, CostMatrix) else cost_matrix(E, ortho_tol)
    return WeightedDigraph(M.raw)


def cycle_mean(W: np.ndarray, cycle) -> float:
    """Mean edge weight of the closed walk ``cycle`` (summed with ``math.fsum``)."""
    edges = [W[a, b] for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]])]
    if any(w == NEG_INF for w in edges):
        return NEG_INF
    return math.fsum(edges) / len(cycle)


def canonical_rotation(cycle) -> list[int]:
    """Rotate so the smallest node comes first."""
    cycle = [int(c) for c in cycle]
    i = cycle.index(min(cycle))
    return cycle[i:] + cycle[:i]


def _neg_inf_cycle(W: np.ndarray):
    diag = np.flatnonzero(np.isneginf(np.diag(W)))
    if diag.size:
        return [int(diag[0])]
    bad = np.isneginf(W) | np.isneginf(W.T)
    ii, jj = np.nonzero(np.triu(bad, 1))
    if ii.size:
        return [int(ii[0]), int(jj[0])]
    return None


def min_cycle_mean_karp(G) -> tuple[float, list[int]]:
    """Karp's dynamic program from node 0, with a realizing cycle.

    Any ``-inf`` edge lies on a self-loop or a 2-cycle, so a pre-pass returns
    the shortest such cycle (lexicographically first) and the DP only sees
    finite weights. The cycle is read off the predecessor walk of the
    optimal ``n``-edge path; each simple cycle on that walk attains the
    minimum in exact arithmetic, and the best of them by ``fsum`` is returned.
    """
    G = _digraph(G)
    W = G.W
    n = G.n
    bad = _neg_inf_cycle(W)
    if bad is not None:
        return NEG_INF, bad
    D = np.full((n + 1, n), math.inf)
    pred = np.zeros((n + 1, n), dtype=np.int64)
    D[0, 0] = 0.0
    for k in range(1, n + 1):
        cand = D[k - 1][:, None] + W  # cand[u, v]: reach v via u
        pred[k] = np.argmin(cand, axis=0)  # first minimum = smallest predecessor
        D[k] = cand[pred[k], np.arange(n)]
    with np.errstate(invalid="ignore"):
        ratios = (D[n][None, :] - D[:n]) / (n - np.arange(n))[:, None]
    ratios[~np.isfinite(D[:n])] = -math.inf
    per_node = ratios.max(axis=0)
    v = int(np.argmin(per_node))

    walk = [v]
    for k in range(n, 0, -1):
        walk.append(int(pred[k, walk[-1]]))
    walk.reverse()  # walk[k] is the node reached after k steps
    cycles = []
    stack: list[int] = []
    pos: dict[int, int] = {}
    for node in walk:
        if node in pos:
            start = pos[node]
            cycles.append(stack[start:])
            for x in stack[start:]:
                del pos[x]
            del stack[start:]
        pos[node] = len(stack)
        stack.append(node)
    best = min(
        (canonical_rotation(c) for c in cycles),
        key=lambda c: (cycle_mean(W, c), len(c), c),
    )
    return cycle_mean(W, best), best


def min_cycle_mean_brute(G) -> tuple[float, list[int]]:
    """Minimum cycle mean by enumerating every simple cycle (``n <= 8``).

    Cycles are generated smallest node first. Candidates within ``1e-9`` of
    the floating minimum are re-summed with ``math.fsum``; ties go to the
    shorter, then lexicographically smaller cycle.
    """
    G = _digraph(G)
    W = G.W
    n = G.n
    if n > BRUTE_CYCLE_CAP:
        raise ValueError(f"brute-force enumeration is limited to {BRUTE_CYCLE_CAP} nodes, got {n}")
    found: list[tuple[float, list[int]]] = []

    def extend(path, total, on):
        last = path[-1]
        start = path[0]
        found.append(((total + W[last, start]) / len(path), list(path)))
        for nxt in range(start + 1, n):
            if not on >> nxt & 1:
                path.append(nxt)
                extend(path, total + W[last, nxt], on | 1 << nxt)
                path.pop()

    for s in range(n):
        extend([s], 0.0, 1 << s)
    floor = min(m for m, _ in found)
    if floor == NEG_INF:
        pool = [c for m, c in found if m == NEG_INF]
    else:
        pool = [c for m, c in found if m <= floor + 1e-9]
    best = min(pool, key=lambda c: (cycle_mean(W, c), len(c), c))
    return cycle_mean(W, best), best


@dataclass(frozen=True)
class Circulation:
    F: np.ndarray

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise ValueError("circulation must be square")
        if np.any(F < 0):
            raise ValueError("circulation has a negative entry")
        if abs(F.sum() - 1.0) > 1e-9:
            raise ValueError(f"circulation mass is {float(F.sum())!r}, expected 1")
        gap = np.max(np.abs(F.sum(axis=1) - F.sum(axis=0)))
        if gap > 1e-9:
            raise ValueError(f"flow not conserved (imbalance {gap:.3e})")
        F.setflags(write=False)
        object.__setattr__(self, "F", F)

    @property
    def n(self) -> int:
        return self.F.shape[0]


def cycle_to_circulation(cycle, n: int) -> Circulation:
    """Uniform flow ``1/len(cycle)`` on each edge of the closed cycle."""
    cycle = [int(c) for c in cycle]
    if not cycle:
        raise ValueError("cycle is empty")
    if any(not 0 <= c < n for c in cycle):
        raise ValueError(f"cycle {cycle} has a node outside 0..{n - 1}")
    if len(set(cycle)) != len(cycle):
        raise ValueError(f"cycle {cycle} repeats a node")
    F = np.zeros((n, n))
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        F[a, b] += 1.0 / len(cycle)
    return Circulation(F)


def circulation_to_markov(C: Circulation) -> tuple[np.ndarray, np.ndarray]:
    """Kernel ``Q`` and its stationary law ``pi = F 1`` with ``pi_i Q_ij = F_ij``.

    Rows without mass jump to the smallest index that has mass.
    """
    F = C.F
    pi = F.sum(axis=1)
    Q = np.zeros_like(F)
    live = pi > 0
    Q[live] = F[live] / pi[live, None]
    Q[~live, int(np.flatnonzero(live)[0])] = 1.0
    return Q, pi


@dataclass(frozen=True)
class MarkovPlan:
    Q: np.ndarray
    pi: np.ndarray
    rate: float
    cycle: list[int]
    F: np.ndarray


def design_markov(E: RankOneEnsemble | CostMatrix, ortho_tol: float = 0.0) -> MarkovPlan:
    """Kernel minimizing the stationary Markov exponent, built from a minimum-mean cycle."""
    G = cost_digraph(E, ortho_tol)
    mean, cycle = min_cycle_mean_karp(G)
    C = cycle_to_circulation(cycle, G.n)
    Q, pi = circulation_to_markov(C)
    M = E if isinstance(E, CostMatrix) else cost_matrix(E, ortho_tol)
    rate = markov_rate(M, Q)
    if not (rate == mean or abs(rate - mean) <= RATE_CHECK_TOL):
        raise ArithmeticError(f"kernel rate {rate!r} differs from cycle mean {mean!r}")
    pi_check = stationary_distribution(Q)
    if np.max(np.abs(pi_check - pi)) > 1e-9:
        raise ArithmeticError("constructed kernel has an unexpected stationary law")
    return MarkovPlan(Q, pi, rate, cycle, C.F)


__all__ = [
    "Circulation",
    "MarkovPlan",
    "WeightedDigraph",
    "canonical_rotation",
    "circulation_to_markov",
    "cost_digraph",
    "cycle_mean",
    "cycle_to_circulation",
    "design_markov",
    "min_cycle_mean_brute",
    "min_cycle_mean_karp",
]
