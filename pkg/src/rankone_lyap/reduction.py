"""Independent Set to exponent minimization, as runnable code.

A graph ``G`` on ``n`` nodes becomes the symmetric rank-one ensemble whose
Gram matrix is ``B = 3n I + exp(I + A_G)`` (entrywise exponential). Its cost
matrix is ``log B = (I + A_G) + (log(3n + e) - 1) I``, which sandwiches the
minimum exponent between ``1/alpha(G)`` and ``log(3n + e)/alpha(G)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable, Optional

import numpy as np

from .ensemble import CostMatrix, RankOneEnsemble, cost_matrix, make_rng
from .optimize import decision_sign_oracle, minimize, refine_by_sign_queries

BRUTE_FORCE_CAP = 30
SIGN_QUERY_CAP = 10


class GraphFormatError(ValueError):
    """Raised for malformed graph text."""


@dataclass(frozen=True)
class UndirectedGraph:
    """Simple undirected graph on nodes ``0 .. n_nodes-1``; edges stored sorted as ``(i, j)``, ``i < j``."""

    n_nodes: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        norm = set()
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ValueError(f"edge ({i}, {j}) out of range for {self.n_nodes} nodes")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_nodes, self.n_nodes))
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1.0
        return A

    def neighbor_masks(self) -> list[int]:
        masks = [0] * self.n_nodes
        for i, j in self.edges:
            masks[i] |= 1 << j
            masks[j] |= 1 << i
        return masks

    def to_text(self) -> str:
        lines = [str(self.n_nodes)] + [f"{i + 1} {j + 1}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def complete(cls, n: int) -> "UndirectedGraph":
        return cls(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def cycle(cls, n: int) -> "UndirectedGraph":
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def path(cls, n: int) -> "UndirectedGraph":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))


def load_graph(source: str | IO[str]) -> UndirectedGraph:
    """Parse ``N`` on the first line, then one 1-indexed ``i j`` edge per line."""
    text = source if isinstance(source, str) else source.read()
    lines = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not lines:
        raise GraphFormatError("empty graph file")
    no, head = lines[0]
    if len(head) != 1 or not head[0].isdigit() or int(head[0]) < 1:
        raise GraphFormatError(f"line {no}: expected a positive node count")
    n = int(head[0])
    edges = []
    for no, parts in lines[1:]:
        if len(parts) != 2:
            raise GraphFormatError(f"line {no}: expected 'i j'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {no}: endpoints must be integers") from None
        if i == j:
            raise GraphFormatError(f"line {no}: self-loop at node {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise GraphFormatError(f"line {no}: endpoint out of range 1..{n}")
        edges.append((i - 1, j - 1))
    return UndirectedGraph(n, tuple(edges))


def random_graph(n: int, edge_prob: float, seed: int) -> UndirectedGraph:
    rng = make_rng(seed)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = rng.random(len(pairs)) < edge_prob
    return UndirectedGraph(n, tuple(e for e, k in zip(pairs, keep) if k))


def graph_from_mask(n: int, mask: int) -> UndirectedGraph:
    """Graph whose edges are the set bits of ``mask`` over pairs in lexicographic order."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return UndirectedGraph(n, tuple(e for b, e in enumerate(pairs) if mask >> b & 1))


def independence_number(G: UndirectedGraph, cap: int = BRUTE_FORCE_CAP) -> tuple[int, tuple[int, ...]]:
    """Exact ``alpha(G)`` and a maximum independent set.

    Branch and bound over candidate sets kept as bitmasks. The bound is a
    greedy partition of the candidates into cliques of ``G``: an independent
    set picks at most one node from each.
    """
    n = G.n_nodes
    if n > cap:
        raise ValueError(f"{n} nodes exceeds the brute-force cap of {cap}")
    nbr = G.neighbor_masks()
    full = (1 << n) - 1
    compat = [full & ~nbr[v] & ~(1 << v) for v in range(n)]
    best = [0, 0]

    def clique_cover(P):
        order = []
        color = 0
        while P:
            color += 1
            Q = P
            while Q:
                v = (Q & -Q).bit_length() - 1
                Q &= nbr[v]
                P &= ~(1 << v)
                order.append((v, color))
        return order

    def expand(R, size, P):
        for v, c in reversed(clique_cover(P)):
            if size + c <= best[0]:
                return
            newP = P & compat[v]
            if newP:
                expand(R | 1 << v, size + 1, newP)
            elif size + 1 > best[0]:
                best[0], best[1] = size + 1, R | 1 << v
            P &= ~(1 << v)

    expand(0, 0, full)
    return best[0], tuple(v for v in range(n) if best[1] >> v & 1)


def motzkin_straus_matrix(G: UndirectedGraph) -> np.ndarray:
    return np.eye(G.n_nodes) + G.adjacency()


@dataclass(frozen=True)
class MotzkinStrausReport:
    alpha: int
    independent_set: tuple[int, ...]
    alpha_inverse: float
    optimizer_value: float
    optimizer_p: np.ndarray
    uniform_on_mis_value: float


def motzkin_straus_check(G: UndirectedGraph, **minimize_kwargs) -> MotzkinStrausReport:
    """Compare ``1/alpha`` with the simplex minimum of ``p^T (I + A_G) p``."""
    alpha, mis = independence_number(G)
    S = motzkin_straus_matrix(G)
    p = np.zeros(G.n_nodes)
    p[list(mis)] = 1.0 / alpha
    out = minimize(CostMatrix.from_raw(S), **minimize_kwargs)
    return MotzkinStrausReport(
        alpha=alpha,
        independent_set=mis,
        alpha_inverse=1.0 / alpha,
        optimizer_value=out.value,
        optimizer_p=out.p_star,
        uniform_on_mis_value=float(p @ S @ p),
    )


@dataclass(frozen=True)
class ReductionArtifacts:
    B: np.ndarray
    U: np.ndarray
    ensemble: RankOneEnsemble
    M: CostMatrix
    factor_residual: float


def reduction_scale(n: int) -> float:
    """``log(3n + e)``: the diagonal of the reduced cost matrix."""
    return math.log(3 * n + math.e)


def build_reduction(G: UndirectedGraph, residual_tol: float = 1e-8) -> ReductionArtifacts:
    """Gram matrix, factorization and ensemble for the graph ``G``."""
    n = G.n_nodes
    B = 3 * n * np.eye(n) + np.exp(np.eye(n) + G.adjacency())
    off = B.sum(axis=1) - np.diag(B)
    if np.any(np.diag(B) < off):
        raise ArithmeticError("B lost diagonal dominance")
    L = np.linalg.cholesky(B)
    U = L.T  # columns of U are the vectors u_i
    residual = float(np.max(np.abs(U.T @ U - B)))
    if residual > residual_tol:
        raise ArithmeticError(f"factorization residual {residual:.3e} exceeds {residual_tol:.1e}")
    ensemble = RankOneEnsemble.symmetric(U.T)
    M = CostMatrix.from_raw(np.log(B))
    # downstream code uses log B directly; the vectors must agree with it
    drift = float(np.max(np.abs(cost_matrix(ensemble).sym - M.sym)))
    if drift > residual_tol:
        raise ArithmeticError(f"ensemble cost matrix is {drift:.3e} away from log B")
    return ReductionArtifacts(B, U, ensemble, M, residual)


@dataclass(frozen=True)
class SandwichReport:
    passed: bool
    identity_violation: float
    lower_violation: float
    upper_violation: float
    worst_entry: tuple[int, int]
    ensemble_cost_deviation: float


def verify_sandwich(G: UndirectedGraph, art: ReductionArtifacts, tol: float = 1e-9) -> SandwichReport:
    """Check ``M = (I + A_G) + (log(3n+e) - 1) I`` and ``I + A_G <= M <= log(3n+e) (I + A_G)`` entrywise."""
    n = G.n_nodes
    base = motzkin_straus_matrix(G)
    c = reduction_scale(n)
    M = art.M.sym
    dev = np.abs(M - (base + (c - 1.0) * np.eye(n)))
    worst = np.unravel_index(int(np.argmax(dev)), dev.shape)
    lower = float(max(0.0, np.max(base - M)))
    upper = float(max(0.0, np.max(M - c * base)))
    ens = cost_matrix(art.ensemble).sym
    ens_dev = float(np.max(np.abs(ens - M)))
    ident = float(dev[worst])
    return SandwichReport(
        passed=ident <= tol and lower <= tol and upper <= tol,
        identity_violation=ident,
        lower_violation=lower,
        upper_violation=upper,
        worst_entry=(int(worst[0]), int(worst[1])),
        ensemble_cost_deviation=ens_dev,
    )


@dataclass(frozen=True)
class AlphaSearchResult:
    bracket: tuple[float, float]
    queries: int
    alpha_range: tuple[int, int]


def alpha_via_sign_queries(
    G: UndirectedGraph,
    target_width: float,
    tol: float = 1e-6,
    seed: int = 0,
    k_grid: Optional[int] = None,
    restarts: int = 4,
) -> AlphaSearchResult:
    """Bracket ``min_p p^T M p`` for the reduced ensemble using only stabilizability answers.

    Starts from ``[1/n, log(3n+e)]`` and translates the final bracket into
    the range of ``alpha`` it allows.
    """
    n = G.n_nodes
    if n > SIGN_QUERY_CAP:
        raise ValueError(f"sign-query search is limited to {SIGN_QUERY_CAP} nodes, got {n}")
    art = build_reduction(G)
    c = reduction_scale(n)
    oracle = decision_sign_oracle(tol=tol, k_grid=k_grid, restarts=restarts, seed=seed)
    res = refine_by_sign_queries(art.ensemble, 1.0 / n, c, target_width, oracle)
    lo, hi = res.bracket
    lo = lo - tol  # a "not negative" answer only certifies min >= -tol
    a_min = max(1, math.ceil(1.0 / hi - 1e-12))
    a_max = min(n, math.floor(c / lo + 1e-12)) if lo > 0 else n
    return AlphaSearchResult((lo, hi), res.queries, (a_min, a_max))


def brute_force_alpha(G: UndirectedGraph) -> int:
    """Independence number by scanning all node subsets (oracle for small graphs)."""
    n = G.n_nodes
    nbr = G.neighbor_masks()
    best = 0
    for S in range(1 << n):
        size = bin(S).count("1")
        if size <= best:
            continue
        if all(not (nbr[v] & S) for v in range(n) if S >> v & 1):
            best = size
    return best


__all__: Iterable[str] = [
    "AlphaSearchResult",
    "GraphFormatError",
    "MotzkinStrausReport",
    "ReductionArtifacts",
    "SandwichReport",
    "UndirectedGraph",
    "alpha_via_sign_queries",
    "brute_force_alpha",
    "build_reduction",
    "graph_from_mask",
    "independence_number",
    "load_graph",
    "motzkin_straus_check",
    "random_graph",
    "reduction_scale",
    "verify_sandwich",
]
