"""Minimizing and maximizing the exponent over the probability simplex.

The objective ``p -> p^T M p`` is an indefinite quadratic in general, so the
minimizer is a brute simplex-grid scan followed by projected-gradient polish
from the grid optimum and from random interior starts. The grid comes with
the standard quadratic guarantee: the best point of the resolution-``k`` grid
is within ``(max - min) / k`` of the true minimum, which is what lets
:func:`decide_stabilizable` certify a negative answer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._backend import kernels
from .analysis import as_distribution, lyapunov_bounds
from .ensemble import (
    NEG_INF,
    CostMatrix,
    RankOneEnsemble,
    cost_matrix,
    make_rng,
    scale_ensemble,
)

DEFAULT_BUDGET = 10**8


class GridBudgetError(RuntimeError):
    """The requested grid has more points than the evaluation budget."""


class ConditioningError(ValueError):
    """An ensemble violates the well-conditioning precondition."""


class OracleError(RuntimeError):
    """A sign oracle gave an unusable or inconsistent answer."""


@dataclass(frozen=True)
class MethodTrace:
    k_grid: int = 0
    grid_points: int = 0
    grid_value: float = math.nan
    refine_iterations: int = 0
    restarts: int = 0
    note: str = ""


@dataclass(frozen=True)
class OptimizationOutcome:
    p_star: np.ndarray
    value: float
    method_trace: MethodTrace = field(default_factory=MethodTrace)


@dataclass(frozen=True)
class ConditioningParams:
    delta: float
    gamma: float

    def __post_init__(self):
        for name in ("delta", "gamma"):
            x = getattr(self, name)
            if not 0 < x <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {x}")


def _as_cost(target, ortho_tol: float = 0.0) -> CostMatrix:
    if isinstance(target, CostMatrix):
        return target
    if isinstance(target, RankOneEnsemble):
        return cost_matrix(target, ortho_tol)
    return CostMatrix.from_raw(np.asarray(target, dtype=float))


def _value(M: CostMatrix, p) -> float:
    return M.quadratic_form(p, symmetric=True)


def detect_neg_inf_witness(M: CostMatrix) -> Optional[np.ndarray]:
    """A distribution with exponent ``-inf`` if one touches a ``-inf`` entry, else None."""
    S = M.sym
    n = S.shape[0]
    diag = np.flatnonzero(np.isneginf(np.diag(S)))
    if diag.size:
        p = np.zeros(n)
        p[diag[0]] = 1.0
        return p
    ii, jj = np.nonzero(np.isneginf(S))
    if ii.size:
        # np.nonzero scans row-major, so this is the lexicographically first pair
        p = np.zeros(n)
        p[ii[0]] = p[jj[0]] = 0.5
        return p
    return None


def grid_size(n: int, k_grid: int) -> int:
    return math.comb(k_grid + n - 1, n - 1)


def grid_minimize(M: CostMatrix, k_grid: int, budget: int = DEFAULT_BUDGET) -> OptimizationOutcome:
    """Exhaustive scan of ``{p : k_grid * p integer}``; lexicographically first minimizer."""
    M = _as_cost(M)
    if k_grid < 1:
        raise ValueError("k_grid must be >= 1")
    if not M.finite:
        raise ValueError("grid scan needs a finite cost matrix; check detect_neg_inf_witness first")
    size = grid_size(M.n, k_grid)
    if size > budget:
        raise GridBudgetError(
            f"grid with n={M.n}, k_grid={k_grid} has {size} points, budget is {budget}"
        )
    counts, _, npts = kernels.grid_search(M.sym, k_grid)
    p = counts / k_grid
    value = _value(M, p)
    return OptimizationOutcome(p, value, MethodTrace(k_grid=k_grid, grid_points=npts, grid_value=value))


def local_refine(M: CostMatrix, p0, max_iters: int = 10_000, tol: float = 1e-10) -> OptimizationOutcome:
    """Projected gradient polish of ``p^T sym p`` from ``p0``; never increases the objective."""
    M = _as_cost(M)
    if not M.finite:
        raise ValueError("refinement needs a finite cost matrix")
    p0 = as_distribution(p0, M.n)
    p, _, iters = kernels.projected_gradient(M.sym, p0, max_iters, tol)
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    value = _value(M, p)
    f0 = _value(M, p0)
    if value > f0:
        # renormalization noise must not undo a non-step
        p, value = p0, f0
    return OptimizationOutcome(p, value, MethodTrace(refine_iterations=iters))


DEFAULT_K_GRID = 200


def default_grid(n: int, budget: int = 10**6) -> int:
    """Largest resolution up to 200 whose grid has at most ``budget`` points."""
    k = DEFAULT_K_GRID
    while k > 1 and grid_size(n, k) > budget:
        k -= 1
    return k


def _better(a: OptimizationOutcome, b: OptimizationOutcome) -> bool:
    if a.value != b.value:
        return a.value < b.value
    return tuple(a.p_star) < tuple(b.p_star)


def minimize(
    target,
    k_grid: Optional[int] = None,
    restarts: int = 8,
    max_iters: int = 10_000,
    seed: int = 0,
    ortho_tol: float = 0.0,
    budget: int = DEFAULT_BUDGET,
) -> OptimizationOutcome:
    """Minimize the exponent over the simplex.

    ``target`` is an ensemble or a cost matrix. ``-inf`` entries short-circuit
    to their witness; otherwise grid scan, then polish from the grid point
    and from ``restarts`` uniformly random interior points.
    """
    M = _as_cost(target, ortho_tol)
    w = detect_neg_inf_witness(M)
    if w is not None:
        return OptimizationOutcome(w, NEG_INF, MethodTrace(note="-inf witness"))
    if k_grid is None:
        k_grid = default_grid(M.n)
    grid = grid_minimize(M, k_grid, budget)
    best = local_refine(M, grid.p_star, max_iters)
    iters = best.method_trace.refine_iterations
    rng = make_rng(seed)
    for _ in range(restarts):
        out = local_refine(M, rng.dirichlet(np.ones(M.n)), max_iters)
        iters += out.method_trace.refine_iterations
        if _better(out, best):
            best = out
    if _better(grid, best):
        best = grid
    trace = MethodTrace(
        k_grid=k_grid,
        grid_points=grid.method_trace.grid_points,
        grid_value=grid.value,
        refine_iterations=iters,
        restarts=restarts,
    )
    return OptimizationOutcome(best.p_star, best.value, trace)


def maximize(target, ortho_tol: float = 0.0) -> OptimizationOutcome:
    """Best vertex ``e_i`` (smallest index on ties).

    Exact for symmetric ensembles. For asymmetric ones the vertex value can
    fall short of the true maximum; the trace note says so.
    """
    M = _as_cost(target, ortho_tol)
    b = lyapunov_bounds(M)
    p = np.zeros(M.n)
    p[b.argmax_vertex] = 1.0
    note = ""
    if isinstance(target, RankOneEnsemble) and not target.is_symmetric():
        note = "asymmetric ensemble: vertex maximum, not certified global"
    elif b.vertex_max < b.upper:
        note = f"off-diagonal entry exceeds vertex value; global max may be up to {b.upper!r}"
    return OptimizationOutcome(p, b.vertex_max, MethodTrace(note=note))


class Verdict(enum.Enum):
    STABILIZABLE = "STABILIZABLE"
    NOT_STABILIZABLE = "NOT_STABILIZABLE"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    value: float
    witness: Optional[np.ndarray]
    bracket: tuple[float, float]


def decide_stabilizable(
    target,
    tol: float = 1e-6,
    k_grid: Optional[int] = None,
    restarts: int = 8,
    max_iters: int = 10_000,
    seed: int = 0,
    ortho_tol: float = 0.0,
) -> Decision:
    """Is there a distribution with negative exponent?

    ``bracket`` encloses the true minimum: the upper end is the best value
    found, the lower end the better of the entrywise bound and the grid
    guarantee ``grid_value - (max - min) / k_grid``.
    """
    M = _as_cost(target, ortho_tol)
    out = minimize(M, k_grid, restarts, max_iters, seed)
    b = lyapunov_bounds(M)
    if out.value < -tol:
        return Decision(Verdict.STABILIZABLE, out.value, out.p_star, (b.lower, out.value))
    lower = b.lower
    tr = out.method_trace
    if tr.k_grid:
        lower = max(lower, tr.grid_value - (b.upper - b.lower) / tr.k_grid)
    lower = min(lower, out.value)
    if b.lower >= 0 or (out.value >= tol and lower >= 0):
        return Decision(Verdict.NOT_STABILIZABLE, out.value, None, (lower, out.value))
    return Decision(Verdict.UNDETERMINED, out.value, out.p_star, (lower, out.value))


SignOracle = Callable[[RankOneEnsemble], Optional[bool]]


def exact_sign_oracle(**minimize_kwargs) -> SignOracle:
    """Oracle answering ``min_p lambda < 0`` by running :func:`minimize`."""
    def oracle(E):
        return minimize(E, **minimize_kwargs).value < 0
    return oracle


def decision_sign_oracle(tol: float = 1e-6, **kwargs) -> SignOracle:
    """Oracle backed by :func:`decide_stabilizable`.

    UNDETERMINED means the best value found is at least ``-tol``, so it is
    answered as "not negative"; brackets built from it are good to ``tol``.
    """
    def oracle(E):
        return decide_stabilizable(E, tol=tol, **kwargs).verdict is Verdict.STABILIZABLE
    return oracle


@dataclass(frozen=True)
class SignSearchResult:
    bracket: tuple[float, float]
    queries: int


def refine_by_sign_queries(
    E: RankOneEnsemble,
    lo: float,
    hi: float,
    target_width: float,
    oracle: SignOracle,
) -> SignSearchResult:
    """Binary search for ``min_p lambda(E, p)`` in ``[lo, hi]`` with a sign oracle.

    Asking whether ``E`` scaled by ``exp(-mid)`` is stabilizable asks whether
    the minimum lies below ``mid``. Uses ``ceil(log2((hi - lo) / width))``
    queries.
    """
    if not target_width > 0:
        raise ValueError("target_width must be positive")
    if not lo <= hi:
        raise OracleError(f"inverted bracket [{lo}, {hi}]")
    queries = 0
    n_queries = 0 if hi - lo <= target_width else math.ceil(math.log2((hi - lo) / target_width))
    for _ in range(n_queries):
        mid = 0.5 * (lo + hi)
        answer = oracle(scale_ensemble(E, math.exp(-mid)))
        queries += 1
        if answer is None:
            raise OracleError(f"oracle gave no answer at shift {mid!r}")
        if answer:
            hi = mid
        else:
            lo = mid
        if not lo <= hi:
            raise OracleError(f"bracket inverted to [{lo}, {hi}]")
    return SignSearchResult((lo, hi), queries)


def ptas_error_bound(E: RankOneEnsemble, params: ConditioningParams, atol: float = 1e-9) -> float:
    """Additive accuracy ``delta * log(1/gamma)`` of the grid scheme on a well-conditioned ensemble.

    Checks that ``E`` is symmetric, unit-normalized, and that every pair
    satisfies ``|cos angle(u_i, u_j)| >= gamma``.
    """
    if not E.is_symmetric():
        raise ConditioningError("ensemble must be symmetric (u_i u_i^T)")
    norms = np.linalg.norm(E.U, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > atol)
    if bad.size:
        raise ConditioningError(
            f"u_{int(bad[0])} has norm {float(norms[bad[0]])!r}; normalize the ensemble first"
        )
    C = np.abs(E.U @ E.U.T)
    for i in range(E.n):
        for j in range(i + 1, E.n):
            if C[i, j] < params.gamma - atol:
                raise ConditioningError(
                    f"pair ({i}, {j}) has |cos| = {float(C[i, j])!r} < gamma = {params.gamma!r}"
                )
    return params.delta * math.log(1.0 / params.gamma)
