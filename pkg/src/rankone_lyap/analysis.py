"""Exact Lyapunov exponents of rank-one ensembles and related diagnostics.

For i.i.d. switching with distribution ``p`` the exponent is the quadratic
form ``p^T C p`` of the log inner-product cost matrix, so everything here is
finite-dimensional linear algebra on :class:`~rankone_lyap.ensemble.CostMatrix`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .ensemble import NEG_INF, CostMatrix, RankOneEnsemble, cost_matrix

EIG_TOL = 1e-9


class ReducibleKernelError(ValueError):
    """Raised when a kernel has more than one recurrent class."""


def as_distribution(p, n: Optional[int] = None, atol: float = 1e-9) -> np.ndarray:
    """Validate a point of the simplex and renormalize it to sum exactly to one."""
    p = np.array(p, dtype=float).ravel()
    if n is not None and p.size != n:
        raise ValueError(f"distribution has length {p.size}, expected {n}")
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise ValueError("distribution must be a nonempty finite vector")
    if np.any(p < 0):
        raise ValueError("distribution has negative entries")
    total = p.sum()
    if abs(total - 1.0) > atol:
        raise ValueError(f"distribution sums to {float(total)!r}, not 1")
    return p / total


def _cost(E: RankOneEnsemble | CostMatrix, ortho_tol: float = 0.0) -> CostMatrix:
    return E if isinstance(E, CostMatrix) else cost_matrix(E, ortho_tol)


def lyapunov_exponent(E: RankOneEnsemble | CostMatrix, p, ortho_tol: float = 0.0) -> float:
    """Exponent of i.i.d. products drawn from ``E`` with probabilities ``p``."""
    M = _cost(E, ortho_tol)
    return M.quadratic_form(as_distribution(p, M.n))


def spectral_radius(E: RankOneEnsemble | CostMatrix, p, ortho_tol: float = 0.0) -> float:
    """``exp`` of the exponent; zero when the exponent is ``-inf``."""
    return math.exp(lyapunov_exponent(E, p, ortho_tol))


@dataclass(frozen=True)
class LyapunovBounds:
    lower: float
    upper: float
    argmax_vertex: int
    vertex_max: float

    @property
    def vertex_attains_upper(self) -> bool:
        return self.vertex_max == self.upper


def lyapunov_bounds(E: RankOneEnsemble | CostMatrix, ortho_tol: float = 0.0) -> LyapunovBounds:
    """Entrywise bounds ``min_ij sym <= lambda(p) <= max_ij sym`` over the simplex.

    For symmetric ensembles Cauchy-Schwarz puts the largest entry on the
    diagonal, so ``upper`` is attained at ``argmax_vertex``. For asymmetric
    ensembles an off-diagonal entry can exceed every diagonal one; ``upper``
    stays a valid bound and ``vertex_max`` reports the best vertex separately.
    """
    M = _cost(E, ortho_tol)
    diag = np.diag(M.sym)
    i = int(np.argmax(diag))
    return LyapunovBounds(
        lower=float(np.min(M.sym)),
        upper=float(np.max(M.sym)),
        argmax_vertex=i,
        vertex_max=float(diag[i]),
    )


@dataclass(frozen=True)
class DefinitenessReport:
    cond_psd: bool
    cond_nsd: bool
    witness_psd_violation: Optional[np.ndarray] = None
    witness_nsd_violation: Optional[np.ndarray] = None


def _complement_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of the hyperplane orthogonal to the ones vector."""
    Q, _ = np.linalg.qr(np.hstack([np.ones((n, 1)), np.eye(n)[:, : n - 1]]))
    return Q[:, 1:n]


def _tidy_witness(x: np.ndarray) -> np.ndarray:
    x = np.where(np.abs(x) < 1e-12 * np.max(np.abs(x)), 0.0, x)
    nz = np.flatnonzero(x)
    x = x / np.min(np.abs(x[nz]))
    if x[nz[0]] < 0:
        x = -x
    r = np.round(x)
    out = r if np.allclose(x, r, atol=1e-9) else x
    return out + 0.0  # no negative zeros


def extended_quadratic_form(S: np.ndarray, x: np.ndarray) -> float:
    """``x^T S x`` where ``-inf`` entries are read as ``-L`` with ``L -> inf``.

    Returns ``+-inf`` when the infinite part has a nonzero coefficient and the
    finite part otherwise.
    """
    S = np.asarray(S, dtype=float)
    inf_mask = np.isneginf(S)
    coeff = float(x @ inf_mask.astype(float) @ x)
    if abs(coeff) > EIG_TOL * max(1.0, float(x @ x)):
        return NEG_INF if coeff > 0 else math.inf
    return float(x @ np.where(inf_mask, 0.0, S) @ x)


def _restricted_extreme(S_fin, P, B, sign):
    """Search for ``x`` in span(B) with ``sign * x^T S x < 0`` (``-inf`` read as ``-L``).

    ``sign=+1`` looks for a PSD violation, ``sign=-1`` for an NSD violation.
    """
    if B.shape[1] == 0:
        return None
    # infinite part: x^T S_L x = x^T S_fin x - L x^T P x
    Pr = B.T @ P @ B
    w, Y = np.linalg.eigh(Pr)
    j = int(np.argmax(sign * w))
    if sign * w[j] > EIG_TOL:
        return B @ Y[:, j]
    # on the kernel of the infinite part only the finite part remains
    K = B @ Y[:, np.abs(w) <= EIG_TOL]
    if K.shape[1] == 0:
        return None
    w2, Y2 = np.linalg.eigh(K.T @ S_fin @ K)
    j = int(np.argmin(sign * w2))
    if sign * w2[j] < -EIG_TOL:
        return K @ Y2[:, j]
    return None


def conditional_definiteness(M: CostMatrix | np.ndarray) -> DefinitenessReport:
    """Sign-definiteness of ``sym`` on the hyperplane ``1^T x = 0``.

    ``-inf`` entries are treated as the limit of a large negative number,
    which reduces to eigen-analysis of the indicator matrix of those
    entries followed by the finite part on its null space.
    """
    S = M.sym if isinstance(M, CostMatrix) else np.asarray(M, dtype=float)
    n = S.shape[0]
    B = _complement_basis(n)
    P = np.isneginf(S).astype(float)
    S_fin = np.where(np.isneginf(S), 0.0, S)
    psd_w = _restricted_extreme(S_fin, P, B, +1)
    nsd_w = _restricted_extreme(S_fin, P, B, -1)
    return DefinitenessReport(
        cond_psd=psd_w is None,
        cond_nsd=nsd_w is None,
        witness_psd_violation=None if psd_w is None else _tidy_witness(psd_w),
        witness_nsd_violation=None if nsd_w is None else _tidy_witness(nsd_w),
    )


def martin_triangle_check(E: RankOneEnsemble, atol: float = 1e-9) -> list[tuple[int, int, int]]:
    """Triples ``(i, j, k)``, ``i < j``, breaking the triangle inequality of the Martin distance.

    The distance between lines ``u_i`` and ``u_j`` is ``sqrt(-log|cos angle|)``.
    """
    if not E.is_symmetric():
        raise ValueError("Martin distance needs a symmetric ensemble (u_i v_i^T symmetric)")
    norms = np.linalg.norm(E.U, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero matrix has no line direction")
    W = E.U / norms[:, None]
    G = np.abs(W @ W.T)
    with np.errstate(divide="ignore"):
        D = np.sqrt(np.maximum(-np.log(G), 0.0))
    out = []
    n = E.n
    for i, j in itertools.combinations(range(n), 2):
        for k in range(n):
            if k in (i, j):
                continue
            if D[i, j] > D[i, k] + D[k, j] + atol:
                out.append((i, j, k))
    return out


@dataclass(frozen=True)
class MixturePlan:
    """Finite mixture of i.i.d. laws: an exchangeable switching process."""

    weights: np.ndarray
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        w = as_distribution(self.weights)
        comps = tuple(as_distribution(c) for c in self.components)
        if len(comps) != w.size:
            raise ValueError(f"{w.size} weights but {len(comps)} components")
        if len({c.size for c in comps}) > 1:
            raise ValueError("mixture components have different lengths")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)


def exchangeable_rate(E: RankOneEnsemble | CostMatrix, mix: MixturePlan, ortho_tol: float = 0.0) -> float:
    """Weighted average of the component exponents (``-inf`` absorbs)."""
    M = _cost(E, ortho_tol)
    total = 0.0
    for w, comp in zip(mix.weights, mix.components):
        if w == 0:
            continue
        lam = lyapunov_exponent(M, comp)
        if lam == NEG_INF:
            return NEG_INF
        total += w * lam
    return total


def validate_kernel(Q, atol: float = 1e-9) -> np.ndarray:
    Q = np.array(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.size == 0:
        raise ValueError("kernel must be a nonempty square matrix")
    if not np.all(np.isfinite(Q)) or np.any(Q < 0):
        raise ValueError("kernel entries must be finite and nonnegative")
    rows = Q.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > atol)
    if bad.size:
        raise ValueError(f"kernel row {int(bad[0])} sums to {float(rows[bad[0]])!r}, not 1")
    return Q


def recurrent_classes(Q: np.ndarray) -> list[np.ndarray]:
    """Closed strongly connected classes of the support graph of ``Q``."""
    A = np.asarray(Q) > 0
    ncomp, labels = connected_components(A, directed=True, connection="strong")
    closed = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        leaves = A[members][:, labels != c].any()
        if not leaves:
            closed.append(members)
    return closed


def is_irreducible(Q) -> bool:
    """Exactly one recurrent class; transient states feeding into it are allowed.

    This is weaker than textbook irreducibility on purpose: kernels built from
    a single cycle route every off-cycle state into the cycle.
    """
    return len(recurrent_classes(validate_kernel(Q))) == 1


def stationary_distribution(Q) -> np.ndarray:
    """Stationary law of a kernel with one recurrent class; transient states get 0."""
    Q = validate_kernel(Q)
    classes = recurrent_classes(Q)
    if len(classes) != 1:
        raise ReducibleKernelError(
            f"ambiguous stationary distribution: {len(classes)} recurrent classes"
        )
    C = classes[0]
    m = C.size
    A = Q[np.ix_(C, C)].T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    piC = np.linalg.solve(A, b)
    piC = np.clip(piC, 0.0, None)
    pi = np.zeros(Q.shape[0])
    pi[C] = piC / piC.sum()
    return pi


def markov_rate(E: RankOneEnsemble | CostMatrix, Q, ortho_tol: float = 0.0) -> float:
    """Exponent under stationary Markov switching: ``sum_ij pi_i Q_ij raw_ij``."""
    M = _cost(E, ortho_tol)
    Q = validate_kernel(Q)
    if Q.shape[0] != M.n:
        raise ValueError(f"kernel is {Q.shape[0]}x{Q.shape[0]}, ensemble has n={M.n}")
    pi = stationary_distribution(Q)
    F = pi[:, None] * Q
    used = F > 0
    if np.any(np.isneginf(M.raw[used])):
        return NEG_INF
    return float(np.sum(F[used] * M.raw[used]))


__all__: Sequence[str] = [
    "DefinitenessReport",
    "LyapunovBounds",
    "MixturePlan",
    "ReducibleKernelError",
    "as_distribution",
    "conditional_definiteness",
    "exchangeable_rate",
    "extended_quadratic_form",
    "is_irreducible",
    "lyapunov_bounds",
    "lyapunov_exponent",
    "markov_rate",
    "martin_triangle_check",
    "recurrent_classes",
    "spectral_radius",
    "stationary_distribution",
    "validate_kernel",
]
