"""Pure numpy implementations of the hot loops.

Same signatures and semantics as the compiled ``_kernels`` extension; used
when the extension is not built or ``RANKONE_LYAP_BACKEND=python`` is set.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

_CHUNK = 1 << 16


def grid_search(S, k):
    """Minimize ``c^T S c / k^2`` over compositions ``c`` of ``k`` into ``n`` parts.

    Compositions are scanned in lexicographic order and only strict
    improvements are kept, so ties go to the lexicographically smallest point.
    Returns ``(counts, value, n_points)``.
    """
    S = np.ascontiguousarray(S, dtype=float)
    n = S.shape[0]
    k = int(k)
    if n == 1:
        return np.array([k], dtype=np.int64), float(S[0, 0]), 1
    # stars and bars: lexicographic bar positions <-> lexicographic compositions
    bars = itertools.combinations(range(k + n - 1), n - 1)
    best_val = math.inf
    best = None
    count = 0
    kk = float(k) * float(k)
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(bars, _CHUNK)),
            dtype=np.int64,
        )
        if flat.size == 0:
            break
        b = flat.reshape(-1, n - 1)
        edges = np.hstack(
            [np.full((b.shape[0], 1), -1, dtype=np.int64), b,
             np.full((b.shape[0], 1), k + n - 1, dtype=np.int64)]
        )
        C = (np.diff(edges, axis=1) - 1).astype(float)
        vals = np.einsum("ki,ki->k", C @ S, C) / kk
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = float(vals[j])
            best = C[j].astype(np.int64)
        count += b.shape[0]
    return best, best_val, count


def project_simplex(y):
    """Euclidean projection onto the probability simplex (sort-based)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, y.size + 1)
    rho = np.flatnonzero(u - (css - 1.0) / j > 0)[-1]
    theta = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(y - theta, 0.0)


def projected_gradient(S, p0, max_iters, tol):
    """Projected gradient descent on ``p^T S p`` with Armijo backtracking.

    Armijo constant 1/2, shrink 1/2, initial step 1 at every iteration.
    Returns ``(p, value, iterations)``.
    """
    S = np.ascontiguousarray(S, dtype=float)
    p = np.array(p0, dtype=float)
    f = float(p @ S @ p)
    it = 0
    while it < max_iters:
        g = 2.0 * (S @ p)
        if np.linalg.norm(p - project_simplex(p - g)) < tol:
            break
        t = 1.0
        while True:
            q = project_simplex(p - t * g)
            fq = float(q @ S @ q)
            if fq <= f + 0.5 * float(g @ (q - p)):
                break
            t *= 0.5
            if t < 1e-20:
                return p, f, it
        p, f = q, fq
        it += 1
    return p, f, it


def dense_products(A, idx):
    """Renormalized left products ``A[idx[t, k-1]] ... A[idx[t, 0]]`` per trajectory.

    After every multiplication the matrix is divided by its largest absolute
    entry and the log of that divisor accumulated. Returns ``(logs, final)``
    with ``logs[t] = -inf`` once the product hits exact zero.
    """
    A = np.asarray(A, dtype=float)
    idx = np.asarray(idx, dtype=np.int64)
    trials, k = idx.shape
    d = A.shape[1]
    P = np.broadcast_to(np.eye(d), (trials, d, d)).copy()
    logs = np.zeros(trials)
    alive = np.ones(trials, dtype=bool)
    for step in range(k):
        P = np.einsum("tij,tjk->tik", A[idx[:, step]], P)
        m = np.max(np.abs(P), axis=(1, 2))
        dead = alive & (m == 0.0)
        alive &= ~dead
        logs[dead] = -np.inf
        m[~alive] = 1.0
        logs[alive] += np.log(m[alive])
        P /= m[:, None, None]
        P[~alive] = 0.0
    return logs, P


def markov_paths(cum, starts, uniforms):
    """Walk chains: next state is the first ``j`` with ``u < cum[state, j]``."""
    cum = np.asarray(cum, dtype=float)
    starts = np.asarray(starts, dtype=np.int64)
    uniforms = np.asarray(uniforms, dtype=float)
    trials, steps = uniforms.shape
    paths = np.empty((trials, steps + 1), dtype=np.int64)
    s = starts.copy()
    paths[:, 0] = s
    for j in range(steps):
        s = np.sum(cum[s] <= uniforms[:, j, None], axis=1)
        paths[:, j + 1] = s
    return paths
