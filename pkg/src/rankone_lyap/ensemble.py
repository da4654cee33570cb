"""Rank-one ensembles and their log inner-product cost matrices.

An ensemble is a finite set of matrices ``A_i = u_i v_i^T`` stored as two
``(n, d)`` arrays of factors. Everything downstream (exact exponents, the
optimizers, Markov design) only ever looks at the cost matrix
``raw[i, j] = log|u_i . v_j|`` and its symmetric part.

Negative infinity is represented by IEEE ``-inf``. Float arithmetic already
gives the absorbing rules we need (``-inf + x = -inf``, ``-inf < x``); the one
rule it gets wrong, ``0 * -inf = 0``, is handled by skipping zero weights in
:meth:`CostMatrix.quadratic_form`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

NEG_INF = float("-inf")


class EnsembleFormatError(ValueError):
    """Raised when an ensemble document cannot be parsed."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RankOneEnsemble:
    """The matrices ``U[i] outer V[i]`` for ``i < n``.

    ``U`` and ``V`` are read-only ``(n, d)`` arrays. Zero factors are allowed
    and stand for the zero matrix.
    """

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U = _frozen(self.U)
        V = _frozen(self.V)
        if U.ndim != 2 or V.ndim != 2:
            raise ValueError("factor arrays must be two-dimensional (n, d)")
        if U.shape != V.shape:
            raise ValueError(f"u and v factor shapes differ: {U.shape} vs {V.shape}")
        if U.shape[0] < 1 or U.shape[1] < 1:
            raise ValueError("ensemble needs n >= 1 matrices of dimension d >= 1")
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
            raise ValueError("factors must be finite")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[float], Sequence[float]]]):
        pairs = list(pairs)
        if not pairs:
            raise ValueError("empty ensemble")
        U = np.array([np.asarray(u, dtype=float) for u, _ in pairs])
        V = np.array([np.asarray(v, dtype=float) for _, v in pairs])
        return cls(U, V)

    @classmethod
    def symmetric(cls, vectors) -> "RankOneEnsemble":
        """Ensemble of ``u u^T`` for each row ``u`` of ``vectors``."""
        U = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(U, U)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[1]

    @property
    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.U, self.V))

    def matrices(self) -> np.ndarray:
        """Dense ``(n, d, d)`` stack of the matrices."""
        return np.einsum("ni,nj->nij", self.U, self.V)

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        """True when every ``u_i v_i^T`` is a symmetric matrix."""
        A = self.matrices()
        scale = max(1.0, float(np.max(np.abs(A))))
        return bool(np.allclose(A, np.swapaxes(A, 1, 2), rtol=0.0, atol=atol * scale))

    def __eq__(self, other):
        if not isinstance(other, RankOneEnsemble):
            return NotImplemented
        return np.array_equal(self.U, other.U) and np.array_equal(self.V, other.V)

    def __hash__(self):
        return hash((self.U.tobytes(), self.V.tobytes(), self.U.shape))

    def to_document(self) -> dict:
        """JSON-ready dict in the ensemble file format."""
        mats = []
        for u, v in self.pairs:
            entry = {"u": u.tolist()}
            if not np.array_equal(u, v):
                entry["v"] = v.tolist()
            mats.append(entry)
        return {"d": self.d, "matrices": mats}


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """``raw[i, j] = log|u_i . v_j|`` and ``sym = (raw + raw.T) / 2``."""

    raw: np.ndarray
    sym: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "raw", _frozen(self.raw))
        object.__setattr__(self, "sym", _frozen(self.sym))

    @classmethod
    def from_raw(cls, raw) -> "CostMatrix":
        raw = np.asarray(raw, dtype=float)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise ValueError("cost matrix must be square")
        if np.any(np.isnan(raw)) or np.any(raw == np.inf):
            raise ValueError("cost entries must be finite or -inf")
        # -inf absorbs: -inf + finite and -inf + -inf both stay -inf
        return cls(raw, 0.5 * (raw + raw.T))

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.sym)))

    def quadratic_form(self, p, symmetric: bool = False) -> float:
        """``sum_ij p_i p_j C_ij`` over the support of ``p``.

        Zero-weight terms contribute nothing even against ``-inf``.
        """
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n,):
            raise ValueError(f"distribution has length {p.size}, ensemble has n={self.n}")
        C = self.sym if symmetric else self.raw
        supp = np.flatnonzero(p > 0)
        sub = C[np.ix_(supp, supp)]
        if np.any(np.isneginf(sub)):
            return NEG_INF
        q = p[supp]
        return float(q @ sub @ q)


def load_ensemble(source: str | IO[str]) -> RankOneEnsemble:
    """Parse the JSON ensemble format ``{"d": int, "matrices": [{"u": [...], "v": [...]}]}``.

    A matrix given only ``"u"`` is the symmetric ``u u^T``.
    """
    text = source if isinstance(source, str) else source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnsembleFormatError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise EnsembleFormatError("top level must be an object with 'd' and 'matrices'")
    d = doc.get("d")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise EnsembleFormatError("'d' must be a positive integer")
    mats = doc.get("matrices")
    if not isinstance(mats, list):
        raise EnsembleFormatError("'matrices' must be a list")
    if not mats:
        raise EnsembleFormatError("empty ensemble")
    pairs = []
    for k, entry in enumerate(mats):
        if not isinstance(entry, dict) or "u" not in entry:
            raise EnsembleFormatError(f"matrices[{k}]: expected an object with key 'u'")
        unknown = set(entry) - {"u", "v"}
        if unknown:
            raise EnsembleFormatError(f"matrices[{k}]: unknown keys {sorted(unknown)}")
        vecs = []
        for key in ("u", "v"):
            raw = entry.get(key, entry["u"])
            if not isinstance(raw, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw
            ):
                raise EnsembleFormatError(f"matrices[{k}].{key}: expected a list of numbers")
            if len(raw) != d:
                raise EnsembleFormatError(
                    f"matrices[{k}].{key}: length {len(raw)} does not match d={d}"
                )
            if not all(math.isfinite(x) for x in raw):
                raise EnsembleFormatError(f"matrices[{k}].{key}: entries must be finite")
            vecs.append(raw)
        pairs.append(tuple(vecs))
    return RankOneEnsemble.from_pairs(pairs)


def cost_matrix(E: RankOneEnsemble, ortho_tol: float = 0.0) -> CostMatrix:
    """Log inner-product cost matrix; ``|u_i . v_j| <= ortho_tol`` maps to ``-inf``."""
    if ortho_tol < 0:
        raise ValueError("ortho_tol must be nonnegative")
    G = np.abs(E.U @ E.V.T)
    with np.errstate(divide="ignore"):
        raw = np.log(G)
    raw[G <= ortho_tol] = NEG_INF
    return CostMatrix.from_raw(raw)


def scale_ensemble(E: RankOneEnsemble, c: float) -> RankOneEnsemble:
    """Multiply every matrix by ``c > 0``; the exponent shifts by ``log c``."""
    if not c > 0:
        raise ValueError(f"scale factor must be positive, got {c}")
    return RankOneEnsemble(c * E.U, E.V)


def rescale_decomposition(E: RankOneEnsemble, i: int, alpha: float) -> RankOneEnsemble:
    """Replace ``(u_i, v_i)`` by ``(alpha u_i, v_i / alpha)``: same matrices."""
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if not 0 <= i < E.n:
        raise IndexError(f"pair index {i} out of range for n={E.n}")
    U = E.U.copy()
    V = E.V.copy()
    U[i] *= alpha
    V[i] /= alpha
    return RankOneEnsemble(U, V)


def normalize_ensemble(E: RankOneEnsemble) -> RankOneEnsemble:
    """Rescale each nonzero pair so that ``u_i`` and ``v_i`` have unit norm."""
    nu = np.linalg.norm(E.U, axis=1, keepdims=True)
    nv = np.linalg.norm(E.V, axis=1, keepdims=True)
    if np.any(nu == 0) or np.any(nv == 0):
        raise ValueError("cannot normalize an ensemble containing the zero matrix")
    return RankOneEnsemble(E.U / nu, E.V / nv)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``(seed, *stream)``.

    Stream words let callers carve independent substreams (e.g. one per
    Monte Carlo trial) out of one user seed.
    """
    key = [int(seed) % 2**64, *(int(s) for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def random_ensemble(n: int, d: int, seed: int, symmetric: bool = False) -> RankOneEnsemble:
    """Factors with i.i.d. standard normal entries, deterministic in ``seed``."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = make_rng(seed)
    U = rng.standard_normal((n, d))
    V = U if symmetric else rng.standard_normal((n, d))
    return RankOneEnsemble(U, V)
