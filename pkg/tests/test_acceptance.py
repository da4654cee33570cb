"""Acceptance checks, one test per criterion, each with its own runtime limit.

Every test appends a PASS/FAIL line to ``ACCEPTANCE_LINES``; the lines are
printed in the pytest terminal summary. Run directly with
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from rankone_lyap.analysis import conditional_definiteness, extended_quadratic_form, lyapunov_exponent, martin_triangle_check
from rankone_lyap.ensemble import (
    NEG_INF,
    CostMatrix,
    RankOneEnsemble,
    cost_matrix,
    make_rng,
    random_ensemble,
    rescale_decomposition,
    scale_ensemble,
)
from rankone_lyap.markov_design import design_markov, min_cycle_mean_brute, min_cycle_mean_karp
from rankone_lyap.optimize import default_grid, minimize
from rankone_lyap.reduction import (
    brute_force_alpha,
    build_reduction,
    graph_from_mask,
    motzkin_straus_matrix,
    random_graph,
    reduction_scale,
    verify_sandwich,
)
from rankone_lyap.simulate import dense_rates, iid_indices, simulate_iid_telescoped, telescoped_rates
from rankone_lyap.special_functions import sphere_lyapunov

try:
    from .conftest import ACCEPTANCE_LINES, PLANAR_MIXED, PLANAR_PEAK, PLANAR_SHORT
except ImportError:
    from conftest import ACCEPTANCE_LINES, PLANAR_MIXED, PLANAR_PEAK, PLANAR_SHORT

PLANAR_VALUES = (3.805, 2.890, 3.772)
PLANAR_MIXED_POINT = (0.156, 0.377, 0.467)
SPHERE_TABLE = (-0.693147, -1.0, -1.19315, -1.33333, -1.44315, -1.53333, -1.60981)


@contextmanager
def criterion(label, limit):
    """Time the block, then record and enforce the verdict stored in ``state``."""
    state = {"ok": False, "detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
    finally:
        elapsed = time.perf_counter() - t0
        in_time = elapsed < limit
        ok = state["ok"] and in_time
        note = state["detail"] + ("" if in_time else f"; over the {limit:g} s limit")
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {note} ({elapsed:.2f} s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
    assert in_time, line


def test_c1_planar_optimum_values():
    with criterion("C1a planar optimum values within 1e-3", 10) as st:
        values = [minimize(RankOneEnsemble.symmetric(vs), seed=0).value
                  for vs in (PLANAR_PEAK, PLANAR_SHORT, PLANAR_MIXED)]
        errs = [abs(v - t) for v, t in zip(values, PLANAR_VALUES)]
        st["ok"] = max(errs) <= 1e-3
        st["detail"] = "values " + ", ".join(f"{v:.6f}" for v in values)
    assert st["ok"], st["detail"]


def test_c1_planar_mixed_argmin():
    with criterion("C1b third planar argmin within 5e-3 per coordinate", 10) as st:
        p = minimize(RankOneEnsemble.symmetric(PLANAR_MIXED), seed=0).p_star
        err = np.max(np.abs(p - np.array(PLANAR_MIXED_POINT)))
        st["ok"] = err <= 5e-3
        st["detail"] = (f"p* = ({p[0]:.4f}, {p[1]:.4f}, {p[2]:.4f}) vs target "
                        f"{PLANAR_MIXED_POINT}, max deviation {err:.4f}")
    assert st["ok"], st["detail"]


def test_c2_sphere_table():
    with criterion("C2 sphere exponents to six significant digits", 1) as st:
        vals = [sphere_lyapunov(d).exact_value for d in range(2, 9)]
        six = [float(f"{v:.6g}") for v in vals]
        d3 = abs(vals[1] + 1.0)
        st["ok"] = six == list(SPHERE_TABLE) and d3 <= 1e-14
        st["detail"] = f"7/7 match={six == list(SPHERE_TABLE)}, |d=3 + 1| = {d3:.1e}"
    assert st["ok"], st["detail"]


def test_c3_ergodic_formula():
    with criterion("C3 Monte Carlo vs closed form on 20 ensembles", 60) as st:
        rng = make_rng(2024)
        worst_ratio, worst_traj = 0.0, 0.0
        failures = []
        for i in range(20):
            n, d = int(rng.integers(1, 6)), int(rng.integers(1, 5))
            E = random_ensemble(n, d, seed=1000 + i)
            assert np.all(np.isfinite(cost_matrix(E).raw))
            p = make_rng(1000 + i, 1).dirichlet(np.ones(n))
            res = simulate_iid_telescoped(E, p, 100_000, 32, seed=i)
            lam = lyapunov_exponent(E, p)
            tol = max(0.02, 4 * res.std_error)
            gap = abs(res.estimate - lam)
            worst_ratio = max(worst_ratio, gap / tol)
            if gap > tol:
                failures.append(i)
            idx = iid_indices(p, 10_000, 32, seed=i)
            worst_traj = max(worst_traj, float(np.max(np.abs(dense_rates(E, idx) - telescoped_rates(E, idx)))))
        st["ok"] = not failures and worst_traj <= 1e-9
        st["detail"] = (f"worst gap/tolerance {worst_ratio:.3f}, failures {failures}, "
                        f"max dense-telescoped trajectory gap {worst_traj:.1e}")
    assert st["ok"], st["detail"]


def exact_quadratic(S, p):
    """``p^T S p`` at ``p / sum(p)`` in rational arithmetic, so no rounding enters the comparison."""
    q = [Fraction(float(x)) for x in p]
    total = sum(q)
    q = [x / total for x in q]
    n = len(q)
    return sum(q[i] * q[j] * Fraction(float(S[i, j])) for i in range(n) for j in range(n))


def test_c4_motzkin_straus_all_small_graphs():
    with criterion("C4 quadratic minimum = 1/alpha on all 6-node graphs", 300) as st:
        worst_low = worst_high = worst_float = Fraction(0)
        for mask in range(1 << 15):
            G = graph_from_mask(6, mask)
            alpha = brute_force_alpha(G)
            S = motzkin_straus_matrix(G)
            res = minimize(CostMatrix.from_raw(S), k_grid=12, restarts=2)
            exact = exact_quadratic(S, res.p_star)
            worst_low = max(worst_low, Fraction(1, alpha) - exact)
            worst_high = max(worst_high, exact - Fraction(1, alpha))
            worst_float = max(worst_float, abs(Fraction(res.value) - exact))
        st["ok"] = worst_low <= 0 and worst_high <= Fraction(1, 10**6) and worst_float <= Fraction(1, 10**12)
        st["detail"] = (f"32768 graphs, exact value at p*: max undershoot {float(worst_low):.1e}, "
                        f"max overshoot {float(worst_high):.1e}; reported float vs exact {float(worst_float):.1e}")
    assert st["ok"], st["detail"]


def test_c5_reduction_sandwich():
    with criterion("C5 reduction identity, factorization and sandwich on 50 graphs", 60) as st:
        rng = make_rng(55)
        ident, factor, bad = 0.0, 0.0, []
        for i in range(50):
            n = int(rng.integers(1, 11))
            G = random_graph(n, float(rng.uniform(0.1, 0.9)), seed=500 + i)
            art = build_reduction(G)
            rep = verify_sandwich(G, art)
            ident = max(ident, rep.identity_violation)
            factor = max(factor, float(np.max(np.abs(art.U.T @ art.U - art.B))))
            alpha = brute_force_alpha(G)
            v = minimize(art.M, k_grid=default_grid(n, 10**5), restarts=4, seed=i).value
            if not (1 / alpha <= v <= reduction_scale(n) / alpha + 1e-6):
                bad.append(i)
        st["ok"] = ident <= 1e-9 and factor <= 1e-8 and not bad
        st["detail"] = f"identity {ident:.1e}, U^T U - B {factor:.1e}, sandwich failures {bad}"
    assert st["ok"], st["detail"]


def test_c6_karp_vs_brute_force():
    with criterion("C6 Karp = brute-force cycle mean on 200 digraphs", 30) as st:
        rng = make_rng(66)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(1, 9))
            W = rng.normal(size=(n, n))
            worst = max(worst, abs(min_cycle_mean_karp(W)[0] - min_cycle_mean_brute(W)[0]))
        st["ok"] = worst <= 1e-12
        st["detail"] = f"max disagreement {worst:.1e}"
    assert st["ok"], st["detail"]


def test_c7_markov_dominates_iid():
    with criterion("C7 Markov design <= i.i.d. optimum; short planar gives log 18 on [3]", 60) as st:
        rng = make_rng(77)
        worst = -math.inf
        for i in range(50):
            E = random_ensemble(int(rng.integers(1, 6)), int(rng.integers(1, 5)), seed=700 + i)
            worst = max(worst, design_markov(E).rate - minimize(E, seed=i).value)
        plan = design_markov(RankOneEnsemble.symmetric(PLANAR_SHORT))
        gap = abs(plan.rate - math.log(18))
        cycle = [c + 1 for c in plan.cycle]
        st["ok"] = worst <= 1e-6 and gap <= 1e-10 and cycle == [3]
        st["detail"] = f"max(markov - iid) {worst:.2e}, |rate - log 18| {gap:.1e}, cycle {cycle}"
    assert st["ok"], st["detail"]


def test_c8_algebraic_properties():
    with criterion("C8 algebraic property suite (100 instances each)", 30) as st:
        rng = make_rng(88)
        shift = decomp = 0.0
        defin_changes = 0
        for i in range(100):
            n, d = int(rng.integers(1, 7)), int(rng.integers(1, 5))
            E = random_ensemble(n, d, seed=800 + i)
            p = rng.dirichlet(np.ones(n))
            c = float(np.exp(rng.uniform(-3, 3)))
            shift = max(shift, abs(lyapunov_exponent(scale_ensemble(E, c), p)
                                   - lyapunov_exponent(E, p) - math.log(c)))
            j, a = int(rng.integers(n)), float(rng.choice([-1, 1]) * np.exp(rng.uniform(-3, 3)))
            decomp = max(decomp, float(np.max(np.abs(cost_matrix(rescale_decomposition(E, j, a)).sym
                                                    - cost_matrix(E).sym))))
            S = RankOneEnsemble.symmetric(random_ensemble(n, d, seed=900 + i, symmetric=True).U)
            U = S.U.copy()
            U[j] *= a
            before = conditional_definiteness(cost_matrix(S))
            after = conditional_definiteness(cost_matrix(RankOneEnsemble.symmetric(U)))
            defin_changes += (before.cond_psd, before.cond_nsd) != (after.cond_psd, after.cond_nsd)

        witness_ok = 0
        for _ in range(100):
            eps = float(rng.uniform(0, 0.05))
            two = conditional_definiteness(cost_matrix(RankOneEnsemble.symmetric([(1 + eps, eps), (eps, 1 + eps)])))
            three = conditional_definiteness(cost_matrix(RankOneEnsemble.symmetric(
                [(1 + eps, eps), (eps, 1 + eps), (1 + eps, 1 + eps)])))
            witness_ok += (not two.cond_nsd) and (not three.cond_psd)
        rep2 = conditional_definiteness(cost_matrix(RankOneEnsemble.symmetric([(1, 0), (0, 1)])))
        rep3 = conditional_definiteness(cost_matrix(RankOneEnsemble.symmetric([(1, 0), (0, 1), (1, 1)])))
        exact = (list(rep2.witness_nsd_violation) == [1, -1]
                 and list(rep3.witness_psd_violation) == [1, 1, -2]
                 and extended_quadratic_form(cost_matrix(RankOneEnsemble.symmetric([(1, 0), (0, 1), (1, 1)])).sym,
                                             rep3.witness_psd_violation) == NEG_INF)

        martin_ok = 0
        for _ in range(100):
            theta = float(rng.uniform(0, 2 * np.pi))
            R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
            scales = rng.choice([-1, 1], 3) * np.exp(rng.uniform(-2, 2, 3))
            vecs = (np.array([[1, 0], [0, 1], [1, 1]], dtype=float) @ R.T) * scales[:, None]
            martin_ok += martin_triangle_check(RankOneEnsemble.symmetric(vecs)) == [(0, 1, 2)]

        st["ok"] = (shift <= 1e-12 and decomp <= 1e-12 and defin_changes == 0 and exact
                    and witness_ok == 100 and martin_ok == 100)
        st["detail"] = (f"scaling {shift:.1e}, decomposition {decomp:.1e}, definiteness flips "
                        f"{defin_changes}, exact witnesses {exact}, perturbed witnesses {witness_ok}/100, "
                        f"Martin violations {martin_ok}/100")
    assert st["ok"], st["detail"]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
