import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankone_lyap.analysis import markov_rate, stationary_distribution
from rankone_lyap.ensemble import (
    NEG_INF,
    RankOneEnsemble,
    cost_matrix,
    make_rng,
    random_ensemble,
    rescale_decomposition,
    scale_ensemble,
)
from rankone_lyap.markov_design import (
    Circulation,
    circulation_to_markov,
    cost_digraph,
    cycle_to_circulation,
    design_markov,
    min_cycle_mean_brute,
    min_cycle_mean_karp,
)
from rankone_lyap.optimize import minimize

LOG_18 = 2.8903717578961645


def permutation_cycle_min(W):
    """Minimum cycle mean over every ordered node sequence, in exact rational arithmetic."""
    n = W.shape[0]
    Wq = [[Fraction(float(x)) for x in row] for row in W]
    best = None
    for r in range(1, n + 1):
        for seq in itertools.permutations(range(n), r):
            total = sum(Wq[a][b] for a, b in zip(seq, seq[1:] + seq[:1]))
            m = total / r
            if best is None or m < best:
                best = m
    return best


def test_karp_examples():
    mean, cycle = min_cycle_mean_karp([[0, -1], [2, 5]])
    assert mean == 0.0 and cycle == [0]
    mean, cycle = min_cycle_mean_karp([[3.5]])
    assert mean == 3.5 and cycle == [0]


def test_karp_on_short_planar(short):
    mean, cycle = min_cycle_mean_karp(cost_digraph(short))
    assert mean == pytest.approx(LOG_18, abs=1e-15)
    assert cycle == [2]


def test_brute_examples():
    assert min_cycle_mean_brute([[0, -1], [2, 5]]) == (0.0, [0])
    W = np.full((5, 5), 1.25)
    mean, cycle = min_cycle_mean_brute(W)
    assert mean == 1.25 and cycle == [0]
    with pytest.raises(ValueError, match="limited"):
        min_cycle_mean_brute(np.zeros((9, 9)))


def test_neg_inf_cycles():
    W = np.zeros((3, 3))
    W[2, 1] = NEG_INF
    assert min_cycle_mean_karp(W) == (NEG_INF, [1, 2])
    assert min_cycle_mean_brute(W) == (NEG_INF, [1, 2])
    W[2, 2] = NEG_INF
    assert min_cycle_mean_karp(W) == (NEG_INF, [2])
    assert min_cycle_mean_brute(W) == (NEG_INF, [2])


def test_weighted_digraph_validation():
    with pytest.raises(ValueError):
        min_cycle_mean_karp([[np.inf]])
    with pytest.raises(ValueError):
        min_cycle_mean_karp(np.zeros((2, 3)))


def test_karp_prefers_a_long_cycle_when_it_wins():
    W = np.full((4, 4), 10.0)
    for a, b in [(0, 2), (2, 3), (3, 1), (1, 0)]:
        W[a, b] = 1.0
    mean, cycle = min_cycle_mean_karp(W)
    assert mean == 1.0 and cycle == [0, 2, 3, 1]


@given(n=st.integers(1, 6), seed=st.integers(0, 2**32), scale=st.sampled_from([1e-3, 1.0, 1e3]))
def test_karp_matches_oracles(n, seed, scale):
    W = make_rng(seed).normal(size=(n, n)) * scale
    k_mean, k_cycle = min_cycle_mean_karp(W)
    b_mean, _ = min_cycle_mean_brute(W)
    exact = permutation_cycle_min(W)
    assert abs(k_mean - b_mean) <= 1e-12 * max(1.0, scale)
    assert abs(b_mean - float(exact)) <= 1e-12 * max(1.0, scale)
    edges = [W[a, b] for a, b in zip(k_cycle, k_cycle[1:] + k_cycle[:1])]
    assert math.fsum(edges) / len(k_cycle) == k_mean
    assert k_cycle[0] == min(k_cycle) and len(set(k_cycle)) == len(k_cycle)


@given(n=st.integers(2, 6), seed=st.integers(0, 2**32))
def test_karp_with_integer_ties(n, seed):
    W = make_rng(seed).integers(-3, 4, size=(n, n)).astype(float)
    assert min_cycle_mean_karp(W)[0] == float(permutation_cycle_min(W))


def test_cycle_to_circulation_examples():
    F = cycle_to_circulation([2], 3).F
    np.testing.assert_array_equal(F, np.diag([0, 0, 1]))
    np.testing.assert_array_equal(cycle_to_circulation([0, 1], 2).F, [[0, 0.5], [0.5, 0]])
    F = cycle_to_circulation([0, 1, 2], 3).F
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 2] = expected[2, 0] = 1 / 3
    np.testing.assert_array_equal(F, expected)


@pytest.mark.parametrize("cycle, n", [([], 3), ([3], 3), ([0, 1, 0], 3), ([-1], 2)])
def test_invalid_cycles(cycle, n):
    with pytest.raises(ValueError):
        cycle_to_circulation(cycle, n)


def test_circulation_validation():
    with pytest.raises(ValueError, match="conserved"):
        Circulation([[0, 1.0], [0, 0]])
    with pytest.raises(ValueError, match="mass"):
        Circulation([[0.5, 0], [0, 0]])


def test_circulation_to_markov_examples():
    Q, pi = circulation_to_markov(Circulation([[0.5, 0], [0, 0.5]]))
    np.testing.assert_array_equal(Q, np.eye(2))
    np.testing.assert_array_equal(pi, [0.5, 0.5])
    Q, pi = circulation_to_markov(Circulation(np.diag([0, 0, 1.0])))
    np.testing.assert_array_equal(Q, [[0, 0, 1], [0, 0, 1], [0, 0, 1]])
    np.testing.assert_array_equal(pi, [0, 0, 1])
    Q, pi = circulation_to_markov(Circulation([[0, 0.5], [0.5, 0]]))
    np.testing.assert_array_equal(Q, [[0, 1], [1, 0]])


def test_zero_mass_rows_jump_to_first_live_state():
    Q, _ = circulation_to_markov(cycle_to_circulation([3, 1], 4))
    np.testing.assert_array_equal(Q[0], [0, 1, 0, 0])
    np.testing.assert_array_equal(Q[2], [0, 1, 0, 0])


@given(n=st.integers(1, 6), seed=st.integers(0, 2**32))
def test_circulation_round_trip(n, seed):
    rng = make_rng(seed)
    # mixtures of cycle flows are circulations
    F = np.zeros((n, n))
    w = rng.dirichlet(np.ones(3))
    for wi in w:
        r = int(rng.integers(1, n + 1))
        F += wi * cycle_to_circulation(list(rng.permutation(n)[:r]), n).F
    C = Circulation(F)
    Q, pi = circulation_to_markov(C)
    np.testing.assert_allclose(pi[:, None] * Q, F, atol=1e-12)
    np.testing.assert_allclose(pi @ Q, pi, atol=1e-12)


def test_design_examples(short, ortho):
    plan = design_markov(short)
    assert plan.cycle == [2]
    assert plan.rate == pytest.approx(LOG_18, abs=1e-10)
    plan = design_markov(ortho)
    assert plan.rate == NEG_INF and plan.cycle == [0, 1]
    single = RankOneEnsemble.symmetric([(1, 3)])
    plan = design_markov(single)
    assert plan.rate == cost_matrix(single).raw[0, 0]
    np.testing.assert_array_equal(plan.Q, [[1.0]])


@given(n=st.integers(1, 6), d=st.integers(1, 4), seed=st.integers(0, 2**32))
def test_design_plan_invariants(n, d, seed):
    E = random_ensemble(n, d, seed)
    plan = design_markov(E)
    raw = cost_matrix(E).raw
    F = plan.pi[:, None] * plan.Q
    np.testing.assert_allclose(F, plan.F, atol=1e-9)
    np.testing.assert_allclose(stationary_distribution(plan.Q), plan.pi, atol=1e-12)
    assert plan.rate == pytest.approx(float(np.sum(F[F > 0] * raw[F > 0])), abs=1e-10)
    assert plan.rate <= minimize(E, k_grid=30, restarts=2).value + 1e-6


@given(n=st.integers(1, 5), d=st.integers(1, 3), seed=st.integers(0, 2**32),
       logc=st.floats(-4, 4), alpha=st.floats(0.1, 10))
def test_design_scaling_and_rescaling(n, d, seed, logc, alpha):
    E = random_ensemble(n, d, seed)
    base = design_markov(E).rate
    assert design_markov(scale_ensemble(E, math.exp(logc))).rate == pytest.approx(base + logc, abs=1e-10)
    assert design_markov(rescale_decomposition(E, seed % n, alpha)).rate == pytest.approx(base, abs=1e-10)


def test_markov_beats_iid_on_alternating_pair():
    # large cross terms in one direction only: the 2-cycle is cheap, i.i.d. mixing is not
    E = RankOneEnsemble.from_pairs([((1, 0), (1, 5)), ((5, 1), (0, 1))])
    plan = design_markov(E)
    iid = minimize(E).value
    assert plan.rate <= iid + 1e-12
    assert markov_rate(E, plan.Q) == pytest.approx(plan.rate, abs=1e-12)
