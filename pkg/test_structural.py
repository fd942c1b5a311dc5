"""
Tests for regularity, critical index, tail decay, anti-concentration and the
Chow distance probe (structural.py).

Run with: pytest test_structural.py -v
"""

import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

# Add script directory to path
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
if SCRIPT_DIR not in sys.path:
    sys.path.insert(0, SCRIPT_DIR)

from chow import chow_exact
from func_core import DimensionMismatchError, ParameterError, TruthTable, majority, random_ltf, tabulate
from structural import (
    anticoncentration_check,
    check_small_tail,
    critical_index,
    dchow_vs_dist_probe,
    is_tau_regular,
    probe_pairs,
    sort_weights,
)

weight_vectors = st.lists(st.integers(-1000, 1000).map(lambda k: k / 10.0), min_size=1, max_size=30).filter(
    lambda w: any(w)
)


# ============================================================================
# SORTING
# ============================================================================

def test_sort_weights_removes_zeros_and_keeps_indices():
    sw = sort_weights([0.0, 3.0, 0.0, -4.0])
    assert list(sw.w) == [-4.0, 3.0]
    assert list(sw.order) == [3, 1]
    assert list(sw.zeros) == [0, 2]
    assert np.allclose(sw.sigma, [5.0, 3.0])


def test_sort_weights_ties_by_original_index():
    sw = sort_weights([1.0, -1.0, 2.0, 1.0])
    assert list(sw.order) == [2, 0, 1, 3]


def test_sort_weights_rejects_zero_vector():
    with pytest.raises(ParameterError):
        sort_weights([0.0, 0.0])


@given(weight_vectors)
def test_sigma_is_non_increasing(w):
    sw = sort_weights(w)
    assert np.all(np.diff(np.abs(sw.w)) <= 0)
    assert np.all(np.diff(sw.sigma) <= 1e-12 * sw.sigma[0])
    assert math.isclose(sw.sigma[0], np.linalg.norm(w), rel_tol=1e-9)


# ============================================================================
# REGULARITY AND CRITICAL INDEX
# ============================================================================

def test_is_tau_regular_examples():
    assert is_tau_regular(np.array([1.0, 1.0]) / math.sqrt(2), 0.8)
    assert not is_tau_regular([1.0, 0.0, 0.0], 0.5)
    assert is_tau_regular([3.0, 4.0], 0.8)
    with pytest.raises(ParameterError):
        is_tau_regular([0.0, 0.0], 0.5)


def test_critical_index_examples():
    assert critical_index([1.0, 1.0, 1.0, 1.0], 0.6) == 1
    assert critical_index([8.0, 4.0, 2.0, 1.0], 0.5) == math.inf
    for n in (1, 4, 9, 25):
        assert critical_index(np.ones(n), 1 / math.sqrt(n)) == 1


def test_critical_index_ignores_zeros():
    assert critical_index([0.0, 8.0, 0.0, 4.0, 2.0, 1.0], 0.5) == math.inf
    with pytest.raises(ParameterError):
        critical_index([0.0], 0.5)


@given(weight_vectors, st.floats(0.05, 0.95), st.floats(1e-3, 1e3), st.booleans())
@hyp_settings(max_examples=300)
def test_critical_index_scale_invariant(w, tau, scale, negate):
    lam = -scale if negate else scale
    assert critical_index(w, tau) == critical_index(np.asarray(w) * lam, tau)


@given(weight_vectors, st.floats(0.05, 0.95))
@hyp_settings(max_examples=300)
def test_tail_from_critical_index_is_regular(w, tau):
    c = critical_index(w, tau)
    if c != math.inf:
        sw = sort_weights(w)
        assert is_tau_regular(sw.w[c - 1:], tau)


def test_check_small_tail_examples():
    assert check_small_tail([8.0, 4.0, 2.0, 1.0], 0.5)
    assert check_small_tail([1.0, 1.0], 0.9)


@pytest.mark.parametrize("tau", [0.1, 0.3, 0.5])
def test_check_small_tail_random_vectors(tau):
    rng = np.random.default_rng(int(tau * 100))
    for _ in range(100):
        n = int(rng.integers(1, 40))
        w = rng.standard_normal(n) * rng.exponential(1.0, size=n) ** 3
        assert check_small_tail(w, tau)


# ============================================================================
# ANTI-CONCENTRATION
# ============================================================================

def test_anticoncentration_uniform_weights():
    w = np.ones(100) / 10.0
    result = anticoncentration_check(w, 0.1, -0.1, 0.1, 100_000, seed=1)
    assert math.isclose(result.bound, 0.4)
    # P[sum of 100 signs = 0] = C(100, 50) / 2^100
    assert abs(result.empirical_prob - math.comb(100, 50) / 2 ** 100) < 0.01
    assert result.passed


def test_anticoncentration_empty_interval():
    result = anticoncentration_check(np.ones(16), 0.25, 0.5, 0.5, 1000, seed=0)
    assert result.empirical_prob == 0.0
    assert result.passed


def test_anticoncentration_preconditions():
    with pytest.raises(ParameterError):
        anticoncentration_check([1.0, 0.1], 0.5, -1.0, 1.0, 100, seed=0)
    with pytest.raises(ParameterError):
        anticoncentration_check(np.ones(4), 0.5, -math.inf, 1.0, 100, seed=0)
    with pytest.raises(ParameterError):
        anticoncentration_check(np.ones(4), 0.5, 1.0, -1.0, 100, seed=0)
    with pytest.raises(ParameterError):
        anticoncentration_check(np.ones(4), 0.5, -1.0, 1.0, 0, seed=0)


def test_anticoncentration_pass_rate():
    rng = np.random.default_rng(7)
    passed = 0
    trials = 60
    for k in range(trials):
        n = int(rng.integers(30, 80))
        w = rng.standard_normal(n)
        tau = float(np.abs(w).max() / np.linalg.norm(w))
        a = float(rng.uniform(-1, 1))
        result = anticoncentration_check(w, tau, a, a + 0.5, 5000, seed=k)
        passed += result.passed
    assert passed >= 0.99 * trials


def test_anticoncentration_deterministic():
    a = anticoncentration_check(np.ones(20), 0.3, -1.0, 1.0, 3000, seed=5)
    b = anticoncentration_check(np.ones(20), 0.3, -1.0, 1.0, 3000, seed=5)
    assert a == b


# ============================================================================
# CHOW DISTANCE PROBE
# ============================================================================

def test_probe_identical_and_negated():
    f = majority(5)
    assert dchow_vs_dist_probe(f, tabulate(f)) == (0.0, 0.0)
    dchow, dist = dchow_vs_dist_probe(f, TruthTable(5, -tabulate(f).values))
    assert math.isclose(dchow, 2 * chow_exact(f).norm())
    assert dist == 2.0


def test_probe_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        dchow_vs_dist_probe(majority(3), tabulate(majority(4)))


def test_probe_pairs_envelope():
    rows = probe_pairs(50, 10, 0.05, seed=3)
    assert len(rows) == 50
    assert all(r.flipped == 51 for r in rows)
    assert all(math.isclose(r.dist, 2 * 51 / 1024) for r in rows)
    assert all(r.envelope_ok for r in rows)


def test_probe_pairs_deterministic():
    a = [r.to_dict() for r in probe_pairs(5, 6, 0.2, seed=9)]
    b = [r.to_dict() for r in probe_pairs(5, 6, 0.2, seed=9)]
    assert a == b


def test_probe_pairs_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        probe_pairs(0, 6, 0.1, seed=0)
    with pytest.raises(ParameterError):
        probe_pairs(3, 6, 1.5, seed=0)


def test_probe_uses_gaussian_instances():
    f = random_ltf(6, "gaussian", seed=1)
    dchow, dist = dchow_vs_dist_probe(f, tabulate(f))
    assert (dchow, dist) == (0.0, 0.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
