"""
Full-size property runs for reconstruction, the LP oracle, the envelope,
the small-weight pipeline, the 1-RFA learner, the structural utilities and
seed determinism. They take minutes, so they are marked slow and skipped by
the default pytest run.

Run with: pytest -m slow test_acceptance.py -v
"""

import math
import os
import sys

import numpy as np
import pytest

# Add script directory to path
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
if SCRIPT_DIR not in sys.path:
    sys.path.insert(0, SCRIPT_DIR)

from chow import chow_distance, chow_exact, dist_l1, perturb
from chowlab import approx_weights
from exact_lp import InfeasibleError, recover_weights, solve_exact_chow, verify_chow_uniqueness
from func_core import STREAM_INSTANCES, derive_seed, lbf_to_ltf, majority, parity_table, random_ltf, tabulate
from learners import RFAOracle, default_accuracy, learn_rfa
from reconstruct import ReconstructParams, chow_reconstruct, default_iteration_cap
from structural import anticoncentration_check, check_small_tail, critical_index, probe_pairs

pytestmark = pytest.mark.slow

EPS = 0.1

# Largest |v| / sqrt(n+1) seen over 200 seeded Gaussian runs (n 8..16, eps 0.1) was 27.4;
# the bound keeps 2x headroom over it.
WEIGHT_NORM_PER_ROOT = 56.0


@pytest.fixture(scope="module")
def reconstruction_runs():
    runs = []
    for r in range(50):
        n = 8 + r % 9
        f = random_ltf(n, "gaussian", seed=derive_seed(2024, STREAM_INSTANCES, r))
        alpha = chow_exact(f)
        g, trace = chow_reconstruct(alpha, ReconstructParams(eps=EPS), target=f if n <= 12 else None)
        runs.append((n, alpha, g, trace))
    return runs


def test_reconstruction_guarantee(reconstruction_runs):
    for n, alpha, g, trace in reconstruction_runs:
        assert trace.stop_reason == "rho"
        assert trace.rho_history[-1] <= 4 * EPS
        assert chow_distance(alpha, chow_exact(g)) <= 6 * EPS + 1e-9


def test_potential_law(reconstruction_runs):
    checked = 0
    for n, _, _, trace in reconstruction_runs:
        if n > 12:
            continue
        energy = trace.potential_history
        assert energy[0] == 1.0
        assert min(energy) >= -1e-12
        assert np.all(np.diff(energy) <= -2 * EPS ** 2 + 1e-9)
        checked += 1
    assert checked > 0


def test_iteration_and_weight_structure(reconstruction_runs):
    for n, _, g, trace in reconstruction_runs:
        assert trace.iterations <= default_iteration_cap(EPS) == math.ceil(1 / (2 * EPS ** 2))
        assert g.kappa == EPS / (4 * math.sqrt(n + 1))
        assert g.v.dtype == np.int64
        norm = float(np.linalg.norm(g.v.astype(float)))
        assert norm <= WEIGHT_NORM_PER_ROOT * math.sqrt(n + 1)
        assert g.kappa * norm <= WEIGHT_NORM_PER_ROOT * EPS / 4


def test_exact_lp_oracle():
    for n in range(4, 11):
        for r in range(20):
            f = random_ltf(n, "gaussian", seed=derive_seed(7, STREAM_INSTANCES, n, r))
            table = tabulate(f)
            assert np.array_equal(solve_exact_chow(chow_exact(f)).values, table.values)
            assert np.array_equal(tabulate(recover_weights(table)).values, table.values)
    for n in (2, 3, 6):
        with pytest.raises(InfeasibleError):
            recover_weights(parity_table(n))


def test_gaussian_instances_are_chow_unique():
    assert all(verify_chow_uniqueness(random_ltf(8, "gaussian", seed=s)) for s in range(100))


def test_envelope_on_500_pairs():
    total = 0
    for b, n in enumerate(range(8, 13)):
        for rate in (0.01, 0.05, 0.2):
            for row in probe_pairs(34, n, rate, seed=derive_seed(11, STREAM_INSTANCES, b, int(rate * 100))):
                assert row.dchow <= 2 * math.sqrt(row.dist) + 1e-9
                total += 1
    assert total >= 500


def test_small_weight_pipeline():
    eps = 0.2
    good = 0
    for r in range(25):
        n = 6 + r % 9
        W = int(np.random.default_rng(r).integers(n, 21))
        f = random_ltf(n, "integer", seed=derive_seed(13, STREAM_INSTANCES, r), W=W, signed=True)
        accuracy = default_accuracy(eps, W)
        alpha = perturb(chow_exact(f), accuracy, seed=r)
        g, trace = chow_reconstruct(alpha, ReconstructParams(eps=accuracy))
        trace.raise_for_status()
        f_star, _ = lbf_to_ltf(g)
        good += dist_l1(tabulate(f), tabulate(f_star)) <= eps
    assert good >= 0.9 * 25


def test_rfa_majority_11():
    n = 11
    accuracy = default_accuracy(0.24, n)
    target = tabulate(majority(n))
    good = 0
    for seed in range(20):
        oracle = RFAOracle(majority(n), seed=seed)
        result = learn_rfa(oracle, n, accuracy, delta=0.1, seed=seed)
        assert result.samples_consumed == oracle.queries
        good += dist_l1(target, tabulate(result.hypothesis)) <= 0.24
    assert good >= 18


def test_structural_utilities():
    rng = np.random.default_rng(17)
    for tau in (0.1, 0.3, 0.5):
        for _ in range(334):
            n = int(rng.integers(1, 60))
            assert check_small_tail(rng.standard_normal(n) * rng.exponential(1.0, size=n) ** 3, tau)

    for _ in range(1000):
        w = rng.standard_normal(int(rng.integers(1, 40)))
        lam = float(rng.choice([-1, 1]) * 10 ** rng.uniform(-3, 3))
        tau = float(rng.uniform(0.05, 0.95))
        assert critical_index(w, tau) == critical_index(w * lam, tau)

    passed = 0
    for k in range(200):
        w = rng.standard_normal(int(rng.integers(20, 60)))
        tau = float(np.abs(w).max() / np.linalg.norm(w))
        a = float(rng.uniform(-2, 2))
        passed += anticoncentration_check(w, tau, a, a + float(rng.uniform(0.1, 2.0)), 100_000, seed=k).passed
    assert passed >= 0.99 * 200


def test_determinism():
    f = random_ltf(10, "gaussian", seed=5)
    first = approx_weights(f, 0.15, mode="estimated", seed=21)[1].metrics_json()
    second = approx_weights(f, 0.15, mode="estimated", seed=21)[1].metrics_json()
    assert first == second

    a = learn_rfa(RFAOracle(majority(7), seed=3), 7, 0.05, seed=3).to_dict()
    b = learn_rfa(RFAOracle(majority(7), seed=3), 7, 0.05, seed=3).to_dict()
    assert a == b

    assert [r.to_dict() for r in probe_pairs(20, 10, 0.05, seed=8)] == \
           [r.to_dict() for r in probe_pairs(20, 10, 0.05, seed=8)]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-m", "slow"]))
