"""
Tests for the function representations in func_core.py.

Run with: pytest test_func_core.py -v
      or: python test_func_core.py
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

from chow import dist_l1
from func_core import (
    LBF,
    LBF_MAGNITUDE_LIMIT,
    LTF,
    CapExceededError,
    DimensionMismatchError,
    ParameterError,
    SamplingOracle,
    SchemaError,
    TruthTable,
    constant,
    cube_points,
    dictator,
    eval_lbf,
    eval_ltf,
    function_source_from_dict,
    lbf_to_ltf,
    majority,
    parity_table,
    project_p1,
    random_ltf,
    tabulate,
)


# ============================================================================
# EVALUATION
# ============================================================================

def test_eval_ltf_dictator():
    f = LTF.from_weights([1.0])
    assert eval_ltf(f, [1]) == 1
    assert eval_ltf(f, [-1]) == -1


def test_eval_ltf_zero_argument_is_positive():
    f = LTF.from_weights([1.0, 1.0], threshold=2.0)
    assert eval_ltf(f, [1, 1]) == 1


def test_eval_ltf_rejects_bad_points():
    f = majority(3)
    with pytest.raises(DimensionMismatchError):
        eval_ltf(f, [1, 1])
    with pytest.raises(ParameterError):
        eval_ltf(f, [1, 0, 1])


def test_project_p1_examples():
    assert project_p1(0.5) == 0.5
    assert project_p1(3) == 1.0
    assert project_p1(-2) == -1.0
    with pytest.raises(ParameterError):
        project_p1(float("nan"))


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_project_p1_bounded_and_lipschitz(a, b):
    pa, pb = project_p1(a), project_p1(b)
    assert abs(pa) <= 1.0
    assert abs(pa - pb) <= abs(a - b) + 1e-12
    if abs(a) <= 1:
        assert pa == a


def test_eval_lbf_examples():
    assert eval_lbf(LBF(1, 0.5, np.array([0, 1])), [1]) == 0.5
    assert eval_lbf(LBF(1, 1.0, np.array([0, 2])), [1]) == 1.0
    assert eval_lbf(LBF(1, 1.0, np.array([0, 0])), [-1]) == 0.0


def test_lbf_rejects_fractional_vector():
    with pytest.raises(ParameterError):
        LBF(1, 0.5, np.array([0.0, 0.5]))


def test_lbf_rejects_vectors_past_int64():
    with pytest.raises(ParameterError):
        LBF(2, 1.0, [0, 2 ** 62, 2 ** 62])
    with pytest.raises(ParameterError):
        LBF(1, 0.5, [0, 2 ** 70])
    with pytest.raises(ParameterError):
        LBF.from_dict({"n": 1, "kappa": 0.5, "v": [0, -2 ** 70]})


def test_lbf_largest_vector_tabulates_exactly():
    g = LBF(2, 1.0, [0, 2 ** 62, LBF_MAGNITUDE_LIMIT - 2 ** 62])
    table = tabulate(g)
    assert list(table.values) == [-1.0, -1.0, 1.0, 1.0]
    for k, x in enumerate(cube_points(2)):
        assert table.values[k] == eval_lbf(g, x)


# ============================================================================
# TABULATE
# ============================================================================

def test_tabulate_examples():
    assert list(tabulate(dictator(1)).values) == [-1.0, 1.0]
    assert list(tabulate(LBF(1, 0.5, np.array([0, 1]))).values) == [-0.5, 0.5]
    assert list(tabulate(LTF.from_weights([1.0, 1.0], threshold=2.0)).values) == [-1.0, -1.0, -1.0, 1.0]


def test_tabulate_matches_pointwise_evaluation():
    """Every path resolves ties the same way, including exact zeros."""
    for n in (1, 4, 7, 10):
        points = cube_points(n)
        for seed in range(3):
            f = random_ltf(n, "integer", seed, W=n + 3, signed=True)
            g = LBF(n, 0.3, np.concatenate(([seed - 1], f.weights.astype(np.int64))))
            f_table, g_table = tabulate(f), tabulate(g)
            for k in range(0, 2 ** n, max(1, 2 ** n // 64)):
                assert f_table.at(points[k]) == eval_ltf(f, points[k])
                assert g_table.at(points[k]) == eval_lbf(g, points[k])


def test_tabulate_cap(monkeypatch):
    monkeypatch.setenv("CHOWLAB_CAP", "4")
    with pytest.raises(CapExceededError):
        tabulate(majority(5))


def test_tabulate_rejects_oracle():
    with pytest.raises(ParameterError):
        tabulate(SamplingOracle(majority(3), seed=1))


def test_parity_table_is_xor():
    assert list(parity_table(2).values) == [-1.0, 1.0, 1.0, -1.0]


# ============================================================================
# LBF -> LTF
# ============================================================================

def test_lbf_to_ltf_dictator():
    f_star, degenerate = lbf_to_ltf(LBF(1, 0.5, np.array([0, 1])))
    assert not degenerate
    assert list(f_star.weights) == [1.0]
    assert f_star.threshold == 0.0
    assert np.array_equal(tabulate(f_star).values, tabulate(dictator(1)).values)


def test_lbf_to_ltf_and():
    f_star, _ = lbf_to_ltf(LBF(2, 1.0, np.array([-2, 1, 1])))
    assert list(tabulate(f_star).values) == [-1.0, -1.0, -1.0, 1.0]


def test_lbf_to_ltf_degenerate():
    f_star, degenerate = lbf_to_ltf(LBF(1, 1.0, np.array([0, 0])))
    assert degenerate
    assert list(tabulate(f_star).values) == [1.0, 1.0]


def test_lbf_to_ltf_matches_kappa_scaled_weights():
    g = LBF(1, 0.5, np.array([0, 1]))
    f_star, _ = lbf_to_ltf(g)
    scaled = LTF.from_weights([0.5], threshold=0.0)
    assert np.array_equal(tabulate(f_star).values, tabulate(scaled).values)


@given(
    n=st.integers(1, 8),
    seed=st.integers(0, 2 ** 32),
    kappa=st.sampled_from([1.0, 0.5, 0.25, 0.125, 2.0 ** -10]),
)
@hyp_settings(max_examples=60, deadline=None)
def test_lbf_to_ltf_same_table_as_kappa_scaled_ltf(n, seed, kappa):
    g = LBF(n, kappa, np.random.default_rng(seed).integers(-4, 5, size=n + 1))
    f_star, _ = lbf_to_ltf(g)
    scaled = LTF(n, kappa * g.v[1:].astype(float), threshold=-kappa * float(g.v[0]))
    assert np.array_equal(tabulate(f_star).values, tabulate(scaled).values)

@given(
    n=st.integers(1, 8),
    seed=st.integers(0, 2 ** 32),
    kappa=st.floats(0.01, 2.0),
)
@hyp_settings(max_examples=60, deadline=None)
def test_lbf_to_ltf_at_most_doubles_dist(n, seed, kappa):
    rng = np.random.default_rng(seed)
    f = TruthTable(n, rng.choice([-1.0, 1.0], size=2 ** n))
    g = LBF(n, kappa, rng.integers(-4, 5, size=n + 1))
    f_star, _ = lbf_to_ltf(g)
    assert dist_l1(f, tabulate(f_star)) <= 2 * dist_l1(f, tabulate(g)) + 1e-12


# ============================================================================
# NAMED FUNCTIONS AND INSTANCES
# ============================================================================

def test_constant_functions():
    assert set(tabulate(constant(3, 1)).values) == {1.0}
    assert set(tabulate(constant(3, -1)).values) == {-1.0}


def test_random_ltf_integer_all_ones_is_majority():
    f = random_ltf(5, "integer", seed=9, W=5)
    assert np.array_equal(tabulate(f).values, tabulate(majority(5)).values)


def test_random_ltf_integer_weight_sum():
    for seed in range(10):
        f = random_ltf(7, "integer", seed=seed, W=15, signed=True)
        assert np.abs(f.weights).sum() == 15
        assert np.all(f.weights == np.round(f.weights))


def test_random_ltf_deterministic():
    a = random_ltf(8, "gaussian", seed=42)
    b = random_ltf(8, "gaussian", seed=42)
    assert np.array_equal(a.weights, b.weights)


def test_random_ltf_bad_parameters():
    with pytest.raises(ParameterError):
        random_ltf(5, "integer", seed=0, W=4)
    with pytest.raises(ParameterError):
        random_ltf(5, "cauchy", seed=0)


# ============================================================================
# JSON
# ============================================================================

def test_json_round_trip_and_strictness():
    f = LTF.from_weights([1.5, -2.0], threshold=0.25)
    back = function_source_from_dict(f.to_dict())
    assert isinstance(back, LTF)
    assert np.array_equal(back.weights, f.weights) and back.threshold == f.threshold

    g = function_source_from_dict({"n": 1, "kappa": 0.5, "v": [0, 1]})
    assert isinstance(g, LBF)

    with pytest.raises(SchemaError):
        LTF.from_dict({"n": 1, "weights": [1.0], "theta": 0.0, "bias": 1})
    with pytest.raises(SchemaError):
        LBF.from_dict({"n": 1, "kappa": 0.5, "v": [0, 1.5]})
    with pytest.raises(SchemaError):
        function_source_from_dict({"n": 1})


def test_oracle_replays_with_same_seed():
    a = SamplingOracle(majority(5), seed=3)
    b = SamplingOracle(majority(5), seed=3)
    Xa, ya = a.draw(100)
    Xb, yb = b.draw(100)
    assert np.array_equal(Xa, Xb) and np.array_equal(ya, yb)
    assert a.examples_drawn == 100
    assert math.isclose(float(np.abs(ya).mean()), 1.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
