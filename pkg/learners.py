"""
Learning pipelines

learn_rfa       learns an LTF when every example shows only one chosen
                coordinate x_i together with the label f(x).
learn_agnostic  learns from full uniform examples whose labels may be
                flipped with probability eta.

Both estimate a Chow vector alpha with ||alpha - chi_f|| <= accuracy (with
probability >= 1 - delta), run chow_reconstruct on alpha with eps = accuracy
and turn the resulting LBF into an integer-weight LTF.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

import settings
from chow import ChowVector, EstimatorConfig, chow_distance, chow_estimate, chow_exact, hoeffding_samples
from func_core import (
    LBF,
    LTF,
    STREAM_RFA,
    AlgorithmError,
    DimensionMismatchError,
    ExactSource,
    ParameterError,
    SamplingOracle,
    check_seed,
    derive_rng,
    evaluate_points,
    lbf_to_ltf,
    require_exact,
    uniform_cube_sample,
)
from reconstruct import ReconstructParams, ReconstructTrace, chow_reconstruct

logger = logging.getLogger(__name__)


# ============================================================================
# ORACLES
# ============================================================================

class RFAOracle:
    """
    Hidden target f. A query names an index i and gets back (x_i, f(x)) for
    a fresh uniform x; the rest of x is never returned.
    """

    def __init__(self, target: ExactSource, seed: int):
        self._target = require_exact(target)
        self.n = target.n
        self.seed = check_seed(seed)
        self.queries = 0
        self._calls = 0

    def _check_index(self, i: int) -> int:
        if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 1 <= i <= self.n:
            raise ParameterError(f"query index must be in 1..{self.n}, got {i!r}")
        return int(i)

    def query_batch(self, i: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
        """m queries at index i: (bits x_i, labels f(x)), both ±1 arrays."""
        i = self._check_index(i)
        if m < 0:
            raise ParameterError(f"cannot make {m} queries")
        rng = derive_rng(self.seed, STREAM_RFA, self._calls)
        self._calls += 1
        X = uniform_cube_sample(rng, m, self.n)
        labels = evaluate_points(self._target, X)
        self.queries += m
        return X[:, i - 1].astype(float), labels

    def query(self, i: int) -> Tuple[int, int]:
        bits, labels = self.query_batch(i, 1)
        return int(bits[0]), int(labels[0])


def rfa_query(oracle: RFAOracle, i: int) -> Tuple[int, int]:
    return oracle.query(i)


class ExampleOracle(SamplingOracle):
    """Uniform examples whose labels are flipped independently with probability eta."""

    def __init__(self, target: ExactSource, seed: int, eta: float = 0.0):
        if not (isinstance(eta, (int, float)) and 0 <= eta < 0.5):
            raise ParameterError(f"label noise eta must be in [0, 0.5), got {eta!r}")
        super().__init__(target, seed)
        self.eta = float(eta)

    def _labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        labels = super()._labels(X, rng)
        if self.eta > 0:
            flips = rng.random(labels.shape[0]) < self.eta
            labels = np.where(flips, -labels, labels)
        return labels


def noisy_chow_vector(f: ExactSource, eta: float) -> ChowVector:
    """Exact Chow vector of the eta-noisy labels: (1 - 2 eta) chi_f."""
    if not 0 <= eta < 0.5:
        raise ParameterError(f"label noise eta must be in [0, 0.5), got {eta!r}")
    chi = chow_exact(f)
    return ChowVector(chi.n, (1.0 - 2.0 * eta) * chi.values)


# ============================================================================
# RESULTS
# ============================================================================

@dataclass
class LearnResult:
    hypothesis: LTF
    chow_accuracy_used: float
    samples_consumed: int
    trace: ReconstructTrace
    alpha: ChowVector
    lbf: LBF
    degenerate: bool = False
    dchow_lbf: Optional[float] = None
    dchow_hypothesis: Optional[float] = None
    target_eps: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hypothesis": self.hypothesis.to_dict(),
            "chow_accuracy_used": self.chow_accuracy_used,
            "samples_consumed": self.samples_consumed,
            "alpha": self.alpha.to_dict(),
            "lbf": self.lbf.to_dict(),
            "degenerate": self.degenerate,
            "dchow_lbf": self.dchow_lbf,
            "dchow_hypothesis": self.dchow_hypothesis,
            "target_eps": self.target_eps,
            "trace": self.trace.to_dict(),
        }


def default_accuracy(eps: float, weight_bound: Optional[int] = None) -> float:
    """eps / (12 W) when a weight bound W is known, else eps."""
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps!r}")
    if weight_bound is None:
        return float(eps)
    if weight_bound < 1:
        raise ParameterError(f"weight bound must be >= 1, got {weight_bound!r}")
    return eps / (12.0 * weight_bound)


def _check_learn_params(accuracy: float, delta: float) -> None:
    if not (isinstance(accuracy, (int, float)) and math.isfinite(accuracy) and accuracy > 0):
        raise ParameterError(f"accuracy must be a positive real, got {accuracy!r}")
    if not 0 < delta < 1:
        raise ParameterError(f"delta must be in (0,1), got {delta!r}")


def _default_mode(n: int, chow_mode: Optional[str]) -> str:
    if chow_mode is not None:
        return chow_mode
    return "exact" if n <= settings.enumeration_cap() else "estimated"


def _finish(alpha: ChowVector, accuracy: float, delta: float, seed: int, chow_mode: str,
            max_iters: Optional[int], samples: int) -> LearnResult:
    params = ReconstructParams(eps=accuracy, delta=delta, chow_mode=chow_mode, max_iters=max_iters, seed=seed)
    g, trace = chow_reconstruct(alpha, params)
    trace.raise_for_status()
    hypothesis, degenerate = lbf_to_ltf(g)
    result = LearnResult(hypothesis=hypothesis, chow_accuracy_used=accuracy, samples_consumed=samples,
                         trace=trace, alpha=alpha, lbf=g, degenerate=degenerate)
    if chow_mode == "exact":
        result.dchow_lbf = chow_distance(alpha, chow_exact(g))
        result.dchow_hypothesis = chow_distance(alpha, chow_exact(hypothesis))
    return result


# ============================================================================
# LEARNERS
# ============================================================================

def learn_rfa(oracle: RFAOracle, n: int, accuracy: float, delta: float = 0.1, seed: int = 0,
              chow_mode: Optional[str] = None, max_iters: Optional[int] = None) -> LearnResult:
    """
    Every index gets the same m = ceil((2(n+1)/accuracy^2) ln(2(n+1)/delta))
    queries. f^(i) is the mean of label * bit at index i; f^(0) is the mean of
    the labels of the index-1 queries.
    """
    if oracle.n != n:
        raise DimensionMismatchError(f"oracle has n={oracle.n}, expected {n}")
    _check_learn_params(accuracy, delta)
    check_seed(seed)
    m = hoeffding_samples(accuracy / math.sqrt(n + 1), delta, n + 1)
    start = oracle.queries
    logger.info("learn_rfa: n=%d accuracy=%g delta=%g, %d queries per index", n, accuracy, delta, m)

    sums = np.zeros(n + 1)
    step = settings.batch_size()
    for i in range(1, n + 1):
        done = 0
        while done < m:
            size = min(step, m - done)
            bits, labels = oracle.query_batch(i, size)
            sums[i] += float(bits @ labels)
            if i == 1:
                sums[0] += float(labels.sum())
            done += size
    alpha = ChowVector(n, sums / m)
    samples = oracle.queries - start
    if samples != n * m:
        raise AlgorithmError(f"oracle answered {samples} queries, expected {n * m}")

    result = _finish(alpha, accuracy, delta, seed, _default_mode(n, chow_mode), max_iters, samples)
    logger.info("learn_rfa: %d queries, %d reconstruction steps", samples, result.trace.iterations)
    return result


def learn_agnostic(oracle: SamplingOracle, n: int, eps: float, delta: float = 0.1,
                   accuracy: Optional[float] = None, seed: int = 0,
                   chow_mode: Optional[str] = None, max_iters: Optional[int] = None) -> LearnResult:
    """
    Estimates all n+1 coefficients from one shared sample of full examples,
    each to accuracy / sqrt(n+1), so ||alpha - chi|| <= accuracy w.p. >= 1 - delta.

    eps is the error the caller is aiming for. It only sets the default
    accuracy (eps itself) and is recorded as result.target_eps; the
    reconstruction always runs at eps = accuracy.
    """
    if oracle.n != n:
        raise DimensionMismatchError(f"oracle has n={oracle.n}, expected {n}")
    if accuracy is None:
        accuracy = default_accuracy(eps)
    _check_learn_params(accuracy, delta)
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps!r}")
    check_seed(seed)
    start = oracle.examples_drawn
    cfg = EstimatorConfig(t=accuracy / math.sqrt(n + 1), delta=delta, seed=seed)
    alpha = chow_estimate(oracle, n, cfg)
    samples = oracle.examples_drawn - start
    logger.info("learn_agnostic: n=%d accuracy=%g, %d examples", n, accuracy, samples)
    result = _finish(alpha, accuracy, delta, seed, _default_mode(n, chow_mode), max_iters, samples)
    result.target_eps = float(eps)
    return result
