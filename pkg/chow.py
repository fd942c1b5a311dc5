"""
Chow parameters and distances

The Chow vector of f is (E[f], E[f x_1], ..., E[f x_n]) under the uniform
distribution. chow_exact enumerates the cube; chow_estimate averages
f(x) x_i over one shared seeded sample, sized by Hoeffding's inequality for
values in [-1, 1] with a union bound over the n+1 coordinates.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

import settings
from func_core import (
    STREAM_CHOW,
    STREAM_DIST,
    STREAM_PERTURB,
    DimensionMismatchError,
    ExactSource,
    FunctionSource,
    ParameterError,
    SamplingOracle,
    TruthTable,
    _check_keys,
    _json_int,
    _json_list,
    _json_real,
    check_dimension,
    check_seed,
    derive_rng,
    evaluate_points,
    is_exact,
    require_exact,
    tabulate,
    uniform_cube_sample,
)

logger = logging.getLogger(__name__)


# ============================================================================
# TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class ChowVector:
    """values[0] = f^(0), values[i] = f^(i)."""
    n: int
    values: np.ndarray

    def __post_init__(self):
        n = check_dimension(self.n)
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != n + 1:
            raise DimensionMismatchError(f"Chow vector has {values.shape[0]} entries, expected {n + 1}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("Chow vector entries must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "ChowVector":
        values = np.asarray(values, dtype=float).reshape(-1)
        return cls(n=values.shape[0] - 1, values=values)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "values": [float(v) for v in self.values]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChowVector":
        _check_keys(data, ("n", "values"), "ChowVector")
        values = [_json_real(v, "values[]") for v in _json_list(data["values"], "values")]
        return cls(n=_json_int(data["n"], "n"), values=values)


def hoeffding_samples(t: float, delta: float, quantities: int = 1) -> int:
    """
    Samples so that `quantities` means of [-1,1]-valued variables are all
    within t of their expectations with probability >= 1 - delta.
    """
    if not t > 0 or not 0 < delta < 1:
        raise ParameterError(f"need t > 0 and 0 < delta < 1, got t={t}, delta={delta}")
    return math.ceil((2.0 / t ** 2) * math.log(2.0 * quantities / delta))


@dataclass(frozen=True)
class EstimatorConfig:
    t: float
    delta: float
    seed: int = 0
    batch_size: int = field(default_factory=settings.batch_size)
    samples: Optional[int] = None
    workers: int = field(default_factory=settings.workers)

    def __post_init__(self):
        if not (isinstance(self.t, (int, float)) and math.isfinite(self.t) and self.t > 0):
            raise ParameterError(f"accuracy t must be a positive real, got {self.t!r}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"failure probability delta must be in (0,1), got {self.delta!r}")
        check_seed(self.seed)
        if self.batch_size < 1:
            raise ParameterError(f"batch size must be positive, got {self.batch_size}")
        if self.samples is not None and self.samples < 1:
            raise ParameterError(f"explicit sample count must be positive, got {self.samples}")
        if self.workers < 1:
            raise ParameterError(f"workers must be positive, got {self.workers}")

    def sample_count(self, quantities: int) -> int:
        if self.samples is not None:
            return self.samples
        return hoeffding_samples(self.t, self.delta, quantities)


# ============================================================================
# EXACT
# ============================================================================

def chow_of_table(table: TruthTable) -> ChowVector:
    n = table.n
    size = 2 ** n
    values = table.values
    out = np.empty(n + 1)
    out[0] = values.sum() / size
    for i in range(1, n + 1):
        halves = values.reshape(2 ** (i - 1), 2, 2 ** (n - i)).sum(axis=(0, 2))
        out[i] = (halves[1] - halves[0]) / size
    return ChowVector(n, out)


def chow_exact(f: ExactSource, n: Optional[int] = None) -> ChowVector:
    return chow_of_table(tabulate(f, n))


# ============================================================================
# SAMPLED
# ============================================================================

def _batch_sizes(m: int, batch_size: int):
    full, rest = divmod(m, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _sum_in_order(parts):
    total = None
    for part in parts:
        total = part if total is None else total + part
    return total


def _exact_batch_sums(source: ExactSource, n: int, seed: int, stream: int, index: int, size: int,
                      partner: Optional[ExactSource] = None) -> np.ndarray:
    rng = derive_rng(seed, stream, index)
    X = uniform_cube_sample(rng, size, n)
    y = evaluate_points(source, X)
    if partner is not None:
        return np.array([np.abs(y - evaluate_points(partner, X)).sum()])
    return np.concatenate(([y.sum()], y @ X))


def _run_batches(fn, sizes, workers: int):
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, range(len(sizes)), sizes))
    else:
        parts = [fn(b, size) for b, size in enumerate(sizes)]
    return _sum_in_order(parts)


def chow_estimate(f: FunctionSource, n: int, cfg: EstimatorConfig) -> ChowVector:
    """
    Empirical Chow vector from one shared sample. Exact sources are sampled
    with derive_rng(seed, STREAM_CHOW, batch); an oracle supplies its own
    examples. Estimates are left unclipped.
    """
    if f.n != n:
        raise DimensionMismatchError(f"source has n={f.n}, expected {n}")
    m = cfg.sample_count(n + 1)
    sizes = _batch_sizes(m, cfg.batch_size)
    logger.debug("estimating Chow vector: n=%d, m=%d, batches=%d", n, m, len(sizes))

    if isinstance(f, SamplingOracle):
        def oracle_batch(_, size):
            X, y = f.draw(size)
            return np.concatenate(([y.sum()], y @ X))
        totals = _run_batches(oracle_batch, sizes, 1)
    else:
        require_exact(f)
        totals = _run_batches(
            lambda b, size: _exact_batch_sums(f, n, cfg.seed, STREAM_CHOW, b, size),
            sizes, cfg.workers,
        )
    return ChowVector(n, totals / m)


# ============================================================================
# DISTANCES
# ============================================================================

def _chow_values(a: Union[ChowVector, Sequence[float]]) -> np.ndarray:
    return a.values if isinstance(a, ChowVector) else np.asarray(a, dtype=float)


def chow_distance(a: Union[ChowVector, Sequence[float]], b: Union[ChowVector, Sequence[float]]) -> float:
    va, vb = _chow_values(a), _chow_values(b)
    if va.shape != vb.shape:
        raise DimensionMismatchError(f"Chow vectors have lengths {va.shape[0]} and {vb.shape[0]}")
    return float(np.linalg.norm(va - vb))


def dist_l1(f: TruthTable, g: TruthTable) -> float:
    """E|f(x) - g(x)|; twice the disagreement rate for Boolean tables."""
    if f.n != g.n:
        raise DimensionMismatchError(f"tables have n={f.n} and n={g.n}")
    return float(np.abs(f.values - g.values).mean())


def dist_estimate(f: FunctionSource, g: FunctionSource, n: int, cfg: EstimatorConfig) -> float:
    """Empirical E|f(x) - g(x)|; at most one of f, g may be an oracle."""
    if f.n != n or g.n != n:
        raise DimensionMismatchError(f"sources have n={f.n} and n={g.n}, expected {n}")
    if not is_exact(f) and not is_exact(g):
        raise ParameterError("dist_estimate needs at least one exact source")
    if not is_exact(f):
        f, g = g, f
    m = cfg.sample_count(1)
    sizes = _batch_sizes(m, cfg.batch_size)

    if isinstance(g, SamplingOracle):
        def oracle_batch(_, size):
            X, y = g.draw(size)
            return np.array([np.abs(evaluate_points(f, X) - y).sum()])
        total = _run_batches(oracle_batch, sizes, 1)
    else:
        total = _run_batches(
            lambda b, size: _exact_batch_sums(f, n, cfg.seed, STREAM_DIST, b, size, partner=g),
            sizes, cfg.workers,
        )
    return float(total[0] / m)


def perturb(alpha: ChowVector, radius: float, seed: int) -> ChowVector:
    """alpha plus a seeded uniformly random direction of length `radius`."""
    if radius < 0:
        raise ParameterError(f"perturbation radius must be >= 0, got {radius}")
    direction = derive_rng(seed, STREAM_PERTURB).standard_normal(alpha.n + 1)
    direction /= np.linalg.norm(direction)
    return ChowVector(alpha.n, alpha.values + radius * direction)
