"""
Structural utilities for weight vectors

Regularity, the critical index and the tail decay below it, the
anti-concentration bound for regular forms, and an exact probe of the
relation between Chow distance and dist. All of these are computed and
checked; none of the asymptotic relations are asserted.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

import settings
from chow import chow_distance, chow_exact, dist_l1
from func_core import (
    LTF,
    STREAM_ANTICONCENTRATION,
    STREAM_PROBE,
    DimensionMismatchError,
    ParameterError,
    TruthTable,
    check_cap,
    check_seed,
    derive_rng,
    derive_seed,
    random_ltf,
    tabulate,
    uniform_cube_sample,
)

logger = logging.getLogger(__name__)

# Relative slack on the "<=" comparisons, so exact boundary cases like
# (3, 4) with tau = 0.8 survive float rounding.
REL_TOL = 1e-12
ENVELOPE_TOL = 1e-9
ANTICONCENTRATION_CONFIDENCE = 0.01


def _at_most(a, b):
    return a <= b * (1.0 + REL_TOL)


def _weight_array(w) -> np.ndarray:
    arr = np.asarray(w, dtype=float).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ParameterError("weight vector must be non-empty and finite")
    if not np.any(arr):
        raise ParameterError("weight vector must not be all zero")
    return arr


def _check_tau(tau: float) -> float:
    if not (isinstance(tau, (int, float)) and math.isfinite(tau) and tau > 0):
        raise ParameterError(f"tau must be a positive real, got {tau!r}")
    return float(tau)


# ============================================================================
# SORTED WEIGHTS
# ============================================================================

@dataclass(frozen=True, eq=False)
class SortedWeights:
    """
    Nonzero weights by decreasing magnitude.

    order[k] is the original 0-based index of w[k]; zeros lists the indices
    removed before sorting. sigma[k] = sqrt(sum_{j >= k} w[j]^2).
    """
    w: np.ndarray
    order: np.ndarray
    zeros: np.ndarray
    sigma: np.ndarray

    @property
    def size(self) -> int:
        return int(self.w.shape[0])


def sort_weights(w) -> SortedWeights:
    arr = _weight_array(w)
    nonzero = np.flatnonzero(arr)
    zeros = np.flatnonzero(arr == 0)
    # stable sort keeps ties in original index order
    order = nonzero[np.argsort(-np.abs(arr[nonzero]), kind="stable")]
    sorted_w = arr[order]
    sigma = np.sqrt(np.cumsum((sorted_w ** 2)[::-1])[::-1])
    for a in (sorted_w, order, zeros, sigma):
        a.setflags(write=False)
    return SortedWeights(w=sorted_w, order=order, zeros=zeros, sigma=sigma)


# ============================================================================
# REGULARITY AND CRITICAL INDEX
# ============================================================================

def is_tau_regular(w, tau: float) -> bool:
    """max_i |w_i| <= tau * ||w||."""
    arr = _weight_array(w)
    tau = _check_tau(tau)
    return bool(_at_most(np.abs(arr).max(), tau * np.linalg.norm(arr)))


def critical_index(w, tau: float) -> Union[int, float]:
    """
    Smallest 1-based position k of the sorted nonzero weights with
    |w_k| <= tau * sigma_k, or math.inf if there is none.
    """
    tau = _check_tau(tau)
    sw = sort_weights(w)
    hits = np.flatnonzero(_at_most(np.abs(sw.w), tau * sw.sigma))
    return int(hits[0]) + 1 if hits.size else math.inf


def check_small_tail(w, tau: float) -> bool:
    """sigma_a < (1 - tau^2)^((a-1)/2) * sigma_1 for every 1 < a <= min(c, n')."""
    tau = _check_tau(tau)
    sw = sort_weights(w)
    c = critical_index(w, tau)
    upper = sw.size if c == math.inf else min(int(c), sw.size)
    if upper < 2:
        return True
    a = np.arange(2, upper + 1)
    decay = max(1.0 - tau * tau, 0.0) ** ((a - 1) / 2.0)
    holds = sw.sigma[a - 1] < decay * sw.sigma[0]
    if not np.all(holds):
        logger.error("tail decay fails at a=%d for tau=%g", int(a[np.argmin(holds)]), tau)
        return False
    return True


# ============================================================================
# ANTI-CONCENTRATION
# ============================================================================

@dataclass(frozen=True)
class AnticoncentrationResult:
    empirical_prob: float
    bound: float
    slack: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.empirical_prob <= self.bound + self.slack


def anticoncentration_check(w, tau: float, a: float, b: float, m: int, seed: int) -> AnticoncentrationResult:
    """
    Fraction of m seeded uniform x with w·x in (a, b], against the bound
    |b - a| / ||w|| + 2 tau. The pass flag allows the Hoeffding slack
    3 * sqrt(ln(2 / 0.01) / (2m)).
    """
    arr = _weight_array(w)
    tau = _check_tau(tau)
    check_seed(seed)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ParameterError("interval endpoints must be finite")
    if a > b:
        raise ParameterError(f"interval ({a}, {b}] has a > b")
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ParameterError(f"sample count must be a positive integer, got {m!r}")
    if not is_tau_regular(arr, tau):
        raise ParameterError(f"weight vector is not {tau}-regular")

    m = int(m)
    n = arr.shape[0]
    hits = 0
    done = 0
    batch = 0
    step = settings.batch_size()
    while done < m:
        size = min(step, m - done)
        X = uniform_cube_sample(derive_rng(seed, STREAM_ANTICONCENTRATION, batch), size, n)
        s = X.astype(float) @ arr
        hits += int(np.count_nonzero((s > a) & (s <= b)))
        done += size
        batch += 1

    bound = abs(b - a) / float(np.linalg.norm(arr)) + 2.0 * tau
    slack = 3.0 * math.sqrt(math.log(2.0 / ANTICONCENTRATION_CONFIDENCE) / (2.0 * m))
    result = AnticoncentrationResult(empirical_prob=hits / m, bound=bound, slack=slack, samples=m)
    logger.debug("anti-concentration: p=%.5f bound=%.5f passed=%s", result.empirical_prob, bound, result.passed)
    return result


# ============================================================================
# CHOW DISTANCE VS DIST
# ============================================================================

def dchow_vs_dist_probe(f: LTF, g: TruthTable) -> Tuple[float, float]:
    """Exact (chow_distance(chi_f, chi_g), dist(f, g)) by enumeration."""
    if f.n != g.n:
        raise DimensionMismatchError(f"f has n={f.n}, g has n={g.n}")
    check_cap(f.n)
    f_table = tabulate(f)
    return chow_distance(chow_exact(f_table), chow_exact(g)), dist_l1(f_table, g)


@dataclass(frozen=True)
class ProbeRow:
    pair: int
    n: int
    flip_rate: float
    flipped: int
    dchow: float
    dist: float

    @property
    def envelope_ok(self) -> bool:
        return self.dchow <= 2.0 * math.sqrt(self.dist) + ENVELOPE_TOL

    def to_dict(self):
        return {
            "pair": self.pair,
            "n": self.n,
            "flip_rate": self.flip_rate,
            "flipped": self.flipped,
            "dchow": self.dchow,
            "dist": self.dist,
            "envelope_ok": self.envelope_ok,
        }


def flip_entries(table: TruthTable, count: int, rng: np.random.Generator) -> TruthTable:
    """table with exactly `count` distinct entries negated."""
    size = table.values.shape[0]
    if not 0 <= count <= size:
        raise ParameterError(f"cannot flip {count} of {size} entries")
    values = table.values.copy()
    picks = rng.choice(size, size=count, replace=False)
    values[picks] = -values[picks]
    return TruthTable(table.n, values)


def probe_pairs(k: int, n: int, flip_rate: float, seed: int) -> List[ProbeRow]:
    """
    k random pairs (f, g): f a Gaussian LTF, g = f with round(flip_rate * 2^n)
    entries flipped. Pair p uses derive_rng(seed, STREAM_PROBE, p).
    """
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ParameterError(f"pair count must be a positive integer, got {k!r}")
    if not 0 <= flip_rate <= 1:
        raise ParameterError(f"flip rate must be in [0, 1], got {flip_rate!r}")
    check_cap(n)
    check_seed(seed)

    rows = []
    for p in range(int(k)):
        f = random_ltf(n, "gaussian", derive_seed(seed, STREAM_PROBE, p, 0))
        count = int(round(flip_rate * 2 ** n))
        g = flip_entries(tabulate(f), count, derive_rng(seed, STREAM_PROBE, p, 1))
        dchow, dist = dchow_vs_dist_probe(f, g)
        rows.append(ProbeRow(pair=p, n=n, flip_rate=float(flip_rate), flipped=count, dchow=dchow, dist=dist))

    worst = max(r.dchow / (2.0 * math.sqrt(r.dist)) if r.dist > 0 else 0.0 for r in rows)
    logger.info("probe: %d pairs, n=%d, flip_rate=%g, largest dchow / (2 sqrt(dist)) = %.4f",
                len(rows), n, flip_rate, worst)
    return rows
