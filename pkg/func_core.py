"""
Functions on the Boolean cube

Canonical representations used everywhere in chowlab:

    LTF         sign(w·x - theta), with sign(0) = +1
    LBF         P1(kappa * (v0 + sum v_i x_i)) with an exact integer vector v
    TruthTable  dense table of 2^n values in [-1, 1]
    SamplingOracle
                seeded source of labeled uniform examples (x, f(x))

Table order is fixed: index k encodes x with coordinate x_1 as the most
significant bit, bit 0 -> -1 and bit 1 -> +1. Every evaluation path in this
module (single point, batch of points, full table) accumulates w_i * x_i
left to right, so ties at exactly zero resolve identically everywhere.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

import settings

logger = logging.getLogger(__name__)


# ============================================================================
# ERRORS
# ============================================================================

class ChowLabError(Exception):
    """Root of every error raised by chowlab."""


class ParameterError(ChowLabError, ValueError):
    """Bad input: invalid parameter, wrong dimension, malformed JSON."""


class DimensionMismatchError(ParameterError):
    pass


class CapExceededError(ParameterError):
    pass


class SchemaError(ParameterError):
    pass


class AlgorithmError(ChowLabError, RuntimeError):
    """The inputs were valid but the computation could not finish."""


class NumericalError(AlgorithmError):
    pass


# ============================================================================
# SEEDED RANDOMNESS
# ============================================================================

# Stream tags for derive_rng. Changing a value changes every seeded result.
STREAM_CHOW = 1
STREAM_DIST = 2
STREAM_EXAMPLES = 3
STREAM_RFA = 4
STREAM_ANTICONCENTRATION = 5
STREAM_INSTANCES = 6
STREAM_PROBE = 7
STREAM_PERTURB = 8
STREAM_RECONSTRUCT = 9

SEED_MAX = (1 << 64) - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= SEED_MAX:
        raise ParameterError(f"seed must fit in 64 unsigned bits, got {seed}")
    return int(seed)


def derive_rng(seed: int, stream: int, *counters: int) -> np.random.Generator:
    """
    Counter-based generator: the stream for (seed, stream, counters...) is
    fixed forever, independent of how many other streams were used before.
    """
    entropy = [check_seed(seed), int(stream)] + [int(c) for c in counters]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, stream: int, *counters: int) -> int:
    """A child 64-bit seed, for handing a fresh stream to another component."""
    entropy = [check_seed(seed), int(stream)] + [int(c) for c in counters]
    lo, hi = np.random.SeedSequence(entropy).generate_state(2, np.uint32)
    return (int(hi) << 32) | int(lo)


def uniform_cube_sample(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """m uniform points of {-1,1}^n as an int8 array of shape (m, n)."""
    raw = rng.integers(0, 256, size=(m, (n + 7) // 8), dtype=np.uint8)
    bits = np.unpackbits(raw, axis=1, count=n)
    return bits.astype(np.int8) * 2 - 1


# ============================================================================
# CUBE HELPERS
# ============================================================================

def check_cap(n: int, cap: Optional[int] = None, what: str = "exact enumeration") -> None:
    limit = settings.enumeration_cap() if cap is None else cap
    if n > limit:
        raise CapExceededError(f"n={n} exceeds the cap of {limit} for {what}")


def check_dimension(n: Any) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"dimension n must be a positive integer, got {n!r}")
    return int(n)


def cube_points(n: int) -> np.ndarray:
    """All 2^n points in table order, int8 array of shape (2^n, n)."""
    check_cap(n)
    idx = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return (bits * 2 - 1).astype(np.int8)


def table_index(X: np.ndarray) -> np.ndarray:
    """Table index of each row of a ±1 point matrix."""
    X = np.atleast_2d(X)
    n = X.shape[1]
    place = np.left_shift(1, np.arange(n - 1, -1, -1, dtype=np.int64))
    return (X > 0).astype(np.int64) @ place


def _check_point(x: Sequence[int], n: int) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise DimensionMismatchError(f"point has shape {arr.shape}, expected ({n},)")
    if not np.all((arr == 1) | (arr == -1)):
        raise ParameterError("point entries must be -1 or +1")
    return arr


def _check_points(X: np.ndarray, n: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X))
    if X.shape[1] != n:
        raise DimensionMismatchError(f"points have {X.shape[1]} columns, expected {n}")
    return X


def _form_table(coefficients: np.ndarray, dtype) -> np.ndarray:
    """sum_i c_i x_i over the cube, accumulated left to right, in table order."""
    form = np.zeros(1, dtype=dtype)
    for c in coefficients:
        step = np.array([-c, c], dtype=dtype)
        form = (form[:, None] + step[None, :]).reshape(-1)
    return form


def _form_points(coefficients: np.ndarray, X: np.ndarray, dtype) -> np.ndarray:
    form = np.zeros(X.shape[0], dtype=dtype)
    for i, c in enumerate(coefficients):
        c = dtype(c)
        form += np.where(X[:, i] > 0, c, -c)
    return form


# ============================================================================
# REPRESENTATIONS
# ============================================================================

def _check_keys(data: Any, required: Iterable[str], kind: str) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise SchemaError(f"{kind} JSON must be an object")
    required = set(required)
    missing = required - set(data)
    unknown = set(data) - required
    if missing:
        raise SchemaError(f"{kind} JSON is missing fields: {sorted(missing)}")
    if unknown:
        raise SchemaError(f"{kind} JSON has unknown fields: {sorted(unknown)}")
    return data


def _json_int(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{field} must be an integer")
    return value


def _json_real(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{field} must be a number")
    return float(value)


def _json_list(value: Any, field: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{field} must be a list")
    return value


@dataclass(frozen=True, eq=False)
class LTF:
    """sign(sum_i w_i x_i - theta) with sign(0) = +1."""
    n: int
    weights: np.ndarray
    threshold: float = 0.0

    def __post_init__(self):
        n = check_dimension(self.n)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != n:
            raise DimensionMismatchError(f"LTF has {w.shape[0]} weights, expected {n}")
        if not np.all(np.isfinite(w)) or not math.isfinite(float(self.threshold)):
            raise ParameterError("LTF weights and threshold must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "threshold", float(self.threshold))

    @classmethod
    def from_weights(cls, weights: Sequence[float], threshold: float = 0.0) -> "LTF":
        weights = list(weights)
        return cls(n=len(weights), weights=weights, threshold=threshold)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "weights": [float(w) for w in self.weights], "theta": self.threshold}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LTF":
        _check_keys(data, ("n", "weights", "theta"), "LTF")
        weights = [_json_real(w, "weights[]") for w in _json_list(data["weights"], "weights")]
        return cls(n=_json_int(data["n"], "n"), weights=weights,
                   threshold=_json_real(data["theta"], "theta"))


# Largest allowed sum of |v_i|, so int64 evaluation of the form cannot wrap.
LBF_MAGNITUDE_LIMIT = (1 << 63) - 1


@dataclass(frozen=True, eq=False)
class LBF:
    """P1(kappa * (v0 + sum_i v_i x_i)); v[0] is the constant term."""
    n: int
    kappa: float
    v: np.ndarray

    def __post_init__(self):
        n = check_dimension(self.n)
        kappa = float(self.kappa)
        if not math.isfinite(kappa) or kappa <= 0:
            raise ParameterError(f"kappa must be a positive real, got {self.kappa!r}")
        try:
            raw = np.asarray(self.v)
        except OverflowError as exc:
            raise ParameterError("LBF vector entries are out of range") from exc
        if raw.ndim != 1 or raw.shape[0] != n + 1:
            raise DimensionMismatchError(f"LBF vector has shape {raw.shape}, expected ({n + 1},)")
        if raw.dtype.kind == "f":
            if not np.all(np.isfinite(raw)) or not np.all(raw == np.round(raw)):
                raise ParameterError("LBF vector entries must be exact integers")
        elif raw.dtype.kind == "O":
            if not all(isinstance(c, (int, np.integer)) and not isinstance(c, bool) for c in raw):
                raise ParameterError("LBF vector entries must be exact integers")
        elif raw.dtype.kind not in "iu":
            raise ParameterError("LBF vector entries must be exact integers")
        entries = [int(c) for c in raw]
        # every partial sum of the affine form must fit in int64
        if sum(abs(c) for c in entries) > LBF_MAGNITUDE_LIMIT:
            raise ParameterError(f"LBF vector is too large: sum of |v_i| must not exceed {LBF_MAGNITUDE_LIMIT}")
        v = np.array(entries, dtype=np.int64)
        v.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "v", v)

    @classmethod
    def zero(cls, n: int, kappa: float) -> "LBF":
        return cls(n=n, kappa=kappa, v=np.zeros(n + 1, dtype=np.int64))

    @property
    def weights(self) -> np.ndarray:
        """The real weight vector kappa * v, constant term first."""
        return self.kappa * self.v.astype(float)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "kappa": self.kappa, "v": [int(c) for c in self.v]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LBF":
        _check_keys(data, ("n", "kappa", "v"), "LBF")
        v = [_json_int(c, "v[]") for c in _json_list(data["v"], "v")]
        return cls(n=_json_int(data["n"], "n"), kappa=_json_real(data["kappa"], "kappa"),
                   v=v)


@dataclass(frozen=True, eq=False)
class TruthTable:
    """2^n values in table order (x_1 most significant, bit 1 -> +1)."""
    n: int
    values: np.ndarray

    def __post_init__(self):
        n = check_dimension(self.n)
        check_cap(n)
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != 2 ** n:
            raise DimensionMismatchError(f"table has {values.shape[0]} entries, expected {2 ** n}")
        if not np.all(np.isfinite(values)) or np.any(np.abs(values) > 1):
            raise ParameterError("table entries must lie in [-1, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", values)

    @property
    def is_boolean(self) -> bool:
        return bool(np.all(np.abs(self.values) == 1))

    def at(self, x: Sequence[int]) -> float:
        arr = _check_point(x, self.n)
        return float(self.values[int(table_index(arr)[0])])

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "values": [float(v) for v in self.values]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TruthTable":
        _check_keys(data, ("n", "values"), "TruthTable")
        values = [_json_real(v, "values[]") for v in _json_list(data["values"], "values")]
        return cls(n=_json_int(data["n"], "n"), values=values)


ExactSource = Union[TruthTable, LTF, LBF]


class SamplingOracle:
    """
    Labeled uniform examples (x, f(x)) of a hidden exact source.

    Draw k uses the generator derive_rng(seed, stream, k), so a fresh oracle
    with the same seed replays the same examples.
    """

    stream = STREAM_EXAMPLES

    def __init__(self, target: ExactSource, seed: int):
        self._target = require_exact(target)
        self.n = target.n
        self.seed = check_seed(seed)
        self.examples_drawn = 0
        self._draws = 0

    def _labels(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return evaluate_points(self._target, X)

    def draw(self, m: int) -> Tuple[np.ndarray, np.ndarray]:
        if m < 0:
            raise ParameterError(f"cannot draw {m} examples")
        rng = derive_rng(self.seed, self.stream, self._draws)
        self._draws += 1
        X = uniform_cube_sample(rng, m, self.n)
        labels = self._labels(X, rng)
        self.examples_drawn += m
        return X, labels


FunctionSource = Union[TruthTable, LTF, LBF, SamplingOracle]


def is_exact(source: Any) -> bool:
    return isinstance(source, (TruthTable, LTF, LBF))


def require_exact(source: Any) -> ExactSource:
    if not is_exact(source):
        raise ParameterError(f"an exact source (table, LTF or LBF) is required, got {type(source).__name__}")
    return source


def function_source_from_dict(data: Dict[str, Any]) -> ExactSource:
    """Pick the representation from the JSON keys."""
    if not isinstance(data, dict):
        raise SchemaError("function JSON must be an object")
    keys = set(data)
    if keys == {"n", "weights", "theta"}:
        return LTF.from_dict(data)
    if keys == {"n", "kappa", "v"}:
        return LBF.from_dict(data)
    if keys == {"n", "values"}:
        return TruthTable.from_dict(data)
    raise SchemaError(f"cannot recognise a function from fields {sorted(keys)}")


# ============================================================================
# EVALUATION
# ============================================================================

def project_p1(a):
    """Clamp to [-1, 1]; works on scalars and arrays."""
    if np.ndim(a) == 0:
        a = float(a)
        if not math.isfinite(a):
            raise ParameterError(f"P1 needs a finite argument, got {a}")
        return a if abs(a) <= 1.0 else math.copysign(1.0, a)
    return np.clip(np.asarray(a, dtype=float), -1.0, 1.0)


def eval_ltf(f: LTF, x: Sequence[int]) -> int:
    arr = _check_point(x, f.n)
    s = 0.0
    for w, xi in zip(f.weights, arr):
        s += w if xi > 0 else -w
    return 1 if s - f.threshold >= 0 else -1


def lbf_form(g: LBF, x: Sequence[int]) -> int:
    """The exact integer v0 + sum v_i x_i."""
    arr = _check_point(x, g.n)
    return int(g.v[0]) + sum(int(v) if xi > 0 else -int(v) for v, xi in zip(g.v[1:], arr))


def eval_lbf(g: LBF, x: Sequence[int]) -> float:
    return project_p1(g.kappa * lbf_form(g, x))


def affine_form_table(v: np.ndarray) -> np.ndarray:
    """Exact integer values of v0 + sum v_i x_i over the cube, in table order."""
    v = np.asarray(v, dtype=np.int64)
    check_cap(v.shape[0] - 1)
    return _form_table(v[1:], np.int64) + v[0]


def evaluate_points(source: ExactSource, X: np.ndarray) -> np.ndarray:
    """Exact values at each row of X, consistent with tabulate."""
    require_exact(source)
    X = _check_points(X, source.n)
    if isinstance(source, LTF):
        s = _form_points(source.weights, X, np.float64) - source.threshold
        return np.where(s >= 0, 1.0, -1.0)
    if isinstance(source, LBF):
        form = _form_points(source.v[1:], X, np.int64) + source.v[0]
        return np.clip(source.kappa * form, -1.0, 1.0)
    return source.values[table_index(X)]


def tabulate(source: ExactSource, n: Optional[int] = None) -> TruthTable:
    require_exact(source)
    if n is not None and n != source.n:
        raise DimensionMismatchError(f"source has n={source.n}, asked to tabulate n={n}")
    check_cap(source.n)
    if isinstance(source, TruthTable):
        return source
    if isinstance(source, LTF):
        s = _form_table(source.weights, np.float64) - source.threshold
        return TruthTable(source.n, np.where(s >= 0, 1.0, -1.0))
    form = affine_form_table(source.v)
    return TruthTable(source.n, np.clip(source.kappa * form, -1.0, 1.0))


def lbf_to_ltf(g: LBF) -> Tuple[LTF, bool]:
    """
    f*(x) = sign(v0 + sum v_i x_i). The integer vector is used as the weight
    vector (kappa > 0 does not change any sign), so ties resolve exactly.

    Returns (f*, degenerate); degenerate means v == 0 and f* is constant +1.
    """
    degenerate = not bool(np.any(g.v))
    if degenerate:
        logger.warning("LBF has an all-zero vector; converting to the constant +1 LTF")
    ltf = LTF(n=g.n, weights=g.v[1:].astype(float), threshold=float(-g.v[0]))
    return ltf, degenerate


# ============================================================================
# NAMED FUNCTIONS
# ============================================================================

def dictator(n: int, i: int = 1) -> LTF:
    if not 1 <= i <= n:
        raise ParameterError(f"dictator index {i} out of range 1..{n}")
    weights = np.zeros(n)
    weights[i - 1] = 1.0
    return LTF(n=n, weights=weights, threshold=0.0)


def majority(n: int) -> LTF:
    return LTF(n=n, weights=np.ones(n), threshold=0.0)


def constant(n: int, value: int = 1) -> LTF:
    if value not in (1, -1):
        raise ParameterError("constant value must be +1 or -1")
    return LTF(n=n, weights=np.zeros(n), threshold=0.0 if value == 1 else 1.0)


def parity_table(n: int) -> TruthTable:
    """+1 exactly when an odd number of coordinates are +1 (XOR of the bits)."""
    ones = (cube_points(n) > 0).sum(axis=1)
    return TruthTable(n, np.where(ones % 2 == 1, 1.0, -1.0))


# ============================================================================
# RANDOM INSTANCES
# ============================================================================

WEIGHT_MODELS = ("gaussian", "integer")


def random_ltf(n: int, weight_model: str = "gaussian", seed: int = 0,
               W: Optional[int] = None, signed: bool = False) -> LTF:
    """
    Seeded LTF instance with theta = 0.

    gaussian: w_i i.i.d. standard normal.
    integer:  every w_i starts at 1 and the remaining W - n units are spread
              by a uniform multinomial, so sum |w_i| = W and W = n gives MAJ_n.
              With signed=True each weight gets an independent random sign.
    """
    n = check_dimension(n)
    rng = derive_rng(seed, STREAM_INSTANCES)
    if weight_model == "gaussian":
        return LTF(n=n, weights=rng.standard_normal(n), threshold=0.0)
    if weight_model != "integer":
        raise ParameterError(f"weight model must be one of {WEIGHT_MODELS}, got {weight_model!r}")
    if W is None or isinstance(W, bool) or int(W) != W or W < n:
        raise ParameterError(f"integer model needs an integer W >= n={n}, got {W!r}")
    weights = 1 + rng.multinomial(int(W) - n, np.full(n, 1.0 / n))
    if signed:
        weights = weights * rng.choice(np.array([-1, 1]), size=n)
    return LTF(n=n, weights=weights.astype(float), threshold=0.0)
