"""
ChowReconstruct

Builds an LBF g whose Chow vector is close to a target vector alpha.

Starting from g'_0 = 0, every step measures the Chow vector beta of the
current hypothesis g_t = P1(g'_t), rounds it onto the grid
{alpha_i - m * u}, u = eps / (2 sqrt(n+1)), and either stops (when the
rounded residual rho <= 4 eps) or adds half of the rounded residual to g'_t.
Since half a grid step is kappa = eps / (4 sqrt(n+1)), the update adds the
integer m_i to v_i, so g_t = P1(kappa * (v0 + sum v_i x_i)) always has an
exact integer v.

If ||alpha - chi_f|| <= eps for a Boolean f, then the potential
E(t) = E[(f - g_t)(f - 2 g'_t + g_t)] starts at 1, stays >= 0 and drops by at
least 2 eps^2 per step. So the run stops within ceil(1 / (2 eps^2)) steps
with ||chi_f - chi_g|| <= 6 eps.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from chow import (
    ChowVector,
    EstimatorConfig,
    chow_estimate,
    chow_exact,
)
from func_core import (
    LBF,
    LTF,
    STREAM_RECONSTRUCT,
    AlgorithmError,
    DimensionMismatchError,
    ExactSource,
    NumericalError,
    ParameterError,
    TruthTable,
    affine_form_table,
    check_cap,
    check_seed,
    cube_points,
    derive_seed,
    tabulate,
)

logger = logging.getLogger(__name__)

CHOW_MODES = ("exact", "estimated")
STOP_RHO = "rho"
STOP_CAP = "cap"

# Beyond this a grid step no longer fits an exact float integer.
_MAX_GRID_STEPS = 2.0 ** 52


class IterationCapError(AlgorithmError):
    """The step cap was reached with rho > 4 eps; the partial result is attached."""

    def __init__(self, message: str, lbf: LBF, trace: "ReconstructTrace"):
        super().__init__(message)
        self.lbf = lbf
        self.trace = trace


# ============================================================================
# TYPES
# ============================================================================

def default_iteration_cap(eps: float) -> int:
    return math.ceil(1.0 / (2.0 * eps * eps))


@dataclass(frozen=True)
class ReconstructParams:
    eps: float
    delta: float = 0.1
    chow_mode: str = "exact"
    max_iters: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.eps, (int, float)) and math.isfinite(self.eps) and self.eps > 0):
            raise ParameterError(f"eps must be a positive real, got {self.eps!r}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must be in (0,1), got {self.delta!r}")
        if self.chow_mode not in CHOW_MODES:
            raise ParameterError(f"chow_mode must be one of {CHOW_MODES}, got {self.chow_mode!r}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ParameterError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        check_seed(self.seed)

    @property
    def iteration_cap(self) -> int:
        return self.max_iters if self.max_iters is not None else default_iteration_cap(self.eps)


@dataclass
class IterationRecord:
    t: int
    rho: float
    g_tilde: ChowVector
    potential: Optional[float] = None


@dataclass
class ReconstructTrace:
    n: int
    eps: float
    kappa: float
    records: List[IterationRecord] = field(default_factory=list)
    v: Optional[np.ndarray] = None
    iterations: int = 0
    stop_reason: Optional[str] = None

    @property
    def rho_history(self) -> List[float]:
        return [r.rho for r in self.records]

    @property
    def potential_history(self) -> Optional[List[float]]:
        if not self.records or self.records[0].potential is None:
            return None
        return [r.potential for r in self.records]

    @property
    def ok(self) -> bool:
        return self.stop_reason == STOP_RHO

    def raise_for_status(self) -> None:
        if self.stop_reason == STOP_CAP:
            lbf = LBF(self.n, self.kappa, self.v)
            raise IterationCapError(
                f"no stop after {self.iterations} steps (last rho={self.records[-1].rho:.6g}, "
                f"needed <= {4 * self.eps:.6g})",
                lbf, self,
            )

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "rho_history": self.rho_history,
            "kappa": self.kappa,
            "v": [int(c) for c in self.v],
        }
        potentials = self.potential_history
        if potentials is not None:
            data["potential_history"] = potentials
        return data


# ============================================================================
# GRID ROUNDING
# ============================================================================

def _grid_steps(alpha: np.ndarray, beta: np.ndarray, u: float) -> np.ndarray:
    """Integer m minimising |beta - (alpha - m u)|, ties rounded up."""
    q = (np.asarray(alpha, dtype=float) - np.asarray(beta, dtype=float)) / u
    if not np.all(np.isfinite(q)) or np.any(np.abs(q) > _MAX_GRID_STEPS):
        raise NumericalError("grid rounding overflowed; the Chow estimates are not finite or far out of range")
    return np.floor(q + 0.5).astype(np.int64)


def round_to_grid(alpha_i: float, beta_i: float, u: float) -> float:
    """The grid point alpha_i - m u closest to beta_i (round half up on m)."""
    if not u > 0:
        raise ParameterError(f"grid unit must be positive, got {u!r}")
    m = int(_grid_steps(np.array([alpha_i]), np.array([beta_i]), u)[0])
    return alpha_i - m * u


# ============================================================================
# POTENTIAL
# ============================================================================

def potential(f: TruthTable, g: LBF) -> float:
    """
    E[(f - g)(f - 2 g' + g)] by enumeration, where g' = kappa * (v0 + sum v_i x_i)
    is the unclipped form carried by the LBF and g = P1(g').
    """
    if f.n != g.n:
        raise DimensionMismatchError(f"f has n={f.n}, g has n={g.n}")
    check_cap(f.n)
    if not f.is_boolean:
        raise ParameterError("the potential is defined for Boolean f only")
    g_prime = g.kappa * affine_form_table(g.v)
    g_vals = np.clip(g_prime, -1.0, 1.0)
    return float(np.mean((f.values - g_vals) * (f.values - 2.0 * g_prime + g_vals)))


# ============================================================================
# MAIN LOOP
# ============================================================================

def chow_reconstruct(alpha: ChowVector, params: ReconstructParams,
                     target: Optional[ExactSource] = None) -> Tuple[LBF, ReconstructTrace]:
    """
    Run ChowReconstruct on alpha.

    target: the function alpha approximates. Only used in exact mode, to
    record the potential E(t) at every step.

    Stopping on the step cap is not raised here: the partial LBF is returned
    and trace.stop_reason == "cap". Call trace.raise_for_status() to turn
    it into IterationCapError.
    """
    n = alpha.n
    eps = params.eps
    root = math.sqrt(n + 1)
    u = eps / (2.0 * root)
    kappa = eps / (4.0 * root)
    cap = params.iteration_cap
    exact = params.chow_mode == "exact"

    f_table = None
    if exact:
        check_cap(n)
        if target is not None:
            if target.n != n:
                raise DimensionMismatchError(f"target has n={target.n}, alpha has n={n}")
            f_table = tabulate(target)
            if not f_table.is_boolean:
                raise ParameterError("the potential needs a Boolean target")
    else:
        estimate_accuracy = eps / (4.0 * root)
        estimate_delta = params.delta / default_iteration_cap(eps)

    logger.info("ChowReconstruct: n=%d eps=%g mode=%s cap=%d", n, eps, params.chow_mode, cap)

    trace = ReconstructTrace(n=n, eps=eps, kappa=kappa)
    v = np.zeros(n + 1, dtype=np.int64)
    t = 0
    while True:
        g = LBF(n, kappa, v)
        if exact:
            beta = chow_exact(g).values
        else:
            cfg = EstimatorConfig(
                t=estimate_accuracy,
                delta=estimate_delta,
                seed=derive_seed(params.seed, STREAM_RECONSTRUCT, t),
            )
            beta = chow_estimate(g, n, cfg).values

        steps = _grid_steps(alpha.values, beta, u)
        g_tilde = ChowVector(n, alpha.values - steps * u)
        rho = u * float(np.linalg.norm(steps.astype(float)))
        if not math.isfinite(rho):
            raise NumericalError(f"rho is not finite at step {t}")
        energy = potential(f_table, g) if f_table is not None else None
        trace.records.append(IterationRecord(t=t, rho=rho, g_tilde=g_tilde, potential=energy))
        logger.debug("step %d: rho=%.6g potential=%s", t, rho, energy)

        if rho <= 4.0 * eps:
            trace.stop_reason = STOP_RHO
            break
        if t >= cap:
            trace.stop_reason = STOP_CAP
            logger.warning("ChowReconstruct hit the step cap %d with rho=%.6g > %.6g", cap, rho, 4.0 * eps)
            break
        v = v + steps
        t += 1

    trace.v = v.copy()
    trace.iterations = t
    logger.info("ChowReconstruct stopped (%s) after %d steps, rho=%.6g", trace.stop_reason, t, trace.records[-1].rho)
    return LBF(n, kappa, v), trace


# ============================================================================
# THRESHOLD SEARCH
# ============================================================================

@dataclass(frozen=True)
class ThresholdChoice:
    ltf: LTF
    shift: int
    dchow: float


def best_threshold_ltf(g: LBF, alpha: ChowVector) -> ThresholdChoice:
    """
    Among f_k = sign(v0 + k + sum v_i x_i) for integers |k| * kappa <= 1, pick
    the one whose exact Chow vector is closest to alpha. Ties go to the
    smallest |k|, then the smallest k.
    """
    n = g.n
    if alpha.n != n:
        raise DimensionMismatchError(f"alpha has n={alpha.n}, g has n={n}")
    check_cap(n)
    size = 2 ** n
    form = affine_form_table(g.v)
    rows = np.hstack([np.ones((size, 1)), cube_points(n).astype(float)])

    # f_k is +1 exactly on the points with form >= -k: a prefix of the
    # points sorted by decreasing form.
    order = np.argsort(-form, kind="stable")
    prefix = np.vstack([np.zeros((1, n + 1)), np.cumsum(rows[order], axis=0)])
    total = prefix[-1]
    chi_by_count = (2.0 * prefix - total) / size
    dist_by_count = np.linalg.norm(chi_by_count - alpha.values, axis=1)

    limit = int(math.floor(1.0 / g.kappa))
    shifts = np.arange(-limit, limit + 1, dtype=np.int64)
    counts = np.searchsorted(-form[order], shifts, side="right")
    distances = dist_by_count[counts]
    best = int(np.lexsort((shifts, np.abs(shifts), distances))[0])
    k = int(shifts[best])
    ltf = LTF(n=n, weights=g.v[1:].astype(float), threshold=float(-(g.v[0] + k)))
    return ThresholdChoice(ltf=ltf, shift=k, dchow=float(distances[best]))
