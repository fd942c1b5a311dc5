"""
Exact LP oracle for small n

solve_exact_chow recovers the truth table of an LTF from its exact Chow
vector. It solves for g(x) in [-1, 1] with the n+1 linear constraints
2^-n sum_x g(x) x_i = alpha_i. By Chow's theorem the only feasible point is
the LTF's own table. recover_weights then finds (w, theta) with
f(x)(w·x - theta) >= 1 on every point.

Both problems go through simplex_solve, a dense two-phase bounded-variable
revised simplex. It uses Bland's rule for the entering and leaving choices,
so runs are deterministic and cannot cycle.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

import settings
from chow import ChowVector, chow_exact
from func_core import (
    LTF,
    AlgorithmError,
    DimensionMismatchError,
    NumericalError,
    ParameterError,
    TruthTable,
    check_cap,
    cube_points,
    tabulate,
)

logger = logging.getLogger(__name__)

SNAP_TOL = 1e-6
PIVOT_TOL = 1e-9
FEASIBILITY_TOL = 1e-7
RATIO_TIE_TOL = 1e-12


class InfeasibleError(AlgorithmError):
    pass


class NonIntegralError(AlgorithmError):
    pass


# ============================================================================
# LINEAR PROGRAMMING
# ============================================================================

@dataclass
class LPProblem:
    """minimise c·x subject to A_eq x = b_eq and lower <= x <= upper."""
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    c: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=float))
        m, N = self.A_eq.shape
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if self.b_eq.shape[0] != m:
            raise DimensionMismatchError(f"b_eq has {self.b_eq.shape[0]} entries for {m} constraints")
        if self.lower.shape[0] != N or self.upper.shape[0] != N:
            raise DimensionMismatchError(f"bounds must have {N} entries")
        if not (np.all(np.isfinite(self.A_eq)) and np.all(np.isfinite(self.b_eq))):
            raise ParameterError("constraints must be finite")
        if not np.all(np.isfinite(self.lower)) or np.any(self.upper < self.lower):
            raise ParameterError("need finite lower bounds with lower <= upper")
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=float).reshape(-1)
            if self.c.shape[0] != N:
                raise DimensionMismatchError(f"objective has {self.c.shape[0]} entries for {N} variables")

    @property
    def variable_count(self) -> int:
        return self.A_eq.shape[1]


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0


def _bounded_simplex(A, b, ub, cost, basis, at_upper, max_iterations):
    """
    Primal simplex on A z = b, 0 <= z <= ub, minimising cost·z, from a
    feasible basis. Mutates basis / at_upper. Returns (status, z, y, iterations).
    """
    m, N = A.shape
    iterations = 0
    while True:
        B = A[:, basis]
        upper_idx = np.flatnonzero(at_upper)
        try:
            z_B = np.linalg.solve(B, b - A[:, upper_idx] @ ub[upper_idx])
            y = np.linalg.solve(B.T, cost[basis])
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"singular simplex basis: {e}")

        is_basic = np.zeros(N, dtype=bool)
        is_basic[basis] = True
        d = cost - A.T @ y
        eligible = (~is_basic) & (ub > 0) & (
            ((~at_upper) & (d < -PIVOT_TOL)) | (at_upper & (d > PIVOT_TOL))
        )
        candidates = np.flatnonzero(eligible)
        if candidates.size == 0:
            z = np.where(at_upper, ub, 0.0)
            z[basis] = z_B
            return "optimal", z, y, iterations

        iterations += 1
        if iterations > max_iterations:
            raise AlgorithmError(f"simplex did not finish within {max_iterations} pivots")

        j = int(candidates[0])
        direction = -1.0 if at_upper[j] else 1.0
        change = -direction * np.linalg.solve(B, A[:, j])
        ub_B = ub[basis]

        ratios = np.full(m, np.inf)
        falling = change < -PIVOT_TOL
        ratios[falling] = z_B[falling] / -change[falling]
        rising = (change > PIVOT_TOL) & np.isfinite(ub_B)
        ratios[rising] = (ub_B[rising] - z_B[rising]) / change[rising]
        ratios = np.maximum(ratios, 0.0)
        step = ratios.min() if m else np.inf

        if not np.isfinite(step) and not np.isfinite(ub[j]):
            return "unbounded", None, None, iterations
        if ub[j] <= step:
            # bound flip, basis unchanged
            at_upper[j] = not at_upper[j]
            continue

        ties = np.flatnonzero(ratios <= step + RATIO_TIE_TOL)
        r = int(ties[np.argmin(np.asarray(basis)[ties])])
        leaving = basis[r]
        at_upper[leaving] = bool(rising[r])
        basis[r] = j
        at_upper[j] = False


def simplex_solve(problem: LPProblem, max_iterations: Optional[int] = None) -> LPResult:
    """Two-phase solve; without an objective only feasibility is decided."""
    A = problem.A_eq
    m, N = A.shape
    if max_iterations is None:
        max_iterations = 50 * (m + N) + 1000

    ub = problem.upper - problem.lower
    b = problem.b_eq - A @ problem.lower
    signs = np.where(b < 0, -1.0, 1.0)
    A1 = np.hstack([A * signs[:, None], np.eye(m)])
    b1 = b * signs
    ub1 = np.concatenate([ub, np.full(m, np.inf)])
    basis = list(range(N, N + m))
    at_upper = np.zeros(N + m, dtype=bool)

    phase_one = np.concatenate([np.zeros(N), np.ones(m)])
    status, z, _, iterations = _bounded_simplex(A1, b1, ub1, phase_one, basis, at_upper, max_iterations)
    residual = float(z[N:].sum())
    if residual > FEASIBILITY_TOL * max(1.0, float(np.abs(b1).max(initial=0.0))):
        logger.debug("phase one residual %.3g: infeasible", residual)
        return LPResult(status="infeasible", iterations=iterations)

    if problem.c is None:
        x = problem.lower + z[:N]
        return LPResult(status="optimal", x=x, objective=0.0, iterations=iterations)

    ub1[N:] = 0.0
    phase_two = np.concatenate([problem.c, np.zeros(m)])
    status, z, y, more = _bounded_simplex(A1, b1, ub1, phase_two, basis, at_upper, max_iterations)
    iterations += more
    if status != "optimal":
        return LPResult(status=status, iterations=iterations)
    x = problem.lower + z[:N]
    return LPResult(status="optimal", x=x, objective=float(problem.c @ x),
                    duals=y * signs, iterations=iterations)


# ============================================================================
# CHOW ORACLE
# ============================================================================

def _check_lp_cap(n: int) -> None:
    check_cap(n, settings.lp_cap(), "the exact LP oracle")


def solve_exact_chow(alpha: ChowVector, n: Optional[int] = None) -> TruthTable:
    """The unique table g in [-1,1]^(2^n) whose Chow vector is alpha, snapped to ±1."""
    if n is not None and n != alpha.n:
        raise DimensionMismatchError(f"alpha has n={alpha.n}, expected {n}")
    n = alpha.n
    _check_lp_cap(n)
    size = 2 ** n
    rows = np.vstack([np.ones(size), cube_points(n).T.astype(float)])
    problem = LPProblem(A_eq=rows, b_eq=size * alpha.values,
                        lower=np.full(size, -1.0), upper=np.full(size, 1.0))
    result = simplex_solve(problem)
    logger.debug("exact Chow LP: n=%d status=%s pivots=%d", n, result.status, result.iterations)
    if result.status != "optimal":
        raise InfeasibleError("no bounded function has this Chow vector")

    g = result.x
    off = np.minimum(np.abs(g - 1.0), np.abs(g + 1.0))
    loose = int(np.count_nonzero(off > SNAP_TOL))
    if loose:
        raise NonIntegralError(
            f"{loose} of {size} entries are not within {SNAP_TOL} of ±1 "
            f"(worst {off.max():.3g}); alpha is not an exact LTF Chow vector"
        )
    return TruthTable(n, np.where(g >= 0, 1.0, -1.0))


def recover_weights(table: TruthTable, margin: float = 1.0) -> LTF:
    """
    (w, theta) with f(x)(w·x - theta) >= margin for every x.

    Solved through the dual: maximise sum(lam) s.t. M^T lam = 0, 0 <= lam <= 1,
    rows of M being f(x)(x, -1). The optimum is 0 exactly when f is an LTF,
    and then the simplex multipliers give a separating (w, theta).
    """
    n = table.n
    _check_lp_cap(n)
    if not table.is_boolean:
        raise ParameterError("recover_weights needs a Boolean table")
    if margin <= 0:
        raise ParameterError(f"margin must be positive, got {margin}")
    size = 2 ** n
    points = np.hstack([cube_points(n).astype(float), -np.ones((size, 1))])
    M = table.values[:, None] * points

    problem = LPProblem(A_eq=M.T, b_eq=np.zeros(n + 1), lower=np.zeros(size),
                        upper=np.ones(size), c=-np.ones(size))
    result = simplex_solve(problem)
    if result.status != "optimal":
        raise AlgorithmError(f"weight LP ended with status {result.status}")
    if -result.objective > FEASIBILITY_TOL:
        raise InfeasibleError("table is not linearly separable (not an LTF)")

    z = -result.duals
    margins = M @ z
    worst = float(margins.min())
    if worst <= 0:
        raise NumericalError(f"recovered weights do not separate the table (worst margin {worst:.3g})")
    z = z * (margin / worst)
    ltf = LTF(n=n, weights=z[:n], threshold=float(z[n]))
    if not np.array_equal(tabulate(ltf).values, table.values):
        raise NumericalError("recovered weights do not reproduce the table")
    return ltf


def verify_chow_uniqueness(f: LTF, n: Optional[int] = None) -> bool:
    """Chow's theorem on one instance: the LP must give back f's own table."""
    if n is not None and n != f.n:
        raise DimensionMismatchError(f"f has n={f.n}, expected {n}")
    _check_lp_cap(f.n)
    recovered = solve_exact_chow(chow_exact(f))
    match = bool(np.array_equal(recovered.values, tabulate(f).values))
    if not match:
        logger.error("LP recovered a different table for an LTF with n=%d", f.n)
    return match
