"""Dense convex QP solver.

Solves   min 0.5 x' H x + g' x
         s.t. G x <= h   (inequality polytope)
              A x  = b   (optional equalities)

with a primal active-set method. The method gives exact complementarity at
termination, is warm-startable across receding-horizon replans, and is
fully deterministic: working sets are kept sorted and every selection rule
breaks ties by lowest row index. Feasibility is established, when needed,
by an elastic phase-1 QP whose optimum doubles as an infeasibility
certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import Polytope

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200

# step smaller than this is treated as a stationary subproblem
_STEP_ZERO = 1e-11
# directional derivative threshold for a row to be considered blocking
_DIR_EPS = 1e-12


class QpStatus(Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


class QpFailureError(RuntimeError):
    """Raised by planners when a required subproblem cannot be solved."""

    def __init__(self, message: str, solution: Optional["QpSolution"] = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class QpProblem:
    hessian: np.ndarray
    gradient: np.ndarray
    ineq: Polytope
    eq: Optional[Tuple[np.ndarray, np.ndarray]] = None
    regularization: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.hessian, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("hessian must be square")
        h = 0.5 * (h + h.T)
        # repair indefiniteness from linearization noise rather than failing
        min_eig = float(np.linalg.eigvalsh(h)[0]) if h.shape[0] else 0.0
        if min_eig < -1e-8:
            rho = abs(min_eig) + 1e-8
            h = h + rho * np.eye(h.shape[0])
            self.regularization = rho
        self.hessian = h
        self.gradient = np.asarray(self.gradient, dtype=float).ravel()
        if self.gradient.shape[0] != h.shape[0]:
            raise ValueError("gradient length must match hessian size")
        if self.ineq.dim != h.shape[0]:
            raise ValueError("inequality dimension must match hessian size")
        # normalize inequality rows: mixed position/angle magnitudes
        # otherwise wreck the active-set conditioning
        norms = np.linalg.norm(self.ineq.g, axis=1)
        scale = np.where(norms > 1e-12, norms, 1.0)
        self.ineq = Polytope(self.ineq.g / scale[:, None], self.ineq.h / scale)
        if self.eq is not None:
            a, b = self.eq
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.asarray(b, dtype=float).ravel()
            if a.shape[1] != h.shape[0] or a.shape[0] != b.shape[0]:
                raise ValueError("equality shapes inconsistent")
            self.eq = (a, b)

    @property
    def n(self) -> int:
        return self.hessian.shape[0]

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.hessian @ x + self.gradient @ x)


@dataclass
class QpSolution:
    x: np.ndarray
    dual_ineq: np.ndarray
    dual_eq: np.ndarray
    status: QpStatus
    iterations: int
    kkt_residual: float
    active_set: tuple = ()
    regularization: float = 0.0


def kkt_residual(p: QpProblem, sol: QpSolution) -> float:
    """Max of stationarity, primal violation, dual negativity, and
    complementarity violation at a candidate point."""
    x = np.asarray(sol.x, dtype=float)
    lam = np.asarray(sol.dual_ineq, dtype=float)
    stat = p.hessian @ x + p.gradient + p.ineq.g.T @ lam
    primal = float(np.max(np.append(p.ineq.violations(x), 0.0)))
    if p.eq is not None:
        a, b = p.eq
        nu = np.asarray(sol.dual_eq, dtype=float)
        stat = stat + a.T @ nu
        primal = max(primal, float(np.max(np.abs(a @ x - b), initial=0.0)))
    dual_neg = float(np.max(np.append(-lam, 0.0)))
    comp = float(np.max(np.abs(lam * p.ineq.violations(x)), initial=0.0))
    return max(float(np.max(np.abs(stat), initial=0.0)), primal, dual_neg, comp)


def _solve_kkt(h, grad_at_x, c_rows):
    """Equality-constrained step: min 0.5 p'Hp + grad'p s.t. C p = 0.

    Returns (p, multipliers). Falls back to least squares when the KKT
    matrix is singular (rank-deficient working sets, zero curvature)."""
    n = h.shape[0]
    m = c_rows.shape[0]
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = h
    if m:
        kkt[:n, n:] = c_rows.T
        kkt[n:, :n] = c_rows
    rhs = np.concatenate([-grad_at_x, np.zeros(m)])
    try:
        sol = np.linalg.solve(kkt, rhs)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def _active_set_iterate(h, g, gi, hi, a_eq, x, working, tol, max_iter):
    """Primal active-set loop from a feasible x.

    working: sorted list of inequality row indices active at x. Equality
    rows (a_eq) are permanently active. Returns (x, lam_ineq, nu_eq,
    status, iterations, working)."""
    n = h.shape[0]
    m = gi.shape[0]
    n_eq = a_eq.shape[0] if a_eq is not None else 0
    working = sorted(working)
    iterations = 0
    lam_full = np.zeros(m)
    nu = np.zeros(n_eq)

    while iterations < max_iter:
        iterations += 1
        c_rows = gi[working] if working else np.zeros((0, n))
        if n_eq:
            c_rows = np.vstack([a_eq, c_rows]) if c_rows.size else a_eq
        grad_at_x = h @ x + g
        p, mult = _solve_kkt(h, grad_at_x, c_rows)

        if float(np.max(np.abs(p), initial=0.0)) <= _STEP_ZERO:
            nu = mult[:n_eq] if n_eq else np.zeros(0)
            lam_w = mult[n_eq:]
            lam_full = np.zeros(m)
            for idx, row in enumerate(working):
                lam_full[row] = lam_w[idx]
            if not working or float(np.min(lam_w)) >= -tol:
                return x, lam_full, nu, QpStatus.OPTIMAL, iterations, tuple(working)
            # drop the most negative multiplier, lowest index on ties
            drop_pos = 0
            for idx in range(1, len(working)):
                if lam_w[idx] < lam_w[drop_pos] - 1e-15:
                    drop_pos = idx
            working.pop(drop_pos)
            continue

        # ratio test against rows not in the working set
        gp = gi @ p
        resid = hi - gi @ x
        candidate = gp > _DIR_EPS
        if working:
            candidate[list(working)] = False
        alpha = 1.0
        block = -1
        if np.any(candidate):
            ratios = np.full(m, np.inf)
            ratios[candidate] = resid[candidate] / gp[candidate]
            rmin = float(np.min(ratios))
            if rmin < 1.0 - 1e-15:
                alpha = max(rmin, 0.0)
                block = int(np.argmax(ratios <= rmin + 1e-15))
        x = x + alpha * p
        if block >= 0:
            working = sorted(working + [block])

    # out of budget: report best-effort multipliers at the current point
    return x, lam_full, nu, QpStatus.MAX_ITERATIONS, iterations, tuple(working)


def _phase1(p: QpProblem, x_base: np.ndarray, tol: float, max_iter: int):
    """Elastic feasibility problem over (x, t): minimize t (plus a tiny
    strictly convex term) subject to G x - t <= h, t >= 0. The start
    (x_base, max violation + margin) is always feasible, so the same
    active-set core applies. Equalities stay hard; x_base must satisfy
    them already."""
    n = p.n
    gi, hi = p.ineq.g, p.ineq.h
    scale = max(1.0, float(np.max(np.abs(hi), initial=1.0)))
    # keep the quadratic term tiny: it buys strict convexity but biases the
    # optimal slack away from zero on feasible problems
    eps = 1e-12 * scale
    h_aug = np.zeros((n + 1, n + 1))
    h_aug[:n, :n] = 2.0 * eps * np.eye(n)
    h_aug[n, n] = 2.0 * eps
    g_aug = np.zeros(n + 1)
    g_aug[n] = 1.0
    gi_aug = np.hstack([gi, -np.ones((gi.shape[0], 1))])
    gi_aug = np.vstack([gi_aug, np.zeros((1, n + 1))])
    gi_aug[-1, n] = -1.0
    hi_aug = np.concatenate([hi, [0.0]])
    a_aug = None
    if p.eq is not None:
        a, _ = p.eq
        a_aug = np.hstack([a, np.zeros((a.shape[0], 1))])
    t0 = max(0.0, float(np.max(gi @ x_base - hi, initial=0.0))) + 1e-3
    z0 = np.concatenate([x_base, [t0]])
    z, _, _, status, iters, _ = _active_set_iterate(
        h_aug, g_aug, gi_aug, hi_aug, a_aug, z0, [], tol, max_iter)
    return z[:n], float(z[n]), status, iters


def solve(p: QpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          x0: Optional[np.ndarray] = None, warm_set: Sequence[int] = ()) -> QpSolution:
    """Solve the QP. x0 and warm_set seed the active-set iteration; an
    infeasible or missing x0 triggers the phase-1 search."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = p.n
    gi, hi = p.ineq.g, p.ineq.h
    a_eq = b_eq = None
    if p.eq is not None:
        a_eq, b_eq = p.eq

    total_iters = 0
    x_start = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float).ravel()
        eq_ok = a_eq is None or float(np.max(np.abs(a_eq @ x0 - b_eq), initial=0.0)) <= 1e-9
        if eq_ok and p.ineq.contains(x0, slack=1e-9):
            x_start = x0

    if x_start is None:
        x_base = np.zeros(n)
        if a_eq is not None:
            x_base, _, _, _ = np.linalg.lstsq(a_eq, b_eq, rcond=None)
            if float(np.max(np.abs(a_eq @ x_base - b_eq), initial=0.0)) > 1e-8:
                return QpSolution(x_base, np.zeros(gi.shape[0]), np.zeros(len(b_eq)),
                                  QpStatus.INFEASIBLE, 0, np.inf)
        x_f, t_f, st, iters = _phase1(p, x_base, tol, max_iter)
        total_iters += iters
        # judge feasibility by the achieved point, not the biased slack value
        feas_viol = float(np.max(gi @ x_f - hi, initial=0.0))
        if feas_viol > 1e-7:
            nu_len = 0 if a_eq is None else a_eq.shape[0]
            return QpSolution(x_f, np.zeros(gi.shape[0]), np.zeros(nu_len),
                              QpStatus.INFEASIBLE, total_iters, np.inf)
        x_start = x_f

    # keep only warm rows that are actually tight at the start point
    resid = gi @ x_start - hi
    working = sorted({int(i) for i in warm_set if -1e-9 <= resid[int(i)] <= 1e-9})

    x, lam, nu, status, iters, active = _active_set_iterate(
        p.hessian, p.gradient, gi, hi, a_eq, x_start, working, tol, max_iter)
    total_iters += iters
    sol = QpSolution(x, lam, nu, status, total_iters, 0.0, active, p.regularization)
    sol.kkt_residual = kkt_residual(p, sol)
    if status is QpStatus.OPTIMAL and sol.kkt_residual > tol:
        # numerically degraded optimum; report honestly
        sol.status = QpStatus.MAX_ITERATIONS
    return sol
