"""Small dense strictly convex QP solver for the slack-relaxed safety filter.

Problem form (n variables, m slacked inequality rows, hard box):

    min_{u, delta}  ||u - u_ref||^2 + k_delta * ||delta||^2
    s.t.            A[j] . u + delta[j] <= b[j]      j = 1..m
                    lo <= u <= hi

The slack variables keep the problem feasible under actuator saturation;
they are signed (pure penalty) and pushed to zero by a large ``k_delta``.
Internally the slacks are rescaled by sqrt(k_delta) so the Hessian is a
well-conditioned multiple of the identity, and a textbook primal
active-set iteration solves the problem exactly.  Identical inputs
produce bitwise-identical solutions: constraint selection tie-breaks on
the lowest row index and the iteration order is fixed.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_K_DELTA = 1e6
MAX_ITERATIONS = 50
_ACTIVE_TOL = 1e-9
_STEP_TOL = 1e-11
_MULTIPLIER_TOL = 1e-9


@dataclass
class QpProblem:
    """Dense QP instance.  ``a`` has one constraint row per line of ``b``."""

    u_ref: np.ndarray
    a: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    k_delta: float = DEFAULT_K_DELTA
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def __post_init__(self):
        self.u_ref = np.asarray(self.u_ref, dtype=np.float64)
        n = self.u_ref.size
        self.a = np.asarray(self.a, dtype=np.float64).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if self.a.shape[0] != self.b.size:
            raise ValueError("constraint rows and bounds disagree")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("constraint rows must be finite")
        if self.k_delta <= 0.0:
            raise ValueError("k_delta must be positive")
        self.lo = np.full(n, -np.inf) if self.lo is None else np.asarray(self.lo, dtype=np.float64)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=np.float64)
        if np.any(self.lo > self.hi):
            raise ValueError("box limits must satisfy lo <= hi")


@dataclass
class QpSolution:
    """Solver output.  ``active_set`` lists binding rows in the unified
    ordering: slack rows first, then upper box, then lower box bounds."""

    u: np.ndarray
    delta: np.ndarray
    active_set: tuple
    kkt_residual: float
    status: str
    objective: float

    def slack_row_active(self, j):
        return j in self.active_set


def _build_rows(p):
    """Unified constraint matrix over x = [u; s], s = sqrt(k_delta) * delta."""
    n, m = p.u_ref.size, p.b.size
    root = np.sqrt(p.k_delta)
    n_x = n + m
    rows, rhs = [], []
    for j in range(m):
        c = np.zeros(n_x)
        c[:n] = p.a[j]
        c[n + j] = 1.0 / root
        rows.append(c)
        rhs.append(p.b[j])
    for i in range(n):
        if np.isfinite(p.hi[i]):
            c = np.zeros(n_x)
            c[i] = 1.0
            rows.append(c)
            rhs.append(p.hi[i])
        else:
            rows.append(None)
            rhs.append(np.inf)
    for i in range(n):
        if np.isfinite(p.lo[i]):
            c = np.zeros(n_x)
            c[i] = -1.0
            rows.append(c)
            rhs.append(-p.lo[i])
        else:
            rows.append(None)
            rhs.append(np.inf)
    return rows, np.array(rhs), root


def solve(p, warm_set=None):
    """Solve the QP; always returns a primal-feasible point.

    ``warm_set`` may carry the active set of a previous, similar problem;
    when the one-shot equality solve on it passes all KKT checks the
    iteration is skipped entirely.
    """
    n, m = p.u_ref.size, p.b.size
    rows, rhs, root = _build_rows(p)
    n_x = n + m

    grad_const = np.concatenate([-2.0 * p.u_ref, np.zeros(m)])  # grad f = 2x + grad_const

    def grad(x):
        return 2.0 * x + grad_const

    def solve_eqp(x, work):
        """Step p and multipliers for the equality-constrained subproblem."""
        k = len(work)
        if k == 0:
            return -0.5 * grad(x), np.zeros(0)
        c_w = np.stack([rows[i] for i in work])
        kkt = np.zeros((n_x + k, n_x + k))
        kkt[:n_x, :n_x] = 2.0 * np.eye(n_x)
        kkt[:n_x, n_x:] = c_w.T
        kkt[n_x:, :n_x] = c_w
        rhs_v = np.concatenate([-grad(x), np.zeros(k)])
        try:
            sol = np.linalg.solve(kkt, rhs_v)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs_v, rcond=None)[0]
        return sol[:n_x], sol[n_x:]

    def feasible_start():
        u0 = np.clip(p.u_ref, p.lo, p.hi)
        s0 = np.minimum(0.0, root * (p.b - p.a @ u0))
        return np.concatenate([u0, s0])

    def active_at(x):
        act = []
        for i, c in enumerate(rows):
            if c is not None and c @ x >= rhs[i] - _ACTIVE_TOL:
                act.append(i)
        return act

    def finish(x, work, status, iterations):
        if work and status == "optimal":
            # polish: re-solve the equality KKT system on the final active
            # set to remove drift accumulated over partial steps
            c_w = np.stack([rows[i] for i in work])
            k = len(work)
            kkt = np.zeros((n_x + k, n_x + k))
            kkt[:n_x, :n_x] = 2.0 * np.eye(n_x)
            kkt[:n_x, n_x:] = c_w.T
            kkt[n_x:, :n_x] = c_w
            rhs_v = np.concatenate([-grad_const,
                                    np.array([rhs[i] for i in work])])
            try:
                x_ref = np.linalg.solve(kkt, rhs_v)[:n_x]
                feas = all(c is None or c @ x_ref <= rhs[i] + 1e-9
                           for i, c in enumerate(rows))
                if feas:
                    x = x_ref
            except np.linalg.LinAlgError:
                pass
        # repair any accumulated drift: clip into the box, then tighten the
        # slacks so every slack row holds exactly or strictly
        u = np.clip(x[:n], p.lo, p.hi)
        s = x[n:]
        if m:
            s = np.minimum(s, root * (p.b - p.a @ u))
        x = np.concatenate([u, s])
        delta = s / root
        mu = {}
        if work:
            c_w = np.stack([rows[i] for i in work])
            lam = np.linalg.lstsq(c_w.T, -grad(x), rcond=None)[0]
            mu = dict(zip(work, lam))
        res = kkt_residual(p, x, mu, rows, rhs)
        obj = float((u - p.u_ref) @ (u - p.u_ref) + p.k_delta * (delta @ delta))
        return QpSolution(u=u, delta=delta, active_set=tuple(sorted(work)),
                          kkt_residual=res, status=status, objective=obj)

    # One-shot warm start: equality-solve the previous active set and keep
    # the result if it is feasible with nonnegative multipliers.
    if warm_set:
        work = sorted(i for i in warm_set if i < len(rows) and rows[i] is not None)
        if work:
            x = feasible_start()
            c_w = np.stack([rows[i] for i in work])
            k = len(work)
            kkt = np.zeros((n_x + k, n_x + k))
            kkt[:n_x, :n_x] = 2.0 * np.eye(n_x)
            kkt[:n_x, n_x:] = c_w.T
            kkt[n_x:, :n_x] = c_w
            rhs_v = np.concatenate([2.0 * np.concatenate([p.u_ref, np.zeros(m)]),
                                    np.array([rhs[i] for i in work])])
            try:
                sol = np.linalg.solve(kkt, rhs_v)
                x_try, lam = sol[:n_x], sol[n_x:]
                feas = all(c is None or c @ x_try <= rhs[i] + _ACTIVE_TOL
                           for i, c in enumerate(rows))
                if feas and np.all(lam >= -_MULTIPLIER_TOL):
                    return finish(x_try, work, "optimal", 1)
            except np.linalg.LinAlgError:
                pass

    x = feasible_start()
    work = active_at(x)
    for it in range(MAX_ITERATIONS):
        step, lam = solve_eqp(x, work)
        scale = max(1.0, float(np.max(np.abs(x))))
        at_optimum = np.max(np.abs(step)) < _STEP_TOL * scale
        if not at_optimum:
            alpha = 1.0
            blocking = -1
            for i, c in enumerate(rows):
                if c is None or i in work:
                    continue
                d_dir = c @ step
                if d_dir <= _ACTIVE_TOL:
                    continue
                a_i = (rhs[i] - c @ x) / d_dir
                if a_i < alpha - 1e-12:
                    alpha = max(a_i, 0.0)
                    blocking = i
            x = x + alpha * step
            if blocking >= 0:
                work.append(blocking)
                work.sort()
                continue
            # full step: x is the optimum of the current working set, and
            # lam already holds its multipliers (the EQP is a quadratic)
        if len(work) == 0 or np.all(lam >= -_MULTIPLIER_TOL):
            return finish(x, work, "optimal", it)
        work.pop(int(np.argmin(lam)))
    return finish(x, work, "max_iter", MAX_ITERATIONS)


def kkt_residual(p, x=None, mu=None, rows=None, rhs=None, sol=None):
    """Max of stationarity, primal-feasibility, dual-feasibility and
    complementary-slackness residuals at a candidate point."""
    if sol is not None:
        rows, rhs, root = _build_rows(p)
        x = np.concatenate([sol.u, root * sol.delta])
        work = list(sol.active_set)
        grad = 2.0 * x + np.concatenate([-2.0 * p.u_ref, np.zeros(p.b.size)])
        mu = {}
        if work:
            c_w = np.stack([rows[i] for i in work])
            lam = np.linalg.lstsq(c_w.T, -grad, rcond=None)[0]
            mu = dict(zip(work, lam))
    grad = 2.0 * x + np.concatenate([-2.0 * p.u_ref, np.zeros(p.b.size)])
    stat = grad.copy()
    mu_scale = max(1.0, max((abs(v) for v in mu.values()), default=0.0)) if mu else 1.0
    res = 0.0
    for i, c in enumerate(rows):
        if c is None:
            continue
        viol = float(c @ x - rhs[i])
        res = max(res, viol)  # primal feasibility
        m_i = mu.get(i, 0.0) if mu else 0.0
        stat = stat + m_i * c
        res = max(res, -m_i / mu_scale)                 # dual feasibility
        res = max(res, abs(m_i * viol) / mu_scale)      # complementary slackness
    scale = max(1.0, float(np.max(np.abs(grad))), mu_scale)
    res = max(res, float(np.max(np.abs(stat))) / scale)
    return res


def kkt_check(p, sol):
    """Public KKT residual for a returned solution."""
    return kkt_residual(p, sol=sol)
