"""Dense strictly convex QP solver for the small per-step problems.

Solves

    minimize    1/2 u^T H u + q^T u
    subject to  A u >= b,  lower <= u <= upper

with the Goldfarb-Idnani primal-dual active-set method. The iteration starts
at the unconstrained minimiser and adds violated constraints one at a time
while keeping the dual iterate feasible, so no phase-one feasible point is
needed and infeasibility is detected when no dual step can restore the
violated row.
"""

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    q: np.ndarray
    A_ineq: np.ndarray = None
    b_ineq: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        p = H.shape[0]
        if H.shape != (p, p):
            raise ValueError("H must be square")
        if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H))):
            raise ValueError("H must be symmetric")
        q = np.asarray(self.q, dtype=float).reshape(p)
        A = np.zeros((0, p)) if self.A_ineq is None else np.asarray(self.A_ineq, dtype=float).reshape(-1, p)
        b = np.zeros(0) if self.b_ineq is None else np.asarray(self.b_ineq, dtype=float).reshape(-1)
        if b.shape[0] != A.shape[0]:
            raise ValueError("A_ineq and b_ineq have inconsistent row counts")
        lower = np.full(p, -np.inf) if self.lower is None else np.broadcast_to(np.asarray(self.lower, dtype=float), (p,)).copy()
        upper = np.full(p, np.inf) if self.upper is None else np.broadcast_to(np.asarray(self.upper, dtype=float), (p,)).copy()
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        for name, val in (("H", H), ("q", q), ("A_ineq", A), ("b_ineq", b)):
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "A_ineq", A)
        object.__setattr__(self, "b_ineq", b)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def p(self):
        return self.H.shape[0]

    @property
    def r(self):
        return self.A_ineq.shape[0]

    def stacked_rows(self):
        """All constraints as C u >= d: general rows first, then finite bounds.

        Returns (C, d, labels) where labels[i] names the origin of row i as
        ("ineq", j), ("lower", j) or ("upper", j).
        """
        rows = [self.A_ineq]
        rhs = [self.b_ineq]
        labels = [("ineq", j) for j in range(self.r)]
        eye = np.eye(self.p)
        lo = np.flatnonzero(np.isfinite(self.lower))
        hi = np.flatnonzero(np.isfinite(self.upper))
        rows += [eye[lo], -eye[hi]]
        rhs += [self.lower[lo], -self.upper[hi]]
        labels += [("lower", int(j)) for j in lo] + [("upper", int(j)) for j in hi]
        return np.vstack(rows), np.concatenate(rhs), labels

    def objective(self, u):
        return float(0.5 * u @ self.H @ u + self.q @ u)


@dataclass(frozen=True)
class QpSolution:
    """Result of :func:`qp_solve`.

    ``active_set`` and ``multipliers`` index the stacked rows of
    :meth:`QpProblem.stacked_rows`. For an infeasible problem
    ``violated_row``/``violation`` report the row that could not be
    restored and its residual ``C u - d`` at the last iterate.
    """

    u_star: np.ndarray
    objective: float
    status: str
    active_set: tuple
    kkt_residual: float
    multipliers: np.ndarray
    iterations: int
    violated_row: int = None
    violation: float = None

    @property
    def optimal(self):
        return self.status == OPTIMAL


def kkt_residual(problem, u, lam, rows=None):
    """Max violation over stationarity, primal/dual feasibility and complementarity."""
    C, d, _ = rows or problem.stacked_rows()
    s = C @ u - d
    stat = problem.H @ u + problem.q - C.T @ lam
    parts = [np.max(np.abs(stat), initial=0.0)]
    if s.size:
        parts += [
            max(0.0, -float(np.min(s))),
            max(0.0, -float(np.min(lam))),
            float(np.max(np.abs(lam * s))),
        ]
    return float(max(parts))


def qp_solve(problem, max_iter=None):
    """Solve a :class:`QpProblem`; deterministic for identical inputs."""
    H, q = problem.H, problem.q
    rows = problem.stacked_rows()
    C, d, _ = rows
    p = problem.p
    nrows = C.shape[0]
    if max_iter is None:
        max_iter = 100 * (problem.r + p)

    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise ValueError("H is not positive definite") from None
    Linv = np.linalg.inv(L)
    Hinv = Linv.T @ Linv

    row_norm = np.linalg.norm(C, axis=1) if nrows else np.zeros(0)
    x = -Hinv @ q
    active = []
    lam = np.zeros(0)
    it = 0

    def finish(status, violated=None, violation=None):
        full = np.zeros(nrows)
        if active:
            full[active] = lam
        res = kkt_residual(problem, x, full, rows)
        return QpSolution(
            u_star=x.copy(), objective=problem.objective(x), status=status,
            active_set=tuple(sorted(active)), kkt_residual=res, multipliers=full,
            iterations=it, violated_row=violated, violation=violation,
        )

    while True:
        if nrows == 0:
            return finish(OPTIMAL)
        s = C @ x - d
        tol = 1e-12 * (1.0 + np.abs(d) + row_norm * np.linalg.norm(x))
        s_masked = np.where(s < -tol, s, np.inf)
        if active:
            s_masked[active] = np.inf
        if not np.isfinite(s_masked).any():
            return finish(OPTIMAL)
        # most violated row, lowest index on ties
        k_add = int(np.argmin(s_masked))
        n_add = C[k_add]
        lam_add = 0.0

        while True:
            it += 1
            if it > max_iter:
                return finish(ITERATION_LIMIT)
            if active:
                N = C[active].T
                HN = Hinv @ N
                Nstar = np.linalg.solve(N.T @ HN, HN.T)
                z = Hinv @ n_add - HN @ (Nstar @ n_add)
                r = Nstar @ n_add
            else:
                z = Hinv @ n_add
                r = np.zeros(0)

            # partial (dual) step: largest step keeping active multipliers >= 0
            t1, k_drop = np.inf, None
            for j in range(len(active)):
                if r[j] > 1e-14 and lam[j] / r[j] < t1:
                    t1, k_drop = lam[j] / r[j], j
            # full (primal) step: makes the added row active
            zn = float(z @ n_add)
            if zn > 1e-14 * max(1.0, float(n_add @ n_add)):
                t2 = -(float(n_add @ x) - d[k_add]) / zn
            else:
                t2 = np.inf

            if not np.isfinite(t1) and not np.isfinite(t2):
                return finish(INFEASIBLE, k_add, float(n_add @ x - d[k_add]))
            if not np.isfinite(t2):
                # n_add lies in the span of the active normals: dual step only
                lam = lam - t1 * r
                lam_add += t1
                active.pop(k_drop)
                lam = np.delete(lam, k_drop)
                continue

            t = min(t1, t2)
            x = x + t * z
            lam = lam - t * r
            lam_add += t
            if t2 <= t1:
                active.append(k_add)
                lam = np.append(lam, lam_add)
                break
            active.pop(k_drop)
            lam = np.delete(lam, k_drop)
