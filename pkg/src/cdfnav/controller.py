"""Per-step QP that enforces the density divergence condition along a trajectory.

At state x the decision vector stacks the applied control u and one
auxiliary control u^j per perturbed point z_j = x + eps e_j, j = 1..n.
Constraints:

* one divergence row per evaluation point
      div(f rho) + sum_i div(g_i rho) u_i >= beta rho
* the trace of the finite-difference control Jacobian against g(x),
  bounded by beta in absolute value (two rows)
* the plant's control box, replicated on every block.

Only u is applied; the u^j exist to make the spatial derivative of the
control visible to a pointwise solver.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qp as qpmod
from .errors import InfeasibleStepError, TargetSingularityError
from .density import as_state

MODES = ("qp", "nominal", "gradient")
POLICIES = ("error", "slack")

SLACK_WEIGHT = 1e6


@dataclass(frozen=True)
class CdfConfig:
    """Controller and integration settings.

    ``mode`` selects how the applied control is produced: ``"qp"`` solves
    the density QP, ``"nominal"`` applies ``u_nominal`` directly and
    ``"gradient"`` applies ``gain * grad rho`` (single integrators only).
    ``margin`` turns the strict inequalities of the scheme into
    ``>= rhs + margin`` / ``<= beta - margin``.
    """

    beta: float = 0.1
    epsilon: float = 1e-3
    dt: float = 0.01
    horizon_steps: int = 5000
    u_nominal: object = None
    infeasibility_policy: str = "error"
    margin: float = 0.0
    mode: str = "qp"
    gain: float = 1.0
    normalize_rows: bool = True

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive")
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if int(self.horizon_steps) < 1:
            raise ValueError("horizon_steps must be a positive integer")
        if self.infeasibility_policy not in POLICIES:
            raise ValueError(f"infeasibility_policy must be one of {POLICIES}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "nominal" and self.u_nominal is None:
            raise ValueError("nominal mode needs u_nominal")
        if not (self.margin >= 0):
            raise ValueError("margin must be non-negative")
        if not (self.gain > 0):
            raise ValueError("gain must be positive")


@dataclass
class StepResult:
    u: np.ndarray
    u_perturbed: np.ndarray
    constraint_lhs: np.ndarray
    constraint_rhs: np.ndarray
    trace_value: float
    qp_status: str
    relaxed: bool = False
    slack: float = 0.0
    rho: float = 0.0
    rho_exceeds_one: bool = False
    solution: object = field(default=None, repr=False)


def perturbation_points(x, epsilon):
    """z_j = x + epsilon * e_j for each coordinate j."""
    if not (epsilon > 0):
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=float)
    return [x + epsilon * e for e in np.eye(x.shape[0])]


def _row_terms(sys, df, x, beta):
    """(rho, normalised c0, normalised a) at x; the normalised terms are None inside obstacles."""
    r, lg = df.rho_and_log_gradient(x)
    if lg is None:
        return 0.0, None, None
    return r, sys.div_f(x) + lg @ sys.f(x), sys.div_g(x) + sys.g(x).T @ lg


def divergence_row(sys, df, x, beta, normalized=False):
    """Coefficients of div((f + g u) rho)(x) >= beta rho(x) that are linear in u.

    Returns ``(c0, a, rhs)`` with ``c0 = div(f rho)``, ``a_i = div(g_i rho)``
    and ``rhs = beta rho``. With ``normalized=True`` all three are divided
    by rho(x) (the row becomes ``div f + grad log rho . f + ... >= beta``),
    which describes the same half-space when rho > 0 and stays well scaled
    next to obstacles. Inside an obstacle the row is all zeros.
    """
    x = as_state(x, sys.n)
    if normalized:
        _, c0, a = _row_terms(sys, df, x, beta)
        if c0 is None:
            return 0.0, np.zeros(sys.m), 0.0
        return c0, a, beta
    f = sys.f(x)
    r = df.rho(x)
    gr = df.grad_rho(x)
    c0 = r * sys.div_f(x) + gr @ f
    a = r * sys.div_g(x) + sys.g(x).T @ gr
    return c0, a, beta * r


def trace_coefficients(g, epsilon):
    """Linear map w -> tr((grad_x u^T)^T g) over the stacked decision vector.

    The finite-difference Jacobian has entries (u_i^j - u_i)/eps, so the
    trace is sum_{i,j} g[j, i] (u_i^j - u_i) / eps.
    """
    n, m = g.shape
    coef = np.zeros(m * (n + 1))
    for j in range(n):
        coef[m * (j + 1):m * (j + 2)] += g[j, :] / epsilon
        coef[:m] -= g[j, :] / epsilon
    return coef


def _nominal(cfg, x, m):
    if cfg.u_nominal is None:
        return np.zeros(m)
    return np.asarray(cfg.u_nominal(x), dtype=float).reshape(m)


def _check_points(df, points):
    for z in points:
        if df.shaping.value(z) <= 0.0:
            raise TargetSingularityError("target singularity: evaluation point at the target")


def _point_terms(sys, df, cfg, x):
    points = [x] + perturbation_points(x, cfg.epsilon)
    _check_points(df, points)
    return [_row_terms(sys, df, z, cfg.beta) for z in points]


def assemble_step_qp(sys, df, cfg, x, slack=False, terms=None):
    """Build the QP for one closed-loop step at state x.

    Row order: n+1 divergence rows (x, z_1..z_n), then the two trace rows.
    Bounds replicate the plant's control box on each of the n+1 blocks.
    With ``slack=True`` a last decision variable s >= 0 is appended, added
    to every divergence row and penalised by ``SLACK_WEIGHT * s^2``.
    """
    x = as_state(x, sys.n)
    n, m = sys.n, sys.m
    points = [x] + perturbation_points(x, cfg.epsilon)
    if terms is None:
        terms = _point_terms(sys, df, cfg, x)
    p = m * (n + 1) + (1 if slack else 0)

    A = np.zeros((n + 3, p))
    b = np.zeros(n + 3)
    for j, (r, c0, a) in enumerate(terms):
        if c0 is None:
            c0, a, rhs = 0.0, np.zeros(m), 0.0
        elif cfg.normalize_rows:
            rhs = cfg.beta
        else:
            c0, a, rhs = r * c0, r * a, cfg.beta * r
        A[j, m * j:m * (j + 1)] = a
        b[j] = rhs - c0 + cfg.margin
        if slack:
            A[j, -1] = 1.0
    tc = trace_coefficients(sys.g(x), cfg.epsilon)
    A[n + 1, :m * (n + 1)] = -tc
    A[n + 2, :m * (n + 1)] = tc
    b[n + 1] = b[n + 2] = -(cfg.beta - cfg.margin)

    H = 2.0 * np.eye(p)
    q = np.zeros(p)
    u0 = [_nominal(cfg, z, m) for z in points] if cfg.u_nominal is not None else None
    if u0 is not None:
        q[:m * (n + 1)] = -2.0 * np.concatenate(u0)
    lower = np.tile(sys.control_lower, n + 1)
    upper = np.tile(sys.control_upper, n + 1)
    if slack:
        H[-1, -1] = 2.0 * SLACK_WEIGHT
        lower = np.append(lower, 0.0)
        upper = np.append(upper, np.inf)
    return qpmod.QpProblem(H, q, A, b, lower, upper)


def _evaluate(sys, cfg, x, w, terms):
    """Unnormalised divergence LHS/RHS per point and the trace value for w."""
    n, m = sys.n, sys.m
    lhs = np.zeros(n + 1)
    rhs = np.zeros(n + 1)
    for j, (r, c0, a) in enumerate(terms):
        if c0 is not None:
            lhs[j] = r * (c0 + a @ w[m * j:m * (j + 1)])
            rhs[j] = cfg.beta * r
    trace = float(trace_coefficients(sys.g(x), cfg.epsilon) @ w[:m * (n + 1)])
    return lhs, rhs, trace


def step_control(sys, df, cfg, x):
    """Solve the step QP at x and return the applied control with diagnostics."""
    x = as_state(x, sys.n)
    n, m = sys.n, sys.m
    terms = _point_terms(sys, df, cfg, x)
    problem = assemble_step_qp(sys, df, cfg, x, terms=terms)
    sol = qpmod.qp_solve(problem)
    relaxed = False
    slack = 0.0
    if sol.status != qpmod.OPTIMAL:
        if cfg.infeasibility_policy == "error":
            raise InfeasibleStepError(
                f"step QP {sol.status} at x={x.tolist()}: row {sol.violated_row} "
                f"violated by {sol.violation}",
                row=sol.violated_row, violation=sol.violation, state=x,
            )
        problem = assemble_step_qp(sys, df, cfg, x, slack=True, terms=terms)
        sol = qpmod.qp_solve(problem)
        if sol.status != qpmod.OPTIMAL:
            raise InfeasibleStepError(
                f"relaxed step QP {sol.status} at x={x.tolist()}",
                row=sol.violated_row, violation=sol.violation, state=x,
            )
        relaxed = True
        slack = float(sol.u_star[-1])
    w = sol.u_star[:m * (n + 1)]
    lhs, rhs, trace = _evaluate(sys, cfg, x, w, terms)
    r = terms[0][0]
    return StepResult(
        u=w[:m].copy(),
        u_perturbed=w[m:].reshape(n, m).T.copy(),
        constraint_lhs=lhs,
        constraint_rhs=rhs,
        trace_value=trace,
        qp_status=sol.status,
        relaxed=relaxed,
        slack=slack,
        rho=r,
        rho_exceeds_one=r > 1.0,
        solution=sol,
    )


def certificate_ok(step, beta, tol=1e-6):
    """Feasibility of an unrelaxed step: divergence rows and trace bound within tol."""
    return bool(np.all(step.constraint_lhs >= step.constraint_rhs - tol) and abs(step.trace_value) <= beta + tol)
