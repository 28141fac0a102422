# Anatomy of one closed-loop step on the Duffing oscillator.
#
# The decision vector is (u, u^1, u^2): the applied input plus one auxiliary
# input per perturbed point x + eps e_j. Three divergence rows and two trace
# rows, inside the +-2 box on every block.

import numpy as np

from cdfnav.controller import assemble_step_qp, certificate_ok, step_control
from cdfnav.qp import qp_solve
from cdfnav.scenario import load_scenario

np.set_printoptions(precision=4, suppress=True)

sc = load_scenario("duffing.scenario")
sys, df, cfg = sc.system, sc.density, sc.config

x = np.array([0.6, -0.2])  # inside the sensing shell, drifting toward the disc
print("clearance", df.clearance(x), "rho", df.rho(x))

prob = assemble_step_qp(sys, df, cfg, x)
print("A =\n", prob.A_ineq)
print("b =", prob.b_ineq)

sol = qp_solve(prob)
print(sol.status, "u* =", sol.u_star, "active rows", sol.active_set, "KKT", sol.kkt_residual)

step = step_control(sys, df, cfg, x)
print("applied u", step.u, "relaxed", step.relaxed)
print("divergence lhs", step.constraint_lhs)
print("beta * rho     ", step.constraint_rhs)
print("trace", step.trace_value, "certificate", certificate_ok(step, cfg.beta))

# far from the obstacle nothing needs fixing and the input stays at zero
far = np.array([-2.0, 0.0])
print("far away:", step_control(sys, df, cfg, far).u)
