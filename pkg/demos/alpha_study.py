# Does a larger alpha get you to the target faster?
#
# Two controllers on the obstacle-free planar integrator, both starting at
# (2, 0):
#   gradient  u = grad rho with rho = |x|^(-2 alpha)
#   qp        the density QP with beta = 0.1
# For the gradient law the answer is yes. The QP only enforces
# div(u rho) >= beta rho, and the least-effort control meeting it is the
# radial field u = -(beta / (2 alpha)) x, so the time to reach the
# eta-ball is 2 (alpha / beta) ln(r0 / eta): it grows with alpha.

import numpy as np

from cdfnav.controller import CdfConfig
from cdfnav.density import DensityFunction, ShapingFunction
from cdfnav.dynamics import single_integrator
from cdfnav.simulator import simulate

sys = single_integrator(2)
x0 = np.array([2.0, 0.0])

print("alpha   gradient T (eta .5)   qp T (eta .1)   qp predicted")
for alpha in (0.2, 0.4, 0.8):
    df = DensityFunction([], ShapingFunction((0, 0), None, alpha), eta=0.5)
    tg = simulate(sys, df, CdfConfig(mode="gradient"), x0).time_to_target
    df = DensityFunction([], ShapingFunction((0, 0), None, alpha), eta=0.1)
    tq = simulate(sys, df, CdfConfig(beta=0.1), x0).time_to_target
    print("%.1f     %8.2f              %8.2f        %8.2f" % (alpha, tg, tq, 2 * alpha / 0.1 * np.log(2 / 0.1)))

# the gradient field has speed 2 alpha |x|^(-2 alpha - 1): fast near the
# target, which is why eta = 0.5 keeps the Euler steps from overshooting.
