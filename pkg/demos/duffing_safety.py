# Twenty Duffing runs from a circle of radius 2.5 around the obstacle.
# Every run should reach the target ball without touching the disc.

import time

import numpy as np

from cdfnav.scenario import load_scenario
from cdfnav.simulator import monte_carlo_sweep

sc = load_scenario("duffing.scenario")
t0 = time.time()
rep = monte_carlo_sweep(sc.system, sc.density, sc.config, sc.sampler, sc.count, sc.seed, keep_trajectories=True)
print("%d runs in %.1f s" % (rep.count, time.time() - t0))

print(" i      x0_1     x0_2   outcome     T      min clear  relaxed")
for i, tr in enumerate(rep.trajectories):
    x0 = rep.initial_states[i]
    print("%2d  %8.3f %8.3f   %-9s %6.2f   %8.4f   %5d" % (
        i, x0[0], x0[1], tr.outcome, tr.times[-1], tr.min_clearance, tr.relaxed_steps))

print("converged fraction", rep.converged_fraction)
print("max unsafe dwell", rep.dwell_times.max())

# how hard does the controller push? the box is +-2
u = np.concatenate([tr.controls[:, 0] for tr in rep.trajectories])
print("input range [%.3f, %.3f]" % (u.min(), u.max()))
