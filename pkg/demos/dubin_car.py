# The car runs the planar density controller for its position and tracks
# the heading of the planar command with a proportional loop (gain k).

import numpy as np

from cdfnav.scenario import load_scenario
from cdfnav.simulator import heading_windows, simulate_dubin

sc = load_scenario("dubin.scenario")
tr = simulate_dubin(sc.density, sc.config, sc.x0, sc.theta0, sc.k_gain)
print(tr.outcome, "after", len(tr.controls), "steps, min clearance %.3f" % tr.min_clearance)

# a few waypoints along the path
for k in np.linspace(0, len(tr.states) - 1, 9).astype(int):
    x1, x2, th = tr.states[k]
    print("t=%6.2f  (%6.2f, %6.2f)  heading %6.3f" % (tr.times[k], x1, x2, th))

err = np.abs(tr.extras["heading_error"])
print("heading error: first step %.3f, max after 1 s %.4f" % (err[0], err[100:].max()))
checked, bad = heading_windows(tr)
print("1 s windows with a slow reference:", checked, "violating:", bad)

v, omega = tr.controls[:, 0], tr.controls[:, 1]
print("speed range [%.3f, %.3f], turn rate range [%.2f, %.2f]" % (v.min(), v.max(), omega.min(), omega.max()))
