# What the density looks like around the two discs of the car scenario.
# rho is zero on the discs, rises through the sensing shell and grows
# without bound toward the target. A coarse character map is enough to see it.

import numpy as np

from cdfnav.scenario import load_scenario

sc = load_scenario("dubin.scenario")
df = sc.density
print("target", df.target, "obstacles", [(o.center, o.r_unsafe, o.r_sense) for o in df.obstacles])

xs = np.linspace(-1, 13, 57)
ys = np.linspace(5, -5, 21)
shades = " .:-=+*#%@"

for y in ys:
    line = ""
    for x in xs:
        p = np.array([x, y])
        if df.in_unsafe(p):
            line += "X"
        elif np.linalg.norm(p - df.target) <= 0.3:
            line += "T"
        else:
            # log scale, rho spans a few decades
            r = np.log10(df.rho(p))
            line += shades[int(np.clip((r + 0.6) / 0.15, 0, len(shades) - 1))]
    print(line)

# gradient points uphill, i.e. toward the target and away from the discs
for p in ([0.0, 0.0], [5.3, 2.0], [10.0, -2.0]):
    g = df.grad_rho(p)
    print(p, "rho=%.4f" % df.rho(p), "grad direction", np.round(g / np.linalg.norm(g), 3))
