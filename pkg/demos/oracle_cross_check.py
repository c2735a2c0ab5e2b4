"""
Brute-force check of the rate function on a simplex grid.

The grid oracle minimises relative entropy over all weights k/m that satisfy
the constraint up to a band, without using multipliers. The deviation shrinks
roughly like 1/m.
"""

import numpy as np

from mixldp import GridSpec, Mean, RateProblem, grid_min_condition, point_mass, psi_profile, rate_value

problem = RateProblem(Mean(), tuple(point_mass(float(k)) for k in range(3)), np.full(3, 1 / 3))
rs = np.linspace(0.0, 2.0, 7)[1:-1]

for m in (25, 50, 100, 200, 400):
    devs = []
    for r in rs:
        res = grid_min_condition(psi_profile(problem.rho, problem.components, r), problem.pi, GridSpec(m))
        devs.append(abs(res.min_entropy - rate_value(problem, r)))
    print(f"m={m:4d}  grid size={GridSpec(m).size(3):6d}  max deviation={max(devs):.5f}  m*dev={m * max(devs):.3f}")
