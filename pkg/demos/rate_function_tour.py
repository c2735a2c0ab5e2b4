"""
Rate functions for a few risk measures of two-point and exponential mixtures.

Prints the rate function on a grid for the mean of a fair mix of two point
masses, the 0.95-quantile of an exponential mixture and an entropic risk, and
shows which branch each level falls in.
"""

import numpy as np

from mixldp import (
    Entropic,
    Exponential,
    Mean,
    Quantile,
    RateProblem,
    curvature,
    point_mass,
    rate,
    support_bounds,
)

problems = {
    "mean, {0, 1}": RateProblem(Mean(), (point_mass(0.0), point_mass(1.0)), [0.5, 0.5]),
    "VaR 0.95, Exp(1)/Exp(2)": RateProblem(Quantile(0.95), (Exponential(1.0), Exponential(2.0)), [0.3, 0.7]),
    "entropic, {0, 1}": RateProblem(Entropic(1.0), (point_mass(0.0), point_mass(1.0)), [0.5, 0.5]),
}

for name, problem in problems.items():
    b = support_bounds(problem)
    print(f"\n{name}: r0={b.r0:.6f}, support=[{b.lower:.6f}, {b.upper:.6f}], H''(r0)={curvature(problem):.6f}")
    width = b.upper - b.lower
    for r in np.linspace(b.lower - 0.1 * width, b.upper + 0.1 * width, 13):
        res = rate(problem, r)
        lam = "" if res.lambda_star is None else f"  lambda*={res.lambda_star:+.4f}"
        print(f"  r={r:8.4f}  H={res.value:9.6f}  {res.branch.value:<15}{lam}")

# Near r0 the rate function is quadratic with the printed curvature.
p = problems["VaR 0.95, Exp(1)/Exp(2)"]
for d in (0.1, 0.01, 0.001):
    h = rate(p, p.r0 + d).value
    print(f"d={d:<6} H(r0+d)/d^2 = {h / d**2:.6f}  (half curvature {curvature(p) / 2:.6f})")
