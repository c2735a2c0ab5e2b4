"""
How fast deviations of the empirical risk die out.

For a fair mix of two point masses the deviation probability can be summed
exactly from the binomial law, so -log(p_n)/n can be followed to large n and
compared with the decay constant from the rate function. A Monte Carlo run at
small n shows agreement with the exact values.
"""

from mixldp import Mean, RateProblem, SimulationPlan, decay_slope, exact_tail_probability, point_mass, tail_probability

problem = RateProblem(Mean(), (point_mass(0.0), point_mass(1.0)), [0.5, 0.5])
delta = 0.25

exact = decay_slope(SimulationPlan(problem, delta, (50, 100, 150, 200, 400, 800, 1600, 3200)), exact=True)
print(f"h_delta = {exact.h_delta_reference:.6f}")
for pt in exact.per_n:
    print(f"  n={pt.n:5d}  p_n={pt.estimate:.3e}  -log(p_n)/n={pt.minus_log_p_over_n:.6f}")
# n not divisible by 4 has no atom exactly at distance delta, which shows up as small bumps
print(f"regression slope over n: {exact.slope:.6f}")

plan = SimulationPlan(problem, delta, (20, 40), replicas=400_000, seed=1)
for n in plan.n_grid:
    p, se = tail_probability(plan, n)
    print(f"n={n}: Monte Carlo {p:.5f} +- {se:.5f}, exact {exact_tail_probability(problem, delta, n):.5f}")
