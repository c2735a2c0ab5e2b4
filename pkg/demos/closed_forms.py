"""
The tilted solution against the explicit two- and three-component formulas.
"""

import numpy as np

from mixldp import (
    Mean,
    RateProblem,
    point_mass,
    rate_closed_s2,
    rate_closed_s3_affine,
    rate_value,
    support_bounds,
)

two = RateProblem(Mean(), (point_mass(0.0), point_mass(1.0)), [0.3, 0.7])
b = support_bounds(two)
rs = np.linspace(b.lower, b.upper, 9)[1:-1]
print("two components, pi=(0.3, 0.7)")
for r in rs:
    # for two point masses the rate is the Bernoulli relative entropy
    bern = r * np.log(r / 0.7) + (1 - r) * np.log((1 - r) / 0.3)
    print(f"  r={r:.3f}  tilt={rate_value(two, r):.12f}  closed={rate_closed_s2(two, r):.12f}  bernoulli={bern:.12f}")

three = RateProblem(Mean(), tuple(point_mass(float(k)) for k in range(3)), [0.2, 0.5, 0.3])
print("\nthree equally spaced atoms, pi=(0.2, 0.5, 0.3)")
for r in np.linspace(0.0, 2.0, 9)[1:-1]:
    closed = rate_closed_s3_affine(lambda x: -x, 1.0, three.pi, r)
    print(f"  r={r:.3f}  tilt={rate_value(three, r):.12f}  closed={closed:.12f}")
