"""
Expected shortfall is only handled when all components share the alpha-quantile.

Two centred Gaussians share their median, so ES at level 0.5 mixes linearly and
its rate function is that of a mean over the component ES values. An
exponential mixture has distinct 0.95-quantiles and is rejected.
"""

import numpy as np

from mixldp import (
    ConditionUnsupported,
    ExpectedShortfall,
    Exponential,
    Gaussian,
    Mean,
    RateProblem,
    law_risk,
    point_mass,
    rate_value,
    support_bounds,
)

try:
    RateProblem(ExpectedShortfall(0.95), (Exponential(1.0), Exponential(2.0)), [0.3, 0.7])
except ConditionUnsupported as exc:
    print("rejected:", exc)

rho = ExpectedShortfall(0.5)
comps = (Gaussian(0.0, 1.0), Gaussian(0.0, 2.0))
es = RateProblem(rho, comps, [0.4, 0.6])
atoms = RateProblem(Mean(), tuple(point_mass(law_risk(rho, c)) for c in comps), [0.4, 0.6])
b = support_bounds(es)
print(f"component ES values: {b.lower:.6f}, {b.upper:.6f}; r0={b.r0:.6f}")
for r in np.linspace(b.lower, b.upper, 7)[1:-1]:
    print(f"  r={r:.4f}  ES problem H={rate_value(es, r):.10f}  mean-of-atoms H={rate_value(atoms, r):.10f}")
