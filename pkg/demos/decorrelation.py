"""Covariance decay of a delay-perturbed trajectory against the unperturbed one.

A small drift depending on the occupation time of the last delay window leaves
the exponential decay essentially intact. The time-average CLT variance is
checked against many independent replicas.
"""

import math

from delaycluster import DriftSpec, OUParams, SimConfig, clt_check, estimate_covariance, simulate_delay, simulate_reference
from delaycluster.ergodicity import observable

p = OUParams(1.0, math.sqrt(2.0))
cfg = SimConfig(dt=0.01, horizon=5000.0)
x = observable("identity")

for label, path in (
    ("reference", simulate_reference(p, cfg)),
    ("perturbed", simulate_delay(p, DriftSpec("occupation_time", 1.0, 0.05), cfg)),
):
    fit = estimate_covariance(path, x, x, 5.0).fit
    print(f"{label}: cov(s) ~ {fit.theta1:.3f} exp(-{fit.theta2:.3f} s), r2 = {fit.r2:.4f}")

rep = clt_check(p, DriftSpec("zero", 1.0, 0.0), SimConfig(dt=0.01, horizon=200.0), x, replicas=300)
print(f"\nvariance of sqrt(T) * time average: {rep.empirical_variance:.3f} (exact 2)")
print(f"Green-Kubo estimate from the same runs: {rep.green_kubo:.3f}")
