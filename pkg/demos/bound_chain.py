"""From a target accuracy epsilon to admissible block length and drift size.

For each epsilon the block length a_eps and drift amplitude b_eps are chosen so
that each of the two per-site contributions equals epsilon^4 / 16; eight of
each then exhaust the epsilon^4 budget.
"""

import math

from delaycluster import OUParams, bj_bound, bound_report, cj_bound, hypothesis_constants

h = hypothesis_constants(OUParams(1.0, math.sqrt(2.0)), delta=2.0)
print(f"M_delta = {h.m_delta:.6f}, epsilon0 = {bound_report(1.0, h).epsilon0:.4f}\n")

print("epsilon   a_eps      b_eps        8B + 8C over epsilon^4")
for eps in (0.25, 0.5, 1.0, 2.0):
    r = bound_report(eps, h)
    budget = 8 * bj_bound(r.a_eps, r.b_eps, h) + 8 * cj_bound(r.a_eps, h)
    print(f"{eps:7.2f}   {r.a_eps:7.4f}   {r.b_eps:.6e}   {budget / eps**4:.15f}")
