"""How far the Ornstein-Uhlenbeck transition density strays from equilibrium.

The L^k norm of the relative density is finite only once (k - 1) e^{-lambda t} < 1,
so higher moments need longer waits. M_delta, the worst of the eighth-moment
norm and 1, is what the cluster bounds consume.
"""

import math
import warnings

from delaycluster import OUParams, lk_norm_closed, lk_norm_quadrature, m_delta
from delaycluster.ou import UnreliableQuadratureWarning

p = OUParams(lam=1.0, sigma=math.sqrt(2.0))

print("k   lambda*t   closed form      quadrature")
for k in (2, 4, 8):
    for t in (0.5, 1.0, 2.0, 4.0):
        closed = lk_norm_closed(t, k, p)
        if math.isinf(closed):
            # quadrature of a divergent integral returns a huge finite number and warns
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", UnreliableQuadratureWarning)
                lk_norm_quadrature(t, k, p)
            print(f"{k}   {t:8.1f}   {'diverges':>14}   flagged: {bool(caught)}")
            continue
        print(f"{k}   {t:8.1f}   {closed:14.10f}   {lk_norm_quadrature(t, k, p):14.10f}")

print()
for delta in (2.0, 3.0, 5.0, 10.0):
    print(f"M_delta at delta = {delta:4.1f}: {m_delta(delta, p):.6f}")
print(f"below delta = ln 7 = {math.log(7):.4f} the eighth moment diverges: {m_delta(1.9, p)}")
