"""Which delay gives the largest admissible drift, and how it scales with the rate.

The optimum sits at delta* lambda = 2.2203 for every rate, and the best
amplitude grows like the square root of lambda.
"""

from delaycluster import conjecture_check, reproduce_table
from delaycluster.optimize import TABLE_LAMBDAS

records = reproduce_table(TABLE_LAMBDAS)
print("lambda      delta*        b1*")
for r in records:
    print(f"{r.lam:<8g}  {r.delta_star:.6g}  {r.b1_star:.6g}")

c = conjecture_check(records)
print(f"\ndelta* lambda      = {c.delta_lambda_mean:.7f}  (spread {c.delta_lambda_spread:.1e})")
print(f"b1* / sqrt(lambda) = {c.b1_over_sqrt_lambda_mean:.7f}  (spread {c.b1_over_sqrt_lambda_spread:.1e})")
