"""Randomised checks of the elementary and Hoelder-type inequalities behind the bounds."""

from delaycluster import inequality_suite, verify_generalized_hoelder

for report in (inequality_suite(5000), verify_generalized_hoelder(5000)):
    for c in report.checks:
        print(f"{c.name:18s} trials {c.trials:5d}  violations {c.violations}  worst ratio {c.worst_ratio:.6f}")
