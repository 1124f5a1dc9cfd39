"""
Interval sensitivity
====================

Vary one parameter over an interval (spacing 0.01), collect the fan of I(t)
curves and call the interval sensitive when the pointwise mean square error
exceeds 1e-4 somewhere. Pass ``--table`` to run every reference row
(a few minutes on one core).
"""

import os
import sys

from epidde.experiments import check_reference_verdicts, sensitivity_scan
from epidde.svg import plot_svg

out = os.environ.get("EPIDDE_OUT", "demo-output")
os.makedirs(out, exist_ok=True)

for name, interval in (("mu", (0.0, 0.5)), ("mu", (0.5, 2.5)), ("epsilon", (0.0, 0.5))):
    res = sensitivity_scan(name, interval, jobs=os.cpu_count() or 1)
    print(f"{name} in {interval}: max MSE = {res.max_mse:.3e} -> {res.verdict}")

plot_svg([(f"{res.parameter}={v:g}", res.times, res.fan[k])
          for k, v in enumerate(res.values)][::10],
         os.path.join(out, "sensitivity_fan.svg"), xlabel="t (days)", ylabel="I")
plot_svg([("mean", res.times, res.mean), ("MSE", res.times, res.mse)],
         os.path.join(out, "sensitivity_mse.svg"), xlabel="t (days)", ylabel="")

if "--table" in sys.argv:
    for row in check_reference_verdicts(jobs=os.cpu_count() or 1):
        print(f"{row['parameter']:>8} {row['interval']}: {row['verdict']:<11} "
              f"reference {'sensitive' if row['expected_sensitive'] else 'insensitive':<11} "
              f"{'match' if row['match'] else 'MISMATCH'}")
