"""End-to-end matched gluing in the flat radial model.

The full pipeline: pick the neck solution near the singular point,
the Lambda-weighted exterior model solution away from it, correct the
interior nonlinearly, then tune the offset b and exterior weight Lambda
until value and derivative of both sides meet at the gluing sphere.
This script runs the pipeline at three neck sizes, prints the fixed
points and the residual gaps, and writes the matched conformal factor
as plot-ready CSV.
"""

import numpy as np

from sigma2glue import (
    GluingConfig,
    GluingState,
    glue_demo,
    interior_picard,
    solve_constant_system,
    solve_coordinate_system,
)
from sigma2glue.reporting import write_csv

# the transmission system in the constant mode: with zero measured data
# the fixed point is the closed-form normalization (b, Lambda) =
# (0, eps^((n-4)/2)/4)
cfg = GluingConfig(n=5, eps=0.05, s=0.1)
b0, lam0, _ = solve_constant_system(cfg, 0.0, 0.0)
print(f"zero-data fixed point: b = {b0}, Lambda = {lam0:.10f} "
      f"(closed form {cfg.eps**0.5 / 4:.10f})")

# degree-1 data is absorbed by the center and tilt parameters through a
# 2x2 linear response per coordinate
rng = np.random.default_rng(3)
a, om, rep = solve_coordinate_system(cfg, 0.0, 1e-3 * rng.standard_normal(5),
                                     1e-3 * rng.standard_normal(5))
print(f"coordinate system on random degree-1 data: residual {rep['residual']:.2e}")

# nonlinear interior correction: a boundary datum is lifted through the
# homogeneous mode-0 solve and the quadratic feedback is contracted
# away; the converged correction scales quadratically with the datum
print("\ninterior Picard correction (quadratic in the datum):")
for datum in (0.01, 0.005, 0.0025):
    _, _, prep = interior_picard(cfg, GluingState(), datum=datum)
    print(f"  datum={datum:<7} iterations={prep['iterations']}  "
          f"sup U = {prep['sup_U']:.3e}")

# the full pipeline at three neck sizes
print("\nmatched gluing at s = 0.1:")
print("eps     b            Lambda        gap(value)  gap(deriv)  "
      "completeness  sup|U-1| far")
reports = {}
for eps in (0.1, 0.05, 0.025):
    rep = glue_demo(GluingConfig(n=5, eps=eps, s=0.1))
    reports[eps] = rep
    print(f"{eps:<6}  {rep['b']:+.8f}  {rep['Lambda']:.10f}  "
          f"{abs(rep['gaps']['l0_value']):.2e}    {abs(rep['gaps']['l0_deriv']):.2e}    "
          f"{rep['completeness_min']:.4f}        {rep['sup_background_distance']:.5f}")

# the matched factor approaches the background as the neck shrinks and
# the product U |x|^m stays bounded below (complete metric); dump the
# eps = 0.05 factor for plotting
rep = reports[0.05]
write_csv("matched_factor_demo.csv", {"r": rep["grid_r"], "U": rep["factor"]})
print(f"\nwrote matched_factor_demo.csv "
      f"({rep['grid_r'].size} rows spanning [{rep['grid_r'][0]:.2e}, {rep['grid_r'][-1]:.2f}])")
print(f"exterior model residual {rep['exterior_residual']:.1e}")
