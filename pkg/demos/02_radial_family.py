"""The finite-dimensional family of singular radial solutions.

Transporting the cylinder orbit back to the punctured ball gives
u(x) = |x|^-m v(-log|x| + log R): a complete singular solution for every
neck size eps and scale R.  Tilting the singularity axis by a vector a
extends this to an (n+2)-parameter family.  This script evaluates a
member, confirms it solves the equation, inspects the two-term expansion
at the gluing radius, and differentiates the family to get the Jacobi
fields the linear theory is built around.
"""

import numpy as np

from sigma2glue import DelaunayParams, FamilyParams, eval_family, get_orbit
from sigma2glue.family import (
    ball_expansion_report,
    expansion_residual_a,
    mode1_jacobi_field,
    radial_derivatives,
)
from sigma2glue.operators import RadialField, evaluate_H, flat_background

base = DelaunayParams(5, 2)

# the offset parameter b fixes R through R^-m = 2(1+b) eps^-m, the
# normalization under which the constant mode of u at the gluing sphere
# starts at 1 + b
fam = FamilyParams(base=base, eps=0.1, b=0.0, s=0.1)
print(f"eps={fam.eps}  b=0  ->  R={fam.R:.6f}  gluing radius r_eps={fam.r_eps:.6f}")

# the member solves the curvature equation: sample it with exact radial
# derivatives and push it through the nonlinear operator
r = np.geomspace(0.05, 1.0, 400)
orbit = get_orbit(fam)
u, ru, rru = radial_derivatives(fam, r, orbit=orbit)
fld = RadialField(grid=r, u=u, du=ru / r, d2u=rru / r**2, background=flat_background())
print(f"sup |H(u)| on [0.05, 1] = {np.max(np.abs(evaluate_H(fld, base.n))):.2e}")

# near r_eps the member is 1 + b + Lambda_int r^(2-n/2) plus a
# controlled remainder; the report normalizes the remainder by the
# next-order weight so bounded constants certify the expansion
print("\ntwo-term expansion constants at the neck scale:")
for eps in (0.2, 0.1, 0.05):
    fp = FamilyParams(base=base, eps=eps, b=0.0)
    rep = ball_expansion_report(fp, np.geomspace(fp.R, 1.0, 200))
    print(f"eps={eps:<5} c_u={rep['c_u']:.5f}  c_du={rep['c_du']:.5f}  "
          f"c_d2u={rep['c_d2u']:.5f}")

# tilting: u_{eps,R,a}(x) = u(|x|) + (2m u + r u')(a.x) + O(|a|^2);
# the residual of the first-order model, divided by |a|^2 and the
# radial weight, stays bounded as the tilt shrinks
fam0 = FamilyParams(base=base, eps=0.1, R=0.5)
x = np.array([0.3, 0.2, 0.1, 0.0, 0.1])
print("\nfirst-order tilt expansion, |a|^2-normalized remainder:")
for amag in (0.02, 0.01, 0.005):
    fam_a = FamilyParams(base=base, eps=0.1, R=0.5, a=(amag, 0, 0, 0, 0))
    rep = expansion_residual_a(fam_a, x)
    print(f"|a|={amag:<6} remainder = {rep['eq_first_order']:.6f}")

# differentiating the family in the tilt direction gives the degree-one
# Jacobi field; its radial profile has the closed form r^(1-m)(m v - vdot)
orb0 = get_orbit(fam0)
w = mode1_jacobi_field(fam0, np.array([fam0.r_eps]), orbit=orb0)
t_at = -np.log(fam0.r_eps) + np.log(fam0.R)
closed = fam0.r_eps ** (1 - base.m) * (base.m * orb0.v(t_at) - orb0.vdot(t_at))
print(f"\nmode-1 Jacobi field at r_eps: {w.u[0]:+.8f} (closed form {closed:+.8f})")
