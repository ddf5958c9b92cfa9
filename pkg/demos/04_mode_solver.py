"""Mode-by-mode linear theory on the cylinder.

Projecting the linearized operator onto spherical harmonics of degree
ell turns it into a family of second-order ODE operators in t.  This
script shows their three structural facts: the geometric Jacobi fields
lie in the kernel, the overall constant calibrates to the same value in
every direction, and the two-point solver is an honest right inverse
with eps-uniform weighted bounds, stable under small tilts of the
background.
"""

import numpy as np

from sigma2glue import (
    DelaunayParams,
    FamilyParams,
    ModeOperator,
    apply_mode,
    calibrate_Cnk,
    integrate_orbit,
    perturbed_inverse,
    solve_mode_bvp,
)
from sigma2glue.linearized import default_Cnk

orb = integrate_orbit(DelaunayParams(5, 2), 0.1, t_max=15.0, tol=1e-10)
m = orb.params.m
t = np.linspace(-3.0, 3.0, 901)

# kernel check: d/dt of the orbit kills the ell=0 operator, the tilt
# profile e^-t (m v - vdot) kills ell=1 (exact derivatives supplied)
op0 = ModeOperator(orbit=orb, ell=0, grid=t)
r0 = np.max(np.abs(apply_mode(op0, orb.vdot(t), orb.vddot(t), orb.vdddot(t))))
E = np.exp(-t)
f1, f1d, f1dd = (m * orb.v(t) - orb.vdot(t), m * orb.vdot(t) - orb.vddot(t),
                 m * orb.vddot(t) - orb.vdddot(t))
op1 = ModeOperator(orbit=orb, ell=1, grid=t)
r1 = np.max(np.abs(apply_mode(op1, E * f1, E * (f1d - f1), E * (f1dd - 2 * f1d + f1))))
print(f"kernel residuals: translation (ell=0) {r0:.2e}, tilt (ell=1) {r1:.2e}")

# the factored operator carries one overall constant; fitting it from
# the orbit in any mode or window returns the closed-form value
print(f"\ncalibrated constant vs closed form {default_Cnk(5):+.4f}:")
for ell in (0, 1, 2):
    print(f"  ell={ell}:  {calibrate_Cnk(orb, ell=ell):+.10f}")

# manufactured right-inverse check: apply then solve, compare sup error
ts = np.linspace(0.0, 4.0, 2001)
op2 = ModeOperator(orbit=orb, ell=2, grid=ts)
w0 = np.sin(1.7 * ts) * np.exp(-0.3 * (ts - 2.0) ** 2)
w, rep = solve_mode_bvp(op2, apply_mode(op2, w0), bc=(w0[0], w0[-1]))
print(f"\nmanufactured solve: sup |w - w_true| = {np.max(np.abs(w - w0)):.2e}, "
      f"defect residual = {rep['residual']:.2e}")

# the weighted norm ratio reported by the solver is the measured
# surrogate of the a-priori bound; it stays flat as eps halves
tt = np.linspace(0.0, 3.0, 1501)
load = np.exp(-1.5 * (tt - 1.5) ** 2)
print("\nweighted-norm ratio at gamma = 0.5 (eps-uniform):")
for eps in (0.2, 0.1, 0.05):
    o = integrate_orbit(DelaunayParams(5, 2), eps, t_max=15.0, tol=1e-10)
    _, r = solve_mode_bvp(ModeOperator(orbit=o, ell=0, grid=tt), load, gamma=0.5)
    print(f"  eps={eps:<5} ratio={r['norm_ratio']:.6f}")

# tilted background: the inverse is rebuilt as a correction series whose
# increments decay geometrically while the tilt stays under the guard
fam = FamilyParams(base=DelaunayParams(5, 2), eps=0.1, R=0.5, a=(0.04, 0, 0, 0, 0))
tp = np.linspace(0.0, 2.0, 1001)
fp = np.exp(-2 * (tp - 1.0) ** 2) * np.sin(2 * tp)
_, rep = perturbed_inverse(fam, 1, fp, window=(0.0, 2.0), num=1001, tol=1e-10)
print(f"\nperturbed inverse at |a| = 0.04: {rep['terms']} terms, "
      f"increment ratios {[f'{x:.2e}' for x in rep['ratios']]}, "
      f"residual {rep['residual']:.2e}")
