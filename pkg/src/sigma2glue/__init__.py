"""Constructive numerics for gluing singular sigma_2-Yamabe metrics.

Layers, bottom up:

- delaunay: periodic neck orbits of the radial cylinder ODE (conserved
  energy, cancellation-safe right-hand side, dense output).
- operators: the fully nonlinear curvature operator and its
  linearization at radial backgrounds, on the punctured ball and on the
  cylinder, with the equivariance bridge between the two pictures.
- family: the (n+2)-parameter family of singular solutions
  (neck parameter, dilation, tilt), its expansions and Jacobi fields.
- spaces: spherical-harmonic splitting, harmonic extensions, patch
  construction, and the weighted Hoelder norm surrogate.
- linearized: mode-by-mode linearized operators on the cylinder,
  normalization calibration, banded two-point solves, and the
  perturbation series for tilted backgrounds.
- gluing: interior/exterior model problems, transmission systems for
  the low modes, and the end-to-end matched gluing demo.
- reporting, cli: deterministic artifacts (CSV/JSON) and the command
  line front end.
"""

from .delaunay import (
    DelaunayOrbit,
    DelaunayParams,
    hamiltonian,
    integrate_orbit,
    period,
    rhs_second_order,
    separatrix,
    verify_neck_estimates,
)
from .family import FamilyParams, eval_family, get_orbit
from .gluing import (
    GluingConfig,
    GluingState,
    cauchy_mismatch,
    glue_demo,
    interior_picard,
    solve_constant_system,
    solve_coordinate_system,
)
from .linearized import (
    ModeOperator,
    annulus_mode_solve,
    apply_mode,
    calibrate_Cnk,
    mode_coefficients,
    perturbed_inverse,
    solve_mode_bvp,
)
from .operators import RadialField, evaluate_H, evaluate_L, evaluate_Q

__version__ = "0.1.0"

__all__ = [
    "DelaunayParams",
    "DelaunayOrbit",
    "hamiltonian",
    "rhs_second_order",
    "integrate_orbit",
    "period",
    "separatrix",
    "verify_neck_estimates",
    "FamilyParams",
    "eval_family",
    "get_orbit",
    "RadialField",
    "evaluate_H",
    "evaluate_L",
    "evaluate_Q",
    "ModeOperator",
    "mode_coefficients",
    "apply_mode",
    "solve_mode_bvp",
    "calibrate_Cnk",
    "perturbed_inverse",
    "annulus_mode_solve",
    "GluingConfig",
    "GluingState",
    "solve_constant_system",
    "solve_coordinate_system",
    "interior_picard",
    "cauchy_mismatch",
    "glue_demo",
    "__version__",
]
