"""Matching systems, interior Picard, exterior model, end-to-end demo."""

import numpy as np
import pytest

from sigma2glue.errors import (
    ContractionFailed,
    GridMismatch,
    NotRadial,
    OutsideDomain,
    RangeViolation,
)
from sigma2glue.family import get_orbit, radial_derivatives
from sigma2glue.gluing import (
    F_G_coefficients,
    GluingConfig,
    GluingState,
    ModelBackground,
    cauchy_mismatch,
    exterior_green_correction,
    exterior_mode_solve,
    exterior_model_constants,
    glue_demo,
    interior_correction_h,
    interior_picard,
    mode1_norm_constant,
    phi_theta_map,
    radial_matching_data,
    solve_constant_system,
    solve_coordinate_system,
)
from sigma2glue.operators import RadialField, cylinder_background, evaluate_H
from sigma2glue.spaces import HarmonicCoeffs


CFG = GluingConfig(n=5, eps=0.05)


# ---------------------------------------------------------------- config


def test_config_derived_quantities():
    assert CFG.r_eps == pytest.approx(0.05**0.1)
    assert CFG.lambda_bound == pytest.approx(CFG.r_eps ** ((5 + 0.1 + 0.05) / 2))
    # exponent hypotheses hold at the defaults
    assert 3 * CFG.delta2 > max(CFG.delta1, CFG.l)
    assert CFG.l > max(CFG.delta5, 2 * CFG.delta4)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(s=1.0),
        dict(s=0.0),
        dict(eps=0.7),  # beyond the orbit existence window at (5, 2)
        dict(l=0.04),  # l <= max(delta5, 2 delta4)
        dict(delta2=0.03),  # 3 delta2 <= max(delta1, l)
        dict(nu=-2.0),  # outside (1-n, 2-n)
        dict(eta=0.0),
    ],
)
def test_config_guards(kwargs):
    base = dict(n=5, eps=0.05)
    base.update(kwargs)
    with pytest.raises((OutsideDomain, ValueError)):
        GluingConfig(**base)


def test_state_range_checks():
    GluingState(b=0.2, Lambda=0.1).check(CFG)
    with pytest.raises(OutsideDomain):
        GluingState(b=0.6).check(CFG)
    with pytest.raises(OutsideDomain):
        GluingState(Lambda=1.0).check(CFG)
    with pytest.raises(OutsideDomain):
        GluingState(a=(1.1, 0, 0, 0, 0)).check(CFG)
    with pytest.raises(OutsideDomain):
        GluingState(omega=(0.9, 0, 0, 0, 0)).check(CFG)


def test_model_background_requires_quadratic_vanishing():
    ModelBackground(5)  # flat model
    ModelBackground(5, fbar=lambda r: r**2)
    with pytest.raises(ValueError):
        ModelBackground(5, fbar=lambda r: 1.0 + r**2)
    with pytest.raises(ValueError):
        ModelBackground(5, fbar=lambda r: r)  # first-order term survives


# ------------------------------------------------- interior correction h


def test_h_zero_without_background_remainder():
    rho = np.linspace(0.1, 0.7, 20)
    np.testing.assert_array_equal(interior_correction_h(CFG, None, rho), 0.0)


def test_h_value_at_gluing_radius():
    # f(rho) = rho^2: the two bracket terms recombine to f itself at rho = r
    r = CFG.r_eps
    h = interior_correction_h(CFG, lambda rho: rho**2, np.array([r]))
    assert h[0] == pytest.approx(r**2, rel=1e-13)


def test_h_homogeneity_matches_display():
    # h(rho; r) built from f = rho^2 scales like lambda^2 under
    # (rho, r) -> (lam rho, lam r), inherited from the display
    cfg_big = GluingConfig(n=5, eps=0.05, s=0.05)
    lam = cfg_big.r_eps / CFG.r_eps
    rho = np.linspace(0.2, 0.7, 9)
    h1 = interior_correction_h(CFG, lambda x: x**2, rho)
    h2 = interior_correction_h(cfg_big, lambda x: x**2, lam * rho)
    np.testing.assert_allclose(h2, lam**2 * h1, rtol=1e-12)


def test_h_vanishing_order():
    gb = CFG.gammabar
    rho = np.array([1e-3, 2e-3])
    h = interior_correction_h(CFG, lambda x: x**2, rho)
    # the slow branch is rho^(gammabar - 1) * f = O(rho^(gammabar + 1))
    assert abs(h[1] / h[0]) < 2.0 ** (gb + 1) * 1.01


# ------------------------------------------------------ F, G coefficients


def test_F_G_against_direct_orbit_evaluation():
    n = 5
    fam = CFG.family(b=0.1)
    orbit = get_orbit(fam)
    u, ru, rru = radial_derivatives(fam, np.array([CFG.r_eps]), orbit=orbit)
    out = F_G_coefficients(CFG, 0.1)
    assert out["F"] == pytest.approx((n - 4) / 2 * u[0] + ru[0], rel=1e-12)
    assert out["G"] == pytest.approx((n - 4) / 2 * u[0] + n / 2 * ru[0] + rru[0], rel=1e-12)
    assert out["det"] == pytest.approx(out["G"] + (n - 1) * out["F"], rel=1e-14)


@pytest.mark.parametrize("n,eps", [(5, 0.005), (7, 0.05), (9, 0.05)])
def test_F_limit_constant_small_eps(n, eps):
    # both r^(2-n/2) branches cancel in F, leaving (n-4)(1+b)/2; at small
    # eps and s large enough the O(r^2) remainder is visible but small
    cfg = GluingConfig(n=n, eps=eps, s=0.5)
    b = 0.2
    out = F_G_coefficients(cfg, b)
    assert out["F"] == pytest.approx((n - 4) * (1 + b) / 2, rel=0.05)
    assert out["det"] == pytest.approx(n * (n - 4) * (1 + b) / 2, rel=0.05)
    assert out["det"] > 0


def test_F_deviation_follows_square_of_radius():
    # the relative defect of F against its limit shrinks ~ r^2 as s grows
    defects = []
    for s in (0.2, 0.35, 0.5):
        cfg = GluingConfig(n=5, eps=0.05, s=s)
        out = F_G_coefficients(cfg, 0.0)
        defects.append(abs(out["F"] - 0.5) / 0.5 / cfg.r_eps**2)
    assert max(defects) / min(defects) < 3.0


# ------------------------------------------------- constant-mode system


def test_constant_system_trivial():
    b, lam, rep = solve_constant_system(CFG, 0.0, 0.0)
    assert b == 0.0
    assert lam == pytest.approx(CFG.eps**0.5 / 4, rel=1e-14)
    assert rep["method"] == "picard"


def test_constant_system_synthetic_fixed_point():
    # config chosen so both b = r^(2+l) <= 1/2 and the matched Lambda
    # scale sit inside the admissible region (needs s <= (n-4)/(n+l+d5))
    cfg = GluingConfig(n=5, eps=0.01)
    H0 = cfg.r_eps ** (2 + cfg.l)
    b, lam, rep = solve_constant_system(cfg, H0, 0.0)
    assert b == pytest.approx(H0, rel=1e-12)
    assert lam == pytest.approx(cfg.eps**0.5 / (4 * (1 + b)), rel=1e-12)
    assert rep["residual"] <= 1e-12


def test_constant_system_contraction_ratio():
    cfg = GluingConfig(n=5, eps=0.01)
    _, _, rep = solve_constant_system(cfg, cfg.r_eps ** (2 + cfg.l), 1e-3)
    assert rep["method"] == "picard"
    assert all(r <= 0.5 for r in rep["ratios"])


def test_constant_system_rejects_large_data():
    with pytest.raises(OutsideDomain):
        solve_constant_system(GluingConfig(n=5, eps=0.01), 0.6, 0.0)


def test_constant_system_derivative_coupling():
    # nonzero dH0 shifts both components by the displayed multiples
    cfg = GluingConfig(n=5, eps=0.01)
    n, r = 5, cfg.r_eps
    d0 = 1e-3
    b, lam, _ = solve_constant_system(cfg, 0.0, d0)
    assert b == pytest.approx(2 * r / (n - 4) * d0, rel=1e-12)
    assert lam == pytest.approx(
        cfg.eps**0.5 / (4 * (1 + b)) + 2 * r ** (n / 2 - 1) / (n - 4) * d0, rel=1e-12
    )


# ----------------------------------------------- coordinate-mode system


def test_coordinate_system_trivial():
    a, om, rep = solve_coordinate_system(CFG, 0.0, np.zeros(5), np.zeros(5))
    np.testing.assert_array_equal(a, 0.0)
    np.testing.assert_array_equal(om, 0.0)
    assert rep["residual"] == 0.0


def test_coordinate_system_matches_direct_2x2_solve():
    rng = np.random.default_rng(7)
    n, r = 5, CFG.r_eps
    H = 1e-3 * rng.standard_normal(n)
    dH = 1e-3 * rng.standard_normal(n)
    a, om, rep = solve_coordinate_system(CFG, 0.0, H, dH)
    F, G = rep["F"], rep["G"]
    for i in range(n):
        mat = np.array([[F, -1.0], [G, -(1.0 - n)]])
        ra_i, om_i = np.linalg.solve(mat, [H[i], r * dH[i]])
        assert a[i] == pytest.approx(ra_i / r, rel=1e-10, abs=1e-14)
        assert om[i] == pytest.approx(om_i, rel=1e-10, abs=1e-14)
    assert rep["residual"] <= 1e-8


def test_coordinate_system_determinant_positive():
    for n, eps in [(5, 0.05), (7, 0.05), (9, 0.1)]:
        out = F_G_coefficients(GluingConfig(n=n, eps=eps), 0.0)
        assert out["det"] > 0


def test_coordinate_system_rejects_large_data():
    with pytest.raises(OutsideDomain):
        solve_coordinate_system(CFG, 0.0, 0.3 * np.ones(5), np.zeros(5))


def test_mode1_norm_constant_positive():
    k5 = mode1_norm_constant(5)
    assert k5 > 1.0
    assert mode1_norm_constant(7) != k5


# --------------------------------------------------------- phi_theta map


def test_phi_theta_radial_member_projects_to_zero():
    phi = phi_theta_map(GluingState(), CFG)
    assert all(abs(c) < 1e-12 for _, _, c in phi.modes)


def test_phi_theta_passes_theta_through():
    theta = HarmonicCoeffs(5, CFG.r_eps, ((2, 0, 1e-4), (3, 1, -2e-5)))
    phi = phi_theta_map(GluingState(theta=theta), CFG)
    got = {(l, m): c for l, m, c in phi.modes}
    assert got[(2, 0)] == pytest.approx(1e-4, abs=1e-12)
    assert got[(3, 1)] == pytest.approx(-2e-5, abs=1e-12)


def test_phi_theta_tilt_projection_quadratic():
    coeffs = []
    for amp in (2e-3, 1e-3):
        phi = phi_theta_map(GluingState(a=(amp, 0, 0, 0, 0)), CFG)
        got = {(l, m): c for l, m, c in phi.modes}
        coeffs.append(got.get((2, 0), 0.0))
    assert coeffs[0] / coeffs[1] == pytest.approx(4.0, rel=0.05)


def test_phi_theta_range_violation():
    theta = HarmonicCoeffs(5, CFG.r_eps, ((2, 0, 0.3),))
    with pytest.raises(RangeViolation):
        phi_theta_map(GluingState(theta=theta), CFG)


# ------------------------------------------------------- exterior model


def test_exterior_constants_ratio():
    c_delta, c_zero = exterior_model_constants(5)
    assert c_delta == pytest.approx(-5 * 4 * 1 / (8 * 3))
    assert c_zero == pytest.approx(-5 * 4 * 1 / 8)
    assert c_zero / c_delta == pytest.approx(5 - 2)


def test_exterior_mode_solve_manufactured():
    # manufacture data from a smooth profile satisfying the inner Neumann
    # and outer Dirichlet conditions, then recover it
    n = 5
    r_in = 0.3
    c_delta, c_zero = exterior_model_constants(n)
    rho = np.geomspace(r_in, 1.0, 2001)
    t = np.log(rho / r_in) / np.log(1.0 / r_in)  # 0 at inner, 1 at outer
    w = np.cos(0.5 * np.pi * t)  # w'(inner) = 0, w(outer) = 0
    dt = 1.0 / (rho * np.log(1.0 / r_in))
    dw = -0.5 * np.pi * np.sin(0.5 * np.pi * t) * dt
    d2w = -((0.5 * np.pi) ** 2) * np.cos(0.5 * np.pi * t) * dt**2 + 0.5 * np.pi * np.sin(
        0.5 * np.pi * t
    ) * dt / rho
    f = c_delta * (d2w + (n - 1) / rho * dw) + c_zero * w
    got, rep = exterior_mode_solve(n, 0, f, r_in, num=2001)
    np.testing.assert_allclose(got, w, atol=5e-6)
    assert rep["inner_slope"] == pytest.approx(0.0, abs=1e-4)


def test_exterior_green_correction_report():
    ext = exterior_green_correction(CFG)
    assert ext["report"]["residual"] < 1e-6
    assert abs(ext["V1_inner_slope"]) < 1e-7  # Neumann at the gluing radius
    assert ext["V1"][-1] == 0.0  # outer Dirichlet
    # eta == 1 near the gluing sphere: Gp equals the bare power there
    assert ext["Gp"][0] == pytest.approx(CFG.r_eps ** (2 - 5 / 2), rel=1e-13)


# ------------------------------------------------------- interior Picard


def test_interior_picard_zero_datum_returns_zero():
    u, lift, rep = interior_picard(CFG, GluingState(), datum=0.0)
    assert rep["sup_U"] == 0.0
    assert np.max(np.abs(lift)) == 0.0


def test_interior_picard_requires_radial_state():
    with pytest.raises(NotRadial):
        interior_picard(CFG, GluingState(a=(1e-3, 0, 0, 0, 0)))


def test_interior_picard_rejects_wrong_grid_datum():
    with pytest.raises(GridMismatch):
        interior_picard(CFG, GluingState(), datum=np.zeros(17))


def test_interior_picard_quadratic_datum_scaling():
    sups = []
    for scale in (1.0, 0.5, 0.25):
        _, _, rep = interior_picard(CFG, GluingState(), datum=0.01 * scale)
        sups.append(rep["sup_U"])
    assert sups[0] / sups[1] == pytest.approx(4.0, rel=0.2)
    assert sups[1] / sups[2] == pytest.approx(4.0, rel=0.2)


def test_interior_picard_contraction_ratios():
    _, _, rep = interior_picard(CFG, GluingState(), datum=0.01)
    assert all(r <= 0.5 for r in rep["ratios"])


def test_interior_picard_stack_residual():
    # the converged stack solves the nonlinear cylinder equation with the
    # solver's own stencil; in the ball picture the residual carries the
    # r^(-n) transport factor, checked on the decade next to the gluing
    # sphere where that factor is O(1)
    from sigma2glue.linearized import _fd2_profile

    cfg = CFG
    u, lift, rep = interior_picard(cfg, GluingState(), datum=0.01)
    fam = cfg.family()
    orbit = get_orbit(fam)
    t0, t1 = rep["window"]
    grid = np.linspace(t0, t1, u.size)
    psi = lift + u
    dpsi, d2psi = _fd2_profile(psi, grid[1] - grid[0])
    v, vd, vdd = orbit.v(grid), orbit.vdot(grid), orbit.vddot(grid)
    fld = RadialField(
        grid, v + psi, vd + dpsi, vdd + d2psi, cylinder_background(5), "cylinder"
    )
    resid = evaluate_H(fld, 5)
    r_ball = fam.R * np.exp(-grid)
    ball = np.abs(resid) * r_ball ** (-5.0)
    near = (grid >= t0 + 0.01) & (grid <= t0 + 1.0)
    assert float(np.max(ball[near])) <= 1e-7


def test_interior_picard_contraction_failure_is_typed():
    with pytest.raises(ContractionFailed):
        interior_picard(CFG, GluingState(), datum=0.3, max_iter=12)


# ------------------------------------------------------ cauchy mismatch


def test_mismatch_radial_sector_higher_modes_vanish():
    gaps = cauchy_mismatch(GluingState(b=0.01, Lambda=0.1), CFG)
    for ell in range(1, 5):
        assert gaps[ell] == (0.0, 0.0)


def test_mismatch_zero_at_constant_fixed_point():
    ext = exterior_green_correction(CFG)
    orbit = get_orbit(CFG.family())

    def H0(b, lam):
        return radial_matching_data(CFG, b, orbit=orbit)["E_val"] + lam * ext["V1_inner"]

    def dH0(b, lam):
        return radial_matching_data(CFG, b, orbit=orbit)["E_der"] / CFG.r_eps

    b, lam, _ = solve_constant_system(CFG, H0, dH0)
    gaps = cauchy_mismatch(GluingState(b=b, Lambda=lam), CFG, exterior=ext)
    assert abs(gaps[0][0]) <= 1e-12
    assert abs(gaps[0][1]) <= 1e-12


def test_mismatch_omega_enters_degree_one():
    st = GluingState(Lambda=0.1, omega=(2e-4, 0, 0, 0, 0))
    gaps = cauchy_mismatch(st, CFG)
    # gap = interior - exterior; the degree-1 exterior extension carries
    # omega with radial decay rho^(1-n)
    assert gaps[1][0] == pytest.approx(-2e-4, rel=1e-10)
    assert gaps[1][1] == pytest.approx((5 - 1) * 2e-4, rel=1e-10)


def test_constant_mode_expansion_measures_small_defect():
    # measured trace minus the two-term model shrinks like r^2
    ratios = []
    for s in (0.2, 0.35, 0.5):
        cfg = GluingConfig(n=5, eps=0.05, s=s)
        data = radial_matching_data(cfg, 0.0)
        ratios.append(abs(data["E_val"]) / cfg.r_eps**2)
    assert max(ratios) < 1.0
    assert max(ratios) / min(ratios) < 3.0


# ------------------------------------------------------------- demo


def test_glue_demo_end_to_end():
    rep = glue_demo(CFG)
    assert abs(rep["gaps"]["l0_value"]) <= 1e-6
    assert abs(rep["gaps"]["l0_deriv"]) <= 1e-6
    assert rep["gaps"]["l1_value"] == 0.0
    assert rep["completeness_min"] > 0.0
    assert abs(rep["b"]) <= 0.5
    assert abs(rep["Lambda"]) <= CFG.lambda_bound


def test_glue_demo_background_convergence_sweep():
    sups = []
    for eps in (0.1, 0.05, 0.025):
        rep = glue_demo(GluingConfig(n=5, eps=eps))
        sups.append(rep["sup_background_distance"])
    assert sups[0] > sups[1] > sups[2]


def test_glue_demo_factor_grid_spans_both_sides():
    rep = glue_demo(CFG)
    grid = rep["grid_r"]
    assert grid[0] < CFG.r_eps < grid[-1]
    assert grid[-1] == 1.0
    assert np.all(np.diff(grid) > 0)
    assert np.all(rep["factor"] > 0)
