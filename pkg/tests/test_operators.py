import numpy as np
import pytest
from numpy.testing import assert_allclose

from sigma2glue.delaunay import DelaunayParams, integrate_orbit
from sigma2glue.errors import NonPositiveFactor
from sigma2glue.operators import (
    CurvatureData,
    RadialField,
    admissibility_check,
    cylinder_background,
    cylinder_equivariance_residual,
    evaluate_H,
    evaluate_L,
    evaluate_L_mode,
    evaluate_Q,
    fd_derivatives,
    flat_background,
    linearize_blocks,
    sigma1_sigma2_from_curvature,
    sphere_background,
)


def log_grid(lo, hi, num):
    return np.exp(np.linspace(np.log(lo), np.log(hi), num))


def smooth_ball_field(grid, amp=0.2, freq=1.0, base=1.0, background=None, n=5):
    # u = base + amp sin(freq log r) with exact chain-rule derivatives
    s = np.log(grid)
    u = base + amp * np.sin(freq * s)
    fs = amp * freq * np.cos(freq * s)
    fss = -amp * freq**2 * np.sin(freq * s)
    du = fs / grid
    d2u = (fss - fs) / grid**2
    return RadialField(grid=grid, u=u, du=du, d2u=d2u,
                       background=background or flat_background(), geometry="ball")


def test_sigma_presets():
    n = 5
    assert sigma1_sigma2_from_curvature(flat_background(), n) == (0.0, 0.0)
    s1, s2 = sigma1_sigma2_from_curvature(sphere_background(n), n)
    assert_allclose(s1, 2.5, rtol=1e-15)
    assert_allclose(s2, n * (n - 1) / 8.0, rtol=1e-14)  # = 2.5 = 2^-2 C(5,2)
    _, s2c = sigma1_sigma2_from_curvature(cylinder_background(n), n)
    assert_allclose(s2c, (n - 1) * (n - 4) / 8.0, rtol=1e-14)


def test_sigma_scaling_homogeneity():
    n = 7
    d = CurvatureData(3.1, 0.4, 0.7)
    c = 1.9
    dc = CurvatureData(c * d.R, c * d.ricci_radial, c * d.ricci_tangential)
    s1, s2 = sigma1_sigma2_from_curvature(d, n)
    s1c, s2c = sigma1_sigma2_from_curvature(dc, n)
    assert_allclose(s1c, c * s1, rtol=1e-14)
    assert_allclose(s2c, c**2 * s2, rtol=1e-14)


def test_admissibility():
    assert admissibility_check(2.5, 2.5)
    assert not admissibility_check(0.0, 0.0)
    assert not admissibility_check(1.0, -0.1)


@pytest.mark.parametrize("n", [5, 6, 7, 9])
def test_H_of_one_flat_and_sphere(n):
    grid = log_grid(0.3, 1.0, 16)
    ones = np.ones_like(grid)
    zeros = np.zeros_like(grid)
    flat = RadialField(grid=grid, u=ones, du=zeros, d2u=zeros)
    val = -n * (n - 1) * (n - 4) ** 2 / 128.0
    assert_allclose(evaluate_H(flat, n), val, rtol=1e-14)
    sphere = RadialField(grid=grid, u=ones, du=zeros, d2u=zeros, background=sphere_background(n))
    assert_allclose(evaluate_H(sphere, n), 0.0, atol=1e-13)


def test_H_of_one_n5_value():
    grid = log_grid(0.5, 1.0, 8)
    f = RadialField(grid=grid, u=np.ones(8), du=np.zeros(8), d2u=np.zeros(8))
    assert_allclose(evaluate_H(f, 5), -5.0 / 32.0, rtol=1e-15)


def test_H_constant_factor_closed_form():
    n, c = 5, 1.3
    grid = log_grid(0.5, 1.0, 8)
    f = RadialField(grid=grid, u=np.full(8, c), du=np.zeros(8), d2u=np.zeros(8))
    K = n * (n - 1) * (n - 4) ** 2 / 128.0
    assert_allclose(evaluate_H(f, n), -K * c ** (4.0 * n / (n - 4)), rtol=1e-14)


@pytest.mark.parametrize("n", [5, 7, 9])
def test_cylinder_H_collapses_to_ode_residual(n):
    # algebraic identity: nine terms == (n-1)(n-4)^3/128 * v * (ODE residual)
    rng = np.random.default_rng(42)
    t = np.linspace(-1.0, 1.0, 33)
    v = 0.5 + 0.4 * rng.random(33)
    vd = rng.standard_normal(33) * 0.3
    vdd = rng.standard_normal(33) * 0.3
    f = RadialField(grid=t, u=v, du=vd, d2u=vdd,
                    background=cylinder_background(n), geometry="cylinder")
    m2 = ((n - 4) / 4.0) ** 2
    h = v**2 - vd**2 / m2
    X = 4.0 * n / (n - 4)
    oracle = (n - 1) * (n - 4) ** 3 / 128.0 * v * (h * (v - vdd / m2) - n / (n - 4.0) * v ** (X - 1))
    assert_allclose(evaluate_H(f, n), oracle, rtol=1e-11, atol=1e-13)


def test_cylinder_H_vanishes_on_orbit():
    p = DelaunayParams(5, 2)
    orbit = integrate_orbit(p, 0.1, t_max=8.0)
    t = np.linspace(-7.0, 7.0, 501)
    f = RadialField(grid=t, u=orbit.v(t), du=orbit.vdot(t), d2u=orbit.vddot(t),
                    background=cylinder_background(5), geometry="cylinder")
    assert np.max(np.abs(evaluate_H(f, 5))) < 1e-10


@pytest.mark.parametrize("n", [5, 7])
def test_L_at_one_matches_constant_curvature_formula(n):
    # at u == 1 on the round sphere the linearization is -(n-1)(n-4)/8 (lap + n)
    grid = log_grid(0.4, 1.2, 24)
    ones = np.ones_like(grid)
    zeros = np.zeros_like(grid)
    u1 = RadialField(grid=grid, u=ones, du=zeros, d2u=zeros, background=sphere_background(n))
    v = smooth_ball_field(grid, amp=0.3, freq=1.7, base=0.2, background=sphere_background(n))
    lap_v = v.d2u + (n - 1) * v.du / grid
    expected = -(n - 1) * (n - 4) / 8.0 * (lap_v + n * v.u)
    assert_allclose(evaluate_L(u1, v, n), expected, rtol=1e-12, atol=1e-13)


def test_L_at_one_flat_on_constant():
    n = 5
    grid = log_grid(0.5, 1.0, 8)
    ones = np.ones(8)
    zeros = np.zeros(8)
    u1 = RadialField(grid=grid, u=ones, du=zeros, d2u=zeros)
    c = RadialField(grid=grid, u=0.7 * ones, du=zeros, d2u=zeros)
    assert_allclose(evaluate_L(u1, c, n), -n**2 * (n - 1) * (n - 4) / 32.0 * 0.7, rtol=1e-14)


def test_L_is_frechet_derivative():
    n = 5
    grid = log_grid(0.5, 2.0, 64)
    u = smooth_ball_field(grid, amp=0.2, freq=1.0, background=sphere_background(n))
    v = smooth_ball_field(grid, amp=0.15, freq=2.3, base=0.0, background=sphere_background(n))
    L = evaluate_L(u, v, n)
    errs = []
    for hstep in (1e-3, 1e-4, 1e-5):
        up = RadialField(grid=grid, u=u.u + hstep * v.u, du=u.du + hstep * v.du,
                         d2u=u.d2u + hstep * v.d2u, background=u.background)
        diff = (evaluate_H(up, n) - evaluate_H(u, n)) / hstep
        errs.append(np.max(np.abs(diff - L)))
    errs = np.array(errs)
    # first-order Taylor residual: err ~ C h
    assert errs[1] < 0.2 * errs[0]
    assert errs[2] < 0.2 * errs[1]
    ratios = errs / np.array([1e-3, 1e-4, 1e-5])
    assert ratios.max() / ratios.min() < 2.0


def test_Q_zero_and_quadratic():
    n = 5
    grid = log_grid(0.5, 2.0, 48)
    u = smooth_ball_field(grid, amp=0.2, freq=1.0, background=sphere_background(n))
    zero = RadialField(grid=grid, u=np.zeros_like(grid), du=np.zeros_like(grid),
                       d2u=np.zeros_like(grid), background=u.background)
    assert_allclose(evaluate_Q(u, zero, n), 0.0, atol=1e-15)
    v = smooth_ball_field(grid, amp=0.3, freq=1.9, base=0.1, background=u.background)
    ratios = []
    for tstep in (1e-2, 5e-3, 2.5e-3):
        inc = RadialField(grid=grid, u=tstep * v.u, du=tstep * v.du, d2u=tstep * v.d2u,
                          background=u.background)
        ratios.append(np.max(np.abs(evaluate_Q(u, inc, n))) / tstep**2)
    ratios = np.array(ratios)
    assert ratios.max() / ratios.min() < 2.0


def test_Q_constant_closed_form():
    n, c = 5, 0.2
    grid = log_grid(0.5, 1.0, 8)
    ones = np.ones(8)
    zeros = np.zeros(8)
    u1 = RadialField(grid=grid, u=ones, du=zeros, d2u=zeros)
    inc = RadialField(grid=grid, u=c * ones, du=zeros, d2u=zeros)
    K = n * (n - 1) * (n - 4) ** 2 / 128.0
    X = 4.0 * n / (n - 4)
    expected = -K * ((1 + c) ** X - 1.0 - X * c)
    assert_allclose(evaluate_Q(u1, inc, n), expected, rtol=1e-13)


def test_H_vanishes_on_delaunay_ball_picture():
    # transport the orbit to the punctured ball with exact derivatives
    p = DelaunayParams(5, 2)
    orbit = integrate_orbit(p, 0.1, t_max=6.0)
    R = 1.0
    r = log_grid(0.4, 1.0, 301)
    pw = -(p.n - 2 * p.k) / (2.0 * p.k)
    t = -np.log(r) + np.log(R)
    v, vd, vdd = orbit.v(t), orbit.vdot(t), orbit.vddot(t)
    f = RadialField(grid=r, u=r**pw * v,
                    du=r ** (pw - 1) * (pw * v - vd),
                    d2u=r ** (pw - 2) * (pw * (pw - 1) * v - (2 * pw - 1) * vd + vdd))
    assert np.max(np.abs(evaluate_H(f, p.n))) < 1e-8


def test_H_on_delaunay_fd_convergence():
    # sampled factor only, 2nd-order differences: residual drops ~4x per halving
    p = DelaunayParams(5, 2)
    orbit = integrate_orbit(p, 0.1, t_max=6.0)
    pw = -(p.n - 2 * p.k) / (2.0 * p.k)
    sups = []
    for num in (201, 401, 801):
        r = log_grid(0.4, 1.0, num)
        u = r**pw * orbit.v(-np.log(r))
        du, d2u = fd_derivatives(r, u, "ball", order=2)
        f = RadialField(grid=r, u=u, du=du, d2u=d2u)
        sups.append(np.max(np.abs(evaluate_H(f, p.n))))
    order01 = np.log2(sups[0] / sups[1])
    order12 = np.log2(sups[1] / sups[2])
    assert order01 > 1.8 and order12 > 1.8


def test_equivariance_on_orbit_and_bump():
    p = DelaunayParams(5, 2)
    orbit = integrate_orbit(p, 0.1, t_max=8.0)
    res = cylinder_equivariance_residual(orbit, R=1.0, t_lo=-3.0, t_hi=3.0)
    assert res < 1e-8
    # generic bump with exact derivatives: identity is pointwise algebraic
    t = np.linspace(-3.0, 3.0, 2001)
    w = 0.05 * np.exp(-(t**2))
    dw = -2 * t * w
    d2w = (-2 + 4 * t**2) * w
    res_bump = cylinder_equivariance_residual(orbit, R=1.0, t_lo=-3.0, t_hi=3.0, bump=(w, dw, d2w))
    assert res_bump < 1e-9
    # ball side differentiating its own samples: discrepancy shrinks ~4x per refinement
    sups = []
    for num in (251, 501, 1001):
        tg = np.linspace(-3.0, 3.0, num)
        wg = 0.05 * np.exp(-(tg**2))
        dwg = -2 * tg * wg
        d2wg = (-2 + 4 * tg**2) * wg
        sups.append(cylinder_equivariance_residual(orbit, R=1.0, t_lo=-3.0, t_hi=3.0,
                                                   num=num, bump=(wg, dwg, d2wg),
                                                   ball_derivatives="fd2"))
    assert np.log2(sups[0] / sups[1]) > 1.7
    assert np.log2(sups[1] / sups[2]) > 1.7


def test_mode_zero_matches_radial_L():
    n = 5
    grid = log_grid(0.5, 2.0, 32)
    u = smooth_ball_field(grid, amp=0.2, freq=1.0, background=sphere_background(n))
    v = smooth_ball_field(grid, amp=0.25, freq=1.3, base=0.4, background=u.background)
    via_mode = evaluate_L_mode(u, v.u, v.du, v.d2u, ell=0, n=n)
    assert_allclose(via_mode, evaluate_L(u, v, n), rtol=1e-12, atol=1e-14)


def test_fd_derivatives_polynomial_exactness():
    # 4th-order stencils are exact on quartics in the uniform variable
    t = np.linspace(0.0, 2.0, 41)
    u = 1.0 + t - 0.5 * t**2 + 0.125 * t**3 - 0.03 * t**4
    du_ref = 1.0 - t + 0.375 * t**2 - 0.12 * t**3
    d2u_ref = -1.0 + 0.75 * t - 0.36 * t**2
    du, d2u = fd_derivatives(t, u, "cylinder", order=4)
    assert_allclose(du, du_ref, rtol=0, atol=1e-11)
    assert_allclose(d2u, d2u_ref, rtol=0, atol=1e-9)
    # ball variant: exact on cubics of log r including the chain rule
    r = log_grid(0.5, 2.0, 41)
    s = np.log(r)
    u = 2.0 + s + 0.25 * s**3
    du, d2u = fd_derivatives(r, u, "ball", order=4)
    assert_allclose(du, (1.0 + 0.75 * s**2) / r, rtol=1e-10)
    assert_allclose(d2u, (1.5 * s - 1.0 - 0.75 * s**2) / r**2, rtol=1e-9, atol=1e-11)


def test_positivity_guard():
    grid = log_grid(0.5, 1.0, 8)
    f = RadialField(grid=grid, u=np.linspace(-0.1, 1.0, 8), du=np.zeros(8), d2u=np.zeros(8))
    with pytest.raises(NonPositiveFactor):
        evaluate_H(f, 5)
    with pytest.raises(NonPositiveFactor):
        linearize_blocks(f, 5)


def test_radial_field_validation():
    with pytest.raises(ValueError):
        RadialField(grid=np.array([1.0, 0.5, 2.0]), u=np.ones(3))
    with pytest.raises(ValueError):
        RadialField(grid=np.array([-1.0, 0.5, 1.0]), u=np.ones(3))
    with pytest.raises(ValueError):
        RadialField(grid=np.linspace(0.1, 1, 8), u=np.ones(8), geometry="torus")
