"""Fully nonlinear sigma_2 operator on radial data, and its linearization.

The operator acts on a conformal factor u > 0 over a fixed background
with curvature data (R, Ric) supplied algebraically; derivatives are
taken in one of two radial pictures:

- "ball": punctured-ball picture, u = u(r), with
  lap u = u'' + (n-1) u'/r, per-direction tangential Hessian u'/r;
- "cylinder": product picture, u = u(t), with lap u = u-double-dot and
  vanishing tangential Hessian.

The nonlinear evaluation is a nine-term polynomial expression in
(u, u', u'', curvature); the linearization splits into five blocks
(coefficients of lap v, v, v', the Hessian contraction, and the mixed
gradient block).  Only k = 2 is evaluated here; the Delaunay layer
stays k-general.

A useful internal identity (used as an oracle in the tests): on the
cylinder the nine terms collapse to

    H_cyl(v) = (n-1)(n-4)^3/128 * v * [h (v - vddot/m^2) - (n/(n-4)) v^(X-1)]

with h = v^2 - vdot^2/m^2, m = (n-4)/4, X = 4n/(n-4), i.e. the operator
vanishes exactly on Delaunay orbits.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import NonPositiveFactor

__all__ = [
    "CurvatureData",
    "RadialField",
    "flat_background",
    "sphere_background",
    "cylinder_background",
    "sigma1_sigma2_from_curvature",
    "admissibility_check",
    "fd_derivatives",
    "linearize_blocks",
    "evaluate_H",
    "evaluate_L",
    "evaluate_L_mode",
    "evaluate_Q",
    "cylinder_equivariance_residual",
]


@dataclass(frozen=True)
class CurvatureData:
    """Radially symmetric background curvature: scalar and the two Ricci eigenvalues."""

    R: float
    ricci_radial: float
    ricci_tangential: float


def flat_background() -> CurvatureData:
    return CurvatureData(0.0, 0.0, 0.0)


def sphere_background(n: int) -> CurvatureData:
    # round unit sphere: Ric = (n-1) g
    return CurvatureData(float(n * (n - 1)), float(n - 1), float(n - 1))


def cylinder_background(n: int) -> CurvatureData:
    # product of a round unit (n-1)-sphere and a line
    return CurvatureData(float((n - 1) * (n - 2)), 0.0, float(n - 2))


def sigma1_sigma2_from_curvature(data: CurvatureData, n: int) -> tuple[float, float]:
    """sigma_1 = R/(2(n-1)); sigma_2 = n R^2/(8(n-1)(n-2)^2) - |Ric|^2/(2(n-2)^2)."""
    ric2 = data.ricci_radial**2 + (n - 1) * data.ricci_tangential**2
    s1 = data.R / (2.0 * (n - 1))
    s2 = n * data.R**2 / (8.0 * (n - 1) * (n - 2) ** 2) - ric2 / (2.0 * (n - 2) ** 2)
    return s1, s2


def admissibility_check(sigma1: float, sigma2: float) -> bool:
    """Membership in the open positive 2-cone at a point."""
    return sigma1 > 0.0 and sigma2 > 0.0


def _fd_uniform(u: np.ndarray, h: float):
    """4th-order first and second derivatives on a uniform grid.

    Central 5-point stencils inside, one-sided 4th-order closures at the
    two nodes next to each boundary.
    """
    npts = u.size
    if npts < 6:
        raise ValueError("need at least 6 samples for 4th-order differences")
    du = np.empty_like(u)
    d2u = np.empty_like(u)
    du[2:-2] = (-u[4:] + 8 * u[3:-1] - 8 * u[1:-3] + u[:-4]) / (12 * h)
    d2u[2:-2] = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (12 * h**2)
    # forward closures
    du[0] = (-25 * u[0] + 48 * u[1] - 36 * u[2] + 16 * u[3] - 3 * u[4]) / (12 * h)
    du[1] = (-3 * u[0] - 10 * u[1] + 18 * u[2] - 6 * u[3] + u[4]) / (12 * h)
    d2u[0] = (45 * u[0] - 154 * u[1] + 214 * u[2] - 156 * u[3] + 61 * u[4] - 10 * u[5]) / (12 * h**2)
    d2u[1] = (10 * u[0] - 15 * u[1] - 4 * u[2] + 14 * u[3] - 6 * u[4] + u[5]) / (12 * h**2)
    # backward closures by symmetry
    du[-1] = (25 * u[-1] - 48 * u[-2] + 36 * u[-3] - 16 * u[-4] + 3 * u[-5]) / (12 * h)
    du[-2] = (3 * u[-1] + 10 * u[-2] - 18 * u[-3] + 6 * u[-4] - u[-5]) / (12 * h)
    d2u[-1] = (45 * u[-1] - 154 * u[-2] + 214 * u[-3] - 156 * u[-4] + 61 * u[-5] - 10 * u[-6]) / (12 * h**2)
    d2u[-2] = (10 * u[-1] - 15 * u[-2] - 4 * u[-3] + 14 * u[-4] - 6 * u[-5] + u[-6]) / (12 * h**2)
    return du, d2u


def fd_derivatives(grid: np.ndarray, u: np.ndarray, geometry: str = "ball", order: int = 4):
    """Radial derivatives of sampled u by finite differences.

    Ball grids must be uniform in log r (differences are taken in
    s = log r and converted by the chain rule); cylinder grids must be
    uniform in t.  order=4 is the default fallback used by RadialField;
    order=2 uses plain centered differences (one-sided at the ends) and
    exists so convergence studies can measure a known order.
    """
    grid = np.asarray(grid, dtype=float)
    u = np.asarray(u, dtype=float)
    s = np.log(grid) if geometry == "ball" else grid
    hs = np.diff(s)
    h = hs.mean()
    if np.max(np.abs(hs - h)) > 1e-8 * abs(h):
        raise ValueError(f"{geometry} grid must be uniform in {'log r' if geometry == 'ball' else 't'}")
    if order == 4:
        dus, d2us = _fd_uniform(u, h)
    elif order == 2:
        dus = np.empty_like(u)
        d2us = np.empty_like(u)
        dus[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        d2us[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        dus[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
        dus[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
        d2us[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
        d2us[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
    else:
        raise ValueError("order must be 2 or 4")
    if geometry == "ball":
        du = dus / grid
        d2u = (d2us - dus) / grid**2
    else:
        du, d2u = dus, d2us
    return du, d2u


@dataclass
class RadialField:
    """Sampled radial function with derivatives and its background geometry.

    grid holds radii (ball picture, log-uniform for the FD fallback) or
    the axial coordinate (cylinder picture).  Missing derivatives are
    filled by 4th-order finite differences.
    """

    grid: np.ndarray
    u: np.ndarray
    du: np.ndarray | None = None
    d2u: np.ndarray | None = None
    background: CurvatureData = dc_field(default_factory=flat_background)
    geometry: str = "ball"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.geometry not in ("ball", "cylinder"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.geometry == "ball" and self.grid[0] <= 0:
            raise ValueError("ball grid must be positive")
        if self.du is None or self.d2u is None:
            du, d2u = fd_derivatives(self.grid, self.u, self.geometry)
            if self.du is None:
                self.du = du
            if self.d2u is None:
                self.d2u = d2u
        self.du = np.asarray(self.du, dtype=float)
        self.d2u = np.asarray(self.d2u, dtype=float)


class _Calculus:
    """Pointwise radial contractions for one field in its geometry."""

    __slots__ = ("lap", "grad2", "hess_rr", "hess_tan", "du")

    def __init__(self, f: RadialField, n: int):
        self.du = f.du
        self.grad2 = f.du**2
        self.hess_rr = f.d2u
        if f.geometry == "ball":
            self.hess_tan = f.du / f.grid
            self.lap = f.d2u + (n - 1) * self.hess_tan
        else:
            self.hess_tan = np.zeros_like(f.du)
            self.lap = f.d2u


def _require_positive(u: np.ndarray, what: str):
    if np.any(u <= 0.0):
        raise NonPositiveFactor(f"{what} must be positive everywhere on the grid")


def evaluate_H(fieldv: RadialField, n: int) -> np.ndarray:
    """Pointwise nonlinear operator at conformal factor u (k = 2).

    Nine terms; flat background keeps the five derivative terms plus the
    pure power, u == 1 on a background with sigma_2 = n(n-1)/8 gives an
    exact cancellation to zero.
    """
    _require_positive(fieldv.u, "conformal factor u")
    u = fieldv.u
    bg = fieldv.background
    _, s2 = sigma1_sigma2_from_curvature(bg, n)
    c = _Calculus(fieldv, n)
    ric_hess = bg.ricci_radial * c.hess_rr + (n - 1) * bg.ricci_tangential * c.hess_tan
    ric_grad = bg.ricci_radial * c.grad2
    gg_hess = c.grad2 * c.hess_rr
    hess2 = c.hess_rr**2 + (n - 1) * c.hess_tan**2
    return (
        ((n - 4) / 4.0) ** 2 * u**4 * s2
        + 0.5 * u**2 * c.lap**2
        - (n - 4) / (8.0 * (n - 2)) * bg.R * u**2 * c.grad2
        - (n - 4) / (8.0 * (n - 2)) * bg.R * u**3 * c.lap
        + (n - 2) / (n - 4.0) * u * c.grad2 * c.lap
        - 0.5 * u**2 * hess2
        + (n - 4) / (4.0 * (n - 2)) * u**3 * ric_hess
        - n / (4.0 * (n - 2)) * u**2 * ric_grad
        + n / (n - 4.0) * u * gg_hess
        - n * (n - 1) * (n - 4) ** 2 / 128.0 * np.abs(u) ** ((3 * n + 4) / (n - 4)) * u
    )


def linearize_blocks(fieldv: RadialField, n: int) -> dict:
    """The five coefficient blocks of the linearization at u.

    Returns arrays keyed:
      P_lap   coefficient of lap v,
      P_0     coefficient of v,
      W_1r    radial coefficient of v' (gradient block),
      S2_rr   Hessian-contraction tensor, radial-radial entry,
      S2_tan  same tensor, per tangential direction,
      S3_rr   coefficient of u' v' (mixed gradient block).
    """
    _require_positive(fieldv.u, "conformal factor u")
    u = fieldv.u
    bg = fieldv.background
    _, s2 = sigma1_sigma2_from_curvature(bg, n)
    c = _Calculus(fieldv, n)
    ric_hess = bg.ricci_radial * c.hess_rr + (n - 1) * bg.ricci_tangential * c.hess_tan
    ric_grad = bg.ricci_radial * c.grad2
    gg_hess = c.grad2 * c.hess_rr
    hess2 = c.hess_rr**2 + (n - 1) * c.hess_tan**2
    P_lap = (
        u**2 * c.lap
        - (n - 4) / (8.0 * (n - 2)) * bg.R * u**3
        + (n - 2) / (n - 4.0) * u * c.grad2
    )
    P_0 = (
        (n - 4) ** 2 / 4.0 * u**3 * s2
        + u * c.lap**2
        - (n - 4) / (4.0 * (n - 2)) * bg.R * u * c.grad2
        + (n - 2) / (n - 4.0) * c.grad2 * c.lap
        - 3 * (n - 4) / (8.0 * (n - 2)) * bg.R * u**2 * c.lap
        - u * hess2
        + 3 * (n - 4) / (4.0 * (n - 2)) * u**2 * ric_hess
        - n / (2.0 * (n - 2)) * u * ric_grad
        + n / (n - 4.0) * gg_hess
        - n**2 * (n - 1) * (n - 4) / 32.0 * np.abs(u) ** ((3 * n + 4) / (n - 4))
    )
    W_1r = (
        2 * (n - 2) / (n - 4.0) * u * c.du * c.lap
        - (n - 4) / (4.0 * (n - 2)) * bg.R * u**2 * c.du
    )
    S2_rr = (
        (n - 4) / (4.0 * (n - 2)) * u**3 * bg.ricci_radial
        - u**2 * c.hess_rr
        + n / (n - 4.0) * u * c.grad2
    )
    S2_tan = (n - 4) / (4.0 * (n - 2)) * u**3 * bg.ricci_tangential - u**2 * c.hess_tan
    S3_rr = 2 * n / (n - 4.0) * u * c.hess_rr - n / (2.0 * (n - 2)) * u**2 * bg.ricci_radial
    return {"P_lap": P_lap, "P_0": P_0, "W_1r": W_1r, "S2_rr": S2_rr, "S2_tan": S2_tan, "S3_rr": S3_rr}


def evaluate_L(fieldv: RadialField, direction: RadialField, n: int) -> np.ndarray:
    """Linearized operator at u applied to a radial direction v."""
    if direction.grid.shape != fieldv.grid.shape or np.max(np.abs(direction.grid - fieldv.grid)) > 1e-12:
        raise ValueError("direction must be sampled on the background grid")
    b = linearize_blocks(fieldv, n)
    cu = _Calculus(fieldv, n)
    cv = _Calculus(direction, n)
    return (
        b["P_lap"] * cv.lap
        + b["P_0"] * direction.u
        + b["W_1r"] * cv.du
        + b["S2_rr"] * cv.hess_rr
        + (n - 1) * b["S2_tan"] * cv.hess_tan
        + b["S3_rr"] * cu.du * cv.du
    )


def evaluate_L_mode(
    fieldv: RadialField,
    profile: np.ndarray,
    dprofile: np.ndarray,
    d2profile: np.ndarray,
    ell: int,
    n: int,
) -> np.ndarray:
    """Linearized operator on a single spherical-harmonic mode.

    The direction is p(r) e_ell(theta) (ball) or w(t) e_ell(theta)
    (cylinder); the harmonic factor is divided out.  Uses that the
    coefficient tensors at a radial background are diagonal (radial +
    isotropic tangential), so mixed Hessian components of the mode never
    contract: only the eigenvalue lam = ell(ell+n-2) enters.
    """
    b = linearize_blocks(fieldv, n)
    cu = _Calculus(fieldv, n)
    lam = float(ell * (ell + n - 2))
    p, dp, d2p = (np.asarray(a, dtype=float) for a in (profile, dprofile, d2profile))
    if fieldv.geometry == "ball":
        r = fieldv.grid
        tan_trace = (n - 1) * dp / r - lam * p / r**2
    else:
        tan_trace = -lam * p
    lap = d2p + tan_trace
    # (n-1) * S2_tan * (per-direction tangential Hessian) summed = S2_tan * tan_trace
    return (
        b["P_lap"] * lap
        + b["P_0"] * p
        + b["W_1r"] * dp
        + b["S2_rr"] * d2p
        + b["S2_tan"] * tan_trace
        + b["S3_rr"] * cu.du * dp
    )


def evaluate_Q(fieldv: RadialField, increment: RadialField, n: int) -> np.ndarray:
    """Quadratic remainder Q(v) = H(u+v) - H(u) - L(v)."""
    _require_positive(fieldv.u + increment.u, "perturbed factor u + v")
    shifted = RadialField(
        grid=fieldv.grid,
        u=fieldv.u + increment.u,
        du=fieldv.du + increment.du,
        d2u=fieldv.d2u + increment.d2u,
        background=fieldv.background,
        geometry=fieldv.geometry,
    )
    return evaluate_H(shifted, n) - evaluate_H(fieldv, n) - evaluate_L(fieldv, increment, n)


def _orbit_ball_field(orbit, R: float, r: np.ndarray) -> RadialField:
    """Ball-picture field r^(-(n-4)/4) v(-log r + log R) with exact derivatives."""
    p = orbit.params
    pw = -(p.n - 2 * p.k) / (2.0 * p.k)
    t = -np.log(r) + np.log(R)
    v, vd, vdd = orbit.v(t), orbit.vdot(t), orbit.vddot(t)
    u = r**pw * v
    du = r ** (pw - 1) * (pw * v - vd)
    d2u = r ** (pw - 2) * (pw * (pw - 1) * v - (2 * pw - 1) * vd + vdd)
    return RadialField(grid=r, u=u, du=du, d2u=d2u, background=flat_background(), geometry="ball")


def cylinder_equivariance_residual(
    orbit,
    R: float,
    t_lo: float = -4.0,
    t_hi: float = 4.0,
    num: int = 2001,
    bump=None,
    ball_derivatives: str = "transport",
) -> float:
    """Sup discrepancy of the flat/cylinder conformal equivalence.

    Compares r^n H_ball(u)(r) with H_cyl(v)(t) at t = -log r, where
    v(t) = r^((n-4)/4) u(r) is the cylinder transport; for the neck
    orbit u both sides vanish individually.  An optional bump
    (w, dw, d2w) sampled on the t grid perturbs the transported profile
    to exercise the identity away from the solution.

    With ball_derivatives="transport" the ball side receives chain-rule
    derivatives of the cylinder data, making the comparison a pure
    algebraic-identity check (roundoff-level for any input).  With
    "fd2"/"fd4" the ball side differentiates its own samples, so the
    residual measures finite-difference error and must shrink at the
    matching order under grid refinement.
    """
    p = orbit.params
    if p.k != 2:
        raise ValueError("nonlinear operator evaluation is k=2 only")
    t = np.linspace(t_lo, t_hi, num)
    v, vd, vdd = orbit.v(t + np.log(R)), orbit.vdot(t + np.log(R)), orbit.vddot(t + np.log(R))
    if bump is not None:
        w, dw, d2w = bump
        v, vd, vdd = v + w, vd + dw, vdd + d2w
    cyl = RadialField(grid=t, u=v, du=vd, d2u=vdd,
                      background=cylinder_background(p.n), geometry="cylinder")
    H_cyl = evaluate_H(cyl, p.n)

    r = np.exp(-t)[::-1]  # increasing radii
    pw = -(p.n - 2 * p.k) / (2.0 * p.k)
    vb = v[::-1]
    u = r**pw * vb
    if ball_derivatives == "transport":
        # d/dr of r^pw v(-log r): chain rule, dt/dr = -1/r
        vdb, vddb = vd[::-1], vdd[::-1]
        du = r ** (pw - 1) * (pw * vb - vdb)
        d2u = r ** (pw - 2) * (pw * (pw - 1) * vb - (2 * pw - 1) * vdb + vddb)
    elif ball_derivatives in ("fd2", "fd4"):
        du, d2u = fd_derivatives(r, u, "ball", order=int(ball_derivatives[-1]))
    else:
        raise ValueError("ball_derivatives must be 'transport', 'fd2' or 'fd4'")
    ball = RadialField(grid=r, u=u, du=du, d2u=d2u, background=flat_background(), geometry="ball")
    H_ball = evaluate_H(ball, p.n)
    return float(np.max(np.abs(r**p.n * H_ball - H_cyl[::-1])))
