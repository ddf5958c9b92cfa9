"""Mode-wise linearized operator along the neck and its desk-scale inverses.

On the cylinder the linearization at the periodic solution factors through
one scalar operator per spherical-harmonic degree:

    L_ell(w) = C * v * h^(k-1) * (wdd + b wd + (c - lambda(ell) a) w),

with coefficient fields a, b, c (and the conjugated-form d) sampled along
the orbit and an overall constant C depending only on (n, k).  For k = 2
the calibrated constant is C = -(n-1)(n-4)/8, and the calibration doubles
as a consistency test of the coefficient formulas: the same constant must
fit the finite-difference directional derivative of the nonlinear operator
in every mode direction and at every point.

Boundary-value solves use second-order centered differences on a uniform
t-grid with Dirichlet data at both window ends; apply_mode uses the same
stencil, so a manufactured right-hand side is recovered to solver
roundoff.  The perturbed (tilted) operator is handled as a Neumann series
around the banded inverse: the correction term is the difference of two
identical zonal finite-difference evaluations of the nonlinear operator
at the tilted and untilted members, so it vanishes identically at a = 0
and the series terminates after the identity term.

Norm ratios quoted in solver reports are desk surrogates of the weighted
Hoelder norms, measured on dyadic t-windows with exponential weights; they
enter only through boundedness and spread claims, never through absolute
values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .delaunay import DelaunayOrbit
from .errors import (
    CalibrationUnstable,
    ConeViolation,
    GridMismatch,
    SeriesDiverged,
    SingularSystem,
)
from .family import FamilyParams, eval_family, get_orbit
from .operators import RadialField, cylinder_background, evaluate_H, evaluate_L_mode
from .spaces import eigenvalue, sphere_area, zonal_eval

__all__ = [
    "default_Cnk",
    "mode_coefficients",
    "ModeOperator",
    "apply_mode",
    "solve_mode_bvp",
    "calibrate_Cnk",
    "cylinder_norm",
    "ZonalSampler",
    "perturbed_inverse",
    "annulus_mode_solve",
]


def default_Cnk(n: int, k: int = 2) -> float:
    """Calibrated overall constant of the factored linearization (k = 2)."""
    if k != 2:
        raise ValueError("the factored operator is implemented for k = 2 only")
    return -(n - 1) * (n - 4) / 8.0


def mode_coefficients(orbit: DelaunayOrbit, t):
    """Coefficient fields (a, b, c, d) of the factored operator at times t.

    a = 1 - n(k-1) H0 / (k(n-1) h^k)            (> 0 on the cone)
    b = (k-1) hdot/h                            (zero at orbit minima)
    c = -(n-1)(n-2k)/2k a + (n-2k)/2k + vddot/v + n^2/2k h^(1-k) v^(X-2)
    d = -((k-1)/2) (log h)'' - ((k-1)/2)^2 ((log h)')^2
    """
    p = orbit.params
    n, k, X = p.n, p.k, p.X
    t = np.asarray(t, dtype=float)
    v, vd, vdd = orbit.v(t), orbit.vdot(t), orbit.vddot(t)
    hk = orbit.H0 + v**X
    if np.any(hk <= 1e-14 * np.max(v) ** (2 * k)):
        raise ConeViolation("cone factor degenerate along the requested window")
    h = hk ** (1.0 / k)
    a = 1.0 - n * (k - 1) * orbit.H0 / (k * (n - 1) * hk)
    hd = (X / k) * v ** (X - 1) * vd * hk ** (1.0 / k - 1.0)
    b = (k - 1) * hd / h
    c = (
        -(n - 1) * (n - 2 * k) / (2.0 * k) * a
        + (n - 2 * k) / (2.0 * k)
        + vdd / v
        + n**2 / (2.0 * k) * h ** (1 - k) * v ** (X - 2)
    )
    hdd = (X / k) * (
        (X - 1) * v ** (X - 2) * vd**2 * hk ** (1.0 / k - 1.0)
        + v ** (X - 1) * vdd * hk ** (1.0 / k - 1.0)
        + (1.0 / k - 1.0) * v ** (X - 1) * vd * hk ** (1.0 / k - 2.0) * (k * h ** (k - 1) * hd)
    )
    logh_d = hd / h
    logh_dd = hdd / h - logh_d**2
    d = -(k - 1) / 2.0 * logh_dd - ((k - 1) / 2.0) ** 2 * logh_d**2
    return a, b, c, d


@dataclass
class ModeOperator:
    """Factored mode-ell operator sampled on a uniform t-window."""

    orbit: DelaunayOrbit
    ell: int
    grid: np.ndarray
    R: float = 1.0
    C_nk: float | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        h = np.diff(self.grid)
        if self.grid.size < 7 or np.max(np.abs(h - h[0])) > 1e-9 * abs(h[0]):
            raise ValueError("need a uniform t-grid with at least 7 points")
        p = self.orbit.params
        if self.C_nk is None:
            self.C_nk = default_Cnk(p.n, p.k)
        self.lam = float(eigenvalue(self.ell, p.n))
        a, b, c, _ = mode_coefficients(self.orbit, self.grid)
        self.a, self.b, self.c = a, b, c
        v = self.orbit.v(self.grid)
        self.prefactor = self.C_nk * v * self.orbit.h(self.grid) ** (p.k - 1)

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def eps(self) -> float:
        return self.orbit.eps


def _fd2_profile(w: np.ndarray, h: float):
    """Second-order stencil shared by apply_mode and the banded matrix."""
    dw = np.empty_like(w)
    d2w = np.empty_like(w)
    dw[1:-1] = (w[2:] - w[:-2]) / (2 * h)
    d2w[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / h**2
    dw[0] = (-3 * w[0] + 4 * w[1] - w[2]) / (2 * h)
    dw[-1] = (3 * w[-1] - 4 * w[-2] + w[-3]) / (2 * h)
    d2w[0] = (2 * w[0] - 5 * w[1] + 4 * w[2] - w[3]) / h**2
    d2w[-1] = (2 * w[-1] - 5 * w[-2] + 4 * w[-3] - w[-4]) / h**2
    return dw, d2w


def apply_mode(op: ModeOperator, w, dw=None, d2w=None):
    """C v h^(k-1) (wdd + b wd + (c - lambda a) w) on the operator grid.

    Derivatives default to the solver's own second-order stencil; passing
    analytic profiles makes kernel checks independent of the grid.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != op.grid.shape:
        raise GridMismatch("profile must be sampled on the operator grid")
    if dw is None or d2w is None:
        fd_dw, fd_d2w = _fd2_profile(w, op.step)
        dw = fd_dw if dw is None else np.asarray(dw, dtype=float)
        d2w = fd_d2w if d2w is None else np.asarray(d2w, dtype=float)
    else:
        dw = np.asarray(dw, dtype=float)
        d2w = np.asarray(d2w, dtype=float)
    return op.prefactor * (d2w + op.b * dw + (op.c - op.lam * op.a) * w)


def solve_mode_bvp(op: ModeOperator, f, bc=(0.0, 0.0), gamma: float | None = None, alpha: float = 0.5):
    """Dirichlet two-point solve L_ell w = f on the operator window.

    Returns (w, report) with report keys mode, residual, norm_ratio, grid,
    eps.  The residual is measured by re-applying the operator on interior
    rows (the two boundary rows carry the Dirichlet data, not f).

    The norm ratio is the dyadic-window surrogate of the stated weighted
    bound.  Ball weights (gamma on the solution, gamma - 1 - n + n/2k on
    the data) transport to one common cylinder exponent gamma - 1 + n/2k
    once the data is normalized by the operator prefactor C v h^(k-1);
    this matches the equal-weight form in which the uniform bound is
    proved, and it is the quantity whose spread over eps stays under x2.
    None when gamma is omitted.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != op.grid.shape:
        raise GridMismatch("data must be sampled on the operator grid")
    npts = op.grid.size
    h = op.step
    pref = op.prefactor
    zero = op.c - op.lam * op.a
    ab = np.zeros((3, npts))
    rhs = np.empty(npts)
    # interior rows: pref (1/h^2 -+ b/2h, -2/h^2 + zero, 1/h^2 +- b/2h)
    ab[0, 2:] = pref[1:-1] * (1.0 / h**2 + op.b[1:-1] / (2 * h))
    ab[1, 1:-1] = pref[1:-1] * (-2.0 / h**2 + zero[1:-1])
    ab[2, :-2] = pref[1:-1] * (1.0 / h**2 - op.b[1:-1] / (2 * h))
    rhs[1:-1] = f[1:-1]
    ab[1, 0] = 1.0
    ab[1, -1] = 1.0
    rhs[0], rhs[-1] = bc
    try:
        w = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise SingularSystem("banded solve produced non-finite values")
    residual = float(np.max(np.abs((apply_mode(op, w) - f)[1:-1])))
    ratio = None
    if gamma is not None:
        p = op.orbit.params
        exponent = gamma - 1 + p.n / (2.0 * p.k)
        nw = cylinder_norm(op.grid, w, exponent, alpha=alpha)
        nf = cylinder_norm(op.grid, f / op.prefactor, exponent, alpha=alpha, order=0)
        ratio = nw / nf if nf > 0 else np.inf
    report = {
        "mode": op.ell,
        "residual": residual,
        "norm_ratio": ratio,
        "grid": int(npts),
        "eps": op.eps,
    }
    return w, report


def cylinder_norm(t, w, weight, alpha=0.5, order=2):
    """Dyadic-window surrogate norm in the t-picture.

    A ball annulus [sigma, 2 sigma] is a unit log window, so the surrogate
    takes sup over windows [tau, tau + log 2] of e^(weight * tau) times
    (sup|w| + sup|w'| + sup|w''| + Hoelder quotient of w''), with
    derivatives dropped for order = 0.  Consistent across solves; only
    ratios of these numbers are ever asserted.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    h = t[1] - t[0]
    if order == 2:
        dw, d2w = _fd2_profile(w, h)
    log2 = np.log(2.0)
    best = 0.0
    tau = t[0]
    while tau < t[-1] - 0.5 * log2:
        sel = (t >= tau - 1e-12) & (t <= tau + log2 + 1e-12)
        if np.count_nonzero(sel) >= 3:
            block = np.max(np.abs(w[sel]))
            if order == 2:
                block += np.max(np.abs(dw[sel])) + np.max(np.abs(d2w[sel]))
                vals = d2w[sel]
            else:
                vals = w[sel]
            sep = np.abs(t[sel][:, None] - t[sel][None, :])
            quot = np.abs(vals[:, None] - vals[None, :])
            mask = sep > 0
            block += np.max(quot[mask] / sep[mask] ** alpha)
            best = max(best, np.exp(weight * tau) * block)
        tau += log2
    return best


def calibrate_Cnk(orbit: DelaunayOrbit, ell: int = 0, window=(-3.0, 3.0), num: int = 801, tau: float = 1e-5) -> float:
    """Fit the overall constant against the nonlinear operator itself.

    For ell = 0 the reference is a central finite difference of the
    cylinder-picture nonlinear operator through the direction w; for
    higher modes it is the block-built mode application of the
    linearization.  The pointwise fit must be flat along t to 1%.
    """
    p = orbit.params
    n = p.n
    t = np.linspace(window[0], window[1], num)
    v, vd, vdd = orbit.v(t), orbit.vdot(t), orbit.vddot(t)
    bg = cylinder_background(n)
    # smooth localized direction with analytic derivatives
    w = np.exp(-0.5 * t**2)
    dw = -t * w
    d2w = (t**2 - 1.0) * w
    if ell == 0:
        plus = RadialField(t, v + tau * w, vd + tau * dw, vdd + tau * d2w, bg, "cylinder")
        minus = RadialField(t, v - tau * w, vd - tau * dw, vdd - tau * d2w, bg, "cylinder")
        reference = (evaluate_H(plus, n) - evaluate_H(minus, n)) / (2 * tau)
    else:
        base = RadialField(t, v, vd, vdd, bg, "cylinder")
        reference = evaluate_L_mode(base, w, dw, d2w, ell, n)
    a, b, c, _ = mode_coefficients(orbit, t)
    lam = eigenvalue(ell, n)
    shape = v * orbit.h(t) ** (p.k - 1) * (d2w + b * dw + (c - lam * a) * w)
    mask = np.abs(shape) >= 0.05 * np.max(np.abs(shape))
    fitted = float(np.sum(reference[mask] * shape[mask]) / np.sum(shape[mask] ** 2))
    pointwise = reference[mask] / shape[mask]
    spread = (np.max(pointwise) - np.min(pointwise)) / abs(fitted)
    if spread > 0.01:
        raise CalibrationUnstable(
            f"constant varies by {spread:.2e} along the window (limit 1e-2)"
        )
    return fitted


class ZonalSampler:
    """Zonal finite-difference evaluation of the flat nonlinear operator.

    Fields live on a tensor grid: radii log-uniform, polar direction at
    Gauss-Legendre nodes in x = cos(theta).  The operator value is the
    flat-background polynomial in the axisymmetric calculus; its degree-l
    zonal projection integrates against the unit-L2 harmonic with the
    Gauss weights.  Everything is second order, matching the banded
    solver's stencil radially.
    """

    def __init__(self, n: int, radii: np.ndarray, nx: int = 48):
        self.n = n
        self.rho = np.asarray(radii, dtype=float)
        s = np.log(self.rho)
        hs = np.diff(s)
        if np.max(np.abs(hs - hs[0])) > 1e-9 * abs(hs[0]):
            raise ValueError("radii must be log-uniform")
        self.hs = float(hs[0])
        self.x, self.wq = np.polynomial.legendre.leggauss(nx)

    def project(self, vals2d: np.ndarray, ell: int):
        """Degree-ell zonal coefficient profile of pointwise values."""
        e = zonal_eval(ell, self.n, self.x)
        measure = self.wq * (1.0 - self.x**2) ** ((self.n - 3) / 2.0) * sphere_area(self.n - 1)
        return vals2d @ (measure * e)

    def _derivs(self, U: np.ndarray):
        # radial part in s = log rho with the shared second-order stencil
        h = self.hs
        Us = np.empty_like(U)
        Uss = np.empty_like(U)
        Us[1:-1] = (U[2:] - U[:-2]) / (2 * h)
        Uss[1:-1] = (U[2:] - 2 * U[1:-1] + U[:-2]) / h**2
        Us[0] = (-3 * U[0] + 4 * U[1] - U[2]) / (2 * h)
        Us[-1] = (3 * U[-1] - 4 * U[-2] + U[-3]) / (2 * h)
        Uss[0] = (2 * U[0] - 5 * U[1] + 4 * U[2] - U[3]) / h**2
        Uss[-1] = (2 * U[-1] - 5 * U[-2] + 4 * U[-3] - U[-4]) / h**2
        rho = self.rho[:, None]
        Ur = Us / rho
        Urr = (Uss - Us) / rho**2
        # polar part on the Gauss nodes (second order, pole-free)
        Ux = np.gradient(U, self.x, axis=1)
        Uxx = np.gradient(Ux, self.x, axis=1)
        Urx = np.gradient(Ur, self.x, axis=1)
        return Ur, Urr, Ux, Uxx, Urx

    def evaluate_flat_H(self, U: np.ndarray):
        """Flat-background operator value on the tensor grid (k = 2)."""
        n = self.n
        rho = self.rho[:, None]
        x = self.x[None, :]
        Ur, Urr, Ux, Uxx, Urx = self._derivs(U)
        sin2 = 1.0 - x**2
        u_t = -np.sqrt(sin2) * Ux          # frame derivative along e_theta * rho
        lap_ang = sin2 * Uxx - (n - 1) * x * Ux
        lap = Urr + (n - 1) * Ur / rho + lap_ang / rho**2
        grad2 = Ur**2 + sin2 * Ux**2 / rho**2
        h_rr = Urr
        h_rt = -np.sqrt(sin2) * Urx / rho - u_t / rho**2
        h_tt = (sin2 * Uxx - x * Ux) / rho**2 + Ur / rho
        h_pp = Ur / rho - x * Ux / rho**2
        hess2 = h_rr**2 + 2 * h_rt**2 + h_tt**2 + (n - 2) * h_pp**2
        gg_hess = Ur**2 * h_rr + 2 * Ur * (u_t / rho) * h_rt + (u_t / rho) ** 2 * h_tt
        return (
            0.5 * U**2 * lap**2
            + (n - 2) / (n - 4.0) * U * grad2 * lap
            - 0.5 * U**2 * hess2
            + n / (n - 4.0) * U * gg_hess
            - n * (n - 1) * (n - 4) ** 2 / 128.0 * np.abs(U) ** ((3 * n + 4) / (n - 4)) * U
        )

    def directional_mode_derivative(self, U0: np.ndarray, profile: np.ndarray, ell: int, tau: float = 1e-6):
        """Zonal projection of the first variation through profile * e_ell."""
        e = zonal_eval(ell, self.n, self.x)
        amp = float(np.max(np.abs(profile))) or 1.0
        bump = (tau / amp) * profile[:, None] * e[None, :]
        plus = self.evaluate_flat_H(U0 + bump)
        minus = self.evaluate_flat_H(U0 - bump)
        return self.project(amp * (plus - minus) / (2 * tau), ell)


def _tilted_background(fam: FamilyParams, sampler: ZonalSampler, orbit):
    pts = np.zeros((sampler.rho.size * sampler.x.size, fam.base.n))
    rr, xx = np.meshgrid(sampler.rho, sampler.x, indexing="ij")
    pts[:, 0] = (rr * xx).ravel()
    pts[:, 1] = (rr * np.sqrt(1.0 - xx**2)).ravel()
    vals = eval_family(fam, pts, orbit=orbit)
    return vals.reshape(rr.shape)


def perturbed_inverse(
    fam: FamilyParams,
    ell: int,
    f,
    window=(0.0, 2.0),
    num: int = 2001,
    tol: float = 1e-10,
    max_terms: int = 30,
):
    """Neumann-series solve of the tilted mode operator.

    The tilted operator is the banded untilted one plus the difference of
    two identical zonal finite-difference linearizations, taken at the
    tilted and untilted members.  At a = 0 the correction vanishes
    identically and the series terminates after the identity term.
    Returns (w, report) with the increment history; raises SeriesDiverged
    when increments grow three times in a row.
    """
    base = fam.base
    if np.any(fam.a_vec[1:] != 0.0):
        raise ValueError("tilt must lie along the first axis for zonal sampling")
    orbit = get_orbit(fam)
    t = np.linspace(window[0], window[1], num)
    op = ModeOperator(orbit=orbit, ell=ell, grid=t, R=fam.R)
    f = np.asarray(f, dtype=float)
    if f.shape != t.shape:
        raise GridMismatch("data must be sampled on the window grid")

    # matching ball grid: t = -log r + log R, ascending radii need reversal
    rho = fam.R * np.exp(-t)[::-1]
    sampler = ZonalSampler(base.n, rho)
    radial = FamilyParams(base=base, eps=fam.eps, R=fam.R, s=fam.s)
    U0 = _tilted_background(radial, sampler, orbit)
    Ua = _tilted_background(fam, sampler, orbit) if not fam.is_radial else U0

    p_exp = -base.m  # ball profile = r^p * cylinder profile
    r_desc = rho[::-1]  # radii in t-order

    def delta_L(w_cyl):
        if fam.is_radial:
            return np.zeros_like(w_cyl)
        # cylinder profile -> ball profile, in the sampler's radial order
        phi = (r_desc**p_exp * w_cyl)[::-1]
        da = sampler.directional_mode_derivative(Ua, phi, ell)
        d0 = sampler.directional_mode_derivative(U0, phi, ell)
        # ball operator values -> cylinder normalization via r^n
        return (sampler.rho**base.n * (da - d0))[::-1]

    w, _ = solve_mode_bvp(op, f)
    increment_f = f - (apply_mode(op, w) + delta_L(w))
    increments = [float(np.max(np.abs(increment_f[1:-1])))]
    grows = 0
    while increments[-1] > tol and len(increments) < max_terms:
        dw, _ = solve_mode_bvp(op, increment_f)
        w = w + dw
        increment_f = increment_f - (apply_mode(op, dw) + delta_L(dw))
        increments.append(float(np.max(np.abs(increment_f[1:-1]))))
        if increments[-1] > increments[-2]:
            grows += 1
            if grows >= 3:
                raise SeriesDiverged("Neumann increments grew three times in a row")
        else:
            grows = 0
    residual = increments[-1]
    ratios = [increments[i + 1] / increments[i] for i in range(len(increments) - 1) if increments[i] > 0]
    report = {
        "mode": ell,
        "residual": residual,
        "increments": increments,
        "ratios": ratios,
        "terms": len(increments),
        "eps": fam.eps,
    }
    return w, report


def annulus_mode_solve(n: int, ell: int, f, r: float, s: float, num: int = 2001):
    """Mode-ell radial Laplace solve on [r, s]: zero outer trace, and an
    unknown-constant inner trace realized as a Neumann closure for the
    constant mode (every other mode gets a zero inner trace).

    Returns (w, inner_constant, report).
    """
    if not (0 < 2 * r < s):
        raise ValueError("need 0 < 2r < s")
    f = np.asarray(f, dtype=float)
    rho = np.geomspace(r, s, num)
    if f.shape != rho.shape:
        raise GridMismatch(f"data must be sampled on the {num}-point log grid")
    lam = float(eigenvalue(ell, n))
    h = np.log(s / r) / (num - 1)
    # in s = log rho: w_ss + (n-2) w_s - lam w = rho^2 f
    ab = np.zeros((4, num))  # one sub-, two superdiagonals for the Neumann row
    rhs = np.empty(num)
    ab[1, 2:] = 1.0 / h**2 + (n - 2) / (2 * h)
    ab[2, 1:-1] = -2.0 / h**2 - lam
    ab[3, :-2] = 1.0 / h**2 - (n - 2) / (2 * h)
    rhs[1:-1] = rho[1:-1] ** 2 * f[1:-1]
    if ell == 0:
        # second-order one-sided derivative = 0 at the inner edge
        ab[2, 0] = -3.0 / (2 * h)
        ab[1, 1] = 4.0 / (2 * h)
        ab[0, 2] = -1.0 / (2 * h)
        rhs[0] = 0.0
    else:
        ab[2, 0] = 1.0
        rhs[0] = 0.0
    ab[2, -1] = 1.0
    ab[3, -2] = 0.0
    rhs[-1] = 0.0
    try:
        w = solve_banded((1, 2), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise SingularSystem("annulus solve produced non-finite values")
    dw = np.empty_like(w)
    d2w = np.empty_like(w)
    dw[1:-1] = (w[2:] - w[:-2]) / (2 * h)
    d2w[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / h**2
    residual = float(
        np.max(np.abs(((d2w + (n - 2) * dw - lam * w) / rho**2 - f)[1:-1]))
    )
    report = {"mode": ell, "residual": residual, "grid": num, "inner": float(w[0])}
    return w, float(w[0]), report
