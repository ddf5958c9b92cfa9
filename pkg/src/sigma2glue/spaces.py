"""Spherical-harmonic coefficient algebra and weighted-norm surrogates.

Boundary data on a sphere of radius r is carried as a finite list of
(degree, multiplicity index, coefficient) triples against unit-L2
eigenfunctions of the sphere Laplacian.  The low space is spanned by the
constants and the restrictions of linear functions (degrees 0 and 1);
everything of degree >= 2 is high frequency.  Interior and exterior
harmonic extensions act mode by mode through the two characteristic
exponents of the radial Laplace equation, so profiles are exact power
laws.  Norms are desk surrogates: the dyadic-annulus weighted norm is
sampled on grids, the Hoelder seminorm as a max over grid pairs, and
boundary-data norms as coefficient sums; they enter only through
measured ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConstantModePresent, GridMismatch, LowFrequencyInput

__all__ = [
    "MAX_DEGREE",
    "sphere_area",
    "eigenvalue",
    "mode_multiplicity",
    "flat_eigenvalues",
    "zonal_eval",
    "HarmonicCoeffs",
    "PowerModeProfiles",
    "interior_extension",
    "exterior_extension",
    "cutoff_eta",
    "u_phi_patch",
    "WeightedNormSpec",
    "delta_nk",
    "gamma_window",
    "weighted_norm",
    "split_norm",
    "interior_norm_ratio",
    "patch_norm_ratio",
]

MAX_DEGREE = 8


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def eigenvalue(ell: int, n: int) -> int:
    return ell * (ell + n - 2)


def mode_multiplicity(ell: int, n: int) -> int:
    """Dimension of the degree-ell spherical harmonics in n variables."""
    if ell == 0:
        return 1
    if ell == 1:
        return n
    return math.comb(n + ell - 1, ell) - math.comb(n + ell - 3, ell - 2)


def flat_eigenvalues(n: int, count: int) -> list:
    """Eigenvalues repeated by multiplicity: 0, n-1 (n times), 2n, ..."""
    out = []
    ell = 0
    while len(out) < count:
        out.extend([eigenvalue(ell, n)] * mode_multiplicity(ell, n))
        ell += 1
    return out[:count]


def _gegenbauer(ell: int, alpha: float, x):
    c_prev, c = np.ones_like(x), 2.0 * alpha * x
    if ell == 0:
        return c_prev
    for j in range(2, ell + 1):
        c_prev, c = c, (2.0 * (j + alpha - 1) * x * c - (j + 2 * alpha - 2) * c_prev) / j
    return c


@lru_cache(maxsize=128)
def _zonal_scale(ell: int, n: int) -> float:
    # unit L2 on S^{n-1}: integrate the squared Gegenbauer profile against
    # the zonal measure |S^{n-2}| (1-x^2)^{(n-3)/2} dx by Gauss-Legendre
    nodes, weights = np.polynomial.legendre.leggauss(max(80, 4 * ell + 16))
    alpha = (n - 2) / 2.0
    vals = _gegenbauer(ell, alpha, nodes) ** 2 * (1.0 - nodes**2) ** ((n - 3) / 2.0)
    total = sphere_area(n - 1) * float(np.sum(weights * vals))
    return 1.0 / math.sqrt(total)


def zonal_eval(ell: int, n: int, costheta):
    """Unit-L2 zonal harmonic of degree ell at cos(theta)."""
    x = np.asarray(costheta, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("cos(theta) must lie in [-1, 1]")
    out = _zonal_scale(ell, n) * _gegenbauer(ell, (n - 2) / 2.0, x)
    return float(out) if np.isscalar(costheta) else out


@dataclass(frozen=True)
class HarmonicCoeffs:
    """Coefficient vector on S^{n-1}_r against unit-L2 eigenfunctions."""

    n: int
    r: float
    modes: tuple  # ((ell, m, coeff), ...) sorted by (ell, m), no duplicates

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need ambient dimension n >= 3")
        if self.r <= 0.0:
            raise ValueError("sphere radius must be positive")
        modes = tuple((int(l), int(m), float(c)) for (l, m, c) in self.modes)
        keys = [(l, m) for (l, m, _) in modes]
        if sorted(keys) != keys or len(set(keys)) != len(keys):
            raise ValueError("modes must be sorted by (l, m) without duplicates")
        for l, m, _ in modes:
            if l < 0 or not (0 <= m < mode_multiplicity(l, self.n)):
                raise ValueError(f"invalid mode ({l},{m}) for n={self.n}")
        object.__setattr__(self, "modes", modes)

    def degrees(self):
        return sorted({l for (l, _, _) in self.modes})

    def coefficient(self, ell: int, m: int = 0) -> float:
        for l, mm, c in self.modes:
            if (l, mm) == (ell, m):
                return c
        return 0.0

    def project_high(self) -> "HarmonicCoeffs":
        return HarmonicCoeffs(self.n, self.r, tuple(t for t in self.modes if t[0] >= 2))

    def project_low(self) -> "HarmonicCoeffs":
        return HarmonicCoeffs(self.n, self.r, tuple(t for t in self.modes if t[0] <= 1))

    def boundary_norm(self) -> float:
        # coefficient surrogate for the C^{2,alpha}(S_r) norm
        return sum(abs(c) * (1.0 + eigenvalue(l, self.n)) for (l, _, c) in self.modes)

    def zonal_restriction(self, costheta):
        """Pointwise synthesis; only zonal (m = 0) content is representable."""
        if any(m != 0 for (_, m, _) in self.modes):
            raise ValueError("pointwise synthesis implemented for zonal modes only")
        x = np.asarray(costheta, dtype=float)
        out = np.zeros_like(x)
        for l, _, c in self.modes:
            out = out + c * zonal_eval(l, self.n, x)
        return float(out) if np.isscalar(costheta) else out

    def modes_json(self):
        return [{"l": l, "m": m, "c": c} for (l, m, c) in self.modes]

    @classmethod
    def from_modes_json(cls, n: int, r: float, entries) -> "HarmonicCoeffs":
        modes = tuple(sorted((e["l"], e["m"], e["c"]) for e in entries))
        return cls(n, r, modes)


def cutoff_eta(rho, lo: float, hi: float, deriv: int = 0):
    """C^2 radial cutoff: 1 below lo, 0 above hi, quintic step between."""
    rho = np.asarray(rho, dtype=float)
    s = np.clip((rho - lo) / (hi - lo), 0.0, 1.0)
    inside = (rho > lo) & (rho < hi)
    if deriv == 0:
        return np.where(rho <= lo, 1.0, np.where(rho >= hi, 0.0, 1.0 - s**3 * (10 - 15 * s + 6 * s**2)))
    ds = 1.0 / (hi - lo)
    if deriv == 1:
        return np.where(inside, -30.0 * s**2 * (1 - s) ** 2 * ds, 0.0)
    if deriv == 2:
        return np.where(inside, -60.0 * s * (1 - s) * (1 - 2 * s) * ds**2, 0.0)
    raise ValueError("deriv must be 0, 1, or 2")


@dataclass(frozen=True)
class PowerModeProfiles:
    """Per-mode radial profiles amp * rho^expo, optionally cut off by eta."""

    n: int
    r: float
    entries: tuple  # ((ell, m, amp, expo), ...)
    cutoff: tuple | None = None  # (lo, hi) radii of the eta ramp

    def eval(self, radii):
        rho = np.asarray(radii, dtype=float)
        if not self.entries:
            return np.zeros((0, rho.size))
        vals = np.array([amp * rho**expo for (_, _, amp, expo) in self.entries])
        if self.cutoff is not None:
            vals = vals * cutoff_eta(rho, *self.cutoff)
        return vals

    def eval_derivs(self, radii):
        """(w, w', w'') per mode, exact, with the cutoff by product rule."""
        rho = np.asarray(radii, dtype=float)
        if not self.entries:
            z = np.zeros((0, rho.size))
            return z, z.copy(), z.copy()
        w0, w1, w2 = [], [], []
        if self.cutoff is not None:
            e0 = cutoff_eta(rho, *self.cutoff)
            e1 = cutoff_eta(rho, *self.cutoff, deriv=1)
            e2 = cutoff_eta(rho, *self.cutoff, deriv=2)
        for _, _, amp, expo in self.entries:
            p0 = amp * rho**expo
            p1 = amp * expo * rho ** (expo - 1)
            p2 = amp * expo * (expo - 1) * rho ** (expo - 2)
            if self.cutoff is None:
                w0.append(p0), w1.append(p1), w2.append(p2)
            else:
                w0.append(p0 * e0)
                w1.append(p1 * e0 + p0 * e1)
                w2.append(p2 * e0 + 2 * p1 * e1 + p0 * e2)
        return np.array(w0), np.array(w1), np.array(w2)

    def mode_laplace_residual(self, radii):
        """Per-mode radial Laplacian w'' + (n-1)/rho w' - lambda/rho^2 w."""
        rho = np.asarray(radii, dtype=float)
        w, dw, d2w = self.eval_derivs(radii)
        lam = np.array([float(eigenvalue(l, self.n)) for (l, _, _, _) in self.entries])
        return d2w + (self.n - 1) / rho * dw - lam[:, None] / rho**2 * w

    def boundary_trace(self) -> HarmonicCoeffs:
        modes = tuple(
            sorted((l, m, amp * self.r**expo) for (l, m, amp, expo) in self.entries)
        )
        return HarmonicCoeffs(self.n, self.r, modes)


def interior_extension(phi: HarmonicCoeffs) -> PowerModeProfiles:
    """Harmonic extension into the ball: coefficient times (rho/r)^ell."""
    if any(l <= 1 for (l, _, _) in phi.modes):
        raise LowFrequencyInput("interior extension needs degree >= 2 data")
    entries = tuple((l, m, c * phi.r**-l, float(l)) for (l, m, c) in phi.modes)
    return PowerModeProfiles(phi.n, phi.r, entries)


def exterior_extension(phi: HarmonicCoeffs) -> PowerModeProfiles:
    """Decaying harmonic extension: coefficient times r^{n+l-2} rho^{2-n-l}."""
    if any(l == 0 for (l, _, _) in phi.modes):
        raise ConstantModePresent("exterior extension excludes the constant mode")
    entries = tuple(
        (l, m, c * phi.r ** (phi.n + l - 2), float(2 - phi.n - l)) for (l, m, c) in phi.modes
    )
    return PowerModeProfiles(phi.n, phi.r, entries)


def u_phi_patch(phi: HarmonicCoeffs, gammabar: float, cutoff=(3.0, 4.0)) -> PowerModeProfiles:
    """Exterior boundary-data patch, cut off between cutoff[0]*r and cutoff[1]*r.

    High frequencies ride r^-gammabar |x|^gammabar times their decaying
    extension; the degree-1 part keeps its plain extension.  Both are
    multiplied by the C^2 ramp so the patch vanishes identically outside
    cutoff[1]*r.
    """
    if any(l == 0 for (l, _, _) in phi.modes):
        raise ConstantModePresent("patch data must be orthogonal to constants")
    r, n = phi.r, phi.n
    entries = []
    for l, m, c in phi.modes:
        if l >= 2:
            entries.append((l, m, c * r ** (n + l - 2 - gammabar), float(2 - n - l + gammabar)))
        else:
            entries.append((l, m, c * r ** (n + l - 2), float(2 - n - l)))
    return PowerModeProfiles(n, r, tuple(entries), cutoff=(cutoff[0] * r, cutoff[1] * r))


def delta_nk(n: int, k: int) -> float:
    """Indicial gap controlling the admissible interior weight window."""
    return math.sqrt(2.0 * n * (n - k) / (k * (n - 1)) + ((n - 2 * k) / (2.0 * k)) ** 2)


def gamma_window(n: int, k: int):
    """(gamma_lo, gamma_hi, gammabar_min) for the split-norm weights."""
    d = delta_nk(n, k)
    shift = 1.0 - n / (2.0 * k)
    return (-d + shift, d + shift, n / 2.0 + shift)


@dataclass(frozen=True)
class WeightedNormSpec:
    """Weight/exponent bundle for the dyadic surrogate norms."""

    mu: float
    alpha: float = 0.5
    r: float = 1.0
    gamma_pair: tuple | None = None  # (gamma, gammabar) for the split norm
    n: int | None = None
    k: int | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0,1)")
        if self.r <= 0.0:
            raise ValueError("outer radius must be positive")
        if self.gamma_pair is not None and self.n is not None and self.k is not None:
            lo, hi, gbar_min = gamma_window(self.n, self.k)
            g, gbar = self.gamma_pair
            if not (lo < g < hi) or not (gbar > gbar_min):
                raise ValueError(
                    f"weights outside the admissible window: gamma in ({lo:.4g},{hi:.4g}), "
                    f"gammabar > {gbar_min:.4g}"
                )


def _holder_quotient(rho, vals, alpha):
    d = np.abs(vals[:, None] - vals[None, :])
    sep = np.abs(rho[:, None] - rho[None, :])
    mask = sep > 0
    return float(np.max(d[mask] / sep[mask] ** alpha)) if np.any(mask) else 0.0


def weighted_norm(grid, u, mu, alpha=0.5, r=None, du=None, d2u=None, sigmas=None):
    """Dyadic surrogate of the weighted Hoelder norm on a radial profile.

    sup over annuli [sigma, 2 sigma] of sigma^-mu ( max|u| + sigma max|u'|
    + sigma^2 max|u''| + sigma^(2+alpha) * pairwise Hoelder quotient of u'').
    By default sigma runs dyadically downward from r/2 (interior norm);
    pass explicit sigmas for annulus variants that run upward from r.
    """
    rho = np.asarray(grid, dtype=float)
    vals = np.asarray(u, dtype=float)
    if rho.shape != vals.shape or rho.ndim != 1:
        raise GridMismatch("grid and profile must be matching 1-d arrays")
    if du is None:
        du = np.gradient(vals, rho)
    if d2u is None:
        d2u = np.gradient(du, rho)
    if r is None:
        r = float(rho.max())
    if sigmas is None:
        sigmas = []
        s = r / 2.0
        while s >= rho.min() * (1 - 1e-12):
            sigmas.append(s)
            s /= 2.0
    best = 0.0
    for s in sigmas:
        sel = (rho >= s * (1 - 1e-12)) & (rho <= 2 * s * (1 + 1e-12))
        if np.count_nonzero(sel) < 3:
            continue
        block = (
            np.max(np.abs(vals[sel]))
            + s * np.max(np.abs(du[sel]))
            + s**2 * np.max(np.abs(d2u[sel]))
            + s ** (2 + alpha) * _holder_quotient(rho[sel], d2u[sel], alpha)
        )
        best = max(best, s**-mu * block)
    return best


def split_norm(high: float, low: float, r: float, gamma: float, gammabar: float) -> float:
    """Two-weight assembly r^(gamma - gammabar) |u_high| + |u_low|."""
    return r ** (gamma - gammabar) * high + low


def _dyadic_grid(r, levels, per_level=17):
    pieces = [np.linspace(r / 2**(j + 1), r / 2**j, per_level) for j in range(levels)]
    return np.unique(np.concatenate(pieces))


def interior_norm_ratio(phi: HarmonicCoeffs, mu: float, alpha: float = 0.5, levels: int = 6) -> float:
    """Measured ratio of the extension's weighted norm to r^-mu times the
    boundary norm (per-mode surrogate, summed)."""
    prof = interior_extension(phi)
    grid = _dyadic_grid(phi.r, levels)
    w, dw, d2w = prof.eval_derivs(grid)
    total = sum(
        weighted_norm(grid, w[i], mu, alpha=alpha, r=phi.r, du=dw[i], d2u=d2w[i])
        for i in range(len(prof.entries))
    )
    return total / (phi.r**-mu * phi.boundary_norm())


def patch_norm_ratio(phi: HarmonicCoeffs, nu: float, gammabar: float, alpha: float = 0.5) -> float:
    """Measured ratio for the exterior patch on [r, 4r] against r^-nu."""
    prof = u_phi_patch(phi, gammabar)
    r = phi.r
    grid = np.unique(np.concatenate([np.linspace(r, 2 * r, 33), np.linspace(2 * r, 4 * r, 33)]))
    w, dw, d2w = prof.eval_derivs(grid)
    total = sum(
        weighted_norm(grid, w[i], nu, alpha=alpha, r=r, du=dw[i], d2u=d2w[i], sigmas=[r, 2 * r])
        for i in range(len(prof.entries))
    )
    return total / (r**-nu * phi.boundary_norm())
