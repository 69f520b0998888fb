"""Smooth bump multiplier symbols and their frequency-side calculus.

A symbol is the standard mollifier bump

    phi(xi) = exp(1 - 1/(1 - |xi - xi0|^2 / rho^2))   for |xi - xi0| < rho,
    phi(xi) = 0                                        otherwise,

so phi(xi0) = 1, 0 <= phi <= 1, and phi is smooth with compact support.
A SymbolProduct is a positive integer power of a bump; power 2 realizes the
multiplier of the composed operator (localize, then localize adjointly).

Everything downstream needs three derived quantities:

  * plane integrals  int s  and  int s^2   (radial quadrature),
  * the inverse Fourier transform table  s_check(z) = int s(xi) e^{2 pi i z.xi} dxi,
  * a certified bound tau on the transform mass outside a box, obtained from
    |s_check(z)| <= ||Delta^5 s||_L1 / (2 pi |z|)^10  (ten integrations by parts).

Because every symbol is a radial bump about its center, the transform of a
recentered symbol is radial and the general case is a pure modulation:
s_check(z) = e^{2 pi i z.xi0} * (recentered transform)(|z|).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import j0

from .errors import BoxTooSmallError, InvalidParameterError

# Clamp for the profile exponent; exp(-700) underflows gracefully, larger
# negative arguments would lose the "exactly zero outside" contract anyway.
_EXP_CLAMP = -700.0

# Decay order of the certified tail bound: |s_check(z)| <= A / (2 pi |z|)^k.
TAIL_DECAY_ORDER = 10

# (Delta^5 psi) / psi = num(u) / (1-u)^20 with u = r^2, for psi = phi^p at
# rho = 1.  Exact integer numerator coefficients (highest degree first),
# generated once from the recurrence in _laplacian_ratio_poly below; the
# regeneration is exercised by the test suite.
_LAP5_NUM_COEFFS = {
    1: [14745600, 486604800, 457113600, -7874150400, 11087585280,
        10797096960, -39057489920, 32468213760, -1525283840, -13046619136,
        7372774400, -942694400, -307200000, 66969600, 2334720],
    2: [29491200, 1474560000, 7756185600, -19818086400, -33920778240,
        113871421440, -60139110400, -77075578880, 104010219520,
        -34168111104, -7834828800, 6841958400, -973209600, -58982400,
        5898240],
}
_LAP5_DEN_POW = 20


@dataclass(frozen=True)
class Symbol:
    """A radial bump multiplier symbol; immutable, safe to share."""

    center: tuple
    radius: float
    label: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidParameterError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def power(self):
        return 1

    def value(self, xi):
        """Evaluate at points ``xi`` of shape (..., 2); exactly 0 outside support."""
        xi = np.asarray(xi, dtype=float)
        d2 = (xi[..., 0] - self.center[0]) ** 2 + (xi[..., 1] - self.center[1]) ** 2
        return bump_profile(np.sqrt(d2) / self.radius)

    def value_radial(self, r):
        """Evaluate at radial distance ``r`` from the center."""
        return bump_profile(np.asarray(r, dtype=float) / self.radius)

    def to_json(self):
        return {"center": [self.center[0], self.center[1]],
                "radius": self.radius, "label": self.label}

    @staticmethod
    def from_json(obj):
        return Symbol(center=tuple(obj["center"]), radius=obj["radius"],
                      label=obj.get("label", ""))


@dataclass(frozen=True)
class SymbolProduct:
    """A positive integer power of a Symbol; power 2 gives |phi|^2."""

    base: Symbol
    power: int = 2

    def __post_init__(self):
        if int(self.power) < 1 or self.power != int(self.power):
            raise InvalidParameterError(f"power must be a positive integer, got {self.power}")
        object.__setattr__(self, "power", int(self.power))

    @property
    def center(self):
        return self.base.center

    @property
    def radius(self):
        return self.base.radius

    @property
    def label(self):
        return f"{self.base.label}^{self.power}" if self.base.label else ""

    def value(self, xi):
        return self.base.value(xi) ** self.power

    def value_radial(self, r):
        return self.base.value_radial(r) ** self.power

    def to_json(self):
        return {"base": self.base.to_json(), "power": self.power}

    @staticmethod
    def from_json(obj):
        return SymbolProduct(base=Symbol.from_json(obj["base"]), power=obj["power"])


def bump_profile(t, power=1):
    """Unit bump profile exp(1 - 1/(1 - t^2)) at normalized radius t >= 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = t < 1.0
    if np.any(inside):
        arg = power * (1.0 - 1.0 / (1.0 - t[inside] ** 2))
        out[inside] = np.exp(np.maximum(arg, _EXP_CLAMP))
    return out


def make_bump(center, radius, label=""):
    """Construct the standard bump symbol centered at ``center`` with support radius ``radius``."""
    return Symbol(center=tuple(center), radius=radius, label=label)


def galilean_recenter(s):
    """Copy of ``s`` with its frequency center moved to the origin."""
    if isinstance(s, SymbolProduct):
        return SymbolProduct(base=galilean_recenter(s.base), power=s.power)
    return Symbol(center=(0.0, 0.0), radius=s.radius, label=s.label)


def _radial_profile_power(s):
    """(radius, total power p) so that s(xi) = bump_profile(|xi-c|/radius)^p."""
    if isinstance(s, SymbolProduct):
        return s.base.radius, s.power
    return s.radius, 1


def _plane_integral_of_power(s, extra_power):
    """int s(xi)^extra_power dxi by adaptive radial quadrature (exact modulo quad tol)."""
    rho, p = _radial_profile_power(s)
    ptot = p * extra_power
    val, _ = quad(lambda t: t * float(bump_profile(np.array([t]), ptot)[0]), 0.0, 1.0,
                  epsabs=1e-13, epsrel=1e-12, limit=200)
    return 2.0 * np.pi * rho ** 2 * val


def symbol_integral(s):
    """int s(xi) dxi over the plane; strictly positive for any constructed symbol."""
    return _plane_integral_of_power(s, 1)


def symbol_l2_norm_sq(s):
    """int s(xi)^2 dxi over the plane."""
    return _plane_integral_of_power(s, 2)


# ---------------------------------------------------------------------------
# certified tail bound
# ---------------------------------------------------------------------------

def _laplacian_ratio_poly(p, k=5):
    """Numerator coefficients of (Delta^k psi)/psi = num(u)/(1-u)^(4k), psi = phi^p, rho = 1.

    Uses the radial form of the plane Laplacian in u = r^2:
    Delta F(r^2) = 4u F'' + 4F'.  Returns exact integers via sympy.
    """
    import sympy as sp

    u = sp.symbols("u")
    G = p * (1 - 1 / (1 - u))
    D = sp.Integer(1)  # (L^j F)/F as a rational function
    for _ in range(k):
        Du, Duu = sp.diff(D, u), sp.diff(D, u, 2)
        Gu, Guu = sp.diff(G, u), sp.diff(G, u, 2)
        D = sp.cancel(4 * u * (Duu + 2 * Du * Gu + D * (Guu + Gu ** 2)) + 4 * (Du + D * Gu))
    num, den = sp.fraction(sp.cancel(D))
    m = int(sp.degree(den, u))
    lead = sp.Poly(den, u).LC()
    if sp.expand(den - lead * (u - 1) ** m) != 0:
        raise RuntimeError("unexpected denominator form in Laplacian recurrence")
    np_num = sp.Poly(sp.expand(num * lead * (-1) ** m), u)
    return [int(c) for c in np_num.all_coeffs()], m


@lru_cache(maxsize=8)
def _laplacian5_l1_norm(power):
    """||Delta^5 psi||_L1 for psi = phi^power at rho = 1 (log-space quadrature)."""
    if power in _LAP5_NUM_COEFFS:
        coeffs, den_pow = _LAP5_NUM_COEFFS[power], _LAP5_DEN_POW
    else:
        coeffs, den_pow = _laplacian_ratio_poly(power)
    c = np.array(coeffs, dtype=float)

    def integrand(uu):
        scalar = np.isscalar(uu)
        uu = np.atleast_1d(np.asarray(uu, dtype=float))
        numv = np.abs(np.polyval(c, uu))
        lognum = np.where(numv > 0, np.log(numv + 1e-300), -745.0)
        logval = lognum - den_pow * np.log1p(-uu) + power * (1.0 - 1.0 / (1.0 - uu))
        out = np.exp(np.minimum(logval, 700.0))
        return float(out[0]) if scalar else out

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1.0, epsrel=1e-9, limit=500)
    # 1.02: headroom for the quadrature of the constant itself (upper bound use)
    return 1.02 * np.pi * val


def transform_tail_bound(s, r_out):
    """Certified bound on int_{|z| >= r_out} |s_check(z)| dz.

    From |s_check(z)| <= A / (2 pi |z|)^k with k = 10 and A = ||Delta^5 s||_L1;
    A scales as rho^(2-k) under dilation of the support radius.
    """
    rho, p = _radial_profile_power(s)
    k = TAIL_DECAY_ORDER
    A = _laplacian5_l1_norm(p) * rho ** (2 - k)
    if r_out <= 0:
        raise InvalidParameterError("tail radius must be positive")
    return A * (2 * np.pi) ** (1 - k) * r_out ** (2 - k) / (k - 2)


# ---------------------------------------------------------------------------
# inverse Fourier transform tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialTransform:
    """Radial profile of the inverse transform of a recentered symbol.

    ``spline(w)`` evaluates s_check at radius w for w in [0, r_max]; values are
    real because the recentered symbol is real and even.
    """

    r_max: float
    grid: np.ndarray
    values: np.ndarray
    spline: object
    at_zero: float  # = int s

    def __call__(self, w):
        return self.spline(np.asarray(w, dtype=float))


def radial_inverse_ft(s, r_max, n_grid=16385):
    """Tabulate w -> int s0(xi) e^{2 pi i z.xi} dxi at |z| = w for the recentered s0.

    Gauss-Legendre Hankel quadrature: s0_check(w) = 2 pi int_0^rho s0(r) J0(2 pi w r) r dr.
    Node count tracks the Bessel phase 2 pi * r_max * rho so the rule stays spectral.
    """
    rho, p = _radial_profile_power(s)
    n_nodes = max(800, int(2.5 * r_max * rho) + 400)
    x, wq = np.polynomial.legendre.leggauss(n_nodes)
    r = 0.5 * rho * (x + 1.0)
    base = bump_profile(r / rho, p) * r * (0.5 * rho * wq)
    grid = np.linspace(0.0, r_max, n_grid)
    vals = np.empty(n_grid)
    for i in range(0, n_grid, 2048):
        sl = slice(i, min(i + 2048, n_grid))
        vals[sl] = 2.0 * np.pi * (j0(2.0 * np.pi * np.outer(grid[sl], r)) @ base)
    return RadialTransform(r_max=r_max, grid=grid, values=vals,
                           spline=CubicSpline(grid, vals), at_zero=float(vals[0]))


@dataclass(frozen=True)
class FtTable:
    """Sampled inverse transform of a symbol product on [-half_width, half_width)^2.

    ``values[i, j]`` is s_check at (axis[i], axis[j]); ``tau`` is the certified
    bound on the transform mass outside the closed box.
    """

    half_width: float
    samples: int
    axis: np.ndarray
    values: np.ndarray
    tau: float
    radial: RadialTransform
    center: tuple

    def value_at(self, z):
        """Interpolated s_check at arbitrary points z of shape (..., 2)."""
        z = np.asarray(z, dtype=float)
        w = np.hypot(z[..., 0], z[..., 1])
        mod = np.exp(2j * np.pi * (z[..., 0] * self.center[0] + z[..., 1] * self.center[1]))
        return mod * self.radial(w)


def inverse_ft_table(sp, half_width, samples, tail_tol=1e-4):
    """Uniform table of the inverse transform, with a certified outside-box tail.

    ``samples`` must be a power of two; the grid is endpoint-exclusive,
    axis[i] = -half_width + i * (2 half_width / samples).  Raises
    BoxTooSmallError when the certified tail exceeds ``tail_tol``.
    """
    if not isinstance(sp, (Symbol, SymbolProduct)):
        raise InvalidParameterError("expected a Symbol or SymbolProduct")
    n = int(samples)
    if n < 2 or (n & (n - 1)) != 0:
        raise InvalidParameterError(f"samples must be a power of two, got {samples}")
    if half_width <= 0:
        raise InvalidParameterError("half_width must be positive")
    tau = transform_tail_bound(sp, half_width)
    if tau > tail_tol:
        raise BoxTooSmallError(
            f"certified tail {tau:.3e} exceeds tolerance {tail_tol:.3e} "
            f"at half_width {half_width}; enlarge the box")
    radial = radial_inverse_ft(sp, r_max=half_width * np.sqrt(2.0) + 1.0)
    axis = -half_width + (2.0 * half_width / n) * np.arange(n)
    zx, zy = np.meshgrid(axis, axis, indexing="ij")
    w = np.hypot(zx, zy)
    vals = radial(w).astype(complex)
    cx, cy = sp.center
    if cx != 0.0 or cy != 0.0:
        vals *= np.exp(2j * np.pi * (zx * cx + zy * cy))
    return FtTable(half_width=float(half_width), samples=n, axis=axis, values=vals,
                   tau=float(tau), radial=radial, center=(cx, cy))
