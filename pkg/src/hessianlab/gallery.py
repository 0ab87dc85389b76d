"""Degenerate right-hand sides, growth-exponent calculators, regime
classification, and explicit ellipsoid barriers.

The generating profile is ``cutoff(|x_n| / |x'|^a) * |x'|^b`` on the unit
ball (times ``exp(-|z|^2)`` and a normalization constant in the compact
variant).  The profile vanishes on ``{|x_n| >= |x'|^a}``, degenerates at
the origin, and its power regularity is controlled by (a, b, k); the
predicted center-growth exponent of the solution is
``theta = (2a + 2k - 2 + b) / (k a)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi

import numpy as np
from numpy.polynomial.legendre import leggauss

from .backend import core

VARIANTS = ("real-ball", "complex-ball", "compact-product")

REGIME_NOT_C11 = "not-C11"
REGIME_LP = "Lp-only"
REGIME_HOLDER = "holder-rhs"
REGIME_LIPSCHITZ_POWER = "lipschitz-power"
REGIME_C11_POWER = "c11-power"


class QuadratureError(RuntimeError):
    """Normalization quadrature failed its self-consistency check."""


@dataclass(frozen=True)
class ExampleSpec:
    """Parameters of one gallery example.

    n >= 2 is the ambient (real or complex) dimension, 2 <= k <= n the
    Hessian level, a > 1 the cutoff steepness, b the radial power.
    """

    n: int
    k: int
    a: float
    b: float
    variant: str = "real-ball"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if not 2 <= self.k <= self.n:
            raise ValueError(f"need 2 <= k <= n, got k={self.k}, n={self.n}")
        if not self.a > 1:
            raise ValueError(f"need a > 1, got a={self.a}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def geometry(self) -> str:
        return "fubini-study-product" if self.variant == "compact-product" else "euclidean"

    @property
    def irregular_window_top(self) -> float:
        return 2.0 * (self.k - 1) * (self.a - 1)

    @property
    def in_irregular_window(self) -> bool:
        """b inside (0, 2(k-1)(a-1)): solutions fail to be C^{1,1} near 0."""
        return 0.0 < self.b < self.irregular_window_top

    @property
    def growth_exponent(self) -> float:
        """theta = (2a + 2k - 2 + b) / (k a)."""
        return (2.0 * self.a + 2.0 * self.k - 2.0 + self.b) / (self.k * self.a)

    @property
    def c11_power_threshold(self) -> float:
        """gamma beyond which the rhs power is C^{1,1} at the top of the
        irregular window: 1/(k-1) + 1/((a-1)(k-1))."""
        return 1.0 / (self.k - 1) + 1.0 / ((self.a - 1) * (self.k - 1))


def eta(t):
    """Smooth cutoff: exp(-1/(1-t^2)) on (-1, 1), zero outside.

    Nonnegative, all derivatives vanish at |t| = 1.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        u = 1.0 - t[inside] ** 2
        out[inside] = np.exp(-1.0 / u)
    if out.ndim == 0:
        return float(out)
    return out


def rhs_real_radial(r, t, spec: ExampleSpec):
    """The real-ball profile as a function of (r, t) = (|x'|, |x_n|).

    Value 0 on the axis r = 0 (the support condition forces the limit for
    t > 0; at the origin it is a continuity convention, valid since b > 0
    throughout the irregular window).  For b < 0 the axis value is kept 0
    as well and callers are expected to exclude a cylinder around it.
    """
    r = np.asarray(r, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    r, t = np.broadcast_arrays(r, t)
    out = np.zeros(r.shape, dtype=np.float64)
    pos = r > 0.0
    with np.errstate(divide="ignore", over="ignore"):
        ratio = np.where(pos, np.abs(t) / np.where(pos, r, 1.0) ** spec.a, np.inf)
        out[pos] = eta(ratio[pos]) * r[pos] ** spec.b
    if out.ndim == 0:
        return float(out)
    return out


def rhs_real(x, spec: ExampleSpec) -> float:
    """Profile at a point x in the closed unit ball of R^n."""
    if spec.variant != "real-ball":
        raise ValueError(f"point form needs variant 'real-ball', got {spec.variant!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n,):
        raise ValueError(f"expected a point in R^{spec.n}")
    r = float(np.linalg.norm(x[:-1]))
    t = float(abs(x[-1]))
    return float(rhs_real_radial(r, t, spec))


def rhs_complex_radial(rho, tau, spec: ExampleSpec, amplitude: float = 1.0):
    """Complex / compact profile over (|z'|, |z_n|):

        amplitude * exp(-|z|^2) * cutoff(|z_n| / |z'|^a) * |z'|^b
    """
    rho = np.asarray(rho, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    base = rhs_real_radial(rho, tau, spec)
    return amplitude * np.exp(-(rho**2 + tau**2)) * base


def rhs_complex(z, spec: ExampleSpec, amplitude: float = 1.0) -> float:
    """Profile at a point z of C^n (the affine chart in the compact case).

    Decays like exp(-|z|^2), so the zero extension across the divisors at
    infinity stays continuous; strictly decreasing in |z_n| wherever
    positive.
    """
    if spec.variant not in ("complex-ball", "compact-product"):
        raise ValueError(f"complex form not defined for variant {spec.variant!r}")
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    z = np.asarray(z, dtype=np.complex128)
    if z.shape != (spec.n,):
        raise ValueError(f"expected a point in C^{spec.n}")
    rho = float(np.linalg.norm(z[:-1]))
    tau = float(abs(z[-1]))
    return float(rhs_complex_radial(rho, tau, spec, amplitude))


# -- Fubini-Study product quadrature -----------------------------------------

def _gl_nodes(lo: float, hi: float, npts: int):
    x, w = leggauss(npts)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


def fs_volume_exact(n: int) -> float:
    """Total volume of the product of projective factors: n * pi^n.

    Derived by reducing the top power of the product form to radial
    coordinates on the affine chart (the closed-form oracle for the
    quadrature tests).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    return n * pi**n


def _fs_prefactor(n: int) -> float:
    # n! * area(S^{2n-3}) * area(S^1-factor): sphere areas from the
    # radial reduction of the chart volume density
    return factorial(n) * (2.0 * pi ** (n - 1) / factorial(n - 2)) * (2.0 * pi)


def fs_volume_quad(n: int, quad_level: int = 2) -> float:
    """Chart quadrature of the total volume, for cross-checking."""
    npts = 48 * 2**quad_level
    # rho part: int_0^inf rho^{2n-3} / (1+rho^2)^n drho, log substitution
    w_lo, w_hi = -42.0 / max(2 * n - 2, 1), 21.0
    w, ww = _gl_nodes(w_lo, w_hi, npts)
    rho = np.exp(w)
    q_rho = float(np.sum(ww * rho ** (2 * n - 2) / (1 + rho**2) ** n))
    # tau part: int_0^inf tau / (1+tau^2)^2 dtau
    v, vw = _gl_nodes(-21.0, 21.0, npts)
    tau = np.exp(v)
    q_tau = float(np.sum(vw * tau**2 / (1 + tau**2) ** 2))
    return _fs_prefactor(n) * q_rho * q_tau


def _fs_profile_integral(spec: ExampleSpec, quad_level: int) -> float:
    """Chart integral of the unit-amplitude profile against the product
    volume density, in doubly-radial coordinates.

    Inner integral substitutes tau = rho^a * s with s in (0, 1) (the
    cutoff support), outer uses a log substitution in rho; both ends
    decay exponentially after the change of variables.
    """
    n, a, b = spec.n, spec.a, spec.b
    q = 2 * n - 2 + b + 2 * a  # outer rho exponent after substitutions
    if q <= 0:
        raise ValueError(f"profile not integrable: b={b} too negative")
    npts_o = 48 * 2**quad_level
    npts_i = 32 * 2**quad_level
    w_lo = -42.0 / q
    w_hi = np.log(6.5)
    w, ww = _gl_nodes(w_lo, w_hi, npts_o)
    rho = np.exp(w)
    s, sw = _gl_nodes(0.0, 1.0, npts_i)
    eta_s = eta(s) * s
    rho2a = rho[:, None] ** (2 * a)
    inner = np.sum(
        sw * eta_s * np.exp(-rho2a * s[None, :] ** 2)
        / (1 + rho2a * s[None, :] ** 2) ** 2,
        axis=1,
    )
    outer = ww * rho**q * np.exp(-(rho**2)) / (1 + rho**2) ** n
    return _fs_prefactor(n) * float(np.sum(outer * inner))


def normalization_constant(spec: ExampleSpec, quad_level: int = 2,
                           amplitude: float = 1.0) -> float:
    """Constant A making the profile integrate to the total volume:

        A * integral(amplitude-scaled profile) == integral of the volume form.

    Certified by a refinement check between quad_level and quad_level+1
    (relative change below 1e-6), otherwise QuadratureError.
    """
    if spec.variant != "compact-product":
        raise ValueError("normalization applies to the compact-product variant")
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    vol = fs_volume_exact(spec.n)
    coarse = _fs_profile_integral(spec, quad_level)
    fine = _fs_profile_integral(spec, quad_level + 1)
    if not np.isfinite(fine) or fine <= 0:
        raise QuadratureError(f"profile integral degenerate: {fine}")
    if abs(fine - coarse) > 1e-6 * abs(fine):
        raise QuadratureError(
            f"quadrature not converged: {coarse} vs {fine} at level {quad_level}"
        )
    return vol / (amplitude * fine)


# -- exponent calculators and regime classification --------------------------

@dataclass(frozen=True)
class RegularityPrediction:
    theta: float
    gamma_c11: float
    regime: str
    power_gamma: float | None = None
    notes: str = ""


def regime_case_b(case: int, a: float, k: int, p: float | None = None) -> float:
    """The b value realizing one of the four reference regimes.

    1: rhs in L^p (needs p > 1);  2: rhs Holder;  3: a Lipschitz power of
    the rhs (needs k >= 3);  4: a C^{1,1} power of the rhs.
    """
    if case == 1:
        if p is None or p <= 1:
            raise ValueError("case 1 needs p > 1")
        return -2.0 * a / p + 2.0
    if case == 2:
        return 2.0
    if case == 3:
        if k < 3:
            raise ValueError("case 3 needs k >= 3")
        return (k - 2) * (a - 2) - 3.0
    if case == 4:
        return 2.0 * (k - 1) * (a - 2)
    raise ValueError(f"unknown case {case}")


def predict(spec: ExampleSpec, p: float | None = None) -> RegularityPrediction:
    """Growth exponent, power-smoothness threshold, and regime for a spec.

    Regime matching (exact b patterns, checked best-first):
      case 4: b = 2(k-1)(a-2), a C^{1,1} power with
              gamma = (1 + 2/(a-2))/(k-1) and theta = 2 - 2(1/a - 1/(ka));
      case 3: k >= 3, b = (k-2)(a-2)-3, a Lipschitz power with
              gamma = a/((k-2)(a-1)-3) and theta = 1 - 1/(ak);
      case 2: b = 2, Holder rhs, theta = 2/k + 2/a;
      case 1: b = -2a/p + 2 for the given p, rhs in L^p,
              theta = (2/k)(1 - 1/p) + 2/a.
    Otherwise the b-window decides: inside (0, 2(k-1)(a-1)) the solution
    is not C^{1,1} near the center; at or above the window top a power at
    the sharp threshold is C^{1,1}; b <= 0 leaves only integrability.
    """
    a, k, b = spec.a, spec.k, spec.b
    theta = spec.growth_exponent
    gamma_c11 = spec.c11_power_threshold

    def close(x, y):
        return abs(x - y) <= 1e-12 * max(1.0, abs(x), abs(y))

    if a != 2 and close(b, 2.0 * (k - 1) * (a - 2)):
        g = (1.0 + 2.0 / (a - 2.0)) / (k - 1.0)
        closed = 2.0 - 2.0 * (1.0 / a - 1.0 / (k * a))
        if not close(theta, closed):
            raise AssertionError(f"closed form mismatch: {theta} vs {closed}")
        return RegularityPrediction(theta, gamma_c11, REGIME_C11_POWER, g,
                                    "C^{1,1} power of the rhs")
    if k >= 3 and close(b, (k - 2) * (a - 2) - 3.0):
        g = a / ((k - 2) * (a - 1) - 3.0)
        closed = 1.0 - 1.0 / (a * k)
        if not close(theta, closed):
            raise AssertionError(f"closed form mismatch: {theta} vs {closed}")
        return RegularityPrediction(theta, gamma_c11, REGIME_LIPSCHITZ_POWER, g,
                                    "Lipschitz power of the rhs")
    if close(b, 2.0):
        closed = 2.0 / k + 2.0 / a
        if not close(theta, closed):
            raise AssertionError(f"closed form mismatch: {theta} vs {closed}")
        return RegularityPrediction(theta, gamma_c11, REGIME_HOLDER, None,
                                    "Holder-continuous rhs")
    if p is not None:
        if p <= 1:
            raise ValueError("need p > 1")
        if close(b, -2.0 * a / p + 2.0):
            closed = (2.0 / k) * (1.0 - 1.0 / p) + 2.0 / a
            if not close(theta, closed):
                raise AssertionError(f"closed form mismatch: {theta} vs {closed}")
            return RegularityPrediction(theta, gamma_c11, REGIME_LP, None,
                                        f"rhs in L^{p}")
    if spec.in_irregular_window:
        return RegularityPrediction(theta, gamma_c11, REGIME_NOT_C11, None,
                                    "growth beats every quadratic: no C^{1,1}")
    if b <= 0:
        return RegularityPrediction(theta, gamma_c11, REGIME_LP, None,
                                    "rhs integrable-singular on the axis")
    return RegularityPrediction(theta, gamma_c11, REGIME_C11_POWER, None,
                                "at or above the irregular window top")


# -- ellipsoid barriers -------------------------------------------------------

@dataclass(frozen=True)
class BarrierSpec:
    """Explicit convex ellipsoid barrier for one (spec, epsilon).

    The sublevel set E sits inside the box P = {|x'| < eps^{1/a},
    |x_n| < eps}; the barrier Hessian is a constant diagonal matrix, so
    its Hessian symmetric function is exact.  ``comparison_amplitude``
    is the constant in front of eps^{(2a+2(k-1)+b)/(ka)} * v in the
    comparison bound, calibrated once at ``reference_epsilon``.
    """

    spec: ExampleSpec
    epsilon: float
    variant: str
    center1: float
    semi_axes: np.ndarray  # per real coordinate
    level: float  # E = {quadratic < level}, with the real form carrying -1
    hessian_diag: np.ndarray
    sk_hessian: float
    c1_reference: float
    comparison_amplitude: float

    @property
    def box_radius_prime(self) -> float:
        return self.epsilon ** (1.0 / self.spec.a)

    @property
    def box_radius_last(self) -> float:
        return self.epsilon

    def quadratic(self, x) -> np.ndarray:
        """The ellipsoid quadratic (without the -1 level shift)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        q = ((x[:, 0] - self.center1) / self.semi_axes[0]) ** 2
        for j in range(1, x.shape[1]):
            q = q + (x[:, j] / self.semi_axes[j]) ** 2
        return q

    def value(self, x) -> np.ndarray:
        """Barrier value v; E = {v < 0} (real) or {v < 1} (complex)."""
        q = self.quadratic(x)
        return q - 1.0 if self.variant == "real-ball" else q

    def value_min_at_radii(self, r, t) -> np.ndarray:
        """min of v over the torus |x'| = r, |x_n| = t.

        The last coordinate enters through |x_n| only; over the x'
        sphere the quadratic is minimized in closed form (the center
        offset sits in x_1).
        """
        r = np.asarray(r, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        al = self.semi_axes[0]
        c = self.center1
        n = self.spec.n
        if n == 2:
            q1 = ((r - c) / al) ** 2
        else:
            be = self.semi_axes[1]
            x1_star = c * be**2 / (be**2 - al**2) if be > al else c
            x1 = np.clip(x1_star, -r, r)
            q1 = ((x1 - c) / al) ** 2 + (r**2 - x1**2) / be**2
        q = q1 + (t / self.semi_axes[-1]) ** 2
        return q - 1.0 if self.variant == "real-ball" else q

    def boundary_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.normal(size=(count, self.semi_axes.size))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pts = u * self.semi_axes[None, :]
        pts[:, 0] += self.center1
        return pts


def barrier(spec: ExampleSpec, epsilon: float, reference_epsilon: float = 0.2,
            samples: int = 4000, seed: int = 0) -> BarrierSpec:
    """Construct and verify the ellipsoid barrier at a given epsilon.

    Checks performed here: admissibility of epsilon, containment of E
    inside the box P (boundary sampling), the profile lower bound on E
    (interior sampling; eta(1/4) 4^{-b} eps^{b/a}, times exp(-2) for the
    complex variants), and stability of sk * eps^{2+2(k-1)/a} against the
    reference epsilon.  ``comparison_amplitude`` = c2 is sized so that
    the Hessian function of c2 eps^{(2a+2(k-1)+b)/(ka)} v stays below the
    profile bound on E; only the real variant feeds the solver, the
    complex geometry is kept for containment and bound checks.
    """
    a, b, n, k = spec.a, spec.b, spec.n, spec.k
    real = spec.variant == "real-ball"
    gap = epsilon**2 + epsilon ** (2.0 / a)
    if real and not gap < 1.0:
        raise ValueError(f"epsilon={epsilon} too large: eps^2 + eps^(2/a) >= 1")
    if not real and gap > 1.0:
        raise ValueError(f"epsilon={epsilon} too large for the complex barrier")

    def build(eps: float):
        rp = eps ** (1.0 / a)
        if real:
            axes = np.array([rp / 4.0] + [rp / 2.0] * (n - 2) + [eps / 4.0 ** (a + 1)])
            hess = 2.0 / axes**2
        else:
            # one entry per complex coordinate of the chart quadratic
            axes = np.array([rp / 4.0] * (n - 1) + [eps / 4.0 ** (a + 1)])
            hess = 1.0 / axes**2
        sk = float(core.esp(hess, k)[0, k])
        return rp / 2.0, axes, hess, sk

    scaling = 2.0 + 2.0 * (k - 1) / a
    _, _, _, sk_ref = build(reference_epsilon)
    c1 = sk_ref * reference_epsilon**scaling
    center1, axes, hess, sk = build(epsilon)
    c1_cur = sk * epsilon**scaling
    if sk > 1.10 * c1 * epsilon ** (-scaling):
        raise AssertionError("barrier Hessian bound drifted beyond 10%")

    bound_const = eta(0.25) * 4.0 ** (-b) * (1.0 if real else np.exp(-2.0))
    inf_bound = bound_const * epsilon ** (b / a)
    comparison_amplitude = 0.99 * (bound_const / max(c1, c1_cur)) ** (1.0 / k)

    out = BarrierSpec(
        spec=spec, epsilon=epsilon, variant=spec.variant, center1=center1,
        semi_axes=axes, level=0.0 if real else 1.0,
        hessian_diag=hess, sk_hessian=sk, c1_reference=c1,
        comparison_amplitude=comparison_amplitude,
    )

    rng = np.random.default_rng(seed)
    bd = out.boundary_points(samples, rng)
    rprime = np.linalg.norm(bd[:, :-1], axis=1)
    tlast = np.abs(bd[:, -1])
    if not (np.all(rprime < out.box_radius_prime) and np.all(tlast < out.box_radius_last)):
        raise AssertionError("barrier sublevel set escapes its box")

    # interior samples for the profile lower bound
    shrink = rng.uniform(0.0, 1.0, size=samples) ** (1.0 / bd.shape[1])
    inter = bd.copy()
    inter[:, 0] -= center1
    inter *= shrink[:, None]
    inter[:, 0] += center1
    ri = np.linalg.norm(inter[:, :-1], axis=1)
    ti = np.abs(inter[:, -1])
    if real:
        fvals = rhs_real_radial(ri, ti, spec)
    else:
        fvals = rhs_complex_radial(ri, ti, spec)
    if fvals.min() < inf_bound * (1.0 - 1e-9):
        raise AssertionError(
            f"profile dips below its barrier bound: {fvals.min()} < {inf_bound}"
        )
    return out


# -- power smoothness scan ----------------------------------------------------

def power_smoothness_scan(spec: ExampleSpec, gamma: float, h: float,
                          rmax: float = 0.9) -> float:
    """Largest centered second-difference quotient of profile**gamma.

    Scans a uniform (r, t) grid of spacing h up to rmax in both radii,
    taking directional second differences along the two axes and both
    diagonals.  Bounded-and-stable under h -> h/2 is the numeric
    certificate that the power is C^{1,1}; growth like h^{-s} certifies
    failure.  For b < 0 the axis column r = 0 is excluded (the profile is
    integrable-singular there).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    m = int(np.floor(rmax / h))
    rr = np.arange(m + 1) * h
    tt = np.arange(m + 1) * h
    R, T = np.meshgrid(rr, tt, indexing="ij")
    if spec.variant == "real-ball":
        F = rhs_real_radial(R, T, spec)
    else:
        F = rhs_complex_radial(R, T, spec)
    with np.errstate(invalid="ignore"):
        G = F**gamma
    d_rr = np.abs(G[2:, 1:-1] - 2 * G[1:-1, 1:-1] + G[:-2, 1:-1]) / h**2
    d_tt = np.abs(G[1:-1, 2:] - 2 * G[1:-1, 1:-1] + G[1:-1, :-2]) / h**2
    d_dp = np.abs(G[2:, 2:] - 2 * G[1:-1, 1:-1] + G[:-2, :-2]) / (2 * h**2)
    d_dm = np.abs(G[2:, :-2] - 2 * G[1:-1, 1:-1] + G[:-2, 2:]) / (2 * h**2)
    quot = np.maximum.reduce([d_rr, d_tt, d_dp, d_dm])
    if spec.b < 0:
        quot = quot[1:, :]  # drop the ring next to the singular axis
    return float(np.nanmax(quot))
