"""Linearization of the log symmetric-function operator and the auxiliary
test functions used in second-order estimates.

``linearize`` differentiates S = log sigma_k at a diagonal point: the
first derivatives are the diffusion coefficients of the linearized
operator, the second derivatives split into a diagonal block and the
off-diagonal exchange block.  The two barrier profiles ``phi_eval`` and
``psi_eval`` carry the calculus identities that the estimates consume,
and ``key_coefficient_inequality`` is the algebraic pivot inequality for
indices whose diffusion coefficient dominates the top one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .backend import core
from .symfunc import ConeViolation, _check_level, _vals, in_cone, maclaurin2_constant


class PreconditionError(ValueError):
    """Hypotheses of a conditional inequality are not satisfied.

    Distinct from the inequality itself being false."""


@dataclass(frozen=True)
class LinearizationCoeffs:
    """Derivatives of log sigma_k at a spectrum lam.

    s_ii[i]      = sigma_{k-1}(lam|i) / sigma_k
    s_iipp[i][p] = (1 - delta_ip) sigma_{k-2}(lam|ip) / sigma_k
                   - sigma_{k-1}(lam|i) sigma_{k-1}(lam|p) / sigma_k^2
    s_ippi[i][p] = -sigma_{k-2}(lam|ip) / sigma_k   (i != p, zero diagonal)
    total        = sum_i s_ii[i]

    On the open cone all s_ii are positive and decrease along the sorted
    spectrum, and sum_i s_ii[i] * lam_i == k exactly.
    """

    s_ii: np.ndarray
    s_iipp: np.ndarray
    s_ippi: np.ndarray
    total: float
    k: int


def linearize(lam, k: int) -> LinearizationCoeffs:
    v = _vals(lam)
    n = v.size
    _check_level(k, n)
    sk = float(core.esp(v, k)[0, k])
    if sk <= 0.0:
        raise ConeViolation(f"sigma_{k} must be positive, got {sk}")
    d1 = core.esp_drop1(v, k - 1)[0]
    if k >= 2:
        d2 = core.esp_drop2(v, k - 2)[0]
    else:
        d2 = np.zeros((n, n))
    s_ii = d1 / sk
    s_iipp = d2 / sk - np.outer(d1, d1) / sk**2
    np.fill_diagonal(s_iipp, -(d1 / sk) ** 2)
    s_ippi = -d2 / sk
    np.fill_diagonal(s_ippi, 0.0)
    return LinearizationCoeffs(
        s_ii=s_ii, s_iipp=s_iipp, s_ippi=s_ippi, total=float(s_ii.sum()), k=k
    )


def trace_identity_residual(lam, k: int) -> float:
    """|sum_i s_ii[i] lam_i - k|; vanishes identically by homogeneity."""
    v = _vals(lam)
    coeffs = linearize(v, k)
    return float(abs(np.dot(coeffs.s_ii, v) - k))


def garding_lower_bound_check(lam, k: int, f_val: float,
                              c_est: float | None = None) -> tuple[float, float]:
    """Lower bound for the total diffusion coefficient.

    lhs is the trace of the linearized operator, rhs the bound
    c(n,k) * lam_1^{1/(k-1)} / f^{1/(k-1)} with the empirical constant
    from ``maclaurin2_constant`` (pass ``c_est`` to reuse one).  Also
    verifies the aggregation identity
    sum_p sigma_{k-1}(lam|p) = (n-k+1) sigma_{k-1}(lam).
    """
    if k < 2:
        raise ValueError("the bound needs k >= 2")
    v = _vals(lam)
    n = v.size
    _check_level(k, n)
    if not in_cone(v, k):
        raise ConeViolation(f"spectrum not in the open cone of level {k}")
    if f_val <= 0:
        raise ValueError("f_val must be positive")
    s = core.esp(v, k)[0]
    d1 = core.esp_drop1(v, k - 1)[0]
    total = float(d1.sum() / s[k])

    agg = float(d1.sum())
    expected = (n - k + 1) * float(s[k - 1])
    scale = max(1.0, abs(agg), abs(expected))
    if abs(agg - expected) > 1e-9 * scale:
        raise AssertionError(
            f"aggregation identity violated: {agg} vs {expected}"
        )

    if c_est is None:
        c_est = maclaurin2_constant(n, k, samples=20_000)
    rhs = c_est * float(v[0]) ** (1.0 / (k - 1)) / f_val ** (1.0 / (k - 1))
    return total, rhs


def key_coefficient_inequality(lam, k: int, delta: float, p: int) -> bool:
    """Pivot inequality for a dominant-coefficient index p:

        (2 delta lam_1 + (1 - 2 delta) lam_p) sigma_{k-1}(lam|p)
            >= lam_1 sigma_{k-1}(lam|1)

    Preconditions (PreconditionError when violated, which is distinct
    from the inequality being False):
      * lam in the open cone of level k,
      * 0 < delta <= 1/7,
      * lam_p >= lam_n > -delta lam_1,
      * sigma_{k-1}(lam|p) > sigma_{k-1}(lam|1) / delta.
    """
    v = _vals(lam)
    n = v.size
    _check_level(k, n)
    if not 0 <= p < n:
        raise ValueError(f"index p={p} out of range for n={n}")
    if not 0.0 < delta <= 1.0 / 7.0 + 1e-15:
        raise PreconditionError(f"delta={delta} outside (0, 1/7]")
    if not in_cone(v, k):
        raise PreconditionError(f"spectrum not in the open cone of level {k}")
    if not v[-1] > -delta * v[0]:
        raise PreconditionError("smallest eigenvalue fails lam_n > -delta lam_1")
    d1 = core.esp_drop1(v, k - 1)[0]
    if not d1[p] > d1[0] / delta:
        raise PreconditionError(
            "index p lacks a dominant coefficient: "
            f"sigma_{k-1}(lam|p)={d1[p]} <= {d1[0] / delta}"
        )
    lhs = (2.0 * delta * v[0] + (1.0 - 2.0 * delta) * v[p]) * d1[p]
    rhs = v[0] * d1[0]
    return bool(lhs >= rhs)


def log_sigma_concavity_form(lam, k: int, x, y) -> float:
    """Quadratic form of the second derivative of log sigma_k.

    Q = sum_{i,p} s_iipp[i,p] x_i x_p + sum_{i != p} s_ippi[i,p] |y_ip|^2
    for a real diagonal perturbation x and Hermitian off-diagonal part y.
    Concavity on the cone makes Q <= 0.
    """
    coeffs = linearize(lam, k)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    q = float(x @ coeffs.s_iipp @ x)
    off = np.abs(y) ** 2
    np.fill_diagonal(off, 0.0)
    q += float(np.sum(coeffs.s_ippi * off))
    return q


@dataclass(frozen=True)
class TestFunctionParams:
    """Parameters shared by the two barrier profiles.

    grad_sq_bound   >= 1, one plus the gradient square supremum;
    osc_bound       >= 1, one plus the solution supremum;
    curvature_bound >= 0, background curvature floor.

    Derived: amplitude = 3 * osc_bound * (2 curvature_bound + 1) and
    delta = 1 / (2 amplitude + 1), which satisfies 1/delta >= 7.
    """

    grad_sq_bound: float
    osc_bound: float
    curvature_bound: float = 0.0
    amplitude: float = field(init=False)
    delta: float = field(init=False)

    def __post_init__(self):
        if self.grad_sq_bound < 1.0:
            raise ValueError("grad_sq_bound must be >= 1")
        if self.osc_bound < 1.0:
            raise ValueError("osc_bound must be >= 1")
        if self.curvature_bound < 0.0:
            raise ValueError("curvature_bound must be >= 0")
        amp = 3.0 * self.osc_bound * (2.0 * self.curvature_bound + 1.0)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "delta", 1.0 / (2.0 * amp + 1.0))


class CurveValue(NamedTuple):
    value: float
    d1: float
    d2: float


def phi_eval(t: float, params: TestFunctionParams) -> CurveValue:
    """Gradient barrier -log(1 - t/(2K))/2 with K = grad_sq_bound.

    On [0, K-1]: 0 <= phi <= log(2)/2, 1/(4K) <= phi' <= 1/(2K), and
    phi'' == 2 phi'^2 identically.
    """
    K = params.grad_sq_bound
    if not 0.0 <= t < 2.0 * K:
        raise ValueError(f"t={t} outside [0, 2K) with K={K}")
    u = 1.0 - t / (2.0 * K)
    value = -0.5 * np.log(u)
    d1 = 1.0 / (4.0 * K * u)
    d2 = 2.0 * d1 * d1
    return CurveValue(float(value), float(d1), float(d2))


def psi_eval(t: float, params: TestFunctionParams) -> CurveValue:
    """Oscillation barrier -A log(1 + t/(2L)), A = amplitude, L = osc_bound.

    On [-L, L]: A log(2/3) <= psi <= A log 2,
    A/(3L) = 2 curvature_bound + 1 <= -psi' <= A/L, and
    psi''/psi'^2 = 1/A >= 2 eps/(1 - eps) for every eps <= delta.
    """
    L = params.osc_bound
    A = params.amplitude
    if not -L <= t <= L:
        raise ValueError(f"t={t} outside [-L, L] with L={L}")
    u = 1.0 + t / (2.0 * L)
    value = -A * np.log(u)
    d1 = -A / (2.0 * L * u)
    d2 = A / (2.0 * L * u) ** 2
    return CurveValue(float(value), float(d1), float(d2))


class GradientRatioScan(NamedTuple):
    max_ratio: float
    floored_points: int


def sqrt_gradient_bound(gvals, h: float, floor: float = 1e-14,
                        margin: int = 1) -> GradientRatioScan:
    """max |grad g|^2 / max(g, floor) over interior grid points.

    ``gvals`` samples a nonnegative function on a uniform 1-D or 2-D grid
    of spacing h; gradients are central differences, and ``margin`` extra
    layers are trimmed so the scan stays away from the domain boundary.
    Points with g < floor are excluded from the ratio (0/0 there is
    genuinely indeterminate) and reported separately.
    """
    g = np.asarray(gvals, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("field values must be nonnegative")
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if g.ndim == 1:
        grads = [(g[2:] - g[:-2]) / (2 * h)]
        center = g[1:-1]
    elif g.ndim == 2:
        gx = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * h)
        gy = (g[1:-1, 2:] - g[1:-1, :-2]) / (2 * h)
        grads = [gx, gy]
        center = g[1:-1, 1:-1]
    else:
        raise ValueError("only 1-D and 2-D grids are supported")
    if margin:
        sl = tuple(slice(margin, -margin or None) for _ in range(center.ndim))
        grads = [gr[sl] for gr in grads]
        center = center[sl]
    if center.size == 0:
        raise ValueError("grid too small for the requested margin")
    grad_sq = sum(gr**2 for gr in grads)
    ok = center >= floor
    floored = int(center.size - ok.sum())
    if not ok.any():
        return GradientRatioScan(0.0, floored)
    ratio = grad_sq[ok] / center[ok]
    return GradientRatioScan(float(ratio.max()), floored)
