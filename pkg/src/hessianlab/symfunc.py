"""Elementary symmetric polynomials, positivity cones, and generalized
eigenvalues with respect to a Hermitian metric.

Conventions: spectra are stored in decreasing order, indices are 0-based,
``S_m`` / ``sigma_m`` denotes the m-th elementary symmetric polynomial.
``partial_sigma(lam, m, i)`` is sigma_m of the vector with entry i
removed, which equals the partial derivative of sigma_{m+1} at lam.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.linalg

from .backend import core

HERMITIAN_ASYMMETRY_TOL = 1e-12
METRIC_CONDITION_TOL = 1e-12


class ConeViolation(ValueError):
    """Spectrum lies outside the required positivity cone."""


class ConditioningError(RuntimeError):
    """Matrix data too ill-conditioned for a reliable decomposition."""


def _vals(lam) -> np.ndarray:
    v = getattr(lam, "values", lam)
    return np.asarray(v, dtype=np.float64)


def _check_level(m: int, n: int, lo: int = 1) -> None:
    if not isinstance(m, (int, np.integer)):
        raise ValueError(f"cone level must be an integer, got {m!r}")
    if not lo <= m <= n:
        raise ValueError(f"cone level m={m} out of range [{lo}, {n}]")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue vector, sorted into decreasing order at construction."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=np.float64))[::-1].copy()
        if v.size < 2:
            raise ValueError("a spectrum needs at least 2 entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class HermitianPair:
    """A Hermitian matrix T together with a positive-definite metric V.

    Both inputs are symmetrized; relative asymmetry beyond
    ``HERMITIAN_ASYMMETRY_TOL`` is an error, below it a silent repair.
    """

    T: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=np.complex128)
        V = np.asarray(self.V, dtype=np.complex128)
        if T.shape != V.shape or T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("T and V must be square matrices of equal size")
        for name, M in (("T", T), ("V", V)):
            scale = max(np.abs(M).max(), 1.0)
            asym = np.abs(M - M.conj().T).max()
            if asym > HERMITIAN_ASYMMETRY_TOL * scale:
                raise ValueError(
                    f"{name} is not Hermitian: relative asymmetry {asym / scale:.3e}"
                )
        T = 0.5 * (T + T.conj().T)
        V = 0.5 * (V + V.conj().T)
        vev = np.linalg.eigvalsh(V)
        if vev.min() <= METRIC_CONDITION_TOL * max(vev.max(), 1.0):
            raise ConditioningError(
                f"metric V numerically singular (min eigenvalue {vev.min():.3e})"
            )
        T.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "V", V)

    @property
    def n(self) -> int:
        return self.T.shape[0]


def elementary_symmetric(lam, m: int) -> float:
    """S_m(lam), the sum over all m-subsets of products of entries."""
    v = _vals(lam)
    _check_level(m, v.size)
    return float(core.esp(v, m)[0, m])


def partial_sigma(lam, m: int, i: int) -> float:
    """sigma_m of lam with entry i removed (0-based index).

    Equals d sigma_{m+1} / d lam_i; checked against central differences
    in the tests.
    """
    v = _vals(lam)
    if not 0 <= i < v.size:
        raise ValueError(f"index i={i} out of range for n={v.size}")
    _check_level(m, v.size - 1, lo=0)
    return float(core.esp_drop1(v, m)[0, i])


def partial_sigma2(lam, m: int, i: int, j: int) -> float:
    """sigma_m of lam with entries i and j removed, i != j.

    Satisfies the divided-difference identity
    ``partial_sigma2(lam, m-1, i, j) * (lam_j - lam_i)
      == partial_sigma(lam, m, i) - partial_sigma(lam, m, j)``.
    """
    v = _vals(lam)
    if i == j:
        raise ValueError("indices i and j must be distinct")
    for idx in (i, j):
        if not 0 <= idx < v.size:
            raise ValueError(f"index {idx} out of range for n={v.size}")
    _check_level(m, v.size - 2, lo=0)
    return float(core.esp_drop2(v, m)[0, i, j])


def in_cone(lam, m: int) -> bool:
    """Strict positivity-cone membership: S_1..S_m all > 0."""
    v = _vals(lam)
    _check_level(m, v.size)
    s = core.esp(v, m)[0]
    return bool(np.all(s[1:] > 0.0))


def in_cone_closed(lam, m: int, slack: float = 0.0) -> bool:
    """Closed-cone membership: S_1..S_m all >= -slack."""
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    v = _vals(lam)
    _check_level(m, v.size)
    s = core.esp(v, m)[0]
    return bool(np.all(s[1:] >= -slack))


def maclaurin_ratio_chain(lam, m: int) -> np.ndarray:
    """The normalized ratios r_j = (S_j / C(n,j))**(1/j), j = 1..m.

    Non-increasing on the open cone; equality throughout only for
    constant spectra.
    """
    v = _vals(lam)
    _check_level(m, v.size)
    if not in_cone(v, m):
        raise ConeViolation(f"spectrum not in the open cone of level {m}")
    s = core.esp(v, m)[0]
    n = v.size
    js = np.arange(1, m + 1)
    binoms = np.array([comb(n, int(j)) for j in js], dtype=np.float64)
    return (s[1:] / binoms) ** (1.0 / js)


def garding_pairing(lam, mu, m: int) -> tuple[float, float]:
    """Both sides of the cone pairing inequality.

    lhs = sum_i mu_i sigma_{m-1}(lam|i), rhs = m sigma_m(mu)^{1/m}
    sigma_m(lam)^{(m-1)/m}; lhs >= rhs for spectra in the cone, with
    equality when mu == lam (Euler homogeneity).
    """
    lv, mv = _vals(lam), _vals(mu)
    if lv.size != mv.size:
        raise ValueError("spectra must have equal length")
    _check_level(m, lv.size)
    if not (in_cone(lv, m) and in_cone(mv, m)):
        raise ConeViolation(f"both spectra must lie in the open cone of level {m}")
    weights = core.esp_drop1(lv, m - 1)[0]
    lhs = float(np.dot(mv, weights))
    sm_l = float(core.esp(lv, m)[0, m])
    sm_m = float(core.esp(mv, m)[0, m])
    rhs = m * sm_m ** (1.0 / m) * sm_l ** ((m - 1.0) / m)
    return lhs, rhs


def sample_cone(n: int, m: int, count: int, rng: np.random.Generator,
                lo: float = -1.0, hi: float = 3.0) -> tuple[np.ndarray, float]:
    """Rejection-sample spectra from the open cone of level m.

    Draws i.i.d. uniforms on [lo, hi] per coordinate, sorts each row
    decreasing, and keeps the rows with S_1..S_m > 0.  Returns the
    accepted rows and the acceptance rate.
    """
    _check_level(m, n)
    kept = []
    tried = 0
    accepted = 0
    while accepted < count:
        batch = max(count, 1024)
        cand = rng.uniform(lo, hi, size=(batch, n))
        cand = -np.sort(-cand, axis=1)
        s = core.esp(cand, m)
        ok = np.all(s[:, 1:] > 0.0, axis=1)
        tried += batch
        take = cand[ok]
        if take.shape[0] > count - accepted:
            take = take[: count - accepted]
        accepted += take.shape[0]
        kept.append(take)
        if tried > 1000 * count + 100000:
            raise RuntimeError(f"cone sampling stalled: n={n}, m={m}")
    rate = accepted / tried
    return np.vstack(kept), rate


def maclaurin2_constant(n: int, m: int, samples: int = 100_000,
                        seed: int = 0) -> float:
    """Empirical estimate of the best constant c(n, m) in

        sigma_{m-1}(lam) >= c * sigma_m(lam)^{(m-2)/(m-1)} * sigma_1(lam)^{1/(m-1)}

    over the open cone, from random samples plus deterministic boundary
    probes.  No closed form is known; the value is reported, never
    assumed exact.
    """
    if m == 1:
        raise ValueError("the inequality is vacuous for m = 1")
    _check_level(m, n)
    if samples < 1:
        raise ValueError("samples must be >= 1")

    def ratios(vals):
        s = core.esp(vals, m)
        num = s[:, m - 1]
        den = s[:, m] ** ((m - 2.0) / (m - 1.0)) * s[:, 1] ** (1.0 / (m - 1.0))
        return num / den

    rng = np.random.default_rng(seed)
    best = np.inf
    got = 0
    while got < samples:
        chunk = min(samples - got, 200_000)
        vals, _ = sample_cone(n, m, chunk, rng)
        best = min(best, float(ratios(vals).min()))
        got += chunk

    # deterministic probes: identity, one dominant entry, one trailing
    # negative entry pushed toward the cone boundary
    probes = [np.ones(n)]
    for t in np.logspace(0.0, 4.0, 17):
        v = np.ones(n)
        v[0] = t
        probes.append(v)
    base = np.ones(n)
    s_lo, s_hi = 0.0, float(n)
    for _ in range(60):
        s_mid = 0.5 * (s_lo + s_hi)
        v = base.copy()
        v[-1] = -s_mid
        if in_cone(np.sort(v)[::-1], m):
            s_lo = s_mid
        else:
            s_hi = s_mid
    for frac in (0.5, 0.9, 0.99, 0.999):
        v = base.copy()
        v[-1] = -frac * s_lo
        probes.append(np.sort(v)[::-1])
    probe_arr = np.array([np.sort(p)[::-1] for p in probes])
    keep = np.array([in_cone(p, m) for p in probe_arr])
    if keep.any():
        best = min(best, float(ratios(probe_arr[keep]).min()))

    if not best > 0:
        raise RuntimeError(f"estimated constant not positive: {best}")
    return best


def generalized_spectrum(pair: HermitianPair) -> Spectrum:
    """Eigenvalues of T relative to the metric V, sorted decreasing.

    Solves det(T - lam V) = 0 for the Hermitian-definite pencil; the
    multiset is invariant under simultaneous congruence of T and V.
    """
    w = scipy.linalg.eigh(pair.T, pair.V, eigvals_only=True)
    return Spectrum(w)


def _wedge_coefficient(vals: np.ndarray, k: int) -> float:
    """Coefficient of the k-th wedge power of a diagonal (1,1)-form with
    eigenvalues ``vals`` against the standard form, relative to the
    volume form.  Brute-force enumeration over k-subsets; equals
    S_k / C(n, k)."""
    from itertools import combinations

    n = vals.size
    total = 0.0
    for idx in combinations(range(n), k):
        total += float(np.prod(vals[list(idx)]))
    return total / comb(n, k)


def sigma_k_form_coefficient(lam, k: int) -> float:
    """S_k(lam), cross-checked against the diagonal-form wedge coefficient.

    For diagonal model data the wedge power of the form against the
    background equals S_k / C(n,k) times the volume form; the identity is
    asserted internally (for n <= 12, where enumeration stays cheap).
    """
    v = _vals(lam)
    _check_level(k, v.size)
    sk = float(core.esp(v, k)[0, k])
    n = v.size
    if n <= 12:
        wedge = _wedge_coefficient(v, k)
        expected = sk / comb(n, k)
        scale = max(1.0, abs(expected), abs(wedge))
        if abs(wedge - expected) > 1e-10 * scale:
            raise AssertionError(
                f"wedge-coefficient identity violated: {wedge} vs {expected}"
            )
    return sk
