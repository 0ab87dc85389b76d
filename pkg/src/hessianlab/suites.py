"""Seeded randomized property suites over the symmetric-function algebra.

These back the ``algebra-suite`` command and the acceptance checks: each
suite draws cone spectra from a seeded generator, evaluates an identity
or inequality in batch, and reports the worst residual together with the
sample count.  All randomness flows from a single seed; per-suite
generators are derived by hashing a namespace string.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .backend import core
from .symfunc import sample_cone


def rng_for(seed: int, namespace: str) -> np.random.Generator:
    """Generator for one namespace, derived from the global seed."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFF, zlib.crc32(namespace.encode())])
    )


@dataclass
class PropertyResult:
    name: str
    samples: int
    worst: float
    tolerance: float
    passed: bool


@dataclass
class SuiteReport:
    seed: int
    elapsed: float
    results: list[PropertyResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)


def _combos(n_max: int):
    for n in range(3, n_max + 1):
        for k in range(2, n + 1):
            yield n, k


def algebra_suite(seed: int = 42, samples: int = 10_000, n_max: int = 6) -> SuiteReport:
    """Identity and inequality battery over random cone spectra.

    Checks, per sample: the trace identity of the linearized operator,
    monotonicity of the normalized ratio chain, the cone pairing
    inequality, the divided-difference identity (in product form, which
    avoids amplifying roundoff through tiny eigenvalue gaps), and
    nonpositivity of the concavity quadratic form of log sigma_k.
    """
    t0 = time.perf_counter()
    combos = list(_combos(n_max))
    per = max(1, samples // len(combos))

    worst_trace = 0.0
    worst_chain = 0.0
    worst_pair = 0.0
    worst_dd = 0.0
    worst_conc = 0.0
    total = 0

    for n, k in combos:
        rng = rng_for(seed, f"algebra/{n}/{k}")
        lam, _ = sample_cone(n, k, per, rng)
        mu, _ = sample_cone(n, k, per, rng)
        N = lam.shape[0]
        total += N

        s = core.esp(lam, k)
        sk = s[:, k]
        d1 = core.esp_drop1(lam, k - 1)

        # trace identity: sum_i lam_i sigma_{k-1}(lam|i) == k sigma_k
        trace = np.einsum("ij,ij->i", lam, d1) / sk
        worst_trace = max(worst_trace, float(np.abs(trace - k).max() / k))

        # normalized ratio chain non-increasing
        js = np.arange(1, k + 1)
        binoms = np.array([comb(n, int(j)) for j in js])
        chain = (s[:, 1:] / binoms) ** (1.0 / js)
        if k >= 2:
            drop = np.diff(chain, axis=1)  # should be <= 0
            worst_chain = max(
                worst_chain, float((drop / chain[:, :-1]).max(initial=-np.inf))
            )

        # pairing inequality lhs >= rhs
        lhs = np.einsum("ij,ij->i", mu, d1)
        sk_mu = core.esp(mu, k)[:, k]
        rhs = k * sk_mu ** (1.0 / k) * sk ** ((k - 1.0) / k)
        rel = (rhs - lhs) / np.maximum(np.abs(rhs), 1.0)
        worst_pair = max(worst_pair, float(rel.max()))

        # divided-difference identity, product form, at order m
        m = min(k, n - 1)
        dm = core.esp_drop1(lam, m)
        dm2 = core.esp_drop2(lam, m - 1)
        for i in range(n):
            for j in range(i + 1, n):
                lhs_dd = dm2[:, i, j] * (lam[:, j] - lam[:, i])
                rhs_dd = dm[:, i] - dm[:, j]
                scale = np.maximum.reduce(
                    [np.abs(dm[:, i]), np.abs(dm[:, j]), np.ones(N)]
                )
                worst_dd = max(
                    worst_dd, float((np.abs(lhs_dd - rhs_dd) / scale).max())
                )

        # concavity of log sigma_k: quadratic form <= 0
        d2 = core.esp_drop2(lam, k - 2) if k >= 2 else np.zeros((N, n, n))
        s_iipp = d2 / sk[:, None, None] - d1[:, :, None] * d1[:, None, :] / (
            sk**2
        )[:, None, None]
        ii = np.arange(n)
        s_iipp[:, ii, ii] = -((d1 / sk[:, None]) ** 2)
        s_ippi = -d2 / sk[:, None, None]
        s_ippi[:, ii, ii] = 0.0
        x = rng.normal(size=(N, n))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        y = rng.normal(size=(N, n, n)) + 1j * rng.normal(size=(N, n, n))
        y2 = np.abs(y) ** 2
        y2[:, ii, ii] = 0.0
        y2 /= np.maximum(y2.sum(axis=(1, 2), keepdims=True), 1.0)
        q = np.einsum("nij,ni,nj->n", s_iipp, x, x) + np.einsum(
            "nij,nij->n", s_ippi, y2
        )
        worst_conc = max(worst_conc, float(q.max()))

    report = SuiteReport(seed=seed, elapsed=0.0)
    report.results = [
        PropertyResult("trace-identity", total, worst_trace, 1e-9, worst_trace < 1e-9),
        PropertyResult("ratio-chain-monotone", total, worst_chain, 1e-12, worst_chain <= 1e-12),
        PropertyResult("cone-pairing", total, worst_pair, 1e-12, worst_pair <= 1e-12),
        PropertyResult("divided-difference", total, worst_dd, 1e-10, worst_dd < 1e-10),
        PropertyResult("log-concavity-form", total, worst_conc, 1e-10, worst_conc <= 1e-10),
    ]
    report.elapsed = time.perf_counter() - t0
    return report


@dataclass
class FuzzReport:
    accepted: int
    violations: int
    elapsed: float
    worst_margin: float  # min of lhs - rhs over accepted pairs
    example: dict | None = None


def _key_candidates(rng: np.random.Generator, n: int, batch: int):
    """Proposal spectra biased toward one dominant eigenvalue.

    The pivot-index condition sigma_{k-1}(lam|p) > sigma_{k-1}(lam|1)/delta
    needs lam_1 to dominate, so trailing entries are drawn at a random
    small scale relative to lam_1.
    """
    lam1 = np.exp(rng.uniform(np.log(0.5), np.log(50.0), size=batch))
    delta = rng.uniform(0.02, 1.0 / 7.0, size=batch)
    scale = np.exp(rng.uniform(np.log(1e-3), np.log(0.3), size=batch))
    lo = -0.95 * delta * lam1
    hi = scale * lam1
    rest = rng.uniform(size=(batch, n - 1)) * (hi - lo)[:, None] + lo[:, None]
    lam = np.concatenate([lam1[:, None], rest], axis=1)
    lam = -np.sort(-lam, axis=1)
    return lam, delta


def key_inequality_fuzz(seed: int = 7, accepted_target: int = 10_000,
                        n_max: int = 6, max_batches: int = 4000) -> FuzzReport:
    """Rejection-sample spectra satisfying the pivot-inequality hypotheses
    and check the inequality on every qualifying index.

    A sample qualifies when lam is in the open cone of level k,
    lam_n > -delta lam_1, and some index p has a diffusion coefficient
    dominating the top one by the factor 1/delta; ties are rejected.
    """
    t0 = time.perf_counter()
    accepted = 0
    violations = 0
    worst = np.inf
    example = None
    batch = 4096
    rounds = 0
    while accepted < accepted_target and rounds < max_batches:
        rounds += 1
        n = 3 + (rounds % (n_max - 2))
        k = 2 + (rounds // (n_max - 2)) % (n - 1)
        rng = rng_for(seed, f"fuzz/{rounds}")
        lam, delta = _key_candidates(rng, n, batch)

        s = core.esp(lam, k)
        ok = np.all(s[:, 1:] > 0.0, axis=1)
        ok &= lam[:, -1] > -delta * lam[:, 0]
        if not ok.any():
            continue
        lam, delta = lam[ok], delta[ok]
        d1 = core.esp_drop1(lam, k - 1)
        dominant = d1 > d1[:, [0]] / delta[:, None]  # (N, n) boolean
        has_pivot = dominant.any(axis=1)
        if not has_pivot.any():
            continue
        lam, delta, d1, dominant = (
            lam[has_pivot], delta[has_pivot], d1[has_pivot], dominant[has_pivot]
        )
        lhs = (
            2.0 * delta[:, None] * lam[:, [0]]
            + (1.0 - 2.0 * delta[:, None]) * lam
        ) * d1
        rhs = (lam[:, 0] * d1[:, 0])[:, None]
        margin = np.where(dominant, lhs - rhs, np.inf)
        row_margin = margin.min(axis=1)
        worst = min(worst, float(row_margin.min()))
        bad = row_margin < 0
        violations += int(bad.sum())
        accepted += lam.shape[0]
        if example is None:
            r = 0
            p = int(np.argmax(dominant[r]))
            example = {
                "lam": lam[r].tolist(),
                "k": int(k),
                "delta": float(delta[r]),
                "p": p,
                "lhs": float(lhs[r, p]),
                "rhs": float(rhs[r, 0]),
            }
    return FuzzReport(
        accepted=accepted,
        violations=violations,
        elapsed=time.perf_counter() - t0,
        worst_margin=float(worst),
        example=example,
    )
