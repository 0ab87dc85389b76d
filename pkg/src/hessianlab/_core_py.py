"""Pure-NumPy kernels.

Same signatures as the compiled module ``hessianlab._core``; the active
implementation is picked in ``hessianlab.backend``.  Everything is
vectorized over the leading (sample / grid-node) axis.
"""

from __future__ import annotations

from math import comb

import numpy as np


def _rows(vals):
    v = np.ascontiguousarray(vals, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    return v


def esp(vals, m):
    """Elementary symmetric polynomials S_0..S_m of each row.

    Incremental expansion of prod_i (x + vals[i]), O(n*m) per row.  More
    stable than minor enumeration and exact for small integer data.
    """
    v = _rows(vals)
    n = v.shape[1]
    if not 0 <= m <= n:
        raise ValueError(f"esp order m={m} out of range for n={n}")
    out = np.zeros((v.shape[0], m + 1), dtype=np.float64)
    out[:, 0] = 1.0
    for c in range(n):
        x = v[:, c]
        for j in range(min(c + 1, m), 0, -1):
            out[:, j] += x * out[:, j - 1]
    return out


def esp_drop1(vals, m):
    """S_m of each row with entry i removed, for every i; shape (N, n).

    Recomputes the recurrence skipping column i.  Deflating the full
    polynomial by a root would be cheaper but is unstable for spread-out
    spectra, so it is avoided.
    """
    v = _rows(vals)
    N, n = v.shape
    if not 0 <= m <= n - 1:
        raise ValueError(f"esp_drop1 order m={m} out of range for n={n}")
    out = np.empty((N, n), dtype=np.float64)
    for i in range(n):
        cols = [c for c in range(n) if c != i]
        out[:, i] = esp(v[:, cols], m)[:, m]
    return out


def esp_drop2(vals, m):
    """S_m of each row with entries i and j removed; shape (N, n, n).

    Symmetric in (i, j); the diagonal is left at 0 (never used).
    """
    v = _rows(vals)
    N, n = v.shape
    if not 0 <= m <= n - 2:
        raise ValueError(f"esp_drop2 order m={m} out of range for n={n}")
    out = np.zeros((N, n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            cols = [c for c in range(n) if c not in (i, j)]
            if cols:
                s = esp(v[:, cols], m)[:, m]
            else:
                s = np.full(N, 1.0 if m == 0 else 0.0)
            out[:, i, j] = s
            out[:, j, i] = s
    return out


def reduced_invariants(urr, utt, urt, nu, n, k):
    """Hessian symmetric functions for block-reduced spectra.

    The spectrum per node is the pair of eigenvalues of the 2x2 block
    [[urr, urt], [urt, utt]] plus the value nu with multiplicity n-2.
    Works through the block invariants e1 = tr, e2 = det, so no
    eigendecomposition is needed.

    Returns (S, d_urr, d_utt, d_urt, d_nu) where S has shape (N, k+1)
    holding S_0..S_k and the d_* arrays are the partials of S_k.
    """
    urr = np.asarray(urr, dtype=np.float64)
    utt = np.asarray(utt, dtype=np.float64)
    urt = np.asarray(urt, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    N = urr.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")

    e1 = urr + utt
    e2 = urr * utt - urt * urt

    # nu powers 0..k
    npow = [np.ones(N)]
    for _ in range(k):
        npow.append(npow[-1] * nu)

    def b(j):
        return comb(n - 2, j) if 0 <= j <= n - 2 else 0

    S = np.zeros((N, k + 1), dtype=np.float64)
    for j in range(k + 1):
        acc = np.zeros(N)
        if b(j):
            acc = acc + b(j) * npow[j]
        if j >= 1 and b(j - 1):
            acc = acc + b(j - 1) * e1 * npow[j - 1]
        if j >= 2 and b(j - 2):
            acc = acc + b(j - 2) * e2 * npow[j - 2]
        S[:, j] = acc

    d_urr = np.zeros(N)
    d_utt = np.zeros(N)
    d_urt = np.zeros(N)
    d_nu = np.zeros(N)
    if b(k - 1):
        d_urr += b(k - 1) * npow[k - 1]
        d_utt += b(k - 1) * npow[k - 1]
    if k >= 2 and b(k - 2):
        d_urr += b(k - 2) * utt * npow[k - 2]
        d_utt += b(k - 2) * urr * npow[k - 2]
        d_urt += -2.0 * b(k - 2) * urt * npow[k - 2]
    if b(k):
        d_nu += k * b(k) * npow[k - 1]
    if k >= 2 and b(k - 1):
        d_nu += (k - 1) * b(k - 1) * e1 * npow[k - 2]
    if k >= 3 and b(k - 2):
        d_nu += (k - 2) * b(k - 2) * e2 * npow[k - 3]

    return S, d_urr, d_utt, d_urt, d_nu
