# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: batched elementary symmetric polynomials and the
block-reduced Hessian invariants of the solver hot path.

Mirrors ``hessianlab._core_py``; keep the two in sync.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _binom(long n, long j) noexcept:
    cdef double out = 1.0
    cdef long i
    if j < 0 or j > n:
        return 0.0
    if j > n - j:
        j = n - j
    for i in range(j):
        out = out * (n - i) / (i + 1)
    return out


def esp(vals, int m):
    """Elementary symmetric polynomials S_0..S_m of each row."""
    v = np.ascontiguousarray(vals, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    cdef Py_ssize_t N = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    if m < 0 or m > n:
        raise ValueError(f"esp order m={m} out of range for n={n}")
    out = np.zeros((N, m + 1), dtype=np.float64)
    cdef double[:, ::1] vv = v
    cdef double[:, ::1] oo = out
    cdef Py_ssize_t r, c, j, top
    cdef double x
    for r in range(N):
        oo[r, 0] = 1.0
        for c in range(n):
            x = vv[r, c]
            top = c + 1
            if top > m:
                top = m
            for j in range(top, 0, -1):
                oo[r, j] += x * oo[r, j - 1]
    return out


def esp_drop1(vals, int m):
    """S_m of each row with entry i removed, for every i; shape (N, n)."""
    v = np.ascontiguousarray(vals, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    cdef Py_ssize_t N = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    if m < 0 or m > n - 1:
        raise ValueError(f"esp_drop1 order m={m} out of range for n={n}")
    out = np.empty((N, n), dtype=np.float64)
    scratch = np.zeros(m + 1, dtype=np.float64)
    cdef double[:, ::1] vv = v
    cdef double[:, ::1] oo = out
    cdef double[::1] e = scratch
    cdef Py_ssize_t r, i, c, j, used, top
    cdef double x
    for r in range(N):
        for i in range(n):
            e[0] = 1.0
            for j in range(1, m + 1):
                e[j] = 0.0
            used = 0
            for c in range(n):
                if c == i:
                    continue
                x = vv[r, c]
                used += 1
                top = used
                if top > m:
                    top = m
                for j in range(top, 0, -1):
                    e[j] += x * e[j - 1]
            oo[r, i] = e[m]
    return out


def esp_drop2(vals, int m):
    """S_m with entries i and j removed; (N, n, n), diagonal left 0."""
    v = np.ascontiguousarray(vals, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    cdef Py_ssize_t N = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    if m < 0 or m > n - 2:
        raise ValueError(f"esp_drop2 order m={m} out of range for n={n}")
    out = np.zeros((N, n, n), dtype=np.float64)
    scratch = np.zeros(m + 1, dtype=np.float64)
    cdef double[:, ::1] vv = v
    cdef double[:, :, ::1] oo = out
    cdef double[::1] e = scratch
    cdef Py_ssize_t r, i, j, c, q, used, top
    cdef double x
    for r in range(N):
        for i in range(n):
            for j in range(i + 1, n):
                e[0] = 1.0
                for q in range(1, m + 1):
                    e[q] = 0.0
                used = 0
                for c in range(n):
                    if c == i or c == j:
                        continue
                    x = vv[r, c]
                    used += 1
                    top = used
                    if top > m:
                        top = m
                    for q in range(top, 0, -1):
                        e[q] += x * e[q - 1]
                oo[r, i, j] = e[m]
                oo[r, j, i] = e[m]
    return out


def reduced_invariants(urr, utt, urt, nu, int n, int k):
    """S_0..S_k and partials of S_k for block-reduced spectra.

    See the NumPy twin for the spectrum layout; this version runs the
    per-node polynomial accumulation in C.
    """
    a = np.ascontiguousarray(urr, dtype=np.float64)
    b = np.ascontiguousarray(utt, dtype=np.float64)
    c = np.ascontiguousarray(urt, dtype=np.float64)
    d = np.ascontiguousarray(nu, dtype=np.float64)
    cdef Py_ssize_t N = a.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for n={n}")
    S = np.zeros((N, k + 1), dtype=np.float64)
    d_urr = np.zeros(N, dtype=np.float64)
    d_utt = np.zeros(N, dtype=np.float64)
    d_urt = np.zeros(N, dtype=np.float64)
    d_nu = np.zeros(N, dtype=np.float64)

    binoms = np.zeros(k + 1, dtype=np.float64)
    cdef Py_ssize_t j
    for j in range(k + 1):
        binoms[j] = _binom(n - 2, j)

    cdef double[::1] aa = a
    cdef double[::1] bb = b
    cdef double[::1] cc = c
    cdef double[::1] dd = d
    cdef double[:, ::1] SS = S
    cdef double[::1] br = binoms
    cdef double[::1] o_urr = d_urr
    cdef double[::1] o_utt = d_utt
    cdef double[::1] o_urt = d_urt
    cdef double[::1] o_nu = d_nu
    cdef Py_ssize_t r
    cdef double e1, e2, nuv, pj, pjm1, pjm2, acc
    cdef double pk1, pk2, pk3
    for r in range(N):
        e1 = aa[r] + bb[r]
        e2 = aa[r] * bb[r] - cc[r] * cc[r]
        nuv = dd[r]
        pjm2 = 0.0
        pjm1 = 0.0
        pj = 1.0
        for j in range(k + 1):
            acc = br[j] * pj
            if j >= 1:
                acc += e1 * br[j - 1] * pjm1
            if j >= 2:
                acc += e2 * br[j - 2] * pjm2
            SS[r, j] = acc
            pjm2 = pjm1
            pjm1 = pj
            pj = pj * nuv
        pk1 = 1.0
        for j in range(k - 1):
            pk1 = pk1 * nuv
        if k >= 2:
            pk2 = 1.0
            for j in range(k - 2):
                pk2 = pk2 * nuv
        else:
            pk2 = 0.0
        if k >= 3:
            pk3 = 1.0
            for j in range(k - 3):
                pk3 = pk3 * nuv
        else:
            pk3 = 0.0
        o_urr[r] = br[k - 1] * pk1
        o_utt[r] = br[k - 1] * pk1
        if k >= 2:
            o_urr[r] += br[k - 2] * bb[r] * pk2
            o_utt[r] += br[k - 2] * aa[r] * pk2
            o_urt[r] = -2.0 * br[k - 2] * cc[r] * pk2
        o_nu[r] = k * br[k] * pk1
        if k >= 2:
            o_nu[r] += (k - 1) * e1 * br[k - 1] * pk2
        if k >= 3:
            o_nu[r] += (k - 2) * e2 * br[k - 2] * pk3
    return S, d_urr, d_utt, d_urt, d_nu
