"""Doubly-radial Dirichlet solver for the k-Hessian equation on the unit
ball of R^n.

For data depending only on (r, t) = (|x'|, |x_n|) the problem reduces to
the quarter disk {r, t >= 0, r^2 + t^2 <= 1}.  The Hessian spectrum of
u(r, t) is the pair of eigenvalues of [[u_rr, u_rt], [u_rt, u_tt]] plus
u_r / r with multiplicity n - 2.  The grid is uniform in (r, t) with
even-reflection ghosts across both axes and stencil arms shortened to
the exact crossing point where they leave the disk (the boundary value 0
is imposed on the arc itself, and every difference formula is exact on
quadratics of (r, t)).

The scheme is damped Newton on the shifted k-th-root residual
(S_k + delta)^{1/k} - (F + delta)^{1/k} with a continuation ladder in
delta: the root formulation is concave on the admissible cone, and the
shift keeps the Jacobian usable while the solution rides the cone
boundary inside degenerate regions.  A projection step u += mu (r^2 +
t^2 - 1)/2 (which shifts the whole discrete spectrum by exactly mu and
preserves the boundary data) restores admissibility when needed, and a
damped Jacobi sweep serves as the fallback when a Newton step is
rejected by the line search.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dc_field
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .backend import core
from .symfunc import Spectrum

LEG_MIN_FRACTION = 1e-3  # clamp for arc cuts hugging a lattice point
ADMISSIBILITY_SLACK = 1e-8
_DIRS = {
    "E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1),
    "NE": (1, 1), "SW": (-1, -1), "NW": (-1, 1), "SE": (1, -1),
}


class ConvergenceError(RuntimeError):
    """Solver failed to reach the requested tolerance; carries the best
    iterate in ``.field`` and its report in ``.report``."""

    def __init__(self, message, field=None, report=None):
        super().__init__(message)
        self.field = field
        self.report = report


class SchemeError(RuntimeError):
    """Discrete admissibility irrecoverably violated."""


def _legs(ii, jj, r, t, h, active, idx, di, dj):
    """Leg lengths and neighbor columns for one stencil direction.

    Negative target indices are reflected (even symmetry across both
    axes); targets outside the disk are replaced by the exact arc
    crossing along the (reflected) ray, with no unknown attached.
    """
    m = active.shape[0] - 1
    ti = np.abs(ii + di)
    tj = np.abs(jj + dj)
    inside = active[ti, tj]
    col = np.where(inside, idx[ti, tj], -1)
    norm = float(np.hypot(di, dj))
    full = norm * h
    # reflected ray direction (unit)
    ur = np.where(ii + di < 0, -di, di) / norm
    ut = np.where(jj + dj < 0, -dj, dj) / norm
    bdot = r * ur + t * ut
    disc = bdot**2 + (1.0 - r**2 - t**2)
    cut = -bdot + np.sqrt(np.maximum(disc, 0.0))
    leg = np.where(inside, full, np.clip(cut, LEG_MIN_FRACTION * full, full))
    return leg, col


def _second_diff_coeffs(lp, lm):
    cp = 2.0 / (lp * (lp + lm))
    cm = 2.0 / (lm * (lp + lm))
    cc = -2.0 / (lp * lm)
    return cp, cm, cc


def _first_diff_coeffs(lp, lm):
    fp = lm / (lp * (lp + lm))
    fm = -lp / (lm * (lp + lm))
    fc = (lp - lm) / (lp * lm)
    return fp, fm, fc


@dataclass(frozen=True)
class QuarterDiskGrid:
    """Geometry and difference operators on the quarter disk.

    The four sparse operators map the vector of interior unknowns to
    (u_rr, u_tt, u_rt, u_r / r); at r = 0 the last one evaluates u_rr
    instead (the removable-singularity limit).
    """

    h: float
    m: int
    ii: np.ndarray
    jj: np.ndarray
    r: np.ndarray
    t: np.ndarray
    idx: np.ndarray
    active: np.ndarray
    B_rr: sp.csr_matrix
    B_tt: sp.csr_matrix
    B_rt: sp.csr_matrix
    B_nu: sp.csr_matrix

    @classmethod
    def build(cls, h: float) -> "QuarterDiskGrid":
        m = int(round(1.0 / h))
        if abs(m * h - 1.0) > 1e-9 * max(1.0, m):
            raise ValueError(f"1/h must be an integer, got h={h}")
        h = 1.0 / m
        gi, gj = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        active = gi**2 + gj**2 < m**2
        idx = -np.ones((m + 1, m + 1), dtype=np.int64)
        ii, jj = np.nonzero(active)
        idx[ii, jj] = np.arange(ii.size)
        r = ii * h
        t = jj * h
        n_nodes = ii.size
        rows = np.arange(n_nodes)

        legs = {name: _legs(ii, jj, r, t, h, active, idx, di, dj)
                for name, (di, dj) in _DIRS.items()}

        def second_op(plus, minus):
            lp, cp_col = legs[plus]
            lm, cm_col = legs[minus]
            cp, cm, cc = _second_diff_coeffs(lp, lm)
            data, rr, cols = [cc], [rows], [rows]
            for coeff, col in ((cp, cp_col), (cm, cm_col)):
                keep = col >= 0
                data.append(coeff[keep])
                rr.append(rows[keep])
                cols.append(col[keep])
            mat = sp.coo_matrix(
                (np.concatenate(data), (np.concatenate(rr), np.concatenate(cols))),
                shape=(n_nodes, n_nodes),
            )
            return mat.tocsr()

        B_rr = second_op("E", "W")
        B_tt = second_op("N", "S")
        B_dp = second_op("NE", "SW")
        B_dm = second_op("NW", "SE")
        B_rt = (0.5 * (B_dp - B_dm)).tocsr()

        # u_r / r, with u_rr rows substituted on the axis r = 0
        lE, colE = legs["E"]
        lW, colW = legs["W"]
        fp, fm, fc = _first_diff_coeffs(lE, lW)
        off_axis = ii > 0
        rinv = np.zeros(n_nodes)
        rinv[off_axis] = 1.0 / r[off_axis]
        data, rr2, cols = [fc * rinv], [rows], [rows]
        for coeff, col in ((fp, colE), (fm, colW)):
            keep = (col >= 0) & off_axis
            data.append((coeff * rinv)[keep])
            rr2.append(rows[keep])
            cols.append(col[keep])
        B_nu = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rr2), np.concatenate(cols))),
            shape=(n_nodes, n_nodes),
        ).tocsr()
        axis_rows = sp.diags((~off_axis).astype(np.float64))
        B_nu = (B_nu + axis_rows @ B_rr).tocsr()

        return cls(h=h, m=m, ii=ii, jj=jj, r=r, t=t, idx=idx, active=active,
                   B_rr=B_rr, B_tt=B_tt, B_rt=B_rt, B_nu=B_nu)

    @property
    def n_nodes(self) -> int:
        return self.ii.size

    def quadratic_shift(self) -> np.ndarray:
        """(r^2 + t^2 - 1)/2 at the nodes; adding mu times this to u
        shifts every discrete eigenvalue by exactly mu and keeps the
        boundary at zero."""
        return 0.5 * (self.r**2 + self.t**2 - 1.0)

    def reduced_inputs(self, u: np.ndarray):
        return self.B_rr @ u, self.B_tt @ u, self.B_rt @ u, self.B_nu @ u

    def to_lattice(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros((self.m + 1, self.m + 1))
        out[self.ii, self.jj] = u
        return out

    def from_lattice(self, U: np.ndarray) -> np.ndarray:
        return U[self.ii, self.jj]


_GRID_CACHE: dict[int, QuarterDiskGrid] = {}


def get_grid(h: float) -> QuarterDiskGrid:
    m = int(round(1.0 / h))
    if m not in _GRID_CACHE:
        _GRID_CACHE[m] = QuarterDiskGrid.build(1.0 / m)
    return _GRID_CACHE[m]


@dataclass(frozen=True)
class DoublyRadialField:
    """Discrete u(r, t) on the quarter-disk lattice.

    ``values`` covers the full (m+1) x (m+1) lattice with zeros on and
    outside the arc (the Dirichlet condition); even reflection across
    the axes is implicit in how the stencils were built.
    """

    h: float
    n: int
    k: int
    values: np.ndarray
    grid: QuarterDiskGrid = dc_field(repr=False, compare=False, default=None)

    def __post_init__(self):
        g = self.grid if self.grid is not None else get_grid(self.h)
        object.__setattr__(self, "grid", g)
        v = np.asarray(self.values, dtype=np.float64).copy()
        if v.shape != (g.m + 1, g.m + 1):
            raise ValueError(f"values shape {v.shape} does not match m={g.m}")
        v[~g.active] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def node_values(self) -> np.ndarray:
        return self.grid.from_lattice(self.values)

    @property
    def osc(self) -> float:
        return float(self.values.max() - self.values.min())

    def u_at(self, r, t) -> np.ndarray:
        """Bilinear interpolation; lattice points on or beyond the arc
        carry the boundary value 0."""
        r = np.asarray(r, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        h, m = self.h, self.grid.m
        fi = np.clip(r / h, 0, m - 1e-12)
        fj = np.clip(t / h, 0, m - 1e-12)
        i0 = np.floor(fi).astype(int)
        j0 = np.floor(fj).astype(int)
        ai = fi - i0
        aj = fj - j0
        v = self.values
        return ((1 - ai) * (1 - aj) * v[i0, j0] + ai * (1 - aj) * v[i0 + 1, j0]
                + (1 - ai) * aj * v[i0, j0 + 1] + ai * aj * v[i0 + 1, j0 + 1])

    def spectra(self) -> np.ndarray:
        """Reduced Hessian spectra at all interior nodes, shape (N, n)."""
        u = self.node_values
        urr, utt, urt, nu = self.grid.reduced_inputs(u)
        return _spectra_from_inputs(urr, utt, urt, nu, self.n)


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    admissibility_slack: float
    wall_time: float
    converged: bool
    backend: str = ""


def field_from_function(fn, n: int, k: int, h: float) -> DoublyRadialField:
    """Sample a (vectorized) u(r, t) onto the lattice; values on and
    outside the arc are zeroed."""
    g = get_grid(h)
    gi, gj = np.meshgrid(np.arange(g.m + 1), np.arange(g.m + 1), indexing="ij")
    U = np.asarray(fn(gi * g.h, gj * g.h), dtype=np.float64)
    return DoublyRadialField(h=g.h, n=n, k=k, values=U, grid=g)


def _spectra_from_inputs(urr, utt, urt, nu, n: int) -> np.ndarray:
    half = 0.5 * (urr + utt)
    gap = np.sqrt((0.5 * (urr - utt)) ** 2 + urt**2)
    cols = [half + gap, half - gap] + [nu] * (n - 2)
    lam = np.stack(cols, axis=1)
    return -np.sort(-lam, axis=1)


def reduced_spectrum(u_rr: float, u_rt: float, u_tt: float,
                     u_r_over_r: float, n: int) -> Spectrum:
    """Hessian spectrum of a doubly-radial function from its reduced
    second derivatives: the 2x2 block eigenvalues plus u_r / r with
    multiplicity n - 2 (pass u_rr for the limit at r = 0).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    vals = [u_rr, u_rt, u_tt] + ([u_r_over_r] if n > 2 else [])
    if not np.all(np.isfinite(vals)):
        raise ValueError("reduced derivatives must be finite")
    lam = _spectra_from_inputs(
        np.array([u_rr]), np.array([u_tt]), np.array([u_rt]),
        np.array([u_r_over_r]), n,
    )[0]
    return Spectrum(lam)


def _signed_root(x, k: int):
    return np.sign(x) * np.abs(x) ** (1.0 / k)


def _evaluate(grid, u, n, k, delta, f_shift_root):
    """Shifted root residual and the ingredients of its Jacobian."""
    urr, utt, urt, nu = grid.reduced_inputs(u)
    S, d_urr, d_utt, d_urt, d_nu = core.reduced_invariants(urr, utt, urt, nu, n, k)
    sk = S[:, k]
    R = _signed_root(sk + delta, k) - f_shift_root
    return R, S, (d_urr, d_utt, d_urt, d_nu), sk


def _min_slack(S) -> float:
    return float(S[:, 1:].min())


def _project_admissible(grid, u, n, k, target: float = 0.0):
    """Smallest mu >= 0 with the spectrum of u + mu*q inside the closed
    cone (slack target), found by bisection; q is the quadratic shift."""
    urr, utt, urt, nu = grid.reduced_inputs(u)

    def slack(mu):
        S, *_ = core.reduced_invariants(urr + mu, utt + mu, urt, nu + mu, n, k)
        return _min_slack(S)

    if slack(0.0) >= -target:
        return u, 0.0
    half = 0.5 * (urr + utt)
    gapv = np.sqrt((0.5 * (urr - utt)) ** 2 + urt**2)
    lam_min = min(float((half - gapv).min()), float(nu.min()) if n > 2 else np.inf)
    hi = max(1.0, -2.0 * lam_min)
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if slack(mid) >= -target:
            hi = mid
        else:
            lo = mid
    return u + hi * grid.quadratic_shift(), hi


def solve(F, n: int, k: int, h: float, tol: float = 1e-8,
          max_iter: int = 500, verbose: bool = False):
    """Solve S_k(D^2 u) = F, u = 0 on the unit sphere, for doubly-radial
    bounded F >= 0.

    Returns (field, report); the reported residual is measured in the
    unshifted root form |S_k^{1/k} - F^{1/k}| (max over nodes) and the
    admissibility slack is max(0, -min_j S_j).  Raises ConvergenceError
    (carrying the best iterate) if the tolerance is not met.
    """
    t_start = time.perf_counter()
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    grid = get_grid(h)
    if callable(F):
        Fv = np.asarray(F(grid.r, grid.t), dtype=np.float64)
        if Fv.shape != grid.r.shape:
            raise ValueError("F(r, t) must return one value per node")
    else:
        Fv = np.full(grid.n_nodes, float(F))
    if not np.all(np.isfinite(Fv)):
        raise ValueError("F must be finite on the grid (no singular axis data)")
    if Fv.min() < 0:
        if Fv.min() < -1e-12 * max(1.0, Fv.max()):
            raise ValueError(f"F must be nonnegative, min={Fv.min()}")
        Fv = np.maximum(Fv, 0.0)
    fscale = max(float(Fv.max()), 1e-12)
    froot = Fv ** (1.0 / k)

    # admissible start: the Laplace problem with the cone-ordered rhs
    lap = (grid.B_rr + grid.B_tt + (n - 2) * grid.B_nu).tocsc()
    g_rhs = n * (Fv / comb(n, k)) ** (1.0 / k)
    u = spla.splu(lap).solve(g_rhs)
    u = np.minimum(u, 0.0)
    u, mu0 = _project_admissible(grid, u, n, k)
    if verbose and mu0:
        print(f"  init projection mu={mu0:.3e}")

    from .backend import BACKEND

    deltas = fscale * np.array([1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14, 1e-17])
    iterations = 0
    best_u = u.copy()
    best_res = np.inf

    def true_residual(uvec):
        urr, utt, urt, nu = grid.reduced_inputs(uvec)
        S, *_ = core.reduced_invariants(urr, utt, urt, nu, n, k)
        return _signed_root(S[:, k], k) - froot, S

    for stage, delta in enumerate(deltas):
        last_stage = stage == len(deltas) - 1
        target = max(0.3 * tol, 0.0 if last_stage else 0.03 * delta ** (1.0 / k))
        slack_allow = ADMISSIBILITY_SLACK if delta <= fscale * 1e-8 else 1e-4 * max(1.0, fscale)
        f_shift_root = (Fv + delta) ** (1.0 / k)
        for _ in range(40):
            if iterations >= max_iter:
                break
            R, S, partials, sk = _evaluate(grid, u, n, k, delta, f_shift_root)
            rnorm = float(np.abs(R).max())
            if rnorm <= target:
                break
            iterations += 1
            base = np.maximum(np.abs(sk + delta), 0.5 * delta + 1e-300)
            w = (1.0 / k) * base ** (1.0 / k - 1.0)
            J = (sp.diags(w * partials[0]) @ grid.B_rr
                 + sp.diags(w * partials[1]) @ grid.B_tt
                 + sp.diags(w * partials[2]) @ grid.B_rt
                 + sp.diags(w * partials[3]) @ grid.B_nu).tocsc()
            try:
                du = spla.splu(J).solve(-R)
            except RuntimeError:
                J = (J + 1e-12 * sp.eye(grid.n_nodes, format="csc")).tocsc()
                du = spla.splu(J).solve(-R)
            r2 = float(np.linalg.norm(R))
            accepted = False
            s = 1.0
            for _ in range(18):
                u_try = u + s * du
                R_try, S_try, _, _ = _evaluate(grid, u_try, n, k, delta, f_shift_root)
                ok_adm = _min_slack(S_try) >= -slack_allow
                ok_res = float(np.linalg.norm(R_try)) <= (1.0 - 1e-4 * s) * r2
                ok_pos = float(u_try.max()) <= 1e-9 * max(1.0, -float(u_try.min()))
                if ok_adm and ok_res and ok_pos:
                    u = u_try
                    accepted = True
                    break
                s *= 0.5
            if not accepted:
                # damped Jacobi fallback on the same residual
                diag = J.diagonal()
                diag = np.where(np.abs(diag) > 1e-300, diag, -1.0)
                u_try = u - 0.5 * R / diag
                u_try, _ = _project_admissible(grid, u_try, n, k, target=slack_allow)
                R_try, S_try, _, _ = _evaluate(grid, u_try, n, k, delta, f_shift_root)
                if float(np.linalg.norm(R_try)) < r2:
                    u = u_try
                else:
                    break  # stage stuck; move the continuation forward
        R_exact, _ = true_residual(u)
        res_now = float(np.abs(R_exact).max())
        if res_now < best_res:
            best_res = res_now
            best_u = u.copy()
        if verbose:
            print(f"  stage delta={delta:.1e}: true residual {res_now:.3e} "
                  f"after {iterations} Newton steps")

    # polish at delta = 0 with a clamped-weight Jacobian
    R_exact, S = true_residual(u)
    res = float(np.abs(R_exact).max())
    clamp = fscale * 1e-12
    polish = 0
    while res > tol and polish < 60 and iterations < max_iter + 60:
        polish += 1
        iterations += 1
        urr, utt, urt, nu = grid.reduced_inputs(u)
        S, d_urr, d_utt, d_urt, d_nu = core.reduced_invariants(urr, utt, urt, nu, n, k)
        sk = S[:, k]
        base = np.maximum(np.abs(sk), clamp)
        w = (1.0 / k) * base ** (1.0 / k - 1.0)
        J = (sp.diags(w * d_urr) @ grid.B_rr + sp.diags(w * d_utt) @ grid.B_tt
             + sp.diags(w * d_urt) @ grid.B_rt + sp.diags(w * d_nu) @ grid.B_nu).tocsc()
        R = _signed_root(sk, k) - froot
        try:
            du = spla.splu(J).solve(-R)
        except RuntimeError:
            J = (J + 1e-12 * sp.eye(grid.n_nodes, format="csc")).tocsc()
            du = spla.splu(J).solve(-R)
        s = 1.0
        improved = False
        for _ in range(18):
            u_try = u + s * du
            R_try, S_try = true_residual(u_try)
            if (_min_slack(S_try) >= -ADMISSIBILITY_SLACK
                    and float(np.abs(R_try).max()) < res):
                u = u_try
                res = float(np.abs(R_try).max())
                improved = True
                break
            s *= 0.5
        if not improved:
            break
        if res < best_res:
            best_res = res
            best_u = u.copy()

    R_exact, S = true_residual(best_u)
    final_res = float(np.abs(R_exact).max())
    slack = max(0.0, -_min_slack(S))
    wall = time.perf_counter() - t_start
    field = DoublyRadialField(h=grid.h, n=n, k=k,
                              values=grid.to_lattice(best_u), grid=grid)
    report = SolveReport(iterations=iterations, final_residual=final_res,
                         admissibility_slack=slack, wall_time=wall,
                         converged=final_res <= tol, backend=BACKEND)
    if slack > ADMISSIBILITY_SLACK * max(1.0, fscale):
        raise SchemeError(f"admissibility slack {slack:.3e} beyond tolerance")
    if not report.converged:
        raise ConvergenceError(
            f"residual {final_res:.3e} > tol {tol:.1e} after {iterations} steps",
            field=field, report=report,
        )
    return field, report


def residual(field: DoublyRadialField, F) -> np.ndarray:
    """Pointwise S_k(D^2 u) - F on the lattice; NaN outside the interior."""
    grid = field.grid
    u = field.node_values
    if callable(F):
        Fv = np.asarray(F(grid.r, grid.t), dtype=np.float64)
    else:
        Fv = np.full(grid.n_nodes, float(F))
    urr, utt, urt, nu = grid.reduced_inputs(u)
    S, *_ = core.reduced_invariants(urr, utt, urt, nu, field.n, field.k)
    out = np.full((grid.m + 1, grid.m + 1), np.nan)
    out[grid.ii, grid.jj] = S[:, field.k] - Fv
    return out


def comparison_pair_check(u_field: DoublyRadialField, w_field: DoublyRadialField,
                          tol_cmp: float | None = None,
                          check_preconditions: bool = True) -> bool:
    """Discrete comparison oracle: with S_k(D^2 w) >= S_k(D^2 u) nodewise
    and w <= u on the arc, conclude w <= u + tol_cmp everywhere."""
    gu, gw = u_field.grid, w_field.grid
    if (gu.m != gw.m or u_field.n != w_field.n or u_field.k != w_field.k):
        raise ValueError("fields must share grid and (n, k)")
    if tol_cmp is None:
        tol_cmp = 1e-8 * max(1.0, u_field.osc, w_field.osc)
    if check_preconditions:
        npk = (u_field.n, u_field.k)
        su = core.reduced_invariants(*gu.reduced_inputs(u_field.node_values), *npk)[0]
        sw = core.reduced_invariants(*gw.reduced_inputs(w_field.node_values), *npk)[0]
        gap = float((sw[:, u_field.k] - su[:, u_field.k]).min())
        if gap < -1e-7 * max(1.0, float(np.abs(su[:, u_field.k]).max())):
            raise ValueError(f"measure ordering violated by {gap:.3e}")
    return bool(np.all(w_field.values <= u_field.values + tol_cmp))


def save_field(field: DoublyRadialField, path_base: str) -> None:
    """Binary lattice dump plus a JSON header (h, n, k, bounding arc)."""
    np.save(path_base + ".npy", field.values)
    header = {
        "h": field.h, "n": field.n, "k": field.k, "m": field.grid.m,
        "arc": "r^2 + t^2 = 1", "format": "npy", "order": "values[i, j] = u(i*h, j*h)",
    }
    with open(path_base + ".json", "w") as fh:
        json.dump(header, fh, indent=1)


def load_field(path_base: str) -> DoublyRadialField:
    with open(path_base + ".json") as fh:
        header = json.load(fh)
    values = np.load(path_base + ".npy")
    return DoublyRadialField(h=header["h"], n=header["n"], k=header["k"],
                             values=values)
