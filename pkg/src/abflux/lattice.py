"""Peierls-phase square-lattice discretization of the multi-pole operator.

Sites live at ``((i - N) h, (j - N) h)`` for ``i, j = 0..2N``; poles are
snapped to plaquette centers so every link integral is finite and every
plaquette holonomy is exact.  Link phases are exact subtended-angle
integrals of the vector potential:

    link(x -> y) = exp(-i sum_k alpha_k wedge_k(x, y)),

``wedge_k`` the signed angle of the edge as seen from pole k.  The
operator is

    (H u)_x = h^{-2} sum_{y ~ x} (u_x - link(x -> y) u_y)

on active sites, with value 0 (Dirichlet) on excluded sites: the outer
boundary ring and a small disk around every pole (the lattice stand-in for
the vanishing-at-poles domain condition).

Sign conventions: with this link orientation, conjugating the multi-pole
operator by the diagonal phase e^{i f} (f the relative gauge function)
reproduces the single-pole operator with the total flux, matching the
continuum gauge identity; a plaquette enclosing flux alpha has holonomy
e^{2 pi i alpha} around the clockwise loop, which is the orientation
`plaquette_holonomy` reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit, prange

from .errors import (
    ConvergenceError,
    GeometryError,
    ResolutionError,
    ValidationError,
)
from .flux_geometry import Configuration

DEFAULT_EXCLUSION_RADIUS = 1.0  # in units of h


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(parallel=True, cache=True)
def _matvec_kernel(out, u, lx, ly, active, inv_h2):
    m, n = u.shape
    for i in prange(m):
        for j in range(n):
            if not active[i, j]:
                out[i, j] = 0.0
                continue
            acc = 4.0 * u[i, j]
            if i + 1 < m and active[i + 1, j]:
                acc -= lx[i, j] * u[i + 1, j]
            if i - 1 >= 0 and active[i - 1, j]:
                acc -= np.conj(lx[i - 1, j]) * u[i - 1, j]
            if j + 1 < n and active[i, j + 1]:
                acc -= ly[i, j] * u[i, j + 1]
            if j - 1 >= 0 and active[i, j - 1]:
                acc -= np.conj(ly[i, j - 1]) * u[i, j - 1]
            out[i, j] = acc * inv_h2


@njit(cache=True)
def _dot_real(a, b):
    # deterministic serial reduction of Re<a, b>
    m, n = a.shape
    s = 0.0
    for i in range(m):
        for j in range(n):
            s += a[i, j].real * b[i, j].real + a[i, j].imag * b[i, j].imag
    return s


@njit(parallel=True, cache=True)
def _axpy(y, alpha, x):
    m, n = y.shape
    for i in prange(m):
        for j in range(n):
            y[i, j] = y[i, j] + alpha * x[i, j]


@njit(parallel=True, cache=True)
def _xpay(y, alpha, x):
    # y <- x + alpha y
    m, n = y.shape
    for i in prange(m):
        for j in range(n):
            y[i, j] = x[i, j] + alpha * y[i, j]


# ---------------------------------------------------------------------------
# lattice construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MagneticLattice:
    h: float
    half_width: int
    link_x: np.ndarray          # (M-1, M): phase on edge (i,j) -> (i+1,j)
    link_y: np.ndarray          # (M, M-1): phase on edge (i,j) -> (i,j+1)
    active: np.ndarray          # (M, M) bool
    pole_centers: np.ndarray    # (n, 2) snapped plaquette centers
    pole_fluxes: np.ndarray     # (n,)
    pole_offsets: np.ndarray    # (n, 2) original - snapped
    exclusion_radius: float     # in units of h

    @property
    def size(self) -> int:
        return 2 * self.half_width + 1

    @property
    def coords(self) -> np.ndarray:
        return (np.arange(self.size) - self.half_width) * self.h

    def site_xy(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.coords
        return np.meshgrid(c, c, indexing="ij")

    def nearest_site(self, point) -> tuple[int, int]:
        i = int(round(point[0] / self.h)) + self.half_width
        j = int(round(point[1] / self.h)) + self.half_width
        if not (0 <= i < self.size and 0 <= j < self.size):
            raise GeometryError(f"point {tuple(point)} outside the grid")
        return i, j

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = np.empty_like(u)
        _matvec_kernel(out, u, self.link_x, self.link_y, self.active, 1.0 / self.h**2)
        return out


def _wedge_angles(ax, ay, bx, by, sx, sy):
    """Signed angle of the edge (a -> b) seen from pole s (vectorized)."""
    ux, uy = ax - sx, ay - sy
    vx, vy = bx - sx, by - sy
    return np.arctan2(ux * vy - uy * vx, ux * vx + uy * vy)


def build(
    cfg: Configuration,
    h: float,
    half_width: int,
    exclusion_radius: float = DEFAULT_EXCLUSION_RADIUS,
) -> MagneticLattice:
    """Discretize the configuration's operator on a (2N+1)^2 grid."""
    if h <= 0 or half_width < 4:
        raise ValidationError("need h > 0 and half_width >= 4")
    n_side = 2 * half_width + 1
    coords = (np.arange(n_side) - half_width) * h

    centers = []
    offsets = []
    for pole in cfg.poles:
        cx = (math.floor(pole.position[0] / h) + 0.5) * h
        cy = (math.floor(pole.position[1] / h) + 0.5) * h
        centers.append((cx, cy))
        offsets.append((pole.position[0] - cx, pole.position[1] - cy))
    centers = np.array(centers)
    offsets = np.array(offsets)
    for k in range(len(centers)):
        for kk in range(k + 1, len(centers)):
            if np.allclose(centers[k], centers[kk], atol=h * 1e-9):
                raise ResolutionError(
                    f"poles {k} and {kk} snap to the same plaquette at h={h}"
                )
    margin = (half_width - 10) * h
    if np.any(np.abs(centers) > margin + 1e-12):
        raise GeometryError("pole closer than 10 h to the grid boundary")

    x, y = np.meshgrid(coords, coords, indexing="ij")
    theta_x = np.zeros((n_side - 1, n_side))
    theta_y = np.zeros((n_side, n_side - 1))
    for (sx, sy), alpha in zip(centers, cfg.fluxes):
        theta_x += alpha * _wedge_angles(
            x[:-1, :], y[:-1, :], x[1:, :], y[1:, :], sx, sy
        )
        theta_y += alpha * _wedge_angles(
            x[:, :-1], y[:, :-1], x[:, 1:], y[:, 1:], sx, sy
        )
    link_x = np.exp(-1j * theta_x)
    link_y = np.exp(-1j * theta_y)

    active = np.ones((n_side, n_side), dtype=bool)
    active[0, :] = active[-1, :] = False
    active[:, 0] = active[:, -1] = False
    for (sx, sy) in centers:
        d2 = (x - sx) ** 2 + (y - sy) ** 2
        active &= d2 > (exclusion_radius * h) ** 2 + 1e-15

    return MagneticLattice(
        h=float(h),
        half_width=int(half_width),
        link_x=link_x,
        link_y=link_y,
        active=active,
        pole_centers=centers,
        pole_fluxes=cfg.fluxes.copy(),
        pole_offsets=offsets,
        exclusion_radius=float(exclusion_radius),
    )


def free_lattice(h: float, half_width: int) -> MagneticLattice:
    """Flux-free lattice (standard 5-point Dirichlet Laplacian)."""
    n_side = 2 * half_width + 1
    active = np.ones((n_side, n_side), dtype=bool)
    active[0, :] = active[-1, :] = False
    active[:, 0] = active[:, -1] = False
    return MagneticLattice(
        h=float(h),
        half_width=int(half_width),
        link_x=np.ones((n_side - 1, n_side), dtype=complex),
        link_y=np.ones((n_side, n_side - 1), dtype=complex),
        active=active,
        pole_centers=np.zeros((0, 2)),
        pole_fluxes=np.zeros(0),
        pole_offsets=np.zeros((0, 2)),
        exclusion_radius=DEFAULT_EXCLUSION_RADIUS,
    )


def plaquette_holonomy(lat: MagneticLattice, i: int, j: int) -> complex:
    """Product of link phases around plaquette (i, j).

    Traversal is oriented so a plaquette enclosing a single pole of flux
    alpha returns exp(+2 pi i alpha).
    """
    ccw = (
        lat.link_x[i, j]
        * lat.link_y[i + 1, j]
        * np.conj(lat.link_x[i, j + 1])
        * np.conj(lat.link_y[i, j])
    )
    return complex(np.conj(ccw))


def enclosed_flux(lat: MagneticLattice, i: int, j: int) -> float:
    """Total flux of the poles snapped inside plaquette (i, j)."""
    cx = (i - lat.half_width + 0.5) * lat.h
    cy = (j - lat.half_width + 0.5) * lat.h
    total = 0.0
    for (sx, sy), alpha in zip(lat.pole_centers, lat.pole_fluxes):
        if abs(sx - cx) < lat.h / 4 and abs(sy - cy) < lat.h / 4:
            total += alpha
    return total


# ---------------------------------------------------------------------------
# gauge transformations
# ---------------------------------------------------------------------------

def gauge_transform(lat: MagneticLattice, phi: np.ndarray) -> MagneticLattice:
    """Conjugate the operator by the diagonal unitary diag(phi).

    link(x -> y) maps to conj(phi_x) link(x -> y) phi_y; the spectrum is
    unchanged.  ``phi`` is normalized to unit modulus and must be nonzero
    on all active sites.
    """
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != lat.active.shape:
        raise ValidationError("phi shape does not match the grid")
    mags = np.abs(phi)
    if np.any(mags[lat.active] == 0.0):
        raise ValidationError("phi vanishes on an active site")
    safe = np.where(mags == 0.0, 1.0, mags)
    unit = phi / safe
    unit = np.where(mags == 0.0, 1.0, unit)
    link_x = np.conj(unit[:-1, :]) * lat.link_x * unit[1:, :]
    link_y = np.conj(unit[:, :-1]) * lat.link_y * unit[:, 1:]
    return replace(lat, link_x=link_x, link_y=link_y)


def relative_site_phase(lat: MagneticLattice) -> np.ndarray:
    """Gauge function f at every site, for A - beta * A0 (exact closed form).

    For each site the straight leg from a fixed off-cut base point
    accumulates per-pole subtended angles; crossings of the cut segments
    contribute the 2 pi alpha_k branch corrections that keep f equal to
    the cut-plane branch of the gauge function.
    """
    return _site_phase(lat, relative=True)


def full_site_phase(lat: MagneticLattice) -> np.ndarray:
    """Gauge function f at every site for the full potential A."""
    return _site_phase(lat, relative=False)


def _site_phase(lat: MagneticLattice, relative: bool) -> np.ndarray:
    if len(lat.pole_centers) == 0:
        return np.zeros((lat.size, lat.size))
    x, y = lat.site_xy()
    bx, by = _phase_base_point_of(lat.pole_centers, lat.h, lat.half_width)
    f = np.zeros_like(x)
    beta = float(np.sum(lat.pole_fluxes))
    s1 = lat.pole_centers[0]
    for (sx, sy), alpha in zip(lat.pole_centers, lat.pole_fluxes):
        f += alpha * _wedge_angles(bx, by, x, y, sx, sy)
    if relative:
        f -= beta * _wedge_angles(bx, by, x, y, s1[0], s1[1])
    # branch corrections: signed crossings of [base, site] with each cut
    for k in range(1, len(lat.pole_centers)):
        p, q = s1, lat.pole_centers[k]
        d = q - p
        o_base = d[0] * (by - p[1]) - d[1] * (bx - p[0])
        o_site = d[0] * (y - p[1]) - d[1] * (x - p[0])
        tx, ty = x - bx, y - by
        o_p = tx * (p[1] - by) - ty * (p[0] - bx)
        o_q = tx * (q[1] - by) - ty * (q[0] - bx)
        crossing = (o_base * o_site < 0) & (o_p * o_q < 0)
        f -= 2.0 * math.pi * lat.pole_fluxes[k] * np.sign(o_base) * crossing
    return f


def _phase_base_point_of(centers, h, half_width):
    top = (half_width + 2.0) * h
    cx = float(np.mean(centers[:, 0])) if len(centers) else 0.0
    # irrational-ish jitter avoids degenerate (collinear) crossing tests
    return (cx + 0.137137 * h, top + 0.071071 * h)


def single_pole_equivalent(lat: MagneticLattice) -> MagneticLattice:
    """Lattice of the single-pole operator with the total flux at the base pole.

    Together with :func:`relative_site_phase` this realizes the gauge
    identity: conjugating the multi-pole lattice by e^{i f} reproduces
    these links away from the cut set.
    """
    beta = float(np.sum(lat.pole_fluxes))
    n_side = lat.size
    coords = lat.coords
    x, y = np.meshgrid(coords, coords, indexing="ij")
    if abs(beta - round(beta)) <= 1e-12:
        out = free_lattice(lat.h, lat.half_width)
        active = out.active.copy()
        sx, sy = lat.pole_centers[0]
        d2 = (x - sx) ** 2 + (y - sy) ** 2
        active &= d2 > (lat.exclusion_radius * lat.h) ** 2 + 1e-15
        return replace(out, active=active,
                       pole_centers=lat.pole_centers[:1].copy(),
                       pole_fluxes=np.zeros(1),
                       pole_offsets=lat.pole_offsets[:1].copy(),
                       exclusion_radius=lat.exclusion_radius)
    sx, sy = lat.pole_centers[0]
    theta_x = beta * _wedge_angles(x[:-1, :], y[:-1, :], x[1:, :], y[1:, :], sx, sy)
    theta_y = beta * _wedge_angles(x[:, :-1], y[:, :-1], x[:, 1:], y[:, 1:], sx, sy)
    active = np.ones((n_side, n_side), dtype=bool)
    active[0, :] = active[-1, :] = False
    active[:, 0] = active[:, -1] = False
    d2 = (x - sx) ** 2 + (y - sy) ** 2
    active &= d2 > (lat.exclusion_radius * lat.h) ** 2 + 1e-15
    return MagneticLattice(
        h=lat.h,
        half_width=lat.half_width,
        link_x=np.exp(-1j * theta_x),
        link_y=np.exp(-1j * theta_y),
        active=active,
        pole_centers=lat.pole_centers[:1].copy(),
        pole_fluxes=np.array([beta]),
        pole_offsets=lat.pole_offsets[:1].copy(),
        exclusion_radius=lat.exclusion_radius,
    )


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _cg(lat: MagneticLattice, sigma: float, rhs: np.ndarray, tol: float,
        max_iter: int | None, x0: np.ndarray | None = None):
    """Conjugate gradients on (H + sigma) u = rhs; returns (u, relres, iters)."""
    inv_h2 = 1.0 / lat.h**2
    b = np.ascontiguousarray(rhs, dtype=np.complex128)
    bnorm = math.sqrt(_dot_real(b, b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0
    if max_iter is None:
        max_iter = 40 * lat.size
    x = np.zeros_like(b) if x0 is None else np.ascontiguousarray(x0, dtype=np.complex128).copy()
    ap = np.empty_like(b)
    if x0 is None:
        r = b.copy()
    else:
        _matvec_kernel(ap, x, lat.link_x, lat.link_y, lat.active, inv_h2)
        if sigma != 0.0:
            _axpy(ap, sigma, x)
        r = b - ap
    p = r.copy()
    rz = _dot_real(r, r)
    for it in range(1, max_iter + 1):
        _matvec_kernel(ap, p, lat.link_x, lat.link_y, lat.active, inv_h2)
        if sigma != 0.0:
            _axpy(ap, sigma, p)
        pap = _dot_real(p, ap)
        alpha = rz / pap
        _axpy(x, alpha, p)
        _axpy(r, -alpha, ap)
        rz_new = _dot_real(r, r)
        if math.sqrt(rz_new) <= tol * bnorm:
            return x, math.sqrt(rz_new) / bnorm, it
        _xpay(p, rz_new / rz, r)
        rz = rz_new
    return x, math.sqrt(rz) / bnorm, max_iter


def solve_shifted(
    lat: MagneticLattice,
    s: float,
    rhs: np.ndarray,
    tol: float = 1e-8,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Solve (H + s^2) u = rhs to relative residual `tol` (CG).

    H + s^2 is Hermitian positive definite for s > 0, which is all CG
    needs; the method is a contract detail, not part of the interface.
    """
    if s <= 0.0:
        raise ValidationError("solve_shifted requires s > 0")
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.shape != lat.active.shape:
        raise ValidationError("rhs shape does not match the grid")
    if np.any(np.abs(rhs[~lat.active]) > 0.0):
        raise GeometryError("rhs is supported on excluded sites")
    u, relres, _ = _cg(lat, s * s, rhs, tol, max_iter, x0)
    if relres > tol:
        raise ConvergenceError(
            f"CG stalled at relative residual {relres:.3e} (target {tol:.1e})"
        )
    return u


def to_sparse(lat: MagneticLattice):
    """CSR matrix of H restricted to active sites (plus the index map)."""
    import scipy.sparse as sp

    m = lat.size
    idx = -np.ones((m, m), dtype=np.int64)
    act = np.argwhere(lat.active)
    idx[act[:, 0], act[:, 1]] = np.arange(len(act))
    inv_h2 = 1.0 / lat.h**2
    rows, cols, vals = [], [], []
    n_act = len(act)
    rows.append(np.arange(n_act))
    cols.append(np.arange(n_act))
    vals.append(np.full(n_act, 4.0 * inv_h2, dtype=complex))
    for (di, dj, links) in (
        (1, 0, lat.link_x),
        (0, 1, lat.link_y),
    ):
        src = act
        ti, tj = src[:, 0] + di, src[:, 1] + dj
        ok = (ti < m) & (tj < m)
        ok &= lat.active[np.minimum(ti, m - 1), np.minimum(tj, m - 1)]
        s = src[ok]
        ti, tj = s[:, 0] + di, s[:, 1] + dj
        link = links[s[:, 0], s[:, 1]]
        rows.append(idx[s[:, 0], s[:, 1]])
        cols.append(idx[ti, tj])
        vals.append(-link * inv_h2)
        rows.append(idx[ti, tj])
        cols.append(idx[s[:, 0], s[:, 1]])
        vals.append(-np.conj(link) * inv_h2)
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_act, n_act),
    )
    return mat, idx


def solve_direct(lat: MagneticLattice, s: float, rhs: np.ndarray,
                 factor_cache: dict | None = None) -> np.ndarray:
    """Direct sparse-LU solve of (H + s^2) u = rhs (small grids, oracles)."""
    import scipy.sparse as sp
    import scipy.sparse.linalg as sla

    rhs = np.asarray(rhs, dtype=complex)
    if np.any(np.abs(rhs[~lat.active]) > 0.0):
        raise GeometryError("rhs is supported on excluded sites")
    key = ("lu", float(s))
    if factor_cache is not None and key in factor_cache:
        lu, idx = factor_cache[key]
    else:
        mat, idx = to_sparse(lat)
        lu = sla.splu((mat + s * s * sp.identity(mat.shape[0], format="csr")).tocsc())
        if factor_cache is not None:
            factor_cache[key] = (lu, idx)
    vec = rhs[lat.active]
    sol = lu.solve(vec)
    out = np.zeros_like(rhs)
    out[lat.active] = sol
    return out


def smallest_eigenvalue(lat: MagneticLattice, tol: float = 1e-7,
                        max_outer: int = 400) -> float:
    """Smallest eigenvalue of H by inverse iteration with CG inner solves.

    Converged when the Rayleigh-quotient residual ||H v - rho v|| drops
    below tol * rho.
    """
    if int(np.sum(lat.active)) < 9:
        raise ValidationError("need at least 9 active sites")
    rng = np.random.default_rng(1234)
    v = np.zeros(lat.active.shape, dtype=complex)
    v[lat.active] = rng.standard_normal(int(np.sum(lat.active)))
    v /= math.sqrt(_dot_real(v, v))
    inner_tol = max(1e-13, 0.003 * tol)
    resnorm, rho = math.inf, math.inf
    history: list[float] = []
    for _ in range(max_outer):
        w, _, _ = _cg(lat, 0.0, v, tol=inner_tol, max_iter=None, x0=None)
        w /= math.sqrt(_dot_real(w, w))
        hv = lat.apply(w)
        rho = _dot_real(w, hv)
        res = hv - rho * w
        resnorm = math.sqrt(_dot_real(res, res))
        if resnorm <= tol * abs(rho):
            return rho
        history.append(resnorm)
        if len(history) >= 4 and history[-1] > 0.999 * history[-4]:
            break  # no longer contracting; report failure honestly
        v = w
    raise ConvergenceError(
        f"inverse iteration stalled: Rayleigh residual {resnorm:.3e} (target {tol * abs(rho):.1e})"
    )


def lowest_eigenvalues(lat: MagneticLattice, k: int = 10, tol: float = 0) -> np.ndarray:
    """k lowest eigenvalues via shift-invert Lanczos on the sparse matrix."""
    import scipy.sparse.linalg as sla

    mat, _ = to_sparse(lat)
    vals = sla.eigsh(
        mat, k=k, sigma=0.0, which="LM", tol=tol, return_eigenvectors=False,
        v0=np.full(mat.shape[0], 1.0 + 0.0j),
    )
    return np.sort(vals.real)


# ---------------------------------------------------------------------------
# multishift Green-function sweep (probe entries for many shifts at once)
# ---------------------------------------------------------------------------

def greens_probe_sweep(
    lat: MagneticLattice,
    s_values,
    source: tuple[int, int],
    probes: list[tuple[int, int]],
    tol: float = 1e-6,
    max_iter: int | None = None,
) -> np.ndarray:
    """Entries G_s(p, source) of (H + s^2)^{-1} delta_source / h^2.

    One seed CG run on the smallest shift drives scalar recurrences for
    all other shifts (the systems share their Krylov space); only probe
    entries of the shifted solutions are tracked.  Returns an array of
    shape (len(s_values), len(probes)).
    """
    s_values = np.asarray(list(s_values), dtype=float)
    if np.any(s_values <= 0.0):
        raise ValidationError("all shifts must be positive")
    sigmas = s_values**2
    sigma0 = float(np.min(sigmas))
    deltas = sigmas - sigma0
    n_shift = len(sigmas)
    if not lat.active[source]:
        raise GeometryError("source site is excluded")
    for p in probes:
        if not lat.active[p]:
            raise GeometryError("probe site is excluded")

    b = np.zeros(lat.active.shape, dtype=np.complex128)
    b[source] = 1.0 / lat.h**2
    bnorm = math.sqrt(_dot_real(b, b))
    if max_iter is None:
        max_iter = 60 * lat.size

    pi = np.array([p[0] for p in probes])
    pj = np.array([p[1] for p in probes])

    inv_h2 = 1.0 / lat.h**2
    r = b.copy()
    p_seed = b.copy()
    ap = np.empty_like(b)
    rz = _dot_real(r, r)

    zeta_prev = np.ones(n_shift)
    zeta = np.ones(n_shift)
    alpha_prev = 1.0
    beta_prev = 0.0
    x_probe = np.zeros((n_shift, len(probes)), dtype=np.complex128)
    p_probe = np.tile(b[pi, pj], (n_shift, 1))
    done = np.zeros(n_shift, dtype=bool)

    for _ in range(max_iter):
        _matvec_kernel(ap, p_seed, lat.link_x, lat.link_y, lat.active, inv_h2)
        if sigma0 != 0.0:
            _axpy(ap, sigma0, p_seed)
        pap = _dot_real(p_seed, ap)
        alpha = rz / pap
        denom = (
            alpha * beta_prev * (zeta_prev - zeta)
            + zeta_prev * alpha_prev * (1.0 + deltas * alpha)
        )
        zeta_next = zeta * zeta_prev * alpha_prev / denom
        alpha_shift = alpha * zeta_next / zeta
        x_probe += alpha_shift[:, None] * p_probe
        _axpy(r, -alpha, ap)
        rz_new = _dot_real(r, r)
        beta = rz_new / rz
        beta_shift = beta * (zeta_next / zeta) ** 2
        r_pr = r[pi, pj]
        p_probe = zeta_next[:, None] * r_pr[None, :] + beta_shift[:, None] * p_probe
        zeta_prev = zeta.copy()
        zeta = zeta_next.copy()
        alpha_prev = alpha
        beta_prev = beta
        _xpay(p_seed, beta, r)
        rz = rz_new
        rnorm = math.sqrt(rz)
        done = np.abs(zeta) * rnorm <= tol * bnorm
        if np.all(done):
            return x_probe
    raise ConvergenceError(
        f"multishift CG did not converge: worst residual "
        f"{float(np.max(np.abs(zeta)) * math.sqrt(rz) / bnorm):.3e}"
    )
