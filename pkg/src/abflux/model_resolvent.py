"""Exact single-pole resolvent via partial waves.

The single-pole operator with flux ``beta`` is block-diagonal over angular
modes ``e^{i l theta}`` with effective Bessel order ``nu_l = |l + beta|``.
Its per-mode resolvent kernel at spectral parameter ``lambda`` is

    K_l(r, rt) = (i pi / 2) J_{nu_l}(lambda r_<) H^(1)_{nu_l}(lambda r_>) rt

where the trailing ``rt`` is the radial measure factor: applying the
resolvent is ``u(r) = int_0^R K_l(r, rt) f_l(rt) d rt``.  The kernel is
continuous but not C^1 across ``r = rt``, so all quadratures split there.

The zero-energy kernel (the resolvent's value at lambda = 0) is

    K0_l(r, rt) = (1 / (2 nu_l)) (r_< / r_>)^{nu_l} rt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import special_functions as sf
from .errors import (
    DiagonalError,
    DomainError,
    NearIntegerOrderError,
    NumericalError,
    TruncationError,
    ValidationError,
)

DEFAULT_MODES = 48
DEFAULT_GRID_SIZE = 128
_PANEL_ORDER = 64


def nu_of(beta: float, l: int) -> float:
    return abs(l + beta)


def _check_order(beta: float, l: int) -> float:
    nu = nu_of(beta, l)
    if sf.distance_to_integers(nu) <= 1e-8:
        raise NearIntegerOrderError(
            f"effective order nu = |{l} + {beta}| is within 1e-8 of an integer"
        )
    return nu


# ---------------------------------------------------------------------------
# radial grids and polar functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    weights: np.ndarray
    r_max: float

    @classmethod
    def gauss_legendre(cls, r_max: float, n: int = DEFAULT_GRID_SIZE) -> "RadialGrid":
        x, w = np.polynomial.legendre.leggauss(n)
        nodes = 0.5 * r_max * (x + 1.0)
        weights = 0.5 * r_max * w
        return cls(nodes=nodes, weights=weights, r_max=float(r_max))

    def barycentric_weights(self) -> np.ndarray:
        # Berrut-Trefethen weights for Gauss-Legendre nodes
        x = 2.0 * self.nodes / self.r_max - 1.0
        w = np.polynomial.legendre.leggauss(len(x))[1]
        return ((-1.0) ** np.arange(len(x))) * np.sqrt((1.0 - x * x) * w)


@dataclass
class PolarFunction:
    """Angular-mode decomposition sampled on a radial quadrature grid."""

    grid: RadialGrid
    modes: dict[int, np.ndarray]

    def __post_init__(self):
        for l, vals in self.modes.items():
            vals = np.asarray(vals, dtype=complex)
            if vals.shape != self.grid.nodes.shape:
                raise ValidationError(f"mode {l} samples do not match the grid")
            if not np.all(np.isfinite(vals)):
                raise ValidationError(f"mode {l} samples are not finite")
            self.modes[l] = vals

    @classmethod
    def from_profiles(
        cls,
        profiles: dict[int, Callable[[np.ndarray], np.ndarray]],
        r_max: float,
        n: int = DEFAULT_GRID_SIZE,
    ) -> "PolarFunction":
        grid = RadialGrid.gauss_legendre(r_max, n)
        modes = {l: np.asarray(f(grid.nodes), dtype=complex) for l, f in profiles.items()}
        return cls(grid=grid, modes=modes)

    def mode_l2_norms(self) -> dict[int, float]:
        w = self.grid.weights * self.grid.nodes
        return {
            l: float(np.sqrt(np.sum(w * np.abs(v) ** 2))) for l, v in self.modes.items()
        }


def _interp_matrix(grid: RadialGrid, points: np.ndarray) -> np.ndarray:
    """Barycentric interpolation matrix from grid nodes to `points`."""
    bw = grid.barycentric_weights()
    diff = points[:, None] - grid.nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15 * grid.r_max)
    diff = np.where(exact, 1.0, diff)
    terms = bw[None, :] / diff
    out = terms / terms.sum(axis=1, keepdims=True)
    hit_rows = exact.any(axis=1)
    if np.any(hit_rows):
        out[hit_rows] = 0.0
        out[hit_rows] = exact[hit_rows].astype(float)
    return out


# ---------------------------------------------------------------------------
# pointwise kernels
# ---------------------------------------------------------------------------

def kernel(beta: float, l: int, lam: complex, r: float, rt: float,
           eps: float = 1e-15) -> complex:
    """Per-mode resolvent kernel, measure factor rt included."""
    nu = _check_order(beta, l)
    if lam == 0:
        raise DomainError("kernel undefined at lambda = 0; use r00_kernel")
    if r <= 0.0 or rt <= 0.0:
        raise DomainError("kernel requires r, rt > 0")
    if abs(lam) * max(r, rt) > sf.SERIES_RADIUS:
        raise DomainError("`|lambda| * max(r, rt)` outside certified series radius")
    r_small, r_big = min(r, rt), max(r, rt)
    return (
        0.5j
        * math.pi
        * sf.bessel_j(nu, lam * r_small, eps)
        * sf.hankel1(nu, lam * r_big, eps)
        * rt
    )


def r00_kernel(beta: float, l: int, r: float, rt: float) -> float:
    """Zero-energy kernel (1/(2 nu)) (r_</r_>)^nu, measure factor included."""
    nu = nu_of(beta, l)
    if nu == 0.0:
        raise DomainError("zero-energy kernel undefined for nu = 0")
    if r <= 0.0 or rt <= 0.0:
        raise DomainError("r00_kernel requires r, rt > 0")
    r_small, r_big = min(r, rt), max(r, rt)
    return (r_small / r_big) ** nu / (2.0 * nu) * rt


def split_A(beta: float, l: int, lam: complex, r: float, rt: float,
            eps: float = 1e-15):
    """Decompose the kernel into its analytic-even and branch parts.

    Returns ``(a0, apm, branch)`` with

        kernel = a0 + lambda^{2 mu_branch} * apm,

    where ``a0`` and ``apm`` are entire, even functions of lambda and the
    branch exponent is ``mu_+`` for ``l + beta > 0``, ``mu_-`` otherwise.
    """
    if not (-0.5 <= beta <= 0.5) or beta == 0.0:
        raise DomainError("split_A requires beta in [-1/2, 1/2] minus 0")
    nu = _check_order(beta, l)
    if abs(lam) * max(r, rt) > sf.SERIES_RADIUS:
        raise DomainError("arguments outside certified series radius")
    mu_plus = beta if beta > 0.0 else beta + 1.0
    mu_minus = 1.0 - mu_plus
    plus = (l + beta) > 0.0
    mu = mu_plus if plus else mu_minus
    # integer lambda-power left over after scaling out (z/2)^nu from each J
    m = round(nu - mu)
    lam2 = complex(lam) * complex(lam)
    r_small, r_big = min(r, rt), max(r, rt)
    s_small = sf._scaled_j_any(nu, lam * r_small, eps)
    s_big_p = sf._scaled_j_any(nu, lam * r_big, eps)
    s_big_m = sf._scaled_j_any(-nu, lam * r_big, eps)
    cot = 1.0 / math.tan(nu * math.pi)
    csc = 1.0 / math.sin(nu * math.pi)
    a0 = 0.5 * math.pi * csc * (r_small / r_big) ** nu * s_small * s_big_m * rt
    apm = (
        0.5j
        * math.pi
        * (1.0 + 1j * cot)
        * lam2 ** m
        * (r * rt / 4.0) ** nu
        * s_small
        * s_big_p
        * rt
    )
    return a0, apm, ("plus" if plus else "minus")


# ---------------------------------------------------------------------------
# vectorized kernel rows and mode matrices
# ---------------------------------------------------------------------------

def _kernel_row(beta, l, lam, r_eval, rt_nodes, eps=1e-14):
    """kernel(beta, l, lam, r_eval, rt) for an array of rt values."""
    nu = _check_order(beta, l)
    lam = complex(lam)
    r_small = np.minimum(r_eval, rt_nodes)
    r_big = np.maximum(r_eval, rt_nodes)
    z2_small = (lam * lam) * (r_small * r_small)
    z2_big = (lam * lam) * (r_big * r_big)
    s_small = sf.scaled_series_array(nu, z2_small, eps)
    s_big_p = sf.scaled_series_array(nu, z2_big, eps)
    s_big_m = sf.scaled_series_array(-nu, z2_big, eps)
    cot = 1.0 / math.tan(nu * math.pi)
    csc = 1.0 / math.sin(nu * math.pi)
    half_lam = lam / 2.0
    # J_nu(lam r_<) J_nu(lam r_>) = (lam/2)^{2nu} (r_< r_>)^nu S S
    jj = (half_lam ** (2.0 * nu)) * (r_small * r_big) ** nu * s_small * s_big_p
    # J_nu(lam r_<) J_{-nu}(lam r_>) = (r_</r_>)^nu S S-
    jjm = (r_small / r_big) ** nu * s_small * s_big_m
    h_term = (1.0 + 1j * cot) * jj - 1j * csc * jjm
    return 0.5j * math.pi * h_term * rt_nodes


def _panel_nodes(a: float, b: float, order: int = _PANEL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def resolve_mode_at(
    beta: float,
    l: int,
    lam: complex,
    f: PolarFunction,
    r_eval: np.ndarray,
    eps: float = 1e-14,
) -> np.ndarray:
    """(R_beta(lambda; l) f_l)(r_eval) by split quadrature at the kink."""
    r_eval = np.atleast_1d(np.asarray(r_eval, dtype=float))
    grid = f.grid
    samples = f.modes[l]
    out = np.empty(r_eval.shape, dtype=complex)
    for i, r in enumerate(r_eval):
        xs_lo, ws_lo = _panel_nodes(0.0, r)
        xs_hi, ws_hi = _panel_nodes(r, grid.r_max)
        xs = np.concatenate([xs_lo, xs_hi])
        ws = np.concatenate([ws_lo, ws_hi])
        kv = _kernel_row(beta, l, lam, r, xs, eps)
        fv = _interp_matrix(grid, xs) @ samples
        out[i] = np.sum(ws * kv * fv)
    return out


def mode_matrix(beta: float, l: int, lam: complex, grid: RadialGrid,
                eps: float = 1e-14) -> np.ndarray:
    """Matrix taking f_l samples to (R_beta(lambda; l) f_l) samples."""
    n = len(grid.nodes)
    mat = np.empty((n, n), dtype=complex)
    for i, r in enumerate(grid.nodes):
        xs_lo, ws_lo = _panel_nodes(0.0, r)
        xs_hi, ws_hi = _panel_nodes(r, grid.r_max)
        xs = np.concatenate([xs_lo, xs_hi])
        ws = np.concatenate([ws_lo, ws_hi])
        kv = _kernel_row(beta, l, lam, r, xs, eps)
        mat[i, :] = (ws * kv) @ _interp_matrix(grid, xs)
    return mat


def _r00_row(beta, l, r_eval, rt_nodes):
    nu = nu_of(beta, l)
    r_small = np.minimum(r_eval, rt_nodes)
    r_big = np.maximum(r_eval, rt_nodes)
    return (r_small / r_big) ** nu / (2.0 * nu) * rt_nodes


def nystrom_matrix(beta: float, l: int, lam: complex, grid: RadialGrid,
                   eps: float = 1e-14) -> np.ndarray:
    """Plain Nystrom sample of the kernel on the stored rule.

    Less accurate than :func:`mode_matrix` (the kink at r = rt is not
    split) but exactly self-adjoint under the r dr inner product, which is
    what operator-level symmetry checks should use.
    """
    n = len(grid.nodes)
    mat = np.empty((n, n), dtype=complex)
    for i, r in enumerate(grid.nodes):
        mat[i, :] = grid.weights * _kernel_row(beta, l, lam, r, grid.nodes, eps)
    return mat


def r00_mode_matrix(beta: float, l: int, grid: RadialGrid) -> np.ndarray:
    n = len(grid.nodes)
    mat = np.empty((n, n), dtype=float)
    for i, r in enumerate(grid.nodes):
        xs_lo, ws_lo = _panel_nodes(0.0, r)
        xs_hi, ws_hi = _panel_nodes(r, grid.r_max)
        xs = np.concatenate([xs_lo, xs_hi])
        ws = np.concatenate([ws_lo, ws_hi])
        kv = _r00_row(beta, l, r, xs)
        mat[i, :] = (ws * kv) @ _interp_matrix(grid, xs)
    return mat


# ---------------------------------------------------------------------------
# certified truncation bounds
# ---------------------------------------------------------------------------

def _order_gap(beta: float) -> float:
    """Distance from every nu_l to the integers (min over l)."""
    frac = beta - math.floor(beta)
    return min(frac, 1.0 - frac)


def _jj_term_bound(nu: float, q: float, csc_bound: float, m_meas: float) -> float:
    """Certified sup bound of the (1+i cot) J J kernel term at order nu."""
    # |S_nu(z)| <= e^{|z|^2/4}/Gamma(nu+1); (|lam|^2 r rt / 4)^nu <= q^nu
    rg = sf.recip_gamma(nu + 1.0)
    return 0.5 * math.pi * m_meas * csc_bound * q ** nu * math.exp(2.0 * q) * rg * rg


def _a0_term_bound(nu: float, q: float, csc_bound: float, rho: float,
                   m_meas: float) -> float:
    """Certified sup bound of the csc J J_- kernel term at order nu and ratio rho."""
    s_small = math.exp(q) * sf.recip_gamma(nu + 1.0)
    acc = 0.0
    term_pow = 1.0
    for k in range(0, 400):
        if k > 0:
            term_pow *= q / k
        # |csc(pi nu) / Gamma(k+1-nu)|; reflection keeps this finite
        x = k + 1.0 - nu
        if x > 0:
            c = csc_bound / sf.gamma_fn(x)
        else:
            c = sf.gamma_fn(nu - k) / math.pi
        contrib = term_pow * c
        acc += contrib
        if k > nu and contrib < 1e-22 * acc:
            break
    return 0.5 * math.pi * m_meas * (rho ** nu) * s_small * acc


def truncation_bound(beta: float, L: int, M: float, lambda0: float,
                     rho: float | None = None) -> float:
    """Certified bound on the summed kernel tail over modes |l| > L.

    ``rho`` is the off-diagonal radius ratio r_< / r_> < 1 needed to sum
    the J*J_- part; it must be supplied by the caller.  At coincident radii
    (rho >= 1) no pointwise summable majorant exists and DiagonalError is
    raised.
    """
    if L < 2:
        raise ValidationError("truncation_bound requires L >= 2")
    if rho is None or rho >= 1.0:
        raise DiagonalError(
            "tail bound at coincident radii is not summable; supply rho < 1"
        )
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    delta = _order_gap(beta)
    if delta <= 0.0:
        raise DomainError("truncation_bound requires non-integer beta")
    csc_bound = 1.0 / math.sin(math.pi * delta)
    q = (lambda0 * M / 2.0) ** 2
    total = 0.0
    prev = None
    for step in range(1, 4000):
        piece = 0.0
        for l in (L + step, -(L + step)):
            nu = nu_of(beta, l)
            piece += _jj_term_bound(nu, q, csc_bound, M)
            piece += _a0_term_bound(nu, q, csc_bound, rho, M)
        total += piece
        if prev is not None and piece < 1e-3 * total:
            ratio = piece / prev
            if ratio < 0.9:
                total += piece * ratio / (1.0 - ratio)
                return total
        prev = piece
    ratio = piece / prev if prev else 1.0
    if ratio < 1.0:
        return total + piece * ratio / (1.0 - ratio)
    raise NumericalError("truncation bound majorant did not converge")


def _drop_bound(beta: float, l: int, lam: complex, m_meas: float) -> float:
    """Sup bound of the dropped mode's kernel (valid at coincident radii)."""
    nu = nu_of(beta, l)
    delta = _order_gap(beta)
    csc_bound = 1.0 / math.sin(math.pi * delta)
    q = (abs(lam) * m_meas / 2.0) ** 2
    return _jj_term_bound(nu, q, csc_bound, m_meas) + _a0_term_bound(
        nu, q, csc_bound, 1.0, m_meas
    )


# ---------------------------------------------------------------------------
# applying the resolvent
# ---------------------------------------------------------------------------

def apply_resolvent(
    beta: float,
    lam: complex,
    f: PolarFunction,
    L: int = DEFAULT_MODES,
    eps: float = 1e-10,
) -> PolarFunction:
    """Apply the single-pole resolvent mode by mode on the stored grid.

    Modes with |l| > L are dropped only when their certified kernel bound
    times the mode mass stays below ``eps``; otherwise TruncationError.
    """
    if abs(lam) * f.grid.r_max > 20.0:
        raise DomainError("|lambda| * r_max must stay <= 20 for the resolvent")
    dropped = [l for l in f.modes if abs(l) > L]
    if dropped:
        w = f.grid.weights * f.grid.nodes
        tail = 0.0
        for l in dropped:
            mass = float(np.sum(w * np.abs(f.modes[l])))
            tail += _drop_bound(beta, l, lam, f.grid.r_max) * mass
        if tail > eps:
            raise TruncationError(
                f"certified tail {tail:.3e} exceeds eps={eps:.3e} at L={L}"
            )
    out = {}
    for l in sorted(k for k in f.modes if abs(k) <= L):
        out[l] = mode_matrix(beta, l, lam, f.grid) @ f.modes[l]
    return PolarFunction(grid=f.grid, modes=out)


def apply_r00(beta: float, f: PolarFunction, L: int = DEFAULT_MODES) -> PolarFunction:
    out = {}
    for l in sorted(k for k in f.modes if abs(k) <= L):
        out[l] = r00_mode_matrix(beta, l, f.grid) @ f.modes[l]
    return PolarFunction(grid=f.grid, modes=out)


# ---------------------------------------------------------------------------
# pointwise Green functions (for probing and exponent extraction)
# ---------------------------------------------------------------------------

def _polar(p) -> tuple[float, float]:
    p = np.asarray(p, dtype=float)
    return float(np.hypot(p[0], p[1])), float(math.atan2(p[1], p[0]))


def greens_value(beta: float, lam: complex, p, q, L: int = DEFAULT_MODES,
                 eps: float = 1e-14) -> complex:
    """Pointwise resolvent kernel G_lambda(p, q) summed over modes |l| <= L."""
    rp, thp = _polar(p)
    rq, thq = _polar(q)
    acc = 0.0j
    for l in range(-L, L + 1):
        acc += (
            np.exp(1j * l * (thp - thq))
            * kernel(beta, l, lam, rp, rq, eps)
            / rq
        )
    return complex(acc / (2.0 * math.pi))


def greens_zero(beta: float, p, q, L: int = DEFAULT_MODES) -> float:
    rp, thp = _polar(p)
    rq, thq = _polar(q)
    acc = 0.0j
    for l in range(-L, L + 1):
        acc += np.exp(1j * l * (thp - thq)) * r00_kernel(beta, l, rp, rq) / rq
    return complex(acc / (2.0 * math.pi)).real


def greens_delta(beta: float, s: float, p, q, L: int = DEFAULT_MODES,
                 eps: float = 1e-14) -> complex:
    """G_{i s}(p, q) - G_0(p, q) with per-mode subtraction (lambda = i s)."""
    rp, thp = _polar(p)
    rq, thq = _polar(q)
    if abs(rp - rq) < 1e-12:
        raise DiagonalError("probe pair radii coincide; mode tail not certified")
    lam = 1j * s
    acc = 0.0j
    for l in range(-L, L + 1):
        diff = kernel(beta, l, lam, rp, rq, eps) - r00_kernel(beta, l, rp, rq)
        acc += np.exp(1j * l * (thp - thq)) * diff / rq
    return complex(acc / (2.0 * math.pi))
