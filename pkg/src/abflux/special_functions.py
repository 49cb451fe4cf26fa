"""Real-order Bessel/Hankel functions in the small-argument series regime.

Everything here is a power series around z = 0, certified for |z| <= 30.
That is the only regime the partial-wave kernels need (lambda*r stays in a
compact set near zero), so no asymptotic expansions are provided.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DomainError, NearIntegerOrderError

SERIES_RADIUS = 30.0
MAX_TERMS = 200

# Lanczos approximation, g = 7, 9 coefficients.  Relative error below
# 1e-14 on the positive real axis, comfortably inside the 1e-13 contract.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0."""
    if not x > 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the Lanczos sum in its accurate range
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def recip_gamma(x: float) -> float:
    """1 / Gamma(x) for any real x (zero at non-positive integers)."""
    if x > 0.0:
        return 1.0 / gamma_fn(x)
    if x == math.floor(x):
        return 0.0
    # 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi for non-integer x <= 0
    return gamma_fn(1.0 - x) * math.sin(math.pi * x) / math.pi


def _fresh_term(nu: float, k: int, q: complex):
    """(q^k / k!) / Gamma(nu+k+1), computed without the term recurrence."""
    if q == 0:
        return 0.0 * q if k > 0 else recip_gamma(nu + 1.0)
    logqk = k * np.log(complex(q)) - math.lgamma(k + 1.0)
    return complex(np.exp(logqk)) * recip_gamma(nu + k + 1.0)


def _series_sum(nu: float, z2: complex, eps: float) -> complex:
    """sum_k (-z^2/4)^k / (k! Gamma(nu+k+1)) with compensated accumulation.

    Stops once |term| < eps*|partial| holds for 3 consecutive terms.
    """
    q = -z2 / 4.0
    term: complex = recip_gamma(nu + 1.0)
    total: complex = 0.0
    comp: complex = 0.0  # Kahan compensation
    small_run = 0
    for k in range(MAX_TERMS):
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        # next term; the recurrence only breaks when Gamma(nu+k+1) sits at a
        # pole, which needs a fresh start from the explicit formula
        nxt = nu + k + 1.0
        if nxt <= 0.0 and abs(nxt - round(nxt)) < 1e-14:
            term = _fresh_term(nu, k + 1, q)
        else:
            term = term * q / ((k + 1) * nxt)
        if abs(term) < eps * max(abs(total), 1e-300):
            small_run += 1
            if small_run >= 3:
                return total
        else:
            small_run = 0
    raise ConvergenceError(
        f"Bessel series did not converge in {MAX_TERMS} terms (nu={nu}, |z|={abs(z2) ** 0.5:.3g})"
    )


def _check_z(z: complex, eps: float) -> None:
    if eps < 1e-15:
        raise DomainError(f"eps must be >= 1e-15, got {eps}")
    if abs(z) > SERIES_RADIUS:
        raise DomainError(
            f"|z| = {abs(z):.4g} outside certified series radius {SERIES_RADIUS}"
        )


def scaled_j(nu: float, z: complex, eps: float = 1e-15) -> complex:
    """J_nu(z) / (z/2)^nu: entire and even in z, equal to 1/Gamma(nu+1) at 0."""
    if nu < 0.0:
        raise DomainError(f"scaled_j requires nu >= 0, got {nu}")
    _check_z(z, eps)
    return _series_sum(nu, complex(z) * complex(z), eps)


def _scaled_j_any(nu: float, z: complex, eps: float = 1e-15) -> complex:
    # internal: negative non-integer orders allowed (used by hankel1)
    _check_z(z, eps)
    return _series_sum(nu, complex(z) * complex(z), eps)


def _half_power(nu: float, z: complex) -> complex:
    """(z/2)^nu on the principal branch."""
    if z == 0:
        if nu == 0.0:
            return 1.0
        return 0.0 if nu > 0 else complex(math.inf)
    zc = complex(z)
    return complex(np.exp(nu * (np.log(zc) - math.log(2.0))))


def bessel_j(nu: float, z: complex, eps: float = 1e-15) -> complex:
    """Bessel J of real order nu >= 0 by its defining power series."""
    if nu < 0.0:
        raise DomainError(f"bessel_j requires nu >= 0, got {nu}")
    _check_z(z, eps)
    if z == 0:
        return 1.0 + 0.0j if nu == 0.0 else 0.0 + 0.0j
    return _half_power(nu, z) * _series_sum(nu, complex(z) * complex(z), eps)


def _bessel_j_signed(nu: float, z: complex, eps: float = 1e-15) -> complex:
    """J_nu for any real non-negative-integer-safe order (internal)."""
    _check_z(z, eps)
    if z == 0:
        if nu == 0.0:
            return 1.0 + 0.0j
        return 0.0 + 0.0j if nu > 0 else complex(math.inf)
    return _half_power(nu, z) * _series_sum(nu, complex(z) * complex(z), eps)


def distance_to_integers(nu: float) -> float:
    return abs(nu - round(nu))


def hankel1(nu: float, z: complex, eps: float = 1e-15) -> complex:
    """H^(1)_nu(z) = (1 + i cot(nu pi)) J_nu(z) - i csc(nu pi) J_-nu(z).

    Only defined here for non-integer order; the combination degenerates
    as nu approaches an integer and is rejected rather than regularized.
    """
    if distance_to_integers(nu) <= 1e-8:
        raise NearIntegerOrderError(f"order {nu} is within 1e-8 of an integer")
    if z == 0:
        raise DomainError("hankel1 undefined at z = 0")
    _check_z(z, eps)
    cot = 1.0 / math.tan(nu * math.pi)
    csc = 1.0 / math.sin(nu * math.pi)
    jp = _bessel_j_signed(nu, z, eps)
    jm = _bessel_j_signed(-nu, z, eps)
    return (1.0 + 1j * cot) * jp - 1j * csc * jm


# ---------------------------------------------------------------------------
# vectorized series evaluation (internal plumbing for the kernel assembly)
# ---------------------------------------------------------------------------

def scaled_series_array(nu: float, z2: np.ndarray, eps: float = 1e-15,
                        max_terms: int = MAX_TERMS) -> np.ndarray:
    """Vectorized sum_k (-z2/4)^k / (k! Gamma(nu+k+1)) over an array of z^2."""
    z2 = np.asarray(z2)
    if not np.issubdtype(z2.dtype, np.complexfloating):
        z2 = z2.astype(np.float64)
    if z2.size and np.max(np.abs(z2)) > SERIES_RADIUS ** 2 * (1 + 1e-12):
        raise DomainError("argument outside certified series radius")
    q = -z2 / 4.0
    term = np.full(z2.shape, recip_gamma(nu + 1.0), dtype=q.dtype)
    total = np.zeros_like(term)
    small_run = 0
    for k in range(max_terms):
        total = total + term
        nxt = nu + k + 1.0
        if nxt <= 0.0 and abs(nxt - round(nxt)) < 1e-14:
            rg = recip_gamma(nu + k + 2.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                logqk = (k + 1) * np.log(q.astype(np.complex128)) - math.lgamma(k + 2.0)
                fresh = np.exp(logqk) * rg
            fresh = np.where(q == 0, 0.0, fresh)
            term = fresh if np.iscomplexobj(term) else fresh.real
        else:
            term = term * (q / ((k + 1) * nxt))
        if float(np.max(np.abs(term))) < eps * max(float(np.max(np.abs(total))), 1e-300):
            small_run += 1
            if small_run >= 3:
                return total
        else:
            small_run = 0
    raise ConvergenceError(f"vectorized Bessel series did not converge (nu={nu})")
