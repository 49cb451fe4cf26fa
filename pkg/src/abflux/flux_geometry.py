"""Pole/flux configurations, branch-cut geometry, and the gauge phase.

A configuration is a list of flux-carrying poles in the plane.  The first
pole is the base pole and is translated to the origin on construction.
The cut set is the union of the closed segments joining the base pole to
every other pole; the gauge phase function is a line integral of the
vector potential along cut-avoiding polylines.

Conventions
-----------
* ``A0(x, y) = (-y, x) / (x^2 + y^2)``, the unit-flux vortex field.
* Angles and windings are positive counterclockwise.
* All tolerances are absolute and assume configurations of O(1) diameter;
  geometric predicates use 1e-12 after scale normalization, point queries
  use 1e-9.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import (
    AtPoleError,
    IntegerFluxError,
    NotOnCutError,
    OnCutError,
    PathConstructionError,
    PoleOnLoopError,
    ValidationError,
)

INTEGER_FLUX_TOL = 1e-12
GEOM_TOL = 1e-9
MAX_SHEET_DENOMINATOR = 64


@dataclass(frozen=True)
class Pole:
    """A flux-carrying pole: position in the plane and flux alpha."""

    position: tuple[float, float]
    flux: float

    def __post_init__(self):
        if abs(self.flux - round(self.flux)) <= INTEGER_FLUX_TOL:
            raise ValidationError(
                f"pole flux {self.flux} is an integer within {INTEGER_FLUX_TOL}"
            )

    @property
    def xy(self) -> np.ndarray:
        return np.array(self.position, dtype=float)

    @classmethod
    def unchecked(cls, position, flux) -> "Pole":
        """Bypass the non-integer flux invariant (testing only)."""
        p = object.__new__(cls)
        object.__setattr__(p, "position", (float(position[0]), float(position[1])))
        object.__setattr__(p, "flux", float(flux))
        return p


def _make_pole_unchecked(position, flux) -> Pole:
    return Pole.unchecked(position, flux)


class FluxClass(enum.Enum):
    INTEGER = "integer"
    HALF_ODD_INTEGER = "half_odd_integer"
    RATIONAL_Q = "rational_q"
    IRRATIONAL = "irrational"


@dataclass(frozen=True)
class Configuration:
    """Poles plus derived cut geometry; immutable after construction.

    Positions are normalized so the base pole sits at the origin.
    """

    poles: tuple[Pole, ...]

    def __init__(self, poles: Sequence[Pole], allow_integer_flux: bool = False):
        if len(poles) == 0:
            raise ValidationError("configuration needs at least one pole")
        base = np.asarray(poles[0].position, dtype=float)
        normalized = []
        for p in poles:
            pos = np.asarray(p.position, dtype=float) - base
            if allow_integer_flux:
                normalized.append(_make_pole_unchecked(tuple(pos), p.flux))
            else:
                normalized.append(Pole(tuple(pos), p.flux))
        pts = np.array([p.position for p in normalized])
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if np.hypot(*(pts[i] - pts[j])) <= GEOM_TOL:
                    raise ValidationError(
                        f"poles {i} and {j} are closer than {GEOM_TOL}"
                    )
        object.__setattr__(self, "poles", tuple(normalized))

    @classmethod
    def from_text(cls, text: str, **kwargs) -> "Configuration":
        """Parse the `x y alpha` line format (one pole per line, # comments)."""
        poles = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(
                    f"config line {lineno}: expected 'x y alpha', got {raw!r}"
                )
            try:
                x, y, a = (float(v) for v in parts)
            except ValueError as exc:
                raise ValidationError(f"config line {lineno}: {exc}") from exc
            poles.append(Pole((x, y), a))
        return cls(poles, **kwargs)

    @classmethod
    def from_file(cls, path, **kwargs) -> "Configuration":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read(), **kwargs)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.poles])

    @property
    def fluxes(self) -> np.ndarray:
        return np.array([p.flux for p in self.poles])

    @property
    def segments(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Closed cut segments from the base pole to every other pole."""
        origin = np.zeros(2)
        return [(origin, p.xy) for p in self.poles[1:]]

    def radius(self) -> float:
        return float(np.max(np.hypot(*self.positions.T))) if len(self.poles) else 0.0

    def distance_to_cut(self, point) -> float:
        point = np.asarray(point, dtype=float)
        segs = self.segments
        if not segs:
            return math.inf
        return min(_point_segment_distance(point, a, b) for a, b in segs)

    def distance_to_poles(self, point) -> float:
        point = np.asarray(point, dtype=float)
        return float(np.min(np.hypot(*(self.positions - point).T)))

    def fingerprint(self) -> str:
        import hashlib

        payload = ";".join(
            f"{p.position[0]:.17g},{p.position[1]:.17g},{p.flux:.17g}"
            for p in self.poles
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FluxSummary:
    beta: float
    mu_m: float | None
    mu_M: float | None
    flux_class: FluxClass
    alpha_tilde: dict = field(default_factory=dict)
    denominator: int | None = None


# ---------------------------------------------------------------------------
# scalar flux bookkeeping
# ---------------------------------------------------------------------------

def total_flux(cfg: Configuration) -> float:
    return float(math.fsum(p.flux for p in cfg.poles))


def mu_pair(beta: float) -> tuple[float, float]:
    """(mu_m, mu_M) = sorted (beta - floor(beta), 1 + floor(beta) - beta)."""
    if abs(beta - round(beta)) <= INTEGER_FLUX_TOL:
        raise IntegerFluxError(f"mu_pair undefined for integer flux {beta}")
    fl = math.floor(beta)
    a = beta - fl
    b = 1.0 + fl - beta
    return (min(a, b), max(a, b))


def riemann_sheet_count(beta: float, denom_tolerance: float = 1e-9):
    """Minimal q <= 64 with |beta - p/q| <= tol; 1 for integers, inf otherwise."""
    if abs(beta - round(beta)) <= INTEGER_FLUX_TOL:
        return 1
    frac = Fraction(beta).limit_denominator(MAX_SHEET_DENOMINATOR)
    if abs(beta - float(frac)) <= denom_tolerance:
        return frac.denominator
    return math.inf


def classify_flux(beta: float, denom_tolerance: float = 1e-9) -> tuple[FluxClass, int | None]:
    if abs(beta - round(beta)) <= INTEGER_FLUX_TOL:
        return FluxClass.INTEGER, 1
    if abs(2.0 * beta - round(2.0 * beta)) <= 2 * INTEGER_FLUX_TOL:
        return FluxClass.HALF_ODD_INTEGER, 2
    q = riemann_sheet_count(beta, denom_tolerance)
    if q is not math.inf:
        return FluxClass.RATIONAL_Q, int(q)
    return FluxClass.IRRATIONAL, None


def summarize(cfg: Configuration, denom_tolerance: float = 1e-9) -> FluxSummary:
    beta = total_flux(cfg)
    cls, q = classify_flux(beta, denom_tolerance)
    if cls is FluxClass.INTEGER:
        mm, mM = None, None
    else:
        mm, mM = mu_pair(beta)
    return FluxSummary(
        beta=beta,
        mu_m=mm,
        mu_M=mM,
        flux_class=cls,
        alpha_tilde=cut_alpha_map(cfg),
        denominator=q,
    )


# ---------------------------------------------------------------------------
# cut geometry
# ---------------------------------------------------------------------------

def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    return float(np.hypot(*(p - (a + t * ab))))


def _segment_segment_distance(p1, p2, q1, q2) -> float:
    """Minimal distance between two closed segments."""
    d1 = p2 - p1
    d2 = q2 - q1
    r = p1 - q1
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    if a <= 1e-30 and e <= 1e-30:
        return float(np.hypot(*r))
    if a <= 1e-30:
        s, t = 0.0, min(1.0, max(0.0, f / e))
    else:
        c = d1 @ r
        if e <= 1e-30:
            t, s = 0.0, min(1.0, max(0.0, -c / a))
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > 1e-30 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    closest1 = p1 + s * d1
    closest2 = q1 + t * d2
    return float(np.hypot(*(closest1 - closest2)))


def colinearity_check(cfg: Configuration, tol: float = 1e-12) -> bool:
    """True iff no three poles are colinear (normalized triangle-area test)."""
    pts = cfg.positions
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                u = pts[j] - pts[i]
                v = pts[k] - pts[i]
                area2 = abs(u[0] * v[1] - u[1] * v[0])
                scale = np.hypot(*u) * np.hypot(*v)
                if scale == 0.0 or area2 <= tol * scale:
                    return False
    return True


def tilde_alpha(cfg: Configuration, z, tol: float = GEOM_TOL) -> float:
    """Sum of alpha_j over poles whose cut segment strictly contains z."""
    z = np.asarray(z, dtype=float)
    if cfg.distance_to_poles(z) <= tol:
        raise AtPoleError(f"point {tuple(z)} is within {tol} of a pole")
    total = 0.0
    on_cut = False
    for pole in cfg.poles[1:]:
        s = pole.xy
        L = np.hypot(*s)
        # distance from z to the open segment (0, s) and arclength position
        cross = abs(z[0] * s[1] - z[1] * s[0]) / L
        t = float(z @ s) / (L * L)
        if cross <= tol and -tol <= t <= 1.0 + tol:
            on_cut = True
            if tol / L < t < 1.0 - tol / L:
                total += pole.flux
    if not on_cut:
        raise NotOnCutError(f"point {tuple(z)} is not on the cut set")
    return total


def cut_alpha_map(cfg: Configuration, tol: float = GEOM_TOL) -> dict:
    """Map each maximal cut sub-interval to its alpha-tilde value.

    Sub-intervals arise where segments overlap (colinear poles); breakpoints
    on each segment are the poles lying strictly inside it, sorted by
    distance from the base pole with ties broken by pole index.
    """
    out: dict[tuple[tuple[float, float], tuple[float, float]], float] = {}
    pts = cfg.positions
    for k, pole in enumerate(cfg.poles[1:], start=1):
        s = pole.xy
        L = np.hypot(*s)
        cut_ts = [0.0, 1.0]
        interior = []
        for j in range(1, len(cfg.poles)):
            if j == k:
                continue
            p = pts[j]
            cross = abs(p[0] * s[1] - p[1] * s[0]) / L
            t = float(p @ s) / (L * L)
            if cross <= tol and tol / L < t < 1.0 - tol / L:
                interior.append((t, j))
        interior.sort()
        cut_ts = [0.0] + [t for t, _ in interior] + [1.0]
        for a, b in zip(cut_ts[:-1], cut_ts[1:]):
            mid = 0.5 * (a + b) * s
            key = (
                tuple(np.round(a * s, 12)),
                tuple(np.round(b * s, 12)),
            )
            if key not in out:
                out[key] = tilde_alpha(cfg, mid, tol=tol)
    return out


# ---------------------------------------------------------------------------
# vector potential and phase function
# ---------------------------------------------------------------------------

def vector_potential(cfg: Configuration, point, relative: bool = False) -> np.ndarray:
    """A(point) = sum_k alpha_k A0(point - s_k), optionally minus beta*A0(point)."""
    point = np.asarray(point, dtype=float)
    out = np.zeros(2)
    for pole in cfg.poles:
        d = point - pole.xy
        r2 = float(d @ d)
        out += pole.flux * np.array([-d[1], d[0]]) / r2
    if relative:
        beta = total_flux(cfg)
        r2 = float(point @ point)
        out -= beta * np.array([-point[1], point[0]]) / r2
    return out


def base_point(cfg: Configuration) -> np.ndarray:
    """Fixed phase base point: pole centroid raised above the configuration.

    Nudged upward further in the rare case the first choice lands on a cut.
    """
    centroid = cfg.positions.mean(axis=0)
    r = cfg.radius()
    candidate = centroid + np.array([0.0, 1.0 + r])
    for _ in range(8):
        if cfg.distance_to_cut(candidate) > 100 * GEOM_TOL:
            return candidate
        candidate = candidate + np.array([0.0, 1.0 + r])
    raise PathConstructionError("could not place a base point off the cut set")


def _leg_integral(cfg, p, q, relative, quad_eps):
    d = q - p

    def integrand(t):
        a = vector_potential(cfg, p + t * d, relative=relative)
        return a[0] * d[0] + a[1] * d[1]

    val, _ = quad(integrand, 0.0, 1.0, epsabs=quad_eps, epsrel=quad_eps, limit=200)
    return val


def polyline_avoids_cuts(cfg: Configuration, points, tol: float = GEOM_TOL) -> bool:
    """True iff every leg of the polyline stays `tol` away from the cut set."""
    pts = [np.asarray(p, dtype=float) for p in points]
    return _polyline_clears_cut(cfg, pts, tol)


def _polyline_clears_cut(cfg, pts, tol, pole_margin: float | None = None) -> bool:
    for a, b in zip(pts[:-1], pts[1:]):
        for s0, s1 in cfg.segments:
            if _segment_segment_distance(a, b, s0, s1) <= tol:
                return False
        if pole_margin is not None:
            for pole in cfg.poles:
                if _point_segment_distance(pole.xy, a, b) <= pole_margin:
                    return False
    return True


def _arc_points(radius, th0, th1, max_step=0.05):
    n = max(2, int(math.ceil(abs(th1 - th0) / max_step)) + 1)
    ths = np.linspace(th0, th1, n)
    return [radius * np.array([math.cos(t), math.sin(t)]) for t in ths]


def _escape_route(cfg, point, r_big, tol):
    """Polyline from `point` out to the circle of radius r_big, avoiding cuts.

    Legs are additionally kept a healthy margin away from the poles
    themselves (where the potential is singular) so the quadrature stays
    well conditioned.
    """
    r = float(np.hypot(*point))
    if r < tol:
        raise PathConstructionError("cannot route from the base pole")
    margin = min(
        1e-3 * (1.0 + cfg.radius()),
        0.45 * _min_pole_gap(cfg),
        0.5 * cfg.distance_to_poles(point),
    )
    th = math.atan2(point[1], point[0])
    for dth in (0.0, 0.05, -0.05, 0.1, -0.1, 0.2, -0.2, 0.4, -0.4, 0.8, -0.8,
                1.6, -1.6, 2.4, -2.4, math.pi):
        pts = [np.asarray(point, dtype=float)]
        if dth != 0.0:
            pts.extend(_arc_points(r, th, th + dth)[1:])
        th2 = th + dth
        pts.append(r_big * np.array([math.cos(th2), math.sin(th2)]))
        if _polyline_clears_cut(cfg, pts, tol, pole_margin=margin):
            return pts, th2
    raise PathConstructionError(f"no cut-avoiding escape route from {tuple(point)}")


def _min_pole_gap(cfg) -> float:
    pts = cfg.positions
    if len(pts) < 2:
        return math.inf
    gaps = [
        float(np.hypot(*(pts[i] - pts[j])))
        for i in range(len(pts))
        for j in range(i + 1, len(pts))
    ]
    return min(gaps)


def _auto_route(cfg, start, end, tol):
    r_big = 2.0 * (max(cfg.radius(), float(np.hypot(*start)), float(np.hypot(*end))) + 1.0)
    a_pts, a_th = _escape_route(cfg, start, r_big, tol)
    b_pts, b_th = _escape_route(cfg, end, r_big, tol)
    dth = b_th - a_th
    while dth > math.pi:
        dth -= 2.0 * math.pi
    while dth < -math.pi:
        dth += 2.0 * math.pi
    arc = _arc_points(r_big, a_th, a_th + dth)
    return a_pts + arc[1:] + b_pts[-2::-1]


def phase(
    cfg: Configuration,
    point,
    mode: str = "full_A",
    via: Iterable | None = None,
    quad_eps: float = 1e-11,
    tol: float = GEOM_TOL,
) -> complex:
    """e^{i f(point)} with f the line integral of the vector potential.

    ``mode`` selects the integrand: "full_A" integrates A itself (the phase
    is path-independent for integer total flux), "relative_to_beta_A0"
    integrates A - beta*A0 (path-independent for every flux).  ``via``
    optionally forces the polyline through explicit waypoints.
    """
    if mode not in ("full_A", "relative_to_beta_A0"):
        raise ValidationError(f"unknown phase mode {mode!r}")
    point = np.asarray(point, dtype=float)
    if cfg.distance_to_cut(point) <= tol:
        raise OnCutError(f"point {tuple(point)} lies on the cut set")
    relative = mode == "relative_to_beta_A0"
    start = base_point(cfg)
    if via is not None:
        # explicit waypoints may cross cuts (the result then picks up the
        # corresponding holonomy factors); they must stay off the poles
        # where the integrand is singular
        pts = [start] + [np.asarray(v, dtype=float) for v in via] + [point]
        for a, b in zip(pts[:-1], pts[1:]):
            for pole in cfg.poles:
                if _point_segment_distance(pole.xy, a, b) <= tol:
                    raise PathConstructionError(
                        f"waypoint leg passes through the pole at {pole.position}"
                    )
    else:
        if float(np.hypot(*(point - start))) < tol:
            return 1.0 + 0.0j
        pts = _auto_route(cfg, start, point, tol)
    f = math.fsum(
        _leg_integral(cfg, a, b, relative, quad_eps) for a, b in zip(pts[:-1], pts[1:])
    )
    return complex(np.exp(1j * f))


def holonomy(cfg: Configuration, loop, tol: float = GEOM_TOL) -> complex:
    """exp(2*pi*i * sum_k alpha_k w_k) for a closed polyline loop.

    Winding numbers w_k are accumulated from the turning angles of the loop
    around each pole.
    """
    pts = [np.asarray(p, dtype=float) for p in loop]
    if float(np.hypot(*(pts[0] - pts[-1]))) > tol:
        pts.append(pts[0])
    total = 0.0
    for pole in cfg.poles:
        s = pole.xy
        for a, b in zip(pts[:-1], pts[1:]):
            if _point_segment_distance(s, a, b) <= tol:
                raise PoleOnLoopError(f"loop passes through pole at {tuple(s)}")
        acc = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            u = a - s
            v = b - s
            acc += math.atan2(u[0] * v[1] - u[1] * v[0], float(u @ v))
        w = round(acc / (2.0 * math.pi))
        total += pole.flux * w
    return complex(np.exp(2j * math.pi * total))
