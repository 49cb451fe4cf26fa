import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abflux import flux_geometry as fg
from abflux.errors import (
    AtPoleError,
    IntegerFluxError,
    NotOnCutError,
    OnCutError,
    PoleOnLoopError,
    ValidationError,
)

# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def brute_winding_integral(center, loop_pts, n_per_leg=4000):
    """Dense trapezoid of the unit vortex field along a polyline (oracle)."""
    total = 0.0
    for a, b in zip(loop_pts[:-1], loop_pts[1:]):
        ts = np.linspace(0.0, 1.0, n_per_leg)
        pts = a[None, :] + ts[:, None] * (b - a)[None, :]
        d = pts - np.asarray(center)[None, :]
        r2 = np.sum(d * d, axis=1)
        integrand = (-d[:, 1] * (b - a)[0] + d[:, 0] * (b - a)[1]) / r2
        total += np.trapezoid(integrand, ts)
    return total


def even_odd_winding(center, loop_pts):
    """Ray-crossing winding counter (independent of angle accumulation)."""
    x0, y0 = center
    w = 0
    for a, b in zip(loop_pts[:-1], loop_pts[1:]):
        if (a[1] <= y0 < b[1]) or (b[1] <= y0 < a[1]):
            t = (y0 - a[1]) / (b[1] - a[1])
            x_cross = a[0] + t * (b[0] - a[0])
            if x_cross > x0:
                w += 1 if b[1] > a[1] else -1
    return w


def circle(center, radius, n=48):
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = [np.array([center[0] + radius * math.cos(t), center[1] + radius * math.sin(t)]) for t in th]
    pts.append(pts[0])
    return pts


def two_pole_cfg(a1=0.25, a2=0.5, d=1.0):
    return fg.Configuration([fg.Pole((0.0, 0.0), a1), fg.Pole((d, 0.0), a2)])


def figure_ray_cfg():
    """Base pole plus colinear poles on a ray plus one off-ray pole."""
    return fg.Configuration(
        [
            fg.Pole((0.0, 0.0), 0.25),
            fg.Pole((0.0, 1.0), 0.4),     # pole 2 on its own segment
            fg.Pole((1.0, 0.0), 0.3),     # pole 3 at t=0.5 of pole-4 segment
            fg.Pole((2.0, 0.0), -0.35),   # pole 4 beyond pole 3 on the same ray
        ]
    )


# ---------------------------------------------------------------------------
# construction and bookkeeping
# ---------------------------------------------------------------------------

class TestConfiguration:
    def test_normalization_to_origin(self):
        cfg = fg.Configuration([fg.Pole((2.0, 3.0), 0.5), fg.Pole((3.0, 3.0), 0.25)])
        assert cfg.poles[0].position == (0.0, 0.0)
        assert cfg.poles[1].position == (1.0, 0.0)

    def test_integer_flux_rejected(self):
        with pytest.raises(ValidationError):
            fg.Pole((0.0, 0.0), 1.0)
        with pytest.raises(ValidationError):
            fg.Pole((0.0, 0.0), 2.0 + 5e-13)

    def test_integer_flux_bypass_for_tests(self):
        cfg = fg.Configuration(
            [fg.Pole((0.0, 0.0), 0.5), fg.Pole((1.0, 0.0), 0.5)],
        )
        assert fg.total_flux(cfg) == 1.0
        cfg2 = fg.Configuration(
            [fg.Pole((0.0, 0.0), 0.5)], allow_integer_flux=True
        )
        assert len(cfg2.poles) == 1

    def test_coincident_poles_rejected(self):
        with pytest.raises(ValidationError):
            fg.Configuration([fg.Pole((0.0, 0.0), 0.5), fg.Pole((0.0, 5e-10), 0.25)])

    def test_config_parsing(self):
        text = "# comment\n0 0 0.25\n1.0 0.0 0.5  # trailing\n\n"
        cfg = fg.Configuration.from_text(text)
        assert len(cfg.poles) == 2
        assert fg.total_flux(cfg) == 0.75

    def test_config_parse_errors(self):
        with pytest.raises(ValidationError):
            fg.Configuration.from_text("0 0\n")
        with pytest.raises(ValidationError):
            fg.Configuration.from_text("0 0 abc\n")


class TestScalars:
    def test_total_flux(self):
        assert fg.total_flux(two_pole_cfg(0.5, 0.5)) == 1.0
        assert fg.total_flux(two_pole_cfg(0.25, 0.5)) == 0.75
        assert fg.total_flux(two_pole_cfg(0.3, -0.3)) == 0.0

    def test_mu_pair(self):
        assert fg.mu_pair(0.25) == (0.25, 0.75)
        assert fg.mu_pair(0.75) == (0.25, 0.75)
        assert fg.mu_pair(-0.5) == (0.5, 0.5)

    def test_mu_pair_integer_rejected(self):
        with pytest.raises(IntegerFluxError):
            fg.mu_pair(2.0)

    @given(st.floats(min_value=-5.0, max_value=5.0))
    @settings(max_examples=60)
    def test_mu_pair_floor_shift_invariance(self, beta):
        if abs(beta - round(beta)) <= 1e-9:
            return
        assert fg.mu_pair(beta) == pytest.approx(fg.mu_pair(beta + 1.0), abs=1e-12)

    def test_mu_sum_and_order(self):
        for beta in (0.1, 0.25, 0.4, 0.49, 1.3, -0.7):
            mm, mM = fg.mu_pair(beta)
            assert mm + mM == pytest.approx(1.0, abs=1e-12)
            assert 0.0 < mm <= 0.5 <= mM < 1.0

    def test_riemann_sheet_count(self):
        assert fg.riemann_sheet_count(0.5) == 2
        assert fg.riemann_sheet_count(1.0) == 1
        assert fg.riemann_sheet_count(0.75) == 4
        assert fg.riemann_sheet_count(1.0 / 3.0) == 3
        assert fg.riemann_sheet_count(0.123456789, denom_tolerance=1e-9) == math.inf

    def test_classify_flux(self):
        assert fg.classify_flux(2.0)[0] is fg.FluxClass.INTEGER
        assert fg.classify_flux(1.5)[0] is fg.FluxClass.HALF_ODD_INTEGER
        assert fg.classify_flux(0.75) == (fg.FluxClass.RATIONAL_Q, 4)
        assert fg.classify_flux(math.sqrt(2) - 1)[0] is fg.FluxClass.IRRATIONAL

    def test_summarize(self):
        s = fg.summarize(two_pole_cfg(0.25, 0.5))
        assert s.beta == 0.75
        assert s.mu_m == 0.25
        assert s.mu_M == 0.75
        assert s.flux_class is fg.FluxClass.RATIONAL_Q
        assert s.denominator == 4

    def test_summarize_integer(self):
        s = fg.summarize(two_pole_cfg(0.5, 0.5))
        assert s.flux_class is fg.FluxClass.INTEGER
        assert s.mu_m is None and s.mu_M is None


class TestColinearity:
    def test_triangle(self):
        cfg = fg.Configuration(
            [fg.Pole((0, 0), 0.5), fg.Pole((1, 0), 0.25), fg.Pole((0, 1), 0.25)]
        )
        assert fg.colinearity_check(cfg) is True

    def test_exact_colinear(self):
        cfg = figure_ray_cfg()
        assert fg.colinearity_check(cfg) is False

    def test_two_poles_vacuous(self):
        assert fg.colinearity_check(two_pole_cfg()) is True


class TestTildeAlpha:
    def test_two_pole_interior(self):
        cfg = two_pole_cfg(0.25, 0.5)
        assert fg.tilde_alpha(cfg, (0.5, 0.0)) == pytest.approx(0.5)

    def test_overlapping_segments(self):
        cfg = figure_ray_cfg()
        # interior of the short colinear segment: both colinear poles enclose
        assert fg.tilde_alpha(cfg, (0.5, 0.0)) == pytest.approx(0.3 + (-0.35))
        # beyond the intermediate pole: only the far pole encloses
        assert fg.tilde_alpha(cfg, (1.5, 0.0)) == pytest.approx(-0.35)
        # the non-colinear segment keeps its own flux
        assert fg.tilde_alpha(cfg, (0.0, 0.5)) == pytest.approx(0.4)

    def test_off_cut(self):
        with pytest.raises(NotOnCutError):
            fg.tilde_alpha(two_pole_cfg(), (0.5, 0.5))

    def test_at_pole(self):
        with pytest.raises(AtPoleError):
            fg.tilde_alpha(figure_ray_cfg(), (1.0, 1e-12))

    def test_cut_alpha_map(self):
        amap = fg.cut_alpha_map(figure_ray_cfg())
        vals = sorted(amap.values())
        assert vals == pytest.approx(sorted([0.4, 0.3 - 0.35, -0.35]))
        assert len(amap) == 3


# ---------------------------------------------------------------------------
# phase and holonomy
# ---------------------------------------------------------------------------

class TestPhase:
    def test_single_pole_relative_is_one(self):
        cfg = fg.Configuration([fg.Pole((0.0, 0.0), 0.5)])
        for pt in [(1.0, 0.3), (-0.7, 0.4), (0.2, -1.1)]:
            assert fg.phase(cfg, pt, mode="relative_to_beta_A0") == pytest.approx(
                1.0 + 0.0j, abs=1e-9
            )

    def test_base_point_phase_is_one(self):
        cfg = two_pole_cfg()
        assert fg.phase(cfg, fg.base_point(cfg), mode="full_A") == pytest.approx(
            1.0, abs=1e-12
        )

    def test_on_cut_rejected(self):
        with pytest.raises(OnCutError):
            fg.phase(two_pole_cfg(), (0.5, 0.0))

    def test_winding_multiplies_holonomy_factor(self):
        # loop around the second pole changes full_A phase by e^{2 pi i a2};
        # oracle: brute-force winding integral of the vortex field
        cfg = two_pole_cfg(0.25, 0.5)
        target = np.array([1.6, 0.0])
        direct = fg.phase(cfg, target, mode="full_A")
        ring = circle((1.0, 0.0), 0.35, n=24)[:-1]
        start_idx = int(np.argmin([np.hypot(*(p - target)) for p in ring]))
        loop_via = ring[start_idx:] + ring[:start_idx] + [ring[start_idx]]
        via = [target] + loop_via + [target]
        winded = fg.phase(cfg, target, mode="full_A", via=via)
        got_factor = winded / direct
        brute = brute_winding_integral(
            (1.0, 0.0), [np.asarray(p) for p in via[1:-1]] + [np.asarray(via[1])]
        )
        assert np.exp(0.5j * brute) == pytest.approx(np.exp(1j * math.pi), rel=1e-6)
        assert got_factor == pytest.approx(np.exp(2j * math.pi * 0.5), rel=1e-8)

    def test_path_independence_relative_mode(self, rng):
        cfg = two_pole_cfg(0.25, 0.5)
        target = np.array([0.4, -0.8])
        base = fg.base_point(cfg)
        vals = []
        for k in range(6):
            via = [np.array([rng.uniform(-3, 3), rng.uniform(-4, -2.5)])]
            if not fg.polyline_avoids_cuts(cfg, [base, via[0], target]):
                continue
            vals.append(fg.phase(cfg, target, mode="relative_to_beta_A0", via=via))
        assert len(vals) >= 2
        for v in vals[1:]:
            assert abs(v - vals[0]) <= 1e-9

    def test_path_independence_full_mode_integer_flux(self, rng):
        cfg = two_pole_cfg(0.5, 0.5)  # beta = 1
        target = np.array([0.4, -0.8])
        base_pt = fg.base_point(cfg)
        base = fg.phase(cfg, target, mode="full_A")
        for k in range(4):
            via = [np.array([rng.uniform(-3, 3), rng.uniform(-4, -2.5)])]
            if not fg.polyline_avoids_cuts(cfg, [base_pt, via[0], target]):
                continue
            v = fg.phase(cfg, target, mode="full_A", via=via)
            assert abs(v - base) <= 1e-9

    @staticmethod
    def _extrapolated_jump(cfg, z, mode):
        # quadratic extrapolation of the one-sided phase jump as eps -> 0
        eps_list = np.array([4e-4, 2e-4, 1e-4])
        phis = []
        for eps in eps_list:
            up = fg.phase(cfg, z + np.array([0.0, eps]), mode=mode)
            dn = fg.phase(cfg, z - np.array([0.0, eps]), mode=mode)
            phis.append(np.angle(up / dn))
        phis = np.unwrap(np.array(phis))
        coeff = np.polyfit(eps_list, phis, 2)
        return np.exp(1j * coeff[-1])

    def test_matching_condition(self):
        # one-sided limits across the cut differ by e^{2 pi i alpha_tilde}:
        # the comparison loop wraps the far portion of the segment, so the
        # jump is the same in both gauge modes
        cfg = two_pole_cfg(0.25, 0.5)
        z = np.array([0.5, 0.0])
        at = fg.tilde_alpha(cfg, z)
        jump = self._extrapolated_jump(cfg, z, "relative_to_beta_A0")
        assert abs(jump - np.exp(2j * math.pi * at)) <= 1e-8

    def test_matching_condition_full_mode(self):
        cfg = two_pole_cfg(0.5, 0.5)
        z = np.array([0.5, 0.0])
        at = fg.tilde_alpha(cfg, z)
        jump = self._extrapolated_jump(cfg, z, "full_A")
        assert abs(jump - np.exp(2j * math.pi * at)) <= 1e-8

    def test_matching_condition_overlapping_segments(self):
        cfg = figure_ray_cfg()
        for z, at in [
            (np.array([0.5, 0.0]), 0.3 - 0.35),
            (np.array([1.5, 0.0]), -0.35),
        ]:
            jump = self._extrapolated_jump(cfg, z, "relative_to_beta_A0")
            assert abs(jump - np.exp(2j * math.pi * at)) <= 1e-8


class TestHolonomy:
    def test_null_loop(self):
        cfg = two_pole_cfg(0.25, 0.5)
        assert fg.holonomy(cfg, circle((5.0, 5.0), 0.5)) == pytest.approx(1.0)

    def test_single_pole_half_flux(self):
        cfg = two_pole_cfg(0.25, 0.5)
        got = fg.holonomy(cfg, circle((1.0, 0.0), 0.4))
        brute = brute_winding_integral((1.0, 0.0), circle((1.0, 0.0), 0.4, n=96))
        assert brute == pytest.approx(2.0 * math.pi, rel=1e-5)
        assert got == pytest.approx(np.exp(1j * math.pi), rel=1e-12)
        assert got == pytest.approx(-1.0, rel=1e-12)

    def test_both_poles(self):
        cfg = two_pole_cfg(0.25, 0.5)
        got = fg.holonomy(cfg, circle((0.5, 0.0), 2.0))
        assert got == pytest.approx(np.exp(2j * math.pi * 0.75), rel=1e-12)

    def test_pole_on_loop(self):
        cfg = two_pole_cfg()
        square = [np.array(p, dtype=float) for p in [(0, -1), (1, 0), (0, 1), (-1, 0), (0, -1)]]
        with pytest.raises(PoleOnLoopError):
            fg.holonomy(cfg, square)

    def test_random_loops_against_even_odd_counter(self, rng):
        cfg = fg.Configuration(
            [fg.Pole((0, 0), 0.25), fg.Pole((1, 0), 0.5), fg.Pole((0.3, 0.9), -0.4)]
        )
        checked = 0
        for _ in range(100):
            n = int(rng.integers(3, 8))
            pts = [np.array([rng.uniform(-2, 3), rng.uniform(-2, 3)]) for _ in range(n)]
            pts.append(pts[0])
            try:
                got = fg.holonomy(cfg, pts)
            except PoleOnLoopError:
                continue
            expected = 0.0
            for pole in cfg.poles:
                expected += pole.flux * even_odd_winding(pole.position, pts)
            assert got == pytest.approx(np.exp(2j * math.pi * expected), abs=1e-9)
            checked += 1
        assert checked >= 80
