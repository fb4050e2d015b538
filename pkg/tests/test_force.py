import math

import numpy as np
import pytest

from casimir_oqs import (
    DomainError,
    EnvironmentSpec,
    ForceConfig,
    Geometry,
    MediumSpec,
    QuadratureError,
    QuadratureSettings,
    Route,
    ThermalState,
    force_closed,
    force_decomposed,
    force_lifshitz_T0,
    force_matsubara,
    force_semispace_real,
    permittivity,
)
from casimir_oqs import force as fm

from oracles import (
    continuity_solution,
    finite_slab_force_T0,
    finite_slab_force_matsubara,
    lossless_plasma_zero_mode,
    slab_field_quad,
)

TIGHT = QuadratureSettings(rel_tol=1e-10, abs_tol=1e-300)


def make(w0=1.0, wp=2.0, g0=0.2, alpha=1, cutoff="none", lam=5.0, d=1.0, a=1.0,
         T=0.0, quad=TIGHT):
    env = EnvironmentSpec(alpha=alpha, gamma0=g0, lambda_cut=lam, cutoff=cutoff)
    return ForceConfig(MediumSpec(w0, wp, env), Geometry(d, a), ThermalState(T), quad)


CONFIGS = [
    make(),
    make(T=0.5),
    make(w0=1.0, wp=3.0, g0=0.3, alpha=1, cutoff="gaussian", lam=4.0, d=0.4, a=1.3, T=0.2),
    make(w0=1.0, wp=1.5, g0=0.1, alpha=3, cutoff="lorentzian", lam=5.0, d=2.0, a=0.7, T=0.1),
    make(w0=0.0, wp=2.0, g0=0.1, d=0.5, a=1.0, T=0.3),
    make(w0=1.0, wp=2.5, g0=0.5, alpha=3, cutoff="gaussian", lam=3.0, d=1.0, a=2.0),
]
CONFIG_IDS = ["ohmic-T0", "ohmic-T", "gauss1", "lor3", "drude", "gauss3-T0"]


def k_samples(cfg, n=200):
    return np.geomspace(1e-3, 300, n) * max(cfg.medium.scale, 1.0)


class TestIntegrands:
    @pytest.mark.parametrize("cfg", CONFIGS, ids=CONFIG_IDS)
    def test_sum_rule_region_I(self, cfg):
        k = k_samples(cfg)
        lhs = fm.vacuum_integrand_I(cfg, k) + fm.langevin_integrand_I(cfg, k)
        np.testing.assert_allclose(lhs, fm.energy_density_integrand_I(cfg, k), rtol=1e-10)

    @pytest.mark.parametrize("cfg", CONFIGS, ids=CONFIG_IDS)
    def test_sum_rule_region_III(self, cfg):
        k = k_samples(cfg)
        lhs = fm.vacuum_integrand_III(cfg, k) + fm.langevin_integrand_III(cfg, k)
        np.testing.assert_allclose(lhs, fm.energy_density_integrand_III(cfg, k),
                                   rtol=1e-10)

    @pytest.mark.parametrize("cfg", CONFIGS, ids=CONFIG_IDS)
    def test_closed_form_identity(self, cfg):
        k = k_samples(cfg)
        a = fm.closed_integrand(cfg, k)
        b = fm.closed_integrand_difference_form(cfg, k)
        assert np.max(np.abs(a - b) / fm.energy_density_integrand_I(cfg, k)) < 1e-10

    @pytest.mark.parametrize("cfg", CONFIGS, ids=CONFIG_IDS)
    def test_vacuum_plus_langevin_is_closed(self, cfg):
        k = k_samples(cfg)
        total = (fm.vacuum_integrand(cfg, k) + fm.langevin_integrand_I(cfg, k)
                 - fm.langevin_integrand_III(cfg, k))
        scale = fm.energy_density_integrand_I(cfg, k)
        assert np.max(np.abs(total - fm.closed_integrand(cfg, k)) / scale) < 1e-10

    @pytest.mark.parametrize("cfg", CONFIGS[:4], ids=CONFIG_IDS[:4])
    def test_vacuum_against_mode_amplitudes(self, cfg):
        w = lambda k: k / math.tanh(k / (2 * cfg.thermal.temperature)) if cfg.thermal.temperature else k
        for k in (0.2, 1.1, 3.7, 12.0):
            R, A, B, C, D, E, F, T = continuity_solution(cfg.medium, cfg.geometry, k)
            ref_I = w(k) / (4 * math.pi) * (1 + abs(R) ** 2 + abs(T) ** 2)
            ref_III = w(k) / (2 * math.pi) * (abs(C) ** 2 + abs(D) ** 2)
            assert fm.vacuum_integrand_I(cfg, k) == pytest.approx(ref_I, rel=1e-11)
            assert fm.vacuum_integrand_III(cfg, k) == pytest.approx(ref_III, rel=1e-11)

    @pytest.mark.parametrize("cfg", CONFIGS[:4], ids=CONFIG_IDS[:4])
    def test_langevin_against_field_quadrature(self, cfg):
        d, a = cfg.geometry.thickness, cfg.geometry.gap
        T = cfg.thermal.temperature
        for k in (0.2, 1.1, 3.7):
            w = k / math.tanh(k / (2 * T)) if T else k
            n = complex(fm.refractive_index(cfg.medium, k))
            im_eps = complex(permittivity(cfg.medium, k)).imag
            R, A, B, C, D, E, F, Tr = continuity_solution(cfg.medium, cfg.geometry, k)
            s2 = slab_field_quad(A, B, k, n, -a / 2 - d, -a / 2)
            s4 = slab_field_quad(E, F, k, n, a / 2, a / 2 + d)
            ref_I = w / (2 * math.pi) * 0.5 * k * im_eps * (s2 + s4)
            ref_III = (w / (2 * math.pi) * k * im_eps
                       * (abs(C) ** 2 + abs(D) ** 2) / abs(Tr) ** 2 * s4)
            assert fm.langevin_integrand_I(cfg, k) == pytest.approx(ref_I, rel=1e-9)
            assert fm.langevin_integrand_III(cfg, k) == pytest.approx(ref_III, rel=1e-9)

    @pytest.mark.parametrize("cfg", CONFIGS, ids=CONFIG_IDS)
    def test_langevin_nonnegative(self, cfg):
        k = k_samples(cfg)
        assert np.all(fm.langevin_integrand_I(cfg, k) >= 0)
        assert np.all(fm.langevin_integrand_III(cfg, k) >= 0)

    def test_langevin_vanishes_without_loss(self):
        cfg = make(w0=0.0, g0=0.0, wp=2.0)
        k = k_samples(cfg)
        assert np.all(fm.langevin_integrand_I(cfg, k) == 0)
        assert np.all(fm.langevin_integrand_III(cfg, k) == 0)

    def test_large_k_vacuum_keeps_digits(self):
        # direct bracket 1+|R|^2+|T|^2-2(|C|^2+|D|^2) cancels to O(k^-4)
        cfg = make(T=0.0)
        k = np.array([200.0, 800.0])
        vac = fm.vacuum_integrand(cfg, k)
        lang = fm.langevin_integrand_I(cfg, k) - fm.langevin_integrand_III(cfg, k)
        closed = fm.closed_integrand(cfg, k)
        np.testing.assert_allclose(vac + lang, closed, rtol=1e-9)


class TestRoutes:
    @pytest.mark.parametrize("cfg", CONFIGS, ids=CONFIG_IDS)
    def test_decomposed_matches_closed(self, cfg):
        a = force_decomposed(cfg)
        b = force_closed(cfg)
        assert a.route is Route.DECOMPOSED and b.route is Route.CLOSED
        assert a.total == a.vacuum_part + a.langevin_part
        assert abs(a.total - b.total) <= 1e-6 * abs(b.total)
        assert b.total < 0

    @pytest.mark.parametrize("wp, ref", [
        (2.0, -0.004097880942562681),
        (5.0, -0.025957272624345964),
        (10.0, -0.053061523057556695),
    ])
    def test_closed_against_imaginary_axis_slabs(self, wp, ref):
        cfg = make(wp=wp)
        assert finite_slab_force_T0(cfg.medium, cfg.geometry) == pytest.approx(ref, rel=1e-12)
        res = force_closed(cfg)
        assert res.total == pytest.approx(ref, rel=1e-9)
        assert abs(res.total - ref) <= 10 * res.abs_error_estimate + 1e-14 * abs(ref)

    @pytest.mark.parametrize("cfg", [CONFIGS[1], CONFIGS[2], CONFIGS[3], CONFIGS[4]],
                             ids=["ohmic-T", "gauss1", "lor3", "drude"])
    def test_closed_against_matsubara_slabs(self, cfg):
        ref = finite_slab_force_matsubara(cfg.medium, cfg.geometry, cfg.thermal.temperature)
        res = force_closed(cfg)
        assert res.total == pytest.approx(ref, rel=1e-8)

    @pytest.mark.parametrize("wp, ref", [(2.0, -0.03265422775773556),
                                         (5.0, -0.06702994418605263)])
    def test_lossless_plasma(self, wp, ref):
        cfg = make(w0=0.0, g0=0.0, wp=wp)
        assert finite_slab_force_T0(cfg.medium, cfg.geometry) == pytest.approx(ref, rel=1e-12)
        dec = force_decomposed(cfg)
        assert dec.langevin_part == 0
        assert dec.total == pytest.approx(ref, rel=1e-6)
        assert force_closed(cfg).total == pytest.approx(ref, rel=1e-6)

    @pytest.mark.parametrize("wp", [1.0, 2.0, 5.0])
    def test_lossless_plasma_keeps_zero_mode(self, wp):
        # r(i xi)^2 -> 1 without loss: the real axis carries the j = 0 term,
        # which the j >= 1 Matsubara sum leaves out
        cfg = make(w0=0.0, g0=0.0, wp=wp, T=0.3)
        j_ge_1 = finite_slab_force_matsubara(cfg.medium, cfg.geometry, 0.3)
        zero = lossless_plasma_zero_mode(cfg.medium, cfg.geometry, 0.3)
        assert force_closed(cfg).total == pytest.approx(j_ge_1 + zero, rel=1e-9)
        assert abs(zero) > abs(j_ge_1)

    @pytest.mark.parametrize("route", [force_decomposed, force_closed])
    def test_lossless_dielectric_refused(self, route):
        with pytest.raises(DomainError, match="Matsubara"):
            route(make(g0=0.0))

    def test_lossless_semispace_refused(self):
        with pytest.raises(DomainError, match="Matsubara"):
            force_semispace_real(make(w0=0.0, g0=0.0))

    def test_thick_lossless_plasma_refused(self):
        with pytest.raises(DomainError, match="omega_p"):
            force_closed(make(w0=0.0, g0=0.0, wp=10.0))

    @pytest.mark.parametrize("route", [force_decomposed, force_closed,
                                       force_semispace_real, force_lifshitz_T0])
    def test_vacuum_slabs_give_zero(self, route):
        res = route(make(wp=0.0))
        assert res.total == 0.0

    def test_vacuum_slabs_matsubara(self):
        assert force_matsubara(make(wp=0.0, T=0.3)).total == 0.0

    def test_temperature_requirements(self):
        with pytest.raises(DomainError):
            force_matsubara(make(T=0.0))
        with pytest.raises(DomainError):
            force_lifshitz_T0(make(T=0.1))

    def test_partial_result_on_budget_exhaustion(self):
        cfg = make(quad=QuadratureSettings(rel_tol=1e-13, abs_tol=1e-300, max_panels=16))
        with pytest.raises(QuadratureError) as exc:
            force_decomposed(cfg)
        partial = exc.value.partial
        assert partial is not None and not partial.converged
        assert partial.route is Route.DECOMPOSED

    def test_deterministic(self):
        a = force_decomposed(CONFIGS[2])
        b = force_decomposed(CONFIGS[2])
        assert a == b


class TestSemispace:
    MEDIUM = dict(w0=1.0, wp=2.0, g0=0.2)

    @pytest.mark.parametrize("Ta", [0.1, 0.5, 1.0])
    def test_matsubara_matches_real_axis(self, Ta):
        cfg = make(T=Ta, **self.MEDIUM)
        m = force_matsubara(cfg)
        s = force_semispace_real(cfg)
        assert m.total == pytest.approx(s.total, rel=1e-4)

    def test_lifshitz_T0_matches_real_axis(self):
        cfg = make(**self.MEDIUM)
        assert force_lifshitz_T0(cfg).total == pytest.approx(
            force_semispace_real(cfg).total, rel=1e-8)
        assert force_lifshitz_T0(cfg).total == pytest.approx(-0.005902466554967417, rel=1e-12)

    def test_matsubara_T0_limit_monotone(self):
        f0 = force_lifshitz_T0(make(**self.MEDIUM)).total
        diffs = [abs(force_matsubara(make(T=T, **self.MEDIUM)).total - f0)
                 for T in (0.1, 0.05, 0.025, 0.0125)]
        assert all(d2 < d1 for d1, d2 in zip(diffs, diffs[1:]))
        assert diffs[-1] < 1e-2 * abs(f0)

    def test_thick_slab_limit(self):
        # slabs turn transparent at large k (Im n ~ k^-3), so the approach is slow
        semi = force_lifshitz_T0(make(**self.MEDIUM)).total
        gaps = []
        for d in (1.0, 3.0, 30.0):
            cfg = make(d=d, **self.MEDIUM)
            f = force_closed(cfg).total
            assert f == pytest.approx(finite_slab_force_T0(cfg.medium, cfg.geometry),
                                      rel=1e-9)
            gaps.append(abs(f - semi))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-3 * abs(semi)

    @pytest.mark.parametrize("wpa", [300.0, 1000.0])
    def test_ideal_mirror(self, wpa):
        cfg = make(w0=0.0, g0=0.0, wp=wpa)
        ratio = force_lifshitz_T0(cfg).total / (-math.pi / 24)
        assert abs(ratio - 1) < 0.02

    def test_ideal_mirror_approach(self):
        # thin skin depth correction, 1 - 4/(omega_p a) to first order
        ratios = [force_lifshitz_T0(make(w0=0.0, g0=0.0, wp=w)).total / (-math.pi / 24)
                  for w in (100.0, 300.0, 1000.0)]
        assert ratios[0] < ratios[1] < ratios[2] < 1
        for w, r in zip((100.0, 300.0, 1000.0), ratios):
            assert r == pytest.approx(1 - 4 / w, abs=2e-3 * 100 / w)

    def test_drude_to_plasma_continuity(self):
        T = 0.5
        plasma = force_matsubara(make(w0=0.0, g0=0.0, wp=5.0, T=T)).total
        assert plasma == pytest.approx(-0.0005478507229960277, rel=1e-12)
        g = np.array([0.5, 0.05, 0.005])
        vals = [force_matsubara(make(w0=0.0, g0=gi, wp=5.0, T=T)).total for gi in g]
        limit = np.polyval(np.polyfit(g, vals, 2), 0.0)
        assert abs(limit - plasma) < 1e-3 * abs(plasma)


class TestAsymptotics:
    @pytest.mark.parametrize("cfg", CONFIGS, ids=CONFIG_IDS)
    def test_asymptotic_forms(self, cfg):
        k = 100 * fm.asymptotic_scale(cfg)
        diag = fm.asymptotic_check(cfg, k)
        assert diag.n1_rel_error < 1e-2
        assert diag.n2_rel_error < 1e-2
        assert diag.r_rel_error < 1e-2
        assert abs(diag.integrand) <= 1.05 * diag.envelope * 4

    @pytest.mark.parametrize("cfg", [CONFIGS[0], CONFIGS[3], CONFIGS[5]],
                             ids=["ohmic", "lor3", "gauss3"])
    def test_tail_slope(self, cfg):
        s = fm.asymptotic_scale(cfg)
        slope = fm.closed_integrand_decay_slope(cfg, 100 * s, 1000 * s)
        assert slope == pytest.approx(-3.0, abs=0.1)

    @pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
    def test_lifshitz_decay_rate(self, a):
        cfg = make(a=a)
        s0 = 30 * max(cfg.medium.scale, 1 / a)
        rate = fm.lifshitz_decay_rate(cfg, s0, 2 * s0)
        assert rate == pytest.approx(-2 * a, rel=0.05)

    def test_gap_monotonic(self):
        ref = [-0.0040978809425625626, -0.0011781856750053144, -0.0002356485788846646,
               -3.354545286047442e-05, -3.5885926696226266e-06]
        vals = [force_closed(make(a=a)).total for a in (1.0, 2.0, 4.0, 8.0, 16.0)]
        np.testing.assert_allclose(vals, ref, rtol=1e-8)
        assert all(abs(v2) < abs(v1) for v1, v2 in zip(vals, vals[1:]))

    def test_attraction_sign(self):
        for cfg in CONFIGS:
            assert force_closed(cfg).total < 0
            assert np.mean(fm.closed_integrand(cfg, k_samples(cfg))) != 0
