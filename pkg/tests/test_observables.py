import math
from dataclasses import replace

import numpy as np
import pytest

from dickelab.errors import QuadratureError, ValidationError
from dickelab.greens import lowfreq_coefficients, standard_params
from dickelab.observables import (
    QuadConfig,
    correlation_time,
    fourier_oscillatory,
    integrate_spectral,
    mean_square_displacement,
    photon_number,
    response_time,
    x_correlation_time,
    x_response_time,
)


class TestFourierOscillatory:
    def test_lorentzian_closed_form(self):
        f = lambda w: 2.0 / (w * w + 1.0) + 0j
        for t in (0.0, 0.5, 3.0):
            got = fourier_oscillatory(f, t)
            assert got == pytest.approx(math.exp(-t), rel=1e-8, abs=1e-12)

    def test_zero_function(self):
        assert fourier_oscillatory(lambda w: 0.0j, 2.0) == 0.0

    def test_shifted_lorentzian_phase(self):
        # f = 2/( (w-w0)^2 + 1 ) transforms to e^{-|t|} e^{-i w0 t}
        w0 = 1.3
        f = lambda w: 2.0 / ((w - w0) ** 2 + 1.0) + 0j
        t = 2.0
        got = fourier_oscillatory(f, t)
        expected = math.exp(-t) * complex(math.cos(w0 * t), -math.sin(w0 * t))
        assert got == pytest.approx(expected, rel=1e-8)

    def test_powerlaw_vs_brute_force(self):
        # |w|^-0.6 with a wide plateau below 0.5 (resolvable by the trapezoid
        # oracle), truncated at 2000 in both routes
        cut = 0.5

        def f(w):
            a = max(abs(w), cut)
            return a**-0.6 + 0j

        def f_trunc(w):
            return f(w) if abs(w) <= 2000.0 else 0.0j

        grid = np.linspace(-2000.0, 2000.0, 4_000_001)
        fw = np.maximum(np.abs(grid), cut) ** -0.6
        # tolerance limited by the trapezoid oracle's O((t h)^2) error, which
        # does not shrink with the heavy cancellation at the later time
        for t, tol in ((10.0, 5e-4), (100.0, 5e-3)):
            brute = np.trapezoid(fw * np.cos(grid * t), grid) / (2 * math.pi)
            got = fourier_oscillatory(f_trunc, t, QuadConfig(rel_tol=1e-9, omega_max=2000.0))
            assert got.imag == pytest.approx(0.0, abs=1e-9 * abs(got.real))
            assert got.real == pytest.approx(brute, rel=tol)

    def test_powerlaw_time_scaling(self):
        # transform of |w|^-0.6 (tiny IR plateau) decays as t^-0.4
        cut = 1e-6

        def f(w):
            a = max(abs(w), cut)
            return a**-0.6 + 0j

        v10 = fourier_oscillatory(f, 10.0).real
        v100 = fourier_oscillatory(f, 100.0).real
        assert math.log(v10 / v100) / math.log(10.0) == pytest.approx(0.4, abs=0.01)

    def test_negative_time_is_conjugate(self):
        f = lambda w: 1.0 / (w * w + 2.0) + 1j * w / (w**4 + 1.0)
        plus = fourier_oscillatory(f, 1.7)
        minus = fourier_oscillatory(f, -1.7)
        assert minus == pytest.approx(plus.conjugate(), rel=1e-10)


class TestIntegrateSpectral:
    def test_gaussianish_rational(self):
        # int dw/2pi 1/(1+w^2) = 1/2
        got = integrate_spectral(lambda w: 1.0 / (1.0 + w * w))
        assert got == pytest.approx(0.5, rel=1e-8)

    def test_ir_divergence_detected(self):
        with pytest.raises(QuadratureError):
            integrate_spectral(lambda w: abs(w) ** -1.5 / (1 + w * w))

    def test_ir_floor_regularized_value_grows(self):
        vals = []
        for floor in (1e-6, 1e-8, 1e-10):
            cfg = QuadConfig(omega_min=floor, ir_floor_regularize=True)
            vals.append(integrate_spectral(lambda w: abs(w) ** -1.5 / (1 + w * w), cfg))
        assert vals[0] < vals[1] < vals[2]
        # regularized value scales as floor^(-1/2)
        assert vals[1] / vals[0] == pytest.approx(10.0, rel=0.05)


class TestPhotonNumber:
    def test_empty_cavity(self):
        p = replace(standard_params(s=0.5), y=0.0)
        assert abs(photon_number(p)) < 1e-8

    def test_domain_error_at_criticality(self):
        with pytest.raises(ValidationError):
            photon_number(standard_params(s=0.7, dy_rel=0.0))

    def test_monotone_in_coupling(self):
        ns = [photon_number(standard_params(s=0.6, dy_rel=d)) for d in (1e-2, 1e-3, 1e-4)]
        assert ns[0] < ns[1] < ns[2]

    def test_tolerance_self_consistency(self):
        p = standard_params(s=0.7, dy_rel=1e-5)
        coarse = photon_number(p, QuadConfig(rel_tol=1e-6))
        fine = photon_number(p, QuadConfig(rel_tol=1e-10))
        assert abs(coarse - fine) <= 1e-5 * abs(fine)

    def test_no_divergence_below_half(self):
        ns = [photon_number(standard_params(s=0.3, dy_rel=d)) for d in (1e-8, 1e-7, 1e-6)]
        assert max(ns) / min(ns) - 1.0 < 0.05


class TestTimeDomain:
    def test_equal_time_matches_photon_number(self):
        p = standard_params(s=0.7, dy_rel=1e-4)
        n = photon_number(p)
        c0 = correlation_time(0.0, p)
        assert c0 == pytest.approx(2 * n + 1, rel=1e-8)

    def test_correlator_even_in_time(self):
        p = standard_params(s=0.35, dy_rel=1e-3)
        assert correlation_time(-50.0, p) == pytest.approx(correlation_time(50.0, p), rel=1e-12)

    def test_response_causality(self):
        p = standard_params(s=0.5, dy_rel=1e-3)
        assert response_time(-1.0, p) == 0.0
        assert response_time(0.0, p) == 0.0

    def test_response_decays(self):
        p = standard_params(s=0.5, dy_rel=1e-3)
        assert response_time(1e3, p) > response_time(1e4, p) > 0.0

    def test_ir_divergent_critical_correlator_flagged(self):
        # s > 1/2 at criticality: iG^K(t) is IR-divergent
        p = standard_params(s=0.7, dy_rel=0.0)
        with pytest.raises(QuadratureError):
            correlation_time(100.0, p)
        # the floor-regularized value grows as the floor shrinks
        v1 = correlation_time(100.0, p, QuadConfig(omega_min=1e-8, ir_floor_regularize=True))
        v2 = correlation_time(100.0, p, QuadConfig(omega_min=1e-10, ir_floor_regularize=True))
        assert v2 > 2.0 * v1


class TestMeanSquareDisplacement:
    def test_vanishes_at_zero_lag(self):
        p = standard_params(s=0.75, dy_rel=0.0)
        assert mean_square_displacement(0.0, p) == 0.0
        assert mean_square_displacement(1e-3, p) < mean_square_displacement(1.0, p)

    def test_markovian_limit_normal_diffusion(self):
        # gamma = 0 at criticality: overdamped free mode, MSD = 2*kappa_eff*t/chi^2
        p = standard_params(s=0.5, dy_rel=0.0, nonmarkovian_on=False)
        c = lowfreq_coefficients(p)
        chi = p.kappa / p.delta
        t = 1e3
        expected = 2.0 * c.kappa_eff * t / chi**2
        assert mean_square_displacement(t, p) == pytest.approx(expected, rel=1e-2)

    def test_subdiffusive_slope(self):
        p = standard_params(s=0.75, dy_rel=0.0)
        ts = np.geomspace(1e7, 1e9, 6)
        ms = [mean_square_displacement(t, p) for t in ts]
        slope = np.polyfit(np.log(ts), np.log(ms), 1)[0]
        assert slope == pytest.approx(0.5, abs=0.02)


class TestScenarioDynamicalExponents:
    """Table entries not sampled by the main exponent criteria."""

    def test_nmb_only_critical_correlator(self):
        p = standard_params(s=0.5, dy_rel=0.0, markovian_on=False)
        ts = np.geomspace(1e2, 1e4, 9)
        cs = [x_correlation_time(t, p) for t in ts]
        sl = np.polyfit(np.log(ts), np.log(cs), 1)[0]
        assert sl == pytest.approx(-(1 - 0.5), abs=0.05)

    def test_thermal_offcritical_correlator(self):
        p = standard_params(s=0.6, dy_rel=1e-4, T_b=1.0)
        c = lowfreq_coefficients(p)
        t_est = (np.hypot(c.v_I, c.v_R) / c.r) ** (1 / 0.6)
        ts = np.geomspace(1e3 * t_est, 1e5 * t_est, 9)
        cs = [correlation_time(t, p) for t in ts]
        sl = np.polyfit(np.log(ts), np.log(cs), 1)[0]
        assert sl == pytest.approx(-0.6, abs=0.05)

    def test_mb_only_exponential_decay(self):
        # off criticality the correlator decays exponentially at rate r/chi
        # (up to an O(r/chi^2) pole-position shift, negligible at this dy)
        p = standard_params(s=0.5, dy_rel=1e-4, nonmarkovian_on=False)
        c = lowfreq_coefficients(p)
        chi = p.kappa / p.delta
        ts = np.linspace(1000.0, 4000.0, 6)
        cs = np.array([x_correlation_time(t, p) for t in ts])
        rate = -np.polyfit(ts, np.log(cs), 1)[0]
        assert rate == pytest.approx(c.r / chi, rel=0.02)

    def test_mb_only_critical_response_does_not_decay(self):
        # at criticality the retarded pole sits on the origin: the real-axis
        # transform gives the principal-value half-plateau 1/(2 chi), constant
        # in time (no power-law decay), and the static susceptibility
        # diverges as criticality is approached
        p = standard_params(s=0.5, dy_rel=0.0, nonmarkovian_on=False)
        chi = p.kappa / p.delta
        for t in (50.0, 500.0):
            assert abs(x_response_time(t, p)) == pytest.approx(1 / (2 * chi), rel=0.02)
        from dickelab.greens import x_retarded

        chis = [abs(x_retarded(0.0, standard_params(s=0.5, dy_rel=d, nonmarkovian_on=False)))
                for d in (1e-4, 1e-6)]
        assert chis[1] > 50 * chis[0]

    @pytest.mark.parametrize("kwargs", [
        dict(s=0.7, dy_rel=0.0),                      # both baths, s > 1/2
        dict(s=0.4, dy_rel=0.0, T_b=1.0),             # thermal, any s
        dict(s=0.5, dy_rel=0.0, nonmarkovian_on=False),  # MB only
    ])
    def test_critical_correlator_ir_divergence_marker(self, kwargs):
        p = standard_params(**kwargs)
        with pytest.raises(QuadratureError):
            x_correlation_time(100.0, p)
        v1 = x_correlation_time(100.0, p, QuadConfig(omega_min=1e-8, ir_floor_regularize=True))
        v2 = x_correlation_time(100.0, p, QuadConfig(omega_min=1e-10, ir_floor_regularize=True))
        assert v2 > 1.5 * v1


class TestEffectiveThermalFDT:
    def test_mb_only_fdt_in_time_domain(self):
        # G^R_x(t) = (1/(2 T_eff)) d/dt iG^K_x(t) for the Markovian-only
        # scenario, once the underdamped polariton transient (decay rate
        # ~0.4 omega_z, oscillation ~2.3 omega_z) has died out
        p = standard_params(s=0.5, dy_rel=1e-4, nonmarkovian_on=False)
        t_eff = lowfreq_coefficients(p).T_eff
        for t in (20.0, 50.0, 80.0):
            h = 5e-3 * t
            dk = (x_correlation_time(t + h, p) - x_correlation_time(t - h, p)) / (2 * h)
            gr = x_response_time(t, p)
            assert gr == pytest.approx(dk / (2 * t_eff), rel=1e-2)

    def test_lowfreq_theory_fdt_exact_through_pipeline(self):
        # the scenario's low-frequency theory obeys the effective-thermal FDT
        # at every t > 0; checked through the numerical Fourier machinery
        p = standard_params(s=0.5, dy_rel=1e-4, nonmarkovian_on=False)
        c = lowfreq_coefficients(p)
        chi = p.kappa / p.delta
        prx = lambda w: complex(-c.r, w * chi)
        corr = lambda w: 2.0 * c.kappa_eff / abs(prx(w)) ** 2 + 0j
        resp = lambda w: 1.0 / prx(w)
        for t in (1.0, 10.0, 100.0):
            h = 1e-3 * t
            dk = (
                fourier_oscillatory(corr, t + h).real
                - fourier_oscillatory(corr, t - h).real
            ) / (2 * h)
            gr = fourier_oscillatory(resp, t).real
            assert gr == pytest.approx(dk / (2 * c.T_eff), rel=1e-3)
