import math

import numpy as np
import pytest
from scipy.signal import welch
from scipy.special import gammaln

from dickelab.errors import DivergenceError, NumericsError, ValidationError
from dickelab.langevin import (
    Ensemble,
    SimConfig,
    Trajectory,
    autocorrelation_time,
    colored_noise,
    ensemble_msd,
    finite_size_scan,
    gl_weights,
    linear_variance_continuum,
    linear_variance_discrete,
    simulate,
    soe_modes,
)


class TestWeights:
    def test_binomial_recursion(self):
        w = gl_weights(0.5, 5)
        np.testing.assert_allclose(w[:4], [1.0, -0.5, -0.125, -0.0625], rtol=1e-14)

    def test_integer_order_limit(self):
        w = gl_weights(1.0 - 1e-13, 4)
        np.testing.assert_allclose(w[:2], [1.0, -1.0], rtol=1e-12)
        assert np.all(np.abs(w[2:]) < 1e-12)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.9])
    def test_partial_sums_match_closed_form_and_vanish(self, s):
        # sum_{k<=n} w_k = Gamma(n+1-s) / (Gamma(1-s) Gamma(n+1)) -> 0
        n = 10**6
        w = gl_weights(s, n)
        partial = w.sum()
        closed = math.exp(gammaln(n + 1 - s) - gammaln(1 - s) - gammaln(n + 1))
        assert partial == pytest.approx(closed, rel=1e-8)
        assert abs(partial) < abs(gl_weights(s, 10**4).sum())

    def test_soe_tail_accuracy(self):
        a, theta = soe_modes(0.7, 100_000, k0=8, tol=1e-8)
        k = np.unique(np.geomspace(9, 100_000, 50).astype(int))
        exact = gl_weights(0.7, 100_000)[k]
        approx = (a[None, :] * np.exp(-np.outer(k, theta))).sum(axis=1)
        assert np.max(np.abs(approx - exact) / np.abs(exact)) < 1e-8


class TestSimulate:
    def test_deterministic_given_seed(self):
        cfg = SimConfig(s=0.6, v=1.0, r=0.5, kappa_eff=1.0, dt=0.02, steps=4000,
                        burn_in=500, ensemble=3, seed=9, memory="full")
        a = simulate(cfg)
        b = simulate(cfg)
        assert isinstance(a, Ensemble)
        assert np.array_equal(a.samples, b.samples)

    def test_single_member_returns_trajectory(self):
        cfg = SimConfig(s=0.6, v=1.0, r=0.5, kappa_eff=1.0, dt=0.02, steps=2000,
                        ensemble=1, seed=1, memory="full")
        out = simulate(cfg)
        assert isinstance(out, Trajectory)
        assert out.samples.shape == (2000 - cfg.burn_in,)
        assert np.all(np.isfinite(out.samples))

    def test_soe_matches_full_history(self):
        base = dict(s=0.7, v=1.0, r=0.5, kappa_eff=1.0, dt=0.01, steps=20000,
                    burn_in=0, ensemble=2, seed=42)
        full = simulate(SimConfig(memory="full", **base))
        soe = simulate(SimConfig(memory="soe", **base))
        dev = np.max(np.abs(full.samples - soe.samples)) / np.std(full.samples)
        assert dev < 1e-9

    def test_linear_variance_against_discrete_formula(self):
        cfg = SimConfig(s=0.7, v=1.0, r=0.5, kappa_eff=1.0, dt=0.01, steps=60000,
                        burn_in=10000, ensemble=12, seed=5, memory="full")
        m2, err = simulate(cfg).stationary_second_moment()
        pred = linear_variance_discrete(0.5, 1.0, 0.7, 1.0, 0.01)
        assert m2 == pytest.approx(pred, abs=4 * max(err, 0.02 * pred))

    def test_z2_symmetry_of_mean(self):
        cfg = SimConfig(s=0.7, v=1.0, r=0.5, kappa_eff=1.0, dt=0.02, steps=40000,
                        burn_in=8000, ensemble=16, seed=3, memory="full")
        ens = simulate(cfg)
        means = ens.samples.mean(axis=1)
        stderr = means.std(ddof=1) / math.sqrt(len(means))
        assert abs(means.mean()) < 3.0 * stderr

    def test_divergence_guard(self):
        # negative quartic coefficient blows up from noise-seeded amplitude
        cfg = SimConfig(s=0.7, v=1.0, r=-2.0, kappa_eff=1.0, g=-1.0, n_atoms=1.0,
                        dt=0.5, steps=5000, burn_in=0, ensemble=1, seed=0, memory="full")
        with pytest.raises(DivergenceError):
            simulate(cfg)

    def test_validation(self):
        with pytest.raises(ValidationError):
            SimConfig(s=1.5, v=1.0, r=0.0, kappa_eff=1.0)
        with pytest.raises(ValidationError):
            SimConfig(s=0.5, v=1.0, r=0.0, kappa_eff=1.0, noise="colored")
        with pytest.raises(ValidationError):
            SimConfig(s=0.5, v=1.0, r=0.0, kappa_eff=1.0, steps=10, burn_in=10)


class TestDiscretisation:
    def test_dt_refinement_of_stationary_variance(self):
        # halving dt at the default resolution moves <x^2> by < 2%
        v1 = linear_variance_discrete(0.5, 1.0, 0.7, 1.0, 0.002)
        v2 = linear_variance_discrete(0.5, 1.0, 0.7, 1.0, 0.001)
        assert abs(v2 - v1) / v1 < 0.02

    def test_continuum_limit(self):
        cont = linear_variance_continuum(0.5, 1.0, 0.7, 1.0)
        disc = linear_variance_discrete(0.5, 1.0, 0.7, 1.0, 1e-5)
        assert disc == pytest.approx(cont, rel=5e-3)

    def test_continuum_variance_guards(self):
        with pytest.raises(NumericsError):
            linear_variance_continuum(0.5, 1.0, 0.4, 1.0)
        with pytest.raises(NumericsError):
            linear_variance_continuum(0.0, 1.0, 0.7, 1.0)


class TestColoredNoise:
    def test_zero_temperature_silence(self):
        assert np.all(colored_noise(0.5, 0.0, 0.1, 1.0, 0.01, 256, seed=0) == 0.0)

    def test_periodogram_slope(self):
        x = colored_noise(0.5, 1.0, 0.157, 1.0, 0.05, 2**18, seed=7)
        freq, pxx = welch(x, fs=1.0 / 0.05, nperseg=2**14)
        sel = (freq > 1e-2) & (freq < 1.0)
        slope = np.polyfit(np.log(freq[sel]), np.log(pxx[sel]), 1)[0]
        assert slope == pytest.approx(0.5 - 1.0, abs=0.05)

    def test_ohmic_limit_variance(self):
        # s -> 1: flat spectrum, total variance = S / dt = 4 v_I T_b / (omega_z dt)
        s, t_b, v_i, dt = 1.0 - 1e-9, 2.0, 0.3, 0.1
        x = colored_noise(s, t_b, v_i, 1.0, dt, 2**19, seed=1)
        assert x.var() == pytest.approx(4 * v_i * t_b / dt, rel=0.02)

    def test_colored_drive_matches_discrete_linear_theory(self):
        s, t_b, v, r = 0.6, 1.5, 1.0, 0.8
        cfg = SimConfig(s=s, v=v, r=r, kappa_eff=0.0, noise="colored", T_b=t_b,
                        dt=0.02, steps=60000, burn_in=10000, ensemble=12, seed=13,
                        memory="full")
        m2, err = simulate(cfg).stationary_second_moment()
        amp = 4.0 * v * t_b * math.sin(math.pi * s / 2.0)
        pred = linear_variance_discrete(r, v, s, 0.0, 0.02, colored_amp=amp)
        assert m2 == pytest.approx(pred, abs=4 * max(err, 0.03 * pred))


class TestEnsembleObservables:
    def test_msd_exponent_free_fractional(self):
        cfg = SimConfig(s=0.75, v=1.0, r=0.0, kappa_eff=1.0, dt=0.02, steps=30000,
                        burn_in=6000, ensemble=24, seed=3, memory="full")
        ens = simulate(cfg)
        lags = np.unique(np.geomspace(100, 2400, 8).astype(int))
        msd = ensemble_msd(ens.samples, lags)
        slope = np.polyfit(np.log(lags * cfg.dt), np.log(msd), 1)[0]
        assert slope == pytest.approx(2 * 0.75 - 1.0, abs=0.08)

    def test_autocorrelation_time_shrinks_with_mass(self):
        taus = []
        for r in (0.3, 3.0):
            cfg = SimConfig(s=0.7, v=1.0, r=r, kappa_eff=1.0, dt=0.02, steps=40000,
                            burn_in=8000, ensemble=8, seed=2, memory="full")
            taus.append(autocorrelation_time(simulate(cfg).samples, cfg.dt))
        assert taus[1] < taus[0]

    def test_finite_size_scan_validation(self):
        tmpl = SimConfig(s=0.7, v=1.0, r=0.0, kappa_eff=0.5, g=1.0, steps=1000)
        with pytest.raises(ValidationError):
            finite_size_scan(tmpl, [10.0, 20.0])  # < 1.5 decades
        bad = SimConfig(s=0.7, v=1.0, r=0.1, kappa_eff=0.5, g=1.0, steps=1000)
        with pytest.raises(ValidationError):
            finite_size_scan(bad, [1e2, 1e3, 1e4])
