import math

import numpy as np
import pytest

from qubitcorr import (
    CorrelatorCurve,
    EstimatorWindow,
    InvalidArgumentError,
    InvalidDataError,
    SimulationConfig,
    UnidentifiableError,
    antisym_cross_correlator,
    correlator_closed_form,
    estimate_correlator,
    fit_decay_rate,
    fit_rabi_mismatch,
    simulate_ensemble,
    zeno_jump_rate,
)

from conftest import GAMMA, reference_setup


def analytic_antisym_curve(setup, max_lag=2.5, dt=0.004):
    lags = np.arange(int(max_lag / dt) + 1) * dt
    values = np.array([antisym_cross_correlator(setup, tau) for tau in lags])
    return CorrelatorCurve(lags=lags, values=values, labels=("z", "phi"))


def template_curve(setup, rate, max_lag=2.5, dt=0.004):
    """Noise-free curve built directly from the zero-mismatch fit model:
    2 rate sin(phi) (exp(-g_minus t) - exp(-g_plus t)) / (g_plus - g_minus),
    with the rate pair evaluated at zero mismatch (degenerate limit t exp)."""
    gz, gp = setup.channel_z.gamma, setup.channel_phi.gamma
    phi = setup.phi
    gam = setup.environment.gamma
    disc = gz * gz + gp * gp + 2 * gz * gp * math.cos(2 * phi)
    half = 0.5 * (gz + gp) + gam
    lags = np.arange(int(max_lag / dt) + 1) * dt
    if disc < 1e-14:
        shape = lags * np.exp(-half * lags)
    else:
        g_plus = half + 0.5 * math.sqrt(disc)
        g_minus = half - 0.5 * math.sqrt(disc)
        shape = (np.exp(-g_minus * lags) - np.exp(-g_plus * lags)) / (g_plus - g_minus)
    values = 2.0 * rate * math.sin(phi) * shape
    return CorrelatorCurve(lags=lags, values=values, labels=("z", "phi"))


KHZ_12 = 2 * math.pi * 0.012  # rad/us


class TestRabiFit:
    def test_exact_recovery_degenerate_template(self):
        # phi = pi/2 with equal rates: the two decay rates collide
        setup = reference_setup(math.pi / 2)
        curve = template_curve(setup, KHZ_12)
        result = fit_rabi_mismatch(curve, setup)
        assert math.isclose(result.value, KHZ_12, rel_tol=1e-6)
        assert result.residual_norm < 1e-9
        assert result.n_points > 100

    def test_exact_recovery_split_rates(self):
        setup = reference_setup(math.pi / 3, gamma_z=1.1, gamma_phi=0.6)
        curve = template_curve(setup, KHZ_12)
        result = fit_rabi_mismatch(curve, setup)
        assert math.isclose(result.value, KHZ_12, rel_tol=1e-6)

    def test_full_closed_form_within_small_mismatch_approximation(self):
        # against the exact antisymmetrized curve the fit inherits the
        # neglect of the mismatch inside the rate pair, an O((rate/Gamma)^2)
        # effect: ~0.3% here, far inside the fit's practical use
        setup = reference_setup(math.pi / 2, rabi_mismatch=KHZ_12)
        curve = analytic_antisym_curve(setup)
        result = fit_rabi_mismatch(curve, setup)
        assert math.isclose(result.value, KHZ_12, rel_tol=1e-2)

    def test_linearity_and_sign(self):
        setup = reference_setup(math.pi / 2)
        curve = template_curve(setup, KHZ_12)
        base = fit_rabi_mismatch(curve, setup).value
        doubled = CorrelatorCurve(lags=curve.lags, values=2.0 * curve.values,
                                  labels=curve.labels)
        negated = CorrelatorCurve(lags=curve.lags, values=-curve.values,
                                  labels=curve.labels)
        assert math.isclose(fit_rabi_mismatch(doubled, setup).value, 2 * base,
                            rel_tol=1e-12)
        assert math.isclose(fit_rabi_mismatch(negated, setup).value, -base,
                            rel_tol=1e-12)

    def test_weighted_uses_curve_stderr(self):
        setup = reference_setup(math.pi / 2)
        curve = template_curve(setup, KHZ_12)
        weighted = CorrelatorCurve(lags=curve.lags, values=curve.values,
                                   stderr=np.full(curve.lags.size, 0.05),
                                   labels=curve.labels)
        result = fit_rabi_mismatch(weighted, setup)
        assert math.isclose(result.value, KHZ_12, rel_tol=1e-6)
        assert result.stderr > 0

    def test_aligned_axes_unidentifiable(self):
        setup = reference_setup(0.0, rabi_mismatch=KHZ_12)
        curve = analytic_antisym_curve(setup)
        with pytest.raises(UnidentifiableError):
            fit_rabi_mismatch(curve, setup)

    def test_empty_lag_range(self):
        setup = reference_setup(math.pi / 2)
        curve = template_curve(setup, KHZ_12)
        with pytest.raises(InvalidArgumentError):
            fit_rabi_mismatch(curve, setup, lag_range=(5.0, 6.0))

    def test_mismatch_ignored_in_rate_computation(self):
        # passing a setup that still carries a mismatch must not change rates
        setup = reference_setup(math.pi / 2)
        curve = template_curve(setup, KHZ_12)
        carrying = reference_setup(math.pi / 2, rabi_mismatch=0.4)
        result = fit_rabi_mismatch(curve, carrying)
        assert math.isclose(result.value, KHZ_12, rel_tol=1e-6)


class TestEnsembleConsistency:
    def test_stderr_shrinks_like_root_n(self):
        # fitted rate consistent with the injection at every ensemble size,
        # with the fit stderr shrinking ~1/sqrt(n) (short traces keep this fast)
        truth = 2 * math.pi * 0.050
        setup = reference_setup(math.pi / 2, rabi_mismatch=truth)
        config = SimulationConfig(
            dt=0.004, duration=1.6, n_traces=80_000, master_seed=4242,
        )
        records = simulate_ensemble(setup, config)
        window = EstimatorWindow(t_a=0.4, t_b=0.8, max_lag=0.8)
        results = {}
        for n in (5_000, 20_000, 80_000):
            subset = records[:n]
            kzp = estimate_correlator(subset, "z", "phi", window,
                                      stderr_resamples=100)
            kpz = estimate_correlator(subset, "phi", "z", window,
                                      stderr_resamples=100)
            antisym = CorrelatorCurve(
                lags=kzp.lags, values=kzp.values - kpz.values,
                stderr=np.sqrt(kzp.stderr**2 + kpz.stderr**2),
                labels=("z", "phi"),
            )
            results[n] = fit_rabi_mismatch(antisym, setup, lag_range=(0.004, 0.8))
        del records
        for n, result in results.items():
            assert abs(result.value - truth) <= 3 * result.stderr, n
        for big, small in ((20_000, 5_000), (80_000, 20_000)):
            ratio = results[small].stderr / results[big].stderr
            assert 1.5 < ratio < 2.5
        # point estimates tighten toward the injection
        assert abs(results[80_000].value - truth) < abs(results[5_000].value - truth) + \
            3 * results[5_000].stderr


class TestDecayFit:
    def test_exact_exponential(self):
        lags = np.arange(0, 501) * 0.004
        curve = CorrelatorCurve(lags=lags, values=np.exp(-0.7692 * lags))
        result = fit_decay_rate(curve)
        assert math.isclose(result.value, 0.7692, rel_tol=1e-9)
        assert result.stderr < 1e-9

    def test_zeno_cross_correlator_rate(self):
        # the cross-correlator starts with exactly zero slope (the fast
        # rate-sum transient cancels it), so the jump rate is read off the
        # single-exponential tail beyond a few transient times
        setup = reference_setup(0.05, t1=math.inf, t2=math.inf)
        rate = zeno_jump_rate(setup)
        lags = np.linspace(0.004, 12.0, 1200)
        values = np.array(
            [correlator_closed_form(setup, "z", "phi", tau) for tau in lags]
        )
        curve = CorrelatorCurve(lags=lags, values=values)
        result = fit_decay_rate(curve, lag_range=(2.0 / GAMMA, 8.0 / GAMMA))
        assert abs(result.value - 2 * rate) / (2 * rate) < 0.05

    def test_negative_values_rejected(self):
        curve = CorrelatorCurve(lags=[0.0, 0.1, 0.2], values=[1.0, -0.5, 0.2])
        with pytest.raises(InvalidDataError):
            fit_decay_rate(curve)

    def test_too_few_points(self):
        curve = CorrelatorCurve(lags=[0.0, 0.1], values=[1.0, 0.9])
        with pytest.raises(InvalidArgumentError):
            fit_decay_rate(curve, lag_range=(0.0, 0.05))
