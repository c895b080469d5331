import math
from functools import partial

import numpy as np
import pytest

from qubitcorr import (
    BlochVector,
    Calibration,
    EmptyEnsembleError,
    EstimatorWindow,
    InvalidParameterError,
    InvalidWindowError,
    SimulationConfig,
    TraceRecord,
    UnidentifiableError,
    bootstrap_stderr,
    calibrate_response,
    correlator_closed_form,
    estimate_correlator,
    estimate_offsets,
    propagate_average,
    simulate_ensemble,
)
from qubitcorr.analytic import observable_mean
from qubitcorr.estimator import mean_signals

from conftest import reference_setup, short_config


def constant_records(n_traces, n_samples, dt, value_z, value_phi):
    samples = np.column_stack(
        [np.full(n_samples, value_z), np.full(n_samples, value_phi)]
    )
    return [
        TraceRecord(dt=dt, samples=samples.copy(), seed=k, projections=0)
        for k in range(n_traces)
    ]


def transformed(records, responses, offsets):
    """Recorded-units copies: I_tilde = (response/2) I + offset."""
    out = []
    for r in records:
        raw = r.samples.copy()
        raw[:, 0] = 0.5 * responses[0] * raw[:, 0] + offsets[0]
        raw[:, 1] = 0.5 * responses[1] * raw[:, 1] + offsets[1]
        out.append(TraceRecord(dt=r.dt, samples=raw, seed=r.seed,
                               projections=r.projections))
    return out


def mean_path_records(setup, state0, duration, dt, responses=(2.0, 2.0),
                      offsets=(0.0, 0.0), n_traces=4):
    """Noise-free records carrying the exact ensemble-mean signals."""
    n = int(round(duration / dt))
    samples = np.empty((n, 2))
    for k in range(n):
        s = propagate_average(state0, k * dt, setup)
        samples[k, 0] = observable_mean(s, setup.channel_z)
        samples[k, 1] = observable_mean(s, setup.channel_phi)
    base = [TraceRecord(dt=dt, samples=samples.copy(), seed=k, projections=0)
            for k in range(n_traces)]
    return transformed(base, responses, offsets)


class TestWindow:
    def test_bad_bounds(self):
        with pytest.raises(InvalidWindowError):
            EstimatorWindow(t_a=0.5, t_b=0.5, max_lag=0.1)
        with pytest.raises(InvalidWindowError):
            EstimatorWindow(t_a=-0.1, t_b=0.5, max_lag=0.1)

    def test_window_overflow(self):
        records = constant_records(3, 100, 0.01, 1.0, 0.5)
        window = EstimatorWindow(t_a=0.2, t_b=0.6, max_lag=0.5)
        with pytest.raises(InvalidWindowError):
            estimate_correlator(records, "z", "phi", window)

    def test_empty_ensemble(self):
        with pytest.raises(EmptyEnsembleError):
            estimate_correlator([], "z", "z", EstimatorWindow(0.0, 0.1, 0.0))


class TestEstimate:
    def test_constant_traces(self):
        phi = 1.1
        records = constant_records(5, 200, 0.01, 1.0, math.cos(phi))
        window = EstimatorWindow(t_a=0.5, t_b=1.0, max_lag=0.5)
        curve = estimate_correlator(records, "z", "phi", window)
        assert np.allclose(curve.values, math.cos(phi), atol=1e-14)
        assert curve.lags[0] == 0.0 and curve.lags.size == 51
        zz = estimate_correlator(records, "z", "z", window)
        assert np.allclose(zz.values, 1.0, atol=1e-14)

    def test_lag0_self_bin_contains_noise_variance(self):
        setup = reference_setup(math.pi / 2)
        config = short_config(2000, duration=1.5, seed=41)
        records = simulate_ensemble(setup, config)
        window = EstimatorWindow(t_a=0.4, t_b=0.9, max_lag=0.3)
        curve = estimate_correlator(records, "z", "z", window)
        expected = 1.0 + setup.channel_z.tau_m / config.dt
        assert abs(curve.values[0] - expected) < 3 * curve.stderr[0]

    def test_agrees_with_closed_form(self):
        setup = reference_setup(math.pi / 4)
        config = short_config(4000, duration=2.5, seed=57)
        records = simulate_ensemble(setup, config)
        window = EstimatorWindow(t_a=0.5, t_b=1.0, max_lag=1.0)
        z_sq = []
        for pair in (("z", "z"), ("z", "phi"), ("phi", "z"), ("phi", "phi")):
            curve = estimate_correlator(records, *pair, window)
            ana = np.array(
                [correlator_closed_form(setup, *pair, tau) for tau in curve.lags]
            )
            mask = curve.lags > 0
            z = (curve.values[mask] - ana[mask]) / curve.stderr[mask]
            # per-lag errors are nearly independent, so a strict 3-sigma bound
            # on every one of the ~1000 lags would fail by multiplicity alone;
            # bound the maximum accordingly and check the z's are standard
            assert np.abs(z).max() < 4.5
            z_sq.append(z**2)
        mean_z2 = float(np.concatenate(z_sq).mean())
        assert 0.8 < mean_z2 < 1.25

    def test_calibration_neutrality(self):
        setup = reference_setup(2.2)
        config = short_config(200, duration=1.0, seed=8)
        records = simulate_ensemble(setup, config)
        responses = (4.0, 4.4)
        offsets = (0.16, -0.17)
        raw = transformed(records, responses, offsets)
        window = EstimatorWindow(t_a=0.2, t_b=0.6, max_lag=0.3)
        cal = Calibration(response_z=responses[0], response_phi=responses[1],
                          offset_z=offsets[0], offset_phi=offsets[1])
        for pair in (("z", "z"), ("z", "phi"), ("phi", "phi")):
            a = estimate_correlator(records, *pair, window)
            b = estimate_correlator(raw, *pair, window, cal)
            assert np.allclose(a.values, b.values, atol=1e-12)

    def test_identity_calibration_is_default(self):
        records = constant_records(3, 50, 0.01, 0.5, 0.25)
        window = EstimatorWindow(t_a=0.1, t_b=0.3, max_lag=0.1)
        a = estimate_correlator(records, "z", "phi", window)
        b = estimate_correlator(records, "z", "phi", window, Calibration.identity())
        assert np.array_equal(a.values, b.values)

    def test_bad_response_rejected(self):
        with pytest.raises(InvalidParameterError):
            Calibration(response_z=0.0)


class TestCalibrateResponse:
    def test_noiseless_exact_recovery(self):
        setup = reference_setup(0.9)
        phi = setup.phi
        s0 = BlochVector(math.sin(phi / 2), 0.0, math.cos(phi / 2))
        s1 = BlochVector(-math.sin(phi / 2), 0.0, -math.cos(phi / 2))
        plus = mean_path_records(setup, s0, 2.0, 0.004, responses=(4.0, 4.4),
                                 offsets=(0.16, -0.17))
        minus = mean_path_records(setup, s1, 2.0, 0.004, responses=(4.0, 4.4),
                                  offsets=(0.16, -0.17))
        fit = calibrate_response(plus, minus, setup)
        assert math.isclose(fit.response_z, 4.0, rel_tol=1e-10)
        assert math.isclose(fit.response_phi, 4.4, rel_tol=1e-10)
        assert fit.residual_norm_z < 1e-9

    def test_zero_difference_groups_unidentifiable(self):
        setup = reference_setup(0.9)
        records = constant_records(4, 100, 0.004, 0.2, 0.1)
        with pytest.raises(UnidentifiableError):
            calibrate_response(records, records, setup)


class TestOffsets:
    def test_constant_offset_recovered_exactly(self):
        setup = reference_setup(1.3)
        phi = setup.phi
        s0 = BlochVector(math.sin(phi / 2), 0.0, math.cos(phi / 2))
        s1 = BlochVector(-math.sin(phi / 2), 0.0, -math.cos(phi / 2))
        plus = mean_path_records(setup, s0, 1.0, 0.004, offsets=(0.3, -0.2))
        minus = mean_path_records(setup, s1, 1.0, 0.004, offsets=(0.3, -0.2))
        est = estimate_offsets(plus, minus)
        assert math.isclose(est.offset_z, 0.3, abs_tol=1e-12)
        assert math.isclose(est.offset_phi, -0.2, abs_tol=1e-12)
        assert est.variation_z < 1e-12

    def test_offset_free_data_consistent_with_zero(self):
        setup = reference_setup(math.pi / 2)
        phi = setup.phi
        state = BlochVector(math.sin(phi / 2), 0.0, math.cos(phi / 2))
        mirrored = BlochVector(-state.x, 0.0, -state.z)
        plus = simulate_ensemble(
            setup, short_config(400, duration=1.0, seed=61, state=state))
        minus = simulate_ensemble(
            setup, short_config(400, duration=1.0, seed=62, state=mirrored))
        est = estimate_offsets(plus, minus)
        assert abs(est.offset_z) < 3 * est.stderr_z
        assert abs(est.offset_phi) < 3 * est.stderr_phi


class TestBootstrap:
    def test_deterministic_and_finite(self):
        records = constant_records(6, 60, 0.01, 1.0, 0.4)
        window = EstimatorWindow(t_a=0.1, t_b=0.3, max_lag=0.2)
        stat = partial(estimate_correlator, i="z", j="phi", window=window)
        a = bootstrap_stderr(records, stat, n_resamples=2, seed=1)
        b = bootstrap_stderr(records, stat, n_resamples=2, seed=1)
        assert np.array_equal(a, b)
        assert np.all(np.isfinite(a)) and np.all(a >= 0)

    def test_single_trace_gives_zero(self):
        records = constant_records(1, 60, 0.01, 1.0, 0.4)
        window = EstimatorWindow(t_a=0.1, t_b=0.3, max_lag=0.2)
        stat = partial(estimate_correlator, i="z", j="z", window=window)
        assert np.all(bootstrap_stderr(records, stat, n_resamples=8, seed=3) == 0.0)

    def test_scaling_with_ensemble_size(self):
        # stderr ~ 1/sqrt(n): ratio for 1000 vs 4000 traces close to 2
        setup = reference_setup(math.pi / 2)
        config = short_config(4000, duration=1.2, seed=71)
        records = simulate_ensemble(setup, config)
        window = EstimatorWindow(t_a=0.2, t_b=0.7, max_lag=0.4)
        stat = partial(estimate_correlator, i="z", j="phi", window=window,
                       stderr_resamples=4)
        small = bootstrap_stderr(records[:1000], stat, n_resamples=24, seed=5)
        large = bootstrap_stderr(records, stat, n_resamples=24, seed=6)
        ratio = float(np.median(small / large))
        assert 1.6 < ratio < 2.4


def test_mean_signals_shape():
    records = constant_records(4, 30, 0.01, 0.7, -0.2)
    means = mean_signals(records)
    assert means.shape == (30, 2)
    assert np.allclose(means[:, 0], 0.7)
