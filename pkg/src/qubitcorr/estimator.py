"""Correlator reconstruction from trace ensembles, as done for measured data.

The estimator mirrors the experimental pipeline: recorded signals are related
to the normalized ones by I_tilde = (response/2) * I + offset, so every
product is offset-subtracted and divided by (response_i/2)(response_j/2).
With the identity calibration (response 2, offset 0) this reduces to the
plain product mean of normalized signals.

Averaging runs over the ensemble and over the start time t1 inside a window
[t_a, t_b), discretized on the sample grid (inclusive of t_a, exclusive of
t_b).  Per-lag standard errors come from a trace-level bootstrap: samples
within a trace are strongly correlated, but traces are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .analytic import CorrelatorCurve, observable_mean, propagate_average
from .errors import (
    EmptyEnsembleError,
    InvalidArgumentError,
    InvalidParameterError,
    InvalidWindowError,
    UnidentifiableError,
)
from .model import BlochVector, MeasurementSetup
from .trajectory import TraceRecord

_CHANNEL_INDEX = {"z": 0, "phi": 1}
_TIME_TOL = 1e-9


@dataclass(frozen=True)
class EstimatorWindow:
    """Time-averaging window for the correlator start time plus the lag span."""

    t_a: float
    t_b: float
    max_lag: float

    def __post_init__(self):
        if not (0.0 <= self.t_a < self.t_b):
            raise InvalidWindowError(f"need 0 <= t_a < t_b, got [{self.t_a}, {self.t_b})")
        if self.max_lag < 0:
            raise InvalidWindowError("max_lag must be nonnegative")


@dataclass(frozen=True)
class Calibration:
    """Per-channel response and offset of the recorded signals."""

    response_z: float = 2.0
    response_phi: float = 2.0
    offset_z: float = 0.0
    offset_phi: float = 0.0

    def __post_init__(self):
        if self.response_z <= 0 or self.response_phi <= 0:
            raise InvalidParameterError("responses must be positive")

    @classmethod
    def identity(cls) -> "Calibration":
        return cls()

    def response(self, channel: str) -> float:
        return self.response_z if channel == "z" else self.response_phi

    def offset(self, channel: str) -> float:
        return self.offset_z if channel == "z" else self.offset_phi


@dataclass(frozen=True)
class ResponseFit:
    """Fitted responses with least-squares residual norms."""

    response_z: float
    response_phi: float
    residual_norm_z: float
    residual_norm_phi: float


@dataclass(frozen=True)
class OffsetEstimate:
    """Per-channel offsets with ensemble standard errors and the time variation
    of the symmetric group combination (a stationarity diagnostic)."""

    offset_z: float
    offset_phi: float
    stderr_z: float
    stderr_phi: float
    variation_z: float
    variation_phi: float


def _check_ensemble(traces: Sequence[TraceRecord]) -> tuple[float, int]:
    if len(traces) == 0:
        raise EmptyEnsembleError("ensemble is empty")
    dt = traces[0].dt
    n_samples = traces[0].n_samples
    for t in traces:
        if abs(t.dt - dt) > _TIME_TOL or t.n_samples != n_samples:
            raise InvalidArgumentError("traces must share dt and sample count")
    return dt, n_samples


def _grid(window: EstimatorWindow, dt: float, n_samples: int) -> tuple[int, int, int]:
    """Window sample indices [i_a, i_b) and the lag count, with bound checks."""
    duration = n_samples * dt
    if window.t_b + window.max_lag > duration + _TIME_TOL:
        raise InvalidWindowError(
            f"t_b + max_lag = {window.t_b + window.max_lag:.6g} exceeds duration {duration:.6g}"
        )
    i_a = int(round(window.t_a / dt))
    i_b = int(round(window.t_b / dt))
    n_lags = int(math.floor(window.max_lag / dt + _TIME_TOL)) + 1
    if i_b <= i_a:
        raise InvalidWindowError("window shorter than one sample")
    if i_b + n_lags - 1 > n_samples:
        raise InvalidWindowError("window plus lags exceeds the trace")
    return i_a, i_b, n_lags


def _stack(traces: Sequence[TraceRecord], channel: int, lo: int, hi: int) -> np.ndarray:
    return np.stack([t.samples[lo:hi, channel] for t in traces])


def _normalize(raw: np.ndarray, response: float, offset: float) -> np.ndarray:
    if response == 2.0 and offset == 0.0:
        return raw
    return (raw - offset) / (0.5 * response)


def _per_trace_curves(a_win: np.ndarray, b_ext: np.ndarray, n_lags: int) -> np.ndarray:
    """Per-trace lag curves: mean over t1 of a(t1) b(t1 + lag)."""
    windows = np.lib.stride_tricks.sliding_window_view(b_ext, n_lags, axis=1)
    curves = np.matmul(a_win[:, None, :], windows)[:, 0, :]
    return curves / a_win.shape[1]


def _bootstrap_mean_stderr(rows: np.ndarray, n_resamples: int, seed: int) -> np.ndarray:
    """Trace-level bootstrap stderr of the column means of rows."""
    n = rows.shape[0]
    if n < 2:
        return np.zeros(rows.shape[1])
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, np.full(n, 1.0 / n), size=n_resamples).astype(float)
    means = counts @ rows / n
    return means.std(axis=0, ddof=1)


def estimate_correlator(
    traces: Sequence[TraceRecord],
    i: str,
    j: str,
    window: EstimatorWindow,
    calibration: Calibration | None = None,
    *,
    stderr_resamples: int = 100,
    stderr_seed: int = 0,
) -> CorrelatorCurve:
    """Estimate K_ij on the lag grid {0, dt, ..., max_lag}.

    K_ij(lag) = mean over traces and window start times of the product of the
    calibrated channel-i signal at t1 and channel-j signal at t1 + lag.  The
    lag-0 bin of a self-correlator contains the white-noise variance tau_i/dt
    on top of the physical value.
    """
    if i not in _CHANNEL_INDEX or j not in _CHANNEL_INDEX:
        raise InvalidArgumentError("channel labels must be 'z' or 'phi'")
    dt, n_samples = _check_ensemble(traces)
    i_a, i_b, n_lags = _grid(window, dt, n_samples)
    cal = calibration or Calibration.identity()

    a = _normalize(_stack(traces, _CHANNEL_INDEX[i], i_a, i_b), cal.response(i), cal.offset(i))
    b = _normalize(
        _stack(traces, _CHANNEL_INDEX[j], i_a, i_b + n_lags - 1),
        cal.response(j),
        cal.offset(j),
    )
    curves = _per_trace_curves(a, b, n_lags)
    values = curves.mean(axis=0)
    stderr = _bootstrap_mean_stderr(curves, stderr_resamples, stderr_seed)
    lags = np.arange(n_lags) * dt
    return CorrelatorCurve(lags=lags, values=values, stderr=stderr, labels=(i, j))


def estimate_all_pairs(
    traces: Sequence[TraceRecord],
    window: EstimatorWindow,
    calibration: Calibration | None = None,
    *,
    pairs: Sequence[tuple[str, str]] = (("z", "z"), ("z", "phi"), ("phi", "z"), ("phi", "phi")),
    stderr_resamples: int = 100,
    stderr_seed: int = 0,
) -> dict[tuple[str, str], CorrelatorCurve]:
    return {
        (i, j): estimate_correlator(
            traces, i, j, window, calibration,
            stderr_resamples=stderr_resamples, stderr_seed=stderr_seed,
        )
        for i, j in pairs
    }


def mean_signals(traces: Sequence[TraceRecord]) -> np.ndarray:
    """Ensemble-averaged (n_samples, 2) record."""
    _check_ensemble(traces)
    acc = np.zeros_like(traces[0].samples)
    for t in traces:
        acc += t.samples
    return acc / len(traces)


def _group_midpoint_state(setup: MeasurementSetup) -> BlochVector:
    """Initialization axis midway between the two measurement directions."""
    mid = 0.5 * (setup.channel_z.angle + setup.channel_phi.angle)
    return BlochVector(math.sin(mid), 0.0, math.cos(mid))


def calibrate_response(
    ensemble_z0_plus: Sequence[TraceRecord],
    ensemble_z0_minus: Sequence[TraceRecord],
    setup: MeasurementSetup,
) -> ResponseFit:
    """Fit the per-channel responses from the group-difference signals.

    The two groups start in the +-1 states along the axis midway between the
    measurement directions.  The difference of the ensemble-averaged records
    equals response_i times the averaged-evolution prediction for channel i,
    so a scalar least-squares fit per channel recovers the responses.
    """
    dt, n_samples = _check_ensemble(ensemble_z0_plus)
    dt_m, n_m = _check_ensemble(ensemble_z0_minus)
    if abs(dt - dt_m) > _TIME_TOL or n_samples != n_m:
        raise InvalidArgumentError("groups must share dt and sample count")

    diff = mean_signals(ensemble_z0_plus) - mean_signals(ensemble_z0_minus)

    s0 = _group_midpoint_state(setup)
    model = np.empty((n_samples, 2))
    for n in range(n_samples):
        state = propagate_average(s0, n * dt, setup)
        model[n, 0] = observable_mean(state, setup.channel_z)
        model[n, 1] = observable_mean(state, setup.channel_phi)

    responses = []
    residuals = []
    for c in range(2):
        mm = float(model[:, c] @ model[:, c])
        dd = float(diff[:, c] @ diff[:, c])
        if mm < 1e-20 * n_samples:
            raise UnidentifiableError("model response vanishes over the trace")
        if dd == 0.0:
            raise UnidentifiableError("zero group difference; responses unidentifiable")
        r = float(model[:, c] @ diff[:, c]) / mm
        responses.append(r)
        residuals.append(float(np.linalg.norm(diff[:, c] - r * model[:, c])))
    return ResponseFit(responses[0], responses[1], residuals[0], residuals[1])


def estimate_offsets(
    ensemble_z0_plus: Sequence[TraceRecord],
    ensemble_z0_minus: Sequence[TraceRecord],
) -> OffsetEstimate:
    """Offsets from the symmetric group combination.

    For symmetric +-1 initialization the state-dependent means cancel in
    S(t) = (mean_plus(t) + mean_minus(t)) / 2, leaving the offsets.  The
    quoted stderr is ensemble-based; the time variation of S is returned as a
    stationarity diagnostic.
    """
    _check_ensemble(ensemble_z0_plus)
    _check_ensemble(ensemble_z0_minus)
    s_plus = mean_signals(ensemble_z0_plus)
    s_minus = mean_signals(ensemble_z0_minus)
    sym = 0.5 * (s_plus + s_minus)
    offsets = sym.mean(axis=0)
    variation = sym.std(axis=0)

    stderr = []
    for c in range(2):
        tm_plus = np.array([t.samples[:, c].mean() for t in ensemble_z0_plus])
        tm_minus = np.array([t.samples[:, c].mean() for t in ensemble_z0_minus])
        var = 0.0
        for tm in (tm_plus, tm_minus):
            if tm.size > 1:
                var += tm.var(ddof=1) / tm.size
        stderr.append(0.5 * math.sqrt(var))
    return OffsetEstimate(
        offset_z=float(offsets[0]),
        offset_phi=float(offsets[1]),
        stderr_z=stderr[0],
        stderr_phi=stderr[1],
        variation_z=float(variation[0]),
        variation_phi=float(variation[1]),
    )


def bootstrap_stderr(
    traces: Sequence[TraceRecord],
    statistic: Callable[[Sequence[TraceRecord]], CorrelatorCurve],
    n_resamples: int,
    seed: int,
) -> np.ndarray:
    """Trace-level bootstrap stderr of an arbitrary CorrelatorCurve statistic.

    Whole traces are resampled with replacement; deterministic given seed.
    A one-trace ensemble always resamples to itself, so its stderr is zero.
    """
    if n_resamples < 2:
        raise InvalidArgumentError("need at least 2 resamples")
    if len(traces) == 0:
        raise EmptyEnsembleError("ensemble is empty")
    rng = np.random.default_rng(seed)
    n = len(traces)
    stack = []
    for _ in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        stack.append(statistic([traces[k] for k in idx]).values)
    return np.asarray(stack).std(axis=0, ddof=1)
