"""Parameter estimation from correlator curves.

The main use is recovering a small residual Rabi rate from the antisymmetrized
cross-correlator: its shape is a fixed two-exponential template whose
amplitude is linear in the rate, so the fit is a one-parameter weighted linear
least squares with the decay rates held at their known zero-mismatch values.
A single-exponential log-linear fit of self-correlators is provided as a
diagnostic (useful in the near-aligned regime, where the cross-correlator
decays at twice the jump rate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analytic import CorrelatorCurve, decay_rates
from .errors import InvalidArgumentError, InvalidDataError, UnidentifiableError
from .model import MeasurementSetup

DEFAULT_MAX_LAG = 2.5
_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class FitResult:
    value: float
    stderr: float
    residual_norm: float
    n_points: int


def _select(curve: CorrelatorCurve, lag_range: tuple[float, float] | None,
            exclude_zero: bool) -> CorrelatorCurve:
    if lag_range is None:
        lo = 0.0
        hi = DEFAULT_MAX_LAG
    else:
        lo, hi = lag_range
    sub = curve.restrict(lo, hi)
    if exclude_zero and sub.lags.size and sub.lags[0] == 0.0:
        sub = CorrelatorCurve(
            lags=sub.lags[1:], values=sub.values[1:],
            stderr=None if sub.stderr is None else sub.stderr[1:],
            labels=sub.labels,
        )
    return sub


def _difference_template(half_sum: float, disc: float, lags: np.ndarray) -> np.ndarray:
    """(exp(-gamma_minus t) - exp(-gamma_plus t)) / (gamma_plus - gamma_minus).

    Evaluated through the sinh/sin/linear branches so the degenerate and
    complex-rate cases are handled uniformly.
    """
    q2 = 0.25 * disc
    envelope = np.exp(-half_sum * lags)
    if abs(disc) < _DEGENERATE_TOL:
        return envelope * lags
    if q2 > 0.0:
        q = math.sqrt(q2)
        return envelope * np.sinh(q * lags) / q
    w = math.sqrt(-q2)
    return envelope * np.sin(w * lags) / w


def fit_rabi_mismatch(
    antisym_curve: CorrelatorCurve,
    setup_without_mismatch: MeasurementSetup,
    lag_range: tuple[float, float] | None = None,
) -> FitResult:
    """Recover the residual Rabi rate from K_zphi - K_phiz.

    The model is 2*rate*sin(phi) times the fixed difference-of-exponentials
    template with decay rates computed at zero mismatch.  Weights are the
    inverse squared curve stderr when available, else uniform; in the latter
    case the stderr is scaled from the fit residuals.  Lag 0 carries no
    information (the template vanishes) and is excluded by default, together
    with lags beyond 2.5 us.
    """
    setup0 = replace(
        setup_without_mismatch,
        environment=replace(setup_without_mismatch.environment, rabi_mismatch=0.0),
    )
    sin_phi = math.sin(setup0.phi)
    if sin_phi == 0.0:
        raise UnidentifiableError(
            "sin(phi) = 0: the antisymmetrized cross-correlator vanishes identically"
        )
    sub = _select(antisym_curve, lag_range, exclude_zero=True)
    if sub.lags.size < 2:
        raise InvalidArgumentError("need at least 2 lags in range")

    rates = decay_rates(setup0)
    half_sum = 0.5 * (rates.gamma_plus + rates.gamma_minus).real
    template = _difference_template(half_sum, rates.discriminant, sub.lags)

    y = sub.values
    if sub.stderr is not None and np.all(sub.stderr > 0):
        w = 1.0 / np.square(sub.stderr)
        denom = float(w @ np.square(template))
        if denom == 0.0:
            raise UnidentifiableError("template vanishes over the selected lags")
        amp = float(w @ (template * y)) / denom
        amp_var = 1.0 / denom
    else:
        denom = float(template @ template)
        if denom == 0.0:
            raise UnidentifiableError("template vanishes over the selected lags")
        amp = float(template @ y) / denom
        resid = y - amp * template
        scale = float(resid @ resid) / max(len(y) - 1, 1)
        amp_var = scale / denom

    residual_norm = float(np.linalg.norm(y - amp * template))
    rate = amp / (2.0 * sin_phi)
    stderr = math.sqrt(amp_var) / abs(2.0 * sin_phi)
    return FitResult(value=rate, stderr=stderr, residual_norm=residual_norm,
                     n_points=int(sub.lags.size))


def fit_decay_rate(
    self_curve: CorrelatorCurve,
    lag_range: tuple[float, float] | None = None,
) -> FitResult:
    """Single-exponential rate from a log-linear fit of a positive curve."""
    sub = _select(self_curve, lag_range, exclude_zero=False)
    if sub.lags.size < 2:
        raise InvalidArgumentError("need at least 2 lags in range")
    if np.any(sub.values <= 0):
        raise InvalidDataError("curve must be positive over the fit range")

    t = sub.lags
    logy = np.log(sub.values)
    t_bar = t.mean()
    y_bar = logy.mean()
    sxx = float((t - t_bar) @ (t - t_bar))
    if sxx == 0.0:
        raise InvalidArgumentError("degenerate lag grid")
    slope = float((t - t_bar) @ (logy - y_bar)) / sxx
    resid = logy - (y_bar + slope * (t - t_bar))
    rss = float(resid @ resid)
    n = t.size
    slope_var = (rss / (n - 2)) / sxx if n > 2 else 0.0
    return FitResult(
        value=-slope,
        stderr=math.sqrt(slope_var),
        residual_norm=math.sqrt(rss),
        n_points=int(n),
    )
