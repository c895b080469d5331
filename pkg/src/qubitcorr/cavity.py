"""Classical-field check that amplified resonator output noise stays white.

A damped resonator driven by vacuum noise from its ports filters the field,
yet the outgoing amplified quadrature remains delta-correlated: the lagged
cross term between the incident noise and the resonator field exactly cancels
the resonator field's own correlation.  This module simulates the classical
complex field to verify the cancellation statistically and evaluates both
analytic contributions, which must sum to zero for all parameters.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidArgumentError, InvalidParameterError

MAX_STEP_FRACTION = 0.05


@dataclass(frozen=True)
class ResonatorParams:
    """Resonator damping, output coupling and drive detuning (rad/us).

    kappa_out = 0 (fully decoupled output) is allowed: the outgoing field is
    then the bare reflected noise.
    """

    kappa: float
    kappa_out: float
    detuning: float = 0.0

    def __post_init__(self):
        if not (self.kappa > 0.0 and 0.0 <= self.kappa_out <= self.kappa):
            raise InvalidParameterError("need kappa > 0 and 0 <= kappa_out <= kappa")


def simulate_output_noise(
    params: ResonatorParams, dt: float, duration: float, seed: int
) -> np.ndarray:
    """Samples of Re[F(t)], the amplified outgoing quadrature.

    The complex resonator field is integrated against two independent complex
    vacuum noises (each quadrature has per-step variance 1/(4 dt)); the output
    combines the directly reflected noise with the leaked field.  The field
    starts from a stationary draw, so no burn-in is needed.  Deterministic
    given seed.
    """
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    if dt * params.kappa > MAX_STEP_FRACTION:
        raise InvalidArgumentError(
            f"dt * kappa = {dt * params.kappa:.4g} exceeds {MAX_STEP_FRACTION}"
        )
    n = int(round(duration / dt))
    if n < 1:
        raise InvalidArgumentError("duration shorter than one step")

    rng = np.random.default_rng(seed)
    scale = math.sqrt(1.0 / (4.0 * dt))
    v = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    v_a = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    alpha0 = 0.5 * complex(rng.standard_normal(), rng.standard_normal())

    drive = dt * (
        math.sqrt(params.kappa_out) * v
        + math.sqrt(params.kappa - params.kappa_out) * v_a
    )
    decay = 1.0 + dt * complex(-0.5 * params.kappa, -params.detuning)
    x = np.empty(n, dtype=complex)
    x[0] = alpha0
    x[1:] = drive[:-1]
    alpha = lfilter([1.0], [1.0, -decay], x)

    f = -v + math.sqrt(params.kappa_out) * alpha
    return np.ascontiguousarray(f.real)


def analytic_noise_terms(params: ResonatorParams, tau: float) -> tuple[float, float]:
    """The two lagged contributions to the Re[F] self-correlator (tau > 0).

    The first is the noise-field cross term, the second the field
    self-correlation; their sum vanishes identically.
    """
    if tau <= 0:
        raise InvalidArgumentError("tau must be positive")
    quarter_out = 0.25 * params.kappa_out
    k2 = -quarter_out * cmath.exp(
        complex(-0.5 * params.kappa * tau, -params.detuning * tau)
    ).real
    k3 = (
        quarter_out
        * math.exp(-0.5 * params.kappa * tau)
        * math.cos(params.detuning * tau)
    )
    return k2, k3


def steady_state_fields(
    chi: float, eps: float, omega_rabi: float, kappa: float, detuning: float
) -> tuple[complex, complex]:
    """Steady resonator fields for the two measured qubit eigenstates.

    Returns (alpha_st_1, alpha_st_0) with alpha_st_0 = -alpha_st_1; at zero
    detuning the pair is real.
    """
    if omega_rabi <= 0:
        raise InvalidParameterError("omega_rabi must be positive")
    if kappa <= 0:
        raise InvalidParameterError("kappa must be positive")
    denom = omega_rabi * complex(kappa, 2.0 * detuning)
    alpha1 = chi * eps / denom
    return alpha1, -alpha1


def dephasing_rate(kappa: float, alpha_st_1: complex, alpha_st_0: complex) -> float:
    """Ensemble dephasing rate produced by the field separation."""
    return 0.5 * kappa * abs(alpha_st_1 - alpha_st_0) ** 2


def empirical_lag_correlator(
    samples: np.ndarray, lag_steps: int, n_batches: int = 100
) -> tuple[float, float]:
    """Product mean at a given lag with a batch-mean standard error."""
    if lag_steps < 0:
        raise InvalidArgumentError("lag_steps must be nonnegative")
    x = np.asarray(samples)
    products = x * x if lag_steps == 0 else x[:-lag_steps] * x[lag_steps:]
    n_batches = min(n_batches, products.size)
    usable = (products.size // n_batches) * n_batches
    batches = products[:usable].reshape(n_batches, -1).mean(axis=1)
    stderr = batches.std(ddof=1) / math.sqrt(n_batches) if n_batches > 1 else 0.0
    return float(products.mean()), float(stderr)
