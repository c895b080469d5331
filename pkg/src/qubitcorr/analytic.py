"""Exact ensemble-averaged evolution and closed-form output-signal correlators.

The ensemble-averaged Bloch dynamics of the doubly-monitored qubit is linear:
y decays on its own, and (x, z) evolve under a real 2x2 generator built from
the two channel dephasing rates, the angle between the measurement directions,
the residual Rabi rotation and the environmental damping.  Every correlator
here is evaluated through the closed-form exponential of that generator, which
stays valid when the two decay rates collide or turn into a complex pair;
the explicit decay-rate pair is exposed separately.

Two-time correlators are defined as K_ij(tau) = < I_j(t1 + tau) I_i(t1) >
for tau >= 0; tau = 0 means the right limit, which excludes the white-noise
delta spike of the self-correlators (that spike is a property of the
estimator's lag-0 bin, never of the analytic curves).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .model import BlochVector, MeasurementChannel, MeasurementSetup, require_valid

# Radicand magnitudes below this use the defective (equal-rate) limit.
_DEGENERATE_TOL = 1e-12


def expm_2x2(m: np.ndarray, t: float) -> np.ndarray:
    """Closed-form exp(m t) for a real 2x2 matrix.

    Decomposes m = mu*I + D with traceless D and uses the cosh/cos branch of
    exp(D t) depending on the sign of det(-D); the near-degenerate case falls
    back to the linear (defective) limit I + D t.
    """
    m00, m01, m10, m11 = float(m[0][0]), float(m[0][1]), float(m[1][0]), float(m[1][1])
    mu = 0.5 * (m00 + m11)
    d00 = m00 - mu
    d11 = m11 - mu
    # q2 = q^2 where +-q are the eigenvalues of the traceless part
    q2 = d00 * d00 + m01 * m10
    if 4.0 * abs(q2) < _DEGENERATE_TOL:
        ch = 1.0
        sh_over_q = t
    elif q2 > 0.0:
        q = math.sqrt(q2)
        ch = math.cosh(q * t)
        sh_over_q = math.sinh(q * t) / q
    else:
        w = math.sqrt(-q2)
        ch = math.cos(w * t)
        sh_over_q = math.sin(w * t) / w
    scale = math.exp(mu * t)
    return scale * np.array(
        [
            [ch + sh_over_q * d00, sh_over_q * m01],
            [sh_over_q * m10, ch + sh_over_q * d11],
        ]
    )


@dataclass(frozen=True)
class EvolutionGenerator:
    """Generator of the ensemble-averaged (x, z) dynamics plus the y decay rate."""

    m: np.ndarray
    gamma_y: float

    def propagator(self, t: float) -> np.ndarray:
        return expm_2x2(self.m, t)


@dataclass(frozen=True)
class DecayRates:
    """Decay-rate pair of the averaged (x, z) dynamics.

    gamma_plus and gamma_minus are floats when the discriminant (the radicand
    of the rate formula) is nonnegative, with gamma_plus >= gamma_minus; for a
    negative discriminant they are a complex-conjugate pair.
    """

    gamma_plus: complex
    gamma_minus: complex
    discriminant: float

    @property
    def is_real(self) -> bool:
        return self.discriminant >= 0.0


@dataclass(frozen=True)
class CorrelatorCurve:
    """Correlator values on a lag grid, with optional per-lag standard errors."""

    lags: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    labels: tuple[str, str] = ("z", "z")

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))
        if lags.ndim != 1 or values.shape != lags.shape:
            raise InvalidArgumentError("lags and values must be 1-d arrays of equal length")
        if self.stderr is not None and self.stderr.shape != lags.shape:
            raise InvalidArgumentError("stderr must match the lag grid")
        if lags.size and (lags[0] < 0 or np.any(np.diff(lags) <= 0)):
            raise InvalidArgumentError("lags must be nonnegative and strictly increasing")

    def restrict(self, lo: float, hi: float) -> "CorrelatorCurve":
        """Sub-curve with lo <= lag <= hi (small tolerance on the bounds)."""
        eps = 1e-12
        mask = (self.lags >= lo - eps) & (self.lags <= hi + eps)
        return CorrelatorCurve(
            lags=self.lags[mask],
            values=self.values[mask],
            stderr=None if self.stderr is None else self.stderr[mask],
            labels=self.labels,
        )


def _channel(setup: MeasurementSetup, label: str) -> MeasurementChannel:
    if label == "z":
        return setup.channel_z
    if label == "phi":
        return setup.channel_phi
    raise InvalidArgumentError(f"unknown channel label {label!r}; use 'z' or 'phi'")


def _axis(channel: MeasurementChannel) -> tuple[float, float]:
    return math.cos(channel.angle), math.sin(channel.angle)


def observable_mean(state: BlochVector, channel: MeasurementChannel) -> float:
    """Tr[sigma_a rho] for the observable at the channel's angle."""
    c, s = _axis(channel)
    return state.z * c + state.x * s


def eigenstate(channel: MeasurementChannel, outcome: int = +1) -> BlochVector:
    """Bloch vector of the +-1 eigenstate of the channel's observable."""
    c, s = _axis(channel)
    return BlochVector(outcome * s, 0.0, outcome * c)


def build_generator(setup: MeasurementSetup) -> EvolutionGenerator:
    """Assemble the averaged-evolution generator for (x, z) and the y rate.

    Each channel contributes dephasing toward its own axis; the environment
    adds isotropic xz damping and the residual y-axis rotation.
    """
    require_valid(setup)
    env = setup.environment
    gamma_env = env.gamma
    omega = env.rabi_mismatch
    m = np.array([[-gamma_env, omega], [-omega, -gamma_env]])
    for ch in (setup.channel_z, setup.channel_phi):
        c, s = _axis(ch)
        g = ch.gamma
        m += np.array([[-g * c * c, g * c * s], [g * c * s, -g * s * s]])
    gamma_y = setup.channel_z.gamma + setup.channel_phi.gamma + env.t2_rate
    return EvolutionGenerator(m=m, gamma_y=gamma_y)


def decay_rates(setup: MeasurementSetup) -> DecayRates:
    """Decay-rate pair from the channel rates, relative angle and damping."""
    require_valid(setup)
    gz = setup.channel_z.gamma
    gp = setup.channel_phi.gamma
    phi = setup.phi
    omega = setup.environment.rabi_mismatch
    gamma_env = setup.environment.gamma
    disc = gz * gz + gp * gp + 2.0 * gz * gp * math.cos(2.0 * phi) - 4.0 * omega * omega
    half_sum = 0.5 * (gz + gp) + gamma_env
    if disc >= 0.0:
        root = 0.5 * math.sqrt(disc)
        return DecayRates(half_sum + root, half_sum - root, disc)
    root = 0.5 * cmath.sqrt(disc)
    return DecayRates(half_sum + root, half_sum - root, disc)


def propagate_average(state: BlochVector, t: float, setup: MeasurementSetup) -> BlochVector:
    """Ensemble-averaged Bloch vector after time t.

    (x, z) are propagated by the closed-form matrix exponential of the
    generator (valid for real, complex and degenerate rate pairs); y decays
    exponentially on its own.
    """
    if t < 0:
        raise InvalidArgumentError("t must be nonnegative")
    gen = build_generator(setup)
    u = gen.propagator(t)
    x = u[0, 0] * state.x + u[0, 1] * state.z
    z = u[1, 0] * state.x + u[1, 1] * state.z
    y = state.y * math.exp(-gen.gamma_y * t)
    return BlochVector(x, y, z)


def correlator_closed_form(setup: MeasurementSetup, i: str, j: str, tau: float) -> float:
    """K_ij(tau) for the unital averaged evolution.

    Computed as Tr[sigma_j rho_av(tau | +1 eigenstate of sigma_i)], which for
    real distinct rates reproduces the explicit two-exponential expressions.
    tau = 0 gives the right limit (no delta spike).
    """
    if tau < 0:
        raise InvalidArgumentError("tau must be nonnegative; use K_ij(-tau) = K_ji(tau)")
    ch_i = _channel(setup, i)
    ch_j = _channel(setup, j)
    evolved = propagate_average(eigenstate(ch_i, +1), tau, setup)
    return observable_mean(evolved, ch_j)


def correlator_collapse_recipe(
    setup: MeasurementSetup, i: str, j: str, tau: float, rho_t1: BlochVector
) -> float:
    """K_ij(tau) via projective replacement of the earlier measurement.

    Both projection outcomes are propagated and weighted by their Born
    probabilities given rho_t1, so the formula stays correct for non-unital
    averaged evolutions; for the unital evolution implemented here the result
    is independent of rho_t1.
    """
    if tau < 0:
        raise InvalidArgumentError("tau must be nonnegative; use K_ij(-tau) = K_ji(tau)")
    ch_i = _channel(setup, i)
    ch_j = _channel(setup, j)
    mean_i = observable_mean(rho_t1, ch_i)
    p_plus = 0.5 * (1.0 + mean_i)
    p_minus = 0.5 * (1.0 - mean_i)
    k_plus = observable_mean(propagate_average(eigenstate(ch_i, +1), tau, setup), ch_j)
    k_minus = observable_mean(propagate_average(eigenstate(ch_i, -1), tau, setup), ch_j)
    return k_plus * p_plus - k_minus * p_minus


def zeno_jump_rate(setup: MeasurementSetup) -> float:
    """Rate of jumps between the pinned states for nearly-aligned axes.

    Intended for |phi| << 1; the formula is evaluated as given for any phi.
    """
    require_valid(setup)
    gz = setup.channel_z.gamma
    gp = setup.channel_phi.gamma
    phi = setup.phi
    omega = setup.environment.rabi_mismatch
    env = setup.environment
    return (phi * phi * gz * gp + omega * omega) / (2.0 * (gz + gp)) + 0.25 * (
        1.0 / env.t1 + 1.0 / env.t2
    )


def antisym_cross_correlator(setup: MeasurementSetup, tau: float) -> float:
    """K_zphi(tau) - K_phiz(tau); proportional to the residual Rabi rate."""
    return correlator_closed_form(setup, "z", "phi", tau) - correlator_closed_form(
        setup, "phi", "z", tau
    )


PAIR_LABELS = (("z", "z"), ("z", "phi"), ("phi", "z"), ("phi", "phi"))


def analytic_curves(
    setup: MeasurementSetup, max_lag: float, dt: float,
    pairs: tuple[tuple[str, str], ...] = PAIR_LABELS,
) -> dict[tuple[str, str], CorrelatorCurve]:
    """Closed-form curves for the requested pairs on a uniform lag grid."""
    if dt <= 0 or max_lag < 0:
        raise InvalidArgumentError("dt must be positive and max_lag nonnegative")
    n_lags = int(math.floor(max_lag / dt + 1e-9)) + 1
    lags = np.arange(n_lags) * dt
    out = {}
    for i, j in pairs:
        values = np.array([correlator_closed_form(setup, i, j, tau) for tau in lags])
        out[(i, j)] = CorrelatorCurve(lags=lags, values=values, labels=(i, j))
    return out
