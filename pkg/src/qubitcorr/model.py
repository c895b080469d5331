"""Domain types and parameter validation for two-channel continuous qubit measurement.

Conventions used throughout the package: rates are in 1/us (angular rates in
rad/us), times in us, and the detector outputs are dimensionless, normalized so
that the signal mean is Tr[sigma_i rho] and the noise spectral density is tau_i.
Channel directions are angles in the Bloch xz-plane measured from the z-axis;
the first channel is nominally at angle 0 and the second at angle phi.

All types are immutable value objects and safe to share across threads.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

from .errors import InvalidArgumentError, InvalidParameterError

# Tolerated Bloch-norm excess after radial projection (float roundoff margin).
PURITY_TOL = 1e-6

# dt * (fastest rate) thresholds: hard validation failure and soft warning.
STEP_SCALE_LIMIT = 0.05
STEP_SCALE_WARN = 0.01

SCHEMES = ("ito", "stratonovich")


def normalize_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.fmod(angle, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class BlochVector:
    """Qubit state as Bloch coordinates, rho = (1 + x sx + y sy + z sz)/2."""

    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def is_physical(self, tol: float = PURITY_TOL) -> bool:
        return self.norm() <= 1.0 + tol

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def __iter__(self):
        return iter((self.x, self.y, self.z))


@dataclass(frozen=True)
class MeasurementChannel:
    """One weak-measurement channel.

    Parameters
    ----------
    gamma : float
        Ensemble dephasing rate of the channel (1/us).
    tau_m : float
        Measurement (collapse) time for unit signal-to-noise (us).
    angle : float
        Direction of the measured observable in the Bloch xz-plane,
        measured from the z-axis (rad).
    """

    gamma: float
    tau_m: float
    angle: float = 0.0

    @property
    def efficiency(self) -> float:
        """Quantum efficiency eta = 1 / (2 tau_m gamma)."""
        return 1.0 / (2.0 * self.tau_m * self.gamma)

    @classmethod
    def from_efficiency(cls, gamma: float, eta: float, angle: float = 0.0) -> "MeasurementChannel":
        """Build a channel from (gamma, eta) instead of (gamma, tau_m)."""
        if gamma <= 0 or eta <= 0:
            raise InvalidParameterError("gamma and eta must be positive")
        return cls(gamma=gamma, tau_m=1.0 / (2.0 * eta * gamma), angle=angle)


@dataclass(frozen=True)
class QubitEnvironment:
    """Decoherence times and residual Rabi rotation of the effective qubit.

    t1 and t2 may be math.inf for a decoherence-free qubit.  rabi_mismatch is
    the residual rotation rate about the y-axis (rad/us), i.e. the difference
    between the physical Rabi frequency and the rotating-frame frequency.
    """

    t1: float = math.inf
    t2: float = math.inf
    rabi_mismatch: float = 0.0

    @property
    def gamma(self) -> float:
        """Isotropic xz damping rate (1/T1 + 1/T2) / 2."""
        return 0.5 * (1.0 / self.t1 + 1.0 / self.t2)

    @property
    def t2_rate(self) -> float:
        return 1.0 / self.t2

    @property
    def pure_dephasing_rate(self) -> float:
        """1/T_pd = 1/T2 - 1/(2 T1); nonnegative for valid (t1, t2)."""
        return 1.0 / self.t2 - 0.5 / self.t1


@dataclass(frozen=True)
class MeasurementSetup:
    """The full physical configuration: two channels plus the environment."""

    channel_z: MeasurementChannel
    channel_phi: MeasurementChannel
    environment: QubitEnvironment = field(default_factory=QubitEnvironment)

    @property
    def phi(self) -> float:
        """Angle between the two measurement directions, wrapped to (-pi, pi]."""
        return normalize_angle(self.channel_phi.angle - self.channel_z.angle)

    @classmethod
    def from_rates(
        cls,
        gamma_z: float,
        gamma_phi: float,
        phi: float,
        *,
        tau_z: float | None = None,
        tau_phi: float | None = None,
        eta_z: float | None = None,
        eta_phi: float | None = None,
        t1: float = math.inf,
        t2: float = math.inf,
        rabi_mismatch: float = 0.0,
    ) -> "MeasurementSetup":
        """Convenience constructor; give each channel either tau or eta (default eta=1)."""

        def make(gamma, tau, eta, angle):
            if tau is not None and eta is not None:
                raise InvalidParameterError("give tau or eta per channel, not both")
            if tau is None:
                tau = 1.0 / (2.0 * (1.0 if eta is None else eta) * gamma)
            return MeasurementChannel(gamma=gamma, tau_m=tau, angle=angle)

        return cls(
            channel_z=make(gamma_z, tau_z, eta_z, 0.0),
            channel_phi=make(gamma_phi, tau_phi, eta_phi, phi),
            environment=QubitEnvironment(t1=t1, t2=t2, rabi_mismatch=rabi_mismatch),
        )

    def rotated(self, angle_add: float) -> "MeasurementSetup":
        """Add the same angle to both measurement directions (y-rotation)."""
        return replace(
            self,
            channel_z=replace(self.channel_z, angle=self.channel_z.angle + angle_add),
            channel_phi=replace(self.channel_phi, angle=self.channel_phi.angle + angle_add),
        )


@dataclass(frozen=True)
class SimulationConfig:
    """Integration and ensemble parameters for trace generation."""

    dt: float = 0.004
    duration: float = 5.0
    n_traces: int = 1
    master_seed: int = 0
    initial_state: BlochVector = field(default_factory=lambda: BlochVector(0.0, 0.0, 1.0))
    scheme: str = "ito"

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def effective_angle_correction(kappa_z: float, kappa_phi: float, omega_rabi: float) -> float:
    """Shift of the angle between the measured directions from finite resonator bandwidths.

    Each resonator's finite bandwidth kappa rotates its measured direction by
    kappa / (2 Omega_R); only the difference matters for the relative angle.

    Parameters
    ----------
    kappa_z, kappa_phi : float
        Resonator damping rates of the two channels (rad/us).
    omega_rabi : float
        Rabi drive frequency (rad/us); must be positive.

    Returns
    -------
    float
        delta_phi = (kappa_phi - kappa_z) / (2 omega_rabi), in rad.
    """
    if omega_rabi <= 0:
        raise InvalidParameterError("omega_rabi must be positive")
    return (kappa_phi - kappa_z) / (2.0 * omega_rabi)


def _validate_channel(name: str, ch: MeasurementChannel, violations: list[str]) -> None:
    if not ch.gamma > 0:
        violations.append(f"{name}: gamma must be positive, got {ch.gamma}")
    if not ch.tau_m > 0:
        violations.append(f"{name}: tau_m must be positive, got {ch.tau_m}")
    if ch.gamma > 0 and ch.tau_m > 0:
        eta = ch.efficiency
        if not 0.0 < eta <= 1.0:
            violations.append(
                f"{name}: efficiency eta = 1/(2 tau gamma) = {eta:.6g} outside (0, 1]"
            )


def validate_setup(setup: MeasurementSetup, config: SimulationConfig | None = None) -> list[str]:
    """Collect every violated invariant of a setup (and optionally a config).

    Returns an empty list when everything is consistent.  Pure with respect to
    the returned violations; a soft warning is emitted when the integration
    step is larger than the recommended fraction of the fastest timescale.
    """
    violations: list[str] = []
    _validate_channel("channel_z", setup.channel_z, violations)
    _validate_channel("channel_phi", setup.channel_phi, violations)

    env = setup.environment
    if not env.t1 > 0:
        violations.append(f"environment: t1 must be positive, got {env.t1}")
    if not env.t2 > 0:
        violations.append(f"environment: t2 must be positive, got {env.t2}")
    if env.t1 > 0 and env.t2 > 0 and not env.t2 <= 2.0 * env.t1:
        violations.append(
            f"environment: t2 <= 2*t1 violated (t2 = {env.t2}, 2*t1 = {2.0 * env.t1}); "
            "pure dephasing rate would be negative"
        )

    if config is not None:
        if not config.dt > 0:
            violations.append(f"config: dt must be positive, got {config.dt}")
        if not config.duration > 0:
            violations.append(f"config: duration must be positive, got {config.duration}")
        elif config.dt > 0 and config.n_steps < 1:
            violations.append("config: duration shorter than one step")
        if config.n_traces < 0:
            violations.append(f"config: n_traces must be nonnegative, got {config.n_traces}")
        if not 0 <= config.master_seed < 2**64:
            violations.append("config: master_seed must fit in 64 bits")
        if config.scheme not in SCHEMES:
            violations.append(f"config: unknown scheme {config.scheme!r}")
        if not config.initial_state.is_physical():
            violations.append(
                f"config: initial state norm {config.initial_state.norm():.6g} exceeds 1"
            )
        if config.dt > 0:
            fastest = max(
                setup.channel_z.gamma,
                setup.channel_phi.gamma,
                abs(env.rabi_mismatch),
                1.0 / env.t1,
                1.0 / env.t2,
            )
            scale = config.dt * fastest
            if scale > STEP_SCALE_LIMIT:
                violations.append(
                    f"config: dt * fastest rate = {scale:.4g} exceeds {STEP_SCALE_LIMIT}"
                )
            elif scale > STEP_SCALE_WARN:
                warnings.warn(
                    f"dt * fastest rate = {scale:.4g} above {STEP_SCALE_WARN}; "
                    "discretization bias may be noticeable",
                    stacklevel=2,
                )
    return violations


def require_valid(setup: MeasurementSetup, config: SimulationConfig | None = None) -> None:
    """Raise InvalidParameterError when validate_setup reports violations."""
    violations = validate_setup(setup, config)
    if violations:
        raise InvalidParameterError("; ".join(violations))


# Flat JSON document shared by the CLI and the trace-file header.
_CONFIG_KEYS = (
    "gamma_z", "gamma_phi", "tau_z", "tau_phi", "phi", "rabi_mismatch",
    "t1", "t2", "dt", "duration", "n_traces", "master_seed", "scheme",
    "initial_state",
)


def setup_config_to_dict(setup: MeasurementSetup, config: SimulationConfig) -> dict:
    """Serialize to the flat JSON document (see _CONFIG_KEYS)."""
    s = config.initial_state
    return {
        "gamma_z": setup.channel_z.gamma,
        "gamma_phi": setup.channel_phi.gamma,
        "tau_z": setup.channel_z.tau_m,
        "tau_phi": setup.channel_phi.tau_m,
        "phi": setup.phi,
        "rabi_mismatch": setup.environment.rabi_mismatch,
        "t1": setup.environment.t1,
        "t2": setup.environment.t2,
        "dt": config.dt,
        "duration": config.duration,
        "n_traces": config.n_traces,
        "master_seed": config.master_seed,
        "scheme": config.scheme,
        "initial_state": [s.x, s.y, s.z],
    }


def setup_config_from_dict(doc: dict) -> tuple[MeasurementSetup, SimulationConfig]:
    """Parse the flat JSON document; unknown or missing keys are rejected."""
    unknown = sorted(set(doc) - set(_CONFIG_KEYS))
    if unknown:
        raise InvalidArgumentError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(set(_CONFIG_KEYS) - set(doc))
    if missing:
        raise InvalidArgumentError(f"missing config keys: {', '.join(missing)}")
    state = doc["initial_state"]
    if not (isinstance(state, (list, tuple)) and len(state) == 3):
        raise InvalidArgumentError("initial_state must be a [x, y, z] triple")
    setup = MeasurementSetup(
        channel_z=MeasurementChannel(gamma=float(doc["gamma_z"]), tau_m=float(doc["tau_z"]), angle=0.0),
        channel_phi=MeasurementChannel(
            gamma=float(doc["gamma_phi"]), tau_m=float(doc["tau_phi"]), angle=float(doc["phi"])
        ),
        environment=QubitEnvironment(
            t1=float(doc["t1"]), t2=float(doc["t2"]), rabi_mismatch=float(doc["rabi_mismatch"])
        ),
    )
    config = SimulationConfig(
        dt=float(doc["dt"]),
        duration=float(doc["duration"]),
        n_traces=int(doc["n_traces"]),
        master_seed=int(doc["master_seed"]),
        initial_state=BlochVector(*(float(c) for c in state)),
        scheme=str(doc["scheme"]),
    )
    return setup, config


def load_config(path) -> tuple[MeasurementSetup, SimulationConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        return setup_config_from_dict(json.load(fh))


def dump_config(setup: MeasurementSetup, config: SimulationConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(setup_config_to_dict(setup, config), fh, indent=2)
        fh.write("\n")
