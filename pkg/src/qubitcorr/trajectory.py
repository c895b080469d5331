"""Stochastic trajectory integration and detector-record generation.

The qubit state diffuses under the informational backaction of the two
measurement channels while the sampled records combine the measured means
with white noise.  The same Gaussian draw drives the backaction and the
output noise within a step; this correlation is what the signal correlators
measure, so it must never be broken.

Integration schemes: Euler-Maruyama on the Ito-form equations, or a Heun
predictor-corrector on the Stratonovich-form equations driven by the record
values themselves.  After each step the state is radially projected onto the
unit sphere whenever discretization pushed it outside; projections are
counted per trace.

Reproducibility: every trace draws from its own counter-based stream keyed by
(master_seed, trace_index), so any trace can be regenerated independently and
ensemble results do not depend on scheduling or worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analytic import observable_mean
from .errors import IntegrationDivergedError, InvalidArgumentError
from .model import BlochVector, MeasurementSetup, SimulationConfig, require_valid

DEFAULT_BLOCK_SIZE = 1024


@dataclass(frozen=True)
class NoiseDraw:
    """Per-step standard-normal pair driving the (z, phi) channels."""

    xi_z: float
    xi_phi: float


@dataclass(frozen=True)
class TraceRecord:
    """One realization's sampled records plus integration metadata.

    samples[n] holds (I_z, I_phi) for the interval [n dt, (n+1) dt); seed is
    the per-trace stream id (the trace index under the ensemble master seed).
    """

    dt: float
    samples: np.ndarray
    seed: int
    projections: int
    state_path: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return self.n_samples * self.dt


def kernel_params(setup: MeasurementSetup, dt: float) -> tuple:
    """Precompute the flat parameter tuple shared by both kernel backends."""
    chz, chp = setup.channel_z, setup.channel_phi
    env = setup.environment
    return (
        chz.gamma, 1.0 / math.sqrt(chz.tau_m), math.sqrt(chz.tau_m / dt),
        math.cos(chz.angle), math.sin(chz.angle),
        chp.gamma, 1.0 / math.sqrt(chp.tau_m), math.sqrt(chp.tau_m / dt),
        math.cos(chp.angle), math.sin(chp.angle),
        env.rabi_mismatch, env.gamma,
        chz.gamma + chp.gamma + env.t2_rate,
        1.0 / chz.tau_m, 1.0 / chp.tau_m,
        chz.gamma - 0.5 / chz.tau_m, chp.gamma - 0.5 / chp.tau_m,
        env.t2_rate,
    )


def _channel_drift(state: BlochVector, gamma: float, angle: float):
    c, s = math.cos(angle), math.sin(angle)
    xk = state.x * c - state.z * s
    return (-gamma * xk * c, -gamma * state.y, gamma * xk * s)


def _channel_diffusion(state: BlochVector, tau_m: float, angle: float) -> BlochVector:
    c, s = math.cos(angle), math.sin(angle)
    it = 1.0 / math.sqrt(tau_m)
    zk = state.z * c + state.x * s
    xk = state.x * c - state.z * s
    one_m = 1.0 - zk * zk
    return BlochVector(
        it * (one_m * s - xk * zk * c),
        -(it * (state.y * zk)),
        it * (one_m * c + xk * zk * s),
    )


def ito_drift(state: BlochVector, setup: MeasurementSetup) -> BlochVector:
    """Deterministic part of the Ito-form Bloch equations (rates in 1/us).

    Sum of the measurement-dephasing terms of both channels, the residual
    Rabi rotation about y, and the environmental damping.
    """
    env = setup.environment
    dx = env.rabi_mismatch * state.z - env.gamma * state.x
    dy = -env.t2_rate * state.y
    dz = -env.rabi_mismatch * state.x - env.gamma * state.z
    for ch in (setup.channel_z, setup.channel_phi):
        cx, cy, cz = _channel_drift(state, ch.gamma, ch.angle)
        dx += cx
        dy += cy
        dz += cz
    return BlochVector(dx, dy, dz)


def ito_diffusion(state: BlochVector, setup: MeasurementSetup) -> tuple[BlochVector, BlochVector]:
    """Noise-coefficient vectors (g_z, g_phi) of the Ito-form equations."""
    return (
        _channel_diffusion(state, setup.channel_z.tau_m, setup.channel_z.angle),
        _channel_diffusion(state, setup.channel_phi.tau_m, setup.channel_phi.angle),
    )


def emit_signals(
    state_before_step: BlochVector,
    setup: MeasurementSetup,
    config: SimulationConfig,
    draw: NoiseDraw,
) -> tuple[float, float]:
    """Sampled (I_z, I_phi) for one step, using the step's own noise draw.

    The sample over [t, t + dt) is the measured mean at t plus
    sqrt(tau_i / dt) times the same variate that drives the backaction.
    """
    mz = observable_mean(state_before_step, setup.channel_z)
    mp = observable_mean(state_before_step, setup.channel_phi)
    return (
        mz + math.sqrt(setup.channel_z.tau_m / config.dt) * draw.xi_z,
        mp + math.sqrt(setup.channel_phi.tau_m / config.dt) * draw.xi_phi,
    )


def _kernel_for(scheme: str):
    if scheme == "ito":
        return kernels.simulate_block_ito
    if scheme == "stratonovich":
        return kernels.simulate_block_stratonovich
    raise InvalidArgumentError(f"unknown scheme {scheme!r}")


def step(
    state: BlochVector,
    setup: MeasurementSetup,
    config: SimulationConfig,
    draw: NoiseDraw,
) -> BlochVector:
    """Advance the state by one dt using the configured scheme, then project."""
    states = np.array([[state.x, state.y, state.z]], dtype=float)
    noise = np.array([[[draw.xi_z, draw.xi_phi]]], dtype=float)
    signals = np.empty((1, 1, 2))
    projections = np.zeros(1, dtype=np.int64)
    diverged = _kernel_for(config.scheme)(
        states, noise, config.dt, kernel_params(setup, config.dt), signals, projections
    )
    if diverged is not None:
        raise IntegrationDivergedError(step_index=diverged[1])
    return BlochVector(states[0, 0], states[0, 1], states[0, 2])


def trace_rng(master_seed: int, trace_index: int) -> np.random.Generator:
    """Counter-based stream for one trace; splitting is by key, not jumping."""
    key = np.array([master_seed, trace_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _block_noise(master_seed: int, start: int, count: int, n_steps: int) -> np.ndarray:
    noise = np.empty((count, n_steps, 2))
    for b in range(count):
        noise[b] = trace_rng(master_seed, start + b).standard_normal((n_steps, 2))
    return noise


def _simulate_block(setup, config, start, count, record_states, project=True):
    n_steps = config.n_steps
    states = np.tile(
        np.array(config.initial_state.as_tuple(), dtype=float), (count, 1)
    )
    noise = _block_noise(config.master_seed, start, count, n_steps)
    signals = np.empty((count, n_steps, 2))
    projections = np.zeros(count, dtype=np.int64)
    paths = np.empty((count, n_steps + 1, 3)) if record_states else None
    diverged = _kernel_for(config.scheme)(
        states, noise, config.dt, kernel_params(setup, config.dt),
        signals, projections, paths, project,
    )
    if diverged is not None:
        raise IntegrationDivergedError(step_index=diverged[1], trace_index=start + diverged[0])
    records = []
    for b in range(count):
        records.append(
            TraceRecord(
                dt=config.dt,
                samples=signals[b],
                seed=start + b,
                projections=int(projections[b]),
                state_path=None if paths is None else paths[b],
            )
        )
    return records


def simulate_trace(
    setup: MeasurementSetup,
    config: SimulationConfig,
    trace_index: int,
    *,
    record_states: bool = False,
) -> TraceRecord:
    """Simulate one trace; deterministic given (master_seed, trace_index)."""
    require_valid(setup, config)
    return _simulate_block(setup, config, trace_index, 1, record_states)[0]


def resolve_threads(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("QUBITCORR_THREADS", "")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate_ensemble(
    setup: MeasurementSetup,
    config: SimulationConfig,
    sink=None,
    *,
    record_states: bool = False,
    threads: int | None = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> list[TraceRecord] | None:
    """Simulate config.n_traces independent traces.

    With sink=None all records are returned; otherwise sink(record) is called
    once per trace in index order and nothing is retained (use this to stream
    large ensembles).  The result is identical for any worker count because
    every trace owns its own RNG stream.
    """
    require_valid(setup, config)
    n = config.n_traces
    if n == 0:
        return None if sink is not None else []
    starts = list(range(0, n, block_size))
    blocks = [(s, min(block_size, n - s)) for s in starts]
    n_workers = min(resolve_threads(threads), len(blocks))

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(_simulate_block, setup, config, s, c, record_states)
                for s, c in blocks
            ]
            block_results = (f.result() for f in futures)
            return _collect(block_results, sink)
    block_results = (
        _simulate_block(setup, config, s, c, record_states) for s, c in blocks
    )
    return _collect(block_results, sink)


def _collect(block_results, sink):
    if sink is None:
        out: list[TraceRecord] = []
        for records in block_results:
            out.extend(records)
        return out
    for records in block_results:
        for record in records:
            sink(record)
    return None
