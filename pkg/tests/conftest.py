import math

import numpy as np
import pytest

from qubitcorr import BlochVector, MeasurementSetup, SimulationConfig

# one line per acceptance criterion, echoed after the run (see
# pytest_terminal_summary below); filled in by tests/test_acceptance.py
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.line(line)

# Experimental working point used throughout: 1/1.3 us^-1 dephasing in both
# channels, efficiencies 0.49 / 0.41, T1 = 60 us, T2 = 30 us.
GAMMA = 1.0 / 1.3
ETA_Z = 0.49
ETA_PHI = 0.41


def reference_setup(phi, *, rabi_mismatch=0.0, t1=60.0, t2=30.0,
                    eta_z=ETA_Z, eta_phi=ETA_PHI, gamma_z=GAMMA, gamma_phi=GAMMA):
    return MeasurementSetup.from_rates(
        gamma_z=gamma_z, gamma_phi=gamma_phi, phi=phi,
        eta_z=eta_z, eta_phi=eta_phi,
        t1=t1, t2=t2, rabi_mismatch=rabi_mismatch,
    )


def random_setup(rng: np.random.Generator) -> MeasurementSetup:
    """Random valid setup spanning real, complex and near-degenerate rates."""
    t1 = rng.uniform(5.0, 100.0)
    return MeasurementSetup.from_rates(
        gamma_z=rng.uniform(0.1, 3.0),
        gamma_phi=rng.uniform(0.1, 3.0),
        phi=rng.uniform(-math.pi, math.pi),
        eta_z=rng.uniform(0.2, 1.0),
        eta_phi=rng.uniform(0.2, 1.0),
        t1=t1,
        t2=rng.uniform(0.5, 2.0) * t1,
        rabi_mismatch=rng.uniform(-1.0, 1.0),
    )


def random_state(rng: np.random.Generator, radius=None) -> BlochVector:
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    r = rng.uniform(0.0, 1.0) if radius is None else radius
    return BlochVector(*(r * v))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def short_config(n_traces, *, dt=0.004, duration=1.5, seed=123, state=None,
                 scheme="ito"):
    return SimulationConfig(
        dt=dt, duration=duration, n_traces=n_traces, master_seed=seed,
        initial_state=state or BlochVector(0.0, 0.0, 1.0), scheme=scheme,
    )
