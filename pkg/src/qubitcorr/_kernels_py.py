"""NumPy implementation of the trajectory-integration kernels.

Vectorized across traces, stepping time in Python.  The compiled extension
(_kernels.pyx) implements the same arithmetic with the same operation order,
so both backends produce bit-identical trajectories for identical draws.

Kernel contract (shared with the compiled backend):

- states: (B, 3) float64, initial Bloch vectors; overwritten with final states.
- noise: (B, n_steps, 2) float64 standard-normal draws; channel order (z, phi).
- signals: (B, n_steps, 2) float64 output, filled with the sampled records.
- projections: (B,) int64 output, per-trace count of radial projections.
- paths: optional (B, n_steps + 1, 3) float64 output of the state history.
- params: flat tuple of precomputed floats, see trajectory.kernel_params.
- Returns (trace, step) of the first non-finite state, or None.
"""

from __future__ import annotations

import numpy as np

# params tuple layout (precomputed once so both backends share exact values):
# 0  gamma_z      5  gamma_p      10 omega        13 inv_tau_z    17 t2_inv
# 1  it_z         6  it_p         11 gamma_env    14 inv_tau_p
# 2  sn_z         7  sn_p         12 gy_rate      15 gamma_ch_z
# 3  cz           8  cp                           16 gamma_ch_p
# 4  sz           9  sp


def simulate_block_ito(states, noise, dt, params, signals, projections, paths=None,
                       project=True):
    # divergence is reported through the return value; the overflow itself
    # must not warn (the compiled backend is silent too)
    with np.errstate(over="ignore", invalid="ignore"):
        return _ito_loop(states, noise, dt, params, signals, projections, paths,
                         project)


def _ito_loop(states, noise, dt, params, signals, projections, paths, project):
    (gamma_z, it_z, sn_z, cz, sz,
     gamma_p, it_p, sn_p, cp, sp,
     omega, gamma_env, gy_rate,
     _inv_tau_z, _inv_tau_p, _gamma_ch_z, _gamma_ch_p, _t2_inv) = params
    sqdt = np.sqrt(dt)
    n_steps = noise.shape[1]

    x = states[:, 0].copy()
    y = states[:, 1].copy()
    z = states[:, 2].copy()
    if paths is not None:
        paths[:, 0, 0] = x
        paths[:, 0, 1] = y
        paths[:, 0, 2] = z

    for n in range(n_steps):
        u = noise[:, n, 0]
        v = noise[:, n, 1]

        zkz = z * cz + x * sz
        xkz = x * cz - z * sz
        zkp = z * cp + x * sp
        xkp = x * cp - z * sp

        signals[:, n, 0] = zkz + sn_z * u
        signals[:, n, 1] = zkp + sn_p * v

        t_z = gamma_z * xkz
        t_p = gamma_p * xkp
        drift_x = omega * z - gamma_env * x - t_z * cz - t_p * cp
        drift_y = -gy_rate * y
        drift_z = -omega * x - gamma_env * z + t_z * sz + t_p * sp

        one_m_zkz2 = 1.0 - zkz * zkz
        one_m_zkp2 = 1.0 - zkp * zkp
        gzx = it_z * (one_m_zkz2 * sz - xkz * zkz * cz)
        gzy = -(it_z * (y * zkz))
        gzz = it_z * (one_m_zkz2 * cz + xkz * zkz * sz)
        gpx = it_p * (one_m_zkp2 * sp - xkp * zkp * cp)
        gpy = -(it_p * (y * zkp))
        gpz = it_p * (one_m_zkp2 * cp + xkp * zkp * sp)

        du = sqdt * u
        dv = sqdt * v
        x = x + drift_x * dt + gzx * du + gpx * dv
        y = y + drift_y * dt + gzy * du + gpy * dv
        z = z + drift_z * dt + gzz * du + gpz * dv

        n2 = x * x + y * y + z * z
        if not np.all(np.isfinite(n2)):
            trace = int(np.flatnonzero(~np.isfinite(n2))[0])
            return trace, n
        if project:
            mask = n2 > 1.0
            if mask.any():
                inv = 1.0 / np.sqrt(n2[mask])
                x[mask] *= inv
                y[mask] *= inv
                z[mask] *= inv
                projections[mask] += 1
        if paths is not None:
            paths[:, n + 1, 0] = x
            paths[:, n + 1, 1] = y
            paths[:, n + 1, 2] = z

    states[:, 0] = x
    states[:, 1] = y
    states[:, 2] = z
    return None


def _strat_rate(x, y, z, noise_z, noise_p, params):
    """Time derivative of (x, y, z) for fixed per-step noise values."""
    (gamma_z, it_z, sn_z, cz, sz,
     gamma_p, it_p, sn_p, cp, sp,
     omega, gamma_env, gy_rate,
     inv_tau_z, inv_tau_p, gamma_ch_z, gamma_ch_p, t2_inv) = params

    zkz = z * cz + x * sz
    xkz = x * cz - z * sz
    iz = zkz + noise_z
    rx = -(inv_tau_z * (xkz * zkz)) * iz - gamma_ch_z * xkz
    ry = -(inv_tau_z * (y * zkz)) * iz - gamma_ch_z * y
    rz = (inv_tau_z * (1.0 - zkz * zkz)) * iz
    fx = rx * cz + rz * sz
    fy = ry
    fz = rz * cz - rx * sz

    zkp = z * cp + x * sp
    xkp = x * cp - z * sp
    ip = zkp + noise_p
    rx = -(inv_tau_p * (xkp * zkp)) * ip - gamma_ch_p * xkp
    ry = -(inv_tau_p * (y * zkp)) * ip - gamma_ch_p * y
    rz = (inv_tau_p * (1.0 - zkp * zkp)) * ip
    fx = fx + rx * cp + rz * sp
    fy = fy + ry
    fz = fz + rz * cp - rx * sp

    fx = fx + omega * z - gamma_env * x
    fy = fy - t2_inv * y
    fz = fz - omega * x - gamma_env * z
    return fx, fy, fz


def simulate_block_stratonovich(states, noise, dt, params, signals, projections,
                                paths=None, project=True):
    with np.errstate(over="ignore", invalid="ignore"):
        return _strat_loop(states, noise, dt, params, signals, projections, paths,
                           project)


def _strat_loop(states, noise, dt, params, signals, projections, paths, project):
    sn_z = params[2]
    sn_p = params[7]
    cz, sz = params[3], params[4]
    cp, sp = params[8], params[9]
    n_steps = noise.shape[1]

    x = states[:, 0].copy()
    y = states[:, 1].copy()
    z = states[:, 2].copy()
    if paths is not None:
        paths[:, 0, 0] = x
        paths[:, 0, 1] = y
        paths[:, 0, 2] = z

    for n in range(n_steps):
        noise_z = sn_z * noise[:, n, 0]
        noise_p = sn_p * noise[:, n, 1]

        signals[:, n, 0] = (z * cz + x * sz) + noise_z
        signals[:, n, 1] = (z * cp + x * sp) + noise_p

        f1x, f1y, f1z = _strat_rate(x, y, z, noise_z, noise_p, params)
        px = x + f1x * dt
        py = y + f1y * dt
        pz = z + f1z * dt
        f2x, f2y, f2z = _strat_rate(px, py, pz, noise_z, noise_p, params)
        half_dt = 0.5 * dt
        x = x + (f1x + f2x) * half_dt
        y = y + (f1y + f2y) * half_dt
        z = z + (f1z + f2z) * half_dt

        n2 = x * x + y * y + z * z
        if not np.all(np.isfinite(n2)):
            trace = int(np.flatnonzero(~np.isfinite(n2))[0])
            return trace, n
        if project:
            mask = n2 > 1.0
            if mask.any():
                inv = 1.0 / np.sqrt(n2[mask])
                x[mask] *= inv
                y[mask] *= inv
                z[mask] *= inv
                projections[mask] += 1
        if paths is not None:
            paths[:, n + 1, 0] = x
            paths[:, n + 1, 1] = y
            paths[:, n + 1, 2] = z

    states[:, 0] = x
    states[:, 1] = y
    states[:, 2] = z
    return None
