# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory-integration kernels.

Same arithmetic and operation order as _kernels_py (the NumPy fallback), so
both backends produce bit-identical trajectories for identical draws.  See
_kernels_py for the kernel contract and the params tuple layout.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, sqrt

cnp.import_array()


cdef struct KParams:
    double gamma_z, it_z, sn_z, cz, sz
    double gamma_p, it_p, sn_p, cp, sp
    double omega, gamma_env, gy_rate
    double inv_tau_z, inv_tau_p, gamma_ch_z, gamma_ch_p, t2_inv


cdef KParams _unpack(params):
    cdef KParams p
    (p.gamma_z, p.it_z, p.sn_z, p.cz, p.sz,
     p.gamma_p, p.it_p, p.sn_p, p.cp, p.sp,
     p.omega, p.gamma_env, p.gy_rate,
     p.inv_tau_z, p.inv_tau_p, p.gamma_ch_z, p.gamma_ch_p, p.t2_inv) = params
    return p


def simulate_block_ito(double[:, ::1] states, double[:, :, ::1] noise, double dt,
                       params, double[:, :, ::1] signals,
                       cnp.int64_t[::1] projections, paths=None, bint project=True):
    cdef KParams p = _unpack(params)
    cdef double sqdt = np.sqrt(dt)
    cdef Py_ssize_t n_traces = noise.shape[0]
    cdef Py_ssize_t n_steps = noise.shape[1]
    cdef bint has_paths = paths is not None
    cdef double[:, :, ::1] paths_mv
    if has_paths:
        paths_mv = paths
    else:
        paths_mv = np.empty((1, 1, 3))

    cdef Py_ssize_t b, n
    cdef Py_ssize_t bad_trace = -1, bad_step = -1
    cdef double x, y, z, u, v
    cdef double zkz, xkz, zkp, xkp, t_z, t_p
    cdef double drift_x, drift_y, drift_z
    cdef double one_m_zkz2, one_m_zkp2
    cdef double gzx, gzy, gzz, gpx, gpy, gpz
    cdef double du, dv, n2, inv

    with nogil:
        for b in range(n_traces):
            x = states[b, 0]
            y = states[b, 1]
            z = states[b, 2]
            if has_paths:
                paths_mv[b, 0, 0] = x
                paths_mv[b, 0, 1] = y
                paths_mv[b, 0, 2] = z
            for n in range(n_steps):
                u = noise[b, n, 0]
                v = noise[b, n, 1]

                zkz = z * p.cz + x * p.sz
                xkz = x * p.cz - z * p.sz
                zkp = z * p.cp + x * p.sp
                xkp = x * p.cp - z * p.sp

                signals[b, n, 0] = zkz + p.sn_z * u
                signals[b, n, 1] = zkp + p.sn_p * v

                t_z = p.gamma_z * xkz
                t_p = p.gamma_p * xkp
                drift_x = p.omega * z - p.gamma_env * x - t_z * p.cz - t_p * p.cp
                drift_y = -p.gy_rate * y
                drift_z = -p.omega * x - p.gamma_env * z + t_z * p.sz + t_p * p.sp

                one_m_zkz2 = 1.0 - zkz * zkz
                one_m_zkp2 = 1.0 - zkp * zkp
                gzx = p.it_z * (one_m_zkz2 * p.sz - xkz * zkz * p.cz)
                gzy = -(p.it_z * (y * zkz))
                gzz = p.it_z * (one_m_zkz2 * p.cz + xkz * zkz * p.sz)
                gpx = p.it_p * (one_m_zkp2 * p.sp - xkp * zkp * p.cp)
                gpy = -(p.it_p * (y * zkp))
                gpz = p.it_p * (one_m_zkp2 * p.cp + xkp * zkp * p.sp)

                du = sqdt * u
                dv = sqdt * v
                x = x + drift_x * dt + gzx * du + gpx * dv
                y = y + drift_y * dt + gzy * du + gpy * dv
                z = z + drift_z * dt + gzz * du + gpz * dv

                n2 = x * x + y * y + z * z
                if not isfinite(n2):
                    bad_trace = b
                    bad_step = n
                    break
                if project and n2 > 1.0:
                    inv = 1.0 / sqrt(n2)
                    x = x * inv
                    y = y * inv
                    z = z * inv
                    projections[b] += 1
                if has_paths:
                    paths_mv[b, n + 1, 0] = x
                    paths_mv[b, n + 1, 1] = y
                    paths_mv[b, n + 1, 2] = z
            if bad_trace >= 0:
                break
            states[b, 0] = x
            states[b, 1] = y
            states[b, 2] = z

    if bad_trace >= 0:
        return (int(bad_trace), int(bad_step))
    return None


cdef inline void _strat_rate(KParams *p, double x, double y, double z,
                             double noise_z, double noise_p,
                             double *fx, double *fy, double *fz) noexcept nogil:
    cdef double zk, xk, rec, rx, ry, rz
    cdef double ax, ay, az

    zk = z * p.cz + x * p.sz
    xk = x * p.cz - z * p.sz
    rec = zk + noise_z
    rx = -(p.inv_tau_z * (xk * zk)) * rec - p.gamma_ch_z * xk
    ry = -(p.inv_tau_z * (y * zk)) * rec - p.gamma_ch_z * y
    rz = (p.inv_tau_z * (1.0 - zk * zk)) * rec
    ax = rx * p.cz + rz * p.sz
    ay = ry
    az = rz * p.cz - rx * p.sz

    zk = z * p.cp + x * p.sp
    xk = x * p.cp - z * p.sp
    rec = zk + noise_p
    rx = -(p.inv_tau_p * (xk * zk)) * rec - p.gamma_ch_p * xk
    ry = -(p.inv_tau_p * (y * zk)) * rec - p.gamma_ch_p * y
    rz = (p.inv_tau_p * (1.0 - zk * zk)) * rec
    ax = ax + rx * p.cp + rz * p.sp
    ay = ay + ry
    az = az + rz * p.cp - rx * p.sp

    fx[0] = ax + p.omega * z - p.gamma_env * x
    fy[0] = ay - p.t2_inv * y
    fz[0] = az - p.omega * x - p.gamma_env * z


def simulate_block_stratonovich(double[:, ::1] states, double[:, :, ::1] noise,
                                double dt, params, double[:, :, ::1] signals,
                                cnp.int64_t[::1] projections, paths=None,
                                bint project=True):
    cdef KParams p = _unpack(params)
    cdef double half_dt = 0.5 * dt
    cdef Py_ssize_t n_traces = noise.shape[0]
    cdef Py_ssize_t n_steps = noise.shape[1]
    cdef bint has_paths = paths is not None
    cdef double[:, :, ::1] paths_mv
    if has_paths:
        paths_mv = paths
    else:
        paths_mv = np.empty((1, 1, 3))

    cdef Py_ssize_t b, n
    cdef Py_ssize_t bad_trace = -1, bad_step = -1
    cdef double x, y, z, noise_z, noise_p
    cdef double f1x, f1y, f1z, f2x, f2y, f2z
    cdef double px, py, pz, n2, inv

    with nogil:
        for b in range(n_traces):
            x = states[b, 0]
            y = states[b, 1]
            z = states[b, 2]
            if has_paths:
                paths_mv[b, 0, 0] = x
                paths_mv[b, 0, 1] = y
                paths_mv[b, 0, 2] = z
            for n in range(n_steps):
                noise_z = p.sn_z * noise[b, n, 0]
                noise_p = p.sn_p * noise[b, n, 1]

                signals[b, n, 0] = (z * p.cz + x * p.sz) + noise_z
                signals[b, n, 1] = (z * p.cp + x * p.sp) + noise_p

                _strat_rate(&p, x, y, z, noise_z, noise_p, &f1x, &f1y, &f1z)
                px = x + f1x * dt
                py = y + f1y * dt
                pz = z + f1z * dt
                _strat_rate(&p, px, py, pz, noise_z, noise_p, &f2x, &f2y, &f2z)
                x = x + (f1x + f2x) * half_dt
                y = y + (f1y + f2y) * half_dt
                z = z + (f1z + f2z) * half_dt

                n2 = x * x + y * y + z * z
                if not isfinite(n2):
                    bad_trace = b
                    bad_step = n
                    break
                if project and n2 > 1.0:
                    inv = 1.0 / sqrt(n2)
                    x = x * inv
                    y = y * inv
                    z = z * inv
                    projections[b] += 1
                if has_paths:
                    paths_mv[b, n + 1, 0] = x
                    paths_mv[b, n + 1, 1] = y
                    paths_mv[b, n + 1, 2] = z
            if bad_trace >= 0:
                break
            states[b, 0] = x
            states[b, 1] = y
            states[b, 2] = z

    if bad_trace >= 0:
        return (int(bad_trace), int(bad_step))
    return None
