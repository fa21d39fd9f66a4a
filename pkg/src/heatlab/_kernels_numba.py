"""Numba twins of the hot loops in _kernels_numpy.py.

Same arithmetic per element, loop-structured for JIT.  No fastmath: results
must not depend on the backend beyond summation-order effects that the
callers avoid by aggregating outside the kernels.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .potentials import V_EXP, V_POWER, V_ZERO


@njit(cache=True)
def fill_bridge(paths, z, t):
    n, m1, d = paths.shape
    m = m1 - 1
    levels = 0
    mm = m
    while mm > 1:
        levels += 1
        mm >>= 1
    col = 0
    for lev in range(levels):
        seg = m >> lev
        half = seg >> 1
        sd = math.sqrt(0.25 * (seg / m) * t)
        npts = m // seg
        for i in range(n):
            for j in range(npts):
                idx = half + j * seg
                for c in range(d):
                    paths[i, idx, c] = 0.5 * (paths[i, idx - half, c]
                                              + paths[i, idx + half, c]) \
                        + sd * z[i, col + j, c]
        col += npts


@njit(cache=True, inline="always")
def _v_point(v_code, v_params, pt):
    s = 0.0
    for c in range(pt.shape[0]):
        s += pt[c] * pt[c]
    r = math.sqrt(s)
    if v_code == V_ZERO:
        return 0.0
    if v_code == V_POWER:
        return v_params[0] * r ** v_params[1]
    if v_code == V_EXP:
        return v_params[0] * math.exp(v_params[1] * r)
    return np.nan


@njit(cache=True)
def path_weights(paths, t, v_code, v_params):
    n, m1, d = paths.shape
    dt = t / (m1 - 1)
    out = np.empty(n)
    for i in range(n):
        acc = 0.5 * _v_point(v_code, v_params, paths[i, 0])
        for j in range(1, m1 - 1):
            acc += _v_point(v_code, v_params, paths[i, j])
        acc += 0.5 * _v_point(v_code, v_params, paths[i, m1 - 1])
        out[i] = math.exp(-dt * acc)
    return out


@njit(cache=True)
def cn_propagate(u, dt, dx, vgrid, n_steps):
    n = u.shape[0]
    r = dt / (4.0 * dx * dx)
    diag_a = np.empty(n)
    diag_b = np.empty(n)
    for i in range(n):
        diag_a[i] = 1.0 + 2.0 * r + 0.5 * dt * vgrid[i]
        diag_b[i] = 1.0 - 2.0 * r - 0.5 * dt * vgrid[i]
    # Thomas factorization of the constant tridiagonal A (off-diagonals -r)
    cp = np.empty(n)
    cp[0] = -r / diag_a[0]
    for i in range(1, n):
        cp[i] = -r / (diag_a[i] + r * cp[i - 1])
    out = u.copy()
    rhs = np.empty(n)
    for _ in range(n_steps):
        rhs[0] = diag_b[0] * out[0] + r * out[1]
        for i in range(1, n - 1):
            rhs[i] = diag_b[i] * out[i] + r * (out[i - 1] + out[i + 1])
        rhs[n - 1] = diag_b[n - 1] * out[n - 1] + r * out[n - 2]
        # forward sweep
        rhs[0] = rhs[0] / diag_a[0]
        for i in range(1, n):
            rhs[i] = (rhs[i] + r * rhs[i - 1]) / (diag_a[i] + r * cp[i - 1])
        # back substitution
        out[n - 1] = rhs[n - 1]
        for i in range(n - 2, -1, -1):
            out[i] = rhs[i] - cp[i] * out[i + 1]
    return out
