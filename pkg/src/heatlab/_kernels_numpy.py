"""Pure-numpy implementations of the hot inner loops.

Reference semantics for the numba twins in _kernels_numba.py; also the only
path available for potentials without a closed-form code.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .potentials import V_EXP, V_POWER, V_ZERO


def fill_bridge(paths: np.ndarray, z: np.ndarray, t: float) -> None:
    """Fill interior points of pinned paths by midpoint recursion.

    paths: (n, m+1, d) with endpoints already written at [:, 0] and [:, m].
    z:     (n, m-1, d) standard normals, level-major: column 0 drives the
           global midpoint, columns 1-2 the quarter points, and so on.
    The conditional midpoint of a pinned segment of duration h has variance
    h/4 per coordinate.
    """
    n, m1, d = paths.shape
    m = m1 - 1
    levels = m.bit_length() - 1
    col = 0
    for lev in range(levels):
        seg = m >> lev            # current segment length in steps
        half = seg >> 1
        sd = np.sqrt(0.25 * (seg / m) * t)
        idx = np.arange(half, m, seg)          # midpoints of this level
        left = paths[:, idx - half, :]
        right = paths[:, idx + half, :]
        zlev = z[:, col:col + idx.size, :]
        paths[:, idx, :] = 0.5 * (left + right) + sd * zlev
        col += idx.size


def eval_potential_points(v_code: int, v_params: np.ndarray,
                          pts: np.ndarray) -> np.ndarray:
    """Closed-form potentials on an (..., d) point array."""
    if v_code == V_ZERO:
        return np.zeros(pts.shape[:-1])
    r = np.sqrt(np.sum(pts * pts, axis=-1))
    if v_code == V_POWER:
        coeff, expo = v_params
        return coeff * r ** expo
    if v_code == V_EXP:
        coeff, rate = v_params
        return coeff * np.exp(rate * r)
    raise ValueError(f"unknown potential code {v_code}")


def path_weights(paths: np.ndarray, t: float, v_code: int,
                 v_params: np.ndarray) -> np.ndarray:
    """exp(-trapezoid integral of V along each path), shape (n,)."""
    vals = eval_potential_points(v_code, v_params, paths)
    n, m1 = vals.shape
    dt = t / (m1 - 1)
    integral = dt * (0.5 * vals[:, 0] + vals[:, 1:-1].sum(axis=1) + 0.5 * vals[:, -1])
    return np.exp(-integral)


def path_weights_callable(paths: np.ndarray, t: float, v) -> np.ndarray:
    """Same as path_weights but for an arbitrary vectorized potential."""
    n, m1, d = paths.shape
    vals = np.asarray(v(paths.reshape(-1, d)), dtype=float).reshape(n, m1)
    dt = t / (m1 - 1)
    integral = dt * (0.5 * vals[:, 0] + vals[:, 1:-1].sum(axis=1) + 0.5 * vals[:, -1])
    return np.exp(-integral)


def cn_propagate(u: np.ndarray, dt: float, dx: float, vgrid: np.ndarray,
                 n_steps: int) -> np.ndarray:
    """Advance interior values of du/dt = (1/2)u'' - V u by n_steps of
    Crank-Nicolson with zero Dirichlet boundaries.

    u and vgrid hold interior nodes only.  The constant-coefficient solve is
    factorized once (the system is symmetric positive definite).
    """
    n = u.shape[0]
    r = dt / (4.0 * dx * dx)     # dt/2 * 1/(2 dx^2)
    # A = I + (dt/2) H, B = I - (dt/2) H, H = -(1/2)D2 + diag(V)
    diag_a = 1.0 + 2.0 * r + 0.5 * dt * vgrid
    off_a = -r * np.ones(n - 1)
    diag_b = 1.0 - 2.0 * r - 0.5 * dt * vgrid
    off_b = r * np.ones(n - 1)
    ab = np.zeros((2, n))
    ab[0, 1:] = off_a
    ab[1, :] = diag_a
    cho = scipy.linalg.cholesky_banded(ab, lower=False)
    out = u.astype(float, copy=True)
    for _ in range(n_steps):
        rhs = diag_b * out
        rhs[:-1] += off_b * out[1:]
        rhs[1:] += off_b * out[:-1]
        out = scipy.linalg.cho_solve_banded((cho, False), rhs)
    return out
