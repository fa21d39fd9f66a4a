"""Green's function by regime-aware quadrature of kernel estimates.

The time integral is split where the integrand changes character: a
substituted segment below |x-y|^2 (new variable s = |x-y|^2/t tames the
short-time peak), a log-spaced segment up to a cutoff where the long-time
envelope has decayed below tolerance, and an analytic exponential tail whose
midpoint is added and whose half-width is charged to the error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bridge_mc import McConfig, kernel_mc
from .cn_solver import GridSpec, evolve, probe, suggest_half_width
from .envelopes import log_shape_large_time
from .potentials import V_ZERO, PotentialSpec, crossover_time, eval_g
from .reference import log_gaussian_kernel

__all__ = ["GreenEstimate", "green", "InsufficientPathsError"]

PDE_REL_ERR = 1e-3  # error model for calibrated solver values


class InsufficientPathsError(RuntimeError):
    def __init__(self, required: int):
        super().__init__(f"Monte Carlo noise exceeds the tolerance; "
                         f"roughly n_paths >= {required} needed")
        self.required = required


@dataclass(frozen=True)
class GreenEstimate:
    value: float
    error_bound: float
    n_nodes: int
    tail_bound: float

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("Green estimate must be positive")
        if self.tail_bound > self.error_bound * (1 + 1e-12):
            raise ValueError("tail bound cannot exceed the total error bound")


def _simpson(vals: np.ndarray, h: float) -> float:
    n = len(vals) - 1
    if n % 2:
        raise ValueError("simpson needs an even interval count")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(w, vals))


def _psi_inf_log(spec: PotentialSpec, x) -> float:
    nx = float(np.linalg.norm(np.atleast_1d(x)))
    return -(1.0 + nx) * math.sqrt(eval_g(spec.profile, nx))


def _free_tail(d: int, r: float, T: float) -> float:
    return (2 * math.pi) ** (-d / 2) * 2 / ((d - 2) * T ** ((d - 2) / 2))


def _cutoff_time(spec: PotentialSpec, x, y, rel_tol: float, r: float) -> float:
    """Time beyond which the long-time upper envelope is negligible."""
    d = spec.dim
    if not spec.confining:
        # free-kernel tail rule; the near-peak contribution sets the scale
        G_ref = math.exp(log_gaussian_kernel(d, r * r, x, y)) * r * r
        T = max(r * r, 1.0)
        while _free_tail(d, r, T) > 0.25 * rel_tol * G_ref and T < 1e12:
            T *= 1.5
        return T
    nx = float(np.linalg.norm(np.atleast_1d(x)))
    ny = float(np.linalg.norm(np.atleast_1d(y)))
    # the envelope e^{-t} psi psi peaks near sqrt((1+|x|)^2 + (1+|y|)^2)
    T = max(1.0, crossover_time(spec.profile, nx),
            crossover_time(spec.profile, ny),
            math.sqrt((1 + nx) ** 2 + (1 + ny) ** 2), r * r)
    ref = log_shape_large_time(spec.profile, d, T, x, y)
    floor = ref + math.log(rel_tol) - 5.0
    while log_shape_large_time(spec.profile, d, T, x, y) > floor and T < 1e6:
        T *= 1.25
    return T


def _tail_bound(spec: PotentialSpec, x, y, r: float, T: float) -> float:
    if not spec.confining:
        return _free_tail(spec.dim, r, T)
    lg = -T + _psi_inf_log(spec, x) + _psi_inf_log(spec, y)
    return math.exp(min(lg, 700.0))


def green(spec: PotentialSpec, engine: str, x, y, rel_tol: float = 1e-2,
          mc_cfg: Optional[McConfig] = None,
          grid: Optional[GridSpec] = None) -> GreenEstimate:
    """Integrate the kernel over all time at fixed endpoints.

    engine is "pde" (dimensions 1-2) or "mc" (dimensions 1-3).  The error
    bound stacks quadrature refinement differences, the residual tail
    half-width, the engine error model, and the sub-cutoff remainder of the
    substituted segment.
    """
    d = spec.dim
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r = float(np.linalg.norm(x - y))
    if r == 0.0:
        raise ValueError("Green's function is singular at x == y")
    if engine == "pde" and d not in (1, 2):
        raise ValueError("pde engine supports dimensions 1 and 2")
    if engine == "mc" and d not in (1, 2, 3):
        raise ValueError("mc engine supports dimensions 1 to 3")
    if engine not in ("pde", "mc"):
        raise ValueError("engine must be 'pde' or 'mc'")
    if not spec.confining and d <= 2:
        raise ValueError("free Green's function diverges below dimension 3")

    T_cut = _cutoff_time(spec, x, y, rel_tol, r)
    tail = _tail_bound(spec, x, y, r, T_cut)

    tag = [0]

    if engine == "mc":
        cfg = mc_cfg or McConfig()
        is_zero = spec.v_code == V_ZERO

        def eval_kernel(ts):
            vals = np.empty(len(ts))
            errs = np.zeros(len(ts))
            for i, t in enumerate(ts):
                if is_zero:
                    # weights are identically one; the estimator collapses to
                    # the exact free kernel with zero statistical error
                    vals[i] = math.exp(log_gaussian_kernel(d, t, x, y))
                else:
                    tag[0] += 1
                    est = kernel_mc(spec, cfg, t, x, y, stream_tag=tag[0])
                    vals[i] = est.value
                    errs[i] = 3 * est.stderr
            return vals, errs
    else:
        if grid is None:
            L = suggest_half_width(spec, max(T_cut, 1.0),
                                   max(np.max(np.abs(x)), np.max(np.abs(y))))
            grid = GridSpec(dim=d, half_width=L, n_cells=1024 if d == 1 else 192)

        def eval_kernel(ts):
            g = grid
            if min(ts) < 20 * (g.dt or 1e-3):
                g = GridSpec(dim=g.dim, half_width=g.half_width,
                             n_cells=g.n_cells, dt=min(ts) / 20)
            cols = evolve(spec, g, y, list(ts))
            vals = np.array([probe(c, x) for c in cols])
            return vals, PDE_REL_ERR * np.abs(vals)

    s_max = max(30.0, 2 * math.log(1.0 / rel_tol) + 30.0)

    def near_far(n_near: int, n_far: int) -> tuple[float, float]:
        """(integral, quadrature-weighted engine error) at this resolution."""
        s_nodes = np.linspace(1.0, s_max, n_near + 1)
        t_near = (r * r / s_nodes)[::-1]
        v_near, e_near = eval_kernel(t_near)
        v_near, e_near = v_near[::-1], e_near[::-1]
        h_near = (s_max - 1.0) / n_near
        near = _simpson(v_near * r * r / s_nodes ** 2, h_near)
        near_err = _simpson(e_near * r * r / s_nodes ** 2, h_near)
        u0, u1 = math.log(r * r), math.log(T_cut)
        u_nodes = np.linspace(u0, u1, n_far + 1)
        t_far = np.exp(u_nodes)
        v_far, e_far = eval_kernel(t_far)
        h_far = (u1 - u0) / n_far
        far = _simpson(v_far * t_far, h_far)
        far_err = _simpson(e_far * t_far, h_far)
        return near + far, near_err + far_err

    coarse, _ = near_far(64, 128)
    fine, eval_err_w = near_far(128, 256)
    quad_err = abs(fine - coarse)
    n_nodes = 129 + 257

    # remainder of the substituted segment beyond s_max: below the free
    # kernel there, which decays like e^{-s/2}
    t_floor = r * r / s_max
    ss = np.geomspace(1.0, 40.0, 201)
    qq = np.exp([log_gaussian_kernel(d, t_floor / s, x, y) for s in ss])
    sub_bound = float(np.trapezoid(qq * t_floor / ss ** 2, ss))

    value = fine + 0.5 * tail
    err = quad_err + 0.5 * tail + eval_err_w + sub_bound
    if value <= 0:
        raise RuntimeError("quadrature produced a nonpositive integral")
    if engine == "mc" and spec.v_code != V_ZERO and eval_err_w > rel_tol * value:
        cfg = mc_cfg or McConfig()
        required = int(cfg.n_paths * (eval_err_w / (rel_tol * value)) ** 2) + 1
        raise InsufficientPathsError(required)
    return GreenEstimate(value=value, error_bound=err, n_nodes=n_nodes,
                         tail_bound=0.5 * tail)
