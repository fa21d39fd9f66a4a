"""Monte Carlo kernel estimation through pinned Brownian paths.

The pointwise estimator is p(t,x,y) = q(t,x,y) * E[exp(-I)] with I the
integral of the potential along a Brownian bridge from x to y, discretized
by the trapezoid rule on a dyadic grid.  Survival mass T_t 1(x) uses free
paths (a pinned construction with a sampled endpoint).  The step count is
doubled until successive estimates agree within the noise, which the dyadic
midpoint construction makes cheap: refining a path extends its stream
instead of redrawing it.

All draws go through counter-addressable streams (see heatlab.rng), so
estimates are bit-identical for a given (seed, inputs) no matter how the
work is chunked or scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels_numpy
from .backend import kernels
from .potentials import PotentialSpec
from .reference import (IntervalDirichletSpec, exit_time_grid_cdf,
                        gaussian_kernel)
from .rng import BlockLayout, derive_key

__all__ = [
    "McConfig",
    "KernelEstimate",
    "EngineError",
    "sample_bridge",
    "sample_bridge_batch",
    "kernel_mc",
    "survival_mc",
    "exit_identity_check",
    "ExitIdentityReport",
]

_CHUNK = 16384

# stream-purpose tags; part of the reproducibility contract
_TAG_BRIDGE = 1
_TAG_SURVIVAL = 2
_TAG_EXIT = 3


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100_000
    n_steps: int = 256
    seed: int = 0
    antithetic: bool = False
    max_steps: int = 4096

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")


@dataclass(frozen=True)
class KernelEstimate:
    value: float
    stderr: float
    method: str  # mc_bridge | mc_free | pde | oracle
    n_effective: int
    n_steps: int = 0

    def __post_init__(self):
        if self.value < 0 or self.stderr < 0:
            raise ValueError("estimate value and stderr must be nonnegative")


def _pow2_at_least(n: int) -> int:
    return 1 << max(1, (n - 1).bit_length())


def _point(x, d: int) -> np.ndarray:
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.shape != (d,):
        raise ValueError(f"point has shape {p.shape}, expected ({d},)")
    return p


def _bridge_layout(n_streams: int, levels: int, d: int,
                   endpoint: bool) -> BlockLayout:
    widths = ([d] if endpoint else []) + [(1 << lev) * d for lev in range(levels)]
    return BlockLayout(n_streams, widths)


def _fetch_z(layout: BlockLayout, key, first: int, last: int, levels: int,
             d: int, endpoint: bool) -> np.ndarray:
    """Interior normals for streams [first, last): shape (n, m-1, d)."""
    base = 1 if endpoint else 0
    parts = [layout.fetch_normals(key, base + lev, first, last)
             .reshape(last - first, 1 << lev, d)
             for lev in range(levels)]
    return np.concatenate(parts, axis=1)


def sample_bridge_batch(d: int, t: float, x, y, n_steps: int, seed: int,
                        n: int, negate: bool = False) -> np.ndarray:
    """n pinned paths from x to y, shape (n, n_steps+1, d).

    Path i depends only on (seed, i); n_steps must be a power of two.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    m = _pow2_at_least(n_steps)
    levels = m.bit_length() - 1
    x = _point(x, d)
    y = _point(y, d)
    key = derive_key(seed, _TAG_BRIDGE)
    layout = _bridge_layout(n, levels, d, endpoint=False)
    kern = kernels()
    out = np.empty((n, m + 1, d))
    for a in range(0, n, _CHUNK):
        b = min(a + _CHUNK, n)
        z = _fetch_z(layout, key, a, b, levels, d, endpoint=False)
        if negate:
            z = -z
        out[a:b, 0, :] = x
        out[a:b, m, :] = y
        kern.fill_bridge(out[a:b], z, t)
    return out


def sample_bridge(d: int, t: float, x, y, n_steps: int, seed: int,
                  index: int = 0, n_streams: int = None) -> np.ndarray:
    """Single pinned path: stream ``index`` of a family of ``n_streams``.

    Stream addresses are laid out per family, so the family size is part of
    the address; pass the same n_streams as the batch to reproduce one of
    its paths.
    """
    m = _pow2_at_least(n_steps)
    levels = m.bit_length() - 1
    x = _point(x, d)
    y = _point(y, d)
    key = derive_key(seed, _TAG_BRIDGE)
    if n_streams is None:
        n_streams = index + 1
    layout = _bridge_layout(n_streams, levels, d, endpoint=False)
    z = _fetch_z(layout, key, index, index + 1, levels, d, endpoint=False)
    path = np.empty((1, m + 1, d))
    path[:, 0, :] = x
    path[:, m, :] = y
    kernels().fill_bridge(path, z, t)
    return path[0]


def _weights_for(spec: PotentialSpec, paths: np.ndarray, t: float) -> np.ndarray:
    if spec.v_code >= 0:
        params = np.asarray(spec.v_params, dtype=float)
        w = kernels().path_weights(paths, t, spec.v_code, params)
    else:
        w = _kernels_numpy.path_weights_callable(paths, t, spec.v)
    if not np.all(np.isfinite(w)):
        raise EngineError("potential produced non-finite values along a path; "
                          "it must be locally bounded")
    return w


def _mc_pass(spec: PotentialSpec, cfg: McConfig, t: float, x: np.ndarray,
             y_or_none, levels: int, key) -> tuple[float, float, int]:
    """One (mean, stderr, n_effective) sweep at 2**levels steps.

    y_or_none = None samples free paths (endpoint drawn at variance t).
    """
    d = spec.dim
    m = 1 << levels
    endpoint = y_or_none is None
    n_streams = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    n_streams = max(n_streams, 1)
    layout = _bridge_layout(n_streams, levels, d, endpoint)
    kern = kernels()
    agg = np.empty(n_streams)
    for a in range(0, n_streams, _CHUNK):
        b = min(a + _CHUNK, n_streams)
        z = _fetch_z(layout, key, a, b, levels, d, endpoint)
        if endpoint:
            z_end = layout.fetch_normals(key, 0, a, b).reshape(b - a, d)
        paths = np.empty((b - a, m + 1, d))
        paths[:, 0, :] = x
        paths[:, m, :] = (x + math.sqrt(t) * z_end) if endpoint else y_or_none
        kern.fill_bridge(paths, z, t)
        w = _weights_for(spec, paths, t)
        if cfg.antithetic:
            paths[:, 0, :] = x
            paths[:, m, :] = (x - math.sqrt(t) * z_end) if endpoint else y_or_none
            kern.fill_bridge(paths, -z, t)
            w = 0.5 * (w + _weights_for(spec, paths, t))
        agg[a:b] = w
    mean = float(np.mean(agg))
    if n_streams > 1:
        stderr = float(np.std(agg, ddof=1) / math.sqrt(n_streams))
    else:
        stderr = 0.0
    return mean, stderr, n_streams


def _refined_mc(spec, cfg, t, x, y_or_none, key):
    levels = _pow2_at_least(cfg.n_steps).bit_length() - 1
    mean, stderr, neff = _mc_pass(spec, cfg, t, x, y_or_none, levels, key)
    while (1 << levels) < cfg.max_steps:
        levels += 1
        mean2, stderr2, neff = _mc_pass(spec, cfg, t, x, y_or_none, levels, key)
        close = abs(mean2 - mean) < max(1e-4 * abs(mean2), 0.25 * stderr2)
        mean, stderr = mean2, stderr2
        if close:
            break
    return mean, stderr, neff, 1 << levels


def kernel_mc(spec: PotentialSpec, cfg: McConfig, t: float, x, y,
              stream_tag: int = 0) -> KernelEstimate:
    """Pointwise kernel estimate q(t,x,y) * E[exp(-integral of V)].

    With V = 0 every weight is exactly one, so the estimate equals the free
    kernel with zero statistical error.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    d = spec.dim
    x = _point(x, d)
    y = _point(y, d)
    key = derive_key(cfg.seed, _TAG_BRIDGE, stream_tag)
    q = gaussian_kernel(d, t, x, y)
    mean, stderr, neff, steps = _refined_mc(spec, cfg, t, x, y, key)
    return KernelEstimate(value=q * mean, stderr=q * stderr,
                          method="mc_bridge", n_effective=neff, n_steps=steps)


def survival_mc(spec: PotentialSpec, cfg: McConfig, t: float, x,
                stream_tag: int = 0) -> KernelEstimate:
    """Estimate of the surviving mass E_x[exp(-integral of V)] over free paths."""
    if t <= 0:
        raise ValueError("t must be positive")
    d = spec.dim
    x = _point(x, d)
    key = derive_key(cfg.seed, _TAG_SURVIVAL, stream_tag)
    mean, stderr, neff, steps = _refined_mc(spec, cfg, t, x, None, key)
    return KernelEstimate(value=mean, stderr=stderr, method="mc_free",
                          n_effective=neff, n_steps=steps)


# ---------------------------------------------------------------------------
# exit-time decomposition check (one dimension)

@dataclass(frozen=True)
class ExitIdentityReport:
    lhs: KernelEstimate
    rhs: KernelEstimate
    z_score: float


def _unit_bridges(z: np.ndarray) -> np.ndarray:
    """Pinned 0->0 paths of unit duration from level-major normals."""
    n, miv, d = z.shape
    m = miv + 1
    paths = np.zeros((n, m + 1, d))
    _kernels_numpy.fill_bridge(paths, z, 1.0)
    return paths


def _leg_weight(spec: PotentialSpec, fluct: np.ndarray, start: np.ndarray,
                end: np.ndarray, dur: np.ndarray) -> np.ndarray:
    """exp(-trapz V) along start->end paths with per-path durations.

    fluct holds unit-duration pinned 0->0 paths; rescaling by sqrt(duration)
    and adding the straight line gives the bridge of the right law.
    """
    n, m1 = fluct.shape[0], fluct.shape[1]
    frac = np.linspace(0.0, 1.0, m1)
    line = start[:, None] + (end - start)[:, None] * frac[None, :]
    path = line + np.sqrt(dur)[:, None] * fluct[:, :, 0]
    vals = spec.v(path[..., None])
    dt = dur / (m1 - 1)
    integral = dt * (0.5 * vals[:, 0] + vals[:, 1:-1].sum(axis=1)
                     + 0.5 * vals[:, -1])
    return np.exp(-integral)


def _fp_exit_paths(z3: np.ndarray, radius: float, tau: np.ndarray) -> np.ndarray:
    """Paths from 0 that first hit +radius exactly at their final grid point.

    Uses the time-reversal identity: radius minus a first-passage path to
    +radius over [0, tau] is a three-dimensional Bessel bridge from 0 to
    radius, realized here as the norm of a 3d pinned path.  Returns positions
    on the uniform grid of [0, tau] per path, shape (n, m+1).
    """
    n, miv, _ = z3.shape
    m = miv + 1
    fluct = np.zeros((n, m + 1, 3))
    _kernels_numpy.fill_bridge(fluct, z3, 1.0)
    frac = np.linspace(0.0, 1.0, m + 1)
    bb = np.sqrt(tau)[:, None, None] * fluct
    bb[:, :, 0] += radius * frac[None, :]
    bes = np.sqrt(np.sum(bb * bb, axis=2))
    return radius - bes[:, ::-1]


def exit_identity_check(spec: PotentialSpec, cfg: McConfig, t: float, x, y,
                        u_radius: float, n_sub: int = 64,
                        exit_leg: str = "fp_bridge") -> ExitIdentityReport:
    """Compare p(t,x,y) against its decomposition at the first exit from
    the interval (x - u_radius, x + u_radius).

    The right-hand side draws (exit time, exit side) from the exact interval
    exit law, weights the path to the exit by exp(-integral of V), and closes
    with an unbiased single-path estimate of the remaining kernel.  Requires
    y outside the closed interval and dimension one.
    """
    if spec.dim != 1:
        raise ValueError("exit identity check is implemented in dimension one")
    if u_radius <= 0:
        raise ValueError("u_radius must be positive")
    xf = float(np.atleast_1d(x)[0])
    yf = float(np.atleast_1d(y)[0])
    if abs(xf - yf) <= u_radius:
        raise ValueError("y must lie outside the closed exit interval")

    lhs = kernel_mc(spec, cfg, t, x, y, stream_tag=_TAG_EXIT)

    ispec = IntervalDirichletSpec(half_width=u_radius)
    tgrid, cdf = exit_time_grid_cdf(ispec, 0.0)

    n = cfg.n_paths
    msub = _pow2_at_least(n_sub)
    lev = msub.bit_length() - 1
    exit_w = 3 * (msub - 1) if exit_leg == "fp_bridge" else (msub - 1)
    layout = BlockLayout(n, [1, 1, exit_w, msub - 1])
    key = derive_key(cfg.seed, _TAG_EXIT)

    samples = np.empty(n)
    for a in range(0, n, _CHUNK):
        b = min(a + _CHUNK, n)
        u_tau = layout.fetch_uniforms(key, 0, a, b)[:, 0]
        u_side = layout.fetch_uniforms(key, 1, a, b)[:, 0]
        tau = np.interp(u_tau, cdf, tgrid)
        side = np.where(u_side < 0.5, -1.0, 1.0)
        zpt = xf + side * u_radius

        zraw = layout.fetch_normals(key, 2, a, b)
        if exit_leg == "fp_bridge":
            fp = _fp_exit_paths(zraw.reshape(b - a, msub - 1, 3), u_radius, tau)
            path = xf + side[:, None] * fp
            vals = spec.v(path[..., None])
            dtv = tau / msub
            integral = dtv * (0.5 * vals[:, 0] + vals[:, 1:-1].sum(axis=1)
                              + 0.5 * vals[:, -1])
            w_exit = np.exp(-integral)
        else:
            fluct = _unit_bridges(zraw.reshape(b - a, msub - 1, 1))
            w_exit = _leg_weight(spec, fluct, np.full(b - a, xf), zpt, tau)

        rem = t - tau
        alive = rem > 1e-12
        remc = np.where(alive, rem, 1.0)
        z2 = layout.fetch_normals(key, 3, a, b)
        fl2 = _unit_bridges(z2.reshape(b - a, msub - 1, 1))
        w_inner = _leg_weight(spec, fl2, zpt, np.full(b - a, yf), remc)
        qrem = np.where(
            alive,
            np.exp(-0.5 * np.log(2 * np.pi * remc) - (zpt - yf) ** 2 / (2 * remc)),
            0.0)
        samples[a:b] = np.where(alive, w_exit * qrem * w_inner, 0.0)

    rhs_val = float(np.mean(samples))
    rhs_err = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    rhs = KernelEstimate(value=rhs_val, stderr=rhs_err, method="mc_bridge",
                         n_effective=n, n_steps=msub)
    denom = math.sqrt(lhs.stderr ** 2 + rhs.stderr ** 2)
    z = abs(lhs.value - rhs.value) / denom if denom > 0 else math.inf
    return ExitIdentityReport(lhs=lhs, rhs=rhs, z_score=z)
