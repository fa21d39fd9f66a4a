"""Confining potentials and their radial growth profiles.

A potential V on R^d is tied to a profile g(r) >= 1 through the sandwich
C1*g(|x|) <= V(x) <= C2*g(|x|) away from the unit ball.  The profile drives
everything downstream: the crossover time t0(s) = (1+s)/sqrt(g(s)) that
separates the short-time and long-time kernel regimes, and the analytic
envelopes evaluated in :mod:`heatlab.envelopes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ProfileG",
    "PotentialSpec",
    "MonotonicityClass",
    "HReport",
    "eval_g",
    "check_assumption_h",
    "crossover_time",
    "classify_t0",
    "regime",
    "power_potential",
    "harmonic_potential",
    "exponential_potential",
    "zero_potential",
    "tabulated_potential",
]

# integer codes used by the compiled kernels (see _kernels_*.py)
V_ZERO = 0
V_POWER = 1  # params = (coeff, exponent): coeff * |x|**exponent
V_EXP = 2    # params = (coeff, rate):     coeff * exp(rate * |x|)


class InvalidProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileG:
    """Radial growth profile g: [0, inf) -> [1, inf), nondecreasing.

    kind is one of "power", "exponential", "tabulated".

    power:       g(r) = (1 + r)**alpha,  params = (alpha,)
    exponential: g(r) = exp(rate * r),   params = (rate,)
    tabulated:   piecewise linear in (log(1+r), log g) through the knots,
                 extrapolated beyond the last knot with the final slope.
    """

    kind: str
    params: tuple = ()
    knots: Optional[np.ndarray] = None  # shape (m, 2), columns (r, g(r))
    doubling_c0: Optional[float] = None

    def __post_init__(self):
        if self.kind == "power":
            (alpha,) = self.params
            if alpha <= 0:
                raise InvalidProfileError("power profile needs alpha > 0")
            if self.doubling_c0 is None:
                object.__setattr__(self, "doubling_c0", 2.0**alpha)
        elif self.kind == "exponential":
            (rate,) = self.params
            if rate <= 0:
                raise InvalidProfileError("exponential profile needs rate > 0")
        elif self.kind == "tabulated":
            if self.knots is None or len(self.knots) == 0:
                raise InvalidProfileError("tabulated profile needs at least one knot")
            k = np.asarray(self.knots, dtype=float)
            if k.ndim != 2 or k.shape[1] != 2:
                raise InvalidProfileError("knots must be (m, 2) pairs (r, g)")
            if np.any(np.diff(k[:, 0]) <= 0):
                raise InvalidProfileError("knot radii must be strictly increasing")
            if np.any(k[:, 1] < 1.0):
                raise InvalidProfileError("profile values must be >= 1")
            if np.any(np.diff(k[:, 1]) < 0):
                raise InvalidProfileError("profile values must be nondecreasing")
            object.__setattr__(self, "knots", k)
        else:
            raise InvalidProfileError(f"unknown profile kind {self.kind!r}")

    def __call__(self, r):
        return eval_g(self, r)


def eval_g(profile: ProfileG, r):
    """Evaluate g(r) for scalar or array r >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("profile argument must be >= 0")
    if profile.kind == "power":
        (alpha,) = profile.params
        out = (1.0 + r) ** alpha
    elif profile.kind == "exponential":
        (rate,) = profile.params
        out = np.exp(rate * r)
    else:
        out = _eval_tabulated(profile.knots, r)
    return float(out) if out.ndim == 0 else out


def log_eval_g(profile: ProfileG, r):
    """log g(r); safe where g itself would overflow."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("profile argument must be >= 0")
    if profile.kind == "power":
        (alpha,) = profile.params
        out = alpha * np.log1p(r)
    elif profile.kind == "exponential":
        (rate,) = profile.params
        out = rate * r
    else:
        out = np.log(_eval_tabulated(profile.knots, r))
    return float(out) if out.ndim == 0 else out


def _eval_tabulated(knots: np.ndarray, r: np.ndarray) -> np.ndarray:
    # piecewise linear in (log(1+r), log g); below the first knot the value is
    # clamped, beyond the last knot the final segment slope carries on
    lr = np.log1p(np.asarray(r, dtype=float))
    kl = np.log1p(knots[:, 0])
    kg = np.log(knots[:, 1])
    out = np.interp(lr, kl, kg)
    if len(knots) >= 2:
        slope = (kg[-1] - kg[-2]) / (kl[-1] - kl[-2]) if kl[-1] > kl[-2] else 0.0
        above = lr > kl[-1]
        if np.any(above):
            out = np.where(above, kg[-1] + slope * (lr - kl[-1]), out)
    return np.exp(out)


@dataclass(frozen=True)
class PotentialSpec:
    """A nonnegative locally bounded potential together with its profile.

    ``v`` maps an array of points with shape (..., dim) to values of shape
    (...,).  ``h_lower``/``h_upper`` are the sandwich constants tying V to
    the profile for |x| > 1.  ``v_code``/``v_params`` give the compiled
    kernels a closed-form route to V; potentials without one fall back to
    the vectorized numpy path automatically.
    """

    dim: int
    v: Callable[[np.ndarray], np.ndarray]
    profile: ProfileG
    h_lower: float
    h_upper: float
    name: str = "custom"
    v_code: int = -1
    v_params: tuple = ()
    confining: bool = True

    def v_at(self, x) -> float:
        """Pointwise V(x) for a single point (scalar in d=1 or length-d vector)."""
        pt = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, self.dim)
        return float(self.v(pt)[0])


@dataclass(frozen=True)
class MonotonicityClass:
    label: str  # almost_increasing | almost_decreasing | constant_like | indeterminate
    witness_Cstar: float
    witness_Cupper: float

    def __post_init__(self):
        if self.witness_Cstar > self.witness_Cupper:
            raise ValueError("witness constants must satisfy Cstar <= Cupper")


@dataclass
class HReport:
    radii: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _sphere_directions(d: int, n: int) -> np.ndarray:
    """Deterministic spread of n unit vectors in R^d."""
    if d == 1:
        base = np.array([[1.0], [-1.0]])
        return base[np.arange(n) % 2]
    if d == 2:
        ang = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    # Fibonacci-style spiral generalizes poorly beyond d=3; a seeded gaussian
    # sample is deterministic and good enough for sandwich checking
    gen = np.random.Generator(np.random.Philox(key=0x9E3779B97F4A7C15))
    pts = gen.standard_normal((n, d))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def check_assumption_h(spec: PotentialSpec, radii: Sequence[float],
                       directions_per_radius: int = 8) -> HReport:
    """Sample V on spheres and test C1*g(r) <= V <= C2*g(r) at each point.

    Violations are returned as data, not raised.
    """
    if directions_per_radius < 1:
        raise ValueError("directions_per_radius must be >= 1")
    report = HReport(radii=list(radii))
    dirs = _sphere_directions(spec.dim, directions_per_radius)
    for r in radii:
        if r <= 1:
            raise ValueError("assumption sandwich applies to radii > 1")
        g = eval_g(spec.profile, r)
        lo, hi = spec.h_lower * g, spec.h_upper * g
        vals = spec.v(r * dirs)
        bad = (vals < lo - 1e-12 * hi) | (vals > hi * (1 + 1e-12))
        for i in np.nonzero(bad)[0]:
            report.violations.append(
                {"r": float(r), "direction": dirs[i].tolist(),
                 "v": float(vals[i]), "lower": float(lo), "upper": float(hi)})
    return report


def crossover_time(profile: ProfileG, s):
    """t0(s) = (1+s)/sqrt(g(s)); the space-dependent regime boundary."""
    s = np.asarray(s, dtype=float)
    out = np.exp(np.log1p(s) - 0.5 * np.asarray(log_eval_g(profile, s)))
    return float(out) if out.ndim == 0 else out


def classify_t0(profile: ProfileG, r_max: float = 1e4, n_samples: int = 64,
                factor: float = 4.0) -> MonotonicityClass:
    """Classify t0 as almost increasing/decreasing on a log grid in [0, r_max].

    "Almost increasing" here means the running maximum never exceeds the local
    value by more than ``factor``; the realized factor is returned as the
    witness (Cstar = 1/realized, Cupper = 1).
    """
    if n_samples < 16:
        raise ValueError("need at least 16 samples")
    grid = np.concatenate([[0.0], np.geomspace(1e-2, r_max, n_samples - 1)])
    t0 = crossover_time(profile, grid)
    inc_factor = float(np.max(np.maximum.accumulate(t0) / t0))
    dec_factor = float(np.max(np.maximum.accumulate(t0[::-1])[::-1] / t0))
    inc = inc_factor <= factor
    dec = dec_factor <= factor
    if inc and dec:
        label, realized = "constant_like", max(inc_factor, dec_factor)
    elif inc:
        label, realized = "almost_increasing", inc_factor
    elif dec:
        label, realized = "almost_decreasing", dec_factor
    else:
        label, realized = "indeterminate", min(inc_factor, dec_factor)
    return MonotonicityClass(label=label, witness_Cstar=1.0 / realized,
                             witness_Cupper=1.0)


def _norm(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(np.sqrt(np.sum(p * p)))


def regime(profile: ProfileG, c0_regime: float, t: float, x, y) -> str:
    """Label (t, x, y) as "small_time" or "large_time".

    The split is at t = c0_regime * t0(min(|x|, |y|)).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    s = min(_norm(x), _norm(y))
    return "small_time" if t <= c0_regime * crossover_time(profile, s) else "large_time"


# ---------------------------------------------------------------------------
# ready-made potentials

def power_potential(dim: int, alpha: float, coeff: float = 1.0) -> PotentialSpec:
    """V(x) = coeff * |x|**alpha with profile g(r) = (1+r)**alpha.

    The sandwich constants coeff*2**-alpha and coeff are exact for |x| >= 1.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    profile = ProfileG("power", (alpha,))

    def v(pts):
        pts = np.asarray(pts, dtype=float)
        return coeff * np.linalg.norm(pts, axis=-1) ** alpha

    return PotentialSpec(dim=dim, v=v, profile=profile,
                         h_lower=coeff * 2.0 ** (-alpha), h_upper=coeff,
                         name=f"power(alpha={alpha:g},coeff={coeff:g})",
                         v_code=V_POWER, v_params=(coeff, alpha))


def harmonic_potential(dim: int, omega: float) -> PotentialSpec:
    """V(x) = 0.5 * omega^2 * |x|^2; the exactly solvable oscillator."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    c = 0.5 * omega * omega
    profile = ProfileG("power", (2.0,))

    def v(pts):
        pts = np.asarray(pts, dtype=float)
        return c * np.sum(pts * pts, axis=-1)

    return PotentialSpec(dim=dim, v=v, profile=profile,
                         h_lower=c / 4.0, h_upper=c,
                         name=f"harmonic(omega={omega:g})",
                         v_code=V_POWER, v_params=(c, 2.0))


def exponential_potential(dim: int, rate: float, coeff: float = 1.0) -> PotentialSpec:
    """V(x) = coeff * exp(rate*|x|); grows too fast for any global doubling
    constant, so class-G checks only hold on bounded grids."""
    profile = ProfileG("exponential", (rate,))

    def v(pts):
        pts = np.asarray(pts, dtype=float)
        return coeff * np.exp(rate * np.linalg.norm(pts, axis=-1))

    # V(x) = coeff * g(|x|) exactly, so the sandwich is an equality
    return PotentialSpec(dim=dim, v=v, profile=profile,
                         h_lower=coeff, h_upper=coeff,
                         name=f"exp(rate={rate:g},coeff={coeff:g})",
                         v_code=V_EXP, v_params=(coeff, rate))


def zero_potential(dim: int) -> PotentialSpec:
    """V = 0.  Violates the confinement assumption; kept for calibration runs."""
    profile = ProfileG("power", (1.0,))

    def v(pts):
        pts = np.asarray(pts, dtype=float)
        return np.zeros(pts.shape[:-1])

    return PotentialSpec(dim=dim, v=v, profile=profile, h_lower=1.0, h_upper=1.0,
                         name="zero", v_code=V_ZERO, v_params=(),
                         confining=False)


def tabulated_potential(dim: int, knots, h_lower: float = 0.5,
                        h_upper: float = 2.0) -> PotentialSpec:
    """Potential read off a tabulated profile: V(x) = g(|x|)."""
    profile = ProfileG("tabulated", (), knots=np.asarray(knots, dtype=float))

    def v(pts):
        pts = np.asarray(pts, dtype=float)
        return eval_g(profile, np.linalg.norm(pts, axis=-1))

    return PotentialSpec(dim=dim, v=v, profile=profile,
                         h_lower=h_lower, h_upper=h_upper, name="tabulated")
