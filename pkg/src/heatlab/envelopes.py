"""Analytic envelope shapes for the kernel and its Green's function.

Every shape is an explicit positive function of (t, x, y) depending on the
growth profile.  Two-sided comparisons are parametrized by four constants:
multiplicative prefactors c1 (lower) and c3 (upper), and argument scales c2
and c4 that multiply the exponent bracket.  Prefactors such as t^{-d/2} and
the dimension corrections of the Green's shape are never rescaled.

All evaluation happens in log space; linear values below exp(-745) are
reported as 0.0 with an underflow flag on the enclosing pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potentials import ProfileG, crossover_time, eval_g, regime

__all__ = [
    "ComparabilityConstants",
    "EnvelopePair",
    "UNDERFLOW_LOG",
    "small_time_shape",
    "tail_profile",
    "large_time_shape",
    "envelope_two_regime",
    "envelope_power_law",
    "gamma_green",
    "envelope_green",
    "log_shape_small_time",
    "log_tail_profile",
    "log_shape_large_time",
    "log_shape_power_law",
    "log_gamma_green",
    "log_shape_green",
    "make_log_shape",
    "boundary_ratio_stats",
]

UNDERFLOW_LOG = -745.0

SHAPE_SHORT_TIME = "short_time_gauss"
SHAPE_LONG_TIME = "long_time_product"
SHAPE_POWER_NEAR = "power_near"
SHAPE_POWER_FAR = "power_far"
SHAPE_GREEN = "green_gamma"


class SingularPointError(ValueError):
    pass


@dataclass(frozen=True)
class ComparabilityConstants:
    """(c1, c2) scale the lower envelope, (c3, c4) the upper one."""

    c1: float
    c2: float
    c3: float
    c4: float

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def ones(cls):
        return cls(1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class EnvelopePair:
    lower: float
    upper: float
    shape_id: str
    constants: ComparabilityConstants
    log_lower: float = -math.inf
    log_upper: float = -math.inf
    underflow: bool = False

    def __post_init__(self):
        if self.lower > self.upper * (1 + 1e-12) + 1e-300:
            raise ValueError("envelope lower bound exceeds upper bound")


def _norms(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = float(np.sqrt(np.sum(x * x)))
    ny = float(np.sqrt(np.sum(y * y)))
    r = float(np.sqrt(np.sum((x - y) ** 2)))
    return nx, ny, r


def _lin(logv: float) -> tuple[float, bool]:
    if logv < UNDERFLOW_LOG:
        return 0.0, True
    return math.exp(logv), False


# ---------------------------------------------------------------------------
# short-time regime: gaussian factor times the confinement penalty

def log_shape_small_time(profile: ProfileG, d: int, t: float, x, y,
                         scale: float = 1.0) -> float:
    """log of t^{-d/2} * exp(-scale * [r^2/t + t*min(g) + r*sqrt(max(g))])."""
    if t <= 0:
        raise ValueError("t must be positive")
    nx, ny, r = _norms(x, y)
    gx, gy = eval_g(profile, nx), eval_g(profile, ny)
    bracket = r * r / t + t * min(gx, gy) + r * math.sqrt(max(gx, gy))
    return -0.5 * d * math.log(t) - scale * bracket


def small_time_shape(profile: ProfileG, d: int, t: float, x, y,
                     scale: float = 1.0) -> float:
    return _lin(log_shape_small_time(profile, d, t, x, y, scale))[0]


def log_tail_profile(profile: ProfileG, t: float, x, scale: float = 1.0) -> float:
    """log of exp(-scale * [(1+|x|)sqrt(g(|x|)) + (1+|x|)^2/t])."""
    if t <= 0:
        raise ValueError("t must be positive")
    nx = float(np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2)))
    g = eval_g(profile, nx)
    return -scale * ((1.0 + nx) * math.sqrt(g) + (1.0 + nx) ** 2 / t)


def tail_profile(profile: ProfileG, t: float, x, scale: float = 1.0) -> float:
    return _lin(log_tail_profile(profile, t, x, scale))[0]


def log_shape_large_time(profile: ProfileG, d: int, t: float, x, y,
                         scale: float = 1.0) -> float:
    """log of exp(-scale*t) * psi(t,x) * psi(t,y) with psi = tail_profile."""
    return (-scale * t
            + log_tail_profile(profile, t, x, scale)
            + log_tail_profile(profile, t, y, scale))


def large_time_shape(profile: ProfileG, d: int, t: float, x, y,
                     scale: float = 1.0) -> float:
    return _lin(log_shape_large_time(profile, d, t, x, y, scale))[0]


def _pair(log_shape, constants: ComparabilityConstants, shape_id: str,
          *args) -> EnvelopePair:
    ll = math.log(constants.c1) + log_shape(*args, constants.c2)
    lu = math.log(constants.c3) + log_shape(*args, constants.c4)
    lower, uf1 = _lin(ll)
    upper, uf2 = _lin(lu)
    if lower > upper:  # degenerate constants can invert the band
        lower, upper = upper, lower
        ll, lu = lu, ll
    return EnvelopePair(lower=lower, upper=upper, shape_id=shape_id,
                        constants=constants, log_lower=ll, log_upper=lu,
                        underflow=uf1 or uf2)


def envelope_two_regime(profile: ProfileG, d: int, constants: ComparabilityConstants,
                  c0_regime: float, t: float, x, y) -> EnvelopePair:
    """Two-sided envelope with the regime dispatched at t = c0 * t0(|x|^|y|)."""
    if regime(profile, c0_regime, t, x, y) == "small_time":
        return _pair(lambda tt, xx, yy, s: log_shape_small_time(profile, d, tt, xx, yy, s),
                     constants, SHAPE_SHORT_TIME, t, x, y)
    return _pair(lambda tt, xx, yy, s: log_shape_large_time(profile, d, tt, xx, yy, s),
                 constants, SHAPE_LONG_TIME, t, x, y)


# ---------------------------------------------------------------------------
# explicit power-law case split

def log_shape_power_law(alpha: float, d: int, t: float, x, y,
                   scale: float = 1.0) -> float:
    """Case-split envelope for V(x) = |x|^alpha.

    Points are ordered so |x| <= |y|.  "Near" means r <= |y|/2 or |y| <= 2;
    the time branch splits at max((1+|x|)^{1-a/2}, (1+|y|)^{1-a/2}).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if t <= 0:
        raise ValueError("t must be positive")
    nx, ny, r = _norms(x, y)
    if nx > ny:
        nx, ny = ny, nx
    t_split = max((1.0 + nx) ** (1.0 - alpha / 2), (1.0 + ny) ** (1.0 - alpha / 2))
    near = (r <= ny / 2) or (ny <= 2)
    if t <= t_split:
        if near:
            bracket = r * r / t + t * (1.0 + ny) ** alpha
        else:
            bracket = r * r / t + (1.0 + ny) ** (1.0 + alpha / 2)
        return -0.5 * d * math.log(t) - scale * bracket
    bracket = t + (1.0 + ny) ** (1.0 + alpha / 2)
    return -scale * bracket


def power_law_case(x, y) -> str:
    nx, ny, r = _norms(x, y)
    if nx > ny:
        nx, ny = ny, nx
    return SHAPE_POWER_NEAR if (r <= ny / 2 or ny <= 2) else SHAPE_POWER_FAR


def envelope_power_law(alpha: float, d: int, constants: ComparabilityConstants,
                  t: float, x, y) -> EnvelopePair:
    return _pair(lambda tt, xx, yy, s: log_shape_power_law(alpha, d, tt, xx, yy, s),
                 constants, power_law_case(x, y), t, x, y)


# ---------------------------------------------------------------------------
# Green's function comparison shape

def log_gamma_green(profile: ProfileG, d: int, x, y, scale: float = 1.0) -> float:
    """log of exp(-scale*R) times the dimension correction, R = r*sqrt(max g).

    The correction (d=2 log factor, d=1 reciprocal) is never rescaled.
    """
    nx, ny, r = _norms(x, y)
    if r == 0.0:
        raise SingularPointError("gamma_green is singular at x == y")
    R = r * math.sqrt(max(eval_g(profile, nx), eval_g(profile, ny)))
    out = -scale * R
    if d == 2:
        out += math.log(max(math.log(1.0 / R), 1.0))
    elif d == 1:
        out += -math.log(R)
    return out


def gamma_green(profile: ProfileG, d: int, x, y, scale: float = 1.0) -> float:
    return _lin(log_gamma_green(profile, d, x, y, scale))[0]


def log_shape_green(profile: ProfileG, d: int, x, y, scale: float = 1.0) -> float:
    nx, ny, r = _norms(x, y)
    if r == 0.0:
        raise SingularPointError("green envelope is singular at x == y")
    return -(d - 2) * math.log(r) + log_gamma_green(profile, d, x, y, scale)


def envelope_green(profile: ProfileG, d: int, constants: ComparabilityConstants,
                   x, y) -> EnvelopePair:
    ll = math.log(constants.c1) + log_shape_green(profile, d, x, y, constants.c2)
    lu = math.log(constants.c3) + log_shape_green(profile, d, x, y, constants.c4)
    lower, uf1 = _lin(ll)
    upper, uf2 = _lin(lu)
    if lower > upper:
        lower, upper = upper, lower
        ll, lu = lu, ll
    return EnvelopePair(lower=lower, upper=upper, shape_id=SHAPE_GREEN,
                        constants=constants, log_lower=ll, log_upper=lu,
                        underflow=uf1 or uf2)


# ---------------------------------------------------------------------------
# glue for the constant-fitting machinery

def make_log_shape(shape_id: str, profile: ProfileG = None, d: int = 1,
                   alpha: float = None):
    """Return f(scale, t, x, y) -> log shape for the requested shape family.

    Green's shape ignores t (pass anything).
    """
    if shape_id == SHAPE_SHORT_TIME:
        return lambda s, t, x, y: log_shape_small_time(profile, d, t, x, y, s)
    if shape_id == SHAPE_LONG_TIME:
        return lambda s, t, x, y: log_shape_large_time(profile, d, t, x, y, s)
    if shape_id in (SHAPE_POWER_NEAR, SHAPE_POWER_FAR):
        return lambda s, t, x, y: log_shape_power_law(alpha, d, t, x, y, s)
    if shape_id == SHAPE_GREEN:
        return lambda s, t, x, y: log_shape_green(profile, d, x, y, s)
    raise ValueError(f"unknown shape_id {shape_id!r}")


def boundary_ratio_stats(profile: ProfileG, d: int, c0_regime: float,
                         s_grid) -> dict:
    """Ratio of the two regime shapes on the boundary t = c0*t0(|x|).

    The two formulas only agree up to constants there; this records the
    realized spread on a diagonal sample (x = y at radius s).
    """
    ratios = []
    for s in s_grid:
        x = np.zeros(d)
        x[0] = s
        t = c0_regime * crossover_time(profile, s)
        ratios.append(log_shape_small_time(profile, d, t, x, x)
                      - log_shape_large_time(profile, d, t, x, x))
    ratios = np.asarray(ratios)
    return {"log_ratio_min": float(ratios.min()),
            "log_ratio_max": float(ratios.max())}
