import math

import numpy as np
import pytest

from heatlab.potentials import (InvalidProfileError, PotentialSpec, ProfileG,
                                check_assumption_h, classify_t0,
                                crossover_time, eval_g, exponential_potential,
                                harmonic_potential, power_potential, regime,
                                tabulated_potential, zero_potential)


def test_eval_g_power_examples():
    prof = ProfileG("power", (2.0,))
    assert eval_g(prof, 3.0) == 16.0
    assert eval_g(prof, 0.0) == 1.0


def test_eval_g_tabulated_hits_knots_exactly():
    rs = np.array([0.0, 1.0, 2.0, 5.0, 10.0])
    knots = np.column_stack([rs, 1.0 + rs])
    prof = ProfileG("tabulated", (), knots=knots)
    for r, g in knots:
        assert eval_g(prof, r) == pytest.approx(g, rel=1e-14)


def test_eval_g_tabulated_extrapolates_last_slope():
    # knots follow (1+r)^2; log-log extrapolation continues that power
    rs = np.array([0.0, 1.0, 2.0, 4.0])
    knots = np.column_stack([rs, (1.0 + rs) ** 2])
    prof = ProfileG("tabulated", (), knots=knots)
    assert eval_g(prof, 9.0) == pytest.approx(100.0, rel=1e-12)


def test_empty_tabulated_rejected():
    with pytest.raises(InvalidProfileError):
        ProfileG("tabulated", (), knots=np.zeros((0, 2)))


def test_doubling_on_sampled_grid():
    for alpha in (0.5, 1.0, 2.0, 4.0):
        prof = ProfileG("power", (alpha,))
        r = np.geomspace(1e-3, 1e3, 200)
        assert np.all(eval_g(prof, 2 * r) <= prof.doubling_c0 * eval_g(prof, r) * (1 + 1e-12))


def test_profile_nondecreasing_and_at_least_one():
    for prof in (ProfileG("power", (1.5,)), ProfileG("exponential", (0.7,))):
        r = np.linspace(0, 20, 500)
        g = eval_g(prof, r)
        assert np.all(g >= 1.0)
        assert np.all(np.diff(g) >= -1e-12)


def test_assumption_h_power_holds():
    spec = power_potential(3, 2.0)
    rep = check_assumption_h(spec, [2.0, 4.0, 8.0], directions_per_radius=16)
    assert rep.ok


def test_assumption_h_detects_mismatch():
    # V = |x| against a quadratic profile: 4 < 25 at radius 4
    prof = ProfileG("power", (2.0,))
    spec = PotentialSpec(dim=1, v=lambda p: np.linalg.norm(p, axis=-1),
                         profile=prof, h_lower=1.0, h_upper=1.0)
    rep = check_assumption_h(spec, [4.0])
    assert not rep.ok
    assert rep.violations[0]["r"] == 4.0


def test_assumption_h_exponential_exact():
    spec = exponential_potential(2, 1.0)
    rep = check_assumption_h(spec, [1.5, 3.0, 6.0], directions_per_radius=8)
    assert rep.ok


def test_crossover_time_examples():
    p2 = ProfileG("power", (2.0,))
    assert crossover_time(p2, 3.0) == pytest.approx(1.0)
    for s in (0.0, 0.7, 5.0, 123.0):
        assert crossover_time(p2, s) == pytest.approx(1.0)
    p4 = ProfileG("power", (4.0,))
    assert crossover_time(p4, 1.0) == pytest.approx(0.5)


def test_crossover_time_bounded_by_linear():
    # the exponential profile overflows plain evaluation far out; the
    # log-space route keeps t0 positive there
    for prof in (ProfileG("power", (0.5,)), ProfileG("power", (3.0,)),
                 ProfileG("exponential", (1.0,))):
        s = np.geomspace(1e-3, 1e3, 50)
        t0 = crossover_time(prof, s)
        assert np.all(t0 > 0)
        assert np.all(t0 <= 1 + s + 1e-12)


@pytest.mark.parametrize("alpha,label", [
    (1.0, "almost_increasing"),
    (4.0, "almost_decreasing"),
    (2.0, "constant_like"),
])
def test_classify_power_profiles(alpha, label):
    cls = classify_t0(ProfileG("power", (alpha,)), r_max=1e4, n_samples=64)
    assert cls.label == label
    assert cls.witness_Cstar <= cls.witness_Cupper


def test_classify_requires_enough_samples():
    with pytest.raises(ValueError):
        classify_t0(ProfileG("power", (2.0,)), n_samples=8)


def test_regime_examples():
    p2 = ProfileG("power", (2.0,))
    assert regime(p2, 1.0, 0.5, [0.0], [3.0]) == "small_time"
    assert regime(p2, 1.0, 2.0, [0.0], [3.0]) == "large_time"
    p4 = ProfileG("power", (4.0,))
    # t0(1) = 0.5 < 0.6 at the smaller radius
    assert regime(p4, 1.0, 0.6, [1.0], [10.0]) == "large_time"


def test_regime_monotone_in_t():
    p3 = ProfileG("power", (3.0,))
    x, y = [0.5], [2.0]
    ts = np.geomspace(1e-3, 1e2, 64)
    labels = [regime(p3, 1.0, t, x, y) for t in ts]
    flipped = "".join("S" if l == "small_time" else "L" for l in labels)
    assert "LS" not in flipped  # once large, stays large


def test_ready_made_potentials_nonnegative():
    pts = np.random.default_rng(0).normal(size=(50, 2)) * 3
    for spec in (power_potential(2, 1.5), harmonic_potential(2, 2.0),
                 exponential_potential(2, 0.5), zero_potential(2),
                 tabulated_potential(2, [[0.0, 1.0], [1.0, 2.0], [4.0, 5.0]])):
        vals = spec.v(pts)
        assert np.all(vals >= 0)
        assert np.all(np.isfinite(vals))
