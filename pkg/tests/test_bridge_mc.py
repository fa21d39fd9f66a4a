import math

import numpy as np
import pytest

from heatlab.bridge_mc import (EngineError, McConfig, exit_identity_check,
                               kernel_mc, sample_bridge, sample_bridge_batch,
                               survival_mc)
from heatlab.potentials import (PotentialSpec, ProfileG, harmonic_potential,
                                power_potential, zero_potential)
from heatlab.reference import gaussian_kernel, mehler_kernel

Z1 = zero_potential(1)
HO = harmonic_potential(1, 1.0)


def test_bridge_endpoints_pinned():
    paths = sample_bridge_batch(2, 0.7, [0.0, 1.0], [2.0, -1.0], 16, seed=1, n=500)
    assert np.all(paths[:, 0] == [0.0, 1.0])
    assert np.all(paths[:, -1] == [2.0, -1.0])


def test_bridge_midpoint_moments():
    n = 100_000
    t = 2.0
    paths = sample_bridge_batch(1, t, [0.0], [1.0], 2, seed=42, n=n)
    mid = paths[:, 1, 0]
    # mean (x+y)/2, variance t/4 per coordinate
    assert abs(mid.mean() - 0.5) < 4 * math.sqrt(t / 4) / math.sqrt(n)
    assert mid.var() == pytest.approx(t / 4, rel=0.05)


def test_bridge_interior_marginals():
    # marginal at step k of m: mean x + (k/m)(y-x), variance s(t-s)/t
    n, m, t = 60_000, 8, 1.3
    paths = sample_bridge_batch(1, t, [1.0], [-1.0], m, seed=9, n=n)
    for k in (2, 5):
        s = t * k / m
        vals = paths[:, k, 0]
        assert abs(vals.mean() - (1.0 + (k / m) * -2.0)) < 5 / math.sqrt(n)
        assert vals.var() == pytest.approx(s * (t - s) / t, rel=0.05)


def test_single_path_matches_batch_stream():
    batch = sample_bridge_batch(1, 1.0, [0.0], [1.0], 8, seed=3, n=5)
    one = sample_bridge(1, 1.0, [0.0], [1.0], 8, seed=3, index=2, n_streams=5)
    assert np.array_equal(one, batch[2])


def test_kernel_mc_free_is_exact():
    for (t, x, y) in [(0.5, 0.0, 0.0), (1.0, 0.3, -1.2), (4.0, 2.0, 2.0)]:
        est = kernel_mc(Z1, McConfig(n_paths=200, seed=0), t, [x], [y])
        assert est.value == gaussian_kernel(1, t, x, y)
        assert est.stderr == 0.0


def test_kernel_mc_matches_oscillator():
    cfg = McConfig(n_paths=100_000, seed=11)
    est = kernel_mc(HO, cfg, 1.0, [0.0], [1.0])
    exact = mehler_kernel(1.0, 0.0, 1.0, 1.0)
    assert abs(est.value - exact) <= 3 * est.stderr


def test_kernel_mc_dominated_by_free():
    cfg = McConfig(n_paths=5000, seed=5)
    for (t, x, y) in [(0.25, 0.0, 1.0), (1.0, 1.0, 2.0)]:
        est = kernel_mc(HO, cfg, t, [x], [y])
        assert est.value <= gaussian_kernel(1, t, x, y) + 3 * est.stderr


def test_kernel_mc_symmetry_within_noise():
    cfg = McConfig(n_paths=20_000, seed=21)
    a = kernel_mc(HO, cfg, 0.8, [0.0], [1.5], stream_tag=1)
    b = kernel_mc(HO, cfg, 0.8, [1.5], [0.0], stream_tag=2)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr)


def test_kernel_mc_reproducible():
    cfg = McConfig(n_paths=3000, seed=77)
    a = kernel_mc(HO, cfg, 1.0, [0.0], [0.5])
    b = kernel_mc(HO, cfg, 1.0, [0.0], [0.5])
    assert a.value == b.value and a.stderr == b.stderr


def test_kernel_mc_antithetic_reproducible_and_close():
    plain = kernel_mc(HO, McConfig(n_paths=40_000, seed=13), 1.0, [0.0], [1.0])
    anti = kernel_mc(HO, McConfig(n_paths=40_000, seed=13, antithetic=True),
                     1.0, [0.0], [1.0])
    assert anti.n_effective == 20_000
    assert abs(plain.value - anti.value) <= 3 * math.hypot(plain.stderr, anti.stderr)


def test_refinement_negligible_for_smooth_potential():
    # trapezoid along the bridge is second order for smooth V (the unseen
    # within-segment variance cancels the interpolation bias), so already at
    # 32 steps the discretization error sits below the noise: every step
    # count agrees with the exact kernel and successive doublings move the
    # estimate by less than the refinement threshold
    x, y, t = [0.0], [1.0], 1.0
    exact = mehler_kernel(t, x[0], y[0], 1.0)
    vals, errs = [], []
    for m in (32, 64, 128, 256):
        cfg = McConfig(n_paths=200_000, n_steps=m, max_steps=m, seed=4)
        est = kernel_mc(HO, cfg, t, x, y)
        vals.append(est.value)
        errs.append(est.stderr)
        assert abs(est.value - exact) <= 4 * est.stderr
    for a, b, e in zip(vals, vals[1:], errs[1:]):
        assert abs(b - a) < max(1e-4 * abs(b), 0.25 * e)


def test_non_finite_potential_aborts():
    bad = PotentialSpec(dim=1, v=lambda p: np.full(p.shape[:-1], np.nan),
                        profile=ProfileG("power", (2.0,)),
                        h_lower=1.0, h_upper=1.0)
    with pytest.raises(EngineError):
        kernel_mc(bad, McConfig(n_paths=100, seed=1), 1.0, [0.0], [1.0])


def test_survival_free_is_one():
    est = survival_mc(Z1, McConfig(n_paths=500, seed=2), 1.0, [0.0])
    assert est.value == 1.0 and est.stderr == 0.0
    assert est.method == "mc_free"


def test_survival_monotone_in_t():
    pp = power_potential(1, 2.0)
    cfg = McConfig(n_paths=30_000, seed=6)
    a = survival_mc(pp, cfg, 1.0, [0.0], stream_tag=1)
    b = survival_mc(pp, cfg, 2.0, [0.0], stream_tag=2)
    assert b.value <= a.value + 3 * math.hypot(a.stderr, b.stderr)


def test_survival_decay_log_linear():
    pp = power_potential(1, 2.0)
    cfg = McConfig(n_paths=30_000, seed=8)
    ests = [survival_mc(pp, cfg, t, [0.0], stream_tag=i)
            for i, t in enumerate((1.0, 2.0, 4.0))]
    logs = [math.log(e.value) for e in ests]
    # slope of log v against t is negative well beyond noise
    slope = (logs[2] - logs[0]) / 3.0
    noise = 3 * math.hypot(ests[0].stderr / ests[0].value,
                           ests[2].stderr / ests[2].value) / 3.0
    assert slope < -noise


def test_exit_identity_free_kernel():
    rep = exit_identity_check(Z1, McConfig(n_paths=100_000, seed=11),
                              1.0, [0.0], [2.0], 0.5)
    assert rep.z_score < 3.0
    assert rep.lhs.stderr == 0.0  # free lhs is exact


def test_exit_identity_requires_outside_point():
    with pytest.raises(ValueError):
        exit_identity_check(Z1, McConfig(n_paths=100, seed=1),
                            1.0, [0.0], [0.3], 0.5)


def test_exit_identity_well_separated_small_t():
    # for t far below the crossing scale both sides are negligible
    rep = exit_identity_check(Z1, McConfig(n_paths=20_000, seed=3),
                              0.01, [0.0], [2.0], 1.0)
    assert rep.lhs.value < 1e-6
    assert rep.rhs.value < 1e-6


def test_kernel_mc_tabulated_callable_path():
    from heatlab.potentials import tabulated_potential
    rs = np.linspace(0.0, 16.0, 33)
    spec = tabulated_potential(1, np.column_stack([rs, 1.0 + rs]))
    est = kernel_mc(spec, McConfig(n_paths=2000, seed=31), 0.5, [0.0], [1.0])
    assert 0 < est.value <= gaussian_kernel(1, 0.5, 0.0, 1.0)
