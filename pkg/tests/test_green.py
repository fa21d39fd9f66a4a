import math

import numpy as np
import pytest

from heatlab.bridge_mc import McConfig
from heatlab.green import GreenEstimate, InsufficientPathsError, green
from heatlab.potentials import harmonic_potential, power_potential, zero_potential
from heatlab.reference import free_green, mehler_kernel

HO = harmonic_potential(1, 1.0)


def dense_oscillator_green(x, y, omega=1.0):
    ts = np.geomspace(1e-8, 200.0, 200_001)
    vals = np.array([mehler_kernel(t, x, y, omega) for t in ts])
    return float(np.trapezoid(vals, ts))


def test_pde_green_matches_dense_oracle():
    ref = dense_oscillator_green(0.0, 1.0)
    est = green(HO, "pde", [0.0], [1.0], rel_tol=1e-2)
    assert abs(est.value - ref) / ref < 1e-2
    assert est.tail_bound <= est.error_bound


def test_mc_green_matches_dense_oracle():
    ref = dense_oscillator_green(0.0, 1.0)
    cfg = McConfig(n_paths=4000, n_steps=64, max_steps=64, seed=2)
    est = green(HO, "mc", [0.0], [1.0], rel_tol=5e-2, mc_cfg=cfg)
    assert abs(est.value - ref) / ref < 1e-2
    assert abs(est.value - ref) < est.error_bound


def test_free_three_dimensional_calibration():
    z3 = zero_potential(3)
    for r in (0.5, 1.0, 2.0):
        est = green(z3, "mc", [0.0, 0, 0], [r, 0, 0], rel_tol=2e-4)
        assert est.value == pytest.approx(free_green(3, [0, 0, 0], [r, 0, 0]),
                                          rel=1e-3)


def test_symmetry_within_error():
    a = green(HO, "pde", [0.0], [1.0], rel_tol=1e-2)
    b = green(HO, "pde", [1.0], [0.0], rel_tol=1e-2)
    assert abs(a.value - b.value) <= 2 * (a.error_bound + b.error_bound)


def test_monotone_in_potential():
    # pointwise larger potential kills more mass
    weak = harmonic_potential(1, 1.0)
    strong = harmonic_potential(1, 2.0)
    gw = green(weak, "pde", [0.0], [0.7], rel_tol=1e-2)
    gs = green(strong, "pde", [0.0], [0.7], rel_tol=1e-2)
    assert gw.value >= gs.value - (gw.error_bound + gs.error_bound)


def test_singular_and_dimension_errors():
    with pytest.raises(ValueError):
        green(HO, "pde", [1.0], [1.0])
    with pytest.raises(ValueError):
        green(zero_potential(3), "pde", [0, 0, 0], [1, 0, 0])
    with pytest.raises(ValueError):
        green(zero_potential(2), "mc", [0, 0], [1, 0])  # divergent


def test_insufficient_paths_reported():
    pp = power_potential(1, 2.0)
    cfg = McConfig(n_paths=40, n_steps=16, max_steps=16, seed=1)
    with pytest.raises(InsufficientPathsError) as exc:
        green(pp, "mc", [0.0], [1.0], rel_tol=1e-4, mc_cfg=cfg)
    assert exc.value.required > 40


def test_estimate_invariants():
    with pytest.raises(ValueError):
        GreenEstimate(value=-1.0, error_bound=0.1, n_nodes=3, tail_bound=0.0)
    with pytest.raises(ValueError):
        GreenEstimate(value=1.0, error_bound=0.1, n_nodes=3, tail_bound=0.2)
