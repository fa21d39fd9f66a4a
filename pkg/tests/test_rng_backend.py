import os
import subprocess
import sys

import numpy as np
import pytest

from heatlab import _kernels_numba, _kernels_numpy
from heatlab.potentials import V_POWER
from heatlab.rng import BlockLayout, derive_key, normals, raw_uint64, uniforms


def test_raw_stream_addressing():
    key = derive_key(123, 7)
    whole = raw_uint64(key, 0, 64)
    for start, count in [(0, 8), (4, 12), (5, 3), (17, 31)]:
        assert np.array_equal(raw_uint64(key, start, count),
                              whole[start:start + count])


def test_different_keys_differ():
    a = raw_uint64(derive_key(1), 0, 8)
    b = raw_uint64(derive_key(2), 0, 8)
    c = raw_uint64(derive_key(1, 1), 0, 8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniforms_open_interval_and_normals_finite():
    key = derive_key(9)
    u = uniforms(key, 0, 10_000)
    assert np.all((u > 0) & (u < 1))
    z = normals(key, 0, 10_000)
    assert np.all(np.isfinite(z))
    assert abs(z.mean()) < 0.05
    assert abs(z.std() - 1) < 0.05


def test_layout_extension_preserves_addresses():
    lay = BlockLayout(100, [1, 2, 4])
    ext = lay.extended([8])
    assert ext.offsets[:3] == lay.offsets
    key = derive_key(5)
    a = lay.fetch_normals(key, 1, 10, 20)
    b = ext.fetch_normals(key, 1, 10, 20)
    assert np.array_equal(a, b)


def test_layout_chunking_invariance():
    lay = BlockLayout(64, [4])
    key = derive_key(11)
    whole = lay.fetch_normals(key, 0, 0, 64)
    parts = np.vstack([lay.fetch_normals(key, 0, a, min(a + 13, 64))
                       for a in range(0, 64, 13)])
    assert np.array_equal(whole, parts)


def test_backend_kernels_agree_bitwise_on_bridge():
    rng = np.random.Generator(np.random.Philox(key=3))
    z = rng.standard_normal((50, 15, 2))
    pa = np.zeros((50, 17, 2))
    pa[:, -1, :] = 1.5
    pb = pa.copy()
    _kernels_numpy.fill_bridge(pa, z, 0.7)
    _kernels_numba.fill_bridge(pb, z, 0.7)
    assert np.array_equal(pa, pb)
    params = np.array([1.0, 2.0])
    wa = _kernels_numpy.path_weights(pa, 0.7, V_POWER, params)
    wb = _kernels_numba.path_weights(pb, 0.7, V_POWER, params)
    assert np.allclose(wa, wb, rtol=1e-14)


def test_backend_cn_propagate_agrees():
    n = 127
    v = np.linspace(0, 2, n) ** 2
    u = np.exp(-np.linspace(-3, 3, n) ** 2)
    a = _kernels_numpy.cn_propagate(u, 1e-3, 6.0 / n, v, 200)
    b = _kernels_numba.cn_propagate(u, 1e-3, 6.0 / n, v, 200)
    assert np.allclose(a, b, rtol=1e-11, atol=1e-300)


def test_env_flag_selects_numpy():
    code = ("import os; os.environ['HEATLAB_NO_NUMBA']='1'; "
            "import heatlab; print(heatlab.active_backend())")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "numpy"
