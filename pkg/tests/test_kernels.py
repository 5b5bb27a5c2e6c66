"""The numba and numpy flavours of every kernel must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from contrailmatch import _accel, kernels
from contrailmatch.geometry import pack_edges

numba_missing = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def _axes(rng):
    def ax(n, lo, hi):
        return np.sort(rng.uniform(lo, hi, n)) + np.arange(n) * 1e-3

    return ax(3, 0, 7200), ax(4, 200, 300), ax(5, 44, 50), ax(6, 0, 8)


@numba_missing
def test_interp4d_parity():
    rng = np.random.default_rng(1)
    a0, a1, a2, a3 = _axes(rng)
    fields = rng.normal(size=(3, a0.size, a1.size, a2.size, a3.size))
    q = np.column_stack([rng.uniform(a[0], a[-1], 500) for a in (a0, a1, a2, a3)])
    fast, slow = kernels.KERNELS["interp4d"]
    np.testing.assert_allclose(fast(a0, a1, a2, a3, fields, q), slow(a0, a1, a2, a3, fields, q), rtol=1e-13, atol=1e-13)


@numba_missing
def test_raster_parity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        ring = rng.uniform(0, 40, (rng.integers(3, 9), 2))
        ex0, ey0, ex1, ey1, _ = pack_edges([[ring]])
        fast, slow = kernels.KERNELS["raster_scanline"]
        a = fast(ex0, ey0, ex1, ey1, 0.0, 0.0, 0.5, 80, 80)
        b = slow(ex0, ey0, ex1, ey1, 0.0, 0.0, 0.5, 80, 80)
        assert np.array_equal(a, b)


@numba_missing
def test_thinning_parity():
    rng = np.random.default_rng(3)
    fast, slow = kernels.KERNELS["zhang_suen"]
    for _ in range(30):
        m = rng.random((15, 17)) < 0.55
        assert np.array_equal(fast(m), slow(m))


@numba_missing
def test_region_distance_parity():
    rng = np.random.default_rng(4)
    polys = [[rng.uniform(0, 30, (5, 2))], [rng.uniform(20, 50, (4, 2))]]
    ex0, ey0, ex1, ey1, owner = pack_edges(polys)
    px, py = rng.uniform(-10, 60, 300), rng.uniform(-10, 60, 300)
    fast, slow = kernels.KERNELS["region_distance"]
    np.testing.assert_allclose(
        fast(px, py, ex0, ey0, ex1, ey1, owner, 2), slow(px, py, ex0, ey0, ex1, ey1, owner, 2), rtol=1e-13, atol=1e-13
    )


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, CONTRAILMATCH_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", "import contrailmatch; print(contrailmatch.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
