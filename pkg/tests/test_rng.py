import numpy as np
import numba as nb
from hypothesis import given, strategies as st

from camsim.rng import box_muller, hash5, hash_array, poisson_array, uniform01, uniform_array


@nb.njit
def _scalar_block(seed, stream, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = uniform01(seed, stream, i, 7, 3)
    return out


def test_scalar_matches_array():
    a = _scalar_block(42, 1, 64)
    b = uniform_array(42, 1, np.arange(64), 7, 3)
    assert np.array_equal(a, b)


def test_splitmix_reference():
    # first output of the reference SplitMix64 generator seeded with 0
    from camsim.rng import _mix64_array
    assert int(_mix64_array(np.uint64(0))) == 0xE220A8397B1DCDAF


def test_frozen_hash():
    # regression values: rendered and exposed images depend on these bits
    assert int(hash5(1, 2, 3, 4, 5)) == 0x90BB69B7166551DE
    assert int(hash_array(1, 2, 3, 4, 5)) == 0x90BB69B7166551DE
    assert int(hash5(0, 0, 0, 0, 0)) == 0x78AE5A9A6B5FD45E


@given(st.integers(0, 2**32), st.integers(0, 8))
def test_uniform_range(seed, stream):
    u = uniform_array(seed, stream, np.arange(256), 0, 0)
    assert np.all((u >= 0) & (u < 1))


def test_uniform_moments():
    u = uniform_array(5, 3, np.arange(200_000), 1, 2)
    assert abs(u.mean() - 0.5) < 0.003
    assert abs(u.var() - 1 / 12) < 0.001


def test_box_muller_moments():
    i = np.arange(200_000)
    z = box_muller(uniform_array(1, 3, i, 0, 0), uniform_array(1, 3, i, 1, 0))
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01


def test_poisson_moments_both_branches():
    i = np.arange(100_000)
    u = uniform_array(9, 3, i, 0, 0)
    z = box_muller(uniform_array(9, 3, i, 1, 0), uniform_array(9, 3, i, 2, 0))
    for mean in (0.3, 4.0, 30.0, 80.0, 2000.0):
        k = poisson_array(np.full(i.size, mean), u, z)
        assert np.all(k == np.floor(k)) and np.all(k >= 0)
        assert abs(k.mean() - mean) < 4 * np.sqrt(mean / i.size) + 0.5 * (mean >= 50)
        assert abs(k.var() / mean - 1.0) < 0.03


def test_poisson_zero_mean():
    k = poisson_array(np.zeros(10), np.full(10, 0.99), np.zeros(10))
    assert np.all(k == 0)
