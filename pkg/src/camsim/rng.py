"""Counter-based random numbers.

Every random draw is a pure function of ``(seed, stream, a, b, c)``: the key
is folded through the SplitMix64 finaliser, so the draw for a given pixel and
sample never depends on how work is scheduled.  Scalar versions are numba
kernels for use inside compiled loops; the array versions are plain numpy and
produce identical bits.
"""

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# stream identifiers
STREAM_RENDER = 1
STREAM_PATTERN = 2
STREAM_NOISE = 3


@nb.njit(cache=True, inline="always")
def _mix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True, inline="always")
def hash5(seed, stream, a, b, c):
    h = _mix64(np.uint64(seed))
    h = _mix64(h ^ np.uint64(stream))
    h = _mix64(h ^ np.uint64(a))
    h = _mix64(h ^ np.uint64(b))
    return _mix64(h ^ np.uint64(c))


@nb.njit(cache=True, inline="always")
def uniform01(seed, stream, a, b, c):
    """Uniform double in [0, 1)."""
    return float(hash5(seed, stream, a, b, c) >> _S11) * _INV53


def _mix64_array(z):
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)


def hash_array(seed, stream, a, b, c) -> np.ndarray:
    """Vectorised :func:`hash5`; arguments broadcast against each other."""
    with np.errstate(over="ignore"):
        a, b, c = (np.asarray(x).astype(np.uint64) for x in (a, b, c))
        h = _mix64_array(np.full(np.broadcast(a, b, c).shape, np.uint64(seed), dtype=np.uint64))
        h = _mix64_array(h ^ np.uint64(stream))
        h = _mix64_array(h ^ a)
        h = _mix64_array(h ^ b)
        return _mix64_array(h ^ c)


def uniform_array(seed, stream, a, b, c) -> np.ndarray:
    return (hash_array(seed, stream, a, b, c) >> _S11).astype(np.float64) * _INV53


def box_muller(u1, u2) -> np.ndarray:
    """Standard normal draws from two independent uniforms in [0, 1)."""
    return np.sqrt(-2.0 * np.log(1.0 - np.asarray(u1))) * np.cos(2.0 * np.pi * np.asarray(u2))


def poisson_array(mean, u, z, crossover: float = 50.0) -> np.ndarray:
    """Poisson variates by inversion of ``u`` below ``crossover``.

    Above the crossover the normal approximation ``round(mean + sqrt(mean)*z)``
    is used.  ``u`` and ``z`` are caller-supplied uniform and normal draws of
    the same shape as ``mean``.
    """
    mean = np.asarray(mean, dtype=np.float64)
    out = np.zeros(mean.shape, dtype=np.float64)
    big = mean >= crossover
    out[big] = np.maximum(np.floor(mean[big] + np.sqrt(mean[big]) * z[big] + 0.5), 0.0)

    small = ~big & (mean > 0)
    if np.any(small):
        lam = mean[small]
        uu = u[small]
        k = np.zeros_like(lam)
        p = np.exp(-lam)
        cdf = p.copy()
        active = uu > cdf
        kk = 0
        # mean < 50: the tail beyond 200 has probability far below 2**-53
        while np.any(active) and kk < 200:
            kk += 1
            p = p * lam / kk
            cdf = cdf + p
            k[active] = kk
            active &= uu > cdf
        out[small] = k
    return out
