"""Bilinear demosaicking of Bayer raw frames."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import convolve

from camsim.raw import DigitalImage, channel_map, check_cfa

_KERNEL_RB = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])
_KERNEL_G = np.array([[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]])


def demosaic_bilinear(img, cfa_pattern: str | None = None) -> np.ndarray:
    """(H, W, 3) float RGB from a mosaicked frame.

    Missing samples are the mean of the nearest same-colour neighbours (two
    or four of them); outside the frame nothing is counted, so borders
    average whatever neighbours exist.  Native samples pass through.
    """
    if isinstance(img, DigitalImage):
        values, pattern = img.values, img.cfa_pattern
    else:
        values, pattern = img, cfa_pattern
    pattern = check_cfa(pattern if pattern is not None else "RGGB")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("mosaicked input must be 2-D")
    if pattern == "MONO":
        return np.repeat(v[..., None], 3, axis=2)
    ch = channel_map(pattern, *v.shape)
    out = np.empty(v.shape + (3,))
    for c in range(3):
        mask = (ch == c).astype(np.float64)
        k = _KERNEL_G if c == 1 else _KERNEL_RB
        num = convolve(v * mask, k, mode="constant", cval=0.0)
        den = convolve(mask, k, mode="constant", cval=0.0)
        out[..., c] = num / den
        out[..., c][mask > 0] = v[mask > 0]
    return out
