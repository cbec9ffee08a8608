"""QE transform: a 3x3 matrix mixing the published channel QE curves.

With the three curves stacked as columns of an ``n_wavelengths x 3`` matrix
``Q``, the transformed curves are ``Q @ M``; the same matrix maps predicted
mean RGB values (rows) onto measured ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from camsim.radiometry import GridMismatchError, SpectralDistribution, inner_product

# reference calibration of the IMX363 channel QE curves
REFERENCE_M = np.array([
    [0.532, 0.0, 0.0],
    [0.06, 0.70, 0.0],
    [0.0, 0.36, 0.84],
])


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QeTransform:
    m: np.ndarray = field(repr=False)
    residual_rms: float = float("nan")

    def __post_init__(self):
        m = np.array(self.m, dtype=np.float64)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("QE transform must be a finite 3x3 matrix")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def to_json(self) -> str:
        return json.dumps(self.m.tolist())

    @classmethod
    def from_json(cls, text: str) -> "QeTransform":
        return cls(np.array(json.loads(text), dtype=np.float64))


def apply_qe_transform(qe_rgb, t) -> tuple[SpectralDistribution, ...]:
    """``[r', g', b'] = [r, g, b] M``, e.g. ``r' = M11 r + M21 g + M31 b``."""
    m = t.m if isinstance(t, QeTransform) else np.asarray(t, dtype=np.float64)
    r, g, b = qe_rgb
    if not (r.grid == g.grid == b.grid):
        raise GridMismatchError("QE curves must share one wavelength grid")
    # explicit sums in r, g, b order, so zero entries contribute exactly nothing
    q = np.column_stack([m[0, j] * r.values + m[1, j] * g.values + m[2, j] * b.values for j in range(3)])
    # matrices with negative entries can push a curve slightly below zero
    q = np.clip(q, 0.0, None)
    return tuple(SpectralDistribution(r.grid, q[:, i], r.unit) for i in range(3))


def predict_rgb(radiances, qe_rgb) -> np.ndarray:
    """Predicted channel responses (n x 3): inner products of spectra with QE."""
    return np.array([[inner_product(s, q) for q in qe_rgb] for s in radiances])


def _lstsq_masked(a, b, mask):
    m = np.zeros((3, 3))
    for j in range(3):
        keep = mask[:, j]
        if np.any(keep):
            m[keep, j] = np.linalg.lstsq(a[:, keep], b[:, j], rcond=None)[0]
    return m


def solve_qe_transform(predicted, measured, zero_threshold: float | None = None) -> QeTransform:
    """Least-squares ``M`` minimising ``||predicted @ M - measured||_F``.

    With ``zero_threshold`` set, entries whose magnitude falls below it are
    fixed at zero and the remaining entries of each column are re-solved.
    """
    a = np.asarray(predicted, dtype=np.float64)
    b = np.asarray(measured, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3 or a.shape != b.shape:
        raise ValueError("predicted and measured must both be n x 3")
    if a.shape[0] < 3 or np.linalg.matrix_rank(a) < 3:
        raise RankDeficientError("predicted RGB matrix is rank deficient")
    m = np.linalg.lstsq(a, b, rcond=None)[0]
    if zero_threshold is not None:
        m = _lstsq_masked(a, b, np.abs(m) >= zero_threshold)
    resid = a @ m - b
    return QeTransform(m, float(np.sqrt(np.mean(resid ** 2))))


def residual_rms(predicted, measured, m) -> float:
    resid = np.asarray(predicted) @ np.asarray(m) - np.asarray(measured)
    return float(np.sqrt(np.mean(resid ** 2)))
