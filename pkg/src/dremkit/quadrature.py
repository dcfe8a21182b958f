"""Fixed-grid quadrature helpers.

One cumulative-integral routine is shared by the error envelopes, the
finite-time weights and the excitation Gramians so that quotient identities
between those quantities hold to rounding error.
"""

from __future__ import annotations

import numpy as np


def cumulative_simpson(samples: np.ndarray, step: float) -> np.ndarray:
    """Cumulative integral of uniformly sampled data.

    Even indices accumulate composite Simpson pairs; each odd index adds a
    trapezoid over its trailing interval. Works on the leading axis, so
    ``samples`` may be ``(n,)``, ``(n, m)`` or ``(n, m, m)``.
    """
    f = np.asarray(samples, dtype=float)
    n = f.shape[0]
    out = np.zeros_like(f)
    if n < 2:
        return out
    pair = (step / 3.0) * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(pair, axis=0)
    n_odd = f[1::2].shape[0]
    out[1::2] = out[0::2][:n_odd] + (step / 2.0) * (f[0:-1:2][:n_odd] + f[1::2][:n_odd])
    return out


def lagged_difference(cumulative: np.ndarray, lag: int) -> np.ndarray:
    """Moving-window integral ``C[k] - C[k-lag]`` with ``C`` treated as 0
    before the start of the record (signals vanish before time zero)."""
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    if lag == 0:
        return np.zeros_like(cumulative)
    shifted = np.zeros_like(cumulative)
    shifted[lag:] = cumulative[:-lag]
    return cumulative - shifted
