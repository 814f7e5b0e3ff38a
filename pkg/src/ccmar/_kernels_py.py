"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np


def _hermite(t, t_min, step, values, derivs):
    n_knots = values.shape[0]
    idx = np.minimum(((t - t_min) / step).astype(np.intp), n_knots - 2)
    idx = np.maximum(idx, 0)
    s = ((t - (t_min + idx * step)) / step)[..., None]
    s2 = s * s
    s3 = s2 * s
    out = (
        (2 * s3 - 3 * s2 + 1) * values[idx]
        + (s3 - 2 * s2 + s) * step * derivs[idx]
        + (-2 * s3 + 3 * s2) * values[idx + 1]
        + (s3 - s2) * step * derivs[idx + 1]
    )
    return np.where((t < t_min)[..., None], 0.0, out)


def martingale_gap_max(lo, hi, level, slope, t_min, step, values, derivs, n_refine):
    k = np.arange(n_refine + 2, dtype=float)
    width = hi - lo
    t = lo[:, None] + width[:, None] * k[None, :] / (n_refine + 1)
    t[:, -1] = hi
    hv = _hermite(t, t_min, step, values, derivs)
    val = np.abs(level[:, None] - np.einsum("gkc,gc->gk", hv, slope))
    best = np.argmax(val, axis=1)
    rows = np.arange(lo.shape[0])
    return val[rows, best], t[rows, best]


def marked_partial_sum_max(sorted_resid, marks):
    if sorted_resid.shape[0] == 0:
        return 0.0, 0.0
    run = np.cumsum(marks)
    last = np.append(sorted_resid[1:] != sorted_resid[:-1], True)
    vals = np.abs(run[last])
    i = int(np.argmax(vals))
    if vals[i] == 0.0:
        return 0.0, float(sorted_resid[0])
    return float(vals[i]), float(sorted_resid[last][i])


def sup_abs_walk(increments, bridge):
    walk = np.cumsum(increments, axis=1)
    if bridge:
        n_steps = increments.shape[1]
        frac = np.arange(1, n_steps + 1) / float(n_steps)
        walk = walk - frac[None, :] * walk[:, -1:]
    return np.max(np.abs(walk), axis=1)
