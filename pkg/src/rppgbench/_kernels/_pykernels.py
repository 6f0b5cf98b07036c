"""Pure numpy implementations of the hot loops.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature; the two are checked against each other in the test suite.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Below this, a within-window standard deviation of normalized colour is
# treated as zero (normalized channels sit around 1.0).
SIGMA_EPS = 1e-12


def box_means(frames, boxes):
    """Per-frame channel means over ``boxes[t] = (x0, y0, x1, y1)``.

    ``frames`` is ``(T, H, W, 3)`` uint8, boxes are half-open pixel ranges.
    Returns ``(T, 3)`` float64. Sums are accumulated in int64 so the result
    is exact regardless of summation order.
    """
    frames = np.asarray(frames)
    boxes = np.asarray(boxes, dtype=np.intp)
    n = frames.shape[0]
    out = np.empty((n, 3), dtype=np.float64)
    if n == 0:
        return out
    if (boxes == boxes[0]).all():
        x0, y0, x1, y1 = boxes[0]
        sums = frames[:, y0:y1, x0:x1, :].sum(axis=(1, 2), dtype=np.int64)
        out[:] = sums / float((x1 - x0) * (y1 - y0))
        return out
    for t in range(n):
        x0, y0, x1, y1 = boxes[t]
        s = frames[t, y0:y1, x0:x1, :].sum(axis=(0, 1), dtype=np.int64)
        out[t] = s / float((x1 - x0) * (y1 - y0))
    return out


def box_mean_frame(frame, box):
    x0, y0, x1, y1 = (int(v) for v in box)
    s = np.asarray(frame)[y0:y1, x0:x1, :].sum(axis=(0, 1), dtype=np.int64)
    return s / float((x1 - x0) * (y1 - y0))


def _normalized_windows(rgb, L, step):
    win = sliding_window_view(rgb, L, axis=0)[::step]  # (N, 3, L)
    means = win.mean(axis=2, keepdims=True)
    ok = (means != 0).all(axis=(1, 2))
    cn = win / np.where(means == 0, 1.0, means)
    return cn, ok


def pos_overlap_add(rgb, L):
    """Stride-1 POS projection with rectangular overlap-add.

    ``rgb`` is ``(T, 3)``; returns the un-standardized ``(T,)`` sum of
    mean-removed window pulses. Degenerate windows contribute zeros.
    """
    rgb = np.ascontiguousarray(rgb, dtype=np.float64)
    T = rgb.shape[0]
    out = np.zeros(T, dtype=np.float64)
    if L < 1 or T < L:
        return out
    cn, ok = _normalized_windows(rgb, L, 1)
    r, g, b = cn[:, 0, :], cn[:, 1, :], cn[:, 2, :]
    s1 = g - b
    s2 = g + b - 2.0 * r
    sd1 = s1.std(axis=1)
    sd2 = s2.std(axis=1)
    ok &= sd2 >= SIGMA_EPS
    alpha = np.where(ok, sd1 / np.where(ok, sd2, 1.0), 0.0)
    h = s1 + alpha[:, None] * s2
    h -= h.mean(axis=1, keepdims=True)
    h[~ok] = 0.0
    n_win = h.shape[0]
    for j in range(L):
        out[j:j + n_win] += h[:, j]
    return out


def hann_periodic(L):
    n = np.arange(L, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / L)


def chrom_overlap_add(rgb, L):
    """CHROM with Hann-weighted, 50 %-overlap windows (hop ``L // 2``)."""
    rgb = np.ascontiguousarray(rgb, dtype=np.float64)
    T = rgb.shape[0]
    out = np.zeros(T, dtype=np.float64)
    if L < 2 or T < L:
        return out
    hop = L // 2
    cn, ok = _normalized_windows(rgb, L, hop)
    r, g, b = cn[:, 0, :], cn[:, 1, :], cn[:, 2, :]
    x = 3.0 * r - 2.0 * g
    y = 1.5 * r + g - 1.5 * b
    sdx = x.std(axis=1)
    sdy = y.std(axis=1)
    ok &= sdy >= SIGMA_EPS
    alpha = np.where(ok, sdx / np.where(ok, sdy, 1.0), 0.0)
    s = x - alpha[:, None] * y
    s -= s.mean(axis=1, keepdims=True)
    s *= hann_periodic(L)
    s[~ok] = 0.0
    for i in range(s.shape[0]):
        start = i * hop
        out[start:start + L] += s[i]
    return out
