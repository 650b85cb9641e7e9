"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Offsets are visited in the same order as the compiled loops so per-pixel
sums accumulate identically (up to the last ulp of ``exp``).
"""
import numpy as np


def _shifted(a, dy, dx, fill):
    """``out[y, x] = a[y + dy, x + dx]`` with ``fill`` outside the grid."""
    H, W = a.shape[:2]
    out = np.full_like(a, fill)
    ys, ye = max(0, -dy), min(H, H - dy)
    xs, xe = max(0, -dx), min(W, W - dx)
    if ys < ye and xs < xe:
        out[ys:ye, xs:xe] = a[ys + dy:ye + dy, xs + dx:xe + dx]
    return out


def _sqdist(a, b, start):
    d = np.full(a.shape[:2], start)
    for c in range(a.shape[2]):
        d = d + (a[..., c] - b[..., c]) ** 2
    return d


def density_rows(feat, sigma, radius, y0, y1, out):
    H, W, _ = feat.shape
    inv = 1.0 / (2.0 * sigma * sigma)
    lo, hi = max(0, y0 - radius), min(H, y1 + radius)
    block = feat[lo:hi]
    acc = np.zeros(block.shape[:2])
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            other = _shifted(block, dy, dx, np.nan)
            d = _sqdist(other, block, float(dx * dx + dy * dy))
            # out-of-grid neighbours carry NaN and contribute nothing
            contrib = np.exp(-d * inv)
            np.add(acc, contrib, out=acc, where=~np.isnan(contrib))
    out[y0:y1] = acc[y0 - lo:y1 - lo]


def parent_rows(feat, dens, max_dist, y0, y1, out):
    H, W, _ = feat.shape
    R = int(max_dist)
    lim = max_dist * max_dist
    lo, hi = max(0, y0 - R), min(H, y1 + R)
    block = feat[lo:hi]
    bd = dens[lo:hi]
    bh = hi - lo
    idx = (np.arange(lo, hi)[:, None] * W + np.arange(W)[None, :]).astype(np.int64)
    best_d = np.full((bh, W), np.inf)
    best_j = idx.copy()
    for dy in range(-R, R + 1):
        for dx in range(-R, R + 1):
            other = _shifted(block, dy, dx, np.nan)
            od = _shifted(bd, dy, dx, -np.inf)
            oj = _shifted(idx, dy, dx, -1)
            higher = (od > bd) | ((od == bd) & (oj < idx) & (oj >= 0))
            d = _sqdist(other, block, float(dx * dx + dy * dy))
            ok = higher & (d <= lim)
            better = ok & ((d < best_d) | ((d == best_d) & (oj < best_j)))
            best_d = np.where(better, d, best_d)
            best_j = np.where(better, oj, best_j)
    out[y0:y1] = best_j[y0 - lo:y1 - lo]


def nearest_center(X, centers):
    X = np.asarray(X, dtype=np.float64)
    best = np.full(X.shape[0], np.inf)
    labels = np.zeros(X.shape[0], dtype=np.int64)
    for c in range(centers.shape[0]):
        d = np.zeros(X.shape[0])
        for f in range(X.shape[1]):
            d = d + (X[:, f] - centers[c, f]) ** 2
        closer = d < best
        best[closer] = d[closer]
        labels[closer] = c
    return labels
