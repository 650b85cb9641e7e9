"""Independent reference implementations used as test oracles."""
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def exhaustive_otsu(gray):
    """Between-class variance maximized over every t in exact rationals; lowest t wins ties."""
    hist = np.bincount(np.asarray(gray).ravel(), minlength=256)
    levels = np.nonzero(hist)[0]
    if len(levels) == 1:
        return int(levels[0])
    total = int(hist.sum())
    best, best_t = None, None
    for t in range(256):
        n0 = int(hist[: t + 1].sum())
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        m0 = Fraction(int((np.arange(t + 1) * hist[: t + 1]).sum()), n0)
        m1 = Fraction(int((np.arange(t + 1, 256) * hist[t + 1:]).sum()), n1)
        var = Fraction(n0 * n1, total * total) * (m0 - m1) ** 2
        if best is None or var > best:
            best, best_t = var, t
    return best_t


def lp_emd(h1, h2, ground):
    """Transportation LP solved by a general-purpose solver."""
    K = len(h1)
    rows = np.kron(np.eye(K), np.ones(K))
    cols = np.kron(np.ones(K), np.eye(K))
    res = linprog(np.asarray(ground, float).ravel(), A_eq=np.vstack([rows, cols]),
                  b_eq=np.concatenate([h1, h2]), bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def random_hist(rng, K):
    h = rng.random(K) * (rng.random(K) < 0.8)
    if h.sum() == 0:
        h[rng.integers(K)] = 1
    return h / h.sum()


def euclid_ground(rng, K, dim=3):
    pts = rng.standard_normal((K, dim))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    return d / d.max() if d.max() > 0 else d
