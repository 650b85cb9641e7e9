"""Filter-bank texton maps and Earth Mover's Distance between texton histograms."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft2, rfft2
from scipy.sparse import csr_matrix

from . import kernels
from .errors import (DegenerateResponses, DimensionMismatch, EmptySegment, ImageTooSmall,
                     InvalidGroundMatrix)

ORIENTATIONS = (0.0, 45.0, 90.0, 135.0)
EDGE_SCALES = (1.0, 2.0)
LOG_SCALES = (1.0, 2.0)
GAUSS_SCALE = 2.0
ELONGATION = 2.0


@dataclass(frozen=True)
class FilterBank:
    kernels: tuple
    names: tuple

    @property
    def max_side(self) -> int:
        return max(max(k.shape) for k in self.kernels)

    def __len__(self):
        return len(self.kernels)


def _grid(radius):
    r = np.arange(-radius, radius + 1, dtype=np.float64)
    return np.meshgrid(r, r)  # x varies along columns


def _normalize(k, zero_mean=True):
    if zero_mean:
        k = k - k.mean()
    return k / np.abs(k).sum()


def gaussian_kernel(sigma):
    x, y = _grid(int(math.ceil(3 * sigma)))
    return _normalize(np.exp(-(x**2 + y**2) / (2 * sigma**2)), zero_mean=False)


def log_kernel(sigma):
    x, y = _grid(int(math.ceil(3 * sigma)))
    r2 = (x**2 + y**2) / (2 * sigma**2)
    return _normalize((r2 - 1.0) * np.exp(-r2))


def edge_kernels(sigma, theta_deg, elongation=ELONGATION):
    """Even (second derivative) and odd (first derivative) elongated Gaussian pair.

    ``theta_deg = 0`` differentiates along x, i.e. it responds to vertical edges.
    """
    x, y = _grid(int(math.ceil(3 * sigma * elongation)))
    t = math.radians(theta_deg)
    u = x * math.cos(t) + y * math.sin(t)
    v = -x * math.sin(t) + y * math.cos(t)
    su, sv = sigma, sigma * elongation
    g = np.exp(-(u**2) / (2 * su**2) - v**2 / (2 * sv**2))
    even = (u**2 / su**4 - 1.0 / su**2) * g
    odd = -u / su**2 * g
    return _normalize(even), _normalize(odd)


def make_filter_bank() -> FilterBank:
    """Gaussian, two LoG and 4 orientations x 2 scales x {even, odd}: 19 kernels."""
    ks = [gaussian_kernel(GAUSS_SCALE)]
    names = [f"gauss{GAUSS_SCALE:g}"]
    for s in LOG_SCALES:
        ks.append(log_kernel(s))
        names.append(f"log{s:g}")
    for s in EDGE_SCALES:
        for th in ORIENTATIONS:
            even, odd = edge_kernels(s, th)
            ks += [even, odd]
            names += [f"even{s:g}_{th:g}", f"odd{s:g}_{th:g}"]
    return FilterBank(tuple(ks), tuple(names))


def filter_responses(img: np.ndarray, bank: FilterBank) -> np.ndarray:
    """Convolve with each kernel (reflected borders); returns ``(H, W, n_kernels)``."""
    img = np.asarray(img, dtype=np.float64)
    side = bank.max_side
    if img.shape[0] < side or img.shape[1] < side:
        raise ImageTooSmall(f"image {img.shape[1]}x{img.shape[0]} is smaller than the "
                            f"{side}x{side} filter support")
    # one shared FFT of the symmetrically padded image; "symmetric" in numpy is
    # scipy.ndimage's "reflect" (edge sample repeated)
    pad = side // 2
    H, W = img.shape
    padded = np.pad(img, pad, mode="symmetric")
    shape = padded.shape
    img_f = rfft2(padded)
    out = np.empty((H, W, len(bank)))
    for n, k in enumerate(bank.kernels):
        r = k.shape[0] // 2
        full = irfft2(img_f * rfft2(k, shape), shape)
        # full[y + r, x + r] is the convolution centred at padded[y, x]
        out[..., n] = full[pad + r:pad + r + H, pad + r:pad + r + W]
    return out


def texton_features(gray: np.ndarray, bank: FilterBank) -> np.ndarray:
    """Responses used for texton clustering inside the detector.

    Filtering the log intensity turns a multiplicative illumination change into
    an additive offset, which every zero-mean kernel cancels. The Gaussian
    (local mean) channel is dropped since it only encodes brightness.
    """
    resp = filter_responses(np.log1p(np.asarray(gray, dtype=np.float64)), bank)
    return resp[..., 1:]


@dataclass(frozen=True)
class TextonCodebook:
    centers: np.ndarray  # (K, D)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def ground_distance(self) -> np.ndarray:
        """Center-to-center Euclidean distances scaled so the largest is 1."""
        diff = self.centers[:, None, :] - self.centers[None, :, :]
        d = np.sqrt((diff**2).sum(axis=-1))
        top = d.max()
        return d / top if top > 0 else d


def _flatten(responses):
    r = np.asarray(responses, dtype=np.float64)
    return r.reshape(-1, r.shape[-1])


def _kmeanspp(X, K, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            break
        pick = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
        pick = min(pick, n - 1)
        while d2[pick] <= 0:  # float edge of the cumsum; never pick a duplicate
            pick -= 1
        centers.append(X[pick])
        d2 = np.minimum(d2, ((X - X[pick]) ** 2).sum(axis=1))
    return np.array(centers)


def _assign_fast(X, centers):
    # ||x-c||^2 up to the per-row constant; used only inside Lloyd iterations
    scores = X @ (-2.0 * centers.T)
    scores += (centers**2).sum(axis=1)
    return np.argmin(scores, axis=1)


def learn_textons(responses: np.ndarray, K: int = 32, seed: int = 0, *, strict: bool = False,
                  max_iter: int = 50, tol: float = 1e-4) -> TextonCodebook:
    """k-means++ seeded Lloyd clustering of all response vectors.

    With fewer than ``K`` distinct vectors this raises ``DegenerateResponses``
    when ``strict``; otherwise it warns and returns the distinct vectors.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    X = _flatten(responses)
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, K, rng)
    if len(centers) < K:
        # seeding only runs dry when fewer than K distinct vectors exist
        distinct = np.unique(X, axis=0)
        msg = f"only {len(distinct)} distinct response vectors for K={K}"
        if strict:
            raise DegenerateResponses(msg)
        warnings.warn(msg + "; collapsing to the distinct vectors", RuntimeWarning, stacklevel=2)
        return TextonCodebook(distinct)
    for _ in range(max_iter):
        labels = _assign_fast(X, centers)
        counts = np.bincount(labels, minlength=K)
        onehot = csr_matrix((np.ones(len(labels)), (labels, np.arange(len(labels)))),
                            shape=(K, len(labels)))
        sums = onehot @ X
        new = centers.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift < tol:
            break
    return TextonCodebook(centers)


def texton_map(responses: np.ndarray, codebook: TextonCodebook) -> np.ndarray:
    """Nearest-center index for every pixel, shaped like the response grid."""
    r = np.asarray(responses)
    return kernels.nearest_center(_flatten(r), codebook.centers).reshape(r.shape[:-1])


def texton_histogram(responses: np.ndarray, pixels, codebook: TextonCodebook) -> np.ndarray:
    """Normalized texton histogram of one segment.

    ``pixels`` is a boolean mask over the grid or an ``(n, 2)`` array of
    ``(row, col)`` coordinates.
    """
    r = np.asarray(responses)
    pixels = np.asarray(pixels)
    if pixels.dtype == bool:
        vecs = r[pixels]
    else:
        pixels = pixels.reshape(-1, 2)
        vecs = r[pixels[:, 0], pixels[:, 1]]
    if len(vecs) == 0:
        raise EmptySegment("segment has no pixels")
    labels = kernels.nearest_center(vecs.reshape(-1, r.shape[-1]), codebook.centers)
    counts = np.bincount(labels, minlength=codebook.k).astype(np.float64)
    return counts / counts.sum()


def segment_histograms(tmap: np.ndarray, seg_labels: np.ndarray, n_segments: int,
                       K: int) -> np.ndarray:
    """All per-segment texton histograms at once, ``(n_segments, K)``."""
    flat = seg_labels.ravel() * K + tmap.ravel()
    counts = np.bincount(flat, minlength=n_segments * K).reshape(n_segments, K)
    return counts / counts.sum(axis=1, keepdims=True)


def check_ground(ground: np.ndarray, tol: float = 1e-9) -> None:
    g = np.asarray(ground, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidGroundMatrix("ground matrix must be square")
    if not np.all(np.isfinite(g)) or (g < -tol).any():
        raise InvalidGroundMatrix("ground distances must be finite and nonnegative")
    if np.abs(np.diag(g)).max(initial=0.0) > tol:
        raise InvalidGroundMatrix("ground matrix needs a zero diagonal")
    if np.abs(g - g.T).max(initial=0.0) > tol:
        raise InvalidGroundMatrix("ground matrix must be symmetric")
    # g[i, k] <= g[i, j] + g[j, k] for all i, j, k
    via = (g[:, :, None] + g[None, :, :]).min(axis=1)
    if (g - via > tol).any():
        raise InvalidGroundMatrix("ground matrix violates the triangle inequality")


def emd(h1, h2, ground, *, check: bool = True) -> float:
    """Exact Earth Mover's Distance between equal-mass histograms.

    Solved as a transportation problem with the stepping-stone (MODI)
    simplex on the supports of the two histograms.
    """
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    ground = np.asarray(ground, dtype=np.float64)
    if h1.ndim != 1 or h1.shape != h2.shape or ground.shape != (h1.size, h1.size):
        raise DimensionMismatch(f"histograms {h1.shape}/{h2.shape} vs ground {ground.shape}")
    if check:
        check_ground(ground)
    if (h1 < 0).any() or (h2 < 0).any():
        raise ValueError("histogram masses must be nonnegative")
    t1, t2 = h1.sum(), h2.sum()
    if abs(t1 - t2) > 1e-9 * max(1.0, t1):
        raise ValueError(f"histograms carry different mass ({t1} vs {t2})")
    src = np.flatnonzero(h1 > 0)
    dst = np.flatnonzero(h2 > 0)
    if len(src) == 0:
        return 0.0
    return transport_cost(h1[src], h2[dst] * (t1 / t2), ground[np.ix_(src, dst)])


def _northwest(a, b):
    m, n = len(a), len(b)
    flow = np.zeros((m, n))
    cells = []
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while True:
        x = min(ra[i], rb[j])
        flow[i, j] = x
        cells.append((i, j))
        ra[i] -= x
        rb[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return flow, cells


class _Tree:
    """Spanning tree of basic cells; rows are nodes 0..m-1, columns m..m+n-1."""

    def __init__(self, m, n, cells):
        self.m = m
        self.adj = [set() for _ in range(m + n)]
        for i, j in cells:
            self.add(i, j)

    def add(self, i, j):
        self.adj[i].add(self.m + j)
        self.adj[self.m + j].add(i)

    def remove(self, i, j):
        self.adj[i].discard(self.m + j)
        self.adj[self.m + j].discard(i)

    def potentials(self, cost):
        m = self.m
        pot = [None] * len(self.adj)
        pot[0] = 0.0
        stack = [0]
        while stack:
            k = stack.pop()
            for w in self.adj[k]:
                if pot[w] is None:
                    pot[w] = cost[k, w - m] - pot[k] if k < m else cost[w, k - m] - pot[k]
                    stack.append(w)
        return np.array(pot[:m]), np.array(pot[m:])

    def cycle(self, i0, j0):
        """Cells of the loop closed by entering ``(i0, j0)``; entering cell first."""
        m = self.m
        target = m + j0
        prev = {i0: None}
        stack = [i0]
        while stack:
            k = stack.pop()
            if k == target:
                break
            for w in self.adj[k]:
                if w not in prev:
                    prev[w] = k
                    stack.append(w)
        path = [target]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        cells = [(i0, j0)]
        for a, b in zip(path[:-1], path[1:]):
            cells.append((a, b - m) if a < m else (b, a - m))
        return cells


def transport_cost(a, b, cost, *, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """Minimum of ``sum(flow * cost)`` over flows with row sums ``a``, column sums ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    m, n = cost.shape
    if m == 1 or n == 1:
        flow = np.outer(a, np.ones(n)) if n == 1 else np.outer(np.ones(1), b)
        return float((flow * cost).sum())

    flow, cells = _northwest(a, b)
    tree = _Tree(m, n, cells)
    basis = np.zeros((m, n), dtype=bool)
    basis[tuple(np.array(cells).T)] = True
    degenerate_run = 0
    bland = False
    for _ in range(max_iter):
        u, v = tree.potentials(cost)
        red = cost - u[:, None] - v[None, :]
        red[basis] = 0.0
        if bland:
            neg = np.flatnonzero(red.ravel() < -tol)
            if len(neg) == 0:
                break
            i, j = divmod(int(neg[0]), n)
        else:
            i, j = divmod(int(np.argmin(red)), n)
            if red[i, j] >= -tol:
                break
        loop = tree.cycle(i, j)
        minus = loop[1::2]
        theta = min(flow[c] for c in minus)
        leave = min(c for c in minus if flow[c] == theta)
        theta = max(theta, 0.0)
        for c in loop[0::2]:
            flow[c] += theta
        for c in minus:
            flow[c] -= theta
        flow[leave] = 0.0
        basis[i, j] = True
        basis[leave] = False
        tree.add(i, j)
        tree.remove(*leave)
        # Bland's rule after a long degenerate stall guarantees termination
        degenerate_run = degenerate_run + 1 if theta == 0.0 else 0
        if degenerate_run > 2 * (m + n):
            bland = True
    else:
        raise RuntimeError("transportation simplex did not converge")
    return float((np.clip(flow, 0.0, None) * cost).sum())
