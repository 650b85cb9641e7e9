"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``SHADOWPAIR_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _fallback

_compiled = None
_fast_density = None
if os.environ.get("SHADOWPAIR_BACKEND", "").lower() != "python":
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        try:
            from ._density import density_rows as _fast_density
        except ImportError:
            _fast_density = None

BACKEND = "cython" if _compiled is not None else "python"


def _impl(backend):
    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled backend is not available")
        return _compiled
    if backend == "python":
        return _fallback
    raise ValueError(f"unknown backend {backend!r}")


def _row_chunks(H, jobs):
    jobs = max(1, min(int(jobs), H))
    edges = np.linspace(0, H, jobs + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def quickshift_density(feat: np.ndarray, sigma: float, radius: int, *, jobs: int = 1,
                       backend: str | None = None, exact: bool = False) -> np.ndarray:
    """Gaussian Parzen density of every pixel over its (2r+1)^2 window.

    ``feat`` holds the scaled color features ``(H, W, C)``; the spatial
    offset enters the distance implicitly. The compiled backend uses the
    vectorized-exp kernel when it was built, unless ``exact`` is set.
    """
    impl = _impl(backend)
    feat = np.ascontiguousarray(feat, dtype=np.float64)
    out = np.empty(feat.shape[:2])
    chunks = _row_chunks(feat.shape[0], jobs if impl is not _fallback else 1)
    rows = impl.density_rows
    if impl is _compiled and _fast_density is not None and not exact:
        rows = _fast_density
    call = lambda ab: rows(feat, float(sigma), int(radius), ab[0], ab[1], out)
    _dispatch(call, chunks, impl)
    return out


def quickshift_parents(feat: np.ndarray, density: np.ndarray, max_dist: float, *,
                       jobs: int = 1, backend: str | None = None) -> np.ndarray:
    """Flat index of each pixel's nearest higher-density neighbour (itself for roots).

    "Higher" means larger density, or equal density and smaller row-major
    index. Distance ties go to the smaller index.
    """
    impl = _impl(backend)
    feat = np.ascontiguousarray(feat, dtype=np.float64)
    density = np.ascontiguousarray(density, dtype=np.float64)
    out = np.empty(feat.shape[:2], dtype=np.int64)
    chunks = _row_chunks(feat.shape[0], jobs if impl is not _fallback else 1)
    call = lambda ab: impl.parent_rows(feat, density, float(max_dist), ab[0], ab[1], out)
    _dispatch(call, chunks, impl)
    return out


def nearest_center(X: np.ndarray, centers: np.ndarray, *, backend: str | None = None) -> np.ndarray:
    """Index of the closest center per row (Euclidean, ties to the lowest index)."""
    impl = _impl(backend)
    X = np.ascontiguousarray(X, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    return np.asarray(impl.nearest_center(X, centers), dtype=np.int64)


def _dispatch(call, chunks, impl):
    # row blocks write disjoint slices of the output, so order does not matter
    if len(chunks) == 1 or impl is _fallback:
        for ab in chunks:
            call(ab)
        return
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        list(pool.map(call, chunks))
