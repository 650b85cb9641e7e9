"""Quickshift superpixels and the region adjacency graph."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .raster import rgb_to_lab


@dataclass(frozen=True)
class QuickshiftParams:
    sigma: float = 9.0
    max_dist: float | None = None  # defaults to 2 * sigma
    color_scale: float = 1.0

    def __post_init__(self):
        if self.max_dist is None:
            object.__setattr__(self, "max_dist", 2.0 * self.sigma)
        if self.sigma <= 0 or self.max_dist <= 0 or self.color_scale <= 0:
            raise ValueError(f"invalid quickshift parameters: {self}")


@dataclass(frozen=True)
class SegmentMap:
    labels: np.ndarray  # (H, W) int64
    segment_count: int

    @property
    def shape(self):
        return self.labels.shape


@dataclass(frozen=True)
class RegionAdjacency:
    neighbors: tuple  # tuple of frozensets, indexed by segment id

    def pairs(self):
        """All adjacent ``(a, b)`` with ``a < b`` in ascending order."""
        return sorted((a, b) for a, nb in enumerate(self.neighbors) for b in nb if a < b)


def quickshift_segment(img: np.ndarray, params: QuickshiftParams = QuickshiftParams(), *,
                       lab: np.ndarray | None = None, jobs: int = 1,
                       backend: str | None = None) -> SegmentMap:
    """Mode-seeking segmentation over (x, y, color_scale * LAB).

    Each pixel links to its nearest neighbour of higher density within
    ``max_dist``; trees become segments, which are then split into
    4-connected pieces and relabelled in row-major order of first appearance.
    """
    if lab is None:
        lab = rgb_to_lab(img)
    feat = np.ascontiguousarray(lab * params.color_scale, dtype=np.float64)
    H, W = feat.shape[:2]
    radius = int(math.ceil(3 * params.sigma))
    dens = kernels.quickshift_density(feat, params.sigma, radius, jobs=jobs, backend=backend)
    parent = kernels.quickshift_parents(feat, dens, params.max_dist, jobs=jobs,
                                        backend=backend).ravel()
    root = _resolve_roots(parent)
    return split_connected(root.reshape(H, W))


def _resolve_roots(parent: np.ndarray) -> np.ndarray:
    root = parent.copy()
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            return root
        root = nxt


def split_connected(labels: np.ndarray) -> SegmentMap:
    """Split every label into 4-connected components and compact the ids."""
    labels = np.asarray(labels)
    H, W = labels.shape
    n = H * W
    idx = np.arange(n).reshape(H, W)
    same_h = labels[:, :-1] == labels[:, 1:]
    same_v = labels[:-1, :] == labels[1:, :]
    rows = np.concatenate([idx[:, :-1][same_h], idx[:-1, :][same_v]])
    cols = np.concatenate([idx[:, 1:][same_h], idx[1:, :][same_v]])
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    return _compact(comp.reshape(H, W))


def _compact(labels: np.ndarray) -> SegmentMap:
    flat = labels.ravel()
    uniq, first = np.unique(flat, return_index=True)
    order = np.argsort(first, kind="stable")
    remap = np.empty(len(uniq), dtype=np.int64)
    remap[order] = np.arange(len(uniq))
    inv = np.searchsorted(uniq, flat)
    return SegmentMap(remap[inv].reshape(labels.shape), len(uniq))


def build_adjacency(seg: SegmentMap) -> RegionAdjacency:
    lab = seg.labels
    a = np.concatenate([lab[:, :-1].ravel(), lab[:-1, :].ravel()])
    b = np.concatenate([lab[:, 1:].ravel(), lab[1:, :].ravel()])
    diff = a != b
    a, b = a[diff], b[diff]
    pairs = np.unique(np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1), axis=0)
    nbrs = [set() for _ in range(seg.segment_count)]
    for p, q in pairs.tolist():
        nbrs[p].add(q)
        nbrs[q].add(p)
    return RegionAdjacency(tuple(frozenset(s) for s in nbrs))


def segment_means(img: np.ndarray, seg: SegmentMap) -> np.ndarray:
    """Debug rendering: every pixel painted with its segment's mean color."""
    flat = seg.labels.ravel()
    counts = np.bincount(flat, minlength=seg.segment_count)
    out = np.empty((seg.segment_count, 3))
    for c in range(3):
        out[:, c] = np.bincount(flat, weights=img[..., c].ravel().astype(np.float64),
                                minlength=seg.segment_count) / counts
    return np.rint(out[flat]).astype(np.uint8).reshape(img.shape)
