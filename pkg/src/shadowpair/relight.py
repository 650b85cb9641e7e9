"""Shadow removal by per-channel ratio relighting."""
from __future__ import annotations

import numpy as np

from .classify import SegmentStats
from .errors import DimensionMismatch, MissingPartner
from .quickshift import SegmentMap


def _upper_median(values: np.ndarray) -> np.ndarray:
    v = np.sort(values, axis=0)
    return v[len(v) // 2]


def relight_coefficients(links, stats: list[SegmentStats]) -> dict:
    """Per shadow segment, the per-channel upper median of partner/shadow median ratios.

    Shadow medians below 1 are clamped to 1 in the denominator.
    """
    partners = {}
    for s, n in links.pairs():
        partners.setdefault(s, []).append(n)
    for s in links.shadow_set:
        if not partners.get(s):
            raise MissingPartner(f"shadow segment {s} has no linked non-shadow segment")
    coeffs = {}
    for s, ns in sorted(partners.items()):
        denom = np.maximum(np.asarray(stats[s].median_rgb, dtype=np.float64), 1.0)
        ratios = np.array([np.asarray(stats[n].median_rgb, dtype=np.float64) / denom for n in ns])
        coeffs[s] = _upper_median(ratios)
    return coeffs


def _segment_centroids(seg: SegmentMap) -> np.ndarray:
    labels = seg.labels.ravel()
    W = seg.shape[1]
    yy, xx = np.divmod(np.arange(labels.size), W)
    counts = np.bincount(labels, minlength=seg.segment_count)
    cy = np.bincount(labels, weights=yy, minlength=seg.segment_count)
    cx = np.bincount(labels, weights=xx, minlength=seg.segment_count)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.stack([cy / counts, cx / counts], axis=1)


def coefficient_table(mask: np.ndarray, seg: SegmentMap, coeffs: dict) -> np.ndarray:
    """``(segment_count, 3)`` multipliers; masked segments without their own
    coefficients borrow those of the linked shadow segment with the nearest centroid."""
    table = np.ones((seg.segment_count, 3))
    if not coeffs:
        return table
    own = np.array(sorted(coeffs))
    for s in own:
        table[s] = coeffs[s]
    masked = np.unique(seg.labels[mask])
    orphans = np.setdiff1d(masked, own)
    if len(orphans):
        cent = _segment_centroids(seg)
        d2 = ((cent[orphans][:, None, :] - cent[own][None, :, :]) ** 2).sum(axis=-1)
        table[orphans] = table[own[np.argmin(d2, axis=1)]]  # argmin: lowest id on ties
    return table


def remove_shadows(img: np.ndarray, mask: np.ndarray, seg: SegmentMap, coeffs: dict) -> np.ndarray:
    """Multiply masked pixels by their segment's coefficients; others are copied."""
    img = np.asarray(img, dtype=np.uint8)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape[:2] or seg.shape != img.shape[:2]:
        raise DimensionMismatch("image, mask and segmentation sizes differ")
    out = img.copy()
    if not mask.any():
        return out
    if not coeffs:
        raise MissingPartner("shadow mask is non-empty but no relighting coefficients exist")
    table = coefficient_table(mask, seg, coeffs)
    k = table[seg.labels[mask]]
    out[mask] = np.clip(np.rint(k * img[mask]), 0, 255).astype(np.uint8)
    return out
