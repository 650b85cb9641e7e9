"""Per-segment statistics and the reflectance, luminance and texture classifiers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BothNearBlack, DegenerateDifference, ZeroReference
from .quickshift import SegmentMap
from .texture import emd, segment_histograms

NEAR_BLACK_L = 0.5
RATIO_CAP = 1000.0


@dataclass(frozen=True)
class ClassifierConfig:
    angle_max_deg: float = 10.0
    ratio_min: float = 1.2
    texture_skip_ratio: float = 2.4
    emd_max: float = 0.5
    lum_bin_width: float = 4.0
    peak_prominence: float = 0.1

    def __post_init__(self):
        if not 0 < self.angle_max_deg < 90:
            raise ValueError("angle_max_deg must lie in (0, 90)")
        if self.ratio_min <= 1:
            raise ValueError("ratio_min must exceed 1")
        if self.texture_skip_ratio < self.ratio_min:
            raise ValueError("texture_skip_ratio must be >= ratio_min")
        if not 0 < self.emd_max <= 1:
            raise ValueError("emd_max must lie in (0, 1]")
        if self.lum_bin_width <= 0 or not 0 <= self.peak_prominence <= 1:
            raise ValueError("invalid luminance histogram settings")


@dataclass
class SegmentStats:
    id: int
    median_rgb: np.ndarray
    median_l: float
    pixel_count: int
    texton_hist: np.ndarray | None = None
    luminance_region: int | None = None
    centroid: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class PairVerdict:
    accepted: bool
    shadow_id: int | None = None
    nonshadow_id: int | None = None
    angle_deg: float | None = None
    ratio_t: float | None = None
    emd_value: float | None = None  # None: never computed
    texture_skipped: bool = False
    reject_reason: str | None = None


def _upper_medians(labels, values, n):
    order = np.lexsort((values, labels))
    counts = np.bincount(labels, minlength=n)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return values[order][starts + counts // 2]


def segment_stats(img: np.ndarray, lab: np.ndarray, seg: SegmentMap,
                  texton_labels: np.ndarray | None = None, k: int | None = None) -> list[SegmentStats]:
    """Upper-median RGB and L, pixel count, centroid and texton histogram per segment."""
    n = seg.segment_count
    labels = seg.labels.ravel()
    rgb = img.reshape(-1, 3)
    med = np.stack([_upper_medians(labels, rgb[:, c], n) for c in range(3)], axis=1)
    med_l = _upper_medians(labels, lab[..., 0].ravel(), n)
    counts = np.bincount(labels, minlength=n)
    H, W = seg.shape
    yy, xx = np.divmod(np.arange(H * W), W)
    cy = np.bincount(labels, weights=yy, minlength=n) / counts
    cx = np.bincount(labels, weights=xx, minlength=n) / counts
    hists = None
    if texton_labels is not None:
        hists = segment_histograms(texton_labels, seg.labels, n, k)
    return [
        SegmentStats(
            id=i,
            median_rgb=med[i].astype(np.float64),
            median_l=float(med_l[i]),
            pixel_count=int(counts[i]),
            texton_hist=None if hists is None else hists[i],
            centroid=(float(cy[i]), float(cx[i])),
        )
        for i in range(n)
    ]


def reflectance_angle(i_ns, i_s) -> float:
    """Angle in degrees between ``i_ns - i_s`` and ``i_ns``.

    Computed with atan2 of the cross and dot products, which equals the
    arccos form but stays accurate near zero.
    """
    i_ns = np.asarray(i_ns, dtype=np.float64)
    i_s = np.asarray(i_s, dtype=np.float64)
    if np.linalg.norm(i_ns) == 0:
        raise ZeroReference("non-shadow color is black")
    diff = i_ns - i_s
    if np.linalg.norm(diff) < 1e-9:
        raise DegenerateDifference("shadow and non-shadow medians are identical")
    cross = np.linalg.norm(np.cross(diff, i_ns))
    return math.degrees(math.atan2(cross, float(diff @ i_ns)))


def luminance_histogram_peaks(values, bin_width=4.0, prominence=0.1, weights=None):
    """Bin centers of the histogram maxima of ``values`` over [0, 100].

    A run of equal-height bins counts as one maximum located at its lowest
    bin, which also settles adjacent-bin merges toward the lower L.
    """
    nbins = int(math.ceil(100.0 / bin_width))
    idx = np.clip((np.asarray(values, dtype=np.float64) // bin_width).astype(int), 0, nbins - 1)
    hist = np.bincount(idx, weights=weights, minlength=nbins)
    floor = prominence * hist.max()
    peaks = []
    i = 0
    while i < nbins:
        j = i
        while j + 1 < nbins and hist[j + 1] == hist[i]:
            j += 1
        left = hist[i - 1] if i > 0 else -1
        right = hist[j + 1] if j + 1 < nbins else -1
        if hist[i] > 0 and hist[i] > left and hist[i] > right and hist[i] >= floor:
            peaks.append(i)
        i = j + 1
    return np.array([(p + 0.5) * bin_width for p in peaks]), hist


def luminance_regions(stats: list[SegmentStats], cfg: ClassifierConfig = ClassifierConfig()):
    """Group segments by the nearest luminance-histogram peak; sets ``luminance_region``.

    Each segment's median L is weighted by its pixel count, so the many tiny
    fragments left by the connectivity split cannot bury a large region's peak.
    """
    values = np.array([s.median_l for s in stats])
    weights = np.array([s.pixel_count for s in stats], dtype=np.float64)
    centers, _ = luminance_histogram_peaks(values, cfg.lum_bin_width, cfg.peak_prominence, weights)
    # argmin returns the first (lowest) peak on ties
    region = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
    for s, r in zip(stats, region):
        s.luminance_region = int(r)
    return region, centers


def luminance_ratio(a: SegmentStats, b: SegmentStats):
    """``(T, darker_id)`` with ``T = max(L) / min(L)`` for the two median L values."""
    la, lb = a.median_l, b.median_l
    if la < NEAR_BLACK_L and lb < NEAR_BLACK_L:
        raise BothNearBlack(f"segments {a.id} and {b.id} are both near black")
    if la < lb or (la == lb and a.id < b.id):
        dark, bright = a, b
    else:
        dark, bright = b, a
    lo, hi = dark.median_l, bright.median_l
    if lo < NEAR_BLACK_L:
        t = RATIO_CAP if lo <= 0 else min(hi / lo, RATIO_CAP)
    else:
        t = hi / lo
    return t, dark.id


def classify_pair(a: SegmentStats, b: SegmentStats, cfg: ClassifierConfig = ClassifierConfig(),
                  ground: np.ndarray | None = None) -> PairVerdict:
    """Run the luminance, reflectance and texture gates in order.

    The darker segment takes the shadow role, so the verdict does not depend
    on argument order.
    """
    if a.luminance_region is not None and a.luminance_region == b.luminance_region:
        return PairVerdict(False, reject_reason="same-region")
    try:
        t, dark_id = luminance_ratio(a, b)
    except BothNearBlack:
        return PairVerdict(False, reject_reason="degenerate")
    shadow, lit = (a, b) if dark_id == a.id else (b, a)
    if not t > cfg.ratio_min:
        return PairVerdict(False, shadow.id, lit.id, ratio_t=t, reject_reason="low-ratio")
    try:
        angle = reflectance_angle(lit.median_rgb, shadow.median_rgb)
    except (DegenerateDifference, ZeroReference):
        return PairVerdict(False, shadow.id, lit.id, ratio_t=t, reject_reason="degenerate")
    if not angle <= cfg.angle_max_deg:
        return PairVerdict(False, shadow.id, lit.id, angle, t, reject_reason="angle")
    if t > cfg.texture_skip_ratio:
        return PairVerdict(True, shadow.id, lit.id, angle, t, texture_skipped=True)
    if ground is None or shadow.texton_hist is None or lit.texton_hist is None:
        raise ValueError("texture comparison needs texton histograms and a ground matrix")
    dist = emd(lit.texton_hist, shadow.texton_hist, ground, check=False)
    if not dist <= cfg.emd_max:
        return PairVerdict(False, shadow.id, lit.id, angle, t, dist, reject_reason="texture")
    return PairVerdict(True, shadow.id, lit.id, angle, t, dist)
