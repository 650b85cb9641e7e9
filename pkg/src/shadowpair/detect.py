"""End-to-end shadow detection: pairing, propagation, coarse mask, refinement."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .classify import (ClassifierConfig, PairVerdict, SegmentStats, classify_pair, luminance_regions,
                       segment_stats)
from .quickshift import (QuickshiftParams, RegionAdjacency, SegmentMap, build_adjacency,
                         quickshift_segment)
from .raster import otsu_threshold, rgb_to_gray, rgb_to_lab
from .texture import (TextonCodebook, check_ground, learn_textons, make_filter_bank, texton_features,
                      texton_map)

FIXED_GRAY_LIMIT = int(round(0.35 * 255))  # 89


@dataclass(frozen=True)
class DetectionConfig:
    coarse_sigma: float = 9.0
    fine_sigma: float = 3.0
    iterations: int = 3
    shadow_fraction: float = 0.7
    gray_limit: str = "otsu"          # "otsu" or "fixed"
    gray_limit_value: int = FIXED_GRAY_LIMIT
    color_scale: float = 1.0
    max_dist_ratio: float = 2.0       # max_dist = ratio * sigma
    texton_k: int = 32
    seed: int = 0
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.shadow_fraction < 1:
            raise ValueError("shadow_fraction must lie in (0, 1)")
        if not self.fine_sigma < self.coarse_sigma:
            raise ValueError("fine_sigma must be smaller than coarse_sigma")
        if self.gray_limit not in ("otsu", "fixed"):
            raise ValueError(f"gray_limit must be 'otsu' or 'fixed', got {self.gray_limit!r}")
        if not 0 <= self.gray_limit_value <= 255:
            raise ValueError("gray_limit_value must lie in [0, 255]")
        if self.texton_k < 2:
            raise ValueError("texton_k must be >= 2")

    def quickshift(self, sigma: float) -> QuickshiftParams:
        return QuickshiftParams(sigma, self.max_dist_ratio * sigma, self.color_scale)


@dataclass
class PairLinks:
    """Directed shadow -> non-shadow links with the verdict that created each."""

    links: dict = field(default_factory=dict)  # (shadow, nonshadow) -> PairVerdict

    @property
    def shadow_set(self) -> set:
        return {s for s, _ in self.links}

    @property
    def nonshadow_set(self) -> set:
        return {n for _, n in self.links}

    def pairs(self) -> list:
        return sorted(self.links)

    def copy(self) -> "PairLinks":
        return PairLinks(dict(self.links))

    def __len__(self):
        return len(self.links)


def _pair_key(link):
    return (min(link), max(link))


def _resolve_conflicts(links: dict) -> dict:
    links = dict(links)
    while True:
        shadows = {s for s, _ in links}
        nonshadows = {n for _, n in links}
        both = shadows & nonshadows
        if not both:
            return links
        involved = [l for l in links if l[0] in both or l[1] in both]
        # drop the worst link: largest angle, then latest (min id, max id)
        worst = max(involved, key=lambda l: (links[l].angle_deg, _pair_key(l)))
        del links[worst]


class _Judge:
    """Memoized ``classify_pair``; verdicts depend only on the unordered pair."""

    def __init__(self, stats, cfg, ground):
        self.stats, self.cfg, self.ground = stats, cfg, ground
        self.cache = {}

    def __call__(self, a, b) -> PairVerdict:
        key = (min(a, b), max(a, b))
        v = self.cache.get(key)
        if v is None:
            v = classify_pair(self.stats[a], self.stats[b], self.cfg.classifier, self.ground)
            self.cache[key] = v
        return v


def initial_pairing(adj: RegionAdjacency, stats: list[SegmentStats], cfg: DetectionConfig = DetectionConfig(),
                    ground: np.ndarray | None = None, *, judge: _Judge | None = None) -> PairLinks:
    judge = judge or _Judge(stats, cfg, ground)
    found = {}
    for a, b in adj.pairs():
        v = judge(a, b)
        if v.accepted:
            found[(v.shadow_id, v.nonshadow_id)] = v
    return PairLinks(_resolve_conflicts(found))


def propagate(links: PairLinks, adj: RegionAdjacency, stats: list[SegmentStats],
              cfg: DetectionConfig = DetectionConfig(), ground: np.ndarray | None = None,
              rounds: int | None = None, *, judge: _Judge | None = None) -> PairLinks:
    """Grow links from shadow segments to their unclassified neighbours.

    Each round reads a frozen snapshot of the previous round's links. The
    initial pairing counts as the first of ``cfg.iterations`` passes, so the
    default is ``cfg.iterations - 1`` rounds.
    """
    if rounds is None:
        rounds = cfg.iterations - 1
    judge = judge or _Judge(stats, cfg, ground)
    current = dict(links.links)
    for _ in range(rounds):
        classified = {s for s, _ in current} | {n for _, n in current}
        new = {}
        for s, n in sorted(current):
            for u in sorted(adj.neighbors[s]):
                if u in classified:
                    continue
                v = judge(u, n)
                if v.accepted and v.shadow_id == u:
                    new[(u, n)] = v
        if not new:
            break
        current.update(new)
    return PairLinks(current)


def coarse_mask(links: PairLinks, seg: SegmentMap) -> np.ndarray:
    shadow = np.zeros(seg.segment_count, dtype=bool)
    shadow[list(links.shadow_set)] = True
    return shadow[seg.labels]


def refine_with_segments(gray: np.ndarray, coarse: np.ndarray, fine: SegmentMap, gray_limit: int,
                         shadow_fraction: float) -> np.ndarray:
    """Whole-segment vote: a fine segment touching the coarse mask is shadow iff
    strictly more than ``shadow_fraction`` of its pixels are darker than ``gray_limit``."""
    labels = fine.labels.ravel()
    n = fine.segment_count
    counts = np.bincount(labels, minlength=n)
    below = np.bincount(labels, weights=(gray.ravel() < gray_limit), minlength=n)
    touches = np.bincount(labels, weights=coarse.ravel(), minlength=n) > 0
    shadow = touches & (below / counts > shadow_fraction)
    return shadow[fine.labels]


def gray_limit_for(gray: np.ndarray, cfg: DetectionConfig) -> int:
    return otsu_threshold(gray) if cfg.gray_limit == "otsu" else int(cfg.gray_limit_value)


def refine(img: np.ndarray, coarse: np.ndarray, cfg: DetectionConfig = DetectionConfig(), *,
           lab: np.ndarray | None = None, jobs: int = 1):
    """Returns ``(mask, fine_segments, gray_limit)``."""
    gray = rgb_to_gray(img)
    limit = gray_limit_for(gray, cfg)
    if not coarse.any():
        return np.zeros_like(coarse, dtype=bool), None, limit
    fine = quickshift_segment(img, cfg.quickshift(cfg.fine_sigma), lab=lab, jobs=jobs)
    return refine_with_segments(gray, coarse, fine, limit, cfg.shadow_fraction), fine, limit


@dataclass
class Detection:
    mask: np.ndarray
    coarse: np.ndarray
    links: PairLinks
    initial_links: PairLinks
    segments: SegmentMap
    fine_segments: SegmentMap | None
    stats: list
    adjacency: RegionAdjacency
    codebook: TextonCodebook
    gray_limit: int


def detect_shadows(img: np.ndarray, cfg: DetectionConfig = DetectionConfig(), *, jobs: int = 1) -> Detection:
    img = np.asarray(img, dtype=np.uint8)
    lab = rgb_to_lab(img)
    seg = quickshift_segment(img, cfg.quickshift(cfg.coarse_sigma), lab=lab, jobs=jobs)
    adj = build_adjacency(seg)

    feats = texton_features(rgb_to_gray(img), make_filter_bank())
    with warnings.catch_warnings():
        # flat or nearly flat images legitimately have fewer than K textons
        warnings.simplefilter("ignore", RuntimeWarning)
        codebook = learn_textons(feats, cfg.texton_k, cfg.seed)
    tmap = texton_map(feats, codebook)
    ground = codebook.ground_distance()
    check_ground(ground)

    stats = segment_stats(img, lab, seg, tmap, codebook.k)
    luminance_regions(stats, cfg.classifier)
    judge = _Judge(stats, cfg, ground)
    first = initial_pairing(adj, stats, cfg, ground, judge=judge)
    links = propagate(first, adj, stats, cfg, ground, judge=judge)
    coarse = coarse_mask(links, seg)
    mask, fine, limit = refine(img, coarse, cfg, lab=lab, jobs=jobs)
    return Detection(mask, coarse, links, first, seg, fine, stats, adj, codebook, limit)
