import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowpair.classify import PairVerdict, SegmentStats, luminance_regions
from shadowpair.detect import (FIXED_GRAY_LIMIT, DetectionConfig, PairLinks, _resolve_conflicts,
                               coarse_mask, detect_shadows, gray_limit_for, initial_pairing,
                               propagate, refine, refine_with_segments)
from shadowpair.quickshift import RegionAdjacency, SegmentMap
from shadowpair.raster import rgb_to_gray, rgb_to_lab
from shadowpair.synthetic import chain_scene

GROUND = np.array([[0.0, 1.0], [1.0, 0.0]])
HIST = np.array([0.6, 0.4])


def seg_stats(id_, rgb, count=100):
    L = float(rgb_to_lab(np.array([[rgb]], np.uint8))[0, 0, 0])
    return SegmentStats(id_, np.array(rgb, float), L, count, HIST.copy())


def adjacency(n, edges):
    nb = [set() for _ in range(n)]
    for a, b in edges:
        nb[a].add(b)
        nb[b].add(a)
    return RegionAdjacency(tuple(frozenset(s) for s in nb))


@pytest.fixture
def chain():
    """B(0) - S1(1) - S2(2): both shadows are dimmed copies of B; S2 does not touch B."""
    ss = [seg_stats(0, (200, 160, 120)), seg_stats(1, (100, 80, 60)), seg_stats(2, (100, 80, 60))]
    luminance_regions(ss)
    return adjacency(3, [(0, 1), (1, 2)]), ss


class TestPairingAndPropagation:
    def test_chain_rounds(self, chain):
        adj, ss = chain
        cfg = DetectionConfig()
        first = initial_pairing(adj, ss, cfg, GROUND)
        assert first.pairs() == [(1, 0)]
        second = propagate(first, adj, ss, cfg, GROUND, rounds=1)
        assert second.pairs() == [(1, 0), (2, 0)]
        third = propagate(second, adj, ss, cfg, GROUND, rounds=1)
        assert third.pairs() == second.pairs()

    @pytest.mark.parametrize("iterations,expected", [(1, [(1, 0)]), (2, [(1, 0), (2, 0)]),
                                                     (3, [(1, 0), (2, 0)])])
    def test_iterations_setting(self, chain, iterations, expected):
        adj, ss = chain
        cfg = DetectionConfig(iterations=iterations)
        links = propagate(initial_pairing(adj, ss, cfg, GROUND), adj, ss, cfg, GROUND)
        assert links.pairs() == expected

    def test_no_links_no_propagation(self, chain):
        adj, ss = chain
        assert len(propagate(PairLinks(), adj, ss, DetectionConfig(), GROUND)) == 0

    def test_two_segments(self):
        ss = [seg_stats(0, (60, 90, 128)), seg_stats(1, (120, 180, 255))]
        luminance_regions(ss)
        links = initial_pairing(adjacency(2, [(0, 1)]), ss, DetectionConfig(), GROUND)
        assert links.pairs() == [(0, 1)]

    def test_one_region_gives_nothing(self):
        ss = [seg_stats(i, (100, 100, 100)) for i in range(3)]
        luminance_regions(ss)
        links = initial_pairing(adjacency(3, [(0, 1), (1, 2)]), ss, DetectionConfig(), GROUND)
        assert len(links) == 0

    def test_three_stripes(self):
        # bright, its dimmed copy, and a dark stripe of another material
        ss = [seg_stats(0, (200, 160, 120)), seg_stats(1, (100, 80, 60)), seg_stats(2, (50, 80, 60))]
        luminance_regions(ss)
        adj = adjacency(3, [(0, 1), (1, 2)])
        links = initial_pairing(adj, ss, DetectionConfig(), GROUND)
        assert links.pairs() == [(1, 0)]
        assert 2 not in links.shadow_set | links.nonshadow_set

    def test_conflict_drops_larger_angle(self):
        v = lambda s, n, a: PairVerdict(True, s, n, a, 2.0)
        links = {(1, 0): v(1, 0, 1.0), (2, 1): v(2, 1, 3.0)}
        assert sorted(_resolve_conflicts(links)) == [(1, 0)]
        links = {(1, 0): v(1, 0, 5.0), (2, 1): v(2, 1, 3.0)}
        assert sorted(_resolve_conflicts(links)) == [(2, 1)]
        # equal angles: the later pair goes
        links = {(1, 0): v(1, 0, 2.0), (2, 1): v(2, 1, 2.0)}
        assert sorted(_resolve_conflicts(links)) == [(1, 0)]

    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6), st.floats(0, 10)),
                    max_size=12))
    def test_resolved_roles_are_disjoint(self, raw):
        links = {(s, n): PairVerdict(True, s, n, a, 2.0) for s, n, a in raw if s != n}
        out = _resolve_conflicts(links)
        assert not ({s for s, _ in out} & {n for _, n in out})
        assert set(out) <= set(links)


class TestMasks:
    def test_empty_links(self):
        seg = SegmentMap(np.zeros((3, 3), np.int64), 1)
        assert not coarse_mask(PairLinks(), seg).any()

    def test_one_shadow_segment(self):
        lab = np.zeros((10, 10), np.int64)
        lab[:5] = 1
        links = PairLinks({(1, 0): PairVerdict(True, 1, 0, 0.0, 2.0)})
        assert coarse_mask(links, SegmentMap(lab, 2)).sum() == 50

    def _fine_case(self, n, below):
        gray = np.full((1, n), 200, np.uint8)
        gray[0, :below] = 10
        fine = SegmentMap(np.zeros((1, n), np.int64), 1)
        coarse = np.zeros((1, n), bool)
        coarse[0, 0] = True
        return refine_with_segments(gray, coarse, fine, 100, 0.7)

    @pytest.mark.parametrize("n,below,expected", [(10, 8, True), (10, 7, False),
                                                  (100, 70, False), (100, 71, True)])
    def test_fraction_is_strict(self, n, below, expected):
        out = self._fine_case(n, below)
        assert out.all() if expected else not out.any()

    def test_limit_is_strict(self):
        gray = np.array([[100, 100, 99]], np.uint8)
        fine = SegmentMap(np.zeros((1, 3), np.int64), 1)
        coarse = np.ones((1, 3), bool)
        assert not refine_with_segments(gray, coarse, fine, 100, 0.5).any()
        assert refine_with_segments(gray, coarse, fine, 101, 0.5).all()

    def test_untouched_segments_stay_clear(self):
        gray = np.zeros((2, 4), np.uint8)
        fine = SegmentMap(np.array([[0, 0, 1, 1], [0, 0, 1, 1]]), 2)
        coarse = np.zeros((2, 4), bool)
        coarse[0, 0] = True
        out = refine_with_segments(gray, coarse, fine, 50, 0.7)
        assert out[:, :2].all() and not out[:, 2:].any()

    def test_refine_empty_coarse(self):
        img = np.random.default_rng(0).integers(0, 255, (30, 30, 3), dtype=np.uint8)
        mask, fine, _ = refine(img, np.zeros((30, 30), bool))
        assert not mask.any() and fine is None

    def test_gray_limit_modes(self):
        gray = np.array([10] * 5 + [200] * 5, np.uint8)
        assert gray_limit_for(gray, DetectionConfig()) == 10
        assert gray_limit_for(gray, DetectionConfig(gray_limit="fixed")) == FIXED_GRAY_LIMIT == 89
        assert gray_limit_for(gray, DetectionConfig(gray_limit="fixed", gray_limit_value=5)) == 5


def checker_scene():
    rng = np.random.default_rng(0)
    yy, xx = np.mgrid[0:128, 0:128]
    cells = ((yy // 8 + xx // 8) % 2).astype(bool)
    img = np.where(cells[..., None], np.array([190, 160, 130]), np.array([160, 135, 110])).astype(float)
    img += rng.normal(0, 2, img.shape)  # sensor noise keeps gray levels from being exactly flat
    truth = np.zeros((128, 128), bool)
    truth[:, 64:] = True
    img[truth] *= 0.5
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), truth


def iou(a, b):
    return (a & b).sum() / max(1, (a | b).sum())


class TestEndToEnd:
    def test_constant_image(self):
        det = detect_shadows(np.full((40, 40, 3), 150, np.uint8))
        assert det.segments.segment_count == 1 and not det.mask.any() and len(det.links) == 0

    def test_checkerboard_half_dimmed(self):
        img, truth = checker_scene()
        det = detect_shadows(img)
        assert iou(det.mask, truth) >= 0.8

    def test_different_material_is_not_shadow(self):
        img = np.zeros((96, 96, 3), float)
        img[:, :48] = (200, 180, 160)
        img[:, 48:] = (40, 90, 60)
        img += np.random.default_rng(1).normal(0, 3, img.shape)
        det = detect_shadows(np.clip(img, 0, 255).astype(np.uint8))
        assert not det.mask.any()

    def test_invariants_on_chain_scene(self):
        img = chain_scene().image
        det = detect_shadows(img)
        shadow, lit = det.links.shadow_set, det.links.nonshadow_set
        assert not shadow & lit
        assert set(det.initial_links.links) <= set(det.links.links)
        # refined mask is a union of whole fine segments voted dark enough
        gray = rgb_to_gray(img)
        lab = det.fine_segments.labels
        for k in np.unique(lab[det.mask]):
            px = lab == k
            assert det.mask[px].all()
            assert (gray[px] < det.gray_limit).mean() > 0.7
        assert not det.mask[lab == lab[0, 0]].any()

    def test_one_iteration_is_initial_pairing_plus_refine(self):
        img = chain_scene().image
        det = detect_shadows(img, DetectionConfig(iterations=1))
        assert det.links.links == det.initial_links.links
        mask, _, _ = refine(img, coarse_mask(det.initial_links, det.segments), DetectionConfig(iterations=1))
        assert np.array_equal(mask, det.mask)
        full = detect_shadows(img)
        assert full.mask.sum() > det.mask.sum()

    def test_parallelism_does_not_change_result(self):
        img = chain_scene(seed=5, size=96).image
        a = detect_shadows(img, jobs=1)
        b = detect_shadows(img, jobs=8)
        assert np.array_equal(a.mask, b.mask) and a.links.links == b.links.links

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DetectionConfig(iterations=0)
        with pytest.raises(ValueError):
            DetectionConfig(gray_limit="median")
        with pytest.raises(ValueError):
            DetectionConfig(shadow_fraction=1.0)
        cfg = dataclasses.replace(DetectionConfig(), coarse_sigma=5)
        assert cfg.quickshift(5).max_dist == 10
