"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the full list is printed in the pytest
terminal summary (see ``conftest.py``) and also on stdout with ``-s``.
"""
import itertools
import os
import time

import numpy as np
import pytest

from oracles import euclid_ground, exhaustive_otsu, lp_emd, random_hist
from shadowpair.cli import main as cli_main
from shadowpair.classify import ClassifierConfig, SegmentStats, luminance_regions, reflectance_angle
from shadowpair.detect import (DetectionConfig, detect_shadows, initial_pairing, propagate,
                               refine_with_segments)
from shadowpair.evalbench import ConfusionMatrix, ber, run_dataset
from shadowpair.quickshift import RegionAdjacency, SegmentMap
from shadowpair.raster import otsu_threshold, rgb_to_lab, save_image, save_mask
from shadowpair.relight import relight_coefficients, remove_shadows
from shadowpair.synthetic import acceptance_scenes, make_scene
from shadowpair.texture import emd


@pytest.fixture
def record(request):
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def _record(number, ok, detail):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        line = f"criterion {number:>2}: {status}  {detail}"
        lines.append(line)
        print(line)
        return ok
    return _record


ACCEPTANCE_KEY = pytest.StashKey[list]()


def test_01_ber_formula(record):
    cm = ConfusionMatrix(tp=906, fp=145, tn=855, fn=94)
    value = ber(cm)
    ok = abs(value - 0.1195) <= 1e-9 and f"{value:.3f}" == "0.119"
    record(1, ok, f"BER from rates 0.906/0.855 = {value:.12f} (reported {value:.3f})")
    assert ok


def test_02_dataset_soft_target(record):
    root = os.environ.get("SHADOWPAIR_UIUC_DIR")
    if not root or not os.path.isdir(os.path.join(root, "images")):
        record(2, "SKIP", "soft target, logged only: UIUC test split not present "
                        "(set SHADOWPAIR_UIUC_DIR with images/ and masks/)")
        return
    rep = run_dataset(os.path.join(root, "images"), os.path.join(root, "masks"), jobs=os.cpu_count() or 1)
    p = rep.pooled
    hit = p.shadow_acc is not None and p.shadow_acc >= 0.80 and ber(p) <= 0.20
    record(2, True, f"soft target, logged only: shadow acc {p.shadow_acc:.3f}, BER {ber(p):.3f} "
                    f"({'met' if hit else 'missed'}; {len(rep.per_image)} images)")


@pytest.fixture(scope="module")
def synthetic_runs():
    start = time.perf_counter()
    runs = []
    for scene in acceptance_scenes(10):
        det = detect_shadows(scene.image)
        relit = remove_shadows(scene.image, det.mask, det.segments,
                               relight_coefficients(det.links, det.stats))
        runs.append((scene, det, relit))
    return runs, time.perf_counter() - start


def test_03_synthetic_detection(record, synthetic_runs):
    runs, seconds = synthetic_runs
    ious = [(d.mask & s.truth).sum() / max(1, (d.mask | s.truth).sum()) for s, d, _ in runs]
    good = sum(i >= 0.8 for i in ious)
    ok = good >= 9 and seconds < 60
    record(3, ok, f"IoU >= 0.8 on {good}/10 (min {min(ious):.3f}); detect+remove {seconds:.1f} s")
    assert ok


def test_04_exact_recovery(record, synthetic_runs):
    runs, _ = synthetic_runs
    within = total = 0
    for scene, _, relit in runs:
        diff = np.abs(relit[scene.truth].astype(int) - scene.base[scene.truth].astype(int))
        within += int(np.count_nonzero((diff <= 2).all(axis=1)))
        total += int(scene.truth.sum())
    frac = within / total
    ok = frac >= 0.95
    record(4, ok, f"{100 * frac:.2f}% of {total} shadow pixels within +-2 of the base")
    assert ok


def test_05_emd_oracle(record):
    rng = np.random.default_rng(2024)
    worst, axioms = 0.0, True
    for _ in range(200):
        K = int(rng.integers(2, 7))
        g = euclid_ground(rng, K)
        hs = [random_hist(rng, K) for _ in range(3)]
        worst = max(worst, abs(emd(hs[0], hs[1], g) - lp_emd(hs[0], hs[1], g)))
        d = {(a, b): emd(hs[a], hs[b], g) for a, b in itertools.product(range(3), repeat=2)}
        axioms &= all(d[a, a] < 1e-12 for a in range(3))
        axioms &= all(abs(d[a, b] - d[b, a]) < 1e-12 and d[a, b] >= 0 for a, b in d)
        axioms &= all(d[a, c] <= d[a, b] + d[b, c] + 1e-9
                      for a, b, c in itertools.product(range(3), repeat=3))
    ok = worst <= 1e-6 and axioms
    record(5, ok, f"200 pairs, max |emd - LP| = {worst:.2e}; metric axioms {'hold' if axioms else 'FAIL'}")
    assert ok


def test_06_otsu_oracle(record):
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(2, 20))
        levels = rng.choice(256, n, replace=False)
        gray = np.repeat(levels, rng.integers(1, 300, n)).astype(np.uint8)
        mismatches += otsu_threshold(gray) != exhaustive_otsu(gray)
    const_ok = otsu_threshold(np.full((9, 9), 77, np.uint8)) == 77
    ok = mismatches == 0 and const_ok
    record(6, ok, f"{100 - mismatches}/100 random histograms match; constant image -> "
                  f"{otsu_threshold(np.full((9, 9), 77, np.uint8))}")
    assert ok


def test_07_angle_invariance(record):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        c = rng.uniform(0, 255, 3)
        s = rng.uniform(0, 1)
        while s == 0:
            s = rng.uniform(0, 1)
        worst = max(worst, abs(reflectance_angle(c, s * c)))
    example = reflectance_angle((100, 100, 100), (90, 50, 50))
    rejected = not example <= ClassifierConfig().angle_max_deg
    ok = worst <= 1e-9 and abs(example - 27.2) <= 0.1 and rejected
    record(7, ok, f"max angle under scaling {worst:.1e} deg; counter-example {example:.2f} deg "
                  f"({'rejected' if rejected else 'accepted'} at 10 deg)")
    assert ok


def test_08_determinism(record, tmp_path):
    img_dir, gt_dir = tmp_path / "img", tmp_path / "gt"
    img_dir.mkdir()
    gt_dir.mkdir()
    for seed in (0, 1, 2):
        sc = make_scene(seed, size=96)
        save_image(img_dir / f"s{seed}.png", sc.image)
        save_mask(gt_dir / f"s{seed}.png", sc.truth)
    src = str(img_dir / "s1.png")
    runs = []
    for n, jobs in enumerate(["1", "8", "1", "8"]):
        out = tmp_path / f"out{n}"
        out.mkdir()
        codes = [
            cli_main(["detect", src, "--mask-out", str(out / "mask.png"), "--links-out",
                      str(out / "links.json"), "--jobs", jobs]),
            cli_main(["remove", src, "--out", str(out / "relit.png"), "--jobs", jobs]),
            cli_main(["eval", "--images", str(img_dir), "--truth", str(gt_dir), "--report",
                      str(out / "report.json"), "--jobs", jobs]),
        ]
        assert codes == [0, 0, 0]
        runs.append({f: (out / f).read_bytes() for f in ("mask.png", "links.json", "relit.png", "report.json")})
    ok = all(r == runs[0] for r in runs[1:])
    record(8, ok, "detect/remove/eval outputs byte-identical over 4 runs (jobs 1 and 8)")
    assert ok


def test_09_propagation_chain(record):
    def seg(i, rgb):
        L = float(rgb_to_lab(np.array([[rgb]], np.uint8))[0, 0, 0])
        return SegmentStats(i, np.array(rgb, float), L, 100, np.array([0.5, 0.5]))
    stats = [seg(0, (200, 160, 120)), seg(1, (100, 80, 60)), seg(2, (100, 80, 60))]  # B, S1, S2
    luminance_regions(stats)
    adj = RegionAdjacency((frozenset({1}), frozenset({0, 2}), frozenset({1})))
    ground = np.array([[0.0, 1.0], [1.0, 0.0]])
    cfg = DetectionConfig()
    it1 = initial_pairing(adj, stats, cfg, ground)
    it2 = propagate(it1, adj, stats, cfg, ground, rounds=1)
    it3 = propagate(it2, adj, stats, cfg, ground, rounds=1)
    full = propagate(it1, adj, stats, cfg, ground)
    ok = (it1.pairs() == [(1, 0)] and it2.pairs() == [(1, 0), (2, 0)]
          and it3.pairs() == it2.pairs() == full.pairs())
    record(9, ok, f"iteration 1 {it1.pairs()}, iteration 2 {it2.pairs()}, iteration 3 {it3.pairs()}")
    assert ok


def test_10_refinement_strictness(record):
    def vote(below):
        gray = np.full((10, 10), 200, np.uint8)
        gray.ravel()[:below] = 20
        coarse = np.zeros((10, 10), bool)
        coarse[0, 0] = True
        fine = SegmentMap(np.zeros((10, 10), np.int64), 1)
        return bool(refine_with_segments(gray, coarse, fine, 100, 0.7).all())
    at70, at71 = vote(70), vote(71)
    ok = not at70 and at71
    record(10, ok, f"70% below -> {'shadow' if at70 else 'non-shadow'}, "
                   f"71% below -> {'shadow' if at71 else 'non-shadow'}")
    assert ok
