"""Pixel-level scoring against ground-truth masks and a dataset harness."""
from __future__ import annotations

import fnmatch
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import config as cfgmod
from .detect import DetectionConfig, detect_shadows
from .errors import DimensionMismatch, MissingClass, MissingMask, ShadowPairError
from .raster import load_image, load_mask

log = logging.getLogger(__name__)

IMAGE_EXTS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def shadow_acc(self):
        n = self.tp + self.fn
        return self.tp / n if n else None

    @property
    def nonshadow_acc(self):
        n = self.tn + self.fp
        return self.tn / n if n else None

    def as_dict(self) -> dict:
        try:
            b = ber(self)
        except MissingClass:
            b = None
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "shadow_acc": self.shadow_acc, "nonshadow_acc": self.nonshadow_acc, "ber": b}


def confusion(pred: np.ndarray, truth: np.ndarray) -> ConfusionMatrix:
    """Pixel counts with shadow as the positive class."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"prediction {pred.shape} vs truth {truth.shape}")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    return ConfusionMatrix(tp, fp, pred.size - tp - fp - fn, fn)


def ber(cm: ConfusionMatrix) -> float:
    """Balanced error rate ``1 - (TP/(TP+FN) + TN/(TN+FP)) / 2``."""
    if cm.tp + cm.fn == 0 or cm.tn + cm.fp == 0:
        raise MissingClass("ground truth lacks shadow or non-shadow pixels")
    return 1.0 - 0.5 * (cm.tp / (cm.tp + cm.fn) + cm.tn / (cm.tn + cm.fp))


@dataclass
class ImageResult:
    file: str
    cm: ConfusionMatrix
    subset: str
    seconds: float = 0.0


@dataclass
class EvalReport:
    per_image: list = field(default_factory=list)
    failed: list = field(default_factory=list)   # (file, message)
    config_echo: dict = field(default_factory=dict)
    overrides: list = field(default_factory=list)  # (pattern, settings, matched count)

    @property
    def pooled(self) -> ConfusionMatrix:
        total = ConfusionMatrix()
        for r in self.per_image:
            total = total + r.cm
        return total

    def subsets(self) -> dict:
        out = {}
        for r in self.per_image:
            out[r.subset] = out.get(r.subset, ConfusionMatrix()) + r.cm
        return dict(sorted(out.items()))

    def mean_image_ber(self):
        vals = [r.cm.as_dict()["ber"] for r in self.per_image]
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None

    def to_json(self, timings: bool = False) -> str:
        rows = []
        for r in self.per_image:
            row = {"file": r.file, **r.cm.as_dict()}
            if timings:
                row["seconds"] = r.seconds
            rows.append(row)
        doc = {
            "per_image": rows,
            "pooled": self.pooled.as_dict(),
            "subsets": {k: v.as_dict() for k, v in self.subsets().items()},
            "mean_image_ber": self.mean_image_ber(),
            "overrides": [{"pattern": p, "settings": s, "matched": n} for p, s, n in self.overrides],
            "failed": [{"file": f, "error": m} for f, m in self.failed],
            "config_echo": self.config_echo,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _find_mask(truth_dir, stem):
    for ext in IMAGE_EXTS + (".bmp", ".tif", ".tiff"):
        for cand in (stem + ext, stem + ext.upper()):
            path = os.path.join(truth_dir, cand)
            if os.path.exists(path):
                return path
    return None


def list_images(images_dir) -> list:
    return sorted(f for f in os.listdir(images_dir)
                  if os.path.splitext(f)[1].lower() in IMAGE_EXTS
                  and os.path.isfile(os.path.join(images_dir, f)))


def _evaluate_one(args):
    path, mask_path, cfg, subset = args
    name = os.path.basename(path)
    start = time.perf_counter()
    try:
        if mask_path is None:
            raise MissingMask(f"{name}: no ground-truth mask with the same stem")
        img = load_image(path)
        truth = load_mask(mask_path)
        det = detect_shadows(img, cfg)
        cm = confusion(det.mask, truth)
    except (ShadowPairError, OSError, ValueError) as exc:
        return name, None, str(exc)
    return name, ImageResult(name, cm, subset, time.perf_counter() - start), None


def run_dataset(images_dir, truth_dir, cfg: DetectionConfig = DetectionConfig(),
                overrides=(), jobs: int = 1) -> EvalReport:
    """Detect and score every image; ``overrides`` is a list of ``(glob, settings)``.

    The first matching override applies; its pattern names the subset the
    image is pooled into (``default`` otherwise).
    """
    files = list_images(images_dir)
    if not files:
        raise FileNotFoundError(f"no images found in {images_dir}")
    matched = [0] * len(overrides)
    tasks = []
    for f in files:
        img_cfg, subset = cfg, "default"
        for n, (pattern, settings) in enumerate(overrides):
            if fnmatch.fnmatch(f, pattern):
                img_cfg, subset = cfgmod.apply(cfg, settings), pattern
                matched[n] += 1
                break
        tasks.append((os.path.join(images_dir, f),
                      _find_mask(truth_dir, os.path.splitext(f)[0]), img_cfg, subset))

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_evaluate_one, tasks))
    else:
        results = [_evaluate_one(t) for t in tasks]

    report = EvalReport(config_echo=cfgmod.to_flat(cfg),
                        overrides=[(p, dict(s), m) for (p, s), m in zip(overrides, matched)])
    for name, res, err in results:  # already in filename order
        if err is not None:
            log.warning("skipping %s: %s", name, err)
            report.failed.append((name, err))
        else:
            report.per_image.append(res)
    return report
