"""Synthetic textured scenes with a known shadow region.

Used by the acceptance suite, the benchmark and the CLI tests. A scene is a
textured base image; the shadow region is the base multiplied by one factor
in every channel and rounded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter


@dataclass
class Scene:
    base: np.ndarray      # (H, W, 3) uint8, no shadow
    image: np.ndarray     # base with the shadow applied
    truth: np.ndarray     # (H, W) bool
    factor: float


def textured_base(rng: np.random.Generator, size: int = 256, amplitude: float = 0.04,
                  grain: float = 0.6) -> np.ndarray:
    color = rng.uniform(110, 220, size=3)
    noise = gaussian_filter(rng.standard_normal((size, size)), grain)
    noise /= noise.std()
    # a little per-channel grain so the texture is not purely achromatic
    chroma = gaussian_filter(rng.standard_normal((size, size, 3)), (grain, grain, 0))
    chroma /= chroma.std()
    tex = 1.0 + amplitude * noise[..., None] + 0.25 * amplitude * chroma
    return np.clip(np.rint(color * tex), 0, 255).astype(np.uint8)


def shadow_region(rng: np.random.Generator, size: int, kind: str) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    if kind == "half":
        angle = rng.uniform(0, 2 * np.pi)
        offset = rng.uniform(-0.15, 0.15) * size
        c = (size - 1) / 2.0
        return (xx - c) * np.cos(angle) + (yy - c) * np.sin(angle) > offset
    if kind == "blob":
        cy, cx = rng.uniform(0.35, 0.65, size=2) * size
        ry, rx = rng.uniform(0.2, 0.3, size=2) * size
        return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    raise ValueError(f"unknown region kind {kind!r}")


def apply_shadow(base: np.ndarray, region: np.ndarray, factor: float) -> np.ndarray:
    out = base.copy()
    out[region] = np.clip(np.rint(base[region] * factor), 0, 255).astype(np.uint8)
    return out


def make_scene(seed: int, size: int = 256, kind: str | None = None,
               factor: float | None = None) -> Scene:
    rng = np.random.default_rng(seed)
    if kind is None:
        kind = "half" if seed % 2 == 0 else "blob"
    if factor is None:
        factor = float(rng.uniform(0.3, 0.7))
    base = textured_base(rng, size)
    region = shadow_region(rng, size, kind)
    return Scene(base, apply_shadow(base, region, factor), region, factor)


def acceptance_scenes(n: int = 10, size: int = 256):
    return [make_scene(seed, size) for seed in range(n)]


def chain_scene(seed: int = 3, size: int = 128) -> Scene:
    """Three vertical bands: lit base, a 0.55 copy, then a 0.45 copy.

    The darkest band touches only the middle one, so it can be linked to the
    lit band only through propagation.
    """
    rng = np.random.default_rng(seed)
    base = textured_base(rng, size)
    a, b = size // 2, (3 * size) // 4
    img = base.copy()
    img[:, a:b] = np.rint(base[:, a:b] * 0.55).astype(np.uint8)
    img[:, b:] = np.rint(base[:, b:] * 0.45).astype(np.uint8)
    truth = np.zeros((size, size), dtype=bool)
    truth[:, a:] = True
    return Scene(base, img, truth, 0.5)
