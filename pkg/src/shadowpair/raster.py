"""Image I/O, color conversions and Otsu thresholding.

Images are plain numpy arrays: RGB is ``(H, W, 3) uint8``, LAB is
``(H, W, 3) float64`` with L in [0, 100], gray is ``(H, W) uint8`` and masks
are ``(H, W) bool``.
"""
from __future__ import annotations

import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, UnsupportedFormat

_READABLE = {"PNG", "JPEG"}

# sRGB primaries, D65 white
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def load_image(path) -> np.ndarray:
    """Decode a PNG or JPEG into an ``(H, W, 3) uint8`` RGB array.

    Alpha is dropped and gray sources are replicated to three channels.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path}: no such file")
    try:
        with Image.open(path) as im:
            if im.format not in _READABLE:
                raise UnsupportedFormat(f"{path}: unsupported format {im.format}")
            im.load()
            rgb = im.convert("RGB")
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{path}: not a recognised image") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return np.asarray(rgb, dtype=np.uint8).copy()


def save_image(path, img: np.ndarray, fmt: str | None = None) -> None:
    """Write an RGB array. PNG unless the extension (or ``fmt``) says JPEG."""
    path = os.fspath(path)
    if fmt is None:
        ext = os.path.splitext(path)[1].lower()
        fmt = "JPEG" if ext in (".jpg", ".jpeg") else "PNG"
    im = Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8), mode="RGB")
    if fmt.upper() == "JPEG":
        im.save(path, format="JPEG", quality=95)
    else:
        im.save(path, format="PNG")


def save_mask(path, mask: np.ndarray) -> None:
    """Write a boolean mask as an 8-bit single channel PNG (255 = shadow)."""
    data = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(os.fspath(path), format="PNG")


def load_mask(path) -> np.ndarray:
    """Read a mask image and binarize it at > 127."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path}: no such file")
    try:
        with Image.open(path) as im:
            gray = np.asarray(im.convert("L"))
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{path}: not a recognised image") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return gray > 127


def srgb_to_linear(rgb: np.ndarray) -> np.ndarray:
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t: np.ndarray) -> np.ndarray:
    delta = 6.0 / 29.0
    return np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """sRGB (8-bit) to CIELAB under D65."""
    lin = srgb_to_linear(img)
    xyz = lin @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    lab = np.stack([L, a, b], axis=-1)
    # black is exactly the origin; clip tiny negative L from the linear branch
    lab[..., 0] = np.clip(lab[..., 0], 0.0, 100.0)
    return lab


def rgb_to_gray(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half up, as uint8."""
    rgb = np.asarray(img, dtype=np.int64)
    weighted = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return np.clip((weighted + 500) // 1000, 0, 255).astype(np.uint8)


def otsu_threshold(gray: np.ndarray) -> int:
    """Level ``t`` maximizing between-class variance with the dark class ``<= t``.

    The comparison is done in exact integer arithmetic so ties resolve to the
    lowest level deterministically. A constant image returns its own level.
    """
    gray = np.asarray(gray)
    if gray.size == 0:
        raise ValueError("otsu_threshold needs at least one pixel")
    hist = np.bincount(gray.ravel().astype(np.int64), minlength=256)[:256]
    levels = np.flatnonzero(hist)
    if len(levels) == 1:
        return int(levels[0])

    counts = [int(v) for v in hist]
    n_total = sum(counts)
    s_total = sum(i * c for i, c in enumerate(counts))
    # between-class variance is proportional to (s0*n1 - s1*n0)^2 / (n0*n1)
    best_num, best_den, best_t = -1, 1, 0
    n0 = s0 = 0
    for t in range(256):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = n_total - n0
        if n0 == 0 or n1 == 0:
            num, den = 0, 1
        else:
            s1 = s_total - s0
            num = (s0 * n1 - s1 * n0) ** 2
            den = n0 * n1
        if num * best_den > best_num * den:
            best_num, best_den, best_t = num, den, t
    return best_t
