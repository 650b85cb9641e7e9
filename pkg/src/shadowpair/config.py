"""Flat ``key=value`` view of ``DetectionConfig`` for config files, CLI flags and overrides."""
from __future__ import annotations

import dataclasses
import os

from .classify import ClassifierConfig
from .detect import DetectionConfig

# key -> (section, field, parser); section None means DetectionConfig itself
KEYS = {
    "coarse_sigma": (None, "coarse_sigma", float),
    "fine_sigma": (None, "fine_sigma", float),
    "iterations": (None, "iterations", int),
    "shadow_fraction": (None, "shadow_fraction", float),
    "gray_limit": (None, "gray_limit", str),
    "color_scale": (None, "color_scale", float),
    "max_dist_ratio": (None, "max_dist_ratio", float),
    "texton_k": (None, "texton_k", int),
    "seed": (None, "seed", int),
    "angle_max_deg": ("classifier", "angle_max_deg", float),
    "ratio_min": ("classifier", "ratio_min", float),
    "texture_skip_ratio": ("classifier", "texture_skip_ratio", float),
    "emd_max": ("classifier", "emd_max", float),
    "lum_bin_width": ("classifier", "lum_bin_width", float),
    "peak_prominence": ("classifier", "peak_prominence", float),
}


class ConfigError(ValueError):
    pass


def _parse_gray_limit(value: str):
    """``otsu`` | ``fixed`` | ``fixed:<level>`` -> (mode, level or None)."""
    parts = value.strip().split(":")
    if parts[0] == "otsu" and len(parts) == 1:
        return "otsu", None
    if parts[0] == "fixed" and len(parts) in (1, 2):
        return "fixed", int(parts[1]) if len(parts) == 2 else None
    raise ConfigError(f"bad gray_limit {value!r}; expected otsu, fixed or fixed:<level>")


def apply(cfg: DetectionConfig, settings: dict) -> DetectionConfig:
    """Return ``cfg`` with flat ``settings`` applied (values may be strings)."""
    top, clf = {}, {}
    for key, raw in settings.items():
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        section, name, parse = KEYS[key]
        if key == "gray_limit":
            mode, level = _parse_gray_limit(str(raw))
            top["gray_limit"] = mode
            if level is not None:
                top["gray_limit_value"] = level
            continue
        try:
            value = parse(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        (clf if section == "classifier" else top)[name] = value
    try:
        if clf:
            top["classifier"] = dataclasses.replace(cfg.classifier, **clf)
        return dataclasses.replace(cfg, **top)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def to_flat(cfg: DetectionConfig) -> dict:
    """Inverse of ``apply``: the effective configuration as flat keys."""
    out = {}
    for key, (section, name, _) in KEYS.items():
        obj = cfg.classifier if section == "classifier" else cfg
        out[key] = getattr(obj, name)
    out["gray_limit"] = "otsu" if cfg.gray_limit == "otsu" else f"fixed:{cfg.gray_limit_value}"
    return out


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    settings = {}
    with open(os.fspath(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            settings[key] = value
    return settings


def parse_override(text: str):
    """``<glob>=<key>:<value>`` (e.g. ``*oirds*=gray_limit:fixed:89``) -> (glob, {key: value})."""
    if "=" not in text:
        raise ConfigError(f"bad override {text!r}; expected <pattern>=<key>:<value>")
    pattern, setting = text.split("=", 1)
    if ":" not in setting:
        raise ConfigError(f"bad override {text!r}; expected <pattern>=<key>:<value>")
    key, value = setting.split(":", 1)
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r} in override")
    return pattern, {key: value}


__all__ = ["KEYS", "ConfigError", "apply", "to_flat", "read_config_file", "parse_override",
           "DetectionConfig", "ClassifierConfig"]
