"""``shadowpair`` command-line front end."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import config as cfgmod
from .detect import DetectionConfig, detect_shadows
from .errors import ShadowPairError
from .evalbench import run_dataset
from .quickshift import quickshift_segment, segment_means
from .raster import load_image, save_image, save_mask
from .relight import relight_coefficients, remove_shadows

log = logging.getLogger("shadowpair")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _config_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS,
                   help="key=value settings file; inline flags take precedence")
    g.add_argument("--jobs", type=int, metavar="N", default=argparse.SUPPRESS,
                   help="worker cap (default 1)")
    for key, (_, _, parse) in cfgmod.KEYS.items():
        kind = str if key == "gray_limit" else parse
        g.add_argument("--" + key.replace("_", "-"), dest=key, type=kind, default=argparse.SUPPRESS,
                       metavar="otsu|fixed:N" if key == "gray_limit" else kind.__name__.upper())
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _config_options()
    parser = _Parser(prog="shadowpair", description="Single-image shadow detection and removal.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", parents=[common], help="write a shadow mask")
    p.add_argument("image")
    p.add_argument("--mask-out", required=True)
    p.add_argument("--links-out", help="JSON sidecar with the pair links")

    p = sub.add_parser("remove", parents=[common], help="detect, then relight shadows")
    p.add_argument("image")
    p.add_argument("--out", required=True)
    p.add_argument("--mask-out")

    p = sub.add_parser("eval", parents=[common], help="score a directory against truth masks")
    p.add_argument("--images", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--override", action="append", default=[], metavar="PATTERN=KEY:VALUE",
                   help="per-file setting for names matching a glob, e.g. '*oirds*=gray_limit:fixed:89'")
    p.add_argument("--timings", action="store_true",
                   help="include per-image wall time (makes reports differ run to run)")

    p = sub.add_parser("segment", parents=[common], help="write a mean-color segmentation image")
    p.add_argument("image")
    p.add_argument("--sigma", type=float, default=None, help="kernel width (default: coarse sigma)")
    p.add_argument("--out", required=True)
    return parser


def resolve_config(args: argparse.Namespace) -> DetectionConfig:
    """Defaults, then the config file, then inline flags."""
    cfg = DetectionConfig()
    path = getattr(args, "config", None)
    if path:
        cfg = cfgmod.apply(cfg, cfgmod.read_config_file(path))
    inline = {k: getattr(args, k) for k in cfgmod.KEYS if hasattr(args, k)}
    return cfgmod.apply(cfg, inline)


def _links_json(det) -> str:
    links = []
    for (s, n), v in sorted(det.links.links.items()):
        links.append({"shadow": s, "nonshadow": n, "angle_deg": v.angle_deg, "ratio_t": v.ratio_t,
                      "emd": v.emd_value, "texture_skipped": v.texture_skipped,
                      "initial": (s, n) in det.initial_links.links})
    doc = {"segment_count": det.segments.segment_count, "gray_limit": det.gray_limit,
           "shadow_set": sorted(det.links.shadow_set), "nonshadow_set": sorted(det.links.nonshadow_set),
           "links": links}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _run(args, cfg: DetectionConfig) -> int:
    jobs = max(1, getattr(args, "jobs", 1))
    if args.command == "detect":
        det = detect_shadows(load_image(args.image), cfg, jobs=jobs)
        save_mask(args.mask_out, det.mask)
        if args.links_out:
            _write_text(args.links_out, _links_json(det))
        log.info("%d shadow pixels, %d links", int(det.mask.sum()), len(det.links))
        return 0
    if args.command == "remove":
        img = load_image(args.image)
        det = detect_shadows(img, cfg, jobs=jobs)
        out = remove_shadows(img, det.mask, det.segments, relight_coefficients(det.links, det.stats))
        save_image(args.out, out)
        if args.mask_out:
            save_mask(args.mask_out, det.mask)
        return 0
    if args.command == "segment":
        img = load_image(args.image)
        sigma = cfg.coarse_sigma if args.sigma is None else args.sigma
        seg = quickshift_segment(img, cfg.quickshift(sigma), jobs=jobs)
        save_image(args.out, segment_means(img, seg))
        log.info("%d segments", seg.segment_count)
        return 0
    # eval
    overrides = [cfgmod.parse_override(o) for o in args.override]
    if not os.path.isdir(args.images):
        raise FileNotFoundError(f"no images found: {args.images} is not a directory")
    report = run_dataset(args.images, args.truth, cfg, overrides, jobs=jobs)
    _write_text(args.report, report.to_json(timings=args.timings))
    pooled = report.pooled.as_dict()
    print(f"{len(report.per_image)} images, {len(report.failed)} failed; pooled BER "
          f"{'undefined' if pooled['ber'] is None else format(pooled['ber'], '.3f')}")
    return 1 if report.failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (cfgmod.ConfigError, OSError) as exc:
        parser.error(str(exc))
    try:
        return _run(args, cfg)
    except (ShadowPairError, OSError, ValueError) as exc:
        print(f"shadowpair: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
