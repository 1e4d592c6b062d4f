"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from PIL import Image, ImageDraw

from . import __version__
from .bench import bench_presets
from .config import PRESETS, AugmentConfig, ConfigError, load_config
from .dataset_io import (
    LabelParseError,
    dataset_stats,
    load_dataset,
    read_manifest,
    subsample_manifest,
    write_manifest,
)
from .evaluation import evaluate, load_label_dir, load_prediction_dir
from .fog import FogParams, fog_image
from .imaging import encode_png
from .pipeline import AugmentedDataset, materialize

log = logging.getLogger("uavaug")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_epochs(spec: str) -> List[int]:
    """``"0,2,5-7"`` -> ``[0, 2, 5, 6, 7]``."""
    out = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            a = int(lo)
            b = int(hi) if sep else a
        except ValueError:
            raise UsageError(f"bad epoch list {spec!r}") from None
        if a < 0 or b < a:
            raise UsageError(f"bad epoch range {part!r}")
        out.update(range(a, b + 1))
    if not out:
        raise UsageError("empty epoch list")
    return sorted(out)


def parse_fog_args(args) -> FogParams:
    try:
        airlight = tuple(float(v) for v in args.airlight.split(","))
    except ValueError:
        raise UsageError(f"bad --airlight {args.airlight!r}") from None
    if len(airlight) == 1:
        airlight = airlight * 3
    mode, _, rest = args.depth.partition(":")
    kwargs = {"beta": args.beta, "airlight": airlight, "depth_mode": mode, "d_max": args.d_max}
    try:
        if mode == "constant":
            kwargs["d0"] = float(rest) if rest else 1.0
        elif mode == "gradient":
            near, far = (float(v) for v in rest.split(","))
            kwargs.update(d_near=near, d_far=far)
        elif mode == "map":
            if not rest:
                raise ValueError
            kwargs["depth_map"] = rest
        else:
            raise UsageError(f"unknown depth mode {mode!r}")
        return FogParams(**kwargs)
    except ValueError as exc:
        raise UsageError(f"bad fog parameters: {exc or args.depth}") from None


def _config(args, strategy: Optional[str] = None) -> AugmentConfig:
    overrides = {}
    if getattr(args, "size", None):
        overrides["size"] = args.size
    return load_config(args.config, strategy=strategy, **overrides)


def _dataset(args):
    return load_dataset(args.data, images=args.images, labels=args.labels, strict=args.strict_labels)


def cmd_augment(args) -> int:
    cfg = _config(args, args.strategy)
    epochs = parse_epochs(args.epochs)
    if max(epochs) >= cfg.epochs:
        raise UsageError(f"epoch {max(epochs)} outside the configured {cfg.epochs} epochs")
    ds = _dataset(args)
    out = materialize(ds, cfg, epochs, args.seed, args.out, jobs=args.jobs)
    print(f"wrote {len(out)} samples for {len(epochs)} epoch(s) to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    gt = load_label_dir(args.gt, strict=args.strict_labels)
    preds = load_prediction_dir(args.pred, fmt=args.pred_format)
    report = evaluate(preds, gt, iou_thresh=args.iou, interpolation=args.interp, conf=args.conf)
    sys.stdout.write(report.to_text())
    if args.json:
        Path(args.json).write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK


def cmd_fog(args) -> int:
    params = parse_fog_args(args)
    ds = _dataset(args)
    out = Path(args.out)
    for i, entry in enumerate(ds.entries):
        sample = ds.load(i)
        img_path = out / args.images / f"{entry.source_id}.png"
        img_path.parent.mkdir(parents=True, exist_ok=True)
        img_path.write_bytes(encode_png(fog_image(sample.image, params)))
        if entry.label_path is not None:
            lbl = out / args.labels / f"{entry.source_id}.txt"
            lbl.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(entry.label_path, lbl)
    print(f"wrote {len(ds)} foggy images to {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    presets = [p.strip() for p in args.presets.split(",") if p.strip()]
    bad = [p for p in presets if p not in PRESETS]
    if bad or not presets:
        raise UsageError(f"unknown preset(s): {', '.join(bad) or '(none)'}")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    configs = [_config(args, p) for p in presets]
    ds = _dataset(args)
    results = bench_presets(ds, configs, args.n, args.seed, write_dir=args.write)
    for r in results:
        print(r.to_text())
    return EXIT_OK


def cmd_stats(args) -> int:
    stats = dataset_stats(_dataset(args))
    sys.stdout.write(stats.to_text())
    return EXIT_OK


def cmd_subsample(args) -> int:
    if not args.interval > 0:
        raise UsageError("--interval must be > 0")
    frames = read_manifest(Path(args.manifest).read_text(encoding="utf-8"))
    kept = subsample_manifest(frames, args.interval)
    text = write_manifest(kept)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    log.info("kept %d of %d frames", len(kept), len(frames))
    return EXIT_OK


def cmd_preview(args) -> int:
    ds = _dataset(args)
    source = ds
    if args.strategy:
        source = AugmentedDataset(ds, _config(args, args.strategy), args.seed, args.epoch)
    out = Path(args.out)
    count = min(len(ds), args.limit)
    for i in range(count):
        s = source.load(i)
        im = Image.fromarray(s.image)
        draw = ImageDraw.Draw(im)
        for ann in s.annotations:
            draw.rectangle(ann.box.as_tuple(), outline=(255, 0, 0), width=2)
            draw.text((ann.box.x_min, max(0, ann.box.y_min - 10)), str(ann.class_id), fill=(255, 0, 0))
        path = out / f"{s.source_id}.png"
        path.parent.mkdir(parents=True, exist_ok=True)
        im.save(path)
    print(f"wrote {count} preview image(s) to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--config", help="config file of 'key = value' lines")
    common.add_argument("--jobs", type=int, default=1, help="worker threads")
    common.add_argument(
        "--strict-labels",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="abort on malformed label lines (default) or skip them",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", required=True, help="dataset root")
    data.add_argument("--images", default="images", help="image dir under the root")
    data.add_argument("--labels", default="labels", help="label dir under the root")

    parser = _Parser(prog="uavaug", description="Detection data augmentation and evaluation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("augment", parents=[common, data], help="materialize an augmented dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", choices=PRESETS)
    p.add_argument("--epochs", default="0", help="epochs to emit, e.g. '0' or '0-9,90-99'")
    p.add_argument("--size", type=int, help="output size S")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("eval", parents=[common], help="score predictions (mAP@50, precision)")
    p.add_argument("--gt", required=True, help="ground-truth label dir")
    p.add_argument("--pred", required=True, help="prediction dir ('class conf cx cy w h')")
    p.add_argument("--pred-format", choices=("pred", "label"), default="pred")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--interp", choices=("all", "101"), default="all")
    p.add_argument("--conf", type=float, help="fixed confidence threshold instead of best F1")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fog", parents=[common, data], help="write a foggy copy of a dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--airlight", default="255,255,255", help="R,G,B")
    p.add_argument("--depth", default="constant:1", help="constant:<d0> | gradient:<near,far> | map:<path>")
    p.add_argument("--d-max", type=float, default=1.0, help="depth at map value 255")
    p.set_defaults(func=cmd_fog)

    p = sub.add_parser("bench", parents=[common, data], help="preprocessing throughput per preset")
    p.add_argument("--presets", default=",".join(PRESETS))
    p.add_argument("--n", type=int, default=100, help="samples per preset")
    p.add_argument("--size", type=int)
    p.add_argument("--write", help="also write outputs under this dir")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", parents=[common, data], help="dataset box statistics")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("subsample", parents=[common], help="time-subsample a frame manifest")
    p.add_argument("--manifest", required=True, help="'path,timestamp' lines")
    p.add_argument("--interval", type=float, default=0.5, help="seconds (default 0.5)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_subsample)

    p = sub.add_parser("preview", parents=[common, data], help="write images with boxes drawn")
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", choices=PRESETS, help="preview augmented samples")
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--limit", type=int, default=16)
    p.add_argument("--size", type=int)
    p.set_defaults(func=cmd_preview)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"uavaug: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LabelParseError, ValueError) as exc:
        print(f"uavaug: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"uavaug: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
