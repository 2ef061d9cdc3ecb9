"""Command-line front end.

Exit codes: 0 success, 1 invalid arguments or parameters, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import datasetio, lossfn, segmetrics
from .augment import AugmentConfig, augment_pipeline
from .baseline import baseline_segment
from .config import build_scene_config, load_config
from .errors import DatasetIOError, ParameterError
from .scenecomp import CONDITIONS, SceneConfig, derive_seed, generate_dataset

logger = logging.getLogger("pavesynth")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
_OWNED = ("images", "masks", "manifest.jsonl", "header.json")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _prepare_out(path: Path, force: bool) -> None:
    """Refuse to write into a populated dataset directory unless forced."""
    existing = [name for name in _OWNED if (path / name).exists()]
    if existing and not force:
        raise ParameterError(f"{path} already holds a dataset ({', '.join(existing)}); pass --force")
    for name in existing:
        target = path / name
        if target.is_dir():
            shutil.rmtree(target)
        else:
            target.unlink()
    path.mkdir(parents=True, exist_ok=True)


def _configs(args) -> tuple[SceneConfig, AugmentConfig]:
    if getattr(args, "config", None):
        try:
            return load_config(args.config)
        except OSError as exc:
            raise DatasetIOError(f"cannot read config {args.config}: {exc}") from exc
    return build_scene_config(), AugmentConfig()


def cmd_generate(args) -> int:
    if args.preset and args.config:
        raise ParameterError("--preset and --config are mutually exclusive; set preset in the file")
    scene, _ = _configs(args)
    if args.preset:
        scene = build_scene_config({"preset": args.preset})
    if args.condition:
        scene = scene.with_condition(args.condition)
    out = Path(args.out)
    _prepare_out(out, args.force)
    manifest = generate_dataset(scene, args.count, args.seed, out, workers=args.workers)
    fractions = [e.meta["crack_pixel_fraction"] for e in manifest.entries]
    logger.info(
        "wrote %d samples to %s (mean crack fraction %.4f%%)",
        len(manifest), out, 100 * sum(fractions) / len(fractions),
    )
    return EXIT_OK


def cmd_augment(args) -> int:
    _, aug = _configs(args)
    src = datasetio.read_manifest(args.input)
    out = Path(args.out)
    _prepare_out(out, args.force)
    (out / "images").mkdir()
    (out / "masks").mkdir()
    entries = []
    for index, entry in enumerate(src.entries):
        sample = src.load_sample(entry)
        result = augment_pipeline(sample, aug, derive_seed(args.seed, index))
        image_rel = f"images/{entry.id}.png"
        mask_rel = f"masks/{entry.id}.png"
        datasetio.save_image(out / image_rel, result.image)
        datasetio.save_mask(out / mask_rel, result.mask)
        meta = dict(entry.meta, augmented_from=str(src.resolve(entry.image_path)))
        entries.append(replace(entry, image_path=image_rel, mask_path=mask_rel, meta=meta))
    header = dict(src.header, augment_seed=args.seed)
    datasetio.write_manifest(datasetio.Manifest(entries, header), out)
    logger.info("augmented %d samples into %s", len(entries), out)
    return EXIT_OK


def cmd_split(args) -> int:
    manifest = datasetio.read_manifest(args.manifest)
    manifest = datasetio.split(manifest, args.fraction, args.seed)
    datasetio.write_manifest(manifest, manifest.root)
    n_train = sum(e.split == "train" for e in manifest.entries)
    logger.info("%d train / %d val", n_train, len(manifest) - n_train)
    return EXIT_OK


def cmd_import(args) -> int:
    out = Path(args.out)
    manifest = datasetio.import_external(args.images, args.masks, source=args.source)
    if (out / "manifest.jsonl").exists() and not args.force:
        raise ParameterError(f"{out} already has a manifest; pass --force")
    datasetio.write_manifest(manifest, out)
    logger.info("imported %d pairs into %s", len(manifest), out)
    return EXIT_OK


def _predict_one(image_path, out_path, window, k):
    datasetio.save_probability(out_path, baseline_segment(datasetio.load_image(image_path), window, k))


def cmd_baseline(args) -> int:
    src = datasetio.read_manifest(args.input)
    out = Path(args.out)
    if (out / "manifest.jsonl").exists() and not args.force:
        raise ParameterError(f"{out} already holds predictions; pass --force")
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(src.resolve(e.image_path), out / f"{e.id}.png", args.window, args.k) for e in src.entries]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for f in [pool.submit(_predict_one, *job) for job in jobs]:
                f.result()
    else:
        for job in jobs:
            _predict_one(*job)
    # the copy points back at the source masks so `evaluate` can use it directly
    entries = [
        replace(e, image_path=str(src.resolve(e.image_path).resolve()),
                mask_path=str(src.resolve(e.mask_path).resolve()))
        for e in src.entries
    ]
    header = dict(src.header, predictions="baseline", window_px=args.window, k=args.k)
    datasetio.write_manifest(datasetio.Manifest(entries, header), out)
    logger.info("wrote %d probability maps to %s", len(entries), out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    manifest = datasetio.read_manifest(args.manifest)
    if args.split != "all":
        manifest = datasetio.Manifest(
            [e for e in manifest.entries if e.split == args.split], manifest.header, manifest.root
        )
    grid = segmetrics.default_grid(args.grid_steps)
    report = segmetrics.evaluate(args.pred_dir, manifest, args.threshold, grid)
    if args.report:
        segmetrics.write_report(report, args.report)
    if args.json:
        print(report.to_json(indent=2))
    else:
        print(report.table())
    return EXIT_OK


def cmd_loss(args) -> int:
    p = datasetio.load_probability(args.pred)
    r = datasetio.load_mask(args.mask)
    result = {
        "bce": lossfn.bce(p, r).value,
        "generalized_dice": lossfn.generalized_dice(p, r).value,
        "combined": lossfn.combined_loss(p, r, args.dice_weight, args.bce_weight).value,
        "dice_weight": args.dice_weight,
        "bce_weight": args.bce_weight,
    }
    print(json.dumps(result, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pavesynth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="render a synthetic dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--condition", choices=CONDITIONS)
    p.add_argument("--preset", choices=("v1", "v2"))
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("augment", help="write an augmented copy of a dataset")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("split", help="assign train/val splits in place")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("import", help="build a manifest for an external dataset")
    p.add_argument("--images", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("baseline", help="predict with the classical baseline")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=31)
    p.add_argument("--k", type=float, default=4.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="score probability maps")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--grid-steps", type=int, default=99)
    p.add_argument("--split", choices=("train", "val", "all"), default="all")
    p.add_argument("--report")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of the table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("loss", help="loss values of one prediction as JSON")
    p.add_argument("--pred", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--dice-weight", type=float, default=1.0)
    p.add_argument("--bce-weight", type=float, default=1.0)
    p.set_defaults(func=cmd_loss)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ParameterError as exc:
        logger.error("%s", exc)
        return EXIT_INVALID
    except (DatasetIOError, OSError) as exc:
        logger.error("%s", exc)
        if isinstance(exc, DatasetIOError) and exc.completed:
            logger.error("completed indices: %s", exc.completed)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
