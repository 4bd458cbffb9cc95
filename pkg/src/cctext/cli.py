"""Command-line entry point: ``cctext {detect,train,evaluate,bench,gen-corpus}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, corpus, imgproc, pipeline, svm
from .config import MergeConfig, PipelineConfig, load_config
from .errors import CctextError, DataError, InvariantError

log = logging.getLogger("cctext")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_SCALES = (0.5, 1.0, 2.0, 4.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _scales(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("scales must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file (all keys optional)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--workers", metavar="N", type=_positive_int, help="worker processes for batch work")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")

    detecting = argparse.ArgumentParser(add_help=False)
    detecting.add_argument("--model", metavar="PATH", help="model file (default: the bundled model)")
    detecting.add_argument("--merge-mst", action="store_true", help="merge nearby regions into words")

    p = _Parser(prog="cctext", description="Connected-component scene-text detector.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("detect", parents=[common, detecting], help="detect text in images")
    d.add_argument("images", nargs="+", metavar="IMAGE")
    d.add_argument("--annotate", action="store_true", help="also write <stem>_annotated.png")
    d.add_argument("--dump-edges", action="store_true", help="write p_zc, confidence and edge maps as PNG")

    t = sub.add_parser("train", parents=[common], help="train a model from text/ and nontext/ crops")
    t.add_argument("corpus", metavar="CORPUS_DIR", help="crop directory, or a gen-corpus output root")
    t.add_argument("--seed", type=int, metavar="N", help="cross-validation fold seed")

    e = sub.add_parser("evaluate", parents=[common, detecting], help="score detections against ground truth")
    e.add_argument("dataset", metavar="DATASET_DIR", help="images + gt_<stem>.txt, or a gen-corpus output root")
    e.add_argument("--oracle-detector", action="store_true", help="use the ground truth as detections")

    b = sub.add_parser("bench", parents=[common, detecting], help="time the pipeline at several resolutions")
    b.add_argument("images", nargs="+", metavar="IMAGE",
                   help="one image (rescaled by --scales) or at least four graded images")
    b.add_argument("--scales", type=_scales, default=DEFAULT_SCALES, metavar="S1,S2,...",
                   help="linear scale factors for a single input image (default: 0.5,1,2,4)")
    b.add_argument("--repeats", type=_positive_int, default=3, metavar="N")

    g = sub.add_parser("gen-corpus", parents=[common], help="write a seeded synthetic corpus")
    g.add_argument("--seed", type=int, default=0, metavar="N")
    g.add_argument("--images", type=_positive_int, default=100, metavar="N", help="dataset size")
    g.add_argument("--crops-per-class", type=int, metavar="N", help="cap on text and non-text crops")
    return p


# --- helpers ------------------------------------------------------------------

def _effective_config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.workers is not None:
        changes["workers"] = args.workers
    if getattr(args, "merge_mst", False):
        changes["merge"] = MergeConfig(True, cfg.merge.link_distance_factor)
    if getattr(args, "model", None):
        changes["model_path"] = args.model
    if getattr(args, "seed", None) is not None and args.command == "train":
        changes["svm"] = {**cfg.to_dict()["svm"], "seed": args.seed}
    return cfg.replace(**changes) if changes else cfg


def _out_dir(args, default: str = ".") -> Path:
    out = Path(args.out or default)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def _echo_config(out: Path, cfg: PipelineConfig) -> None:
    _write(out / "config.json", cfg.to_json())


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _subdir_if_present(path: Path, name: str) -> Path:
    return path / name if (path / name).is_dir() else path


def _trained_at() -> str | None:
    # Wall-clock stamps would break byte-identical retraining; honour the
    # reproducible-builds convention instead.
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    try:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    except ValueError:
        raise DataError(f"SOURCE_DATE_EPOCH must be an integer, got {epoch!r}") from None


# --- commands -----------------------------------------------------------------

def cmd_detect(args) -> int:
    cfg = _effective_config(args)
    model = pipeline.resolve_model(cfg)
    out = _out_dir(args) if args.out else None
    if out is None and (args.annotate or args.dump_edges):
        raise UsageError("--annotate and --dump-edges need --out")
    if out:
        _echo_config(out, cfg)
    collected = {}
    for path in map(Path, args.images):
        res = pipeline.detect(path, cfg, model, keep_edges=args.dump_edges)
        log.info("%s: %d detections from %d candidates in %.0f ms",
                 res.image_id, len(res.detections), len(res.candidates), res.total_ms)
        if out is None:
            collected[res.image_id] = res.detections_json()
            continue
        _write(out / f"{res.image_id}.json", _dumps(res.detections_json()))
        _write(out / f"{res.image_id}_timings.json", _dumps(res.timings))
        if args.annotate:
            boxes = [(r.x, r.y, r.w, r.h) for r, _ in res.detections]
            imgproc.save_png(imgproc.annotate(imgproc.load_rgb(path), boxes), out / f"{res.image_id}_annotated.png")
        if args.dump_edges:
            em = res.edge_map
            imgproc.save_png(em.p_zc, out / f"{res.image_id}_pzc.png")
            imgproc.save_png(em.confidence, out / f"{res.image_id}_confidence.png")
            imgproc.save_png(em.edges.astype(np.float64), out / f"{res.image_id}_edges.png")
    if out is None:
        doc = next(iter(collected.values())) if len(collected) == 1 else collected
        sys.stdout.write(_dumps(doc))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _effective_config(args)
    crops = _subdir_if_present(Path(args.corpus), "crops")
    model = pipeline.train_from_corpus(crops, cfg, trained_at=_trained_at())
    out = _out_dir(args)
    _echo_config(out, cfg)
    svm.save_model(model, out / "model.json")
    meta = model.metadata
    print(f"model: {out / 'model.json'}  support vectors: {len(model.dual_coefs)}  "
          f"cv accuracy: {meta['cv_accuracy']:.3f}  explained variance: {meta['explained_variance_ratio']:.3f}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _effective_config(args)
    model = None if args.oracle_detector else pipeline.resolve_model(cfg)
    dataset = _subdir_if_present(Path(args.dataset), "dataset")
    report, _ = pipeline.evaluate_dataset(dataset, cfg, model, oracle=args.oracle_detector)
    table = report.to_table()
    if args.out:
        out = _out_dir(args)
        _echo_config(out, cfg)
        _write(out / "eval.json", report.to_json())
        _write(out / "eval.txt", table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _effective_config(args)
    model = pipeline.resolve_model(cfg)
    grays = [imgproc.load_gray(p) for p in args.images]
    if len(grays) == 1:
        grays = [pipeline.rescale(grays[0], s) for s in args.scales]
    if len(grays) < 4:
        raise UsageError("bench needs at least 4 resolution grades (pass one image with 4+ --scales)")
    rows = pipeline.bench(grays, cfg, model, repeats=args.repeats)
    csv = pipeline.bench_csv(rows)
    if args.out:
        out = _out_dir(args)
        _echo_config(out, cfg)
        _write(out / "bench.csv", csv)
    sys.stdout.write(csv)
    log.info("log-log slope: %.3f", pipeline.loglog_slope(rows))
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args, "corpus")
    _echo_config(out, cfg)
    counts = corpus.generate_corpus(out, args.images, seed=args.seed, crops_per_class=args.crops_per_class)
    print(f"{out}: {counts['images']} images, {counts['text_crops']} text crops, "
          f"{counts['nontext_crops']} non-text crops")
    return EXIT_OK


COMMANDS = {
    "detect": cmd_detect,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "gen-corpus": cmd_gen_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cctext: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cctext: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"cctext: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except CctextError as exc:
        print(f"cctext: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
