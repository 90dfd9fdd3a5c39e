"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 validation failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import errors
from .edgegen import default_sigma, make_targets, panoptic_to_edges
from .fusion import FusionParams, fuse_panoptic, semantic_from_scores
from .gradcheck import run_gradcheck
from .labels import CategoryTaxonomy, semantic_of, validate_map
from .metrics import PQReport, edge_pq
from .synth import SynthParams, generate_scene
from .tensor_io import labels_to_tensor, read_tensor, write_pgm16, write_tensor, write_visualization

log = logging.getLogger("panedge")

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2

_USAGE_ERRORS = (
    OSError, errors.TensorFormatError, errors.ShapeMismatch, errors.InvalidThreshold,
    errors.InvalidTaxonomy, errors.NonPositiveSigma, errors.InfeasibleParams,
    errors.DimensionMismatch, errors.NonPositiveTemperature,
)


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


def _taxonomy(args) -> CategoryTaxonomy:
    if args.taxonomy:
        tax = CategoryTaxonomy.load(args.taxonomy)
    else:
        tax = CategoryTaxonomy.cityscapes()
    if args.stride is not None:
        tax = CategoryTaxonomy(tax.num_categories, tax.thing_categories, tax.stuff_categories,
                               args.stride, tax.names)
    return tax


def _read_labels(path) -> np.ndarray:
    a = read_tensor(path)
    if a.ndim != 2 or a.dtype.kind != "u":
        raise UsageError(f"{path}: expected a 2-D integer label tensor, got {a.ndim}-D {a.dtype}")
    return a.astype(np.int64)


def _require_valid(labels, tax, what):
    problems = validate_map(labels, tax)
    if problems:
        raise ValidationFailure(f"{what}: {problems[0]}")


def _write_labels(path, labels, pgm=None, visualize=None):
    write_tensor(path, labels_to_tensor(labels))
    if pgm:
        write_pgm16(pgm, labels)
    if visualize:
        write_visualization(visualize, labels)


def cmd_gt_gen(args):
    tax = _taxonomy(args)
    seg = _read_labels(args.input)
    try:
        edges = panoptic_to_edges(seg, args.radius, tax)
    except errors.InvalidSegmentLabel as exc:
        raise ValidationFailure(f"{args.input}: {exc}") from exc
    _require_valid(edges, tax, "edge map")
    _write_labels(args.out, edges, args.out_pgm)
    log.info("wrote %s (%d edge pixels)", args.out, int(np.count_nonzero(edges)))


def cmd_targets(args):
    tax = _taxonomy(args)
    if args.sigma is not None and not args.sigma > 0:
        raise UsageError(f"--sigma must be positive, got {args.sigma}")
    edges = _read_labels(args.edges)
    _require_valid(edges, tax, args.edges)
    sigma = args.sigma if args.sigma is not None else default_sigma(*edges.shape)
    heatmap, offsets = make_targets(edges, tax, sigma)
    write_tensor(args.out_heatmap, heatmap.astype(np.float32))
    write_tensor(args.out_offsets, offsets.astype(np.float32))


def _read_semantic(path, temperature, tax):
    a = read_tensor(path)
    if a.ndim == 3 and a.dtype.kind == "f":
        if a.shape[0] != tax.num_categories + 1:
            raise UsageError(f"{path}: expected {tax.num_categories + 1} score channels, got {a.shape[0]}")
        return semantic_from_scores(a.astype(np.float64), temperature)
    if a.ndim == 2 and a.dtype.kind == "u":
        return a.astype(np.int64)
    raise UsageError(f"{path}: expected a category map or (K+1) x H x W scores, got {a.shape} {a.dtype}")


def cmd_fuse(args):
    tax = _taxonomy(args)
    semantic = _read_semantic(args.semantic, args.temperature, tax)
    heatmap = read_tensor(args.heatmap).astype(np.float64)
    if heatmap.ndim == 3 and heatmap.shape[0] == 1:
        heatmap = heatmap[0]
    offsets = read_tensor(args.offsets).astype(np.float64)
    if heatmap.shape != semantic.shape or offsets.shape != (2,) + semantic.shape:
        raise UsageError(
            f"shape mismatch: semantic {semantic.shape}, heatmap {heatmap.shape}, offsets {offsets.shape}")
    if semantic.size and semantic.max() > tax.num_categories:
        r, c = np.unravel_index(int(np.argmax(semantic > tax.num_categories)), semantic.shape)
        raise ValidationFailure(f"semantic category {int(semantic[r, c])} at ({r}, {c}) exceeds {tax.num_categories}")
    params = FusionParams(tax, args.center_threshold, args.nms_window, args.max_instances)
    fused = fuse_panoptic(semantic, heatmap, offsets, params)
    _require_valid(fused, tax, "fused map")
    _write_labels(args.out, fused, args.out_pgm, args.visualize)


def _pairs(pred, gt):
    pred, gt = Path(pred), Path(gt)
    if pred.is_dir() != gt.is_dir():
        raise UsageError("--pred and --gt must both be files or both be directories")
    if not pred.is_dir():
        return [(pred, gt)]
    names = sorted(p.name for p in gt.glob("*.tensor"))
    missing = [n for n in names if not (pred / n).exists()]
    if missing:
        raise UsageError(f"no prediction for {missing[:5]}")
    return [(pred / n, gt / n) for n in names]


def cmd_eval(args):
    tax = _taxonomy(args)
    if not 0 < args.threshold <= 1:
        raise UsageError(f"--threshold must lie in (0, 1], got {args.threshold}")
    pairs = _pairs(args.pred, args.gt)

    def one(pair):
        p, g = (_read_labels(x) for x in pair)
        if p.shape != g.shape:
            raise UsageError(f"{pair[0]} and {pair[1]} differ in shape: {p.shape} vs {g.shape}")
        try:
            rep = edge_pq(p, g, tax, args.threshold, args.dilation)
        except errors.TaxonomyMismatch as exc:
            raise ValidationFailure(f"{pair}: {exc}") from exc
        if args.visualize:
            out = Path(args.visualize)
            write_visualization(out / f"{pair[0].stem}_pred.png", p)
            write_visualization(out / f"{pair[1].stem}_gt.png", g)
        return rep

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(one, pairs))
    total = PQReport(tax, args.threshold)
    for rep in reports:
        total.merge(rep)
    doc = total.to_dict()
    doc["num_images"] = len(pairs)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    q = total.overall
    print(f"pq={q.pq:.6f} sq={q.sq:.6f} rq={q.rq:.6f} categories={q.n} images={len(pairs)}")


def cmd_synth(args):
    tax = _taxonomy(args)
    params = SynthParams(args.height, args.width, args.max_instances, args.min_instance_size,
                         tuple(args.shapes.split(",")), tax, args.seed, args.radius, args.min_center_distance)
    seg = generate_scene(params)
    edges = panoptic_to_edges(seg, args.radius, tax)
    _require_valid(edges, tax, "generated edges")
    heatmap, offsets = make_targets(edges, tax, args.sigma)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(out / "seg.tensor", labels_to_tensor(seg))
    write_tensor(out / "edges.tensor", labels_to_tensor(edges))
    write_tensor(out / "semantic.tensor", semantic_of(edges, tax).astype(np.uint16))
    write_tensor(out / "heatmap.tensor", heatmap.astype(np.float32))
    write_tensor(out / "offsets.tensor", offsets.astype(np.float32))
    (out / "taxonomy.json").write_text(json.dumps(tax.to_dict(), indent=2, sort_keys=True) + "\n")


def cmd_gradcheck(args):
    if not args.tolerance > 0:
        raise UsageError(f"tolerance {args.tolerance} is unsatisfiable; it must be positive")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    results = run_gradcheck(args.trials, args.tolerance, args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: max relative error {r.max_error:.3e} "
              f"over {r.trials} trials (tolerance {r.tolerance:g})")
    if not all(r.passed for r in results):
        raise ValidationFailure("gradient check failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panedge", description="Panoptic edge toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--taxonomy", help="taxonomy JSON file (default: Cityscapes, 19 categories)")
    common.add_argument("--stride", type=int, help="override the instance-ID stride D")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gt-gen", parents=[common], help="panoptic segmentation -> panoptic edges")
    p.add_argument("--input", required=True)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--out-pgm", help="also write a 16-bit PGM")
    p.set_defaults(func=cmd_gt_gen)

    p = sub.add_parser("targets", parents=[common], help="center heatmap and offsets from GT edges")
    p.add_argument("--edges", required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--out-heatmap", required=True)
    p.add_argument("--out-offsets", required=True)
    p.set_defaults(func=cmd_targets)

    p = sub.add_parser("fuse", parents=[common], help="fuse semantic edges, heatmap and offsets")
    p.add_argument("--semantic", required=True, help="category map or (K+1) x H x W scores")
    p.add_argument("--heatmap", required=True)
    p.add_argument("--offsets", required=True)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--center-threshold", type=float, default=0.1)
    p.add_argument("--nms-window", type=int, default=7)
    p.add_argument("--max-instances", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--out-pgm")
    p.add_argument("--visualize", metavar="PNG", help="write a colour-coded label raster")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", parents=[common], help="edge PQ of predictions against ground truth")
    p.add_argument("--pred", required=True, help="tensor file or directory")
    p.add_argument("--gt", required=True, help="tensor file or directory")
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--dilation", type=int, default=0)
    p.add_argument("--report")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--visualize", metavar="DIR", help="write colour-coded label rasters here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic scene with its targets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--max-instances", type=int, default=8)
    p.add_argument("--min-instance-size", type=int, default=6)
    p.add_argument("--shapes", default="rectangle,ellipse")
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--min-center-distance", type=float, default=0.0)
    p.add_argument("--sigma", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gradcheck", help="verify analytic loss gradients")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except ValidationFailure as exc:
        print(f"panedge: validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (UsageError, *_USAGE_ERRORS) as exc:
        print(f"panedge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except errors.PanEdgeError as exc:
        print(f"panedge: validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
