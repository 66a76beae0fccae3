"""Command-line pipeline: gen -> pd -> featurize -> train -> eval/predict, plus pca, inverse, plot."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io as pio
from . import svg
from .datagen import KINDS, PAPER_DENSITIES, dataset_configs, generate
from .descriptor import GridSpec, fit_standardization, histogram, standardize
from .errors import ConfigurationError, ParameterError, PhdescError, ShapeError
from .filtration import Convention, build_rips
from .inverse import (ANGLE_BIN_WIDTH, BOND_BIN_WIDTH, HIGH_THRESHOLD, LOW_THRESHOLD, CycleReport,
                      assign_cycles, coefficient_map, geometry_histograms, select_regions)
from .model import DEFAULT_LAMBDA, fit_pca, fit_ridge, predict_many, rmse, train_test_split
from .persistence import reduce

log = logging.getLogger("phdesc")

DEFAULT_CUTOFF = 3.5


def _window(text):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like LO:HI, got {text!r}") from None
    return lo, hi


def _pmap(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# -- subcommands -------------------------------------------------------------

def cmd_gen(args):
    densities = tuple(float(x) for x in args.densities.split(",")) if args.densities else PAPER_DENSITIES
    kinds = tuple(args.kinds.split(","))
    for k in kinds:
        if k not in KINDS:
            raise ParameterError(f"unknown kind {k!r}")
    configs = dataset_configs(args.count, args.n_atoms, args.seed, kinds, densities)
    structures = _pmap(generate, configs, args.jobs)
    os.makedirs(args.out, exist_ok=True)
    pio.write_extxyz(os.path.join(args.out, "structures.xyz"), structures)
    pio.write_dataset_manifest(os.path.join(args.out, "manifest.csv"), structures)
    print(f"wrote {len(structures)} structures to {args.out}")
    return 0


def _diagram_task(task):
    structure, cutoff, convention = task
    return reduce(build_rips(structure, cutoff, convention), structure.id)


def _safe_name(sid, k):
    keep = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in sid)
    return f"{k:05d}-{keep}.csv" if keep else f"{k:05d}.csv"


def cmd_pd(args):
    structures = pio.read_extxyz(args.structures)
    convention = Convention.parse(args.convention)
    diagrams = _pmap(_diagram_task, [(s, args.cutoff, convention) for s in structures], args.jobs)
    os.makedirs(args.out, exist_ok=True)
    files = []
    for k, (s, d) in enumerate(zip(structures, diagrams)):
        name = _safe_name(s.id, k)
        pio.write_diagram_csv(os.path.join(args.out, name), d)
        files.append(name)
    pio.write_manifest(os.path.join(args.out, "index.csv"), [s.id for s in structures], [s.label for s in structures],
                       {"file": files, "convention": [convention.value] * len(files),
                        "cutoff": [repr(float(args.cutoff))] * len(files),
                        "density": [repr(float(s.info.get("density", s.density))) for s in structures]})
    print(f"wrote {len(diagrams)} diagrams to {args.out}")
    return 0


def _grid_spec(args):
    lo, hi = args.window
    return GridSpec(args.bins, lo, hi)


def cmd_featurize(args):
    rows = pio.read_manifest(os.path.join(args.diagrams, "index.csv"))
    spec = _grid_spec(args)
    hists = []
    for r in rows:
        d = pio.read_diagram_csv(os.path.join(args.diagrams, r["file"]), r["convention"], r["id"])
        hists.append(histogram(d, spec))
    labels = [float(r["label"]) if r["label"] else None for r in rows]
    pio.write_features(args.out, hists, spec, [r["id"] for r in rows], labels,
                       {k: [r[k] for r in rows] for k in ("convention", "cutoff", "density")})
    print(f"wrote {len(hists)} feature grids ({spec.bins}x{spec.bins} on [{spec.lo}, {spec.hi}]) to {args.out}")
    return 0


def _load_features(path):
    spec, hists = pio.read_features(path)
    manifest = pio.read_manifest(path + ".csv") if os.path.exists(path + ".csv") else []
    if manifest and len(manifest) != len(hists):
        raise ShapeError(f"{path}: manifest lists {len(manifest)} samples, file holds {len(hists)}")
    ids = [r["id"] for r in manifest] if manifest else [str(k) for k in range(len(hists))]
    labels = [float(r["label"]) if r.get("label") else None for r in manifest] if manifest else [None] * len(hists)
    return spec, hists, ids, labels, manifest


def cmd_train(args):
    spec, hists, ids, labels, manifest = _load_features(args.features)
    if any(y is None for y in labels):
        raise ConfigurationError("training needs a label for every sample")
    y = np.array(labels)
    train, test = train_test_split(len(hists), args.split, args.seed)
    stats = fit_standardization([hists[i] for i in train])
    model = fit_ridge([standardize(hists[i], stats) for i in train], y[train], args.lam, stats, seed=args.seed)
    model.meta = {
        "split": args.split,
        "train_ids": [ids[i] for i in train],
        "test_ids": [ids[i] for i in test],
        "convention": manifest[0].get("convention", "") if manifest else "",
        "cutoff": float(manifest[0]["cutoff"]) if manifest and manifest[0].get("cutoff") else None,
    }
    pio.write_model(args.out, model)
    print(f"trained on {len(train)} samples (lambda={args.lam}); model written to {args.out}")
    return 0


def _check_spec(model, spec):
    if model.spec != spec:
        raise ShapeError(f"feature grid {spec} does not match model grid {model.spec}")


def cmd_predict(args):
    model = pio.read_model(args.model)
    spec, hists, ids, labels, _ = _load_features(args.features)
    _check_spec(model, spec)
    pred = predict_many(model, hists)
    pio.write_predictions_csv(args.out, ids, labels, pred)
    print(f"wrote {len(pred)} predictions to {args.out}")
    return 0


def cmd_eval(args):
    model = pio.read_model(args.model)
    spec, hists, ids, labels, _ = _load_features(args.features)
    _check_spec(model, spec)
    if any(y is None for y in labels):
        raise ConfigurationError("evaluation needs a label for every sample")
    pred = predict_many(model, hists)
    y = np.array(labels)
    train_ids = set(model.meta.get("train_ids", []))
    is_train = np.array([sid in train_ids for sid in ids])
    if is_train.any():
        print(f"train RMSE: {1000 * rmse(pred[is_train], y[is_train]):.3f} meV/atom ({int(is_train.sum())} samples)")
    if (~is_train).any():
        print(f"test RMSE: {1000 * rmse(pred[~is_train], y[~is_train]):.3f} meV/atom ({int((~is_train).sum())} samples)")
    if args.out:
        pio.write_predictions_csv(args.out, ids, labels, pred)
    return 0


def cmd_pca(args):
    spec, hists, ids, labels, manifest = _load_features(args.features)
    stats = fit_standardization(hists)
    proj = fit_pca([standardize(h, stats) for h in hists], args.k)
    densities = [float(r["density"]) if r.get("density") else None for r in manifest] if manifest else None
    pio.write_pca_csv(args.out, proj, ids, labels, densities)
    ratios = ", ".join(f"{r:.4f}" for r in proj.explained_variance_ratio)
    print(f"explained variance ratio: {ratios}")
    return 0


def _report_doc(report: CycleReport, hists, thresholds):
    doc = report.to_dict()
    doc["thresholds"] = {"high": thresholds[0], "low": thresholds[1]}
    doc["histograms"] = {kind: {region: {"edges": h.edges.tolist(), "counts": h.counts.tolist(), "empty": h.empty}
                                for region, h in per.items()} for kind, per in hists.items()}
    return doc


def cmd_inverse(args):
    model = pio.read_model(args.model)
    convention = Convention.parse(args.convention or model.meta.get("convention") or "squared_radius")
    if model.meta.get("convention") and convention.value != model.meta["convention"]:
        raise ConfigurationError(f"--convention {convention.value} does not match the model's "
                                 f"{model.meta['convention']}")
    cutoff = args.cutoff if args.cutoff is not None else (model.meta.get("cutoff") or DEFAULT_CUTOFF)
    structures = pio.read_extxyz(args.structures)
    cmap = coefficient_map(model)
    regions = select_regions(cmap, args.hi_threshold, args.lo_threshold)
    diagrams = _pmap(_diagram_task, [(s, cutoff, convention) for s in structures], args.jobs)
    reports = [assign_cycles(s, d, regions, model.spec, convention, bond_scope=args.bond_scope)
               for s, d in zip(structures, diagrams)]
    report = CycleReport.merge(reports)
    hists = geometry_histograms(report, args.bond_width, args.angle_width)
    with pio.atomic_write(args.out) as fh:
        json.dump(_report_doc(report, hists, (args.hi_threshold, args.lo_threshold)), fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.xyz_out:
        tags = [{"region": report.atom_regions(s.n_atoms, s.id)} for s in structures]
        pio.write_extxyz(args.xyz_out, structures, tags)
    if args.svg_dir:
        os.makedirs(args.svg_dir, exist_ok=True)
        svg.emit_svg("coeff_heatmap", os.path.join(args.svg_dir, "coefficients.svg"), cmap.grid,
                     model.spec.lo, model.spec.hi)
        for kind, xlabel in (("bonds", "bond length (A)"), ("angles", "bond angle (deg)")):
            h = hists[kind]
            svg.emit_svg("hist1d", os.path.join(args.svg_dir, f"{kind}_high.svg"), h["high"].edges,
                         h["high"].counts, xlabel, f"{kind}: high-energy region")
            svg.emit_svg("hist1d", os.path.join(args.svg_dir, f"{kind}_low.svg"), h["low"].edges,
                         h["low"].counts, xlabel, f"{kind}: low-energy region")
    n_high = sum(c.region == "high" for c in report.cycles)
    print(f"high-energy bins: {len(regions[0])}, low-energy bins: {len(regions[1])}; "
          f"cycles: {n_high} high, {len(report.cycles) - n_high} low")
    return 0


def cmd_plot(args):
    if args.kind == "pd":
        d = pio.read_diagram_csv(args.input)
        pairs = [(p.birth, p.death) for p in d.pairs if p.dim == args.dim]
        svg.emit_svg("pd_scatter", args.out, pairs, title=f"H{args.dim} persistence diagram")
    elif args.kind == "coeff":
        model = pio.read_model(args.input)
        svg.emit_svg("coeff_heatmap", args.out, coefficient_map(model).grid, model.spec.lo, model.spec.hi)
    elif args.kind == "pca":
        rows = pio.read_pca_csv(args.input)
        coords = [(r["pc1"], r["pc2"]) for r in rows]
        vals = [np.nan if r[args.color] is None else r[args.color] for r in rows]
        svg.emit_svg("pca_scatter", args.out, coords, vals, title=f"PCA colored by {args.color}")
    elif args.kind == "hist":
        with open(args.input, encoding="utf-8") as fh:
            doc = json.load(fh)
        h = doc["histograms"][args.which][args.region]
        svg.emit_svg("hist1d", args.out, h["edges"], h["counts"], args.which, f"{args.which}: {args.region}")
    print(f"wrote {args.out}")
    return 0


def cmd_fetch(args):
    from .fetch import FEATURE_FLAG, fetch_dataset, fetch_enabled

    if not fetch_enabled():
        raise ConfigurationError(f"dataset fetching is disabled; set {FEATURE_FLAG}=1 to enable it")
    path = fetch_dataset(args.url, args.dest, args.sha256, offline=args.offline)
    print("skipped (offline)" if path is None else f"archive at {path}")
    return 0


# -- parser -------------------------------------------------------------------

def _add_pd_flags(p, cutoff_default=DEFAULT_CUTOFF):
    p.add_argument("--cutoff", type=float, default=cutoff_default, help="Rips edge-length cutoff (A)")
    p.add_argument("--convention", choices=["radius", "squared"], default=None if cutoff_default is None else "squared")


def _add_jobs(p):
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-structure stages")


def build_parser():
    parser = argparse.ArgumentParser(prog="phdesc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=110)
    p.add_argument("--n-atoms", type=int, default=64)
    p.add_argument("--kinds", default="perturbed_lattice,mc_quench")
    p.add_argument("--densities", default="", help="comma-separated g/cm^3 (default: the 11-density grid)")
    p.add_argument("--seed", type=int, default=0)
    _add_jobs(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pd", help="persistence diagrams of every structure")
    p.add_argument("structures")
    p.add_argument("--out", required=True, help="output directory")
    _add_pd_flags(p)
    _add_jobs(p)
    p.set_defaults(func=cmd_pd)

    p = sub.add_parser("featurize", help="diagrams -> normalized histogram grids")
    p.add_argument("diagrams", help="directory written by `pd`")
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=128)
    p.add_argument("--window", type=_window, default=(0.0, 8.0), metavar="LO:HI")
    _add_jobs(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit the Ridge model")
    p.add_argument("features")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.8, help="training fraction")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict energies per atom")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="train/test RMSE in meV/atom")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("--out", default=None, help="predictions CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pca", help="project descriptors onto principal components")
    p.add_argument("features")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=2)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("inverse", help="cycles behind the high/low coefficient regions")
    p.add_argument("model")
    p.add_argument("structures")
    p.add_argument("--out", required=True, help="report JSON")
    _add_pd_flags(p, cutoff_default=None)
    p.add_argument("--hi-threshold", type=float, default=HIGH_THRESHOLD)
    p.add_argument("--lo-threshold", type=float, default=LOW_THRESHOLD)
    p.add_argument("--bond-width", type=float, default=BOND_BIN_WIDTH)
    p.add_argument("--angle-width", type=float, default=ANGLE_BIN_WIDTH)
    p.add_argument("--bond-scope", choices=["cycle", "induced"], default="cycle",
                   help="bonds measured per cycle: its edges, or all short pairs among its atoms")
    p.add_argument("--xyz-out", default=None, help="extended XYZ with per-atom region tags")
    p.add_argument("--svg-dir", default=None)
    _add_jobs(p)
    p.set_defaults(func=cmd_inverse)

    p = sub.add_parser("plot", help="SVG figures")
    p.add_argument("kind", choices=["pd", "coeff", "pca", "hist"])
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=1, help="homology dimension for `plot pd`")
    p.add_argument("--color", choices=["label", "density"], default="label", help="for `plot pca`")
    p.add_argument("--which", choices=["bonds", "angles"], default="bonds", help="for `plot hist`")
    p.add_argument("--region", choices=["high", "low"], default="low", help="for `plot hist`")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("fetch", help=f"download a published archive (needs PHDESC_ENABLE_FETCH=1)")
    p.add_argument("url")
    p.add_argument("--dest", default=".")
    p.add_argument("--sha256", default=None)
    p.add_argument("--offline", action="store_true")
    p.set_defaults(func=cmd_fetch)
    return parser


def run_pipeline(argv=None) -> int:
    """Parse ``argv``, run one subcommand and return its exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except PhdescError as exc:
        print(f"phdesc {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"phdesc {args.command}: {exc}", file=sys.stderr)
        return 10


def main():
    sys.exit(run_pipeline())


if __name__ == "__main__":
    main()
