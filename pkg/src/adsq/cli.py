"""Command-line surface: synth, train, encode, eval.

Every command writes a manifest JSON recording the resolved
configuration, seeds, SHA-256 digests of inputs and outputs, tool
version, and wall-clock per phase. Exit codes: 0 success, 1 runtime or
data error, 2 usage error.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .codes import encode_matrix, load_codes, pack, write_codes
from .config import load_config, parse_variant
from .data import (build_similarity, load_dataset, load_features, load_labels,
                   write_features, write_labels)
from .encoder import load_params
from .errors import AdsqError, ConfigError
from .metrics import (RelevanceJudge, mean_ap, mean_precision_at_hamming2,
                      pr_curve, precision_at_n, write_metrics_csv,
                      DEFAULT_RECALL_GRID)
from .synth import SynthSpec, generate
from .trainer import save_run, train

DEFAULT_TOPN_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, command, config, seeds, inputs, outputs, timings):
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "seeds": seeds,
        "inputs": {os.path.basename(p): _sha256(p) for p in inputs},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    spec = SynthSpec(classes=args.classes, dim=args.dim, per_class=args.per_class,
                     queries_per_class=args.queries_per_class,
                     cluster_spread=args.spread, center_scale=args.center_scale,
                     multilabel_overlap=args.overlap, seed=args.seed)
    train_split, query_split = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    paths = {
        "train.adsqf": train_split.features, "train.adsql": train_split.labels,
        "query.adsqf": query_split.features, "query.adsql": query_split.labels,
    }
    written = []
    for name, matrix in paths.items():
        path = os.path.join(args.out, name)
        if name.endswith(".adsqf"):
            write_features(path, matrix)
        else:
            write_labels(path, matrix)
        written.append(path)
    _write_manifest(os.path.join(args.out, "manifest.json"), "synth",
                    dataclasses.asdict(spec), {"seed": spec.seed}, [], written,
                    {"generate": time.perf_counter() - t0})
    return 0


def cmd_train(args) -> int:
    overrides = _parse_overrides(args.set)
    if args.variant is not None:
        overrides["variant"] = args.variant
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.k_half is not None:
        overrides["k_half"] = args.k_half
    hp = load_config(args.config, overrides)

    t0 = time.perf_counter()
    dataset = load_dataset(args.features, args.labels)
    sim = build_similarity(dataset.labels)
    t_load = time.perf_counter()
    state = train(dataset, sim, hp)
    t_train = time.perf_counter()
    written = save_run(state, args.out, hp)
    _write_manifest(os.path.join(args.out, "manifest.json"), "train",
                    hp.to_dict(), {"seed": hp.seed},
                    [args.features, args.labels], written,
                    {"load": t_load - t0, "train": t_train - t_load,
                     "save": time.perf_counter() - t_train})
    return 0


def cmd_encode(args) -> int:
    t0 = time.perf_counter()
    imgx = load_params(os.path.join(args.model, "imgx.net"))
    imgy = load_params(os.path.join(args.model, "imgy.net"))
    features = load_features(args.features)
    if features.shape[0] == 0:
        raise AdsqError(f"{args.features}: no rows to encode")
    codes = encode_matrix(features, imgx, imgy)
    write_codes(args.out, pack(codes))
    _write_manifest(args.out + ".manifest.json", "encode", {"model": args.model},
                    {}, [args.features,
                         os.path.join(args.model, "imgx.net"),
                         os.path.join(args.model, "imgy.net")],
                    [args.out], {"encode": time.perf_counter() - t0})
    return 0


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    query_codes = load_codes(args.query_codes)
    db_codes = load_codes(args.db_codes)
    if query_codes.k_total != db_codes.k_total:
        raise AdsqError(
            f"code width mismatch: queries {query_codes.k_total} bits, "
            f"database {db_codes.k_total} bits")
    query_labels = load_labels(args.query_labels)
    db_labels = load_labels(args.db_labels)
    if query_labels.shape[0] != query_codes.n:
        raise AdsqError("query labels and codes disagree on item count")
    if db_labels.shape[0] != db_codes.n:
        raise AdsqError("database labels and codes disagree on item count")
    judge = RelevanceJudge(query_labels=query_labels, db_labels=db_labels)

    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    known = {"map", "ph2", "pr", "pn"}
    for m in wanted:
        if m not in known:
            raise AdsqError(f"unknown metric {m!r} (choose from {sorted(known)})")

    k = db_codes.k_total
    rows = []
    if "map" in wanted:
        rows.append(("map", k, repr(mean_ap(query_codes, db_codes, judge, args.map_r)),
                     args.map_r))
    if "ph2" in wanted:
        rows.append(("ph2", k,
                     repr(mean_precision_at_hamming2(query_codes, db_codes, judge)), ""))
    if "pr" in wanted:
        for recall, precision in pr_curve(query_codes, db_codes, judge,
                                          DEFAULT_RECALL_GRID):
            rows.append(("pr", k, repr(precision), recall))
    if "pn" in wanted:
        grid = [n for n in DEFAULT_TOPN_GRID if n <= db_codes.n]
        for n, precision in precision_at_n(query_codes, db_codes, judge, grid):
            rows.append(("pn", k, repr(precision), n))
    write_metrics_csv(args.out, rows)
    _write_manifest(args.out + ".manifest.json", "eval",
                    {"metrics": wanted, "map_r": args.map_r}, {},
                    [args.query_codes, args.db_codes, args.query_labels,
                     args.db_labels],
                    [args.out], {"eval": time.perf_counter() - t0})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adsq",
        description="Asymmetric two-network semantic hashing: synthesize data, "
                    "train, encode, and evaluate binary codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic clustered dataset")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--queries-per-class", type=int, default=25)
    p.add_argument("--spread", type=float, default=0.5)
    p.add_argument("--center-scale", type=float, default=1.0)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train networks and discrete codes")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--variant", choices=["full", "no-asym", "no-sem", "no-both", "sym"],
                   default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k-half", type=int, default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key; flags win over the file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode features with a trained model")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("eval", help="compute retrieval metrics")
    p.add_argument("--query-codes", required=True)
    p.add_argument("--db-codes", required=True)
    p.add_argument("--query-labels", required=True)
    p.add_argument("--db-labels", required=True)
    p.add_argument("--metrics", default="map,ph2,pr,pn")
    p.add_argument("--map-r", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AdsqError, ValueError, OSError) as exc:
        print(f"adsq {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
