"""Command-line entry point: ``run``, ``synth``, ``mi`` and ``cluster``."""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .cluster import DEFAULT_K_SET, SURPLUS_FEATURE, StockFeatureVector, fit_profiles
from .config import CONFIG_KEYS_HELP, FIELD_NAMES, ConfigError, load_config
from .infotheory import entropy, mutual_information, paired_defined, sturges_bin_count
from .ingest import write_quotes, write_sentiment
from .pipeline import EXIT_CONFIG, EXIT_INGEST, EXIT_OK, IngestFailure, run, symbol_seed
from .report import emit_assignments, emit_cluster_models, emit_radar
from .synth import SynthSpec, gen_coupled_panel, panel_records

logger = logging.getLogger("socialvol")


def _add_run(sub):
    p = sub.add_parser(
        "run", help="run the full pipeline",
        epilog=CONFIG_KEYS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--config", help="flat key = value config file")
    for name in FIELD_NAMES:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, metavar="V")
    p.set_defaults(func=cmd_run)


def cmd_run(args):
    overrides = {n: getattr(args, n) for n in FIELD_NAMES}
    try:
        cfg = load_config(args.config, **overrides).validate()
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(cfg)
    except IngestFailure as exc:
        print(f"ingest failure: {exc}", file=sys.stderr)
        return EXIT_INGEST
    for k, v in (*manifest.counts.items(), *manifest.outputs.items()):
        print(f"{k}: {v}")
    for sym, err in sorted(manifest.errors.items()):
        print(f"error {sym}: {err}", file=sys.stderr)
    return manifest.exit_code


def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    panels = []
    for i in range(args.symbols):
        coupled = i < args.coupled
        name = f"CPL{i:03d}" if coupled else f"NUL{i:03d}"
        spec = SynthSpec(n_days=args.n_days, tau=args.tau if coupled else 0,
                         rho=args.rho if coupled else 0.0,
                         seed=symbol_seed(args.seed, name), symbol=name)
        panels.append(gen_coupled_panel(spec))
    sentiment, quotes = panel_records(panels)
    with open(out / "sentiment.csv", "w", newline="", encoding="utf-8") as fh:
        write_sentiment(sentiment, fh)
    with open(out / "quotes.csv", "w", newline="", encoding="utf-8") as fh:
        write_quotes(quotes, fh)
    with open(out / "metadata.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["SYMBOL", "SECTOR"])
        for p in panels:
            w.writerow([p.symbol, "Coupled" if p.symbol.startswith("CPL") else "Null"])
    print(f"wrote {len(panels)} symbols to {out}")
    return EXIT_OK


def _read_column(path):
    values = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            t = line.strip()
            values.append(np.nan if t.lower() in ("", "na", "nan") else float(t))
    return np.array(values)


def cmd_mi(args):
    try:
        x, y = _read_column(args.x), _read_column(args.y)
        xs, ys = paired_defined(x, y)
        k = args.bins or sturges_bin_count(max(xs.size, 1))
        mi = mutual_information(x, y, k=k, binning=args.binning)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"n_pairs: {xs.size}")
    print(f"bins: {k}")
    print(f"mi_bits: {mi:.12g}")
    print(f"entropy_x_bits: {entropy(xs, k, args.binning):.12g}")
    print(f"entropy_y_bits: {entropy(ys, k, args.binning):.12g}")
    return EXIT_OK


def read_vectors(path):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        names = [c for c in reader.fieldnames if c.strip().upper() != "SYMBOL"]
        sym_col = next(c for c in reader.fieldnames if c.strip().upper() == "SYMBOL")
        vectors = [
            StockFeatureVector(row[sym_col].strip(), {n.strip().upper(): float(row[n]) for n in names})
            for row in reader
        ]
    return vectors, tuple(n.strip().upper() for n in names)


def cmd_cluster(args):
    try:
        vectors, names = read_vectors(args.vectors)
        if SURPLUS_FEATURE not in names:
            raise ValueError(f"vector file needs a {SURPLUS_FEATURE} column")
        k_set = tuple(int(k) for k in args.k.split(","))
        models, errors = fit_profiles(vectors, k_set, args.seed, args.restarts, names)
    except (OSError, ValueError, StopIteration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_radar(models, out / "radar.csv")
    emit_cluster_models(models, errors, out / "models.csv")
    emit_assignments(models, out / "assignments.csv")
    for k in sorted(models):
        print(f"k={k} wcss={models[k].wcss:.6g}")
    for k, msg in sorted(errors.items()):
        print(f"k={k} error: {msg}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="socialvol",
        description="Lead-lag information surplus of social sentiment over stock volatility.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)

    p = sub.add_parser("synth", help="write synthetic sentiment/quote fixture files")
    p.add_argument("--out", required=True)
    p.add_argument("--symbols", type=int, default=20)
    p.add_argument("--coupled", type=int, default=10)
    p.add_argument("--n-days", type=int, default=1000)
    p.add_argument("--tau", type=int, default=3)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mi", help="mutual information between two one-column files")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--binning", default="equal_width",
                   choices=("equal_width", "equal_frequency"))
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("cluster", help="k-means sweep over a prebuilt vector file")
    p.add_argument("vectors", help="CSV with SYMBOL plus numeric feature columns")
    p.add_argument("--out", required=True)
    p.add_argument("--k", default=",".join(map(str, DEFAULT_K_SET)))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.set_defaults(func=cmd_cluster)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
