"""Command-line front end: ``fsbench synth|stats|rank|eval|bench``.

Exit codes: 0 success, 2 usage or validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
import warnings
from pathlib import Path

from . import __version__
from .dataset import SynthSpec, dataset_stats, format_number, generate_synthetic, load_manifest, \
    write_bundle
from .embedded import METHODS, SelectorConfig, canonical_method
from .harness import (DEFAULT_PARAM_GRIDS, bench_csv, curve_csv, evaluate, rank_features,
                      report_csv, tune_selector)
from .svm import ConvergenceWarning

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

# flag dest -> SelectorConfig field
_CFG_FLAGS = {
    "lam": "lam",
    "lambda2": "lambda2",
    "C": "C",
    "drop_fraction": "rfe_drop_fraction",
    "kernel_width": "ll_kernel_width",
    "em_iter": "ll_em_iter",
    "l21_eps": "l21_eps",
    "delta": "delta",
    "corr_threshold": "corr_threshold",
    "tol": "tol",
    "max_iter": "max_iter",
}


def _strip_jobs(argv: list[str]) -> list[str]:
    """Drop --jobs from the recorded command line so output does not depend on it."""
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
        elif tok == "--jobs":
            skip = True
        elif not tok.startswith("--jobs="):
            out.append(tok)
    return out


def make_header(argv: list[str], seed: int) -> str:
    cmd = " ".join(shlex.quote(t) for t in ["fsbench"] + _strip_jobs(argv))
    return "# fsbench %s\n# command: %s\n# seed: %d\n" % (__version__, cmd, seed)


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("k list must be comma-separated integers") from None
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("every k must be a positive integer")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise argparse.ArgumentTypeError("k values must be strictly increasing")
    return ks


def _default_jobs() -> int:
    env = os.environ.get("FSBENCH_JOBS", "").strip()
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _add_common(p: argparse.ArgumentParser, manifest: bool = True) -> None:
    if manifest:
        p.add_argument("manifest", help="dataset manifest file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_default_jobs(),
                   help="concurrent fits (default: $FSBENCH_JOBS or 1)")


def _add_selector_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("selector parameters")
    g.add_argument("--lambda", "--lambda1", "--lam", dest="lam", type=float,
                   help="main penalty; the elastic net's l1 weight")
    g.add_argument("--lambda2", type=float, help="elastic net l2 weight")
    g.add_argument("--C", type=float, help="SVM C for l1svm and rfe")
    g.add_argument("--drop-fraction", type=float, help="RFE fraction removed per round")
    g.add_argument("--kernel-width", type=float, help="local-learning kernel width")
    g.add_argument("--em-iter", type=int, help="local-learning EM iterations")
    g.add_argument("--l21-eps", type=float, help="L2,1 smoothing")
    g.add_argument("--delta", type=float, help="shrunken-centroid shrinkage")
    g.add_argument("--corr-threshold", type=float, help="shrunken-centroid correlation cut")
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int)


def _selector_config(args, method: str) -> tuple[SelectorConfig, set]:
    given = {field: getattr(args, dest) for dest, field in _CFG_FLAGS.items()
             if getattr(args, dest, None) is not None}
    return SelectorConfig(method=method, seed=args.seed, **given), set(given)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsbench", description="Feature-selection benchmark.")
    parser.add_argument("--version", action="version", version="fsbench " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset bundle")
    p.add_argument("--n-train", type=int, default=500)
    p.add_argument("--n-valid", type=int, default=250)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--d-real", type=int, default=200)
    p.add_argument("--probes", type=int, default=200)
    p.add_argument("--informative", type=int, default=10)
    p.add_argument("--sparsity", type=float, default=0.0)
    p.add_argument("--block-size", type=int, default=5)
    p.add_argument("--correlation", type=float, default=0.0)
    p.add_argument("--probe-kind", choices=("permutation", "zipf"), default="permutation")
    p.add_argument("--noise-sd", type=float, default=0.1)
    p.add_argument("--format", choices=("dense", "sparse"), default=None)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p, manifest=False)

    p = sub.add_parser("stats", help="size, sparsity and correlation of each split")
    p.add_argument("--sample-pairs", type=int, default=100_000)
    _add_common(p)

    p = sub.add_parser("rank", help="rank features on training + validation")
    p.add_argument("--method", required=True)
    p.add_argument("--tune", action="store_true",
                   help="tune unset parameters on the validation split first")
    p.add_argument("--out", help="ranking CSV (default: standard output)")
    _add_common(p)
    _add_selector_flags(p)

    p = sub.add_parser("eval", help="tune, rank, select an SVM and report test BSR per k")
    p.add_argument("--method", required=True)
    p.add_argument("--k-list", type=_k_list, default=_k_list("50,100,200,500,1000"))
    p.add_argument("--no-tune", action="store_true", help="use the given parameters as is")
    p.add_argument("--out", help="directory for report.csv and curve_<method>.csv")
    _add_common(p)
    _add_selector_flags(p)

    p = sub.add_parser("bench", help="combined BSR(probes%%) and timing table")
    p.add_argument("--methods", default="all")
    p.add_argument("--k-list", type=_k_list, default=_k_list("50,200"))
    p.add_argument("--repeats", type=int, default=3, help="timing runs per selector (median)")
    p.add_argument("--out", help="directory for bench.csv and report.csv")
    _add_common(p)
    return parser


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def cmd_synth(args, header: str) -> None:
    spec = SynthSpec(args.n_train, args.n_valid, args.n_test, args.d_real, args.probes,
                     args.informative, args.sparsity, args.block_size, args.correlation,
                     args.probe_kind, args.noise_sd, args.seed)
    bundle = generate_synthetic(spec)
    manifest = write_bundle(bundle, args.out, args.format, header)
    st = dataset_stats(bundle.train.concat(bundle.validation).concat(bundle.test), seed=args.seed)
    print("manifest,rows,cols,sparsity,mean_abs_corr,probes_pct")
    print("%s,%d,%d,%.4f,%.4f,%s" % (manifest, st.rows, st.cols, st.sparsity, st.mean_abs_corr,
                                     format_number(100.0 * args.probes / max(st.cols, 1))))


def cmd_stats(args, header: str) -> None:
    bundle = load_manifest(args.manifest)
    sys.stdout.write(header)
    print("split,rows,cols,sparsity,mean_abs_corr,positive_fraction,probes_pct")
    flags = bundle.probe_flags
    probes = "" if flags is None else "%.2f" % (100.0 * flags.mean())
    for ds in (bundle.train, bundle.validation, bundle.test):
        st = dataset_stats(ds, args.sample_pairs, args.seed)
        print("%s,%d,%d,%.4f,%.4f,%.4f,%s" % (ds.split, st.rows, st.cols, st.sparsity,
                                               st.mean_abs_corr, st.class_balance, probes))


def cmd_rank(args, header: str) -> None:
    method = canonical_method(args.method)
    cfg, given = _selector_config(args, method)
    bundle = load_manifest(args.manifest)
    if args.tune:
        grid = {k: v for k, v in DEFAULT_PARAM_GRIDS[method].items() if k not in given}
        cfg = tune_selector(bundle, method, grid, base=cfg, jobs=args.jobs)
    ranking = rank_features(bundle.train_plus_validation(), cfg)
    _emit(ranking.to_csv(header + "# config: %s\n" % (cfg.describe() or "none")), args.out)


def cmd_eval(args, header: str) -> None:
    method = canonical_method(args.method)
    cfg, given = _selector_config(args, method)
    bundle = load_manifest(args.manifest)
    if args.no_tune:
        ev = evaluate(bundle, method, args.k_list, cfg=cfg, seed=args.seed, jobs=args.jobs)
    else:
        grid = {k: v for k, v in DEFAULT_PARAM_GRIDS[method].items() if k not in given}
        tuned = tune_selector(bundle, method, grid, base=cfg, jobs=args.jobs)
        ev = evaluate(bundle, method, args.k_list, cfg=tuned, seed=args.seed, jobs=args.jobs)
    head = header + "# config: %s\n" % (ev.config.describe() or "none")
    report = report_csv(ev.reports, head)
    if args.out:
        _emit(report, Path(args.out) / "report.csv")
        _emit(curve_csv(ev.curve, head), Path(args.out) / ("curve_%s.csv" % method))
    sys.stdout.write(report)


def cmd_bench(args, header: str) -> None:
    if args.methods.strip().lower() == "all":
        methods = list(METHODS)
    else:
        methods = [canonical_method(m) for m in args.methods.split(",") if m.strip()]
        if not methods:
            raise ValueError("no methods given")
    if args.repeats < 1:
        raise ValueError("--repeats must be >= 1")
    bundle = load_manifest(args.manifest)
    reports = []
    configs = []
    for m in methods:
        base = SelectorConfig(method=m, seed=args.seed)
        cfg = tune_selector(bundle, m, base=base, jobs=args.jobs)
        ev = evaluate(bundle, m, args.k_list, cfg=cfg, seed=args.seed, jobs=args.jobs,
                      timing_repeats=args.repeats)
        reports.extend(ev.reports)
        configs.append("# config %s: %s\n" % (m, cfg.describe() or "none"))
    head = header + "".join(configs)
    table = bench_csv(reports, head)
    if args.out:
        _emit(table, Path(args.out) / "bench.csv")
        _emit(report_csv(reports, head), Path(args.out) / "report.csv")
    sys.stdout.write(table)


COMMANDS = {"synth": cmd_synth, "stats": cmd_stats, "rank": cmd_rank, "eval": cmd_eval,
            "bench": cmd_bench}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    if getattr(args, "jobs", 1) < 1:
        print("fsbench: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    header = make_header(argv, args.seed)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("once", ConvergenceWarning)
            COMMANDS[args.command](args, header)
    except (ValueError, FileNotFoundError) as exc:
        print("fsbench: error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print("fsbench: runtime failure: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
