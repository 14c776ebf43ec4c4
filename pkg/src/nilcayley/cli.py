"""Command-line interface.

Subcommands: diam, filtration, synth, lattice, montecarlo, compare.
Exit codes: 0 ok, 2 precondition violated, 3 resource cap exceeded,
4 sampling or enclosure budget exhausted.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import (
    EnclosureBudgetError,
    PreconditionError,
    ResourceLimitError,
    SamplingBudgetError,
)
from .groups import GeneratingSet, GroupSpec
from .harness import (
    QUANTILE_LEVELS,
    TrialConfig,
    compare_experiment,
    filtration_scaling_experiment,
    parse_config_text,
    run_trials,
    sample_generating_set,
)
from .lattice import lattice_from_descriptor, rescale, torus_diameter_l1
from .metrics import bfs_distance_map, diameter, filtration_report, shortest_word
from .words import Word, word_eval


def _apply_thread_env() -> None:
    raw = os.environ.get("NILCAYLEY_THREADS", "").strip()
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise PreconditionError(f"NILCAYLEY_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise PreconditionError("NILCAYLEY_THREADS must be >= 1")
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass


def _parse_gens(spec: GroupSpec, text: str) -> GeneratingSet:
    try:
        codes = tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise PreconditionError(f"bad generator list {text!r}") from exc
    return GeneratingSet.from_positives(spec, codes)


def _sampled_or_given(args) -> GeneratingSet:
    spec = GroupSpec.from_descriptor(args.spec)
    if args.gens is not None:
        return _parse_gens(spec, args.gens)
    if args.k is None:
        raise PreconditionError("need either --gens or --k for sampling")
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    return sample_generating_set(spec, args.k, args.mode, rng)


def _cmd_diam(args) -> int:
    spec = GroupSpec.from_descriptor(args.spec)
    gens = _sampled_or_given(args)
    dm = bfs_distance_map(spec, gens, mem_cap_bytes=args.mem_cap)
    print(f"spec={spec.descriptor()} k={gens.k} diameter={diameter(dm)}")
    return 0


def _cmd_filtration(args) -> int:
    if args.scan_q:
        qs = [int(tok) for tok in args.scan_q.split(",")]
        rows, slopes = filtration_scaling_experiment(
            qs,
            d=args.d,
            k=args.k if args.k is not None else 3,
            n_trials=args.n,
            seed=args.seed,
            cache_dir=Path(args.cache_dir) if args.cache_dir else None,
        )
        print("q\ti\tmean_diam\tmax_diam\tmean_ratio\tmax_ratio")
        for r in rows:
            print(
                f"{r.q}\t{r.i}\t{r.mean_diam:.4f}\t{r.max_diam}"
                f"\t{r.mean_ratio:.4f}\t{r.max_ratio:.4f}"
            )
        for i, s in sorted(slopes.items()):
            print(f"# layer {i} log-log slope {s:.4f}")
        if args.plot:
            from .plots import render_filtration_scaling

            out = render_filtration_scaling(rows, slopes, Path(args.plot))
            print(f"# figure written to {out}")
        return 0
    spec = GroupSpec.from_descriptor(args.spec)
    gens = _sampled_or_given(args)
    rep = filtration_report(spec, gens, mem_cap_bytes=args.mem_cap)
    print(f"spec={spec.descriptor()} diam={rep.diam} diam_ab={rep.diam_ab}")
    print("i\tsubgroup_diam\tquotient_diam")
    for i in range(1, spec.nil_class + 1):
        print(f"{i}\t{rep.subgroup_diams[i - 1]}\t{rep.quotient_diams[i - 1]}")
    return 0


def _cmd_synth(args) -> int:
    from .distortion import full_synthesize

    spec = GroupSpec.from_descriptor(args.spec)
    gens = _sampled_or_given(args)
    abmap = bfs_distance_map(spec.abelianisation, gens.projected())
    word = full_synthesize(spec, gens, args.target, abmap)
    got = word_eval(spec, gens, word)
    if got != args.target:  # pragma: no cover - guarded inside full_synthesize
        raise PreconditionError("synthesized word failed verification")
    print(f"target={args.target} length={len(word)} verified=1")
    print(word.to_text())
    return 0


def _cmd_lattice(args) -> int:
    lat = lattice_from_descriptor(args.descriptor)
    rl = rescale(lat)
    lo, hi = torus_diameter_l1(rl, eps=args.eps)
    print(f"{lo:.8f},{hi:.8f}")
    return 0


def _cmd_montecarlo(args) -> int:
    config = parse_config_text(Path(args.config).read_text())
    out = Path(args.out) if args.out else None
    cache = Path(args.cache_dir) if args.cache_dir else None
    records = run_trials(config, out_jsonl=out, cache_dir=cache)
    if args.csv:
        path = Path(args.csv)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            fh.write("trial,diam,diam_ab,x,x_ab,eps\n")
            for r in records:
                fh.write(
                    f"{r.trial},{r.diam},{r.diam_ab},{r.x:.10g},"
                    f"{'' if r.x_ab is None else f'{r.x_ab:.10g}'},"
                    f"{'' if r.eps is None else f'{r.eps:.10g}'}\n"
                )
    xs = [r.x for r in records]
    mean = float(np.mean(xs)) if xs else float("nan")
    print(f"trials={len(records)} mean_x={mean:.6f}")
    return 0


def _cmd_compare(args) -> int:
    config_a = parse_config_text(Path(args.config_a).read_text())
    config_b = parse_config_text(Path(args.config_b).read_text())
    cache = Path(args.cache_dir) if args.cache_dir else None
    report = compare_experiment(config_a, config_b, cache_dir=cache)
    print(f"ks={report.ks:.6f} n_a={report.count_a} n_b={report.count_b}")
    for p in QUANTILE_LEVELS:
        print(f"q{int(p * 100):02d}\t{report.quantiles_a[p]:.6f}\t{report.quantiles_b[p]:.6f}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        report.write_cdf_tsv(out_dir / "cdf_a.tsv", "a")
        report.write_cdf_tsv(out_dir / "cdf_b.tsv", "b")
        print(f"# CDF tables written to {out_dir}")
        if args.plot:
            from .plots import render_cdf_comparison

            fig = render_cdf_comparison(
                report,
                out_dir / "cdf_comparison.png",
                label_a=config_a.descriptor or config_a.kind,
                label_b=config_b.descriptor or config_b.kind,
            )
            print(f"# figure written to {fig}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nilcayley",
        description="Word metrics on Cayley graphs of finite nilpotent groups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_group_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--spec", required=True, help="group descriptor, e.g. ut:5,3")
        p.add_argument("--gens", help="comma-separated positive generator codes")
        p.add_argument("--k", type=int, help="sample this many random generators")
        p.add_argument("--mode", default="iid-generators")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mem-cap", type=int, default=2_500_000_000)

    p = sub.add_parser("diam", help="diameter of one Cayley graph")
    add_group_args(p)
    p.set_defaults(func=_cmd_diam)

    p = sub.add_parser("filtration", help="per-layer diameters, or a q-grid scan")
    p.add_argument("--spec", help="group descriptor (single-group mode)")
    p.add_argument("--gens")
    p.add_argument("--k", type=int)
    p.add_argument("--mode", default="iid-generators")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mem-cap", type=int, default=2_500_000_000)
    p.add_argument("--scan-q", help="comma-separated q grid for the scaling table")
    p.add_argument("--d", type=int, default=3, help="matrix size for the scan")
    p.add_argument("--n", type=int, default=20, help="trials per q in the scan")
    p.add_argument("--cache-dir")
    p.add_argument("--plot", help="write the scan figure to this path")
    p.set_defaults(func=_cmd_filtration)

    p = sub.add_parser("synth", help="synthesize and verify a word for a target")
    add_group_args(p)
    p.add_argument("--target", type=int, required=True, help="target element code")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("lattice", help="certified l1 torus diameter enclosure")
    p.add_argument("--descriptor", required=True, help="lat:k=K;mod=..;g=..")
    p.add_argument("--eps", type=float, default=1e-2)
    p.set_defaults(func=_cmd_lattice)

    p = sub.add_parser("montecarlo", help="run a trial batch from a config file")
    p.add_argument("--config", required=True, help="flat key=value config file")
    p.add_argument("--out", help="JSONL output path")
    p.add_argument("--csv", help="CSV summary path")
    p.add_argument("--cache-dir")
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("compare", help="KS comparison of two trial batches")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.add_argument("--out-dir", help="directory for CDF TSV tables")
    p.add_argument("--cache-dir")
    p.add_argument("--plot", action="store_true", help="also render the CDF figure")
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_env()
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except (SamplingBudgetError, EnclosureBudgetError) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
