"""Command-line interface: design, analyze, cs-bench, adapt.

Exit codes: 0 success, 2 usage error, 3 I/O or file-format error, 4 numeric
failure. Every subcommand accepts ``--config FILE`` with ``key = value``
lines whose keys match the long option names; explicit flags win.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from ._version import __version__
from .design import DesignConfig, run
from .errors import (
    DegenerateVector,
    FrameFormatError,
    InvalidInput,
    NumericsFailure,
    SolverStall,
)
from .frames import Frame, certify_etf, frame_metrics, mutual_coherence
from .frameio import (
    load_patch_matrix,
    read_frame,
    write_correlation_profile,
    write_cs_table,
    write_error_trace,
    write_frame,
    write_line_chart,
    write_manifest,
)
from .sparse import (
    CsExperiment,
    adapt_dictionary,
    make_planted_dataset,
    random_sensing_frame,
    run_cs_experiment,
)

_SOURCES = ("designed-fresh", "random-gaussian", "frame-file")


def _parse_seeds(text):
    """Seed list syntax: '7', '1..10', or '1,4,9'."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise InvalidInput(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        if "," in text:
            return [int(p) for p in text.split(",") if p.strip()]
        return [int(text)]
    except ValueError as exc:
        raise InvalidInput(f"bad seed list {text!r}: {exc}") from exc


def _parse_int_list(text):
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise InvalidInput(f"bad integer list {text!r}: {exc}") from exc


def _require(args, names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise InvalidInput(f"missing required option --{name}")


def _cmd_design(args):
    _require(args, ["m", "N"])
    seeds = _parse_seeds(args.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    initial_mus, final_mus, final_avgs = [], [], []
    tag = "_nonneg" if args.nonneg else ""
    for seed in seeds:
        cfg = DesignConfig(
            m=args.m,
            n_vectors=args.N,
            sweeps=args.K,
            seed=seed,
            eps_stop=args.eps_stop,
            radius_slack=args.radius_slack,
            solver_tol=args.solver_tol,
            nonneg=args.nonneg,
        )
        started = time.perf_counter()
        frame, report = run(cfg)
        wall = time.perf_counter() - started
        fm = report.final_metrics
        initial_mus.append(report.raw_coherence)
        final_mus.append(fm.mu)
        final_avgs.append(fm.mu_avg)
        stem = f"m{args.m}_n{args.N}_seed{seed}{tag}"
        write_frame(out / f"frame_{stem}.frame", frame, seed=seed, nonneg=args.nonneg)
        write_manifest(out / f"manifest_{stem}.json", cfg, report, wall)
        print(
            f"seed {seed}: mu {report.raw_coherence:.4f} -> {fm.mu:.4f} "
            f"(best at sweep {report.best_sweep}, {len(report.escape_sweeps)} escapes, "
            f"{wall:.1f}s)"
        )
    fm_last = frame_metrics(frame)
    header = f"{'m':>5} {'N':>5} {'avg_mu0':>9} {'min_mu':>9} {'avg_mu':>9} {'welch':>9} {'avg_mu_bar':>11}"
    row = (
        f"{args.m:5d} {args.N:5d} {np.mean(initial_mus):9.4f} {np.min(final_mus):9.4f} "
        f"{np.mean(final_mus):9.4f} {fm_last.welch:9.4f} {np.mean(final_avgs):11.4f}"
    )
    print(header)
    print(row)
    if min(final_mus) <= 1e-12:
        print("columns are exactly orthonormal (coherence 0)")
    return 0


def _cmd_analyze(args):
    frame, header = read_frame(args.frame)
    fm = frame_metrics(frame)
    cert = certify_etf(frame)
    csv_path = (
        Path(args.csv)
        if args.csv
        else Path(args.frame).with_name(Path(args.frame).stem + "_correlations.csv")
    )
    frac99, frac95 = write_correlation_profile(csv_path, frame)
    print(f"frame: {args.frame} (m={frame.m}, N={frame.n_vectors})")
    print(f"coherence        = {fm.mu:.6f}")
    print(f"average |corr|   = {fm.mu_avg:.6f}")
    print(f"welch_bound      = {fm.welch:.6f}")
    print(
        f"frame_potential  = {fm.frame_potential:.6f} "
        f"(minimum N^2/m = {frame.n_vectors**2 / frame.m:.6f})"
    )
    cap = "unbounded" if fm.sparsity_cap is None else fm.sparsity_cap
    print(f"sparsity_cap     = {cap}")
    print(f"equiangular      = {cert.is_equiangular}, tight = {cert.is_tight}")
    if cert.eigen_residual is not None:
        print(
            f"etf checks: eigen_residual = {cert.eigen_residual:.3e}, "
            f"sign balance {'consistent' if cert.balance_ok else 'INCONSISTENT'} "
            f"(expected {cert.balance_value:g})"
        )
    print(f"fraction of |correlations| >= 0.99*mu: {frac99:.4f}")
    print(f"fraction of |correlations| >= 0.95*mu: {frac95:.4f}")
    print(f"correlation profile written to {csv_path}")
    return 0


def _sensing_for(source, m, args):
    if source == "random-gaussian":
        return random_sensing_frame(m, args.N, [args.seed, m])
    if source == "designed-fresh":
        cfg = DesignConfig(m=m, n_vectors=args.N, sweeps=args.design_sweeps, seed=args.seed)
        frame, _ = run(cfg)
        return frame
    if source == "frame-file":
        if not args.frame_file:
            raise InvalidInput("source frame-file needs --frame-file PATH")
        frame, _ = read_frame(args.frame_file)
        if frame.m != m or frame.n_vectors != args.N:
            raise InvalidInput(
                f"{args.frame_file} is {frame.m}x{frame.n_vectors}, "
                f"benchmark wants {m}x{args.N}"
            )
        return frame
    raise InvalidInput(f"unknown sensing source {source!r} (choose from {_SOURCES})")


def _cmd_cs_bench(args):
    m_list = _parse_int_list(args.m_list)
    sources = [s.strip() for s in args.sources.split(",") if s.strip()]
    for s in sources:
        if s not in _SOURCES:
            raise InvalidInput(f"unknown sensing source {s!r} (choose from {_SOURCES})")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for m in m_list:
        for source in sources:
            sensing = _sensing_for(source, m, args)
            if source == "designed-fresh":
                write_frame(out / f"sensing_m{m}_n{args.N}.frame", sensing, seed=args.seed)
            exp = CsExperiment(
                n_signal=args.N,
                n_atoms=args.M,
                sparsity=args.sparsity,
                trials=args.trials,
                seed=args.seed,
                sensing_source=source,
            )
            res = run_cs_experiment(exp, sensing, keep_errors=False)
            results.append((m, source, res))
            print(
                f"m={m:3d} source={source:15s} sensing_mu={res.sensing_coherence:.4f} "
                f"mean_err={res.mean_error:.5f} support_rate={res.support_rate:.3f}"
            )
    csv_path = out / "cs_bench.csv"
    write_cs_table(csv_path, results)
    series = []
    for source in sources:
        ys = [res.mean_error for m, s, res in results if s == source]
        series.append((source, [float(m) for m in m_list], ys))
    svg_path = out / "cs_bench.svg"
    write_line_chart(
        svg_path,
        series,
        xlabel="measurements m",
        ylabel="mean relative recovery error",
        title=f"sparse recovery, N={args.N}, M={args.M}, s={args.sparsity}",
    )
    print(f"table written to {csv_path}")
    print(f"chart written to {svg_path}")
    return 0


def _cmd_adapt(args):
    frame, _ = read_frame(args.frame)
    if args.images is None and not args.synthetic:
        raise InvalidInput("adapt needs --images DIR or --synthetic")
    if args.images is not None:
        patch = int(round(frame.m**0.5))
        if patch * patch != frame.m:
            raise InvalidInput(
                f"image patches need a square frame dimension, got m={frame.m}"
            )
        data = load_patch_matrix(args.images, patch=patch)
    else:
        data, _, _ = make_planted_dataset(
            frame, args.sparsity, args.samples, args.noise, args.seed
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = adapt_dictionary(data, frame, args.sparsity, args.iterations)
    mu_before = mutual_coherence(frame)
    mu_after = mutual_coherence(result.adapted)
    stem = Path(args.frame).stem
    frame_path = out / f"{stem}_adapted.frame"
    trace_path = out / f"{stem}_adapt_trace.csv"
    write_frame(frame_path, result.adapted)
    write_error_trace(
        trace_path,
        result.error_trace,
        context={
            "sparsity": args.sparsity,
            "iterations": args.iterations,
            "samples": data.shape[1],
            "source": "synthetic" if args.synthetic else "images",
        },
    )
    print(f"samples: {data.shape[1]}, sparsity: {args.sparsity}, rotations: {args.iterations}")
    print(f"relative error: {result.error_trace[0]:.6f} -> {result.error_trace[-1]:.6f}")
    print(f"coherence: {mu_before:.12f} -> {mu_after:.12f} (drift {abs(mu_after - mu_before):.2e})")
    if result.rank_deficient_steps:
        print(f"rank-deficient alignment at steps {result.rank_deficient_steps}")
    print(f"adapted frame written to {frame_path}")
    print(f"error trace written to {trace_path}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="incoframes",
        description="Design and use highly incoherent unit-norm frames.",
    )
    parser.add_argument("--version", action="version", version=f"incoframes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser("design", help="optimize an incoherent frame")
    p.add_argument("--m", type=int, help="rows (signal dimension)")
    p.add_argument("--N", type=int, help="columns (number of frame vectors)")
    p.add_argument("--K", type=int, default=200, help="sweep budget")
    p.add_argument("--seeds", type=str, default="0", help="seed list: 7, 1..10, or 1,4,9")
    p.add_argument("--eps-stop", type=float, default=1e-5, help="escape trigger threshold")
    p.add_argument("--radius-slack", type=float, default=1e-4, help="trust radius backoff")
    p.add_argument("--solver-tol", type=float, default=1e-8, help="subproblem duality gap")
    p.add_argument("--nonneg", action="store_true", help="entrywise nonnegative vectors")
    p.add_argument("--out", type=str, default=".", help="output directory")
    p.add_argument("--config", type=str, help="key = value defaults file")
    p.set_defaults(handler=_cmd_design)
    subparsers["design"] = p

    p = sub.add_parser("analyze", help="metrics and correlation profile of a frame file")
    p.add_argument("frame", type=str, help="frame file to analyze")
    p.add_argument("--csv", type=str, help="correlation profile output path")
    p.add_argument("--config", type=str, help="key = value defaults file")
    p.set_defaults(handler=_cmd_analyze)
    subparsers["analyze"] = p

    p = sub.add_parser("cs-bench", help="compressed-sensing recovery benchmark")
    p.add_argument("--N", type=int, default=80, help="signal dimension")
    p.add_argument("--M", type=int, default=120, help="dictionary atoms")
    p.add_argument("--sparsity", type=int, default=4, help="nonzeros per signal")
    p.add_argument("--m-list", type=str, default="25,30,35", help="measurement counts")
    p.add_argument("--trials", type=int, default=1000, help="trials per configuration")
    p.add_argument("--seed", type=int, default=0, help="experiment seed")
    p.add_argument(
        "--sources",
        type=str,
        default="designed-fresh,random-gaussian",
        help=f"comma list from {', '.join(_SOURCES)}",
    )
    p.add_argument("--frame-file", type=str, help="sensing frame for source frame-file")
    p.add_argument("--design-sweeps", type=int, default=150, help="sweeps for fresh designs")
    p.add_argument("--out", type=str, default=".", help="output directory")
    p.add_argument("--config", type=str, help="key = value defaults file")
    p.set_defaults(handler=_cmd_cs_bench)
    subparsers["cs-bench"] = p

    p = sub.add_parser("adapt", help="rotate a frame to fit data, preserving coherence")
    p.add_argument("--frame", type=str, help="frame file to adapt")
    p.add_argument("--images", type=str, help="directory of PGM/PNG images")
    p.add_argument("--synthetic", action="store_true", help="planted-rotation data")
    p.add_argument("--sparsity", type=int, default=4, help="nonzeros per sample")
    p.add_argument("--iterations", type=int, default=50, help="rotation rounds")
    p.add_argument("--samples", type=int, default=512, help="synthetic sample count")
    p.add_argument("--noise", type=float, default=0.01, help="synthetic noise scale")
    p.add_argument("--seed", type=int, default=0, help="synthetic data seed")
    p.add_argument("--out", type=str, default=".", help="output directory")
    p.add_argument("--config", type=str, help="key = value defaults file")
    p.set_defaults(handler=_cmd_adapt)
    subparsers["adapt"] = p

    return parser, subparsers


def _config_path_from(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config_defaults(subparser, path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FrameFormatError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = val
    for action in subparser._actions:
        if action.dest in values:
            raw = values.pop(action.dest)
            if action.const is True and action.nargs == 0:  # store_true flag
                parsed = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                try:
                    parsed = action.type(raw)
                except ValueError as exc:
                    raise InvalidInput(
                        f"{path}: bad value for {action.dest}: {raw!r}"
                    ) from exc
            else:
                parsed = raw
            subparser.set_defaults(**{action.dest: parsed})
    if values:
        raise InvalidInput(f"{path}: unknown config keys {sorted(values)}")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        command = next((tok for tok in argv if not tok.startswith("-")), None)
        config_path = _config_path_from(argv)
        if command in subparsers and config_path:
            _apply_config_defaults(subparsers[command], config_path)
        args = parser.parse_args(argv)
        return args.handler(args)
    except DegenerateVector as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericsFailure, SolverStall) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except (FrameFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
