"""Command-line front end: generation, prediction, simulation, decoding.

Every file-producing subcommand writes a JSON manifest next to its output
(``<out>.manifest.json``) holding the subcommand, the full parameter set
and the tool version; re-running those parameters reproduces the output
byte for byte. Exit codes: 0 success, 1 usage or parameter error,
2 differential mismatch or validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .codes import (
    CodeFormatError,
    ErrorPattern,
    QcSeedSpec,
    Syndrome,
    generate_qc,
    load_code,
    save_code,
    syndrome,
)
from .decoders import BfConfig, bf_decode, bfmax_decode_naive, bfmax_decode_sparse
from .dfr import predict_dfr
from .rng import make_rng
from .simulate import (
    FileCodeSource,
    FreshQcSource,
    QcCodeSource,
    SimPlan,
    differential_campaign,
    opcount_validation,
    run_sim,
)

FORMAT_VERSION = "1"

SIM_CSV_COLUMNS = (
    "n,r,v,w,t,decoder,iter_max,trials,failures,miscorrections,"
    "dfr,ci_low,ci_high,dfr_theory,log2_dfr_theory,seed,format_version"
)

PREDICT_CSV_COLUMNS = "n,r,v,w,t,q_max,dfr,log2_dfr,mode,format_version"


class _Parser(argparse.ArgumentParser):
    """argparse parser with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _default_workers() -> int:
    raw = os.environ.get("BFKIT_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _write_manifest(out_path: str, subcommand: str, params: dict) -> None:
    manifest = {
        "format_version": FORMAT_VERSION,
        "tool": "bfkit",
        "tool_version": __version__,
        "subcommand": subcommand,
        "parameters": params,
        "outputs": [str(out_path)],
    }
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


# -- gen ----------------------------------------------------------------------


def _cmd_gen(args) -> int:
    try:
        spec = QcSeedSpec(args.r, args.v, args.seed)
    except ValueError as exc:
        print(f"gen: error: {exc}", file=sys.stderr)
        return 1
    H = generate_qc(spec)
    save_code(H, args.out, qc_compact=args.qc_compact)
    _write_manifest(
        args.out,
        "gen",
        {"r": args.r, "v": args.v, "seed": args.seed, "qc_compact": args.qc_compact},
    )
    print(f"n={H.n} r={H.r} v={H.v} w={H.w_max}")
    return 0


# -- predict -------------------------------------------------------------------


def _cmd_predict(args) -> int:
    n = args.n if args.n is not None else 2 * args.r
    w = args.w if args.w is not None else 2 * args.v
    if args.t_min < 0 or args.t_max < args.t_min:
        print("predict: error: need 0 <= t-min <= t-max", file=sys.stderr)
        return 1
    mode = "exact" if args.exact else "fast"
    rows = []
    json_objs = []
    for t in range(args.t_min, args.t_max + 1):
        try:
            pred = predict_dfr(n, args.r, args.v, w, t, mode=mode, dps=args.dps)
        except ValueError as exc:
            print(f"predict: error: {exc}", file=sys.stderr)
            return 1
        if args.json:
            obj = pred.to_json_dict()
            obj["format_version"] = FORMAT_VERSION
            json_objs.append(obj)
        else:
            q_max = float(pred.per_iteration_failure.max()) if t > 0 else 0.0
            rows.append(
                f"{n},{args.r},{args.v},{w},{t},{_fmt(q_max)},"
                f"{_fmt(pred.dfr_linear)},{_fmt(pred.log2_dfr)},{pred.mode},{FORMAT_VERSION}"
            )
    if args.json:
        text = "\n".join(json.dumps(obj, sort_keys=True) for obj in json_objs) + "\n"
    else:
        text = PREDICT_CSV_COLUMNS + "\n" + "\n".join(rows) + "\n"
    _emit(text, args.out)
    if args.out:
        _write_manifest(
            args.out,
            "predict",
            {
                "n": n, "r": args.r, "v": args.v, "w": w,
                "t_min": args.t_min, "t_max": args.t_max,
                "mode": mode, "dps": args.dps, "json": args.json,
            },
        )
    return 0


# -- simulate ------------------------------------------------------------------


def _resolve_source(args, parser_name: str):
    if args.code is not None:
        return FileCodeSource(args.code)
    if args.r is None or args.v is None:
        print(f"{parser_name}: error: provide --code or both --r and --v", file=sys.stderr)
        return None
    if args.code_seed is not None:
        return QcCodeSource(args.r, args.v, args.code_seed)
    return FreshQcSource(args.r, args.v)


def _parse_thresholds(raw: str | None):
    if raw is None:
        return None
    try:
        return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        return ()


def _sim_csv_row(report, theory) -> str:
    if theory is None:
        theory_s = log2_s = ""
    else:
        theory_s, log2_s = _fmt(theory.dfr_linear), _fmt(theory.log2_dfr)
    w = int(report.w_avg) if report.w_avg == int(report.w_avg) else report.w_avg
    return (
        f"{report.n},{report.r},{report.v},{w},{report.t},{report.decoder},"
        f"{report.iter_max},{report.trials_run},{report.failures},{report.miscorrections},"
        f"{_fmt(report.dfr_point)},{_fmt(report.ci_low)},{_fmt(report.ci_high)},"
        f"{theory_s},{log2_s},{report.master_seed},{FORMAT_VERSION}"
    )


def _cmd_simulate(args) -> int:
    source = _resolve_source(args, "simulate")
    if source is None:
        return 1
    thresholds = _parse_thresholds(args.thresholds)
    if thresholds == ():
        print("simulate: error: bad --thresholds", file=sys.stderr)
        return 1
    try:
        plan = SimPlan(
            source=source,
            t=args.t,
            decoder=args.decoder,
            iter_max=args.iter_max,
            thresholds=thresholds,
            max_trials=args.max_trials,
            target_failures=args.target_failures,
            master_seed=args.seed,
            worker_count=args.workers,
            chunk_size=args.chunk_size,
        )
        report = run_sim(plan)
    except (ValueError, CodeFormatError, OSError) as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return 1

    theory = None
    profile = source.profile()
    regular = profile.is_row_regular and profile.n * profile.v == profile.r * profile.w_max
    if regular and plan.decoder.startswith("bfmax") and plan.effective_iter_max == plan.t:
        theory = predict_dfr(profile.n, profile.r, profile.v, profile.w_max, plan.t)

    row = _sim_csv_row(report, theory)
    if args.out:
        path = Path(args.out)
        header_needed = not path.exists() or path.stat().st_size == 0
        with path.open("a", encoding="utf-8", newline="\n") as fh:
            if header_needed:
                fh.write(SIM_CSV_COLUMNS + "\n")
            fh.write(row + "\n")
        _write_manifest(
            args.out,
            "simulate",
            {
                "source": source.describe(), "t": args.t, "decoder": args.decoder,
                "iter_max": plan.effective_iter_max, "max_trials": args.max_trials,
                "target_failures": args.target_failures, "workers": args.workers,
                "seed": args.seed, "chunk_size": args.chunk_size,
                "thresholds": list(thresholds) if thresholds else None,
            },
        )
    else:
        print(SIM_CSV_COLUMNS)
        print(row)
    return 0


# -- decode --------------------------------------------------------------------


def _read_syndrome_file(path, r: int) -> Syndrome:
    text = Path(path).read_text(encoding="utf-8")
    chars = [c for c in text if not c.isspace()]
    if any(c not in "01" for c in chars):
        raise ValueError("syndrome file must contain only 0/1 characters")
    if len(chars) != r:
        raise ValueError(f"syndrome length {len(chars)} does not match r={r}")
    return Syndrome(np.array([int(c) for c in chars], dtype=np.uint8))


def _cmd_decode(args) -> int:
    try:
        H = load_code(args.code)
    except (CodeFormatError, OSError) as exc:
        print(f"decode: error: {exc}", file=sys.stderr)
        return 1

    true_error = None
    try:
        if args.error_support is not None:
            support = [int(tok) for tok in args.error_support.split(",") if tok.strip()]
            true_error = ErrorPattern.from_support(H.n, support)
            s = syndrome(H, true_error)
        elif args.syndrome_file is not None:
            s = _read_syndrome_file(args.syndrome_file, H.r)
        else:
            print("decode: error: provide --error-support or --syndrome-file", file=sys.stderr)
            return 1
    except (ValueError, OSError) as exc:
        print(f"decode: error: {exc}", file=sys.stderr)
        return 1

    iter_max = args.iter_max
    try:
        if args.decoder == "bf":
            thresholds = _parse_thresholds(args.thresholds)
            if not thresholds:
                print("decode: error: bf decoder requires --thresholds", file=sys.stderr)
                return 1
            if len(thresholds) == 1:
                thresholds = thresholds * iter_max
            outcome = bf_decode(H, s, BfConfig(iter_max, thresholds))
        elif args.decoder == "bfmax-naive":
            outcome = bfmax_decode_naive(H, s, iter_max, make_rng(args.seed))
        else:
            outcome = bfmax_decode_sparse(H, s, iter_max, make_rng(args.seed))
    except ValueError as exc:
        print(f"decode: error: {exc}", file=sys.stderr)
        return 1

    result = {
        "format_version": FORMAT_VERSION,
        "decoder": args.decoder,
        "n": H.n,
        "r": H.r,
        "iter_max": iter_max,
        "seed": args.seed,
        "result": "success" if outcome.success else "failure",
        "error_support": (
            [int(i) for i in outcome.error_estimate.support] if outcome.success else None
        ),
        "iterations_used": outcome.iterations_used,
        "flip_log": [int(i) for i in outcome.flip_log],
        "op_counts": outcome.op_counts.as_dict(),
        "recovered_equals_input": (
            None if true_error is None
            else bool(outcome.success and outcome.error_estimate == true_error)
        ),
    }
    print(json.dumps(result, sort_keys=True))
    return 0


# -- compare -------------------------------------------------------------------


def _faulty_sparse_decode(H, s, iter_max, rng, **kwargs):
    """Deliberately broken sparse decoder for negative-control runs: burns
    one tie-break draw, desynchronizing it from the reference decoder."""
    rng.integers(0, 2)
    return bfmax_decode_sparse(H, s, iter_max, rng, **kwargs)


def _cmd_compare(args) -> int:
    source = FreshQcSource(args.r, args.v)
    try:
        diff_plan = SimPlan(
            source=source, t=args.t, decoder="bfmax-sparse",
            max_trials=args.trials, master_seed=args.seed,
            worker_count=args.workers, chunk_size=args.chunk_size,
        )
        op_plan = SimPlan(
            source=source, t=args.t, decoder="bfmax-sparse",
            max_trials=args.opcount_trials, master_seed=args.seed + 1,
            worker_count=args.workers, chunk_size=args.chunk_size,
        )
    except ValueError as exc:
        print(f"compare: error: {exc}", file=sys.stderr)
        return 1

    impl = _faulty_sparse_decode if args.inject_fault else None
    diff = differential_campaign(diff_plan, sparse_impl=impl)
    validation = opcount_validation(op_plan)

    lines = ["term,measured,predicted,ratio,format_version"]
    for row in validation.rows:
        lines.append(
            f"{row.term},{_fmt(row.measured)},{_fmt(row.predicted)},"
            f"{_fmt(row.ratio)},{FORMAT_VERSION}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    if args.out:
        _write_manifest(
            args.out,
            "compare",
            {
                "r": args.r, "v": args.v, "t": args.t, "trials": args.trials,
                "opcount_trials": args.opcount_trials, "seed": args.seed,
                "workers": args.workers,
            },
        )

    print(f"{len(diff.mismatches)} mismatches in {diff.trials_run} trials", file=sys.stderr)
    for miss in diff.mismatches[:10]:
        print(
            f"  mismatch at trial {miss.trial_index} (tie seed {miss.tie_seed}): "
            f"naive={miss.naive_flips} sparse={miss.sparse_flips}",
            file=sys.stderr,
        )
    return 0 if diff.clean else 2


# -- entry point ---------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="bfkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"bfkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded quasi-cyclic code file")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--qc-compact", action="store_true",
                   help="write the compact QC form instead of full column supports")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("predict", help="closed-form failure-rate sweep over t")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--n", type=int, default=None, help="code length (default 2r)")
    p.add_argument("--w", type=int, default=None, help="row weight (default 2v)")
    p.add_argument("--t-min", type=int, required=True)
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="arbitrary-precision mode")
    p.add_argument("--dps", type=int, default=60, help="digits for --exact")
    p.add_argument("--json", action="store_true", help="JSON lines instead of CSV")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("simulate", help="Monte Carlo failure-rate estimation")
    p.add_argument("--code", default=None, help="code file (else --r/--v)")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--v", type=int, default=None)
    p.add_argument("--code-seed", type=int, default=None,
                   help="fixed QC key seed (default: fresh key per trial)")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--decoder", choices=("bf", "bfmax-naive", "bfmax-sparse"),
                   default="bfmax-sparse")
    p.add_argument("--iter-max", type=int, default=None, help="default: t")
    p.add_argument("--thresholds", default=None,
                   help="comma-separated per-iteration thresholds (bf only)")
    p.add_argument("--max-trials", type=int, default=10000)
    p.add_argument("--target-failures", type=int, default=1_000_000_000)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--chunk-size", type=int, default=512)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, help="append CSV row here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("decode", help="decode one syndrome, print JSON")
    p.add_argument("--code", required=True)
    p.add_argument("--error-support", default=None,
                   help="comma-separated error positions; syndrome computed from them")
    p.add_argument("--syndrome-file", default=None)
    p.add_argument("--decoder", choices=("bf", "bfmax-naive", "bfmax-sparse"),
                   default="bfmax-sparse")
    p.add_argument("--iter-max", type=int, required=True)
    p.add_argument("--thresholds", default=None)
    p.add_argument("--seed", type=int, default=0, help="tie-break seed")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("compare", help="naive-vs-sparse differential run and op-count table")
    p.add_argument("--r", type=int, default=13)
    p.add_argument("--v", type=int, default=3)
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--opcount-trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--chunk-size", type=int, default=512)
    p.add_argument("--out", default=None)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
