"""Command-line front end: simulate, detect, evaluate, sweep, corr-study.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .errors import DataFormatError, SliceSenseError
from .evaluation import (
    ScoreCard,
    correlation_study,
    covered_fraction,
    exact_fraction,
    run_sweep,
    stage1_errors,
)
from .model import InterferenceGraph
from .pipeline import DetectorOptions, Variant, detect
from .simulator import simulate

USAGE_EXIT = 1
DATA_EXIT = 2
INTERNAL_EXIT = 3


class _Parser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on usage errors; the contract says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="slicesense",
        description="Detect shared congestible resources among network slices "
        "from end-to-end KPI measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_sim = sub.add_parser("simulate", help="generate synthetic measurements")
    p_sim.add_argument("--config", required=True, help="simulation config file")
    p_sim.add_argument("--out", required=True, help="measurement CSV path")
    p_sim.add_argument("--out-truth", required=True, help="ground-truth CSV path")
    p_sim.add_argument("--out-trace", help="optional utilization-trace CSV path")
    p_sim.add_argument("--seed", type=int, help="override the config seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_det = sub.add_parser("detect", help="run the detector on a measurement CSV")
    p_det.add_argument("measurements", help="measurement CSV path")
    p_det.add_argument("--out", required=True, help="report JSON path")
    p_det.add_argument("--config", help="optional detector config file")
    p_det.add_argument("--variant", choices=[v.value for v in Variant], help="correlation variant")
    p_det.add_argument("--theta", type=float, help="relative loading threshold in (0, 1]")
    p_det.add_argument(
        "--intermediates",
        action="store_true",
        help="record the correlation matrix, graph and cliques in the report",
    )
    p_det.set_defaults(func=cmd_detect)

    p_eval = sub.add_parser("evaluate", help="score a report against ground truth")
    p_eval.add_argument("report", help="report JSON path")
    p_eval.add_argument("truth", help="ground-truth CSV path")
    p_eval.add_argument("--out", help="optional scorecard JSON path")
    p_eval.set_defaults(func=cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("spec", help="sweep spec file")
    p_sweep.add_argument("--out", required=True, help="results CSV path")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    p_sweep.add_argument("--plots", help="figure directory (default: <out stem>_figures)")
    p_sweep.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_sweep.set_defaults(func=cmd_sweep)

    p_corr = sub.add_parser("corr-study", help="label pairwise coefficients for one run")
    p_corr.add_argument("--config", required=True, help="simulation config file")
    p_corr.add_argument("--out", required=True, help="labeled-coefficient CSV path")
    p_corr.add_argument("--seed", type=int, help="override the config seed")
    p_corr.add_argument("--plots", help="figure directory (default: <out stem>_figures)")
    p_corr.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_corr.set_defaults(func=cmd_corr_study)

    return parser


def cmd_simulate(args) -> int:
    config = io.read_sim_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out = simulate(config)
    io.write_measurements_csv(args.out, out.measurements)
    io.write_truth_csv(args.out_truth, out.truth)
    if args.out_trace:
        io.write_utilization_csv(args.out_trace, out.utilization_trace)
    print(
        f"simulated N={config.n_slices} R={config.n_resources} "
        f"T={config.n_periods} seed={config.seed} -> {args.out}, {args.out_truth}"
    )
    return 0


def cmd_detect(args) -> int:
    m = io.read_measurements_csv(args.measurements)
    if args.config:
        opts = io.read_detector_options(args.config)
    else:
        opts = DetectorOptions()
    overrides = {}
    if args.variant:
        overrides["variant"] = Variant.from_cli(args.variant)
    if args.theta is not None:
        overrides["theta"] = args.theta
    if args.intermediates:
        overrides["record_intermediates"] = True
    if overrides:
        opts = replace(opts, **overrides)
    report = detect(m, opts)
    io.write_report_json(args.out, report)
    print(
        f"detected {report.estimated_count} shared resource(s) among "
        f"{m.n_slices} slices (variant={report.variant.name}) -> {args.out}"
    )
    return 0


def cmd_evaluate(args) -> int:
    data = io.read_report_json(args.report)
    truth = io.read_truth_csv(args.truth)
    n = int(data["n_slices"])
    if n != truth.n_slices:
        raise DataFormatError(
            f"dimension mismatch: report has {n} slices, truth has {truth.n_slices}"
        )
    estimate = np.asarray(data["estimate"], dtype=np.int8).reshape(-1, n)
    missed = false_pos = None
    inter = data.get("intermediates")
    if inter:
        graph = InterferenceGraph(np.asarray(inter["graph"], dtype=np.int8))
        missed, false_pos = stage1_errors(truth, graph)
    card = ScoreCard(
        exact_fraction=exact_fraction(truth, estimate),
        covered_fraction=covered_fraction(truth, estimate),
        estimated_count=estimate.shape[0],
        stage1_missed=missed,
        stage1_false_pos=false_pos,
    )
    print(io.format_scorecard(card))
    if args.out:
        io.write_scorecard_json(args.out, card)
    return 0


def _figure_dir(args) -> Path | None:
    if args.no_plots:
        return None
    if args.plots:
        return Path(args.plots)
    out = Path(args.out)
    return out.with_name(out.stem + "_figures")


def cmd_sweep(args) -> int:
    spec = io.read_sweep_spec(args.spec)
    rows = run_sweep(spec, jobs=max(1, args.jobs))
    io.write_sweep_csv(args.out, rows)
    partial = sum(1 for r in rows if r.failures)
    msg = f"swept {len(rows)} cells x {spec.replicates} replicates -> {args.out}"
    if partial:
        msg += f" ({partial} partial cells)"
    fig_dir = _figure_dir(args)
    if fig_dir is not None:
        from .figures import render_sweep_figures

        written = render_sweep_figures(rows, fig_dir)
        msg += f"; {len(written)} figures -> {fig_dir}"
    print(msg)
    return 0


def cmd_corr_study(args) -> int:
    config = io.read_sim_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    records = correlation_study(config)
    io.write_corr_csv(args.out, records)
    sharing = sum(1 for r in records if r.sharing)
    msg = (
        f"labeled {len(records)} slice pairs ({sharing} sharing) "
        f"for N={config.n_slices} T={config.n_periods} -> {args.out}"
    )
    fig_dir = _figure_dir(args)
    if fig_dir is not None:
        from .figures import render_corr_figures

        written = render_corr_figures(records, fig_dir)
        msg += f"; {len(written)} figures -> {fig_dir}"
    print(msg)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SliceSenseError as exc:
        print(f"slicesense: error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except Exception:
        print("slicesense: internal error:", file=sys.stderr)
        traceback.print_exc()
        return INTERNAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
