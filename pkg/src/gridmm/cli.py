"""Command-line front end: estimate, simulate, dse, and compare subcommands."""

from __future__ import annotations

import argparse
import json
import sys

from .arch import ClockSpec, ModelError, ProblemShape, dsp_count, pe_count
from .dse import (
    compare,
    design_point_from_config,
    enumerate_designs,
    predict,
    simulate,
)
from .matrix import save_binary
from .perf import flop_count
from .refdata import load_reference_tables

__all__ = ["main"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _render_table(headers: list[str], rows: list[list], csv: bool) -> str:
    cells = [[_fmt(v) for v in row] for row in rows]
    if csv:
        lines = [",".join(headers)]
        lines += [",".join(row) for row in cells]
        return "\n".join(lines)
    widths = [len(h) for h in headers]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(parts):
        return "  ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out += [line(row) for row in cells]
    return "\n".join(out)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ModelError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"config file {path} is not valid JSON: {exc}") from None


def _cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    point, problem = design_point_from_config(cfg)
    if not point.feasible:
        print("infeasible design point:", file=sys.stderr)
        for v in point.violations:
            print(f"  {v}", file=sys.stderr)
        return 1
    if problem is None:
        raise ModelError("estimate needs a 'problem' section in the config")
    est = predict(point, problem)
    rows = [
        ["grid", f"{point.shape.d0_i}x{point.shape.d0_j}x{point.shape.d0_k}"],
        ["dot_unit_size", point.shape.d_p],
        ["fmax_mhz (assumed)", point.clock.fmax_mhz],
        ["n_dsp", est.n_dsp],
        ["n_pe", est.n_pe],
        ["t_peak_gflops", est.t_peak / 1e9],
        ["b_a_floats_per_cycle", est.b_a],
        ["b_b_floats_per_cycle", est.b_b],
        ["d1_i x d1_j", f"{point.plan.d1_i}x{point.plan.d1_j}"],
        ["read_widths (A, B)", f"{point.plan.b_ga}, {point.plan.b_gb}"],
        ["reuse (r_a, r_b)", f"{point.plan.r_a}, {point.plan.r_b}"],
        ["l_body_cycles", est.l_body],
        ["l_tot_cycles", est.l_tot],
        ["c_percent", est.c_percent],
        ["t_pred_gflops", est.t_pred / 1e9],
        ["compute_stall", est.stall],
        ["problem_flop", flop_count(problem)],
    ]
    print(_render_table(["quantity", "value"], rows, args.format == "csv"))
    for note in point.plan.notes:
        print(f"note: {note}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    point, problem = design_point_from_config(cfg)
    if not point.feasible:
        print("infeasible design point:", file=sys.stderr)
        for v in point.violations:
            print(f"  {v}", file=sys.stderr)
        return 1
    if problem is None:
        raise ModelError("simulate needs a 'problem' section in the config")
    result = simulate(point, problem, fidelity=args.fidelity, seed=args.seed,
                      values=args.values)
    if args.format == "csv":
        print(result.stats.csv_header())
        print(result.stats.to_csv_row())
    else:
        print(result.stats.to_kv_text())
    print(f"result_sha256={result.result_sha256}")
    print(f"matches_oracle={result.matches_oracle}")
    if args.save_result:
        save_binary(result.product, args.save_result)
        print(f"result_written={args.save_result}")
    return 0 if result.matches_oracle else 1


def _parse_range(text: str) -> list[int]:
    """Comma list with inclusive dash ranges, e.g. '1,4-6,8'."""
    values: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            values.update(range(int(lo), int(hi) + 1))
        else:
            values.add(int(part))
    if not values:
        raise ModelError(f"empty range: {text!r}")
    return sorted(values)


def _cmd_dse(args) -> int:
    clock = ClockSpec(args.fmax)
    points = enumerate_designs(
        args.budget,
        _parse_range(args.d0i),
        _parse_range(args.d0j),
        _parse_range(args.d0k),
        _parse_range(args.dp),
        clock,
        max_dp=args.max_dp,
    )
    headers = ["d0_i", "d0_j", "d0_k", "d_p", "n_dsp", "n_pe", "feasible",
               "t_peak_gflops", "d1_i", "d1_j", "b_ga", "b_gb", "r_a", "r_b"]
    if args.d2 is not None:
        headers += ["c_percent", "t_pred_gflops"]
    rows = []
    for point in points:
        s = point.shape
        row = [s.d0_i, s.d0_j, s.d0_k, s.d_p, dsp_count(s), pe_count(s), point.feasible]
        if point.plan is None:
            row += [""] * (len(headers) - len(row))
        else:
            row += [2 * dsp_count(s) * point.clock.fmax_mhz / 1e3,
                    point.plan.d1_i, point.plan.d1_j,
                    point.plan.b_ga, point.plan.b_gb,
                    point.plan.r_a, point.plan.r_b]
            if args.d2 is not None:
                d2i = args.d2 - args.d2 % point.plan.d1_i or point.plan.d1_i
                d2j = args.d2 - args.d2 % point.plan.d1_j or point.plan.d1_j
                d2k = args.d2 - args.d2 % s.d0_k or s.d0_k
                est = predict(point, ProblemShape(d2i, d2j, d2k))
                row += [est.c_percent, est.t_pred / 1e9]
        rows.append(row)
    print(_render_table(headers, rows, args.format == "csv"))
    return 0


def _cmd_compare(args) -> int:
    refs = load_reference_tables(args.refs)
    designs = args.designs.split(",") if args.designs else None
    rows = compare(refs, designs=designs)
    table = []
    for r in rows:
        table.append([
            r.design_id, r.d2_i, r.d2_j, r.d2_k, r.size_ratio,
            "" if r.predicted_c is None else round(r.predicted_c, 4),
            "" if r.e_d_printed is None else r.e_d_printed,
            "" if r.e_d_measured is None else round(r.e_d_measured, 4),
            "" if r.delta is None else round(r.delta, 4),
            "" if r.tolerance is None else r.tolerance,
            r.status,
        ])
    headers = ["design", "d2_i", "d2_j", "d2_k", "ratio", "pred_c",
               "e_D", "e_D_measured", "delta", "tol", "status"]
    print(_render_table(headers, table, args.format == "csv"))
    failures = sum(1 for r in rows if r.status == "fail")
    flagged = sum(1 for r in rows if r.status == "flagged")
    print(f"# {len(rows)} rows, {failures} failed, {flagged} flagged (excluded from pass/fail)")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridmm",
        description="Performance model and simulator for 3D systolic-array "
                    "matrix multiplication designs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="analytic prediction for one config")
    p.add_argument("config", help="JSON config file")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("simulate", help="run the blocked simulator on one config")
    p.add_argument("config", help="JSON config file")
    p.add_argument("--fidelity", choices=("functional", "blocked"), default="blocked")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--values", choices=("ints", "floats"), default="ints",
                   help="operand distribution (ints allow a bitwise oracle check)")
    p.add_argument("--save-result", default=None, metavar="PATH",
                   help="write the product matrix in the flat binary format")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("dse", help="enumerate design points under a DSP budget")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--d0i", required=True, help="range, e.g. '8,16,32' or '1-64'")
    p.add_argument("--d0j", required=True)
    p.add_argument("--d0k", required=True)
    p.add_argument("--dp", required=True)
    p.add_argument("--fmax", type=float, default=368.0,
                   help="assumed clock for every point (MHz)")
    p.add_argument("--d2", type=int, default=None,
                   help="problem size to predict at (rounded down to fit)")
    p.add_argument("--max-dp", type=int, default=None,
                   help="drop dot units larger than this (placement heuristic)")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_dse)

    p = sub.add_parser("compare", help="predictions vs bundled reference data")
    p.add_argument("--refs", default=None, help="reference JSON (default: bundled)")
    p.add_argument("--designs", default=None, help="comma list, e.g. 'E,G,H'")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
