"""Command-line entry point: ``omla <subcommand> ...``.

Exit codes: 0 success, 1 runtime/input error, 2 bad flags, 3 contract
violation (invalid instance, illegal policy decision), 4 failed check.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import time as dtime
from pathlib import Path

import numpy as np

from . import gen, ingest, model
from .lp import build_off, dump as dump_lp, solve
from .model import UNLIMITED, InvalidInstance, is_unlimited
from .oracle import OracleLimitError, check_limits, exact_opt
from .policies import POLICY_NAMES, ContractViolation, make_policy, prepare
from .sim import RandomStream, monte_carlo, run_episode
from .tables import build_tables, dump_csv
from .verify import check_all, competitive_constant

log = logging.getLogger("omla")

EXIT_ERROR, EXIT_FLAGS, EXIT_CONTRACT, EXIT_CHECK = 1, 2, 3, 4

BENCH_HEADER = "instance_id,policy,delta_max,L,n,seed,mean,stderr,lp_off,ratio,bound"
SIM_HEADER = "instance_id,policy,n,seed,mean,stderr"


def _budget_arg(text: str):
    if text.lower() in ("inf", "unlimited"):
        return UNLIMITED
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("budget cap must be >= 1 or 'inf'")
    return value


def _read(path) -> model.Instance:
    try:
        return model.load(path)
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        # malformed or inconsistent instance JSON breaks the input contract
        raise InvalidInstance(f"{path}: {exc}") from exc


def _load(path) -> tuple[model.Instance, str]:
    inst = _read(path)
    report = model.validate(inst)
    if not report.ok:
        raise InvalidInstance(str(report))
    return inst, Path(path).stem


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


# subcommands ------------------------------------------------------------------

def cmd_validate(args) -> int:
    inst = _read(args.instance)
    report = model.validate(inst)
    print(report)
    return 0 if report.ok else EXIT_CHECK


def cmd_solve_lp(args) -> int:
    inst, _ = _load(args.instance)
    problem = build_off(inst)
    if args.dump:
        dump_lp(problem, args.dump)
    sol = solve(problem, tol=args.tol, backend=args.backend)
    print(f"LP(Off) = {sol.objective!r}  rows={problem.n_rows} cols={problem.n_cols} status={sol.status}")
    if args.out:
        Path(args.out).write_text(json.dumps({"objective": sol.objective, "status": sol.status,
                                              "shape": list(sol.x.shape), "x": sol.x.tolist()}))
    return 0


def cmd_tables(args) -> int:
    inst, _ = _load(args.instance)
    sol = solve(build_off(inst), tol=args.tol, backend=args.backend)
    tables = build_tables(inst, sol)
    print(f"sum_u R_(u,1) = {tables.expected_reward()!r}  LP(Off) = {sol.objective!r}")
    if args.csv:
        dump_csv(tables, args.csv)
    return 0


def cmd_simulate(args) -> int:
    inst, iid = _load(args.instance)
    policies = args.policy or ["omla"]
    art = prepare(inst, policies, backend=args.backend, tol=args.tol)
    lines = [SIM_HEADER]
    for name in policies:
        pol = make_policy(name, art)
        summ = monte_carlo(inst, pol, args.n, args.seed, jobs=args.jobs)
        lines.append(summ.csv_row(iid))
    if args.trace:
        pol = make_policy(policies[0], art)
        trace = run_episode(inst, pol, RandomStream(args.seed), 0, record=True)
        Path(args.trace).write_text(trace.to_jsonl())
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def bench_rows(inst, iid, n, seed, jobs=1, backend="highs", tol=1e-7) -> list:
    art = prepare(inst, POLICY_NAMES, backend=backend, tol=tol)
    lp_off = art.solution.objective
    bound = competitive_constant(inst)
    dmax = "inf" if is_unlimited(inst.delta_max) else str(int(inst.delta_max))
    rows = []
    for name in POLICY_NAMES:
        summ = monte_carlo(inst, make_policy(name, art), n, seed, jobs=jobs)
        ratio = summ.mean / lp_off if lp_off > 0 else float("nan")
        rows.append(dict(instance_id=iid, policy=name, delta_max=dmax, L=inst.L, n=n, seed=seed,
                         mean=summ.mean, stderr=summ.stderr, lp_off=lp_off, ratio=ratio, bound=bound))
    return rows


def _bench_csv(rows) -> str:
    out = [BENCH_HEADER]
    for r in rows:
        out.append(",".join([r["instance_id"], r["policy"], r["delta_max"], str(r["L"]), str(r["n"]),
                             str(r["seed"]), _fmt(r["mean"]), _fmt(r["stderr"]), _fmt(r["lp_off"]),
                             _fmt(r["ratio"]), _fmt(r["bound"])]))
    return "\n".join(out) + "\n"


def bench_svg(rows) -> str:
    """Bar chart of ratio per policy with the theoretical bound as a line."""
    w, h, pad, bar = 60 * len(rows) + 80, 260, 40, 36
    top = max([1.0] + [r["ratio"] for r in rows if np.isfinite(r["ratio"])])
    y = lambda v: h - pad - (h - 2 * pad) * v / top
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">',
             f'<line x1="{pad}" y1="{h - pad}" x2="{w - 10}" y2="{h - pad}" stroke="black"/>']
    for i, r in enumerate(rows):
        x = pad + 10 + 60 * i
        v = r["ratio"] if np.isfinite(r["ratio"]) else 0.0
        parts.append(f'<rect x="{x}" y="{y(v):.2f}" width="{bar}" height="{h - pad - y(v):.2f}" fill="#d9822b"/>')
        parts.append(f'<text x="{x + bar / 2}" y="{h - pad + 14}" text-anchor="middle">{r["policy"]}</text>')
        parts.append(f'<text x="{x + bar / 2}" y="{y(v) - 4:.2f}" text-anchor="middle">{v:.3f}</text>')
    if rows:
        b = rows[0]["bound"]
        parts.append(f'<line x1="{pad}" y1="{y(b):.2f}" x2="{w - 10}" y2="{y(b):.2f}" stroke="#c00" stroke-dasharray="4 3"/>')
        parts.append(f'<text x="{w - 12}" y="{y(b) - 4:.2f}" text-anchor="end" fill="#c00">bound {b:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_bench(args) -> int:
    inst, iid = _load(args.instance)
    rows = bench_rows(inst, iid, args.n, args.seed, jobs=args.jobs, backend=args.backend, tol=args.tol)
    _emit(_bench_csv(rows), args.out)
    if args.svg:
        Path(args.svg).write_text(bench_svg(rows))
    return 0


def cmd_verify(args) -> int:
    inst, _ = _load(args.instance)
    tiny = True
    try:
        check_limits(inst)
    except OracleLimitError:
        tiny = False
    opt = exact_opt(inst).value if tiny else None
    report = check_all(inst, tol=args.tol, backend=args.backend, run_oracle=False, opt_value=opt)
    if opt is not None:
        print(f"exact_opt = {opt!r}")
    print(report.table())
    if args.json:
        Path(args.json).write_text(report.to_json())
    return 0 if report.ok else EXIT_CHECK


def cmd_gen(args) -> int:
    cfg = gen.SyntheticConfig(n_machines=args.machines, n_tasks=args.tasks, T=args.T, L=args.L,
                              edge_prob=args.edge_prob, delta=args.delta, seed=args.seed)
    inst = gen.synthetic(cfg)
    _emit(json.dumps(model.to_dict(inst), indent=1, sort_keys=True) + "\n", args.out)
    return 0


def cmd_hardness(args) -> int:
    inst = gen.hardness(args.eps)
    _emit(json.dumps(model.to_dict(inst), indent=1, sort_keys=True) + "\n", args.out)
    return 0


def cmd_ingest(args) -> int:
    hh, mm = (int(x) for x in args.start.split(":"))
    grid = ingest.GridConfig(lon_min=args.lon[0], lon_max=args.lon[1], lat_min=args.lat[0],
                             lat_max=args.lat[1], cell=args.cell, slot_minutes=args.slot_minutes,
                             slots=args.slots, start=dtime(hh, mm), days=args.days)
    trips, skipped = ingest.load_trips(args.csv, grid)
    inst, report = ingest.build_instance(trips, grid, min_trips=args.min_trips, n_taxis=args.taxis,
                                         delta=args.delta, seed=args.seed, sidecar=args.sidecar)
    report["skipped_rows"] = skipped
    model.save(inst, args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1) + "\n")
    print(f"{inst.n_machines} machines, {inst.n_tasks} tasks, {inst.n_edges} edges; "
          f"{len(trips)} trips kept, {skipped} skipped")
    return 0


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="omla", description="Online machine and level assignment toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--tol", type=float, default=1e-7)
        p.add_argument("--backend", choices=["highs", "simplex"], default="highs")

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve-lp", help="solve the offline LP")
    p.add_argument("instance")
    p.add_argument("--out", help="write the solution as JSON")
    p.add_argument("--dump", help="write the LP in sparse text form")
    solver_flags(p)
    p.set_defaults(func=cmd_solve_lp)

    p = sub.add_parser("tables", help="compute activation/baseline tables")
    p.add_argument("instance")
    p.add_argument("--csv", help="dump R as delta,u,t,R rows")
    solver_flags(p)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("simulate", help="Monte Carlo evaluation of policies")
    p.add_argument("instance")
    p.add_argument("--policy", action="append", choices=POLICY_NAMES)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--trace", help="JSON-lines trace of episode 0 of the first policy")
    solver_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="all six policies with common random numbers")
    p.add_argument("instance")
    p.add_argument("--n", type=int, default=250)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--svg")
    solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="check every bound of the analysis")
    p.add_argument("instance")
    p.add_argument("--json")
    solver_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="synthetic instance")
    p.add_argument("--machines", type=int, default=10)
    p.add_argument("--tasks", type=int, default=25)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--edge-prob", type=float, default=0.1)
    p.add_argument("--delta", type=_budget_arg, default=UNLIMITED)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("hardness", help="two-slot hardness instance")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hardness)

    p = sub.add_parser("ingest", help="build an instance from a trip CSV")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--lon", type=float, nargs=2, default=(-75.0, -73.0))
    p.add_argument("--lat", type=float, nargs=2, default=(40.4, 41.0))
    p.add_argument("--cell", type=float, default=0.02)
    p.add_argument("--slot-minutes", type=float, default=1.0)
    p.add_argument("--slots", type=int, default=60)
    p.add_argument("--start", default="19:00")
    p.add_argument("--days", type=int, default=23)
    p.add_argument("--min-trips", type=int, default=6)
    p.add_argument("--taxis", type=int)
    p.add_argument("--delta", type=_budget_arg, default=UNLIMITED)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sidecar", help="JSON with one delay pmf per level")
    p.set_defaults(func=cmd_ingest)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("OMLA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InvalidInstance, ContractViolation) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
