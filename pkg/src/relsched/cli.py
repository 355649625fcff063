"""Command-line interface: instance generation, solving, model export and a
benchmark harness writing per-instance CSV rows plus per-cell averages."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional

from .bnp import BpConfig, SolveReport, bp_solve
from .bounds import heuristic_ub, oracle_opt, trivial_lb
from .instance import GenParams, Instance, generate, read_instance, write_instance
from .master import ColumnPool, cg_solve, columns_from_schedule, initial_columns
from .milp import build_af, build_ti, export_model
from .timegraph import build_graph

MANIFEST_FIELDS = ["path", "n", "m", "alpha", "pmax", "wmax", "seed"]
BENCH_FIELDS = [
    "instance", "n", "m", "alpha", "pmax", "method",
    "lb_lp", "lb", "ub", "opt", "cols", "pct_cols_e", "nodes", "time",
]


def _parse_list(text: str, cast) -> list:
    return [cast(tok) for tok in text.split(",") if tok.strip()]


def cmd_gen(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    cell_id = 0
    for n in _parse_list(args.n, int):
        for m in _parse_list(args.m, int):
            for alpha in _parse_list(args.alpha, float):
                for pmax in _parse_list(args.pmax, int):
                    for k in range(args.count):
                        seed = args.seed + 1000 * cell_id + k
                        params = GenParams(n=n, m=m, alpha=alpha, pmax=pmax, wmax=args.wmax, seed=seed)
                        inst = generate(params)
                        name = f"inst_n{n}_m{m}_a{alpha:g}_p{pmax}_s{k}.txt"
                        write_instance(inst, outdir / name)
                        rows.append({
                            "path": name, "n": n, "m": m, "alpha": f"{alpha:g}",
                            "pmax": pmax, "wmax": args.wmax, "seed": seed,
                        })
                    cell_id += 1
    manifest = outdir / args.manifest
    with open(manifest, "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} instances and {manifest}")
    return 0


def _parse_method(spec: str) -> tuple[str, str, Optional[str]]:
    """'bp:lc2l+helem' -> (method, pricing, heuristic)."""
    method, _, rest = spec.partition(":")
    pricing, heuristic = "lc2l", None
    if rest:
        pricing, _, htoken = rest.partition("+")
        heuristic = htoken or None
    elif method == "bp":
        heuristic = "helem"
    if method not in ("bp", "cg-root"):
        raise ValueError(f"unknown method {spec!r}")
    if pricing not in ("lca", "lcp", "lc2l"):
        raise ValueError(f"unknown pricing {pricing!r}")
    if heuristic not in (None, "helem", "h1cycle"):
        raise ValueError(f"unknown heuristic {heuristic!r}")
    return method, pricing, heuristic


def _cg_root_report(instance: Instance, pricing: str, heuristic: Optional[str], time_limit,
                    keep_trace: bool = False) -> SolveReport:
    t0 = time.monotonic()
    ub_sched = heuristic_ub(instance)
    t_ub = time.monotonic() - t0
    pool = ColumnPool(instance)
    for col in initial_columns(instance):
        pool.add(col)
    for col in columns_from_schedule(instance, ub_sched):
        pool.add(col)
    graph = build_graph(instance)
    cg = cg_solve(
        instance, graph, pool, exact=pricing, heuristic=heuristic,
        time_limit=None if time_limit is None else max(0.0, time_limit - t_ub),
        keep_trace=keep_trace,
    )
    ub = ub_sched.objective
    if cg.status == "optimal":
        lb_lp = cg.z
    else:
        lb_lp = cg.best_lagrangean if cg.best_lagrangean is not None else float(trivial_lb(instance))
    lb = min(math.ceil(lb_lp - 1e-6), ub)
    wall = time.monotonic() - t0
    n_cols = cg.added_exact + cg.added_heur
    return SolveReport(
        status="optimal" if cg.status == "optimal" else "time-limit",
        ub=ub,
        lb=lb,
        lb_lp=lb_lp,
        gap_pct=100.0 * (ub - lb) / ub if ub else 0.0,
        gap_lp_pct=max(0.0, 100.0 * (ub - lb_lp) / ub) if ub else 0.0,
        nodes=1,
        columns=n_cols,
        columns_exact=cg.added_exact,
        wall_time=wall,
        time_ub=t_ub,
        time_root=wall - t_ub,
        schedule=ub_sched,
        cg_trace=[(0,) + row for row in cg.trace],
    )


def _run_method(instance: Instance, spec: str, time_limit, *, traces: bool = False) -> SolveReport:
    method, pricing, heuristic = _parse_method(spec)
    if method == "bp":
        cfg = BpConfig(
            pricing=pricing, heuristic=heuristic, time_limit=time_limit,
            keep_node_trace=traces, keep_cg_trace=traces,
        )
        return bp_solve(instance, cfg)
    return _cg_root_report(instance, pricing, heuristic, time_limit, keep_trace=traces)


def cmd_solve(args) -> int:
    try:
        instance = read_instance(args.instance)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.method == "oracle":
        sched = oracle_opt(instance)
        print(f"optimum {sched.objective}")
        for i, machine in enumerate(sched.machines):
            print(f"machine {i + 1}: " + " ".join(f"j{j}@{s}" for j, s in machine))
        return 0
    if args.method == "heuristic":
        sched = heuristic_ub(instance)
        print(f"heuristic value {sched.objective}")
        for i, machine in enumerate(sched.machines):
            print(f"machine {i + 1}: " + " ".join(f"j{j}@{s}" for j, s in machine))
        return 0
    if args.method in ("export-ti", "export-af"):
        if args.method == "export-ti":
            model = build_ti(instance)
            default = Path(args.instance).with_suffix(".ti.mps")
        else:
            model = build_af(instance, build_graph(instance))
            default = Path(args.instance).with_suffix(".af.mps")
        out = Path(args.out) if args.out else default
        export_model(model, out, "mps")
        print(f"wrote {out}")
        return 0

    spec = args.method
    if args.method == "bp":
        spec = f"bp:{args.pricing}" + (f"+{args.heuristic}" if args.heuristic != "none" else "")
    elif args.method == "cg-root":
        spec = f"cg-root:{args.pricing}" + (f"+{args.heuristic}" if args.heuristic != "none" else "")
    want_traces = bool(args.cg_trace or args.node_trace)
    report = _run_method(instance, spec, args.time_limit, traces=want_traces)
    payload = report.to_dict()
    payload["instance"] = str(args.instance)
    payload["method"] = spec
    out = Path(args.out) if args.out else Path(args.instance).with_suffix(".report.json")
    with open(out, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.cg_trace:
        with open(args.cg_trace, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "iteration", "z", "reduced_cost", "pricer", "pool"])
            for row in report.cg_trace:
                writer.writerow([row[0], row[1], f"{row[2]:.6f}", f"{row[3]:.6f}", row[4], row[5]])
    if args.node_trace:
        with open(args.node_trace, "w", newline="", encoding="ascii") as fh:
            fields = ["node", "parent", "depth", "lb", "z", "pool",
                      "branch_job", "mid", "window_lo", "window_hi"]
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(report.node_trace)
    print(
        f"{report.status}: ub={report.ub} lb={report.lb} gap={report.gap_pct:.4f}% "
        f"nodes={report.nodes} cols={report.columns} time={report.wall_time:.3f}s -> {out}"
    )
    return 0


def cmd_export(args) -> int:
    try:
        instance = read_instance(args.instance)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.model == "ti":
        model = build_ti(instance)
        default = Path(args.instance).with_suffix(".ti.mps")
    else:
        model = build_af(instance, build_graph(instance))
        default = Path(args.instance).with_suffix(".af.mps")
    out = Path(args.out) if args.out else default
    export_model(model, out, "mps")
    print(f"wrote {out}")
    return 0


def _fmt_row(name, meta, method, report: SolveReport, with_time: bool) -> dict:
    return {
        "instance": name,
        "n": meta.get("n", ""),
        "m": meta.get("m", ""),
        "alpha": meta.get("alpha", ""),
        "pmax": meta.get("pmax", ""),
        "method": method,
        "lb_lp": f"{report.lb_lp:.4f}",
        "lb": report.lb,
        "ub": report.ub,
        "opt": 1 if (report.status == "optimal" and report.lb == report.ub) else 0,
        "cols": report.columns,
        "pct_cols_e": f"{report.pct_cols_exact:.2f}",
        "nodes": report.nodes,
        "time": f"{report.wall_time:.3f}" if with_time else "",
    }


def cmd_bench(args) -> int:
    manifest = Path(args.manifest)
    base = manifest.parent
    with open(manifest, newline="", encoding="ascii") as fh:
        entries = list(csv.DictReader(fh))
    methods = [tok.strip() for tok in args.methods.split(",") if tok.strip()]
    for spec in methods:
        _parse_method(spec)
    with_time = args.times == "wall"

    rows = []
    for entry in entries:
        path = base / entry["path"]
        try:
            instance = read_instance(path)
        except OSError as exc:
            print(f"skipping {entry['path']}: {exc}", file=sys.stderr)
            continue
        meta = {k: entry.get(k, "") for k in ("n", "m", "alpha", "pmax")}
        if not meta["n"]:
            meta["n"] = instance.n
        if not meta["m"]:
            meta["m"] = instance.m
        for spec in methods:
            report = _run_method(instance, spec, args.time_limit)
            rows.append(_fmt_row(Path(entry["path"]).stem, meta, spec, report, with_time))

    # per-(n, m) cell averages, then an overall line, per method; the opt
    # column is summed (count of solved instances), everything else averaged
    def aggregate(label: str, sel: list[dict], method: str) -> dict:
        k = len(sel)
        return {
            "instance": label, "n": "", "m": "", "alpha": "", "pmax": "",
            "method": method,
            "lb_lp": f"{sum(float(r['lb_lp']) for r in sel) / k:.4f}",
            "lb": f"{sum(int(r['lb']) for r in sel) / k:.4f}",
            "ub": f"{sum(int(r['ub']) for r in sel) / k:.4f}",
            "opt": sum(int(r["opt"]) for r in sel),
            "cols": f"{sum(int(r['cols']) for r in sel) / k:.4f}",
            "pct_cols_e": f"{sum(float(r['pct_cols_e']) for r in sel) / k:.2f}",
            "nodes": f"{sum(int(r['nodes']) for r in sel) / k:.4f}",
            "time": f"{sum(float(r['time']) for r in sel) / k:.3f}" if with_time else "",
        }

    def add_aggregates(rows_in: list[dict]) -> list[dict]:
        aggs = []
        methods_seen = sorted({r["method"] for r in rows_in})
        cells = sorted({(r["n"], r["m"]) for r in rows_in}, key=lambda t: (str(t[0]), str(t[1])))
        for n, m in cells:
            for method in methods_seen:
                sel = [r for r in rows_in if (r["n"], r["m"], r["method"]) == (n, m, method)]
                if sel:
                    aggs.append(aggregate(f"avg(n={n};m={m})", sel, method))
        for method in methods_seen:
            sel = [r for r in rows_in if r["method"] == method]
            if sel:
                aggs.append(aggregate("avg(all)", sel, method))
        return aggs

    out = Path(args.out)
    with open(out, "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
        writer.writerows(add_aggregates(rows))
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate random instances and a manifest")
    g.add_argument("--n", required=True, help="job counts, comma separated")
    g.add_argument("--m", required=True, help="machine counts, comma separated")
    g.add_argument("--alpha", required=True, help="release tightness values, comma separated")
    g.add_argument("--pmax", default="100", help="max processing times, comma separated")
    g.add_argument("--wmax", type=int, default=10)
    g.add_argument("--count", type=int, default=5, help="instances per parameter cell")
    g.add_argument("--seed", type=int, default=1, help="master seed; per-instance seeds derive from it")
    g.add_argument("--outdir", required=True)
    g.add_argument("--manifest", default="manifest.csv")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve or export one instance")
    s.add_argument("instance")
    s.add_argument(
        "--method",
        default="bp",
        choices=["bp", "cg-root", "export-ti", "export-af", "oracle", "heuristic"],
    )
    s.add_argument("--pricing", default="lc2l", choices=["lca", "lcp", "lc2l"])
    s.add_argument("--heuristic", default="helem", choices=["helem", "h1cycle", "none"])
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--seed", type=int, default=0, help="reserved; recorded in reports")
    s.add_argument("--out", default=None)
    s.add_argument("--cg-trace", default=None, help="write the column-generation iteration trace CSV here")
    s.add_argument("--node-trace", default=None, help="write the search-tree node log CSV here")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("export", help="write a MILP model file for an instance")
    e.add_argument("instance")
    e.add_argument("--model", required=True, choices=["ti", "af"])
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_export)

    b = sub.add_parser("bench", help="run methods over a manifest, write CSV")
    b.add_argument("manifest")
    b.add_argument("--methods", default="bp:lc2l+helem")
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--times", default="wall", choices=["wall", "none"],
                   help="'none' blanks the time column for byte-identical reruns")
    b.add_argument("--out", default="bench.csv")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
