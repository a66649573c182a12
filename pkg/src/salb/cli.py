"""Command-line front end: instance generation, single solves, batch
experiments, oracle audits, and lower-bound runs.

Reports are CSV rows (one per seed x algorithm cell) backed by JSON
traces that let every number be recomputed. Runs are reproducible:
identical configuration and seeds produce byte-identical instance
files and CSV output. Wall-clock timing is therefore opt-in
(--timing); without it the time_ms column is written as 0 and the real
timings live only in the traces.

Exit codes: 0 success, 1 runtime failure, 2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

from . import interp, metric, mrr, setfn

CSV_HEADER = "seed,algo,n,m,beta,rtc,rpc,lb,alpha_max,iters,time_ms"


def _parse_seeds(text: str) -> list[int]:
    """'1:20' is an inclusive range, '1,5,9' an explicit list."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def _parse_num_list(text: str, cast) -> list:
    return [cast(s) for s in text.split(",") if s]


def _workers() -> int:
    cap = os.environ.get("SALB_THREADS")
    limit = int(cap) if cap else os.cpu_count() or 1
    return max(1, limit)


def _instance_path(out: Path, seed: int, m: int, n: int, beta: float) -> Path:
    return out / f"instance_s{seed}_m{m}_n{n}_b{beta:g}.json"


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _parse_seeds(args.seeds if args.seeds else str(args.seed))
    for seed in seeds:
        inst = mrr.generate_instance(seed, args.m, args.n, args.beta, args.extent)
        path = _instance_path(out, seed, args.m, args.n, args.beta)
        path.write_text(mrr.instance_to_json(inst))
        print(path)
    return 0


def _pipeline_config(args) -> mrr.PipelineConfig:
    return mrr.PipelineConfig(
        max_iters=args.max_iters,
        mlb_mode=args.mlb,
        node_budget=args.mlb_budget,
        lb_node_budget=args.lb_budget,
    )


def cmd_solve(args) -> int:
    inst = mrr.instance_from_json(Path(args.instance).read_text())
    report = mrr.run_pipeline(inst, args.algo, _pipeline_config(args))
    print(CSV_HEADER)
    print(_csv_row_from_dict(mrr.report_to_dict(report), args.timing))
    trace_path = Path(args.trace) if args.trace else Path(args.instance).with_suffix(f".{args.algo}.trace.json")
    trace_path.write_text(json.dumps(mrr.report_to_dict(report), sort_keys=True, indent=1) + "\n")
    print(f"trace: {trace_path}", file=sys.stderr)
    return 0


def _run_cell(task: dict) -> dict:
    inst = mrr.generate_instance(task["seed"], task["m"], task["n"], task["beta"], task["extent"])
    cfg = mrr.PipelineConfig(
        max_iters=task["max_iters"],
        mlb_mode=task["mlb"],
        node_budget=task["mlb_budget"],
        lb_node_budget=task["lb_budget"],
    )
    try:
        report = mrr.run_pipeline(inst, task["algo"], cfg)
        return {"task": task, "report": mrr.report_to_dict(report)}
    except Exception as exc:  # record the failure, keep the grid running
        return {"task": task, "error": f"{type(exc).__name__}: {exc}"}


def cmd_experiment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traces_dir = out / "traces"
    traces_dir.mkdir(exist_ok=True)
    seeds = _parse_seeds(args.seeds)
    ns = _parse_num_list(args.n, int)
    betas = _parse_num_list(args.beta, float)
    algos = _parse_num_list(args.algo, str)
    for algo in algos:
        if algo not in mrr.ALGORITHMS:
            print(f"unknown algorithm {algo!r}; choose from {mrr.ALGORITHMS}", file=sys.stderr)
            return 2

    tasks = [
        {
            "seed": seed,
            "m": args.m,
            "n": n,
            "beta": beta,
            "algo": algo,
            "extent": args.extent,
            "max_iters": args.max_iters,
            "mlb": args.mlb,
            "mlb_budget": args.mlb_budget,
            "lb_budget": args.lb_budget,
        }
        for n in ns
        for beta in betas
        for seed in seeds
        for algo in algos
    ]

    workers = min(_workers(), max(1, len(tasks)))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        results = [_run_cell(t) for t in tasks]

    rows = []
    failures = []
    cells: dict[tuple, list[dict]] = {}
    for res in results:
        task = res["task"]
        if "error" in res:
            failures.append((task, res["error"]))
            continue
        rep = res["report"]
        name = f"s{task['seed']}_m{task['m']}_n{task['n']}_b{task['beta']:g}_{task['algo']}.json"
        (traces_dir / name).write_text(json.dumps(rep, sort_keys=True, indent=1) + "\n")
        rows.append(_csv_row_from_dict(rep, args.timing))
        cells.setdefault((task["n"], task["beta"], task["algo"]), []).append(rep)

    csv_path = out / "report.csv"
    csv_path.write_text("\n".join([CSV_HEADER, *rows]) + "\n")
    summary = _summarize(cells, args.timing)
    summary_path = out / "summary.csv"
    summary_path.write_text(summary["csv"])
    print(summary["markdown" if args.markdown else "plain"], end="")
    print(f"\nreport: {csv_path}\nsummary: {summary_path}\ntraces: {traces_dir}")
    for task, err in failures:
        print(f"FAILED {task['algo']} seed={task['seed']} n={task['n']} beta={task['beta']}: {err}", file=sys.stderr)
    return 0 if not failures else 1


def _csv_row_from_dict(rep: dict, timing: bool) -> str:
    ms = rep["times"].get("total", 0.0) * 1000.0 if timing else 0.0
    return ",".join(
        [
            str(rep["seed"] if rep["seed"] is not None else ""),
            rep["algo"],
            str(rep["n"]),
            str(rep["m"]),
            repr(float(rep["beta"])),
            repr(rep["rtc"]),
            repr(rep["rpc"]),
            repr(rep["lb"]),
            repr(rep["alpha_max"]),
            str(rep["iters"]),
            repr(ms),
        ]
    )


def _summarize(cells: dict, timing: bool) -> dict:
    def mean(xs):
        return sum(xs) / len(xs) if xs else 0.0

    header = ["n", "beta", "algo", "runs", "mean_rtc", "mean_rpc", "mean_lb", "mean_alpha_max", "mean_pseudo_curv", "mean_time_ms"]
    table = []
    for (n, beta, algo) in sorted(cells):
        reps = cells[(n, beta, algo)]
        table.append(
            [
                n,
                beta,
                algo,
                len(reps),
                mean([r["rtc"] for r in reps]),
                mean([r["rpc"] for r in reps]),
                mean([r["lb"] for r in reps]),
                mean([r["alpha_max"] for r in reps]),
                mean([r["pseudo_curvature"] for r in reps]),
                mean([r["times"].get("total", 0.0) for r in reps]) * 1000.0 if timing else 0.0,
            ]
        )
    csv_lines = [",".join(header)]
    for row in table:
        csv_lines.append(",".join(f"{v:.4f}" if isinstance(v, float) else str(v) for v in row))
    plain = "\n".join(csv_lines) + "\n"
    md_lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in table:
        md_lines.append("| " + " | ".join(f"{v:.2f}" if isinstance(v, float) else str(v) for v in row) + " |")
    markdown = "\n".join(md_lines) + "\n"
    return {"csv": plain, "plain": plain, "markdown": markdown}


def _audit_oracle(payload: dict, path: Path):
    if "d" in payload:
        m = metric.metric_from_json(path.read_text())
        return metric.mst_oracle(m), "spanning-tree cost"
    if "connect" in payload:
        inst = metric.facility_from_json(path.read_text())
        return metric.facility_oracle(inst), "facility location"
    if "samples" in payload:
        coll = interp.samples_from_json(path.read_text())
        return interp.interp_oracle(coll), "interpolation"
    raise ValueError("unrecognized oracle file: expected keys 'd', 'connect', or 'samples'")


def cmd_audit(args) -> int:
    path = Path(args.file)
    if path.suffix == ".csv" or args.traces:
        return _audit_csv(path, Path(args.traces) if args.traces else path.parent / "traces")
    payload = json.loads(path.read_text())
    oracle, kind = _audit_oracle(payload, path)
    print(f"{path}: {kind} oracle over n={oracle.ground.n}")
    for prop in setfn.AUDIT_PROPERTIES:
        rep = setfn.audit(oracle, prop)
        print("  " + rep.describe(oracle.ground))
    if oracle.ground.n <= 12:
        try:
            kappa = setfn.curvature(oracle, oracle.ground.full_mask)
            note = "  (exceeds 1: negative marginals, outside the nondecreasing regime)" if kappa > 1 + setfn.TOL else ""
            print(f"  total curvature: {kappa:.6g}{note}")
        except ValueError as exc:
            print(f"  total curvature: undefined ({exc})")
    return 0


def _audit_csv(csv_path: Path, traces_dir: Path) -> int:
    """Round-trip audit: every CSV number must be recomputable from the
    emitted traces (timing excluded; it is measurement, not result)."""
    rows = csv_path.read_text().strip().split("\n")
    if rows[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header in {csv_path}")
    bad = 0
    for line in rows[1:]:
        seed, algo, n, m, beta, rtc, rpc, lb, alpha, iters, _ = line.split(",")
        name = f"s{seed}_m{m}_n{n}_b{float(beta):g}_{algo}.json"
        trace = json.loads((traces_dir / name).read_text())
        inst = mrr.generate_instance(int(seed), int(m), int(n), float(beta))
        ok = (
            repr(trace["rtc"]) == rtc
            and repr(trace["rpc"]) == rpc
            and repr(trace["lb"]) == lb
            and repr(trace["alpha_max"]) == alpha
            and str(trace["iters"]) == iters
        )
        if ok:
            rep = _report_from_dict(trace)
            try:
                mrr.verify_report(inst, rep)
            except ValueError as exc:
                ok = False
                print(f"  recompute mismatch for {name}: {exc}", file=sys.stderr)
        if not ok:
            bad += 1
            print(f"MISMATCH {name}", file=sys.stderr)
    print(f"audited {len(rows) - 1} rows against {traces_dir}: {'all consistent' if not bad else f'{bad} mismatches'}")
    return 0 if bad == 0 else 1


def _report_from_dict(d: dict) -> mrr.MrrReport:
    return mrr.MrrReport(
        algo=d["algo"],
        seed=d["seed"],
        m=d["m"],
        n=d["n"],
        beta=d["beta"],
        partition=setfn.Partition(tuple(d["assignment"]), d["m"]),
        paths=tuple(mrr.RobotPath(tuple(p["visits"]), p["cost"]) for p in d["paths"]),
        rtc=d["rtc"],
        rpc=d["rpc"],
        lb=d["lb"],
        alpha_max=d["alpha_max"],
        pseudo_curvature=d["pseudo_curvature"],
        iters=d["iters"],
        times=d["times"],
        config=d["config"],
    )


def cmd_lb(args) -> int:
    inst = mrr.instance_from_json(Path(args.instance).read_text())
    report = mrr.run_pipeline(inst, args.algo, _pipeline_config(args))
    cert = report.cert
    print(f"instance: m={inst.m} n={inst.n} beta={inst.beta:g}")
    print(f"partition via {args.algo}: rtc={report.rtc:.6g}")
    print(f"lower bound: {cert.value:.6g} (alpha_max={cert.alpha:.6g}, "
          f"mlb bound={cert.mlb_bound:.6g}, complete={cert.complete})")
    if cert.per_part_alpha:
        parts = " ".join(f"{a:.4f}" for a in cert.per_part_alpha)
        print(f"per-part alpha: {parts}")
    if cert.value > 0:
        print(f"empirical ratio rtc/lb: {report.rtc / cert.value:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="salb", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_solver_flags(p):
        p.add_argument("--mlb", choices=("exact", "lst"), default="exact", help="initial-balancing solver")
        p.add_argument("--max-iters", type=int, default=20, help="modularization iteration cap")
        p.add_argument("--mlb-budget", type=int, default=None, help="node budget per balancing solve (default: auto)")
        p.add_argument("--lb-budget", type=int, default=None, help="node budget for the lower-bound solve (default: auto)")
        p.add_argument("--timing", action="store_true", help="write wall-clock time_ms into the CSV (breaks byte reproducibility)")

    g = sub.add_parser("gen", help="write seeded instance JSON files")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--seeds", type=str, default=None, help="range lo:hi or comma list (overrides --seed)")
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--n", type=int, default=50)
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--extent", type=float, default=1000.0)
    g.add_argument("--out", type=str, default="instances")
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("solve", help="run one algorithm on one instance file")
    s.add_argument("instance")
    s.add_argument("--algo", choices=mrr.ALGORITHMS, required=True)
    s.add_argument("--trace", type=str, default=None)
    add_solver_flags(s)
    s.set_defaults(fn=cmd_solve)

    e = sub.add_parser("experiment", help="run a seeds x n x beta x algorithm grid")
    e.add_argument("--seeds", type=str, required=True)
    e.add_argument("--m", type=int, default=5)
    e.add_argument("--n", type=str, default="50")
    e.add_argument("--beta", type=str, default="0")
    e.add_argument("--algo", type=str, default="GREEDY,MMIN_GREEDY")
    e.add_argument("--extent", type=float, default=1000.0)
    e.add_argument("--out", type=str, default="experiment")
    e.add_argument("--markdown", action="store_true", help="print the summary as a markdown table")
    add_solver_flags(e)
    e.set_defaults(fn=cmd_experiment)

    a = sub.add_parser("audit", help="audit an oracle JSON file, or round-trip a report CSV")
    a.add_argument("file")
    a.add_argument("--traces", type=str, default=None, help="trace directory for CSV round-trip audits")
    a.set_defaults(fn=cmd_audit)

    lb = sub.add_parser("lb", help="certified lower bound for an instance")
    lb.add_argument("instance")
    lb.add_argument("--algo", choices=mrr.ALGORITHMS, default="MMIN_GREEDY")
    add_solver_flags(lb)
    lb.set_defaults(fn=cmd_lb)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, setfn.CapabilityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
