"""Command-line interface: ``lidarp solve|verify|gen|bench``.

Exit codes: 0 success, 1 bad input, 2 algorithm not applicable or a search
cap was hit, 3 the solution failed verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import multiprocessing as mp
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import BudgetExceeded, InputError, LidarpError, LimitsExceeded, NotApplicable
from .exact import solve_fpt
from .feasibility import verify_solution
from .model import (
    Instance,
    Solution,
    ThreePartitionInstance,
    dump_instance,
    dump_solution,
    load_instance,
    load_solution,
)
from .multicover import solve_xp_no_tw
from .oracle import brute_solve
from .polycase import poly_case, solve_minturn_poly
from .reductions import (
    SERVICE_TIME,
    SHORTCUT,
    gen_gap,
    gen_service_time,
    gen_shortcut,
    gen_time_windows,
)

EXIT_OK, EXIT_INPUT, EXIT_NOT_APPLICABLE, EXIT_VERIFY = 0, 1, 2, 3
ALGORITHMS = ("auto", "poly", "fpt", "xp", "brute")


@dataclass
class RunReport:
    algo: str
    max_served: int
    tau: int
    ms: float
    explored: int = 0
    budget_hit: bool = False
    attempts: list[str] = field(default_factory=list)


def _run_one(algo: str, inst: Instance) -> tuple[int, int, Solution, int]:
    if algo == "poly":
        res = solve_minturn_poly(inst)
        return inst.n, res.tau, res.solution, 0
    if algo == "xp":
        res = solve_xp_no_tw(inst)
        return res.max_served, res.tau, res.solution, sum(res.covers)
    if algo == "fpt":
        res = solve_fpt(inst)
        return res.max_served, res.tau, res.solution, res.routes_explored
    if algo == "brute":
        res = brute_solve(inst)
        return res.max_served, res.tau, res.solution, res.routes_checked
    raise ValueError(algo)


def auto_order(inst: Instance) -> list[str]:
    """Algorithms to try, most specific first."""
    order = []
    if poly_case(inst) is not None:
        order.append("poly")
    if not inst.has_time_windows:
        order.append("xp")
    if inst.horizon is not None:
        order.append("fpt")
    order.append("brute")
    return order


def solve(inst: Instance, algo: str = "auto") -> tuple[RunReport, Solution]:
    """Run ``algo`` (or the ``auto`` cascade) and time it.

    ``auto`` moves to the next algorithm when one hits its search cap.
    """
    start = time.perf_counter()
    order = auto_order(inst) if algo == "auto" else [algo]
    budget_hit = False
    tried = []
    for pos, name in enumerate(order):
        tried.append(name)
        try:
            served, tau, sol, explored = _run_one(name, inst)
        except (BudgetExceeded, LimitsExceeded):
            budget_hit = True
            if pos + 1 == len(order):
                raise
            continue
        ms = (time.perf_counter() - start) * 1000
        return RunReport(name, served, tau, round(ms, 3), explored, budget_hit, tried), sol
    raise AssertionError("unreachable")


def _fail(exc: LidarpError) -> int:
    code = getattr(exc, "code", type(exc).__name__)
    print(f"error: {code}: {exc}", file=sys.stderr)
    return EXIT_INPUT if isinstance(exc, InputError) else EXIT_NOT_APPLICABLE


def cmd_solve(args) -> int:
    try:
        inst = load_instance(args.file)
        report, sol = solve(inst, args.algo)
    except LidarpError as exc:
        return _fail(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        dump_solution(sol, args.out)
    if args.json:
        print(json.dumps(asdict(report)))
    else:
        print(f"algorithm   {report.algo}")
        print(f"max served  {report.max_served} / {inst.n}")
        print(f"tau         {report.tau}")
        print(f"time        {report.ms:.1f} ms")
        if report.budget_hit:
            print(f"note        search cap hit; tried {', '.join(report.attempts)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        inst = load_instance(args.instance)
        sol = load_solution(args.solution)
    except LidarpError as exc:
        return _fail(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    unknown = sorted({repr(w.request) for t in sol.tours for w in t.waypoints
                      if w.request not in inst.index_of})
    if unknown:
        print(f"error: UnknownRequest: solution mentions {', '.join(unknown)}", file=sys.stderr)
        return EXIT_INPUT
    report = verify_solution(sol, inst)
    if args.json:
        print(json.dumps(report.as_dict()))
    else:
        print(f"served {report.served}, max turns {report.max_turns}, "
              f"{len(report.violations)} violation(s)")
        for v in report.violations:
            where = "" if v.tour is None else f" tour {v.tour}"
            print(f"  {v.kind}{where}: {v.detail}")
    return EXIT_OK if report.ok else EXIT_VERIFY


GENERATORS = {
    "3p-servicetime": lambda tp, a: gen_service_time(tp, a.k, a.c, strict=a.strict),
    "3p-shortcut": lambda tp, a: gen_shortcut(tp, a.k, a.c, strict=a.strict),
    "3p-timewindows": lambda tp, a: gen_time_windows(tp, a.k, a.c, strict=a.strict),
    "3p-gap": lambda tp, a: gen_gap(tp, a.c, SHORTCUT if a.base == "shortcut" else SERVICE_TIME,
                                    strict=a.strict),
}


def _parse_set(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InputError(f"--set must be comma-separated integers, got {text!r}") from None


def cmd_gen(args) -> int:
    try:
        tp = ThreePartitionInstance(_parse_set(args.set), args.m, args.T)
        red = GENERATORS[args.construction](tp, args)
    except LidarpError as exc:
        return _fail(exc)
    dump_instance(red.instance, args.out)
    if args.meta:
        red.write_metadata(args.meta)
    print(f"wrote {args.out}: {red.instance.n} requests, {red.instance.h} stops, "
          f"expected tau {red.expected_tau_yes} for a yes-instance")
    return EXIT_OK


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------

CSV_FIELDS = ("instance", "n", "h", "k", "c", "t", "algo", "served", "tau", "ms", "status")


def _bench_worker(path: str, algo: str, queue) -> None:
    try:
        inst = load_instance(path)
    except (LidarpError, OSError) as exc:
        queue.put({"status": "error", "detail": str(exc)})
        return
    row = {"n": inst.n, "h": inst.h, "k": inst.k, "c": inst.c, "t": inst.horizon}
    try:
        report, _ = solve(inst, algo)
    except NotApplicable as exc:
        row.update(status="not_applicable", detail=str(exc))
    except (BudgetExceeded, LimitsExceeded) as exc:
        row.update(status="budget", detail=str(exc))
    else:
        row.update(status="ok", algo=report.algo, served=report.max_served,
                   tau=report.tau, ms=report.ms)
    queue.put(row)


def bench_one(path: Path, algo: str, timeout: float) -> dict:
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    queue = ctx.Queue()
    proc = ctx.Process(target=_bench_worker, args=(str(path), algo, queue))
    start = time.perf_counter()
    proc.start()
    proc.join(timeout)
    row = {"instance": path.name}
    if proc.is_alive():
        proc.terminate()
        proc.join()
        row.update(status="timeout", ms=round(timeout * 1000, 3))
        return row
    try:
        row.update(queue.get(timeout=1))
    except Exception:
        row.update(status="error", detail=f"worker exited with code {proc.exitcode}")
    row.setdefault("ms", round((time.perf_counter() - start) * 1000, 3))
    return row


def cmd_bench(args) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    files = sorted(root.glob("*.json"))
    rows = [bench_one(p, args.algo, args.timeout) for p in files]
    if args.json:
        print(json.dumps({"rows": rows}))
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        print(buf.getvalue(), end="")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, CSV_FIELDS, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
    if rows and all(r["status"] != "ok" for r in rows):
        return EXIT_NOT_APPLICABLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lidarp",
        description="Exact solvers for dial-a-ride on a line with turn minimisation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("file")
    p.add_argument("--algo", choices=ALGORITHMS, default="auto")
    p.add_argument("--json", action="store_true", help="print a one-line JSON report")
    p.add_argument("--out", help="write the witness solution here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a timed solution")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate a 3-Partition reduction instance")
    p.add_argument("construction", choices=sorted(GENERATORS))
    p.add_argument("--set", required=True, help="comma-separated values, e.g. 4,4,5,4,4,5")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--base", choices=("servicetime", "shortcut"), default="servicetime",
                   help="construction behind 3p-gap")
    p.add_argument("--non-strict", dest="strict", action="store_false",
                   help="skip the T/4 < s < T/2 bounds")
    p.add_argument("--out", required=True)
    p.add_argument("--meta", help="write role tags and expected values here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="solve every *.json instance in a directory")
    p.add_argument("dir")
    p.add_argument("--algo", choices=ALGORITHMS, default="auto")
    p.add_argument("--timeout", type=float, default=60.0, help="seconds per instance")
    p.add_argument("--json", action="store_true")
    p.add_argument("--csv", help="also write the CSV table here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
