"""Charging-station placement: solve, sweep lambda, evaluate trips, report access.

exit codes:

    0  success (optimal plan found, solution feasible)
    2  infeasible (no plan, constraint violations, vehicles cannot be placed)
    3  invalid input (unreadable/malformed files, unknown keys, bad flags)
    4  internal guard (subset/oracle size limits, sweep monotonicity check)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__
from .access import mem_score, mobility_index
from .errors import (
    CapacityExhausted,
    EquichargeError,
    InconsistentSolution,
    Infeasible,
    InvalidInput,
    NoReachableStation,
    OracleSizeExceeded,
    SubsetLimitExceeded,
    SweepMonotonicityError,
)
from .evaluate import (
    METRICS_HEADER,
    TripRecord,
    aggregate_metrics,
    simulate_fleet,
    variability_report,
)
from .model import (
    check_feasibility_condition,
    demand_indexing_diagnostic,
    detect_uniform_reduction,
    validate_solution,
)
from .scenario import Scenario, load_scenario, load_solution
from .solver import exact_solve, lambda_sweep, pareto_filter

log = logging.getLogger("equicharge")

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3
EXIT_GUARD = 4

PARETO_HEADER = ("lambda", "cost_term", "access_term", "objective", "selected_station_ids", "status")


class UsageError(InvalidInput):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which collides with "infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (SubsetLimitExceeded, OracleSizeExceeded, SweepMonotonicityError)):
        return EXIT_GUARD
    if isinstance(exc, (Infeasible, NoReachableStation, CapacityExhausted)):
        return EXIT_INFEASIBLE
    return EXIT_INVALID


# --------------------------------------------------------------------------- output


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, data) -> None:
    write_atomic(path, json.dumps(_jsonable(data), indent=2, allow_nan=False) + "\n")


def write_csv(path: Path, header, rows, trailer=None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if trailer is not None:
        w.writerow(trailer)
    write_atomic(path, buf.getvalue())


def _lam_tag(lam: float) -> str:
    return f"{lam:g}"


# --------------------------------------------------------------------------- payloads


def solution_payload(scn: Scenario, sol, status="optimal") -> dict:
    inst = replace(scn.instance, lam=sol.lam)
    violations = validate_solution(inst, sol)
    feas = check_feasibility_condition(inst)
    uni = detect_uniform_reduction(inst)
    degeneracy = demand_indexing_diagnostic(inst)
    return {
        "status": status,
        **sol.to_dict(),
        "audit": {"feasible": not violations, "violations": [v.to_dict() for v in violations]},
        "diagnostics": {
            **asdict(feas),
            "uniform_scores": uni.uniform,
            "constant_offset": uni.offset,
            "access_term_constant": degeneracy.constant,
            "note": degeneracy.message,
        },
    }


# --------------------------------------------------------------------------- commands


def run_solve(scenario_path, lam=None, out_dir=".", seed=None) -> int:
    scn = load_scenario(scenario_path, seed)
    inst = scn.instance if lam is None else replace(scn.instance, lam=lam)
    try:
        sol = exact_solve(inst)
    except Infeasible:
        feas = check_feasibility_condition(inst)
        log.error("infeasible: demand %d, all capacity %d, top-%d capacity %d",
                  feas.total_demand, feas.total_capacity, inst.p, feas.top_p_capacity)
        raise
    payload = solution_payload(replace(scn, instance=inst), sol)
    write_json(Path(out_dir) / "solution.json", payload)
    print(f"optimal: selected {','.join(sol.selected)} objective {sol.objective!r}")
    return EXIT_OK


def run_sweep(scenario_path, out_dir=".", seed=None, fmt="csv") -> int:
    scn = load_scenario(scenario_path, seed)
    if not scn.sweep:
        raise UsageError("the scenario's sweep list is empty")
    points = lambda_sweep(scn.instance, scn.sweep)
    out = Path(out_dir)

    def row(pt):
        sel = ";".join(pt.solution.selected) if pt.ok else ""
        return [pt.lam, pt.cost_term, pt.access_term, pt.objective, sel, pt.status]

    for name, pts in (("pareto", points), ("pareto_front", pareto_filter(points))):
        if fmt == "json":
            write_json(out / f"{name}.json", [dict(zip(PARETO_HEADER, row(pt))) for pt in pts])
        else:
            write_csv(out / f"{name}.csv", PARETO_HEADER, [row(pt) for pt in pts])
    for pt in points:
        if pt.ok:
            payload = solution_payload(scn, pt.solution)
            payload["saturated"] = pt.saturated
            write_json(out / f"solution_lambda_{_lam_tag(pt.lam)}.json", payload)
        print(f"lambda={_lam_tag(pt.lam)} status={pt.status} "
              f"selected={';'.join(pt.solution.selected) if pt.ok else '-'}")
    return EXIT_OK if all(pt.ok for pt in points) else EXIT_INFEASIBLE


def _checked_solution(scn: Scenario, path):
    sol = load_solution(path)
    violations = validate_solution(replace(scn.instance, lam=sol.lam), sol)
    if violations:
        raise InconsistentSolution(
            f"{path}: solution violates constraints "
            + ", ".join(f"({v.constraint}) {v.detail}" for v in violations)
        )
    return sol


def run_evaluate(scenario_path, solution_path, baseline_path=None, out_dir=".", seed=None,
                 fmt="csv") -> int:
    scn = load_scenario(scenario_path, seed)
    if scn.network is None or scn.fleet is None:
        raise InvalidInput("evaluation needs 'network' and 'fleet' blocks in the scenario")
    sol = _checked_solution(scn, solution_path)
    records = simulate_fleet(scn.network, scn.instance, sol, scn.fleet)
    baseline = None
    if baseline_path is not None:
        base_sol = _checked_solution(scn, baseline_path)
        baseline = simulate_fleet(scn.network, scn.instance, base_sol, scn.fleet)

    out = Path(out_dir)
    every = records + (baseline or [])
    write_csv(out / "trips.csv", TripRecord.CSV_FIELDS, [r.csv_row() for r in every])
    rows = aggregate_metrics(every)
    if fmt == "json":
        write_json(out / "metrics.json", [dict(zip(METRICS_HEADER, r.csv_row())) for r in rows])
    else:
        write_csv(out / "metrics.csv", METRICS_HEADER, [r.csv_row() for r in rows])
    for r in rows:
        print(f"lambda={r.lam:g} route={r.route}: {r.format()}")
    if baseline is not None:
        rep = variability_report(records, baseline)
        write_json(out / "variability.json", {
            "candidate_lambda": sol.lam, "baseline_lambda": base_sol.lam, **rep.to_dict(),
        })
        print(f"travel-time std {rep.std_a:.3f} s vs baseline {rep.std_b:.3f} s "
              f"(relative change {rep.relative_change:.4f})")
    return EXIT_OK


def run_access(scenario_path, out_dir=".", seed=None, fmt="csv") -> int:
    scn = load_scenario(scenario_path, seed)
    if scn.network is None or scn.profile is None:
        raise InvalidInput("access reports need 'network' and 'profile' blocks")
    eps = {n: mobility_index(scn.network, n, scn.profile, scn.default_kappa).epsilon
           for n in sorted(scn.network.nodes)}
    mem = mem_score(list(eps.values()))
    out = Path(out_dir)
    if fmt == "json":
        write_json(out / "access.json", {"epsilon": eps, "mem": mem})
    else:
        write_csv(out / "access.csv", ("node", "epsilon"), list(eps.items()), ("MEM", mem))
    print(f"MEM {mem!r} over {len(eps)} nodes")
    return EXIT_OK


def run_validate(scenario_path, solution_path, out_dir=".", seed=None) -> int:
    scn = load_scenario(scenario_path, seed)
    sol = load_solution(solution_path)
    inst = replace(scn.instance, lam=sol.lam)
    violations = validate_solution(inst, sol)
    write_json(Path(out_dir) / "audit.json",
               {"feasible": not violations, "violations": [v.to_dict() for v in violations]})
    for v in violations:
        print(f"({v.constraint}) {v.detail}")
    print("feasible" if not violations else f"{len(violations)} violation(s)")
    return EXIT_OK if not violations else EXIT_INFEASIBLE


# --------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
    common.add_argument("--out-dir", type=Path, default=Path("."),
                        help="directory for output files (default: current directory)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed used for origin synthesis")
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="format for tabular outputs (default: csv)")

    parser = _Parser(prog="equicharge", description=__doc__.split("\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog=__doc__.split("\n", 2)[2])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="exact optimum at one lambda")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="override the scenario's lambda")
    sub.add_parser("sweep", parents=[common, fmt], help="solve over the scenario's lambda list")
    p = sub.add_parser("evaluate", parents=[common, fmt], help="simulate fleet trips for a plan")
    p.add_argument("--solution", required=True, type=Path, help="solution JSON to evaluate")
    p.add_argument("--baseline", type=Path, default=None,
                   help="baseline solution JSON (enables the variability report)")
    sub.add_parser("access", parents=[common, fmt], help="mobility index per node and MEM")
    p = sub.add_parser("validate", parents=[common], help="constraint audit of a solution")
    p.add_argument("--solution", required=True, type=Path, help="solution JSON to audit")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return run_solve(args.scenario, args.lam, args.out_dir, args.seed)
        if args.command == "sweep":
            return run_sweep(args.scenario, args.out_dir, args.seed, args.format)
        if args.command == "evaluate":
            return run_evaluate(args.scenario, args.solution, args.baseline, args.out_dir,
                                args.seed, args.format)
        if args.command == "access":
            return run_access(args.scenario, args.out_dir, args.seed, args.format)
        return run_validate(args.scenario, args.solution, args.out_dir, args.seed)
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc.filename}: file not found", file=sys.stderr)
        return EXIT_INVALID
    except EquichargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
