"""Command-line front end.

Commands: analyze, gradcheck, optimize, sweep.  JSON reports, RFC-4180 CSV
histories.  Exit codes: 0 success, 2 validation error, 3 singular structure,
4 optimizer failure (gradcheck uses 1 when the check itself fails).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import adjoint as adj
from . import functions as fn
from . import optimize as opt
from .analysis import run_analysis
from .elements import ZeroLengthElementError
from .model import ProblemError, apply_variables, load_problem
from .solve import NotPositiveDefiniteError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SINGULAR = 3
EXIT_OPTIMIZER = 4


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _settings_echo(settings) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v)
            for k, v in settings.__dict__.items()}


def _analysis_payload(problem, x) -> dict:
    state = apply_variables(problem, x)
    cache = run_analysis(problem, state)
    sk = problem.skeleton
    rows = fn.constraint_rows(problem)
    g = fn.evaluate_rows(problem, state, cache, rows)
    stresses = []
    forces = []
    for e, elem in enumerate(problem.model.elements):
        grp = cache.group_of(e)
        pos = sk.group_pos[e]
        floc = grp.floc[pos]
        axial = float(floc[fn.TRUSS_AXIAL if grp.p == 2 else fn.FRAME_AXIAL])
        forces.append({"element": elem.id, "local_force": floc.tolist()})
        stresses.append({"element": elem.id, "axial_force": axial,
                         "axial_stress": axial / float(state.A[e])})
    return {
        "n_free": sk.dofmap.n_free,
        "u": cache.u.tolist(),
        "reactions": {str(int(d)): float(r) for d, r in
                      zip(sk.dofmap.fixed, cache.reactions())},
        "node_positions": {str(n.id): state.positions[i].tolist()
                           for i, n in enumerate(problem.model.nodes)},
        "element_forces": forces,
        "element_stresses": stresses,
        "volume": fn.volume(state, cache),
        "compliance": fn.compliance(cache),
        "embodied_carbon": fn.embodied_carbon(state, cache, sk.ecc, sk.rho),
        "constraints": {"labels": [r.label for r in rows], "values": g.tolist(),
                        "max_violation": float(np.max(g)) if g.size else 0.0,
                        "feasible": bool(g.size == 0 or np.max(g) <= 1e-6)},
    }


def _write_json(payload: dict, out: str | None):
    text = json.dumps(payload, indent=1)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_analyze(args) -> int:
    problem = load_problem(args.file)
    payload = {
        "command": "analyze",
        "input": str(args.file),
        "input_digest": _digest(args.file),
        "settings": _settings_echo(problem.optimizer),
        "x": problem.x0.tolist(),
        "analysis": _analysis_payload(problem, problem.x0),
    }
    _write_json(payload, args.out)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    problem = load_problem(args.file)
    rows = fn.all_rows(problem)
    if args.output == "objective":
        selected = [rows[0]]
    elif args.output == "all":
        selected = rows
    elif args.output.startswith("g"):
        idx = int(args.output[1:])
        selected = [fn.constraint_rows(problem)[idx]]
    else:
        raise ProblemError(f"unknown output selector {args.output!r}")
    x = problem.x0
    _, jac, _, _ = adj.gradient_many(problem, x, selected)
    fd = adj.fd_jacobian(problem, x, selected, args.h)
    scale = np.maximum(np.maximum(np.abs(jac), np.abs(fd)), 1e-10)
    rel = np.abs(jac - fd) / scale
    print(f"{'output':<18}{'variable':<14}{'adjoint':>16}{'fd':>16}{'rel_err':>12}")
    for i, row in enumerate(selected):
        for j, var in enumerate(problem.variables):
            print(f"{row.label:<18}{var.name:<14}{jac[i, j]:>16.8e}"
                  f"{fd[i, j]:>16.8e}{rel[i, j]:>12.3e}")
    worst = float(rel.max())
    print(f"max rel err: {worst:.3e}")
    return EXIT_OK if worst <= 1e-4 else 1


def _write_history(history, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "wall_time_s", "objective", "max_violation"])
        for it, t, f, viol in history:
            w.writerow([it, f"{t:.6f}", repr(float(f)), repr(float(viol))])


def cmd_optimize(args) -> int:
    problem = load_problem(args.file)
    settings = problem.optimizer
    overrides = {}
    if args.alg:
        overrides["algorithm"] = args.alg
    if args.grad:
        overrides["gradient_mode"] = args.grad
    if args.time is not None:
        overrides["time_limit"] = args.time
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.max_iterations is not None:
        overrides["max_iterations"] = args.max_iterations
    if overrides:
        settings = opt.OptimizerSettings(**{**settings.__dict__, **overrides})

    runner = {"mma": opt.optimize_mma, "lbfgs": opt.optimize_lbfgs,
              "ga": opt.optimize_ga}[settings.algorithm]
    try:
        result = runner(problem, settings)
    except Exception as exc:
        print(f"optimizer failure: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER
    if result.termination == "analysis_error" and not result.history:
        print("optimizer failure: analysis failed at the initial design",
              file=sys.stderr)
        return EXIT_OPTIMIZER

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_history(result.history, outdir / "history.csv")
    payload = {
        "command": "optimize",
        "input": str(args.file),
        "input_digest": _digest(args.file),
        "settings": _settings_echo(settings),
        "result": {
            "x_final": result.x_final.tolist(),
            "objective": result.objective_final,
            "feasible": result.feasible,
            "max_violation": result.max_violation,
            "termination": result.termination,
            "iterations": result.n_iterations,
        },
        "analysis": _analysis_payload(problem, result.x_final),
    }
    _write_json(payload, str(outdir / "report.json"))
    print(f"{settings.algorithm}: objective {result.objective_final:.6g}, "
          f"feasible={result.feasible}, {result.n_iterations} iterations "
          f"({result.termination})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    problem = load_problem(args.file)
    groups = args.groups.split(",")
    materials = args.materials.split(",")
    jobs = args.jobs
    cap = os.environ.get("DIFFSTIFF_THREADS")
    if cap:
        jobs = max(1, min(jobs, int(cap)))
    runs = opt.material_sweep(problem, groups, materials, jobs=jobs)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "embodied_carbon", "mass", "compliance", "volume",
                    "feasible", "time_s", "error"])
        for r in runs:
            w.writerow([r.id, repr(r.embodied_carbon), repr(r.mass),
                        repr(r.compliance), repr(r.volume),
                        r.result.feasible if r.ok else "",
                        f"{r.time:.3f}", r.error])
    for r in runs:
        if r.ok:
            payload = {
                "command": "sweep-run", "id": r.id,
                "input_digest": _digest(args.file),
                "assignment": list(r.assignment),
                "x_final": r.result.x_final.tolist(),
                "objective": r.result.objective_final,
                "feasible": r.result.feasible,
                "embodied_carbon": r.embodied_carbon,
                "mass": r.mass,
                "compliance": r.compliance,
                "volume": r.volume,
            }
            _write_json(payload, str(outdir / f"run_{r.id}.json"))
    ok = [r for r in runs if r.ok]
    print(f"sweep: {len(ok)}/{len(runs)} runs completed; "
          f"best {ok[0].id} at {ok[0].result.objective_final:.6g}"
          if ok else "sweep: all runs failed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diffstiff",
                                 description="differentiable bar-structure "
                                             "analysis and optimization")
    sub = ap.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="validate and analyze a problem file")
    pa.add_argument("file")
    pa.add_argument("--out", default=None, help="report path (default stdout)")
    pa.set_defaults(func=cmd_analyze)

    pg = sub.add_parser("gradcheck", help="adjoint vs finite-difference table")
    pg.add_argument("file")
    pg.add_argument("--output", default="objective",
                    help="objective | all | g<i>")
    pg.add_argument("--h", type=float, default=1e-6, help="relative FD step")
    pg.set_defaults(func=cmd_gradcheck)

    po = sub.add_parser("optimize", help="run the design loop")
    po.add_argument("file")
    po.add_argument("--alg", choices=["mma", "lbfgs", "ga"], default=None)
    po.add_argument("--grad", choices=["adjoint", "fd"], default=None)
    po.add_argument("--time", type=float, default=None, help="seconds")
    po.add_argument("--seed", type=int, default=None)
    po.add_argument("--max-iterations", type=int, default=None)
    po.add_argument("--out", default=".", help="output directory")
    po.set_defaults(func=cmd_optimize)

    ps = sub.add_parser("sweep", help="material assignment sweep")
    ps.add_argument("file")
    ps.add_argument("--groups", required=True, help="comma-separated group names")
    ps.add_argument("--materials", required=True, help="comma-separated names")
    ps.add_argument("--jobs", type=int, default=1)
    ps.add_argument("--out", default=".", help="output directory")
    ps.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProblemError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotPositiveDefiniteError, ZeroLengthElementError) as exc:
        print(f"singular structure: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except KeyError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
