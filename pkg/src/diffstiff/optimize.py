"""Design-loop drivers: MMA (constrained), projected L-BFGS (unconstrained),
a seeded real-coded GA baseline, and the combinatorial material sweep.

MMA follows the classic moving-asymptote scheme: a separable convex
approximation is built at each iterate (asymptotes initialized at 0.5x the
variable range, shrunk by 0.7 / grown by 1.2 on sign oscillation, moves capped
at 0.5x range) and its subproblem is solved through the dual, where the primal
minimizer is available in closed form per coordinate.  All constants live in
OptimizerSettings and can be overridden per problem file.
"""

from __future__ import annotations

import dataclasses
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from . import adjoint as adj
from . import functions as fn
from .analysis import run_analysis
from .model import apply_variables, build_skeleton


@dataclass
class OptimizerSettings:
    algorithm: str = "mma"           # "mma" | "lbfgs" | "ga"
    gradient_mode: str = "adjoint"   # "adjoint" | "fd"
    rel_tolerance: float = 1e-6
    time_limit: float | None = None  # seconds
    max_iterations: int = 500
    fd_step: float = 1e-6
    feasibility_tol: float = 1e-6
    # MMA
    move_limit: float = 0.5
    asymptote_init: float = 0.5
    asymptote_shrink: float = 0.7
    asymptote_grow: float = 1.2
    # L-BFGS
    memory: int = 10
    # GA
    population: int = 100
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerSettings":
        from .model import ValidationError

        known = {f.name for f in dataclasses.fields(cls)}
        bad = set(d) - known
        if bad:
            raise ValidationError(f"unknown optimizer settings: {sorted(bad)}")
        s = cls(**d)
        if s.rel_tolerance <= 0:
            raise ValidationError("rel_tolerance must be positive")
        if s.population < 2:
            raise ValidationError("GA population must be >= 2")
        return s


@dataclass
class OptimizationResult:
    x_final: np.ndarray
    objective_final: float
    feasible: bool
    history: list            # (iteration, wall_time_s, objective, max_violation)
    termination: str
    n_iterations: int
    max_violation: float = math.inf

    def time_to_reach(self, level: float) -> float:
        """Wall time of the first recorded iterate with objective <= level
        and violation within tolerance; inf if never reached."""
        for _, t, f, viol in self.history:
            if f <= level and viol <= 1e-6:
                return t
        return math.inf


class _Evaluator:
    """Objective + constraint rows of one problem, with gradients in the
    requested mode."""

    def __init__(self, problem, settings: OptimizerSettings):
        self.problem = problem
        self.settings = settings
        self.rows = fn.all_rows(problem)

    def values(self, x) -> np.ndarray:
        state = apply_variables(self.problem, x)
        cache = run_analysis(self.problem, state)
        return fn.evaluate_rows(self.problem, state, cache, self.rows)

    def values_and_jacobian(self, x):
        if self.settings.gradient_mode == "fd":
            vals = self.values(x)
            jac = adj.fd_jacobian(self.problem, x, self.rows, self.settings.fd_step)
            return vals, jac
        vals, jac, _, _ = adj.gradient_many(self.problem, x, self.rows)
        return vals, jac


def _max_violation(g: np.ndarray) -> float:
    return float(np.max(g)) if g.size else 0.0


def _finalize(problem, settings, x_final, history, termination) -> OptimizationResult:
    """Re-evaluate the returned design from scratch; no stale feasibility."""
    ev = _Evaluator(problem, settings)
    try:
        vals = ev.values(x_final)
        f = float(vals[0])
        viol = _max_violation(vals[1:])
    except Exception:
        f, viol = math.inf, math.inf
        termination = "analysis_error"
    return OptimizationResult(
        x_final=np.asarray(x_final, dtype=float), objective_final=f,
        feasible=bool(viol <= settings.feasibility_tol), history=history,
        termination=termination, n_iterations=len(history),
        max_violation=viol)


# -- MMA ----------------------------------------------------------------------

def _mma_dual_step(x, f_grad, g, g_jac, lower, upper, low, upp,
                   xold1, xold2, it, s: OptimizerSettings):
    """One MMA update: build the separable approximation, maximize its dual,
    return (x_new, low, upp).  Every returned iterate respects the bounds."""
    n = x.size
    rng = upper - lower
    xmami = np.maximum(rng, 1e-5)

    if it <= 2:
        low = x - s.asymptote_init * rng
        upp = x + s.asymptote_init * rng
    else:
        osc = (x - xold1) * (xold1 - xold2)
        fac = np.ones(n)
        fac[osc > 0] = s.asymptote_grow
        fac[osc < 0] = s.asymptote_shrink
        low = x - fac * (xold1 - low)
        upp = x + fac * (upp - xold1)
        low = np.clip(low, x - 10.0 * rng, x - 0.01 * xmami)
        upp = np.clip(upp, x + 0.01 * xmami, x + 10.0 * rng)

    albefa = 0.1
    alfa = np.maximum.reduce([low + albefa * (x - low), x - s.move_limit * rng, lower])
    beta = np.minimum.reduce([upp - albefa * (upp - x), x + s.move_limit * rng, upper])

    ux = upp - x
    xl = x - low
    raa = 1e-5 / xmami

    def split(df):
        pos = np.maximum(df, 0.0)
        neg = np.maximum(-df, 0.0)
        return (1.001 * pos + 0.001 * neg + raa) * ux**2, \
               (0.001 * pos + 1.001 * neg + raa) * xl**2

    p0, q0 = split(f_grad)
    # row-scale the constraints: leaves the subproblem solution unchanged
    # (multipliers rescale inversely) but keeps the dual well conditioned
    # when violations reach extreme magnitudes
    scale = np.maximum(1.0, np.abs(g))[:, None]
    P, Q = split(g_jac / scale)          # (m, n) each
    g = g / scale[:, 0]
    b = P @ (1.0 / ux) + Q @ (1.0 / xl) - g

    def x_of(lam):
        pl = p0 + lam @ P
        ql = q0 + lam @ Q
        sp = np.sqrt(pl)
        sq = np.sqrt(ql)
        return np.clip((low * sp + upp * sq) / (sp + sq), alfa, beta), pl, ql

    def neg_dual(lam):
        xs, pl, ql = x_of(lam)
        iux = 1.0 / (upp - xs)
        ixl = 1.0 / (xs - low)
        w = float(pl @ iux + ql @ ixl - lam @ b)
        gw = P @ iux + Q @ ixl - b
        return -w, -gw

    m = g.size
    lam0 = np.zeros(m)
    lam, _, _ = lbfgs_box(neg_dual, lam0, np.zeros(m), np.full(m, 1e6),
                          max_iter=200, gtol=1e-12, memory=20)
    x_new, _, _ = x_of(lam)
    return x_new, low, upp


def optimize_mma(problem, settings: OptimizerSettings | None = None) -> OptimizationResult:
    """Constrained minimization with the Method of Moving Asymptotes.

    Per iterate: one forward analysis, one reverse pass for the objective and
    one per constraint row (adjoint mode) or central differences (fd mode).
    """
    s = settings or problem.optimizer
    lower = problem.lower
    upper = problem.upper
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("MMA requires finite bounds on every variable")
    ev = _Evaluator(problem, s)
    x = np.clip(problem.x0, lower, upper)
    xold1 = xold2 = x
    low = upp = None
    history = []
    best = None          # (f, x) over feasible evaluated iterates
    f_prev = None
    termination = "max_iterations"
    t0 = time.perf_counter()

    def _evaluate_with_retreat(x, x_prev):
        """Bisect back toward the last analyzable iterate if x fails."""
        for _ in range(6):
            try:
                vals, jac = ev.values_and_jacobian(x)
                return x, vals, jac
            except Exception:
                if x_prev is None or np.allclose(x, x_prev):
                    raise
                x = 0.5 * (x + x_prev)
        return x_prev, *ev.values_and_jacobian(x_prev)

    for it in range(1, s.max_iterations + 1):
        try:
            x, vals, jac = _evaluate_with_retreat(x, xold1 if it > 1 else None)
        except Exception:
            termination = "analysis_error"
            break
        f = float(vals[0])
        g = vals[1:]
        viol = _max_violation(g)
        history.append((it, time.perf_counter() - t0, f, viol))
        if viol <= s.feasibility_tol and (best is None or f < best[0]):
            best = (f, x.copy())
        if f_prev is not None and abs(f - f_prev) <= s.rel_tolerance * max(1.0, abs(f)):
            termination = "tolerance"
            break
        f_prev = f
        if s.time_limit is not None and time.perf_counter() - t0 > s.time_limit:
            termination = "time_limit"
            break
        x_new, low, upp = _mma_dual_step(x, jac[0], g, jac[1:], lower, upper,
                                         low, upp, xold1, xold2, it, s)
        xold2, xold1, x = xold1, x, x_new

    x_final = best[1] if best is not None else x
    return _finalize(problem, s, x_final, history, termination)


# -- projected L-BFGS ----------------------------------------------------------

def lbfgs_box(fun_grad, x0, lower, upper, max_iter=200, gtol=1e-8,
              rel_ftol=0.0, memory=10, time_limit=None, on_accept=None):
    """Limited-memory BFGS with bound projection and Armijo backtracking.

    fun_grad(x) -> (f, grad).  Returns (x_best, f_best, n_iterations); the
    accepted objective sequence is monotone by construction.
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    f, g = fun_grad(x)
    if on_accept:
        on_accept(0, x, f)
    S: list[np.ndarray] = []
    Y: list[np.ndarray] = []
    rho: list[float] = []
    t0 = time.perf_counter()
    it = 0
    for it in range(1, max_iter + 1):
        pg = x - np.clip(x - g, lower, upper)
        if np.max(np.abs(pg)) <= gtol * (1.0 + abs(f)):
            break
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            break
        # two-loop recursion
        d = -g
        alphas = []
        for si, yi, ri in zip(reversed(S), reversed(Y), reversed(rho)):
            a = ri * (si @ d)
            alphas.append(a)
            d = d - a * yi
        if S:
            d = d * (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        for (si, yi, ri), a in zip(zip(S, Y, rho), reversed(alphas)):
            bcoef = ri * (yi @ d)
            d = d + si * (a - bcoef)
        if d @ g >= 0.0:
            d = -g
        step = 1.0 if S else min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-12))
        accepted = False
        for _ in range(50):
            cand = np.clip(x + step * d, lower, upper)
            delta = cand - x
            if not np.any(delta):
                break
            fc, gc = fun_grad(cand)
            if fc <= f + 1e-4 * (g @ delta):
                s_vec = delta
                y_vec = gc - g
                sy = s_vec @ y_vec
                if sy > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
                    S.append(s_vec)
                    Y.append(y_vec)
                    rho.append(1.0 / sy)
                    if len(S) > memory:
                        S.pop(0)
                        Y.pop(0)
                        rho.pop(0)
                f_old = f
                x, f, g = cand, fc, gc
                accepted = True
                if on_accept:
                    on_accept(it, x, f)
                if rel_ftol and abs(f_old - f) <= rel_ftol * max(1.0, abs(f)):
                    return x, f, it
                break
            step *= 0.5
        if not accepted:
            break
    return x, f, it


def optimize_lbfgs(problem, settings: OptimizerSettings | None = None) -> OptimizationResult:
    """Unconstrained objective descent (bounds by projection)."""
    s = settings or problem.optimizer
    if problem.constraints:
        raise ValueError("optimize_lbfgs handles unconstrained problems; "
                         "use MMA for constrained ones")
    obj_row = [fn.objective_row(problem)]

    def fun_grad(x):
        if s.gradient_mode == "fd":
            state = apply_variables(problem, x)
            cache = run_analysis(problem, state)
            f = fn.evaluate_rows(problem, state, cache, obj_row)[0]
            grad = adj.fd_jacobian(problem, x, obj_row, s.fd_step)[0]
            return float(f), grad
        vals, jac, _, _ = adj.gradient_many(problem, x, obj_row)
        return float(vals[0]), jac[0]

    history = []
    t0 = time.perf_counter()

    def on_accept(it, x, f):
        history.append((it, time.perf_counter() - t0, float(f), 0.0))

    try:
        x_best, _, niter = lbfgs_box(
            fun_grad, problem.x0, problem.lower, problem.upper,
            max_iter=s.max_iterations, gtol=1e-10, rel_ftol=s.rel_tolerance,
            memory=s.memory, time_limit=s.time_limit, on_accept=on_accept)
    except Exception:
        return _finalize(problem, s, problem.x0, history, "analysis_error")
    term = "tolerance" if niter < s.max_iterations else "max_iterations"
    return _finalize(problem, s, x_best, history, term)


# -- genetic algorithm ----------------------------------------------------------

def optimize_ga(problem, settings: OptimizerSettings | None = None) -> OptimizationResult:
    """Real-coded GA: binary tournament selection on feasibility-first ranks,
    blend crossover, Gaussian mutation, one elite.  Deterministic per seed."""
    s = settings or problem.optimizer
    rng = np.random.default_rng(s.seed)
    lower, upper = problem.lower, problem.upper
    span = upper - lower
    n = lower.size
    pop = s.population
    ev = _Evaluator(problem, s)

    def evaluate(X):
        fs = np.full(X.shape[0], np.inf)
        viols = np.full(X.shape[0], np.inf)
        for i, xi in enumerate(X):
            try:
                vals = ev.values(xi)
            except Exception:
                continue
            fs[i] = vals[0]
            viols[i] = _max_violation(vals[1:])
        return fs, viols

    def ranks(fs, viols):
        # feasible first (ordered by objective), then infeasible (by violation)
        feas = viols <= s.feasibility_tol
        order = np.lexsort((np.where(feas, fs, viols), (~feas).astype(int)))
        r = np.empty(pop, dtype=int)
        r[order] = np.arange(pop)
        return r

    X = lower + rng.random((pop, n)) * span
    X[0] = np.clip(problem.x0, lower, upper)
    fs, viols = evaluate(X)
    history = []
    best = None   # (f, x) feasible
    t0 = time.perf_counter()
    termination = "max_iterations"

    for gen in range(1, s.max_iterations + 1):
        r = ranks(fs, viols)
        feas = viols <= s.feasibility_tol
        if feas.any():
            # best feasible individual of this population
            i = np.flatnonzero(feas)[np.argmin(fs[feas])]
            if best is None or fs[i] < best[0]:
                best = (float(fs[i]), X[i].copy())
            history.append((gen, time.perf_counter() - t0, float(fs[i]),
                            float(viols[i])))
        else:
            history.append((gen, time.perf_counter() - t0, math.nan,
                            float(np.min(viols))))
        if s.time_limit is not None and time.perf_counter() - t0 > s.time_limit:
            termination = "time_limit"
            break
        elite = X[np.argmin(r)].copy()
        children = [elite]
        while len(children) < pop:
            picks = rng.integers(0, pop, size=4)
            p1 = X[picks[0]] if r[picks[0]] < r[picks[1]] else X[picks[1]]
            p2 = X[picks[2]] if r[picks[2]] < r[picks[3]] else X[picks[3]]
            if rng.random() < 0.9:
                lo = np.minimum(p1, p2)
                hi = np.maximum(p1, p2)
                d = hi - lo
                child = lo - 0.5 * d + rng.random(n) * 2.0 * d
            else:
                child = p1.copy()
            mut = rng.random(n) < (1.0 / n)
            child = np.where(mut, child + rng.normal(0.0, 0.1 * span, n), child)
            children.append(np.clip(child, lower, upper))
        X = np.asarray(children)
        fs, viols = evaluate(X)

    if best is not None:
        x_final = best[1]
    else:
        r = ranks(fs, viols)
        x_final = X[np.argmin(r)]
    return _finalize(problem, s, x_final, history, termination)


# -- material sweep --------------------------------------------------------------

@dataclass
class SweepRun:
    id: str
    assignment: tuple
    result: OptimizationResult | None
    embodied_carbon: float = math.nan
    mass: float = math.nan
    compliance: float = math.nan
    volume: float = math.nan
    time: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.result is not None


def _with_materials(problem, assignment: dict):
    """New Problem with element materials replaced per {element id: material}.

    When the problem's meta carries ``material_area_bounds`` ({material:
    [lower, initial, upper]}), area variables whose elements all share one
    assigned material adopt that material's sizing range.
    """
    model = problem.model
    elems = tuple(replace(e, material=assignment.get(e.id, e.material))
                  for e in model.elements)
    new_model = replace(model, elements=elems)
    bounds = problem.meta.get("material_area_bounds", {})
    variables = problem.variables
    if bounds:
        mat_of = {e.id: e.material for e in elems}
        new_vars = []
        for var in variables:
            mats = {mat_of[eid] for eid in var.elements}
            if var.kind == "area" and len(mats) == 1 and (m := mats.pop()) in bounds:
                lo, init, hi = bounds[m]
                var = replace(var, lower=lo, initial=init, upper=hi)
            new_vars.append(var)
        variables = tuple(new_vars)
    return replace(problem, model=new_model, variables=variables,
                   skeleton=build_skeleton(new_model, variables))


def _run_assignment(problem, group_elements, materials, combo, settings):
    assignment = {}
    for eids, mat in zip(group_elements, combo):
        for eid in eids:
            assignment[eid] = mat
    sub = _with_materials(problem, assignment)
    run_id = "".join(m[0].upper() for m in combo)
    t0 = time.perf_counter()
    try:
        result = optimize_mma(sub, settings)
    except Exception as exc:
        return SweepRun(id=run_id, assignment=combo, result=None, error=str(exc),
                        time=time.perf_counter() - t0)
    sk = sub.skeleton
    state = apply_variables(sub, result.x_final)
    cache = run_analysis(sub, state)
    return SweepRun(
        id=run_id, assignment=combo, result=result,
        embodied_carbon=fn.embodied_carbon(state, cache, sk.ecc, sk.rho),
        mass=float(np.sum(sk.rho * state.A * cache.L)),
        compliance=fn.compliance(cache),
        volume=fn.volume(state, cache),
        time=time.perf_counter() - t0)


def _sweep_worker(args):
    problem, group_elements, materials, combo, settings = args
    return _run_assignment(problem, group_elements, materials, combo, settings)


def material_sweep(problem, groups: list[str], materials: list[str],
                   settings: OptimizerSettings | None = None,
                   jobs: int = 1) -> list[SweepRun]:
    """One independent MMA run per material-to-group assignment.

    IDs concatenate the first letter of each assigned material in group
    order.  Per-run failures are isolated; results are sorted by objective.
    """
    if len(groups) > 12:
        warnings.warn(f"material sweep over {len(groups)} groups enumerates "
                      f"{len(materials)**len(groups)} runs")
    for g in groups:
        if g not in problem.groups:
            raise KeyError(f"unknown element group {g!r}")
    for m in materials:
        if m not in problem.model.materials:
            raise KeyError(f"unknown material {m!r}")
    s = settings or problem.optimizer
    group_elements = [problem.groups[g] for g in groups]
    combos = list(product(materials, repeat=len(groups)))

    if jobs > 1:
        clean = replace(problem,
                        skeleton=build_skeleton(problem.model, problem.variables))
        tasks = [(clean, group_elements, materials, c, s) for c in combos]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_sweep_worker, tasks))
    else:
        runs = [_run_assignment(problem, group_elements, materials, c, s)
                for c in combos]
    runs.sort(key=lambda r: (not r.ok, r.result.objective_final if r.ok else math.inf))
    return runs
