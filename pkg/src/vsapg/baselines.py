"""PALM and proximal gradient baselines sharing the VsaPG report format."""

from dataclasses import dataclass
import math
import time
from typing import Callable, Union

import numpy as np

from .functions import CompositeProblem, QuadraticDataFit, WeaklyConvexTerm
from .linops import Identity
from .report import (RunReport, StoppingRule, TraceRow, check_finite,
                     relative_residual)
from .solver import InfeasibleParameters
from .stationarity import original_measure

__all__ = ["PalmParams", "palm_step", "run_palm", "pg_step", "run_pg",
           "UnsupportedConfiguration"]

Schedule = Union[float, Callable[[int], float]]


class UnsupportedConfiguration(ValueError):
    pass


def _sched(v):
    if callable(v):
        return v
    v = float(v)
    return lambda k: v


@dataclass(frozen=True)
class PalmParams:
    """Proximal weights ``c_k`` (x-block) and ``d_k`` (y-block)."""

    c: Schedule = 18.0
    d: Schedule = 18.0


def _check_prox_weight(g, w, name, k):
    if not w > 0:
        raise InfeasibleParameters(f"{name} must be positive at k={k}, got {w}")
    if g.rho > 0 and not 1.0 / w < 1.0 / g.rho:
        raise InfeasibleParameters(
            f"ill-posed prox at k={k}: 1/{name} = {1.0 / w:.6g} must be below "
            f"1/rho = {1.0 / g.rho:.6g}")


def palm_step(problem: CompositeProblem, x, y, c, d):
    """One PALM sweep; both argmin subproblems are single prox evaluations."""
    H, f, g = problem.H, problem.f, problem.g
    x_new = f.prox(1.0 / c, x - H.grad_x(x, y) / c)
    y_new = g.prox(1.0 / d, y - H.grad_y(x_new, y) / d)
    return x_new, y_new


def run_palm(problem: CompositeProblem, params: PalmParams = None, x0=None,
             y0=None, stop: StoppingRule = None, config=None):
    """Run PALM on a problem whose ``A`` is the identity."""
    if not isinstance(problem.A, Identity):
        raise UnsupportedConfiguration(
            "PALM linearizes H only and needs g proxable in y; A must be the identity")
    params = params or PalmParams()
    stop = stop or StoppingRule()
    cs, ds = _sched(params.c), _sched(params.d)
    n = problem.A.input_dim
    x = np.zeros(problem.x_dim) if x0 is None else np.array(x0, dtype=float)
    y = np.zeros(n) if y0 is None else np.array(y0, dtype=float)
    D = getattr(problem.H, "D", None)

    def residual(xp, yp, xn, yn):
        if stop.kind == "displacement":
            dx = xn - xp
            dDx = D.apply(dx) if D is not None else dx
            dy = yn - yp
            return math.sqrt(dy @ dy + dDx @ dDx)
        if stop.kind == "successive_change":
            return relative_residual(xn, xp)
        return relative_residual(xn, yn)

    t0 = time.perf_counter()
    trace = []
    termination = "max-iter"
    res = relative_residual(x, y) if stop.kind == "relative_residual" else math.inf
    obj = problem.objective(x, y)
    it = 0
    for k in range(1, stop.maxiter + 1):
        c, d = cs(k), ds(k)
        _check_prox_weight(problem.g, d, "d_k", k)
        meas = original_measure(problem, 1.0 / c, x, y).total
        xn, yn = palm_step(problem, x, y, c, d)
        check_finite("x", k, xn)
        check_finite("y", k, yn)
        obj_new = problem.objective(xn, yn)
        trace.append(TraceRow(k, obj, math.nan, meas, res, math.nan, 1.0 / d,
                              1.0 / c, (time.perf_counter() - t0) * 1e3,
                              descent_slack=obj - obj_new))
        res = residual(x, y, xn, yn)
        x, y, obj = xn, yn, obj_new
        it = k
        if res < stop.tol or (stop.kind == "successive_change" and res <= stop.tol):
            termination = "tolerance-met"
            break
    k = it + 1
    trace.append(TraceRow(k, obj, math.nan,
                          original_measure(problem, 1.0 / cs(k), x, y).total, res,
                          math.nan, 1.0 / ds(k), 1.0 / cs(k),
                          (time.perf_counter() - t0) * 1e3))
    cfg = {"c_k": _describe(params.c), "d_k": _describe(params.d),
           "stop_kind": stop.kind, "stop_tol": stop.tol, "maxiter": stop.maxiter}
    cfg.update(config or {})
    return RunReport("palm", termination, it, x, y, trace, cfg,
                     elapsed_ms=(time.perf_counter() - t0) * 1e3)


def pg_step(f: QuadraticDataFit, g: WeaklyConvexTerm, x, c):
    """``x+ = prox_{g/c}(x - grad f(x) / c)`` for ``f = 0.5 ||Cx - b||^2``."""
    return g.prox(1.0 / c, x - f.grad(x) / c)


def run_pg(f: QuadraticDataFit, g: WeaklyConvexTerm, c: Schedule = None,
           x0=None, stop: StoppingRule = None, config=None):
    """Proximal gradient on ``0.5 ||Cx - b||^2 + g(x)``.

    `c` defaults to ``||C||^2``, the Lipschitz constant of ``grad f``. The
    stopping residual is the relative change between successive iterates.
    """
    stop = stop or StoppingRule("successive_change")
    if c is None:
        c = f.C.norm_bound() ** 2
    cs = _sched(c)
    x = np.zeros(f.C.input_dim) if x0 is None else np.array(x0, dtype=float)

    def objective(z):
        return f.value(z) + g.value(z)

    t0 = time.perf_counter()
    trace = []
    termination = "max-iter"
    res = math.inf
    obj = objective(x)
    it = 0
    for k in range(1, stop.maxiter + 1):
        ck = cs(k)
        _check_prox_weight(g, ck, "c_k", k)
        xn = pg_step(f, g, x, ck)
        check_finite("x", k, xn)
        obj_new = objective(xn)
        trace.append(TraceRow(k, obj, math.nan, ck * float(np.linalg.norm(xn - x)),
                              res, math.nan, math.nan, 1.0 / ck,
                              (time.perf_counter() - t0) * 1e3,
                              descent_slack=obj - obj_new))
        res = relative_residual(xn, x)
        x, obj = xn, obj_new
        it = k
        if res <= stop.tol:
            termination = "tolerance-met"
            break
    ck = cs(it + 1)
    xn = pg_step(f, g, x, ck)
    trace.append(TraceRow(it + 1, obj, math.nan, ck * float(np.linalg.norm(xn - x)),
                          res, math.nan, math.nan, 1.0 / ck,
                          (time.perf_counter() - t0) * 1e3))
    cfg = {"c_k": _describe(c), "stop_kind": stop.kind, "stop_tol": stop.tol,
           "maxiter": stop.maxiter}
    cfg.update(config or {})
    return RunReport("pg", termination, it, x, x.copy(), trace, cfg,
                     elapsed_ms=(time.perf_counter() - t0) * 1e3)


def _describe(v):
    return getattr(v, "__name__", "callable") if callable(v) else float(v)

