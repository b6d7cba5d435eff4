"""Variable smoothing alternating proximal gradient (VsaPG).

Each iteration takes a gradient step in ``y`` on the smoothed coupling
``g_{mu_k}(Ay) + H(x, y)``, extrapolates it, takes a proximal gradient step
in ``x`` against the fresh ``y``, and averages ``x``. The smoothing level
``mu_k`` shrinks on a power law.

The module also carries the parameter feasibility check, the per-iteration
sufficient-decrease certificate and the running-min complexity envelope,
so every run can audit itself.
"""

from dataclasses import asdict, dataclass
import logging
import math
import time
from typing import Callable, Optional, Union

import numpy as np

from .moreau import SmoothedTerm, SmoothingSchedule, envelope_grad_lipschitz
from .report import (RunReport, StoppingRule, TraceRow, check_finite,
                     relative_residual)
from .stationarity import (gradient_mapping, original_measure,
                           smoothed_measure, transfer_point)
from .linops import Identity

logger = logging.getLogger(__name__)

__all__ = [
    "l_k",
    "VsaPGParams",
    "InfeasibleParameters",
    "DescentDiagnostics",
    "VsaPGState",
    "StepInfo",
    "Certificate",
    "validate",
    "step",
    "run",
    "descent_check",
    "complexity_certificate",
    "smoothed_objective",
]

Selector = Union[float, Callable[[int], float]]

_REL = 1e-12  # slack when comparing a selector to its interval ends


class InfeasibleParameters(ValueError):
    """A Step-1 condition fails; the message shows both sides of it."""


def l_k(L22, norm_A, mu_k, rho):
    """Lipschitz constant of ``grad_y`` of the smoothed coupling at level `mu_k`."""
    return L22 + norm_A ** 2 * envelope_grad_lipschitz(mu_k, rho)


@dataclass(frozen=True)
class VsaPGParams:
    """Step sizes, extrapolation weights and smoothing for VsaPG.

    The four selectors may be constants or functions of the iteration
    counter ``k >= 1``. ``sigma=None`` means ``1/L11`` and ``tau=None``
    means ``1/L_k``. The interval ends (``alpha_bar``, ``beta_bar``,
    ``sigma_bar``, ``gamma``, ``eta``) are inferred for constant selectors
    and for the default ``tau``; supply them for callables.
    """

    alpha: Selector = 0.2
    beta: Selector = 0.99
    sigma: Optional[Selector] = None
    tau: Optional[Callable[[int], float]] = None
    mu1: Optional[float] = None
    theta: float = 1.0 / 3.0
    alpha_bar: Optional[float] = None
    beta_bar: Optional[float] = None
    sigma_bar: Optional[float] = None
    gamma: Optional[float] = None
    eta: Optional[float] = None


@dataclass(frozen=True)
class DescentDiagnostics:
    """Constants that govern the sufficient decrease and the rate bound."""

    delta: float
    kappa: float
    M: float
    alpha_bar: float
    beta_bar: float
    sigma_bar: float
    gamma: float
    eta: float
    mu1: float
    theta: float
    L11: float
    L12: float
    L22: float
    rho: float
    norm_A: float
    L_g: float

    def theta_cap(self, start_value, L_lower=0.0):
        """Rate constant from the smoothed objective at the start point.

        Any lower bound ``L_lower`` on the smoothed objective values may be
        used; a smaller one only enlarges the constant.
        """
        budget = start_value - L_lower + self.mu1 * self.L_g ** 2
        return math.sqrt(2.0 / math.log(2.0) / self.M * max(budget, 0.0))


def _const(sel):
    return None if callable(sel) else float(sel)


def _as_callable(sel):
    if callable(sel):
        return sel
    v = float(sel)
    return lambda k: v


def validate(params: VsaPGParams, problem) -> DescentDiagnostics:
    """Check the Step-1 conditions and compute ``delta``, ``kappa`` and ``M``.

    Raises :class:`InfeasibleParameters` naming the first violated
    inequality with both of its sides evaluated.
    """
    L11, L12, L22 = problem.L11, problem.L12, problem.L22
    rho, norm_A = problem.rho, problem.norm_A

    def fail(msg):
        raise InfeasibleParameters(msg)

    mu1 = params.mu1
    if mu1 is None:
        mu1 = 0.5 / rho if rho > 0 else 1.0
    if not (mu1 > 0 and mu1 * rho < 1):
        fail(f"mu1 in (0, 1/rho) violated: mu1 = {mu1:.6g}, 1/rho = "
             f"{(1 / rho if rho else math.inf):.6g}")
    if not 0 < params.theta < 1:
        fail(f"theta in (0, 1) violated: theta = {params.theta:.6g}")

    alpha_bar = params.alpha_bar
    if alpha_bar is None:
        a = _const(params.alpha)
        if a is None:
            fail("alpha is a callable; alpha_bar must be given")
        alpha_bar = abs(a)
    if not 0 <= alpha_bar < 1:
        fail(f"alpha in [0, 1) violated: alpha = {alpha_bar:.6g}")

    beta_bar = params.beta_bar
    if beta_bar is None:
        b = _const(params.beta)
        if b is None:
            fail("beta is a callable; beta_bar must be given")
        beta_bar = b
    if not 0 < beta_bar <= 1:
        fail(f"beta in (0, 1] violated: beta = {beta_bar:.6g}")

    sigma = params.sigma
    if sigma is None:
        if L11 <= 0:
            fail("L11 = 0 needs an explicit sigma")
        sigma = 1.0 / L11
    sigma_bar = params.sigma_bar
    gamma = params.gamma
    s = _const(sigma)
    if sigma_bar is None:
        if s is None:
            fail("sigma is a callable; sigma_bar must be given")
        sigma_bar = s
    if gamma is None:
        if s is None:
            fail("sigma is a callable; gamma must be given")
        gamma = s
    if not sigma_bar > 0:
        fail(f"sigma > 0 violated: sigma = {sigma_bar:.6g}")
    if L11 > 0 and not sigma_bar < 2.0 / L11:
        fail(f"sigma < 2/L11 violated: sigma = {sigma_bar:.6g}, 2/L11 = {2 / L11:.6g}")
    if not gamma > 0:
        fail(f"gamma > 0 violated: gamma = {gamma:.6g}")

    eta = params.eta
    if eta is None:
        if params.tau is not None:
            fail("custom tau needs an explicit eta")
        # 1/L_k * k^theta is nondecreasing when the smoothing exponent <= theta
        eta = 1.0 / l_k(L22, norm_A, mu1, rho)
    if not eta > 0:
        fail(f"eta > 0 violated: eta = {eta:.6g}")

    floor = L22 + 2.0 * rho * norm_A ** 2
    coupling = 0.0 if L12 == 0 else L12 ** 2 * (1 + alpha_bar) ** 2 / (L11 * floor)
    lhs = 1.0 - alpha_bar ** 2
    delta = lhs - coupling
    if not delta > 0:
        fail("delta > 0 violated: 1 - alpha^2 = "
             f"{lhs:.6g} must exceed L12^2 (1+alpha)^2 / (L11 (L22 + 2 rho ||A||^2)) = "
             f"{coupling:.6g} (delta = {delta:.6g}, alpha = {alpha_bar:.6g})")
    kappa = min((2.0 - L11 * beta_bar * sigma_bar) * beta_bar,
                2.0 - L11 * sigma_bar)
    if not kappa > 0:
        fail(f"kappa > 0 violated: kappa = {kappa:.6g}")
    M = min(delta * eta / 2.0,
            (2.0 - L11 * beta_bar * sigma_bar) * beta_bar * gamma / 4.0,
            (2.0 - L11 * sigma_bar) * gamma / 4.0)

    return DescentDiagnostics(
        delta=delta, kappa=kappa, M=M, alpha_bar=alpha_bar, beta_bar=beta_bar,
        sigma_bar=sigma_bar, gamma=gamma, eta=eta, mu1=mu1, theta=params.theta,
        L11=L11, L12=L12, L22=L22, rho=rho, norm_A=norm_A,
        L_g=problem.lipschitz_g)


@dataclass(frozen=True)
class VsaPGState:
    k: int
    x: np.ndarray
    xbar: np.ndarray
    y: np.ndarray
    ybar: np.ndarray
    mu: float


@dataclass(frozen=True)
class StepInfo:
    """What step ``k`` used and measured at its starting iterate."""

    k: int
    tau: float
    sigma: float
    alpha: float
    beta: float
    mu: float
    mu_next: float
    grad_y_norm: float   # ||A^T grad g_mu(A ybar) + grad_y H(xbar, ybar)||
    grad_map_norm: float  # ||G_sigma(xbar, ybar)||

    @property
    def measure(self):
        return self.grad_y_norm + self.grad_map_norm


class _Selectors:
    def __init__(self, params, diag, problem):
        self.alpha = _as_callable(params.alpha)
        self.beta = _as_callable(params.beta)
        self.sigma = _as_callable(params.sigma if params.sigma is not None
                                  else 1.0 / problem.L11)
        self.schedule = SmoothingSchedule(diag.mu1, params.theta)
        if params.tau is None:
            self.tau = lambda k: 1.0 / l_k(diag.L22, diag.norm_A,
                                           self.schedule.mu_at(k), diag.rho)
        else:
            self.tau = params.tau
        self.diag = diag

    def at(self, k):
        d = self.diag
        a, b, s, t = self.alpha(k), self.beta(k), self.sigma(k), self.tau(k)
        mu = self.schedule.mu_at(k)
        kt = k ** (-d.theta)
        Lk = l_k(d.L22, d.norm_A, mu, d.rho)
        checks = (
            ("alpha_k in [-alpha, alpha]", abs(a) <= d.alpha_bar * (1 + _REL), a),
            ("beta_k in [beta, 1]", d.beta_bar * (1 - _REL) <= b <= 1 + _REL, b),
            ("sigma_k in [gamma k^-theta, sigma]",
             d.gamma * kt * (1 - _REL) <= s <= d.sigma_bar * (1 + _REL), s),
            ("tau_k in [eta k^-theta, 1/L_k]",
             d.eta * kt * (1 - _REL) <= t <= (1 + _REL) / Lk, t),
        )
        for name, ok, val in checks:
            if not ok:
                raise InfeasibleParameters(f"{name} violated at k={k}: value {val:.6g}")
        return a, b, s, t, mu


def smoothed_objective(problem, mu, x, y):
    """``f(x) + g_mu(Ay) + H(x, y)``."""
    g_mu = SmoothedTerm(problem.g, mu)
    return problem.f.value(x) + g_mu.value(problem.A.apply(y)) + problem.H.value(x, y)


def step(problem, sel: _Selectors, state: VsaPGState):
    """One pass of the four updates; returns ``(next_state, info)``."""
    k = state.k
    a, b, s, t, mu = sel.at(k)
    A, H, f = problem.A, problem.H, problem.f
    xbar, ybar = state.xbar, state.ybar

    env = SmoothedTerm(problem.g, mu)
    grad_y = A.adjoint_apply(env.grad(A.apply(ybar))) + H.grad_y(xbar, ybar)
    check_finite("grad_y", k, grad_y)
    G = gradient_mapping(f, H, s, xbar, ybar)

    y_new = ybar - t * grad_y
    check_finite("y", k, y_new)
    ybar_new = y_new + a * (y_new - ybar)
    check_finite("ybar", k, ybar_new)
    x_new = f.prox(s, xbar - s * H.grad_x(xbar, ybar_new))
    check_finite("x", k, x_new)
    xbar_new = (1.0 - b) * xbar + b * x_new
    check_finite("xbar", k, xbar_new)

    mu_next = sel.schedule.mu_at(k + 1)
    info = StepInfo(k, t, s, a, b, mu, mu_next,
                    float(np.linalg.norm(grad_y)), float(np.linalg.norm(G)))
    return VsaPGState(k + 1, x_new, xbar_new, y_new, ybar_new, mu_next), info


def descent_check(problem, diag: DescentDiagnostics, before: VsaPGState,
                  after: VsaPGState, info: StepInfo, telescoping=False):
    """Slack ``RHS - LHS`` of the per-iteration sufficient decrease.

    ``L_{mu_k}(after) <= L_{mu_k}(before) - delta tau_k ||grad_y||^2 / 2
    - kappa sigma_k ||G||^2 / 4 + (mu_k - mu_{k+1}) L_g^2``.

    With ``telescoping=True`` the left side is evaluated at ``mu_{k+1}``,
    the stronger form that sums to the rate bound.
    """
    lhs_mu = info.mu_next if telescoping else info.mu
    lhs = smoothed_objective(problem, lhs_mu, after.xbar, after.ybar)
    rhs = (smoothed_objective(problem, info.mu, before.xbar, before.ybar)
           - 0.5 * diag.delta * info.tau * info.grad_y_norm ** 2
           - 0.25 * diag.kappa * info.sigma * info.grad_map_norm ** 2
           + (info.mu - info.mu_next) * diag.L_g ** 2)
    return rhs - lhs, lhs


def _residual(rule, problem, prev, cur):
    if rule.kind == "displacement":
        D = getattr(problem.H, "D", None)
        dy = cur.ybar - prev.ybar
        dx = cur.xbar - prev.xbar
        dDx = D.apply(dx) if D is not None else dx
        return float(math.sqrt(dy @ dy + dDx @ dDx))
    if rule.kind == "successive_change":
        return relative_residual(cur.xbar, prev.xbar)
    return relative_residual(cur.xbar, cur.ybar)


def _measure_only(problem, sel, state):
    a, b, s, t, mu = sel.at(state.k)
    rep = smoothed_measure(problem, s, mu, state.xbar, state.ybar)
    return rep, t, s, mu


def run(problem, params: VsaPGParams = None, x0=None, y0=None,
        stop: StoppingRule = None, diagnose=True, transfer=False, config=None):
    """Iterate VsaPG from ``(x0, y0)`` until `stop` fires.

    Parameters
    ----------
    problem : CompositeProblem
    params : VsaPGParams, optional
        Defaults mirror the sparse-recovery settings (alpha 0.2, beta 0.99,
        sigma 1/L11, tau 1/L_k, theta 1/3, mu1 = 1/(2 rho)).
    x0, y0 : array, optional
        Starting point, zeros by default.
    stop : StoppingRule, optional
    diagnose : bool
        Evaluate the sufficient-decrease slack at every iteration.
    transfer : bool
        Also compute the transfer point of the final iterate and, when
        ``A`` is the identity, its unsmoothed stationarity measure.

    Returns
    -------
    RunReport
        ``diagnostics`` holds the :class:`DescentDiagnostics`.
    """
    params = params or VsaPGParams()
    stop = stop or StoppingRule()
    diag = validate(params, problem)
    sel = _Selectors(params, diag, problem)

    x0 = np.zeros(problem.x_dim) if x0 is None else np.array(x0, dtype=float)
    y0 = np.zeros(problem.A.input_dim) if y0 is None else np.array(y0, dtype=float)
    state = VsaPGState(1, x0, x0.copy(), y0, y0.copy(), sel.schedule.mu_at(1))

    t0 = time.perf_counter()
    trace = []
    termination = "max-iter"
    iterations = 0
    prev_residual = (relative_residual(x0, y0) if stop.kind == "relative_residual"
                     else math.inf)
    for _ in range(stop.maxiter):
        k = state.k
        if stop.kind == "stationarity":
            rep, t, s, mu = _measure_only(problem, sel, state)
            if rep.total <= stop.tol:
                termination = "tolerance-met"
                break
        new, info = step(problem, sel, state)
        row = TraceRow(
            k=k,
            objective=problem.objective(state.xbar, state.ybar),
            smoothed_objective=smoothed_objective(problem, info.mu, state.xbar, state.ybar),
            measure=info.measure,
            residual=prev_residual,
            mu_k=info.mu, tau_k=info.tau, sigma_k=info.sigma,
            time_ms=(time.perf_counter() - t0) * 1e3)
        if diagnose:
            row.descent_slack, _ = descent_check(problem, diag, state, new, info)
            row.telescoping_slack, _ = descent_check(problem, diag, state, new, info,
                                                     telescoping=True)
        trace.append(row)
        iterations += 1
        prev_residual = _residual(stop, problem, state, new)
        state = new
        if stop.kind in ("relative_residual", "displacement") and prev_residual < stop.tol:
            termination = "tolerance-met"
            break
        if stop.kind == "successive_change" and prev_residual <= stop.tol:
            termination = "tolerance-met"
            break

    rep, t, s, mu = _measure_only(problem, sel, state)
    trace.append(TraceRow(
        k=state.k, objective=problem.objective(state.xbar, state.ybar),
        smoothed_objective=smoothed_objective(problem, mu, state.xbar, state.ybar),
        measure=rep.total, residual=prev_residual, mu_k=mu, tau_k=t, sigma_k=s,
        time_ms=(time.perf_counter() - t0) * 1e3))
    if stop.kind == "stationarity" and rep.total <= stop.tol:
        termination = "tolerance-met"

    report = RunReport(
        algorithm="vsapg", termination=termination, iterations=iterations,
        x=state.xbar, y=state.ybar, trace=trace, diagnostics=diag,
        config=_config_echo(params, diag, stop, config),
        elapsed_ms=(time.perf_counter() - t0) * 1e3)
    if transfer:
        report.transfer = transfer_point(problem.g, problem.A, mu, state.xbar, state.ybar)
        if isinstance(problem.A, Identity):
            report.transfer_measure = original_measure(problem, s, *report.transfer)
    return report


def _config_echo(params, diag, stop, extra):
    out = {}
    for key, val in asdict(params).items():
        if callable(val):
            val = getattr(val, "__name__", "callable")
        out[key] = val
    out.update({f"resolved_{k}": v for k, v in asdict(diag).items()})
    out.update({"stop_kind": stop.kind, "stop_tol": stop.tol, "maxiter": stop.maxiter})
    if extra:
        out.update(extra)
    return out


@dataclass(frozen=True)
class Certificate:
    holds: bool
    theta_cap: float
    running_min: np.ndarray
    bound: np.ndarray
    first_violation: Optional[int]


def complexity_certificate(report: RunReport, diag: DescentDiagnostics = None,
                           L_lower=0.0):
    """Check ``min_{j<=k} measure_j <= Theta * k**((theta - 1)/2)`` for every k.

    `L_lower` must lower-bound the smoothed objective along the run; 0 is
    valid whenever every term of the objective is nonnegative.
    """
    diag = diag or report.diagnostics
    measures = report.column("measure")
    ks = report.column("k")
    cap = diag.theta_cap(report.trace[0].smoothed_objective, L_lower)
    running = np.minimum.accumulate(measures)
    bound = cap * ks ** ((diag.theta - 1.0) / 2.0)
    bad = np.nonzero(running > bound * (1 + 1e-12))[0]
    first = int(ks[bad[0]]) if bad.size else None
    return Certificate(first is None, cap, running, bound, first)
