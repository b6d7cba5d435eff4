"""Fast invariant checks behind ``vsapg selftest``.

Each check returns ``(ok, detail)``. They use small random instances and
independent reference computations (brute-force minimization, finite
differences, dense linear algebra), so a pass means more than agreement
of the code with itself.
"""

import math

import numpy as np

from .bench import gen_sparse, run_sparse_experiment, sparse_problem
from .functions import L1, MCP, mcp_value
from .linops import DenseMap, Gradient2D, power_norm
from .moreau import SmoothedTerm, SmoothingSchedule
from .pgm import from_bytes, to_bytes
from .solver import InfeasibleParameters, VsaPGParams, complexity_certificate, validate

__all__ = ["CHECKS", "run_all"]


def check_adjoint():
    rng = np.random.default_rng(11)
    D = Gradient2D(7, 9)
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal(D.input_dim)
        v = rng.standard_normal(D.output_dim)
        lhs = D.apply(u) @ v
        rhs = u @ D.adjoint_apply(v)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst < 1e-10, f"max relative adjoint gap {worst:.2e}"


def check_power_norm():
    rng = np.random.default_rng(12)
    M = rng.standard_normal((30, 50))
    est = power_norm(DenseMap(M), tol=1e-10)
    exact = np.linalg.norm(M, 2)
    ok = est.certified and exact <= est.value <= exact * (1 + 1e-6)
    return ok, f"estimate {est.value:.10g}, exact {exact:.10g}"


def check_mcp_prox():
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(50):
        lam = rng.uniform(0.1, 2.0)
        xi = rng.uniform(0.2, 5.0)
        gamma = rng.uniform(0.01, 0.9) * xi
        z = rng.normal(scale=2 * xi * lam)
        grid = np.linspace(z - 4 * abs(z) - 4, z + 4 * abs(z) + 4, 400001)
        obj = mcp_value(grid, lam, xi) + (grid - z) ** 2 / (2 * gamma)
        u_ref = grid[np.argmin(obj)]
        u = float(MCP(lam, xi).prox(gamma, np.array([z]))[0])
        gap = (mcp_value(u, lam, xi) + (u - z) ** 2 / (2 * gamma)) - obj.min()
        worst = max(worst, gap)
        if abs(u - u_ref) > 1e-3 and gap > 1e-9:
            return False, f"prox {u} vs grid {u_ref} at z={z}"
    return worst < 1e-8, f"max objective excess {worst:.2e}"


def check_envelope_gradient():
    rng = np.random.default_rng(14)
    worst = 0.0
    for base in (MCP(0.7, 1.5), L1(0.7)):
        t = SmoothedTerm(base, 0.3)
        for _ in range(100):
            v = rng.normal(scale=2.0, size=1)
            h = 1e-6
            fd = (t.value(v + h) - t.value(v - h)) / (2 * h)
            gr = float(t.grad(v)[0])
            worst = max(worst, abs(fd - gr) / max(1.0, abs(gr)))
    return worst < 1e-5, f"max finite-difference gap {worst:.2e}"


def check_schedule():
    s = SmoothingSchedule(0.5)
    ok = math.isclose(s.mu_at(1), 0.5) and all(
        s.mu_at(k + 1) < s.mu_at(k) for k in range(1, 200))
    return ok, f"mu_1={s.mu_at(1)}, mu_200={s.mu_at(200):.6g}"


def check_validate():
    inst = gen_sparse(64, 256, seed=1)
    prob = sparse_problem(inst)
    d = validate(VsaPGParams(), prob)
    ok = math.isclose(d.delta, 0.16, rel_tol=1e-9) and math.isclose(
        d.kappa, 0.9999, rel_tol=1e-9)
    try:
        validate(VsaPGParams(alpha=0.99), prob)
        ok = False
    except InfeasibleParameters:
        pass
    return ok, f"delta={d.delta:.12g}, kappa={d.kappa:.12g}"


def check_descent_and_rate():
    inst = gen_sparse(64, 256, seed=2)
    rep = run_sparse_experiment(inst, "vsapg", 1e-3, maxiter=400)
    slack = np.array([r.descent_slack for r in rep.trace[:-1]])
    lhs = np.abs(np.array([r.smoothed_objective for r in rep.trace[1:]]))
    cert = complexity_certificate(rep)
    ok = bool(np.all(slack >= -1e-8 * (1 + lhs))) and cert.holds
    return ok, f"min descent slack {slack.min():.3e}, rate envelope {'holds' if cert.holds else 'violated'}"


def check_pgm():
    q = np.arange(256, dtype=float).reshape(16, 16) / 255.0
    data = to_bytes(q)
    back = from_bytes(data)
    ok = np.array_equal(back, q) and to_bytes(back) == data
    return ok, f"{len(data)} bytes, all 256 levels preserved" if ok else "mismatch"


CHECKS = [
    ("adjoint", check_adjoint),
    ("power-norm", check_power_norm),
    ("mcp-prox", check_mcp_prox),
    ("envelope-gradient", check_envelope_gradient),
    ("schedule", check_schedule),
    ("validate", check_validate),
    ("descent-and-rate", check_descent_and_rate),
    ("pgm-roundtrip", check_pgm),
]


def run_all(stream=None):
    """Run every check, print one line each, return True iff all pass."""
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        if stream is not None:
            print(line, file=stream)
    return all_ok
