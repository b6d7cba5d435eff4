"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line (shown in the pytest terminal
summary, or printed when this file is run as a script) and then asserts.
"""

import math
import os
import sys
import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

sys.path.insert(0, os.path.dirname(__file__))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from vsapg.bench import (gen_sparse, make_denoise, run_denoise_experiment,
                         run_sparse_experiment, sparse_problem)
from vsapg.cli import parse_and_run
from vsapg.functions import L1, MCP, mcp_prox, mcp_value
from vsapg.moreau import SmoothedTerm, envelope_grad, envelope_shift_bound
from vsapg.report import StoppingRule
from vsapg.solver import VsaPGParams, complexity_certificate, run
from vsapg.stationarity import transfer_error_bound

EPS = np.finfo(float).eps
TABLE1 = {1e-2: 11, 1e-3: 23, 1e-4: 40, 1e-5: 103, 1e-6: 124}
ERRS = sorted(TABLE1, reverse=True)


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def descent_ok(rep):
    slack = rep.column("descent_slack")[:-1]
    lhs = np.abs(rep.column("smoothed_objective")[1:])
    return bool(np.all(slack >= -1e-8 * (1 + lhs))), float(slack.min())


# 1

def brute_prox(z, gamma, lam, xi, sigma_z):
    """Global minimizer of ``mcp(u) + (u - z)^2/(2 gamma)`` on [-6 sigma_z, 6 sigma_z].

    The objective is strongly convex (gamma < xi), so the cell around the
    best point of a 1e-3 scan brackets the minimizer; that cell is then
    scanned at 1e-5 and polished with a bounded scalar search.
    """
    def obj(u):
        return mcp_value(u, lam, xi) + (u - z) ** 2 / (2 * gamma)

    lo, hi = -6 * sigma_z, 6 * sigma_z
    u = np.arange(lo, hi + 1e-3, 1e-3)
    c = u[np.argmin(obj(u))]
    u = np.arange(max(lo, c - 1e-3), min(hi, c + 1e-3) + 1e-5, 1e-5)
    c = u[np.argmin(obj(u))]
    a, b = max(lo, c - 1e-5), min(hi, c + 1e-5)
    res = minimize_scalar(obj, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-12})
    return min((c, res.x), key=obj)


def test_criterion_1_prox_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        lam = rng.uniform(0.1, 2.0)
        xi = rng.uniform(0.2, 5.0)
        gamma = (1.0 - rng.uniform(0.0, 1.0)) * 0.9 * xi  # (0, 0.9 xi]
        sigma_z = 1.5 * xi * lam  # puts samples in all three branches
        z = float(np.clip(rng.normal(scale=sigma_z), -6 * sigma_z, 6 * sigma_z))
        ref = brute_prox(z, gamma, lam, xi, sigma_z)
        worst = max(worst, abs(mcp_prox(z, gamma, lam, xi) - ref))
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-4 and dt < 10,
           f"max |prox - brute force| = {worst:.2e} (tol 1e-4) over 1000 samples, "
           f"{dt:.1f} s (limit 10 s)")


# 2

def test_criterion_2_envelope_gradient():
    rng = np.random.default_rng(2)
    worst_fd = worst_bound = 0.0
    h = 1e-6
    for base_kind in ("mcp", "l1"):
        for _ in range(500):
            lam = rng.uniform(0.1, 2.0)
            if base_kind == "mcp":
                xi = rng.uniform(0.2, 5.0)
                base = MCP(lam, xi)
                mu = rng.uniform(0.05, 0.95) * xi
            else:
                base = L1(lam)
                mu = rng.uniform(0.05, 2.0)
            t = SmoothedTerm(base, mu)
            v = rng.normal(scale=2 * lam * max(mu, 1.0), size=4)
            g = envelope_grad(t, v)
            for i in range(v.size):
                e = np.zeros_like(v)
                e[i] = h
                fd = (t.value(v + e) - t.value(v - e)) / (2 * h)
                worst_fd = max(worst_fd, abs(fd - g[i]) / max(1.0, abs(g[i])))
            # componentwise Lipschitz constant of the separable base is lam
            worst_bound = max(worst_bound, np.max(np.abs(g)) - lam,
                              np.max(np.abs(v - t.prox(v))) - mu * lam)
    record(2, worst_fd <= 1e-5 and worst_bound <= 1e-12,
           f"max relative FD gap {worst_fd:.2e} (tol 1e-5); max excess over "
           f"Lipschitz bounds {worst_bound:.2e} (tol 1e-12)")


# 3

def test_criterion_3_envelope_monotonicity_and_scalar_inequality():
    rng = np.random.default_rng(3)
    worst = math.inf
    for _ in range(2000):
        lam, xi = rng.uniform(0.1, 2.0), rng.uniform(0.2, 5.0)
        g = MCP(lam, xi)
        mu1 = rng.uniform(0.01, 0.99) * xi
        mu2 = rng.uniform(0.01, 1.0) * mu1
        v = rng.normal(scale=3 * xi * lam, size=int(rng.integers(1, 9)))
        lhs = SmoothedTerm(g, mu2).value(v)
        rhs = SmoothedTerm(g, mu1).value(v) + envelope_shift_bound(
            mu1, mu2, g.lipschitz_norm(v.size))
        worst = min(worst, (rhs - lhs) / (8 * EPS * max(1.0, abs(rhs))))
    worst_grid = math.inf
    for x in (1, 2, 10, 100, 1e4, 1e6):
        for alpha in np.round(np.arange(0, 1.01, 0.1), 10):
            lhs = (1 + x) ** alpha - 1
            rhs = alpha * math.log(2) * x ** alpha
            worst_grid = min(worst_grid, (lhs - rhs) / (8 * EPS * max(1.0, abs(lhs))))
    record(3, worst >= -1 and worst_grid >= -1,
           f"min slack in units of 8 eps scale: envelope shift {worst:.3g}, "
           f"scalar grid {worst_grid:.3g} (need >= -1)")


# 4, 5

def test_criterion_4_descent():
    t0 = time.perf_counter()
    p = sparse_problem(gen_sparse(64, 256, seed=1))
    rep = run(p, stop=StoppingRule("relative_residual", 1e-4, 5000))
    dt = time.perf_counter() - t0
    ok, smin = descent_ok(rep)
    record(4, ok and rep.converged and dt < 5,
           f"{rep.iterations} iterations to err 1e-4, min descent slack {smin:.3e}, "
           f"{dt:.2f} s (limit 5 s)")


def test_criterion_5_complexity_envelope():
    p = sparse_problem(gen_sparse(64, 256, seed=1))
    rep = run(p, stop=StoppingRule("stationarity", 0.0, 5000), diagnose=False)
    cert = complexity_certificate(rep, L_lower=0.0)
    k = np.arange(1, len(cert.running_min) + 1)
    ratio = float(np.max(cert.running_min / (cert.theta_cap * k ** (-1 / 3))))
    record(5, cert.holds and len(rep.trace) == 5001 and ratio <= 1,
           f"{len(rep.trace)} measured iterates, Theta = {cert.theta_cap:.4g}, "
           f"max running-min / (Theta k^-1/3) = {ratio:.3g}")


# 6

@pytest.fixture(scope="module")
def table1_runs():
    t0 = time.perf_counter()
    out = {}
    for seed in range(1, 6):
        inst = gen_sparse(128, 512, seed)
        for err in ERRS:
            for algo in ("vsapg", "palm"):
                out[seed, err, algo] = run_sparse_experiment(
                    inst, algo, err, diagnose=(algo == "vsapg"))
    return out, time.perf_counter() - t0


def test_criterion_6_table1_ordering(table1_runs):
    runs, dt = table1_runs
    order_fail, band_fail, cert_fail = [], [], []
    for (seed, err, algo), rep in sorted(runs.items()):
        if algo != "vsapg":
            continue
        v, pa = rep.iterations, runs[seed, err, "palm"].iterations
        if not (rep.converged and v < pa):
            order_fail.append(f"seed {seed} err {err:.0e}: {v} vs palm {pa}")
        if not TABLE1[err] / 3 <= v <= 3 * TABLE1[err]:
            band_fail.append(f"s{seed}/{err:.0e}:{v}")
        if not (descent_ok(rep)[0] and complexity_certificate(rep).holds):
            cert_fail.append(f"s{seed}/{err:.0e}")
    counts = "; ".join(
        f"err {e:.0e}: vsapg " + "/".join(str(runs[s, e, "vsapg"].iterations)
                                          for s in range(1, 6))
        + " palm " + "/".join(str(runs[s, e, "palm"].iterations) for s in range(1, 6))
        for e in ERRS)
    ok = not (order_fail or band_fail or cert_fail) and dt < 60
    record(6, ok,
           f"ordering violations {len(order_fail)}/25, factor-3 band violations "
           f"{len(band_fail)}/25 [{', '.join(band_fail)}], certificate failures "
           f"{len(cert_fail)}, {dt:.1f} s (limit 60 s); counts {counts}")


# 7

def test_criterion_7_table4_ordering():
    t0 = time.perf_counter()
    lines, fails = [], 0
    for seed in range(1, 6):
        inst = gen_sparse(150, 300, seed)
        c_norm = float(np.linalg.norm(inst.C.matrix, 2)) ** 2
        for err in (1e-2, 1e-3, 1e-4):
            v = run_sparse_experiment(inst, "vsapg", err)
            sc = run_sparse_experiment(inst, "vsapg", err, diagnose=False,
                                       stop_kind="successive_change").iterations
            pg = {name: run_sparse_experiment(inst, "pg", err, params=c).iterations
                  for name, c in (("||C||^2", c_norm), ("18", 18.0))}
            ok = v.converged and all(v.iterations < n for n in pg.values())
            ok &= descent_ok(v)[0] and complexity_certificate(v).holds
            fails += not ok
            lines.append(f"s{seed}/{err:.0e}: vsapg {v.iterations} (successive-change "
                         f"rule {sc}) vs pg {pg['||C||^2']}|{pg['18']}")
    dt = time.perf_counter() - t0
    record(7, fails == 0 and dt < 30,
           f"{fails}/15 cells where vsapg does not beat pg under both c "
           f"(||C||^2 | 18), {dt:.1f} s (limit 30 s); " + "; ".join(lines))


# 8

def test_criterion_8_denoising():
    t0 = time.perf_counter()
    inst = make_denoise(seed=0, noise_std=0.01)
    v = run_denoise_experiment(inst, "vsapg", 1e-2, 500, diagnose=True)
    p = run_denoise_experiment(inst, "palm", 1e-2, 500)
    dt = time.perf_counter() - t0
    sv, sp = v.config["snr_db"], p.config["snr_db"]
    ok = (v.converged and v.iterations < 500 and sv >= sp - 0.05 and dt < 120
          and descent_ok(v)[0] and complexity_certificate(v).holds)
    record(8, ok, f"vsapg {v.iterations} iterations at {sv:.4f} dB, palm "
                  f"{p.iterations} iterations at {sp:.4f} dB, {dt:.1f} s (limit 120 s)")


# 9

def test_criterion_9_stationarity_transfer():
    rng = np.random.default_rng(9)
    worst = -math.inf
    for i in range(100):
        m = int(rng.integers(16, 48))
        inst = gen_sparse(m, int(rng.integers(34, 96)), seed=1000 + i)
        p = sparse_problem(inst)
        rep = run(p, stop=StoppingRule("relative_residual", 10 ** rng.uniform(-4, -2), 3000),
                  diagnose=False, transfer=True)
        last = rep.trace[-1]
        bound = transfer_error_bound(last.measure, p.L12, p.L22, p.lipschitz_g, 1.0,
                                     last.mu_k)
        worst = max(worst, rep.transfer_measure.total - bound)
    record(9, worst <= 1e-8,
           f"max (original measure at transfer point - bound) = {worst:.3e} over "
           f"100 instances (tol 1e-8)")


# 10

def test_criterion_10_determinism(tmp_path, monkeypatch):
    monkeypatch.delenv("VSAPG_OUTPUT_DIR", raising=False)
    same = True
    for algo in ("vsapg", "palm"):
        outs = []
        for rep in ("a", "b"):
            d = tmp_path / f"{algo}_{rep}"
            code = parse_and_run(["sparse", "--algo", algo, "--m", "128", "--n", "512",
                                  "--err", "1e-3", "--seed", "3", "--out", str(d)])
            assert code in (0, 2)
            outs.append({n: (d / n).read_bytes() for n in sorted(os.listdir(d))})
        same &= outs[0] == outs[1]
    record(10, same, "repeated vsapg and palm runs of the 128x512 seed-3 err-1e-3 "
                     "cell give byte-identical trace and summary CSVs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
