import numpy as np
import pytest

from vsapg.baselines import (PalmParams, UnsupportedConfiguration, palm_step, pg_step,
                             run_palm, run_pg)
from vsapg.bench import gen_sparse, sparse_problem
from vsapg.functions import (MCP, CompositeProblem, PenaltyXY, QuadraticDataFit,
                             QuadraticTether, ZeroTerm, mcp_prox)
from vsapg.linops import DenseMap, Gradient2D
from vsapg.report import StoppingRule
from vsapg.solver import InfeasibleParameters


def test_palm_golden_scalar_step():
    p = CompositeProblem.with_identity(QuadraticTether(np.zeros(1)), MCP(0.5, 2.0),
                                       PenaltyXY(1.0), 1)
    x, y = palm_step(p, np.ones(1), np.ones(1), 18.0, 18.0)
    # x1 = argmin 0.5 u^2 + 9 (u - 1)^2 = 18/19
    assert x[0] == pytest.approx(18 / 19, rel=1e-15)
    # y1 = prox_{g/18}(1 - (1 - 18/19)/18) = prox at 341/342, middle branch
    z, gam = 341 / 342, 1 / 18
    assert gam * 0.5 < z < 2.0 * 0.5
    assert y[0] == pytest.approx((z - gam * 0.5) / (1 - gam / 2.0), rel=1e-14)
    assert y[0] == pytest.approx(mcp_prox(z, gam, 0.5, 2.0), rel=1e-15)


def test_palm_objective_nonincreasing_with_safe_weights():
    inst = gen_sparse(64, 256, 3)
    p = sparse_problem(inst)
    L11 = float(np.linalg.norm(inst.C.matrix, 2)) ** 2 + 5.0
    params = PalmParams(c=L11, d=5.0 + p.rho + 1e-9)
    rep = run_palm(p, params, stop=StoppingRule("none", maxiter=200))
    obj = rep.column("objective")
    assert np.all(np.diff(obj) <= 1e-10 * (1 + np.abs(obj[1:])))


def test_palm_needs_identity_A():
    D = Gradient2D(4, 4)
    p = CompositeProblem(QuadraticTether(np.zeros(16)), MCP(1, 2), PenaltyXY(1.0), D)
    with pytest.raises(UnsupportedConfiguration):
        run_palm(p)


def test_palm_rejects_ill_posed_weight():
    p = sparse_problem(gen_sparse(64, 128, 0))
    with pytest.raises(InfeasibleParameters, match="d_k"):
        run_palm(p, PalmParams(18.0, 1.5))


def test_palm_stops_on_tolerance():
    p = sparse_problem(gen_sparse(64, 128, 1))
    rep = run_palm(p, stop=StoppingRule("relative_residual", 1e-3, 5000))
    assert rep.converged and rep.final_residual < 1e-3
    assert rep.iterations == len(rep.trace) - 1


def test_pg_with_zero_g_is_gradient_descent(rng):
    C = DenseMap(rng.standard_normal((10, 6)))
    b = rng.standard_normal(10)
    f = QuadraticDataFit(C, b)
    c = np.linalg.norm(C.matrix, 2) ** 2
    x = rng.standard_normal(6)
    ref = x - C.matrix.T @ (C.matrix @ x - b) / c
    assert np.allclose(pg_step(f, ZeroTerm(), x, c), ref, atol=1e-14)


def test_pg_fixed_point_at_zero():
    C = DenseMap(np.eye(5, 8))
    f = QuadraticDataFit(C, np.zeros(5))
    rep = run_pg(f, MCP(0.1, 0.5), c=4.0,
                stop=StoppingRule("successive_change", 1e-8, 10))
    assert rep.converged and rep.iterations == 1
    assert np.array_equal(rep.x, np.zeros(8))


def test_pg_default_c_is_lipschitz_constant():
    inst = gen_sparse(64, 128, 2)
    p = sparse_problem(inst)
    rep = run_pg(p.f, p.g, stop=StoppingRule("successive_change", 1e-3, 20))
    c = 1 / rep.trace[0].sigma_k
    assert c == pytest.approx(np.linalg.norm(inst.C.matrix, 2) ** 2, rel=1e-6)


def test_pg_rejects_ill_posed_step():
    p = sparse_problem(gen_sparse(64, 128, 0))
    with pytest.raises(InfeasibleParameters, match="c_k"):
        run_pg(p.f, p.g, c=1.0)


def test_pg_objective_nonincreasing():
    p = sparse_problem(gen_sparse(64, 256, 5))
    rep = run_pg(p.f, p.g, stop=StoppingRule("successive_change", 1e-6, 300))
    obj = rep.column("objective")
    assert np.all(np.diff(obj) <= 1e-10 * (1 + np.abs(obj[1:])))
