import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsapg.functions import (L1, MCP, CompositeProblem, PenaltyGrad, PenaltyXY,
                             QuadraticDataFit, QuadraticTether, ZeroFunction,
                             mcp_prox, mcp_value, prox_f, separable_prox)
from vsapg.linops import DenseMap, Gradient2D, Identity


def brute_prox(phi, gamma, z, half_width=None, step=1e-4):
    """argmin_u phi(u) + (u - z)^2 / (2 gamma) by grid search plus refinement."""
    hw = half_width if half_width is not None else 4 * abs(z) + 4
    u = np.arange(z - hw, z + hw + step, step)
    obj = phi(u) + (u - z) ** 2 / (2 * gamma)
    c = u[np.argmin(obj)]
    fine = np.linspace(c - 2 * step, c + 2 * step, 4001)
    obj = phi(fine) + (fine - z) ** 2 / (2 * gamma)
    return fine[np.argmin(obj)]


# MCP value

def test_mcp_value_examples():
    assert mcp_value(0.0, 1, 2) == 0.0
    assert mcp_value(5.0, 1, 2) == 1.0
    assert mcp_value(1.0, 1, 2) == 0.75


def test_mcp_value_continuous_at_threshold():
    for eps in (1e-6, 1e-9):
        assert abs(mcp_value(2 - eps, 1, 2) - mcp_value(2 + eps, 1, 2)) < 10 * eps


@pytest.mark.parametrize("lam,xi", [(0, 1), (1, 0), (-1, 1)])
def test_mcp_rejects_nonpositive(lam, xi):
    with pytest.raises(ValueError):
        mcp_value(1.0, lam, xi)


@settings(max_examples=200, deadline=None)
@given(lam=st.floats(0.1, 2), xi=st.floats(0.2, 5),
       z=st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_mcp_weakly_convex_midpoint(lam, xi, z):
    a, b, _ = z
    q = lambda u: mcp_value(u, lam, xi) + u * u / (2 * xi)
    assert q((a + b) / 2) <= (q(a) + q(b)) / 2 + 1e-9


@settings(max_examples=200, deadline=None)
@given(lam=st.floats(0.1, 2), xi=st.floats(0.2, 5), a=st.floats(-10, 10),
       b=st.floats(-10, 10))
def test_mcp_lipschitz(lam, xi, a, b):
    assert abs(mcp_value(a, lam, xi) - mcp_value(b, lam, xi)) <= lam * abs(a - b) + 1e-12


# MCP prox

def test_mcp_prox_examples():
    assert mcp_prox(0.3, 0.5, 1, 2) == 0.0
    assert mcp_prox(5.0, 0.5, 1, 2) == 5.0
    assert mcp_prox(1.5, 0.5, 1, 2) == pytest.approx(4 / 3, abs=1e-12)
    ref = brute_prox(lambda u: mcp_value(u, 1, 2), 0.5, 1.5, half_width=6, step=1e-5)
    assert ref == pytest.approx(4 / 3, abs=1e-5)


def test_mcp_prox_rejects_gamma_at_least_xi():
    with pytest.raises(ValueError, match="not strongly convex"):
        mcp_prox(1.0, 2.0, 1.0, 2.0)


def test_mcp_prox_continuous_at_inner_threshold():
    # continuity at |z| = gamma*lam supports the gamma*lam reading of the middle branch
    lam, xi, gamma = 1.0, 2.0, 0.5
    t = gamma * lam
    assert abs(mcp_prox(t + 1e-9, gamma, lam, xi) - mcp_prox(t - 1e-9, gamma, lam, xi)) < 1e-8


@settings(max_examples=150, deadline=None)
@given(lam=st.floats(0.1, 2), xi=st.floats(0.2, 5), frac=st.floats(0.01, 0.9),
       z=st.floats(-8, 8))
def test_mcp_prox_matches_brute_force(lam, xi, frac, z):
    gamma = frac * xi
    u = mcp_prox(z, gamma, lam, xi)
    ref = brute_prox(lambda v: mcp_value(v, lam, xi), gamma, z)
    obj = lambda v: mcp_value(v, lam, xi) + (v - z) ** 2 / (2 * gamma)
    # either the same minimizer or an equally good one (ties at branch edges)
    assert abs(u - ref) <= 1e-4 or obj(u) <= obj(ref) + 1e-10


def test_separable_prox_examples():
    assert np.array_equal(separable_prox(MCP(1, 2), 0.5, np.zeros(3)), np.zeros(3))
    out = separable_prox(MCP(1, 2), 0.5, np.array([0.3, 5, 1.5]))
    assert np.allclose(out, [0, 5, 4 / 3])
    assert np.allclose(separable_prox(L1(1), 0.5, np.array([2, -2, 0.1])), [1.5, -1.5, 0])


def test_separable_prox_rejects_mu_out_of_range():
    with pytest.raises(ValueError):
        separable_prox(MCP(1, 2), 2.0, np.ones(2))
    with pytest.raises(ValueError):
        separable_prox(L1(1), 0.0, np.ones(2))


def test_mcp_constants():
    g = MCP(0.3, 0.5)
    assert g.rho == 2.0 and g.lipschitz == 0.3
    assert g.lipschitz_norm(16) == pytest.approx(1.2)


def test_subdifferential_intervals():
    g = MCP(1.0, 2.0)
    lo, hi = g.subdifferential(np.array([0.0, 1.0, -1.0, 3.0]))
    assert np.allclose(lo, [-1, 0.5, -0.5, 0])
    assert np.allclose(hi, [1, 0.5, -0.5, 0])


# prox of f

def test_prox_f_examples():
    v = np.array([0.5, -2.0])
    assert np.array_equal(prox_f(ZeroFunction(), 3.0, v), v)
    assert np.allclose(prox_f(QuadraticTether(np.ones(2)), 1.0, np.array([3.0, 5])), [2, 3])
    f = QuadraticDataFit(Identity(1), np.zeros(1))
    assert np.allclose(prox_f(f, 1.0, np.array([4.0])), [2])


def _fs(rng):
    C = DenseMap(rng.standard_normal((6, 9)))
    return [ZeroFunction(), QuadraticTether(rng.standard_normal(9)),
            QuadraticDataFit(C, rng.standard_normal(6))]


def test_prox_f_optimality_and_nonexpansive(rng):
    for f in _fs(rng):
        for _ in range(50):
            lam = rng.uniform(0.05, 3)
            v1, v2 = rng.standard_normal(9), rng.standard_normal(9)
            u = f.prox(lam, v1)
            obj = lambda w: f.value(w) + (w - v1) @ (w - v1) / (2 * lam)
            for _ in range(5):
                w = u + rng.standard_normal(9) * rng.uniform(1e-3, 1)
                assert obj(u) <= obj(w) + 1e-9
            assert np.linalg.norm(u - f.prox(lam, v2)) <= np.linalg.norm(v1 - v2) + 1e-12


# couplings

def _fd(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


@pytest.mark.parametrize("make", [lambda: PenaltyXY(5.0),
                                  lambda: PenaltyGrad(1.5, Gradient2D(3, 3))])
def test_coupling_gradients_and_constants(make, rng):
    H = make()
    D = H.D if H.D is not None else Identity(9)
    nx, ny = D.input_dim, D.output_dim
    x, y = rng.standard_normal(nx), rng.standard_normal(ny)
    gx = _fd(lambda t: H.value(t, y), x)
    gy = _fd(lambda t: H.value(x, t), y)
    assert np.allclose(gx, H.grad_x(x, y), rtol=1e-6, atol=1e-6)
    assert np.allclose(gy, H.grad_y(x, y), rtol=1e-6, atol=1e-6)
    for _ in range(1000):
        x1, x2 = rng.standard_normal(nx), rng.standard_normal(nx)
        y1, y2 = rng.standard_normal(ny), rng.standard_normal(ny)
        tol = 1e-12
        assert np.linalg.norm(H.grad_x(x1, y1) - H.grad_x(x2, y1)) <= H.L11 * np.linalg.norm(x1 - x2) + tol
        assert np.linalg.norm(H.grad_x(x1, y1) - H.grad_x(x1, y2)) <= H.L12 * np.linalg.norm(y1 - y2) + tol
        assert np.linalg.norm(H.grad_y(x1, y1) - H.grad_y(x1, y2)) <= H.L22 * np.linalg.norm(y1 - y2) + tol


def test_penalty_constants():
    H = PenaltyXY(5.0)
    assert (H.L11, H.L12, H.L22) == (5.0, 5.0, 5.0)
    G = PenaltyGrad(2.0, Gradient2D(4, 4))
    assert G.L11 == pytest.approx(2.0 * 8)
    assert G.L12 == pytest.approx(2.0 * np.sqrt(8))
    assert G.L22 == 2.0


def test_constants_report_flags_underestimates():
    H = PenaltyGrad(1.0, Gradient2D(4, 4))
    p = CompositeProblem(QuadraticTether(np.zeros(16)), MCP(0.1, 0.5), H, Identity(32),
                         L11=5.0, L12=5.0, L22=5.0)
    rep = p.constants_report()
    assert rep["L11"]["status"] == "below-certified"
    assert rep["L12"]["status"] == "ok" and rep["L22"]["status"] == "ok"
