"""Oracle bundles for the three parts of ``f(x) + g(Ay) + H(x, y)``.

``f`` is convex and proxable, ``g`` is separable, weakly convex and
Lipschitz (MCP or l1), and ``H`` is smooth with blockwise Lipschitz
gradients. :class:`CompositeProblem` ties them together with ``A``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .linops import Identity, LinearMap, solve_normal_equations

__all__ = [
    "mcp_value",
    "mcp_prox",
    "soft_threshold",
    "ProxableConvex",
    "ZeroFunction",
    "QuadraticDataFit",
    "QuadraticTether",
    "WeaklyConvexTerm",
    "MCP",
    "L1",
    "ZeroTerm",
    "separable_prox",
    "prox_f",
    "SmoothCoupling",
    "PenaltyXY",
    "PenaltyGrad",
    "CompositeProblem",
]


def _check_positive(**kw):
    for name, val in kw.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")


# -- minimax concave penalty ---------------------------------------------------

def mcp_value(z, lam, xi):
    """Minimax concave penalty, elementwise.

    ``lam*|z| - z**2/(2*xi)`` for ``|z| <= xi*lam`` and ``xi*lam**2/2``
    beyond, so the two branches meet continuously.
    """
    _check_positive(lam=lam, xi=xi)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    out = np.where(a <= xi * lam, lam * a - z * z / (2.0 * xi),
                   0.5 * xi * lam * lam)
    return out if out.ndim else float(out)


def mcp_prox(z, gamma, lam, xi):
    """Proximal map of ``gamma * mcp(., lam, xi)``, elementwise.

    Requires ``0 < gamma < xi``; otherwise the prox subproblem is not
    strongly convex and the closed form breaks down. Between the thresholds
    ``gamma*lam`` and ``xi*lam`` the shrunk value is rescaled by
    ``1/(1 - gamma/xi)``.
    """
    _check_positive(gamma=gamma, lam=lam, xi=xi)
    if gamma >= xi:
        raise ValueError(
            f"prox subproblem not strongly convex: need gamma < xi, got "
            f"gamma={gamma}, xi={xi}")
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    mid = (z - lam * gamma * np.sign(z)) / (1.0 - gamma / xi)
    out = np.where(a <= gamma * lam, 0.0, np.where(a >= xi * lam, z, mid))
    return out if out.ndim else float(out)


def soft_threshold(z, t):
    z = np.asarray(z, dtype=float)
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return out if out.ndim else float(out)


# -- f: convex, proxable -------------------------------------------------------

class ProxableConvex:
    """Convex ``f`` with value and ``prox_{sigma f}`` oracles."""

    descriptor = "abstract"

    def value(self, x):
        raise NotImplementedError

    def prox(self, sigma, v):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)


class ZeroFunction(ProxableConvex):
    descriptor = "zero"

    def value(self, x):
        return 0.0

    def prox(self, sigma, v):
        _check_positive(sigma=sigma)
        return np.array(v, dtype=float)


class QuadraticDataFit(ProxableConvex):
    """``f(x) = 0.5 * ||Cx - b||^2``."""

    descriptor = "quadratic_datafit"

    def __init__(self, C: LinearMap, b):
        b = np.asarray(b, dtype=float)
        if b.shape != (C.output_dim,):
            raise ValueError(
                f"b must have length {C.output_dim}, got shape {b.shape}")
        self.C = C
        self.b = b
        self._Ctb = C.adjoint_apply(b)

    def value(self, x):
        r = self.C.apply(x) - self.b
        return 0.5 * float(r @ r)

    def grad(self, x):
        return self.C.adjoint_apply(self.C.apply(x) - self.b)

    def prox(self, sigma, v):
        _check_positive(sigma=sigma)
        return solve_normal_equations(self.C, sigma,
                                      np.asarray(v, dtype=float) + sigma * self._Ctb)


class QuadraticTether(ProxableConvex):
    """``f(x) = 0.5 * ||x - center||^2``."""

    descriptor = "quadratic_tether"

    def __init__(self, center):
        self.center = np.asarray(center, dtype=float)

    def value(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return 0.5 * float(d @ d)

    def prox(self, sigma, v):
        _check_positive(sigma=sigma)
        return (np.asarray(v, dtype=float) + sigma * self.center) / (1.0 + sigma)


def prox_f(f, sigma, v):
    return f.prox(sigma, v)


# -- g: separable, weakly convex, Lipschitz ------------------------------------

class WeaklyConvexTerm:
    """Separable ``g(z) = sum_i phi(z_i)`` with a closed-form prox.

    ``rho`` is the weak-convexity modulus and ``lipschitz`` the Lipschitz
    constant of the scalar ``phi``. For the whole vector in ``R^d`` the
    Euclidean Lipschitz constant is ``lipschitz * sqrt(d)``, see
    :meth:`lipschitz_norm`.
    """

    descriptor = "abstract"
    rho = 0.0
    lipschitz = 0.0

    def scalar_value(self, z):
        raise NotImplementedError

    def scalar_prox(self, mu, z):
        raise NotImplementedError

    def subdifferential(self, z):
        """Elementwise bounds ``(lo, hi)`` of the scalar subdifferential."""
        raise NotImplementedError

    def value(self, z):
        return float(np.sum(self.scalar_value(z)))

    def prox(self, mu, v):
        return separable_prox(self, mu, v)

    def lipschitz_norm(self, d):
        return self.lipschitz * math.sqrt(d)

    def check_mu(self, mu):
        if not (mu > 0 and mu * self.rho < 1):
            bound = math.inf if self.rho == 0 else 1.0 / self.rho
            raise ValueError(f"mu must lie in (0, {bound:g}), got {mu}")

    def __call__(self, z):
        return self.value(z)


class MCP(WeaklyConvexTerm):
    descriptor = "mcp"

    def __init__(self, lam, xi):
        _check_positive(lam=lam, xi=xi)
        self.lam = float(lam)
        self.xi = float(xi)
        self.rho = 1.0 / self.xi
        self.lipschitz = self.lam

    def scalar_value(self, z):
        return mcp_value(z, self.lam, self.xi)

    def scalar_prox(self, mu, z):
        return mcp_prox(z, mu, self.lam, self.xi)

    def subdifferential(self, z):
        z = np.asarray(z, dtype=float)
        d = np.where(np.abs(z) <= self.xi * self.lam,
                     self.lam * np.sign(z) - z / self.xi, 0.0)
        lo = np.where(z == 0.0, -self.lam, d)
        hi = np.where(z == 0.0, self.lam, d)
        return lo, hi

    def __repr__(self):
        return f"MCP(lam={self.lam:g}, xi={self.xi:g})"


class L1(WeaklyConvexTerm):
    descriptor = "l1"

    def __init__(self, lam):
        _check_positive(lam=lam)
        self.lam = float(lam)
        self.rho = 0.0
        self.lipschitz = self.lam

    def scalar_value(self, z):
        return self.lam * np.abs(np.asarray(z, dtype=float))

    def scalar_prox(self, mu, z):
        return soft_threshold(z, mu * self.lam)

    def subdifferential(self, z):
        z = np.asarray(z, dtype=float)
        s = self.lam * np.sign(z)
        return np.where(z == 0.0, -self.lam, s), np.where(z == 0.0, self.lam, s)

    def __repr__(self):
        return f"L1(lam={self.lam:g})"


class ZeroTerm(WeaklyConvexTerm):
    descriptor = "zero"

    def scalar_value(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def scalar_prox(self, mu, z):
        return np.array(z, dtype=float)

    def subdifferential(self, z):
        z = np.zeros_like(np.asarray(z, dtype=float))
        return z, z


def separable_prox(term, mu, v):
    term.check_mu(mu)
    return np.asarray(term.scalar_prox(mu, np.asarray(v, dtype=float)), dtype=float)


# -- H: smooth coupling --------------------------------------------------------

class SmoothCoupling:
    """Smooth ``H(x, y)`` with partial gradients and Lipschitz constants.

    ``L11`` bounds ``grad_x`` in ``x``, ``L12`` bounds ``grad_x`` in ``y``
    and ``L22`` bounds ``grad_y`` in ``y``. Subclasses override the three
    oracles; the generic constructor takes callables, which is convenient
    for one-off test problems.
    """

    descriptor = "custom"
    D = None

    def __init__(self, value=None, grad_x=None, grad_y=None, L11=0.0,
                 L12=0.0, L22=0.0):
        self._value, self._gx, self._gy = value, grad_x, grad_y
        self.L11, self.L12, self.L22 = float(L11), float(L12), float(L22)

    def value(self, x, y):
        return float(self._value(x, y))

    def grad_x(self, x, y):
        return np.asarray(self._gx(x, y), dtype=float)

    def grad_y(self, x, y):
        return np.asarray(self._gy(x, y), dtype=float)


class PenaltyXY(SmoothCoupling):
    """``H(x, y) = (mu_pen/2) * ||x - y||^2``."""

    descriptor = "penalty_xy"

    def __init__(self, mu_pen):
        _check_positive(mu_pen=mu_pen)
        self.mu_pen = float(mu_pen)
        self.L11 = self.L12 = self.L22 = self.mu_pen

    def value(self, x, y):
        d = x - y
        return 0.5 * self.mu_pen * float(d @ d)

    def grad_x(self, x, y):
        return self.mu_pen * (x - y)

    def grad_y(self, x, y):
        return self.mu_pen * (y - x)


class PenaltyGrad(SmoothCoupling):
    """``H(x, y) = (mu_pen/2) * ||y - Dx||^2`` for a linear map ``D``."""

    descriptor = "penalty_grad"

    def __init__(self, mu_pen, D: LinearMap):
        _check_positive(mu_pen=mu_pen)
        self.mu_pen = float(mu_pen)
        self.D = D
        nD = D.norm_bound()
        self.L11 = self.mu_pen * nD * nD
        self.L12 = self.mu_pen * nD
        self.L22 = self.mu_pen

    def value(self, x, y):
        r = y - self.D.apply(x)
        return 0.5 * self.mu_pen * float(r @ r)

    def grad_x(self, x, y):
        return -self.mu_pen * self.D.adjoint_apply(y - self.D.apply(x))

    def grad_y(self, x, y):
        return self.mu_pen * (y - self.D.apply(x))


# -- the full problem ----------------------------------------------------------

@dataclass(frozen=True)
class CompositeProblem:
    """``min f(x) + g(Ay) + H(x, y)``.

    `L11`, `L12`, `L22` default to the coupling's certified constants; pass
    larger values to run with conservative (or user-tuned) constants.
    """

    f: ProxableConvex
    g: WeaklyConvexTerm
    H: SmoothCoupling
    A: LinearMap
    L11: float = None
    L12: float = None
    L22: float = None

    def __post_init__(self):
        for name in ("L11", "L12", "L22"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, float(getattr(self.H, name)))

    @classmethod
    def with_identity(cls, f, g, H, m, **constants):
        return cls(f, g, H, Identity(m), **constants)

    @property
    def x_dim(self):
        f, D = self.f, getattr(self.H, "D", None)
        if D is not None:
            return D.input_dim
        if hasattr(f, "C"):
            return f.C.input_dim
        if hasattr(f, "center"):
            return f.center.shape[0]
        return self.A.input_dim

    @property
    def rho(self):
        return self.g.rho

    @property
    def norm_A(self):
        return self.A.norm_bound()

    @property
    def lipschitz_g(self):
        """Euclidean Lipschitz constant of ``z -> g(z)`` on ``R^d``."""
        return self.g.lipschitz_norm(self.A.output_dim)

    def objective(self, x, y):
        return self.f.value(x) + self.g.value(self.A.apply(y)) + self.H.value(x, y)

    def constants_report(self):
        """Compare the constants in use with the coupling's certified ones.

        Larger-than-certified constants keep every guarantee; smaller ones
        void the descent certificate.
        """
        out = {}
        for name in ("L11", "L12", "L22"):
            used, cert = getattr(self, name), float(getattr(self.H, name))
            out[name] = {"used": used, "certified": cert,
                         "status": "ok" if used >= cert * (1 - 1e-12) else "below-certified"}
        return out
