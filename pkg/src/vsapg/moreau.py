"""Moreau envelopes of weakly convex terms and the smoothing schedule."""

from dataclasses import dataclass

import numpy as np

from .functions import WeaklyConvexTerm, separable_prox

__all__ = [
    "SmoothedTerm",
    "envelope_value",
    "envelope_grad",
    "envelope_grad_lipschitz",
    "envelope_shift_bound",
    "SmoothingSchedule",
]


@dataclass(frozen=True)
class SmoothedTerm:
    """The envelope ``g_mu(v) = min_u g(u) + ||u - v||^2 / (2 mu)``."""

    base: WeaklyConvexTerm
    mu: float

    def __post_init__(self):
        self.base.check_mu(self.mu)

    def prox(self, v):
        return separable_prox(self.base, self.mu, v)

    def value(self, v):
        v = np.asarray(v, dtype=float)
        p = self.prox(v)
        d = p - v
        return self.base.value(p) + float(d @ d) / (2.0 * self.mu)

    def grad(self, v):
        v = np.asarray(v, dtype=float)
        return (v - self.prox(v)) / self.mu

    def value_and_grad(self, v):
        """Both at once, sharing one prox evaluation."""
        v = np.asarray(v, dtype=float)
        p = self.prox(v)
        d = v - p
        return self.base.value(p) + float(d @ d) / (2.0 * self.mu), d / self.mu

    @property
    def grad_lipschitz(self):
        return envelope_grad_lipschitz(self.mu, self.base.rho)


def envelope_value(t: SmoothedTerm, v):
    return t.value(v)


def envelope_grad(t: SmoothedTerm, v):
    return t.grad(v)


def envelope_grad_lipschitz(mu, rho):
    """Lipschitz constant ``max(1/mu, rho/(1 - rho*mu))`` of the envelope gradient."""
    if not (mu > 0 and mu * rho < 1):
        raise ValueError(f"need 0 < mu < 1/rho, got mu={mu}, rho={rho}")
    return max(1.0 / mu, rho / (1.0 - rho * mu))


def envelope_shift_bound(mu1, mu2, lipschitz):
    """Upper bound on ``g_{mu2} - g_{mu1}`` for ``0 < mu2 <= mu1``."""
    if not 0 < mu2 <= mu1:
        raise ValueError(f"need 0 < mu2 <= mu1, got mu1={mu1}, mu2={mu2}")
    return mu1 * (mu1 - mu2) / (2.0 * mu2) * lipschitz ** 2


@dataclass(frozen=True)
class SmoothingSchedule:
    """Power-law smoothing ``mu_k = mu1 * k**(-min(theta, (1 - theta)/2))``.

    With ``theta = 1/3`` both exponents coincide. Consecutive ratios stay in
    ``[1/2, 1]`` because the exponent never exceeds ``1/3``.
    """

    mu1: float
    theta: float = 1.0 / 3.0

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.mu1 > 0:
            raise ValueError(f"mu1 must be positive, got {self.mu1}")

    @property
    def exponent(self):
        return min(self.theta, (1.0 - self.theta) / 2.0)

    def mu_at(self, k):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if k == 1:
            return self.mu1
        return self.mu1 * k ** (-self.exponent)

    @classmethod
    def default_for(cls, rho, theta=1.0 / 3.0):
        """``mu1 = 1/(2 rho)`` keeps the envelope Lipschitz constant at ``1/mu_k``."""
        mu1 = 0.5 / rho if rho > 0 else 1.0
        return cls(mu1, theta)

