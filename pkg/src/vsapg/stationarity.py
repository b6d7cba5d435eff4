"""Gradient mapping and approximate-stationarity measures.

A point is epsilon-stationary when ``||G_lam(x, y)||`` plus the distance
of ``-grad_y H(x, y)`` to ``A^T dg(Ay)`` is at most epsilon. For the
smoothed problem the set is the single point ``A^T grad g_mu(Ay)``.
"""

from dataclasses import dataclass

import numpy as np

from .linops import Identity, LinearMap
from .moreau import SmoothedTerm

__all__ = [
    "StationarityReport",
    "gradient_mapping",
    "smoothed_measure",
    "original_measure",
    "transfer_point",
    "transfer_error_bound",
    "smallest_singular_value",
]


@dataclass(frozen=True)
class StationarityReport:
    grad_map_norm: float
    y_residual_norm: float
    lambda_used: float
    mu_used: float  # 0 marks the unsmoothed measure

    @property
    def total(self):
        return self.grad_map_norm + self.y_residual_norm


def gradient_mapping(f, H, lam, x, y):
    """``G_lam(x, y) = (x - prox_{lam f}(x - lam * grad_x H(x, y))) / lam``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return (x - f.prox(lam, x - lam * H.grad_x(x, y))) / lam


def smoothed_measure(problem, lam, mu, x, y):
    g_mu = SmoothedTerm(problem.g, mu)
    A = problem.A
    G = gradient_mapping(problem.f, problem.H, lam, x, y)
    r = A.adjoint_apply(g_mu.grad(A.apply(y))) + problem.H.grad_y(x, y)
    return StationarityReport(float(np.linalg.norm(G)), float(np.linalg.norm(r)),
                              float(lam), float(mu))


def original_measure(problem, lam, x, y):
    """Measure for the unsmoothed problem, exact when ``A`` is the identity.

    The distance from ``-grad_y H`` to the box ``dg(y)`` is computed
    componentwise from the scalar subdifferential intervals of the
    separable ``g``.
    """
    if not isinstance(problem.A, Identity):
        raise NotImplementedError(
            "exact set distance is only available for A = identity; use "
            "smoothed_measure together with transfer_error_bound")
    G = gradient_mapping(problem.f, problem.H, lam, x, y)
    target = -problem.H.grad_y(x, y)
    lo, hi = problem.g.subdifferential(y)
    gap = target - np.clip(target, lo, hi)
    return StationarityReport(float(np.linalg.norm(G)), float(np.linalg.norm(gap)),
                              float(lam), 0.0)


def smallest_singular_value(A: LinearMap):
    if isinstance(A, Identity):
        return 1.0
    s = np.linalg.svd(A.to_dense(), compute_uv=False)
    return float(s[min(A.output_dim, A.input_dim) - 1])


def transfer_point(g, A: LinearMap, mu, x_star, y_star):
    """Map a smoothed-problem point to one for the original problem.

    Returns ``(x_star, y_bar)`` with
    ``y_bar = y_star - A^T (A A^T)^{-1} (A y_star - prox_{mu g}(A y_star))``,
    so that ``A y_bar = prox_{mu g}(A y_star)``. `A` must be surjective.
    """
    g.check_mu(mu)
    x_star = np.asarray(x_star, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    Ay = A.apply(y_star)
    shift = Ay - g.prox(mu, Ay)
    if isinstance(A, Identity):
        return x_star.copy(), y_star - shift
    if A.output_dim > A.input_dim:
        raise ValueError(
            f"A is not surjective: output_dim {A.output_dim} > input_dim "
            f"{A.input_dim}")
    M = A.to_dense()
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= 1e-12 * max(s[0], 1.0):
        raise ValueError(
            f"A A^T is numerically singular: smallest singular value {s[-1]:.3e}")
    t = np.linalg.solve(M @ M.T, shift)
    return x_star.copy(), y_star - A.adjoint_apply(t)


def transfer_error_bound(eps, L12, L22, L_g, sigma_min_A, mu):
    """Accuracy ``eps + (L12 + L22) * L_g * mu / sigma_min(A)`` after the transfer."""
    if not sigma_min_A > 0:
        raise ValueError(f"sigma_min_A must be positive, got {sigma_min_A}")
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    return eps + (L12 + L22) * L_g * mu / sigma_min_A
