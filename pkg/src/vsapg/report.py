"""Stopping rules, per-iteration traces and run reports shared by all solvers."""

from dataclasses import dataclass, field, fields
import math

import numpy as np

__all__ = [
    "StoppingRule",
    "TraceRow",
    "RunReport",
    "NonFiniteIterate",
    "relative_residual",
    "TERMINATIONS",
]

TERMINATIONS = ("tolerance-met", "max-iter", "parameter-infeasible")

_RULES = ("relative_residual", "successive_change", "displacement",
          "stationarity", "none")


class NonFiniteIterate(FloatingPointError):
    """Raised when an update produces NaN or inf; the run is aborted."""


def check_finite(name, k, value):
    if not np.all(np.isfinite(value)):
        raise NonFiniteIterate(f"non-finite {name} at iteration {k}")


@dataclass(frozen=True)
class StoppingRule:
    """When to stop iterating.

    ``relative_residual``
        ``||x - y|| / max(||x||, ||y||) < tol`` on the current pair.
    ``successive_change``
        ``||x^k - x^{k-1}|| / max(||x^{k-1}||, ||x^k||) <= tol``
        (single-variable methods).
    ``displacement``
        ``||(y^{k+1}, D x^{k+1}) - (y^k, D x^k)|| < tol`` with ``D`` taken
        from the coupling (identity when it has none).
    ``stationarity``
        the smoothed stationarity measure at the current iterate ``<= tol``.
    ``none``
        run to `maxiter`.
    """

    kind: str = "relative_residual"
    tol: float = 1e-3
    maxiter: int = 5000

    def __post_init__(self):
        if self.kind not in _RULES:
            raise ValueError(f"unknown stopping rule {self.kind!r}; expected one of {_RULES}")
        if self.maxiter < 0:
            raise ValueError(f"maxiter must be nonnegative, got {self.maxiter}")


def relative_residual(a, b):
    """``||a - b|| / max(||a||, ||b||)``; zero when both vanish (no change)."""
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    if den == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / den)


@dataclass
class TraceRow:
    """Quantities at iterate ``k`` (row 1 is the starting point).

    ``tau_k``/``sigma_k`` are the step sizes used when leaving iterate
    ``k``; ``descent_slack`` is NaN on the terminal row and for solvers
    without a descent certificate.
    """

    k: int
    objective: float
    smoothed_objective: float
    measure: float
    residual: float
    mu_k: float
    tau_k: float
    sigma_k: float
    time_ms: float
    descent_slack: float = math.nan
    telescoping_slack: float = math.nan


TRACE_COLUMNS = [f.name for f in fields(TraceRow)]


@dataclass
class RunReport:
    algorithm: str
    termination: str
    iterations: int
    x: np.ndarray
    y: np.ndarray
    trace: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    diagnostics: object = None
    transfer: tuple = None
    transfer_measure: object = None
    elapsed_ms: float = 0.0

    def column(self, name):
        return np.array([getattr(r, name) for r in self.trace], dtype=float)

    @property
    def final_residual(self):
        return self.trace[-1].residual if self.trace else math.nan

    @property
    def converged(self):
        return self.termination == "tolerance-met"
