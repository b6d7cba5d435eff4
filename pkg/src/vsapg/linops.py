"""Real linear operators with adjoints and operator-norm bounds.

Three concrete kinds are provided: :class:`DenseMap`, :class:`Identity`
and :class:`Gradient2D` (anisotropic forward differences with replicate
boundary). Operators are immutable once built; the only mutable state is
the factorization cache used by :func:`solve_normal_equations`, which is
guarded by a lock.
"""

import logging
import math
import threading
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

logger = logging.getLogger(__name__)

__all__ = [
    "LinearMap",
    "DenseMap",
    "Identity",
    "Gradient2D",
    "Composed",
    "NormEstimate",
    "power_norm",
    "solve_normal_equations",
    "DENSE_SOLVE_THRESHOLD",
]

#: Above this size :func:`solve_normal_equations` switches to conjugate gradients.
DENSE_SOLVE_THRESHOLD = 4096


class NormEstimate(NamedTuple):
    value: float
    certified: bool
    iterations: int


class LinearMap:
    """Base class for a linear map ``R^input_dim -> R^output_dim``.

    Subclasses implement ``_apply`` and ``_adjoint``; dimension checks live
    here so every operator rejects mismatched vectors the same way.
    """

    input_dim: int
    output_dim: int

    def __init__(self, input_dim, output_dim):
        if input_dim <= 0 or output_dim <= 0:
            raise ValueError(
                f"dimensions must be positive, got input_dim={input_dim}, "
                f"output_dim={output_dim}")
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self._lock = threading.Lock()
        self._solve_cache = {}
        self._norm = None

    # -- application -------------------------------------------------------
    def apply(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.input_dim,):
            raise ValueError(
                f"{type(self).__name__}.apply expects a vector of length "
                f"{self.input_dim}, got shape {v.shape}")
        return self._apply(v)

    def adjoint_apply(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.output_dim,):
            raise ValueError(
                f"{type(self).__name__}.adjoint_apply expects a vector of "
                f"length {self.output_dim}, got shape {w.shape}")
        return self._adjoint(w)

    def __call__(self, v):
        return self.apply(v)

    def __matmul__(self, other):
        if isinstance(other, LinearMap):
            return Composed(self, other)
        return self.apply(other)

    def _apply(self, v):
        raise NotImplementedError

    def _adjoint(self, w):
        raise NotImplementedError

    # -- norm --------------------------------------------------------------
    def norm_bound(self, tol=1e-8, max_iter=1000):
        """Certified upper bound on the spectral norm.

        See :func:`power_norm`. The default-argument result is cached.
        """
        if (tol, max_iter) != (1e-8, 1000):
            return power_norm(self, tol, max_iter).value
        if self._norm is None:
            self._norm = self._norm_estimate(tol, max_iter)
            if not self._norm.certified:
                logger.warning(
                    "power iteration for %r did not converge in %d steps; "
                    "norm bound %.6g is uncertified", self, max_iter,
                    self._norm.value)
        return self._norm.value

    def _norm_estimate(self, tol, max_iter):
        return power_norm(self, tol, max_iter)

    def to_dense(self):
        """Materialize the operator as an ``output_dim x input_dim`` array."""
        eye = np.eye(self.input_dim)
        return np.column_stack([self._apply(e) for e in eye])

    def __repr__(self):
        return (f"{type(self).__name__}(input_dim={self.input_dim}, "
                f"output_dim={self.output_dim})")


class DenseMap(LinearMap):
    """Multiplication by a dense real matrix."""

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float, order="C")
        if matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {matrix.shape}")
        super().__init__(matrix.shape[1], matrix.shape[0])
        matrix.setflags(write=False)
        self.matrix = matrix

    def _apply(self, v):
        return self.matrix @ v

    def _adjoint(self, w):
        return self.matrix.T @ w

    def to_dense(self):
        return np.array(self.matrix)


class Identity(LinearMap):
    def __init__(self, n):
        super().__init__(n, n)

    def _apply(self, v):
        return v.copy()

    def _adjoint(self, w):
        return w.copy()

    def _norm_estimate(self, tol, max_iter):
        return NormEstimate(1.0, True, 0)

    def to_dense(self):
        return np.eye(self.input_dim)


class Gradient2D(LinearMap):
    """Forward-difference image gradient with replicate (Neumann) boundary.

    An ``h x w`` image flattened row-major maps to ``2*h*w`` values: the
    horizontal differences first, then the vertical ones. The last column
    (row) of the horizontal (vertical) block is zero.
    """

    def __init__(self, h, w):
        super().__init__(h * w, 2 * h * w)
        self.shape = (int(h), int(w))

    def _apply(self, v):
        img = v.reshape(self.shape)
        dx = np.zeros_like(img)
        dy = np.zeros_like(img)
        dx[:, :-1] = img[:, 1:] - img[:, :-1]
        dy[:-1, :] = img[1:, :] - img[:-1, :]
        return np.concatenate([dx.ravel(), dy.ravel()])

    def _adjoint(self, w):
        h, wd = self.shape
        n = h * wd
        px = w[:n].reshape(self.shape)
        py = w[n:].reshape(self.shape)
        out = np.zeros(self.shape)
        out[:, :-1] -= px[:, :-1]
        out[:, 1:] += px[:, :-1]
        out[:-1, :] -= py[:-1, :]
        out[1:, :] += py[:-1, :]
        return out.ravel()

    def _norm_estimate(self, tol, max_iter):
        # ||grad||^2 <= 4 + 4 for forward differences in two directions
        return NormEstimate(math.sqrt(8.0), True, 0)

    def __repr__(self):
        return f"Gradient2D(h={self.shape[0]}, w={self.shape[1]})"


class Composed(LinearMap):
    """``outer @ inner``; the norm bound is the product of the two bounds."""

    def __init__(self, outer, inner):
        if outer.input_dim != inner.output_dim:
            raise ValueError(
                f"cannot compose: outer expects {outer.input_dim} inputs, "
                f"inner produces {inner.output_dim}")
        super().__init__(inner.input_dim, outer.output_dim)
        self.outer = outer
        self.inner = inner

    def _apply(self, v):
        return self.outer._apply(self.inner._apply(v))

    def _adjoint(self, w):
        return self.inner._adjoint(self.outer._adjoint(w))

    def _norm_estimate(self, tol, max_iter):
        est = power_norm(self, tol, max_iter)
        product = (self.outer.norm_bound(tol, max_iter)
                   * self.inner.norm_bound(tol, max_iter))
        if est.certified and est.value < product:
            return est
        return NormEstimate(product, True, est.iterations)


def power_norm(op, tol=1e-8, max_iter=1000, seed=0):
    """Estimate ``||op||`` by power iteration on ``op^T op``.

    The converged estimate is inflated by ``1 + 10*tol``. If the relative
    change never drops below `tol` within `max_iter` steps, the last
    estimate is doubled and the result is flagged as uncertified.
    The convergence test cannot see a gap between the top two singular
    values smaller than about `tol`; such near-ties can stop early with an
    estimate a hair below the norm.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.input_dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, max_iter + 1):
        u = op._adjoint(op._apply(v))
        unorm = np.linalg.norm(u)
        if unorm == 0.0:
            # v in the null space; the true norm may still be positive
            v = rng.standard_normal(op.input_dim)
            v /= np.linalg.norm(v)
            continue
        new = math.sqrt(unorm)
        v = u / unorm
        if abs(new - est) <= tol * new:
            return NormEstimate(new * (1.0 + 10.0 * tol), True, it)
        est = new
    return NormEstimate(2.0 * est, False, max_iter)


def solve_normal_equations(op, sigma, rhs):
    """Solve ``(I + sigma * op^T op) u = rhs``.

    Dense operators (and identities) are factorized once per `sigma` and the
    Cholesky factor is cached on the operator; the smaller of the two Gram
    matrices is used (Woodbury identity when ``output_dim < input_dim``).
    Operators without a dense form, or wider than
    :data:`DENSE_SOLVE_THRESHOLD`, go through conjugate gradients.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (op.input_dim,):
        raise ValueError(
            f"rhs must have length {op.input_dim}, got shape {rhs.shape}")
    sigma = float(sigma)
    if isinstance(op, Identity):
        return rhs / (1.0 + sigma)
    if isinstance(op, DenseMap) and min(op.input_dim, op.output_dim) <= DENSE_SOLVE_THRESHOLD:
        M = op.matrix
        with op._lock:
            fac = op._solve_cache.get(sigma)
            if fac is None:
                if op.output_dim < op.input_dim:
                    gram = np.eye(op.output_dim) + sigma * (M @ M.T)
                else:
                    gram = np.eye(op.input_dim) + sigma * (M.T @ M)
                fac = scipy.linalg.cho_factor(gram)
                op._solve_cache[sigma] = fac
        if op.output_dim < op.input_dim:
            t = scipy.linalg.cho_solve(fac, M @ rhs)
            return rhs - sigma * (M.T @ t)
        return scipy.linalg.cho_solve(fac, rhs)
    return _cg_normal(op, sigma, rhs)


def _cg_normal(op, sigma, rhs):
    n = op.input_dim
    A = scipy.sparse.linalg.LinearOperator(
        (n, n), matvec=lambda u: u + sigma * op._adjoint(op._apply(u)),
        dtype=float)
    u, info = scipy.sparse.linalg.cg(A, rhs, rtol=1e-12, atol=0.0,
                                     maxiter=10 * n)
    if info != 0:
        logger.warning("CG for (I + %g op^T op) stopped with info=%d", sigma, info)
    return u
