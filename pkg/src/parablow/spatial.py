"""Uniform-grid Dirichlet Laplacian on a box, lumped quadrature, principal eigenpair.

Only interior nodes are stored; the homogeneous Dirichlet boundary values are
eliminated from the stencil. Node ordering in 2D is row-major with the x index
running fastest (``field.reshape(ny, nx)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lapack


class SpatialError(ValueError):
    pass


class EigenSolveError(RuntimeError):
    def __init__(self, message, iterations):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class LinearSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    """Box ``prod_k (0, extent[k])`` with ``n[k]`` interior points per axis."""

    extent: tuple
    n: tuple

    def __post_init__(self):
        extent = tuple(float(e) for e in np.atleast_1d(self.extent))
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        if len(extent) not in (1, 2) or len(n) != len(extent):
            raise SpatialError(f"need 1 or 2 axes with matching extent/n, got {extent} / {n}")
        if any(e <= 0 or not np.isfinite(e) for e in extent):
            raise SpatialError(f"extent must be positive, got {extent}")
        if any(k < 1 for k in n):
            raise SpatialError(f"need at least one interior point per axis, got {n}")
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "n", n)

    @classmethod
    def interval(cls, n, length=1.0):
        return cls((length,), (n,))

    @classmethod
    def rectangle(cls, nx, ny, lx=1.0, ly=1.0):
        return cls((lx, ly), (nx, ny))

    @property
    def dim(self):
        return len(self.n)

    @property
    def h(self):
        return tuple(e / (k + 1) for e, k in zip(self.extent, self.n))

    @property
    def size(self):
        return int(np.prod(self.n))

    def axes(self):
        """Interior node coordinates per axis."""
        return [h * np.arange(1, k + 1) for h, k in zip(self.h, self.n)]

    def coordinates(self):
        """Node coordinates, shape ``(size,)`` in 1D and ``(size, 2)`` in 2D."""
        axes = self.axes()
        if self.dim == 1:
            return axes[0]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])


def _second_difference(n, h):
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


@dataclass(frozen=True, eq=False)
class SpatialOperator:
    """Discrete -Laplacian ``A_h`` with Dirichlet elimination.

    ``matrix`` is the plain stencil matrix (symmetric as an array); because the
    lumped weight is the same at every node it is also symmetric under the
    quadrature inner product.
    """

    spec: DomainSpec
    matrix: sp.csr_matrix
    weight: float
    lambda1: float = field(default=np.nan)
    rho1: np.ndarray = field(default=None, repr=False)
    eig_iterations: int = 0

    @property
    def size(self):
        return self.spec.size

    @property
    def diagonal(self):
        return self.matrix.diagonal()

    @property
    def offdiag(self):
        # only meaningful in 1D (tridiagonal)
        return self.matrix.diagonal(1)

    def apply(self, f):
        f = self._check(f)
        return self.matrix @ f

    def _check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != (self.size,):
            raise SpatialError(f"field of shape {f.shape} does not match {self.size} interior nodes")
        return f

    def shifted(self, shift, tol=1e-12):
        """Factorised ``A_h + diag(shift)`` for repeated solves."""
        return ShiftedOperator(self, shift, tol)


def build_operator(spec, eig_tol=1e-12):
    """Assemble ``A_h`` for ``spec`` and attach its principal eigenpair."""
    if not isinstance(spec, DomainSpec):
        spec = DomainSpec(*spec)
    if spec.dim == 1:
        A = _second_difference(spec.n[0], spec.h[0])
    else:
        (nx, ny), (hx, hy) = spec.n, spec.h
        A = sp.kron(sp.identity(ny), _second_difference(nx, hx)) + sp.kron(
            _second_difference(ny, hy), sp.identity(nx)
        )
        A = sp.csr_matrix(A)
    op = SpatialOperator(spec, A, float(np.prod(spec.h)))
    lam, rho, its = _inverse_power(op, eig_tol)
    object.__setattr__(op, "lambda1", lam)
    object.__setattr__(op, "rho1", rho)
    object.__setattr__(op, "eig_iterations", its)
    return op


def quadrature(op, f):
    """Lumped-mass integral ``sum_i w_i f_i``."""
    return op.weight * float(np.sum(op._check(f)))


def inner(op, f, g):
    return op.weight * float(np.dot(op._check(f), op._check(g)))


def dirichlet_energy(op, f):
    """Discrete ``int |grad f|^2``, i.e. ``<A_h f, f>`` under the quadrature."""
    f = op._check(f)
    return op.weight * float(np.dot(op.matrix @ f, f))


def sup_norm(f):
    return float(np.max(np.abs(f)))


def principal_eigenpair(op, tol=1e-12, max_iter=10_000):
    """Smallest eigenvalue of ``A_h`` and its positive eigenvector, L1-normalised."""
    lam, rho, _ = _inverse_power(op, tol, max_iter)
    return lam, rho


def _inverse_power(op, tol, max_iter=10_000):
    if tol <= 0:
        raise ValueError("tol must be positive")
    solver = ShiftedOperator(op, np.zeros(op.size), tol=min(1e-14, tol * 1e-2))
    x = np.ones(op.size)
    x /= np.linalg.norm(x)
    lam = np.inf
    # a residual below a few ulps of ||A|| cannot be resolved in floating point
    floor = 8.0 * np.finfo(float).eps * float(abs(op.matrix).sum(axis=1).max())
    for it in range(1, max_iter + 1):
        y = solver.solve(x)
        x = y / np.linalg.norm(y)
        Ax = op.matrix @ x
        lam_new = float(np.dot(x, Ax))
        resid = np.max(np.abs(Ax - lam_new * x))
        if abs(lam_new - lam) <= tol * lam_new and resid <= max(tol * lam_new, floor) * np.max(np.abs(x)):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise EigenSolveError("inverse power iteration did not converge", max_iter)
    if x.sum() < 0:
        x = -x
    if np.any(x <= 0):
        raise EigenSolveError("principal eigenvector is not positive", it)
    rho = x / (op.weight * x.sum())
    return lam, rho, it


class ShiftedOperator:
    """``A_h + diag(shift)`` with ``shift >= 0``.

    1D: LAPACK tridiagonal LU (factored once, cheap back-substitution).
    2D: conjugate gradients to relative residual ``tol``.
    """

    def __init__(self, op, shift, tol=1e-12):
        shift = np.broadcast_to(np.asarray(shift, dtype=float), (op.size,))
        if np.any(shift < 0) or not np.all(np.isfinite(shift)):
            raise LinearSolveError("shift must be finite and nonnegative")
        self.op = op
        self.shift = shift
        self.tol = tol
        self.diag = op.diagonal + shift
        if op.size < 3:
            # the LAPACK wrapper mis-sizes its work arrays below three unknowns
            self._dense = np.linalg.inv(op.matrix.toarray() + np.diag(shift))
        elif op.spec.dim == 1:
            off = op.offdiag
            dl, d, du, du2, ipiv, info = lapack.dgttrf(off, self.diag, off)
            if info != 0:
                raise LinearSolveError(f"tridiagonal factorisation failed (info={info})")
            self._lu = (dl, d, du, du2, ipiv)
        else:
            self._matrix = op.matrix + sp.diags(shift)
            self._precond = sp.diags(1.0 / self.diag)

    def matvec(self, x):
        return self.op.matrix @ x + self.shift * x

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if self.op.size < 3:
            return self._dense @ rhs
        if self.op.spec.dim == 1:
            x, info = lapack.dgttrs(*self._lu, rhs)
            if info != 0:
                raise LinearSolveError(f"tridiagonal solve failed (info={info})")
            return x
        x, info = spla.cg(self._matrix, rhs, rtol=self.tol, atol=0.0, M=self._precond, maxiter=20 * self.op.size)
        if info != 0:
            raise LinearSolveError(f"conjugate gradients did not converge (info={info})")
        return x


def linear_solve(op, shift, rhs, tol=1e-12):
    """Solve ``(A_h + diag(shift)) u = rhs``."""
    return ShiftedOperator(op, shift, tol).solve(op._check(rhs))
