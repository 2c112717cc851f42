"""Assembly and direct solution of the 9-point implicit-step systems.

Every implicit step solves ``(a*A - b*Lambda - A diag(r)) U = rhs`` over the
interior unknowns (row-major ``(i, j)`` ordering).  The sparsity pattern is
fixed per grid, so assembly only recomputes the nonzero values.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError, UsageError
from .mesh import GridFunction

__all__ = ["StencilMatrix", "assemble", "solve", "RESIDUAL_TOL"]

RESIDUAL_TOL = 1e-11

_M1 = np.array([1.0, 10.0, 1.0]) / 12.0
_D2 = np.array([1.0, -2.0, 1.0])


@functools.lru_cache(maxsize=32)
def _pattern(grid):
    """CSC skeleton plus the A and Lambda values aligned with it."""
    mx, my = grid.interior_shape
    I, J = np.meshgrid(np.arange(mx), np.arange(my), indexing="ij")
    rows, cols, av, lv = [], [], [], []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ok = (I + di >= 0) & (I + di < mx) & (J + dj >= 0) & (J + dj < my)
            r = (I * my + J)[ok]
            c = ((I + di) * my + (J + dj))[ok]
            ax, ay = _M1[di + 1], _M1[dj + 1]
            lam = _D2[di + 1] * ay / grid.hx**2 + ax * _D2[dj + 1] / grid.hy**2
            rows.append(r)
            cols.append(c)
            av.append(np.full(r.size, ax * ay))
            lv.append(np.full(r.size, lam))
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    av, lv = np.concatenate(av), np.concatenate(lv)
    order = np.lexsort((rows, cols))
    rows, cols, av, lv = rows[order], cols[order], av[order], lv[order]
    indptr = np.searchsorted(cols, np.arange(mx * my + 1))
    return rows, cols, indptr, av, lv


@dataclass(eq=False)
class StencilMatrix:
    """Assembled ``a*A - b*Lambda - A diag(r)`` over interior unknowns."""

    grid: object
    a: float
    b: float
    r: np.ndarray
    matrix: sp.csc_matrix
    _lu: object = field(default=None, repr=False)

    def matvec(self, v):
        return self.matrix @ np.ravel(v)

    def factorize(self, step=None):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix, permc_spec="MMD_AT_PLUS_A",
                                     options={"SymmetricMode": True})
            except RuntimeError as exc:
                where = f" at step {step}" if step is not None else ""
                raise SolverError(f"singular stencil matrix{where}: {exc}") from exc
        return self._lu

    def solve_vector(self, rhs, step=None):
        """Solve for an interior vector, enforcing the residual contract."""
        rhs = np.ravel(rhs)
        nrm = np.linalg.norm(rhs)
        if nrm == 0.0:
            return np.zeros_like(rhs)
        x = self.factorize(step).solve(rhs)
        res = np.linalg.norm(self.matrix @ x - rhs) / nrm
        if not res <= RESIDUAL_TOL:
            where = f" at step {step}" if step is not None else ""
            raise SolverError(f"relative residual {res:.2e} exceeds {RESIDUAL_TOL:g}{where}",
                              estimate=res)
        return x


def _interior(grid, r):
    if r is None:
        return np.zeros(grid.interior_shape).ravel()
    if isinstance(r, GridFunction):
        if r.grid != grid:
            raise UsageError("reaction field lives on another grid")
        return r.interior.ravel()
    r = np.asarray(r, dtype=float)
    if r.ndim == 0:
        return np.full(np.prod(grid.interior_shape), float(r))
    if r.shape == grid.shape:
        return r[1:-1, 1:-1].ravel()
    if r.size != np.prod(grid.interior_shape):
        raise UsageError(f"reaction field of size {r.size} does not fit the grid")
    return r.ravel()


def assemble(grid, a, b, r=None):
    """Stencil matrix of ``a*A - b*Lambda - A diag(r)``.

    ``r`` may be a :class:`GridFunction`, a full or interior array, a scalar
    or ``None`` (zero).
    """
    if b < 0:
        raise UsageError("diffusion weight b must be non-negative")
    rows, cols, indptr, av, lv = _pattern(grid)
    rv = _interior(grid, r)
    data = a * av - b * lv - av * rv[cols]
    n = rv.size
    mat = sp.csc_matrix((data, rows, indptr), shape=(n, n))
    return StencilMatrix(grid, float(a), float(b), rv, mat)


def solve(matrix, rhs, step=None):
    """Solve ``matrix @ U = rhs`` for a zero-boundary right-hand side."""
    if isinstance(rhs, GridFunction):
        if rhs.grid != matrix.grid:
            raise UsageError("right-hand side lives on another grid")
        if not rhs.zero_boundary:
            raise UsageError("right-hand side must vanish on the boundary")
        vec = rhs.interior
    else:
        vec = rhs
    x = matrix.solve_vector(vec, step)
    return GridFunction.from_interior(matrix.grid, x)
