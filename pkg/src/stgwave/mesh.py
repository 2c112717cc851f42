"""Uniform tensor grids, grid functions and the fourth-order compact operators.

Grid values are stored as dense ``(Mx+1, My+1)`` arrays indexed ``[i, j]``
with ``x_i = lx + i*hx`` and ``y_j = ly + j*hy``.  The averaging operator
``A = Ax Ay`` uses the 1D mask (1, 10, 1)/12 on interior rows/columns and the
identity on boundary rows/columns; the compact Laplacian is
``Lambda = Ay dxx + Ax dyy``.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, UsageError

__all__ = [
    "Grid2D",
    "GridFunction",
    "unit_square",
    "apply_compact_A",
    "apply_lambda",
    "inner_product",
    "norm_l2",
    "norm_inf",
    "norm_A",
    "interior_operators",
    "write_csv",
    "read_csv",
]

_MASK = np.array([1.0, 10.0, 1.0]) / 12.0


@dataclass(frozen=True)
class Grid2D:
    lx: float
    rx: float
    ly: float
    ry: float
    Mx: int
    My: int

    def __post_init__(self):
        if int(self.Mx) != self.Mx or int(self.My) != self.My:
            raise ConfigurationError("interval counts must be integers")
        if self.Mx < 2 or self.My < 2:
            raise ConfigurationError(f"need Mx, My >= 2, got {self.Mx}, {self.My}")
        if not (self.rx > self.lx and self.ry > self.ly):
            raise ConfigurationError("empty domain")

    @property
    def hx(self):
        return (self.rx - self.lx) / self.Mx

    @property
    def hy(self):
        return (self.ry - self.ly) / self.My

    @property
    def shape(self):
        return (self.Mx + 1, self.My + 1)

    @property
    def interior_shape(self):
        return (self.Mx - 1, self.My - 1)

    @property
    def x(self):
        return self.lx + self.hx * np.arange(self.Mx + 1)

    @property
    def y(self):
        return self.ly + self.hy * np.arange(self.My + 1)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def refined(self, factor):
        return Grid2D(self.lx, self.rx, self.ly, self.ry,
                      self.Mx * factor, self.My * factor)


def unit_square(M, My=None):
    return Grid2D(0.0, 1.0, 0.0, 1.0, M, M if My is None else My)


class GridFunction:
    """Nodal values on a :class:`Grid2D`.

    ``zero_boundary`` marks membership in the space of functions vanishing
    on the boundary; it is checked, not assumed, when set explicitly.
    """

    __slots__ = ("grid", "values", "zero_boundary")

    def __init__(self, grid, values, zero_boundary=None):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise UsageError(f"values of shape {values.shape} do not fit grid {grid.shape}")
        self.grid = grid
        self.values = values
        if zero_boundary is None:
            zero_boundary = _boundary_is_zero(values)
        elif zero_boundary and not _boundary_is_zero(values):
            raise UsageError("boundary values are not zero")
        self.zero_boundary = bool(zero_boundary)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape), True)

    @classmethod
    def sample(cls, grid, func):
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape).copy())

    @classmethod
    def from_interior(cls, grid, interior):
        v = np.zeros(grid.shape)
        v[1:-1, 1:-1] = np.reshape(interior, grid.interior_shape)
        return cls(grid, v, True)

    @property
    def interior(self):
        return self.values[1:-1, 1:-1]

    def _wrap(self, other):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._wrap(other))

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._wrap(other))

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._wrap(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values, self.zero_boundary)

    def __repr__(self):
        return f"GridFunction({self.grid.Mx}x{self.grid.My}, zero_boundary={self.zero_boundary})"


def _boundary_is_zero(v):
    return not (v[0].any() or v[-1].any() or v[:, 0].any() or v[:, -1].any())


def _same_grid(u, w):
    if u.grid != w.grid:
        raise UsageError("grid functions live on different grids")


def _avg_x(v):
    out = v.copy()
    out[1:-1] = _MASK[0] * v[:-2] + _MASK[1] * v[1:-1] + _MASK[2] * v[2:]
    return out


def _avg_y(v):
    out = v.copy()
    out[:, 1:-1] = _MASK[0] * v[:, :-2] + _MASK[1] * v[:, 1:-1] + _MASK[2] * v[:, 2:]
    return out


def apply_compact_A(u):
    """Compact average ``A u`` (identity rows on the boundary)."""
    return GridFunction(u.grid, _avg_x(_avg_y(u.values)), u.zero_boundary or None)


def apply_lambda(u):
    """Compact Laplacian ``Lambda u`` of a zero-boundary function."""
    if not u.zero_boundary:
        raise UsageError("the compact Laplacian is only defined on zero-boundary functions")
    g = u.grid
    v = u.values
    dxx = np.zeros_like(v)
    dxx[1:-1] = (v[:-2] - 2 * v[1:-1] + v[2:]) / g.hx**2
    dyy = np.zeros_like(v)
    dyy[:, 1:-1] = (v[:, :-2] - 2 * v[:, 1:-1] + v[:, 2:]) / g.hy**2
    out = _avg_y(dxx) + _avg_x(dyy)
    out[0] = out[-1] = 0.0
    out[:, 0] = out[:, -1] = 0.0
    return GridFunction(g, out, True)


def inner_product(u, w):
    """Discrete L2 product over interior nodes."""
    _same_grid(u, w)
    g = u.grid
    return g.hx * g.hy * float(np.vdot(u.interior, w.interior))


def norm_l2(u):
    return np.sqrt(inner_product(u, u))


def norm_inf(u):
    return float(np.max(np.abs(u.values)))


def norm_A(u):
    """``sqrt((u, A u))``."""
    return np.sqrt(inner_product(u, apply_compact_A(u)))


@functools.lru_cache(maxsize=32)
def interior_operators(grid):
    """Sparse ``(A, Lambda)`` acting on row-major interior vectors."""
    mx, my = grid.interior_shape

    def tri(m, a, b):
        return sp.diags([np.full(m - 1, a), np.full(m, b), np.full(m - 1, a)],
                        [-1, 0, 1], format="csr")

    ax, ay = tri(mx, 1 / 12, 10 / 12), tri(my, 1 / 12, 10 / 12)
    dx = tri(mx, 1.0, -2.0) / grid.hx**2
    dy = tri(my, 1.0, -2.0) / grid.hy**2
    A = sp.kron(ax, ay, format="csr")
    L = (sp.kron(dx, ay) + sp.kron(ax, dy)).tocsr()
    return A, L


_CSV_HEADER = ("i", "j", "x", "y", "value")


def write_csv(u, path):
    """Write ``i, j, x, y, value`` rows (i outer, j inner)."""
    g = u.grid
    X, Y = g.mesh()
    I, J = np.meshgrid(np.arange(g.Mx + 1), np.arange(g.My + 1), indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_HEADER)
        for row in zip(I.ravel(), J.ravel(), X.ravel(), Y.ravel(), u.values.ravel()):
            w.writerow((int(row[0]), int(row[1]), repr(float(row[2])),
                        repr(float(row[3])), repr(float(row[4]))))


def read_csv(path, grid):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != _CSV_HEADER:
            raise UsageError(f"unexpected CSV header {header}")
        v = np.zeros(grid.shape)
        for i, j, _, _, val in r:
            v[int(i), int(j)] = float(val)
    return GridFunction(grid, v)
