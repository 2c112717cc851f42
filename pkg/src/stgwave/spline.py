"""Cubic spline interpolation and the bicubic coarse-to-fine transfer.

A 1D spline on nodes ``x_i = x0 + i*H`` is fixed by its moments (second
derivatives) ``M_0..M_M``.  Interior moments solve

    (1/2) M_{i-1} + 2 M_i + (1/2) M_{i+1} = 3 (w_{i+1} - 2 w_i + w_{i-1}) / H**2

with the prescribed end moments moved to the right-hand side.  The 2D
transfer applies the 1D operator along x for every coarse row, then along y
for every fine column.  End moments are zero on every line, consistent with
homogeneous Dirichlet data.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .mesh import GridFunction

__all__ = [
    "SplineCoeffs1D",
    "thomas_solve",
    "cubic_spline_moments",
    "spline_eval",
    "interpolation_matrix",
    "prolongate_bicubic",
    "prolongate_interior",
]


def thomas_solve(sub, diag, sup, rhs):
    """Solve a tridiagonal system by elimination without pivoting.

    ``rhs`` may carry trailing axes (several right-hand sides at once).
    ``sub[0]`` and ``sup[-1]`` are ignored.
    """
    rhs = np.array(rhs, dtype=float)
    n = rhs.shape[0]
    sub = np.broadcast_to(np.asarray(sub, dtype=float), (n,))
    diag = np.broadcast_to(np.asarray(diag, dtype=float), (n,))
    sup = np.broadcast_to(np.asarray(sup, dtype=float), (n,))
    c = np.empty(n)
    c[0] = sup[0] / diag[0]
    rhs[0] /= diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i] * c[i - 1]
        c[i] = sup[i] / denom
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        rhs[i] -= c[i] * rhs[i + 1]
    return rhs


@dataclass(frozen=True, eq=False)
class SplineCoeffs1D:
    node_values: np.ndarray
    second_derivs: np.ndarray
    spacing: float
    x0: float = 0.0

    @property
    def nodes(self):
        return self.x0 + self.spacing * np.arange(self.node_values.shape[0])

    def rhs(self):
        """Right-hand side ``D`` of the moment system (for residual checks)."""
        w, m, H = self.node_values, self.second_derivs, self.spacing
        d = 3.0 * (w[2:] - 2 * w[1:-1] + w[:-2]) / H**2
        d[0] -= 0.5 * m[0]
        d[-1] -= 0.5 * m[-1]
        return d


def cubic_spline_moments(values, H, m0=0.0, mM=0.0, x0=0.0):
    """Moments of the interpolating cubic spline with end moments ``m0``, ``mM``.

    ``values`` may be 2D; each column is then an independent spline line.
    """
    w = np.asarray(values, dtype=float)
    if w.shape[0] < 3:
        raise UsageError("a cubic spline needs at least 3 nodes")
    if not H > 0:
        raise UsageError("spacing must be positive")
    d = 3.0 * (w[2:] - 2 * w[1:-1] + w[:-2]) / H**2
    d[0] = d[0] - 0.5 * np.asarray(m0)
    d[-1] = d[-1] - 0.5 * np.asarray(mM)
    inner = thomas_solve(0.5, 2.0, 0.5, d)
    m = np.empty_like(w)
    m[0] = m0
    m[-1] = mM
    m[1:-1] = inner
    return SplineCoeffs1D(w, m, float(H), float(x0))


def _evaluate(w, m, H, x0, x):
    M = w.shape[0] - 1
    x = np.asarray(x, dtype=float)
    i = np.clip(np.floor((x - x0) / H).astype(int) + 1, 1, M)
    xl = x0 + (i - 1) * H
    xr = x0 + i * H
    a = (xr - x)
    b = (x - xl)
    trail = (slice(None),) + (None,) * (w.ndim - 1)
    a, b = a[trail], b[trail]
    ml, mr = m[i - 1], m[i]
    return (ml * a**3 / (6 * H) + mr * b**3 / (6 * H)
            + (w[i - 1] - ml * H**2 / 6) * a / H
            + (w[i] - mr * H**2 / 6) * b / H)


def spline_eval(coeffs, x):
    """Evaluate the piecewise-cubic interpolant at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    lo = coeffs.x0
    hi = coeffs.x0 + coeffs.spacing * (coeffs.node_values.shape[0] - 1)
    tol = 1e-12 * max(1.0, abs(hi - lo))
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise DomainError(f"x outside spline range [{lo}, {hi}]")
    out = _evaluate(coeffs.node_values, coeffs.second_derivs, coeffs.spacing,
                    coeffs.x0, np.atleast_1d(x))
    return out[0] if x.ndim == 0 else out


@functools.lru_cache(maxsize=64)
def interpolation_matrix(M_coarse, J, length=1.0):
    """Matrix mapping coarse node values to spline values at fine nodes.

    Zero end moments; shape ``(J*M_coarse + 1, M_coarse + 1)``.
    """
    H = length / M_coarse
    basis = np.eye(M_coarse + 1)
    c = cubic_spline_moments(basis, H)
    xf = np.arange(J * M_coarse + 1) * (H / J)
    P = _evaluate(c.node_values, c.second_derivs, H, 0.0, xf)
    P[::J] = basis  # exact interpolation at coincident nodes
    P.setflags(write=False)
    return P


def _ratio(Mc, Mf):
    if Mf % Mc or Mf // Mc < 2:
        raise UsageError(f"fine count {Mf} is not an integer multiple >= 2 of {Mc}")
    return Mf // Mc


def _check_nested(coarse_grid, fine_grid):
    cg, fg = coarse_grid, fine_grid
    if (cg.lx, cg.rx, cg.ly, cg.ry) != (fg.lx, fg.rx, fg.ly, fg.ry):
        raise UsageError("coarse and fine grids cover different domains")
    return _ratio(cg.Mx, fg.Mx), _ratio(cg.My, fg.My)


def prolongate_bicubic(coarse, fine_grid):
    """Bicubic spline transfer ``Pi_H`` of a zero-boundary coarse function."""
    if not coarse.zero_boundary:
        raise UsageError("prolongation expects a zero-boundary coarse function")
    cg = coarse.grid
    Jx, Jy = _check_nested(cg, fine_grid)
    Px = interpolation_matrix(cg.Mx, Jx, cg.rx - cg.lx)
    Py = interpolation_matrix(cg.My, Jy, cg.ry - cg.ly)
    v = (Px @ coarse.values) @ Py.T
    v[0] = v[-1] = 0.0
    v[:, 0] = v[:, -1] = 0.0
    return GridFunction(fine_grid, v, True)


def prolongate_interior(values, coarse_grid, fine_grid):
    """Array version of :func:`prolongate_bicubic` on interior values."""
    Jx, Jy = _check_nested(coarse_grid, fine_grid)
    Px = interpolation_matrix(coarse_grid.Mx, Jx, coarse_grid.rx - coarse_grid.lx)
    Py = interpolation_matrix(coarse_grid.My, Jy, coarse_grid.ry - coarse_grid.ly)
    U = np.reshape(values, coarse_grid.interior_shape)
    return (Px[1:-1, 1:-1] @ U) @ Py[1:-1, 1:-1].T
