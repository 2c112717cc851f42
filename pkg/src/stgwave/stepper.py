"""Time stepping for the reformulated diffusion-wave equation.

Level ``n`` of every scheme has the form

    (c0/tau) A U^n - theta_n Lambda U^n - theta_n A f(U^n) = rhs^n,

where ``theta_1 = lambda_{1,1}``, ``theta_n = lambda_{n,n}/2`` for ``n >= 2``
and ``rhs^n`` gathers everything known from levels ``0..n-1``:

    rhs^n = A[ (c0/tau) U^{n-1} - sum_k w~_{n-k} dt U^k
               + sum_k lam~_{n,k} f(U^k) + gbar_n ubar0 ]
            + Lambda[ sum_k lam~_{n,k} U^k ].

A and Lambda are linear, so each history sum is formed on raw levels with a
single weighted reduction and the operators are applied once per level.
The standard scheme solves the nonlinear system by Newton's method; the
two-grid scheme does so on a coarse grid only and then solves one system
per level on the fine grid, linearized about the spline-prolonged coarse
solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NewtonDivergenceError, UsageError
from .exponent import ExponentSchedule, build_kernel_table
from .mesh import Grid2D, GridFunction, interior_operators, unit_square, write_csv
from .piweights import ConvolutionWeights
from .spline import prolongate_interior
from .stencilsolve import assemble

__all__ = [
    "NonlinearTerm",
    "ProblemInstance",
    "SchemeRun",
    "CASE_I",
    "CASE_II",
    "ZERO",
    "linear_term",
    "example_problem",
    "assemble_rhs",
    "step_nonlinear",
    "step_fine_linearized",
    "run_standard",
    "run_stg",
]

NEWTON_RTOL = 1e-12
NEWTON_MAXIT = 50
HISTORY_BLOCK = 32


# -- nonlinear terms ---------------------------------------------------------

def _f_case1(u):
    u2 = u * u
    return u2 / (1.0 + u2) - u


def _df_case1(u):
    return 2.0 * u / (1.0 + u * u) ** 2 - 1.0


def _f_case2(u):
    return u - u * u * u


def _df_case2(u):
    return 1.0 - 3.0 * u * u


def _zero(u):
    return np.zeros_like(u)


class _Linear:
    def __init__(self, c):
        self.c = c

    def f(self, u):
        return self.c * u

    def fprime(self, u):
        return np.full_like(u, self.c)


@dataclass(frozen=True)
class NonlinearTerm:
    f: object
    fprime: object
    label: str = "custom"

    def derivative_error(self, rng=None, n=64, spread=2.0, step=1e-5):
        """Largest relative mismatch between ``fprime`` and central differences."""
        rng = np.random.default_rng(rng)
        u = rng.uniform(-spread, spread, n)
        fd = (self.f(u + step) - self.f(u - step)) / (2 * step)
        exact = self.fprime(u)
        return float(np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))))


CASE_I = NonlinearTerm(_f_case1, _df_case1, "I")
CASE_II = NonlinearTerm(_f_case2, _df_case2, "II")
ZERO = NonlinearTerm(_zero, _zero, "zero")


def linear_term(c):
    lin = _Linear(float(c))
    return NonlinearTerm(lin.f, lin.fprime, f"linear({c:g})")


def _sin_pi(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def _sin_2pi(x, y):
    return np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)


@dataclass(frozen=True)
class ProblemInstance:
    schedule: ExponentSchedule
    u0: object
    ubar0: object
    nonlinearity: NonlinearTerm
    T: float = 1.0

    def __post_init__(self):
        if not 0 < self.T <= self.schedule.horizon * (1 + 1e-14):
            raise ConfigurationError("T must lie in (0, schedule.horizon]")


def example_problem(alpha0, case="I", poly_coeff=1.0 / 11.0):
    """Benchmark problem on the unit square with T = 1.

    ``u0 = sin(pi x) sin(pi y)``, ``ubar0 = sin(2 pi x) sin(2 pi y)``,
    ``alpha(t) = alpha0 + t**2/11``.  ``case`` is ``"I"``
    (``f = u^2/(1+u^2) - u``), ``"II"`` (``f = u - u^3``), ``"zero"``, or a
    :class:`NonlinearTerm`.
    """
    terms = {"I": CASE_I, "II": CASE_II, "zero": ZERO}
    if isinstance(case, NonlinearTerm):
        term = case
    else:
        try:
            term = terms[str(case)]
        except KeyError:
            raise ConfigurationError(f"unknown case {case!r}") from None
    return ProblemInstance(ExponentSchedule(alpha0, poly_coeff, 2, 1.0),
                           _sin_pi, _sin_2pi, term, 1.0)


# -- runs --------------------------------------------------------------------

def _sample_interior(grid, func):
    v = GridFunction.sample(grid, func).values
    edge = np.concatenate([v[0], v[-1], v[:, 0], v[:, -1]])
    if np.max(np.abs(edge)) > 1e-12 * max(1.0, np.max(np.abs(v))):
        raise ConfigurationError("initial data must vanish on the boundary")
    return v[1:-1, 1:-1].ravel()


class SchemeRun:
    """State of one scheme execution on one grid.

    ``levels[n]`` holds the interior values of ``U^n`` (row-major) and
    ``fvals[n]`` the values ``f(U^n)``; ``current`` is the last completed
    level.
    """

    def __init__(self, problem, grid, N, table=None):
        self.problem = problem
        self.grid = grid
        self.N = int(N)
        self.table = table or build_kernel_table(problem.schedule, problem.T, self.N)
        self.tau = self.table.tau
        self.c0 = self.table.c0
        self.weights = ConvolutionWeights(problem.schedule.abar, self.tau, self.N)
        self.A, self.L = interior_operators(grid)
        size = int(np.prod(grid.interior_shape))
        self.levels = np.empty((self.N + 1, size))
        self.fvals = np.empty((self.N + 1, size))
        self.levels[0] = _sample_interior(grid, problem.u0)
        self.fvals[0] = problem.nonlinearity.f(self.levels[0])
        self.ubar0 = _sample_interior(grid, problem.ubar0)
        self.current = 0
        self.newton_history = {}
        self.timings = {}
        self._far = None

    @property
    def f(self):
        return self.problem.nonlinearity.f

    @property
    def fprime(self):
        return self.problem.nonlinearity.fprime

    def theta(self, n):
        return self.weights.theta(n)

    def level(self, n):
        return GridFunction.from_interior(self.grid, self.levels[n])

    @property
    def final(self):
        return self.level(self.current)

    def dump_level(self, n, path):
        write_csv(self.level(n), path)

    def history_weights(self, n):
        """Coefficients of the known part of level ``n``.

        Returns ``(cA, lt)``: ``cA[k]`` multiplies ``U^k`` (``k < n``) inside
        A, ``lt[k-1] = lam~_{n,k}`` multiplies ``U^k`` inside Lambda and
        ``f(U^k)`` inside A.
        """
        cA = np.zeros(n)
        if n >= 2:
            k = np.arange(1, n)
            wk = self.table.w_tilde[n - k] / self.tau
            cA[k] -= wk
            cA[k - 1] += wk
        cA[n - 1] += self.c0 / self.tau
        return cA, self.weights.lam_tilde(n)

    def commit(self, n, U):
        if self._far is not None and n < self._far[0]:
            self._far = None
        self.levels[n] = U
        self.fvals[n] = self.f(U)
        self.current = n

    def residual(self, n, U, rhs, theta=None):
        """Residual of the level-``n`` nonlinear equation at interior ``U``."""
        th = self.theta(n) if theta is None else theta
        return (self.A @ ((self.c0 / self.tau) * U - th * self.f(U))
                - th * (self.L @ U) - rhs)


def _check_history(run, n):
    if not 1 <= n <= run.N:
        raise UsageError(f"level {n} outside 1..{run.N}")
    if run.current < n - 1:
        raise UsageError(f"level {n} needs levels 0..{n - 1}; only {run.current} done")


def _far_block(run, n):
    """History over ``k < n`` for levels ``n .. n+B-1`` as two BLAS-3 products.

    Each level's sum splits at the block start ``n0``: the part over
    ``k < n0`` is shared by the whole block and computed here, the few terms
    ``n0 <= k < n`` are added per level.  Reading the stored levels once per
    block instead of once per level removes the memory-bound cost.
    """
    n1 = min(n + HISTORY_BLOCK, run.N + 1)
    B = n1 - n
    C = np.zeros((2 * B, n))
    Lf = np.zeros((B, n))
    for i, m in enumerate(range(n, n1)):
        cA, lt = run.history_weights(m)
        C[i] = cA[:n]
        C[B + i, 1:] = lt[:n - 1]
        Lf[i, 1:] = lt[:n - 1]
    XY = C @ run.levels[:n]
    XY[:B] += Lf @ run.fvals[:n]
    run._far = (n, n1, XY)


def _rhs_vector(run, n):
    _check_history(run, n)
    far = run._far
    if far is None or not far[0] <= n < far[1]:
        _far_block(run, n)
        far = run._far
    n0, n1, XY = far
    i = n - n0
    X = XY[i].copy()
    Y = XY[n1 - n0 + i].copy()
    if n > n0:
        cA, lt = run.history_weights(n)
        near = run.levels[n0:n]
        X += cA[n0:] @ near + lt[n0 - 1:] @ run.fvals[n0:n]
        Y += lt[n0 - 1:] @ near
    X += run.table.gbar(n) * run.ubar0
    return run.A @ X + run.L @ Y


def assemble_rhs(run, n):
    """Known part of the level-``n`` equation as a zero-boundary grid function."""
    return GridFunction.from_interior(run.grid, _rhs_vector(run, n))


def _newton(run, n, rhs, tol=NEWTON_RTOL, maxit=NEWTON_MAXIT):
    th = run.theta(n)
    a = run.c0 / run.tau
    U = run.levels[n - 1].copy()
    stop = tol * (1.0 + np.max(np.abs(rhs)))
    hist = []
    for it in range(maxit + 1):
        R = run.residual(n, U, rhs, th)
        hist.append(float(np.max(np.abs(R))))
        if hist[-1] <= stop:
            break
        if it == maxit:
            raise NewtonDivergenceError(
                f"Newton did not converge at level {n} within {maxit} iterations "
                f"(residual {hist[-1]:.3e})", level=n, history=hist)
        J = assemble(run.grid, a, th, th * run.fprime(U))
        U -= J.solve_vector(R, step=n)
    run.newton_history[n] = hist
    return U


def step_nonlinear(run, n, commit=True):
    """Solve the nonlinear level-``n`` system by Newton's method.

    The Jacobian ``(c0/tau) A - theta Lambda - A diag(theta f'(U))`` is
    re-assembled and re-factorized every iteration; the initial guess is
    ``U^{n-1}``.
    """
    U = _newton(run, n, _rhs_vector(run, n))
    if commit:
        run.commit(n, U)
    return GridFunction.from_interior(run.grid, U)


def _as_interior(run, field):
    if isinstance(field, GridFunction):
        if field.grid != run.grid:
            raise UsageError("prolonged field lives on another grid")
        return field.interior.ravel()
    return np.ravel(field)


def _fine_solve(run, n, P):
    th = run.theta(n)
    fP = run.f(P)
    dfP = run.fprime(P)
    rhs = _rhs_vector(run, n) + th * (run.A @ (fP - dfP * P))
    K = assemble(run.grid, run.c0 / run.tau, th, th * dfP)
    return K.solve_vector(rhs, step=n)


def step_fine_linearized(run, n, prolonged_coarse, commit=True):
    """One linear solve with ``f`` replaced by its linearization about the prolonged field."""
    U = _fine_solve(run, n, _as_interior(run, prolonged_coarse))
    if commit:
        run.commit(n, U)
    return GridFunction.from_interior(run.grid, U)


def run_standard(problem, grid, N):
    """Standard nonlinear compact scheme on one grid; returns the finished run."""
    if isinstance(grid, int):
        grid = unit_square(grid)
    run = SchemeRun(problem, grid, N)
    start = time.perf_counter()
    for n in range(1, run.N + 1):
        run.commit(n, _newton(run, n, _rhs_vector(run, n)))
    run.timings["stepping"] = time.perf_counter() - start
    return run


def run_stg(problem, M_H, J, N, domain=(0.0, 1.0, 0.0, 1.0)):
    """Two-grid scheme: coarse nonlinear sweep, then fine linearized sweep.

    Returns ``(coarse_run, fine_run)``; ``fine_run.timings`` holds the
    ``coarse``, ``fine`` (prolongation included) and ``stepping`` totals.
    """
    if int(J) != J or J < 2:
        raise ConfigurationError(f"grid ratio J must be an integer >= 2, got {J}")
    coarse_grid = Grid2D(*domain, M_H, M_H)
    fine_grid = coarse_grid.refined(J)
    table = build_kernel_table(problem.schedule, problem.T, N)
    coarse = SchemeRun(problem, coarse_grid, N, table)
    fine = SchemeRun(problem, fine_grid, N, table)

    start = time.perf_counter()
    for n in range(1, N + 1):
        coarse.commit(n, _newton(coarse, n, _rhs_vector(coarse, n)))
    mid = time.perf_counter()
    for n in range(1, N + 1):
        P = prolongate_interior(coarse.levels[n], coarse_grid, fine_grid).ravel()
        fine.commit(n, _fine_solve(fine, n, P))
    end = time.perf_counter()
    coarse.timings["stepping"] = mid - start
    fine.timings.update(coarse=mid - start, fine=end - mid, stepping=end - start)
    return coarse, fine
