"""Variable exponent, Abel kernel and the generalized identity function.

The model is reformulated by convolving with the Riemann-Liouville kernel
``beta_q(t) = t**(q-1) / Gamma(q)`` of order ``q = alpha0 - 1``.  This
produces the function

    g(t) = (beta_{alpha0-1} * k)(t),   k(t) = t**(1-alpha(t)) / Gamma(2-alpha(t)),

whose nodal values and slab averages drive the time-stepping history.
Both endpoint singularities of the convolution are algebraic with exponents
in (-1, 0) and are absorbed by a double-exponential (tanh-sinh) rule.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gamma

from .errors import ConfigurationError, DomainError, NumericalError

__all__ = [
    "ExponentSchedule",
    "KernelTable",
    "alpha_eval",
    "kernel_eval",
    "compute_g",
    "compute_g_integral",
    "build_kernel_table",
]


@dataclass(frozen=True)
class ExponentSchedule:
    """Polynomial exponent ``alpha(t) = alpha0 + poly_coeff * t**poly_power``.

    ``poly_power >= 2`` makes ``alpha'(0) = 0`` hold structurally.  A zero
    coefficient gives a constant exponent.  Other smooth families can be
    supported by subclassing and overriding :meth:`excess`, which must
    return ``alpha(t) - alpha0`` computed without cancellation.
    """

    alpha0: float
    poly_coeff: float = 1.0 / 11.0
    poly_power: int = 2
    horizon: float = 1.0

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if int(self.poly_power) != self.poly_power or self.poly_power < 2:
            raise ConfigurationError(
                f"poly_power must be an integer >= 2, got {self.poly_power}"
            )
        # alpha is monotone on [0, T], so the endpoints bound it.
        for t in (0.0, self.horizon):
            a = self.alpha0 + self.poly_coeff * t**self.poly_power
            if not 1.0 < a < 2.0:
                raise ConfigurationError(
                    f"alpha({t:g}) = {a!r} leaves the interval (1, 2)"
                )

    @classmethod
    def constant(cls, alpha0, horizon=1.0):
        return cls(alpha0, 0.0, 2, horizon)

    @property
    def abar(self):
        """Exponent ``alpha(0) - 1`` of the reformulated model."""
        return self.alpha0 - 1.0

    @property
    def is_constant(self):
        return self.poly_coeff == 0.0

    def excess(self, t):
        return self.poly_coeff * np.power(t, self.poly_power)

    def __call__(self, t):
        return self.alpha0 + self.excess(t)


def _check_time(schedule, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > schedule.horizon * (1 + 1e-14)):
        raise DomainError(f"t must lie in [0, {schedule.horizon}]")
    return t


def alpha_eval(schedule, t):
    """Exponent value alpha(t) for ``0 <= t <= T``."""
    t = _check_time(schedule, t)
    out = schedule(t)
    return float(out) if out.ndim == 0 else out


def kernel_eval(schedule, t):
    """Abel kernel ``t**(1 - alpha(t)) / Gamma(2 - alpha(t))`` for ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("the kernel is singular at t = 0; need t > 0")
    t = _check_time(schedule, t)
    a = schedule(t)
    out = np.power(t, 1.0 - a) / gamma(2.0 - a)
    return float(out) if out.ndim == 0 else out


# -- tanh-sinh machinery -----------------------------------------------------

_X_MAX = 6.5  # tail beyond this is below 1e-40 for endpoint exponents > -0.95
_H0 = 0.5
_MAX_LEVEL = 8
_CHUNK = 1 << 21


@functools.lru_cache(maxsize=None)
def _ts_level(level):
    """Nodes added at ``level`` of the nested rule on [0, 1].

    Returns ``(u, 1-u, dw)`` where ``dw = pi*cosh(x)*(1-u)`` so that the
    quadrature weight of a node is ``h * dw * u``.  Keeping the factor ``u``
    separate lets callers fold it into ``u**(1+p)`` without forming 0*inf.
    """
    h = _H0 / 2**level
    kmax = int(math.ceil(_X_MAX / h))
    k = np.arange(-kmax, kmax + 1)
    if level > 0:
        k = k[k % 2 == 1]
    x = k * h
    v = np.pi * np.sinh(x)  # 2 * (pi/2) sinh(x)
    u = expit(v)
    um = expit(-v)
    return u, um, np.pi * np.cosh(x) * um


def _psi(schedule, s):
    """Smooth factor of the kernel: ``k(s) = s**(1-alpha0) * psi(s)``."""
    d = schedule.excess(s)
    return np.power(s, -d) / gamma(2.0 - schedule.alpha0 - d)


def _kernel_unchecked(schedule, s):
    a = schedule(s)
    return np.power(s, 1.0 - a) / gamma(2.0 - a)


def _panel_sums(schedule, t, order, u, um, dw):
    """Un-normalized level sums of both panels for times ``t`` (column)."""
    a0 = schedule.alpha0
    half = 0.5 * t
    # [0, t/2]: s = (t/2) u, singular factor s**(1-alpha0)
    s = half * u
    left = dw * np.power(u, 2.0 - a0) * np.power(t - s, order - 1.0) * _psi(schedule, s)
    # [t/2, t]: t - s = (t/2) u, singular factor (t-s)**(order-1)
    s = t - half * u
    right = dw * np.power(u, order) * _kernel_unchecked(schedule, s)
    return left.sum(axis=1), right.sum(axis=1)


def _rl_of_kernel(schedule, ts, order, tol, max_level=_MAX_LEVEL):
    """Evaluate ``(beta_order * k)(t)`` for an array of times ``ts > 0``.

    Returns the values and the achieved error estimate (max over ``ts``).
    """
    ts = np.asarray(ts, dtype=float)
    out = np.empty_like(ts)
    worst = 0.0
    step = max(1, _CHUNK // 4096)
    for start in range(0, ts.size, step):
        t = ts[start:start + step, None]
        half = t[:, 0] * 0.5
        scale_l = np.power(half, 2.0 - schedule.alpha0) / gamma(order)
        scale_r = np.power(half, order) / gamma(order)
        sum_l = np.zeros(t.shape[0])
        sum_r = np.zeros(t.shape[0])
        prev = None
        for level in range(max_level + 1):
            u, um, dw = _ts_level(level)
            dl, dr = _panel_sums(schedule, t, order, u, um, dw)
            sum_l += dl
            sum_r += dr
            h = _H0 / 2**level
            cur = h * (scale_l * sum_l + scale_r * sum_r)
            if prev is not None:
                err = float(np.max(np.abs(cur - prev)))
                floor = 8 * np.finfo(float).eps * float(np.max(np.abs(cur)))
                if err <= max(tol, floor) and level >= 2:
                    break
            prev = cur
        else:
            raise NumericalError(
                f"tanh-sinh quadrature did not reach tol={tol:g} within "
                f"{max_level} levels (estimate {err:.3e})",
                estimate=err,
            )
        out[start:start + step] = cur
        worst = max(worst, err)
    return out, worst


def compute_g(schedule, t, tol=1e-12, max_level=_MAX_LEVEL):
    """Generalized identity function g(t); ``g(0) = 1`` exactly.

    Accepts a scalar or an array of times in ``[0, T]``.  ``max_level``
    bounds the node budget (each level doubles it); exceeding it raises
    :class:`NumericalError` carrying the achieved estimate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t = _check_time(schedule, t)
    flat = np.atleast_1d(t).ravel()
    out = np.ones_like(flat)
    pos = flat > 0
    if pos.any():
        out[pos], _ = _rl_of_kernel(
            schedule, flat[pos], schedule.alpha0 - 1.0, tol, max_level
        )
    return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)


def compute_g_integral(schedule, t, tol=1e-12):
    """Running integral ``G(t) = int_0^t g``, evaluated as ``(beta_alpha0 * k)(t)``."""
    t = _check_time(schedule, t)
    flat = np.atleast_1d(t).ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    if pos.any():
        out[pos], _ = _rl_of_kernel(schedule, flat[pos], schedule.alpha0, tol)
    return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Per-run tables derived from g on the uniform mesh ``t_k = k*tau``.

    ``g_slab_means[n-1]`` holds the slab average over ``[t_{n-1}, t_n]``;
    ``w[k] = g(t_{k+1}) - g(t_k)`` and ``w_tilde`` are indexed from 0.
    """

    tau: float
    n_steps: int
    g_nodes: np.ndarray
    g_slab_means: np.ndarray
    w: np.ndarray
    w_tilde: np.ndarray
    c0: float
    schedule: ExponentSchedule = field(repr=False, default=None)

    def gbar(self, n):
        return self.g_slab_means[n - 1]


def build_kernel_table(schedule, T=None, N=None, tol=1e-12):
    """Tabulate g, its slab means and the history weights for ``N`` steps."""
    if T is None:
        T = schedule.horizon
    if N is None or int(N) != N or N < 2:
        raise ConfigurationError(f"N must be an integer >= 2, got {N}")
    if not 0 < T <= schedule.horizon * (1 + 1e-14):
        raise ConfigurationError(f"T must lie in (0, {schedule.horizon}]")
    return _kernel_table_cached(schedule, float(T), int(N), float(tol))


@functools.lru_cache(maxsize=16)
def _kernel_table_cached(schedule, T, N, tol):
    tau = T / N
    tk = np.arange(N + 1) * tau
    tk[-1] = T
    if schedule.is_constant:
        # Beta identity: g == 1 and G(t) == t; skip the quadrature.
        g_nodes = np.ones(N + 1)
        slab = np.ones(N)
    else:
        g_nodes = compute_g(schedule, tk, tol)
        # Slab means as differences of G = int g; exact on the first slab where
        # g'' has a logarithmic singularity.
        G = compute_g_integral(schedule, tk, tol * tau)
        slab = np.diff(G) / tau
    g_nodes[0] = 1.0
    w = np.diff(g_nodes)
    w_tilde = np.empty(N)
    w_tilde[0] = 0.5 * w[0]
    w_tilde[1:] = 0.5 * (w[1:] + w[:-1])
    for arr in (g_nodes, slab, w, w_tilde):
        arr.setflags(write=False)
    return KernelTable(
        tau=tau,
        n_steps=N,
        g_nodes=g_nodes,
        g_slab_means=slab,
        w=w,
        w_tilde=w_tilde,
        c0=1.0 + 0.5 * w[0],
        schedule=schedule,
    )
