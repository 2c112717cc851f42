"""Averaged product-integration (PI) weights for the kernel t**(abar-1)/Gamma(abar).

On a uniform mesh the weights of the averaged PI rule reduce to

    lambda_{n,j} = tau**abar / Gamma(abar+2) * a_{n-j},

with ``a_0 = 1`` and, for ``m >= 1``, the second difference
``a_m = (m+1)**b - 2*m**b + (m-1)**b`` of ``m**b``, ``b = abar + 1``.  The
history therefore only needs one vector of ``N + 1`` coefficients per run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .errors import ConfigurationError, UsageError

__all__ = [
    "PIWeightRow",
    "ConvolutionWeights",
    "second_differences",
    "lambda_weight",
    "build_pi_row",
    "apply_averaged_pi",
    "averaged_pi_energy",
]

_SERIES_FROM = 4
_SERIES_TERMS = 24


def _check_abar(abar):
    if not 0.0 < abar < 1.0:
        raise ConfigurationError(f"abar must lie in (0, 1), got {abar}")


def second_differences(abar, m):
    """Coefficients ``a_m`` for integer ``m >= 0`` (array or scalar).

    For ``m >= 4`` the second difference is summed as the even part of the
    binomial series of ``(1 + 1/m)**b``, which avoids the cancellation of
    the direct four-term formula (relative error stays near machine
    precision for any ``m``).
    """
    _check_abar(abar)
    b = abar + 1.0
    m = np.asarray(m)
    if np.any(m < 0):
        raise UsageError("second differences are defined for m >= 0")
    mf = m.astype(float)
    out = np.empty(mf.shape)

    out[m == 0] = 1.0
    small = (m >= 1) & (m < _SERIES_FROM)
    ms = mf[small]
    out[small] = (ms + 1) ** b - 2 * ms**b + (ms - 1) ** b

    big = m >= _SERIES_FROM
    if np.any(big):
        x2 = mf[big] ** -2.0
        coef = 1.0
        acc = np.zeros_like(x2)
        xp = np.ones_like(x2)
        for j in range(1, 2 * _SERIES_TERMS + 1):
            coef *= (b - j + 1) / j
            if j % 2 == 0:
                xp = xp * x2
                acc += coef * xp
        out[big] = 2.0 * mf[big] ** b * acc
    return float(out) if out.ndim == 0 else out


def _scale(abar, tau):
    return tau**abar / gamma(abar + 2.0)


def lambda_weight(abar, tau, n, j):
    """Single weight ``lambda_{n,j}``, ``1 <= j <= n``."""
    _check_abar(abar)
    if not (1 <= j <= n):
        raise UsageError(f"need 1 <= j <= n, got n={n}, j={j}")
    if tau <= 0:
        raise ConfigurationError("tau must be positive")
    return _scale(abar, tau) * second_differences(abar, n - j)


@dataclass(frozen=True, eq=False)
class PIWeightRow:
    """Weights of level ``n``: ``lam[j-1] = lambda_{n,j}`` and
    ``lam_tilde[k-1]`` the merged weights multiplying whole levels ``k < n``.
    """

    n: int
    lam: np.ndarray
    lam_tilde: np.ndarray


def _merge(lam):
    # lambda~_{n,1} = lam_1 + lam_2/2, lambda~_{n,k} = (lam_k + lam_{k+1})/2
    lt = 0.5 * (lam[:-1] + lam[1:])
    if lt.size:
        lt[0] += 0.5 * lam[0]
    return lt


def build_pi_row(abar, tau, n):
    if n < 1:
        raise UsageError(f"level must be >= 1, got {n}")
    lam = _scale(abar, tau) * second_differences(abar, np.arange(n - 1, -1, -1))
    return PIWeightRow(n=n, lam=lam, lam_tilde=_merge(lam))


def apply_averaged_pi(row, phi1, phi_half):
    """``lambda_{n,1} phi^1 + sum_{j>=2} lambda_{n,j} phi^{j-1/2}``.

    ``phi_half`` stacks the midpoint values for levels ``2..n`` along its
    first axis; trailing axes (e.g. grid values) are carried through.
    """
    phi_half = np.asarray(phi_half, dtype=float)
    count = phi_half.shape[0] if phi_half.ndim else -1
    if count != row.n - 1:
        raise UsageError(
            f"level {row.n} needs {row.n - 1} midpoint values, got {max(count, 0)}"
        )
    out = row.lam[0] * np.asarray(phi1, dtype=float)
    if count:
        out = out + np.tensordot(row.lam[1:], phi_half, axes=(0, 0))
    return out


def averaged_pi_energy(v, abar, tau):
    """Bilinear form ``v^1 I^1 v^1 + sum_{n>=2} v^{n-1/2} I^n v^n``.

    Non-negative for every sequence ``v`` (positivity of the averaged PI rule).
    """
    v = np.asarray(v, dtype=float)
    N = v.size
    half = 0.5 * (v[1:] + v[:-1])
    total = 0.0
    for n in range(1, N + 1):
        row = build_pi_row(abar, tau, n)
        val = apply_averaged_pi(row, v[0], half[: n - 1])
        total += (v[0] if n == 1 else half[n - 2]) * val
    return total


class ConvolutionWeights:
    """All PI weights of a run, stored as one coefficient vector.

    ``theta(n)`` is the weight on the unknown level inside ``I^n``:
    ``lambda_{1,1}`` for ``n = 1`` and ``lambda_{n,n}/2`` afterwards.
    """

    def __init__(self, abar, tau, N):
        _check_abar(abar)
        self.abar = abar
        self.tau = tau
        self.N = N
        self.scale = _scale(abar, tau)
        self.coeffs = second_differences(abar, np.arange(N + 1))
        self.coeffs.setflags(write=False)

    def row(self, n):
        return self.scale * self.coeffs[n - 1::-1]

    def lam_tilde(self, n):
        return _merge(self.row(n))

    def theta(self, n):
        return self.scale if n == 1 else 0.5 * self.scale
