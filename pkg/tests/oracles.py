"""Independent high-precision references shared by the test modules."""

import mpmath as mp


def oracle_rl(alpha0, c, t, order, grade=10):
    """(beta_order * k)(t) with s = r**grade grading toward both singular ends."""
    mp.mp.dps = 30
    t = mp.mpf(t)

    def k(s):
        a = alpha0 + c * s**2
        return s ** (1 - a) / mp.gamma(2 - a)

    def integrand(s, d):
        # d = t - s, passed separately so it never cancels
        return d ** (order - 1) * k(s)

    half = t / 2

    def left(r):
        s = half * r**grade
        return integrand(s, t - s) * half * grade * r ** (grade - 1) if r else 0

    def right(r):
        d = half * r**grade
        return integrand(t - d, d) * half * grade * r ** (grade - 1) if r else 0

    total = mp.quad(left, [0, 1]) + mp.quad(right, [0, 1])
    return float(total / mp.gamma(order))


def lambda_double_integral(abar, tau, n, j):
    """(1/tau) int_{t_{n-1}}^{t_n} int_{t_{j-1}}^{min(t_j, t)} (t-s)^(abar-1)/Gamma(abar) ds dt."""
    mp.mp.dps = 20
    abar, tau = mp.mpf(abar), mp.mpf(tau)

    def inner(t):
        # d = t - s graded as d = u**10 so the integrand is smooth at d = 0
        hi = min(j * tau, t)
        lo = (j - 1) * tau
        if hi <= lo:
            return mp.mpf(0)
        a, b = (t - hi) ** mp.mpf(0.1), (t - lo) ** mp.mpf(0.1)
        return mp.quad(lambda u: 10 * u ** (10 * abar - 1), [a, b])

    val = mp.quad(inner, [(n - 1) * tau, n * tau])
    return float(val / (tau * mp.gamma(abar)))
