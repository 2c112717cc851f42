import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import oracle_rl
from stgwave.errors import ConfigurationError, DomainError, NumericalError
from stgwave.exponent import (ExponentSchedule, alpha_eval, build_kernel_table,
                              compute_g, compute_g_integral, kernel_eval)


def test_schedule_rejects_exponent_outside_open_interval():
    with pytest.raises(ConfigurationError):
        ExponentSchedule(0.95)
    with pytest.raises(ConfigurationError):
        ExponentSchedule(1.95)  # alpha(1) = 1.95 + 1/11 > 2
    with pytest.raises(ConfigurationError):
        ExponentSchedule(1.5, poly_power=1)


def test_alpha_and_kernel_values():
    s = ExponentSchedule(1.5)
    assert alpha_eval(s, 0.0) == 1.5
    assert alpha_eval(s, 1.0) == pytest.approx(1.5 + 1 / 11, abs=1e-15)
    a = 1.5 + 0.25 / 11
    assert kernel_eval(s, 0.5) == pytest.approx(0.5 ** (1 - a) / math.gamma(2 - a), rel=1e-14)


def test_domain_errors():
    s = ExponentSchedule(1.5)
    with pytest.raises(DomainError):
        alpha_eval(s, 1.5)
    with pytest.raises(DomainError):
        alpha_eval(s, -0.1)
    with pytest.raises(DomainError):
        kernel_eval(s, 0.0)


def test_g_is_one_at_origin():
    assert compute_g(ExponentSchedule(1.3), 0.0) == 1.0


@pytest.mark.parametrize("alpha0", [1.1, 1.5, 1.9])
@pytest.mark.parametrize("t", [0.05, 0.5, 1.0])
def test_g_matches_graded_oracle(alpha0, t):
    s = ExponentSchedule(alpha0)
    expected = oracle_rl(alpha0, 1 / 11, t, alpha0 - 1)
    assert abs(compute_g(s, t, tol=1e-12) - expected) <= 1e-11


def test_g_integral_matches_oracle():
    s = ExponentSchedule(1.5)
    for t in (0.1, 1.0):
        assert abs(compute_g_integral(s, t) - oracle_rl(1.5, 1 / 11, t, 1.5)) <= 1e-11


def test_g_vectorised_agrees_with_scalar():
    s = ExponentSchedule(1.7)
    ts = np.array([0.0, 0.2, 0.9])
    vec = compute_g(s, ts)
    assert vec.shape == (3,)
    for v, t in zip(vec, ts):
        assert v == pytest.approx(compute_g(s, t), abs=1e-14)


def test_constant_exponent_gives_unit_g_through_quadrature():
    s = ExponentSchedule.constant(1.4)
    ts = np.linspace(0.05, 1.0, 20)
    assert np.max(np.abs(compute_g(s, ts) - 1.0)) <= 1e-12


def test_insufficient_level_budget_raises_with_estimate():
    with pytest.raises(NumericalError) as info:
        compute_g(ExponentSchedule(1.9), 1.0, tol=1e-15, max_level=2)
    assert info.value.estimate is not None


def test_kernel_table_relations():
    s = ExponentSchedule(1.5)
    tab = build_kernel_table(s, 1.0, 64)
    assert tab.tau == pytest.approx(1 / 64)
    assert tab.g_nodes[0] == 1.0
    np.testing.assert_allclose(tab.w, np.diff(tab.g_nodes), rtol=0, atol=0)
    assert tab.w_tilde[0] == 0.5 * tab.w[0]
    np.testing.assert_allclose(tab.w_tilde[1:], 0.5 * (tab.w[1:] + tab.w[:-1]))
    assert tab.c0 == 1 + 0.5 * tab.w[0]
    assert not tab.g_nodes.flags.writeable
    assert tab.gbar(1) == tab.g_slab_means[0]


def test_slab_means_match_averaged_g():
    from scipy.integrate import quad

    s = ExponentSchedule(1.5)
    N = 16
    tab = build_kernel_table(s, 1.0, N)
    for n in (2, 5, 16):
        a, b = (n - 1) / N, n / N
        ref = quad(lambda t: compute_g(s, t), a, b, epsabs=1e-14)[0] * N
        assert tab.gbar(n) == pytest.approx(ref, abs=1e-11)


def test_table_rejects_bad_sizes():
    s = ExponentSchedule(1.5)
    with pytest.raises(ConfigurationError):
        build_kernel_table(s, 1.0, 1)
    with pytest.raises(ConfigurationError):
        build_kernel_table(s, 2.0, 8)


def test_constant_exponent_table_has_no_history():
    tab = build_kernel_table(ExponentSchedule.constant(1.6), 1.0, 32)
    assert not tab.w_tilde.any()
    assert tab.c0 == 1.0


@settings(max_examples=40, deadline=None)
@given(alpha0=st.floats(1.01, 1.9), t=st.floats(1e-6, 1.0))
def test_kernel_positive_and_alpha_in_range(alpha0, t):
    s = ExponentSchedule(alpha0)
    assert 1 < alpha_eval(s, t) < 2
    assert kernel_eval(s, t) > 0
