import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import non_core_by_ratio
from selberg_zeta.quad_core import (
    build_core_index,
    check_trace,
    core_base,
    delta,
    epsilon,
    independence_margin,
    is_core,
    log_epsilon,
    lucas_trace,
    lucas_u,
    power_decomposition,
    traces_below_cutoff,
    upper_cutoff,
)

traces = st.integers(min_value=3, max_value=10**6)


def test_epsilon_of_three_matches_high_precision_sqrt():
    with mpmath.workdps(50):
        ref = (3 + mpmath.sqrt(5)) / 2
    assert epsilon(3).eps == pytest.approx(float(ref), rel=1e-15)
    assert epsilon(3).eps == pytest.approx(2.618033988749895, rel=1e-15)


def test_epsilon_high_precision_mode():
    u = epsilon(3, precision=1e-50)
    with mpmath.workdps(70):
        assert abs(u.eps + 1 / u.eps - 3) < mpmath.mpf(10) ** -50
    assert u.disc == 5


def test_epsilon_of_seven_is_square_of_epsilon_three():
    u7, u3 = epsilon(7, 1e-40), epsilon(3, 1e-40)
    with mpmath.workdps(60):
        assert abs(u7.eps - u3.eps**2) < mpmath.mpf(10) ** -35


def test_epsilon_rejects_bad_input():
    with pytest.raises(ValueError):
        epsilon(2)
    with pytest.raises(ValueError):
        epsilon(3, precision=1e-3)
    with pytest.raises(ValueError):
        check_trace(3.5)


@given(traces)
def test_unit_identity_and_monotonicity(n):
    u = epsilon(n)
    assert u.eps + 1 / u.eps == pytest.approx(n, rel=4e-15)
    assert epsilon(n + 1).log_eps > u.log_eps > 0
    # strict in exact arithmetic; doubles only resolve it while Delta - 1 >> ulp(1)
    if n <= 5 * 10**4:
        assert delta(n + 1) < delta(n)
    else:
        assert delta(n + 1) <= delta(n)


def test_delta_values():
    with mpmath.workdps(40):
        e2 = (7 + 3 * mpmath.sqrt(5)) / 2
        ref = float(1 / (1 - 1 / e2))
    assert delta(3) == pytest.approx(ref, rel=1e-14)
    assert delta(3) == pytest.approx(1.170820393, abs=1e-9)
    e7 = epsilon(7).eps ** 2
    assert delta(7) == pytest.approx(e7 / (e7 - 1), rel=1e-14)
    for n in (10, 100, 10**4):
        assert 0 < delta(n) - 1 < 2 / n**2
    assert 1 < delta(3) <= 1.25


def test_lucas_examples():
    assert lucas_trace(3, 2) == 7
    assert lucas_trace(4, 2) == 14
    assert lucas_trace(3, 3) == 18
    assert lucas_trace(5, 0) == 2


def test_lucas_matches_sixty_digit_powers():
    with mpmath.workdps(60):
        for n0 in range(3, 31):
            e = (n0 + mpmath.sqrt(n0 * n0 - 4)) / 2
            for k in range(2, 9):
                assert lucas_trace(n0, k) == int(mpmath.nint(e**k + e**-k))


@given(st.integers(3, 200), st.integers(1, 30))
def test_lucas_u_discriminant_identity(n0, k):
    t = lucas_trace(n0, k)
    assert t * t - 4 == (n0 * n0 - 4) * lucas_u(n0, k) ** 2
    assert lucas_trace(n0, k + 1) > t


def test_power_decomposition_examples():
    assert (power_decomposition(7).n0, power_decomposition(7).k) == (3, 2)
    assert power_decomposition(12) is None
    assert (power_decomposition(18).n0, power_decomposition(18).k) == (3, 3)
    assert core_base(47) == (3, 4)


@settings(max_examples=200)
@given(st.integers(3, 60), st.integers(2, 8))
def test_decomposition_is_canonical(n0, k):
    n = lucas_trace(n0, k)
    rel = power_decomposition(n)
    assert rel is not None
    assert lucas_trace(rel.n0, rel.k) == n
    assert power_decomposition(rel.n0) is None
    base, K = core_base(n0)
    assert (rel.n0, rel.k) == (base, K * k)


def test_large_trace_decomposition():
    n = lucas_trace(5, 40)
    rel = power_decomposition(n)
    assert (rel.n0, rel.k) == (5, 40)
    assert is_core(n + 1)


def test_core_index_examples():
    assert [(r.n, r.n0, r.k) for r in build_core_index(18).non_core] == [(7, 3, 2), (14, 4, 2), (18, 3, 3)]
    assert build_core_index(6).non_core == ()
    index = build_core_index(10**4)
    assert set(index.non_core_traces) == non_core_by_ratio(10**4)


@given(st.integers(3, 3000))
def test_core_index_agrees_with_decomposition(n):
    index = build_core_index(3000)
    assert index.is_core(n) == is_core(n)
    assert (n in index) == (power_decomposition(n) is None)


def test_non_core_density():
    index = build_core_index(10**6)
    for x in (10**2, 10**3, 10**4, 10**5, 10**6):
        assert index.count_non_core(x) <= 3 * x**0.6


def test_upper_cutoff():
    assert upper_cutoff(4) == 2.5
    assert upper_cutoff(1e4) == pytest.approx(100.01)
    assert epsilon(10).eps ** 2 == pytest.approx(97.98979485566356)
    assert 10 < upper_cutoff(98)
    assert traces_below_cutoff(98) == 10
    assert traces_below_cutoff(97.9) == 9
    with pytest.raises(ValueError):
        upper_cutoff(0)


@given(st.floats(7, 1e9))
def test_cutoff_equivalence(x):
    n = traces_below_cutoff(x)
    if n >= 3:
        assert math.exp(2 * log_epsilon(n)) < x * (1 + 1e-12)
    assert math.exp(2 * math.acosh((n + 1) / 2)) >= x * (1 - 1e-12)


def test_independence_margin_over_core_traces():
    core = [n for n in range(3, 51) if is_core(n)]
    res = independence_margin(core)
    assert res.margin > mpmath.mpf(10) ** -30
    # the witness is a genuine small combination
    with mpmath.workdps(80):
        val = sum(k * mpmath.acosh(mpmath.mpf(n) / 2) for n, k in res.witness.items())
        assert abs(abs(val) - res.margin) < mpmath.mpf(10) ** -55


def test_independence_margin_detects_power_relation():
    res = independence_margin([3, 7])
    assert res.margin < mpmath.mpf(10) ** -50
    assert res.witness in ({3: 2, 7: -1}, {3: -2, 7: 1})
