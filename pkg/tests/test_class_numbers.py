import math
from fractions import Fraction
from functools import reduce as fold

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import class_data_by_search, narrow_classes_by_search
from selberg_zeta.class_numbers import (
    CoverageError,
    QuadForm,
    class_cycles,
    class_rep_matrices,
    is_reduced,
    li,
    multiplicity_table,
    narrow_class_number,
    pi_gamma,
    primitive_class_count,
    reduce,
    representative_matrix,
    rho,
    total_class_count,
    tower_multiplicity,
)
from selberg_zeta.quad_core import lucas_trace, power_decomposition


def _discriminants(limit):
    return [D for D in range(5, limit) if D % 4 in (0, 1) and math.isqrt(D) ** 2 != D]


def test_reduce_examples():
    f = QuadForm(1, 1, -1)
    assert is_reduced(f) and reduce(f) == f
    g = reduce(QuadForm(-1, 1, 1))
    assert is_reduced(g)
    assert g in class_cycles(5)[0]


def test_reduce_rejects_square_discriminant():
    with pytest.raises(ValueError):
        reduce(QuadForm(1, 2, 1))
    with pytest.raises(ValueError):
        class_cycles(7)


@settings(max_examples=200)
@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))
def test_reduce_gives_equivalent_reduced_form(a, b, c):
    D = b * b - 4 * a * c
    if D <= 0 or math.isqrt(D) ** 2 == D:
        return
    f = QuadForm(a, b, c)
    r = reduce(f)
    assert is_reduced(r) and r.D == D
    assert reduce(r) == r
    if f.is_primitive:
        cyc = [c for c in class_cycles(D) if r in c]
        assert len(cyc) == 1


def test_cycles_partition_reduced_forms():
    for D in _discriminants(400):
        cycles = class_cycles(D)
        seen = [f for c in cycles for f in c.forms]
        assert len(seen) == len(set(seen))
        for c in cycles:
            assert all(is_reduced(f) and f.is_primitive for f in c.forms)
            for f, g in zip(c.forms, c.forms[1:] + c.forms[:1]):
                assert rho(f) == g
        # every reduced primitive form is in some cycle
        r = math.isqrt(D)
        for a in range(-r, r + 1):
            for b in range(1, r + 1):
                if a and (b * b - D) % (4 * a) == 0:
                    f = QuadForm(a, b, (b * b - D) // (4 * a))
                    if is_reduced(f) and f.is_primitive:
                        assert f in seen


def test_narrow_class_numbers_against_form_search():
    assert narrow_class_number(5) == 1
    assert narrow_class_number(12) == narrow_classes_by_search(12, 40) == 2
    assert narrow_class_number(45) == narrow_classes_by_search(45, 120) == 2
    for D in _discriminants(160):
        assert narrow_class_number(D) == narrow_classes_by_search(D, 2 * D + 10), D


def test_class_data_against_matrix_search():
    table = multiplicity_table("SL2Z", 20)
    for n in range(3, 21):
        c, p, m = class_data_by_search(n)
        assert total_class_count(n) == c
        assert table.p[n] == p == primitive_class_count(n)
        assert table.m[n] == m


def test_multiplicity_examples(sl2z_table):
    t = sl2z_table
    assert (t.p[3], t.m[3]) == (1, 1)
    assert t.m[7] == t.p[7] + Fraction(1, 2)
    assert t.m[12] == t.p[12]
    assert total_class_count(3) == 1
    assert total_class_count(4) == narrow_class_number(12)


def test_table_invariants(sl2z_table):
    t = sl2z_table
    for n in range(3, t.n_max + 1):
        m, p = t.m[n], t.p[n]
        assert m >= p >= 0
        assert m <= n**1.5
        rel = power_decomposition(n)
        ks = [rel.k // j for j in range(1, rel.k) if rel.k % j == 0] if rel else []
        lcm = fold(lambda a, b: a * b // math.gcd(a, b), ks, 1)
        assert lcm % (m - p).denominator == 0


def test_recursion_matches_content_criterion(sl2z_table):
    for n in range(3, sl2z_table.n_max + 1):
        assert sl2z_table.p[n] == primitive_class_count(n)


def test_tower_route_matches_dense_table(sl2z_table):
    for n in range(3, sl2z_table.n_max + 1):
        assert tower_multiplicity(n) == (sl2z_table.p[n], sl2z_table.m[n])


def test_tower_route_far_beyond_table():
    n = lucas_trace(3, 12)
    p, m = tower_multiplicity(n)
    assert p >= 0 and m >= p
    assert (m - p).denominator in (1, 2, 3, 4, 6, 12)


def test_representative_matrix_examples():
    M = representative_matrix((1, 1, -1), 3)
    assert M.matrix == ((1, 1), (1, 2))
    assert representative_matrix((1, 2, -2), 4).matrix == ((1, 2), (1, 3))
    with pytest.raises(ValueError):
        representative_matrix((1, 1, -1), 4)


@given(st.integers(3, 150))
def test_class_representatives_round_trip(n):
    for rep in class_rep_matrices(n, primitive_only=False):
        (p, q), (r, s) = rep.matrix
        assert p + s == n and p * s - q * r == 1
        form = rep.associated_form()
        assert form == rep.form
        g = form.content
        prim = QuadForm(form.a // g, form.b // g, form.c // g)
        assert any(reduce(prim) in c for c in class_cycles(prim.D))
    assert len(class_rep_matrices(n, primitive_only=False)) == total_class_count(n)
    assert len(class_rep_matrices(n)) == primitive_class_count(n)


def test_pi_gamma_examples(sl2z_table):
    assert pi_gamma(6.8, sl2z_table) == 0
    assert pi_gamma(100, sl2z_table) == sum(sl2z_table.p[n] for n in range(3, 11))
    assert abs(pi_gamma(1e6, sl2z_table) / li(1e6) - 1) < 0.2
    with pytest.raises(CoverageError):
        pi_gamma(1e7, sl2z_table)


def test_pi_gamma_tracks_li(sl2z_table):
    prev = 0
    for x in [1e4 * 10 ** (k / 4) for k in range(9)]:
        val = pi_gamma(x, sl2z_table)
        assert val >= prev
        assert 0.8 <= val / li(x) <= 1.2
        prev = val


def test_li_against_mpmath():
    assert li(2) == 0.0
    assert li(10) == pytest.approx(5.12043572, abs=1e-8)
    assert li(1e6) == pytest.approx(78626.5, abs=0.01)
    for x in (3.0, 10.0, 1234.5, 1e6, 1e9):
        ref = float(mpmath.li(x) - mpmath.li(2))
        assert li(x) == pytest.approx(ref, rel=1e-10)
    with pytest.raises(ValueError):
        li(1.5)
