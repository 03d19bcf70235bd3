import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import class_data_by_search, conjugacy_classes_by_search, congruence_multiplicity_from_classes, psl2_order_by_enumeration
from selberg_zeta.class_numbers import class_rep_matrices, multiplicity_table, pi_gamma
from selberg_zeta.congruence import (
    GroupDescriptor,
    TraceSetDescriptor,
    chebotarev_count,
    chebotarev_counts,
    check_sets,
    condition_check,
    congruence_multiplicity_table,
    conjugacy_class_of,
    frobenius_data,
    hat_sets,
    psl2_conjugacy_classes,
    psl2_element_order,
    psl2_elements,
    psl2_group_order,
    trace_set,
)

descriptors = st.builds(
    TraceSetDescriptor,
    st.integers(1, 12),
    st.frozensets(st.integers(0, 11), max_size=6),
    st.integers(3, 8),
    st.frozensets(st.integers(3, 40), max_size=4),
)


@given(descriptors, descriptors, st.integers(3, 200))
def test_set_algebra_matches_membership(A, B, n):
    assert (n in (A & B)) == (n in A and n in B)
    assert (n in (A | B)) == (n in A or n in B)
    assert (n in (A - B)) == (n in A and n not in B)


@given(descriptors)
def test_emptiness_by_one_period(A):
    found = any(n in A for n in range(3, 400))
    assert A.is_empty() == (not found)


def test_principal_congruence_trace_set():
    ts = trace_set(GroupDescriptor.principal(3))
    assert ts.members(3, 40) == [7, 11, 16, 20, 25, 29, 34, 38]
    assert ts.equivalent(TraceSetDescriptor.plus_minus_two(9))


def test_descriptor_parse_and_round_trip():
    for text in ("SL2Z", "Gamma(3)", "Gamma1(9)"):
        g = GroupDescriptor.parse(text)
        assert GroupDescriptor.from_dict(g.to_dict()) == g
        assert str(g) == text
    with pytest.raises(ValueError):
        GroupDescriptor.parse("Gamma(x)")
    with pytest.raises(ValueError):
        GroupDescriptor.principal(1)


def test_new_trace_condition_examples():
    g3, sl2 = GroupDescriptor.principal(3), GroupDescriptor.modular()
    res = condition_check([g3, sl2])
    assert res.holds and res.witnesses == (7, 3)
    res = condition_check([sl2, g3])
    assert not res.holds and res.first_failure == 2
    for p in (3, 5):
        res = condition_check([GroupDescriptor.principal(p), GroupDescriptor.gamma1_bar(p * p)])
        assert res.first_failure == 2
    hats, checks = hat_sets([sl2, g3]), check_sets([sl2, g3])
    assert hats[1].is_empty() and checks[1].equivalent(trace_set(g3))


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6, 7])
def test_psl2_order_matches_enumeration(N):
    assert psl2_group_order(N) == psl2_order_by_enumeration(N) == len(psl2_elements(N))


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_conjugacy_classes_partition_group(N):
    classes = psl2_conjugacy_classes(N)
    G = psl2_group_order(N)
    assert sum(len(c) for c in classes) == G
    for c in classes:
        orders = {psl2_element_order(M, N) for M in c}
        assert len(orders) == 1 and G % orders.pop() == 0


@pytest.mark.parametrize("N", [2, 3])
def test_frobenius_lifts(N):
    G = psl2_group_order(N)
    table, frob = congruence_multiplicity_table(N, 200, return_frobenius=True)
    assert frob
    for fd in frob:
        assert fd.lift_count * fd.f == G
        assert fd.lifted_trace % (N * N) in (2 % (N * N), (-2) % (N * N))
    for n in range(3, 201):
        if table.m[n]:
            assert n % (N * N) in (2, N * N - 2)
        assert table.m[n] >= table.p[n] >= 0


@pytest.mark.parametrize("N", [2, 3, 4])
def test_covering_table_against_class_lifts(N):
    G = psl2_group_order(N)
    hi = 200 if N < 4 else 120
    table = congruence_multiplicity_table(N, hi)
    for n in range(3, hi + 1):
        reps = [r.matrix[0] + r.matrix[1] for r in class_rep_matrices(n, primitive_only=False)]
        assert table.m[n] == congruence_multiplicity_from_classes(reps, N, G), n


@pytest.mark.parametrize("N", [2, 3])
def test_covering_table_against_matrix_search(N):
    G = psl2_group_order(N)
    table = congruence_multiplicity_table(N, 20)
    for n in range(3, 21):
        reps = [c[0] for c in conjugacy_classes_by_search(n)]
        assert table.m[n] == congruence_multiplicity_from_classes(reps, N, G)


def test_multiplicity_table_dispatch():
    t = multiplicity_table("Gamma(3)", 60)
    assert t == congruence_multiplicity_table(3, 60)
    assert (t.m[7], t.m[11]) == (6, 12)
    with pytest.raises(ValueError):
        multiplicity_table(GroupDescriptor.gamma1_bar(9), 50)


def test_chebotarev_counts_cover_all_primitive_classes(sl2z_table):
    for N in (2, 3):
        counts = chebotarev_counts(N, 1e5)
        assert sum(counts.values()) == pi_gamma(1e5, sl2z_table)
        identity = conjugacy_class_of(((1, 0), (0, 1)), N)
        assert chebotarev_count(N, identity, 1e5) == counts.get(identity, 0)
        assert chebotarev_count(N, ((1, 0), (0, 1)), 1e5) == counts.get(identity, 0)


def test_frobenius_of_trace_three():
    rep = class_rep_matrices(3)[0]
    fd = frobenius_data(rep, 3)
    assert (fd.f, fd.lift_count, fd.lifted_trace) == (2, 6, 7)
