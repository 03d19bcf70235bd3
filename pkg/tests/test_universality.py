import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selberg_zeta.class_numbers import multiplicity_table
from selberg_zeta.quad_core import log_epsilon
from selberg_zeta.universality import (
    CompactRegion,
    ConditionWarning,
    PhaseTargetProblem,
    ShiftSearchResult,
    TargetFunction,
    default_step,
    find_shift,
    joint_scan,
    phase_distance,
    refinement_diagnostic,
    shift_set_density,
    sup_error,
    universality_scan,
    weyl_discrepancy,
    zeta_on_region,
)

REGION = CompactRegion(0.87, 0.95, 2.0, 4.0, 5, 5)


def test_problem_validation():
    with pytest.raises(ValueError):
        PhaseTargetProblem((3, 7), (0.1, 0.2), 0.1)
    with pytest.raises(ValueError):
        PhaseTargetProblem((3,), (0.1,), 0.5)
    with pytest.raises(ValueError):
        PhaseTargetProblem((3,), (1.0,), 0.1)
    with pytest.raises(ValueError):
        PhaseTargetProblem((), (), 0.1)


def test_step_validation():
    p = PhaseTargetProblem((3,), (0.3,), 0.1)
    with pytest.raises(ValueError):
        shift_set_density(p, 1e6, step=math.pi / (8 * log_epsilon(3)) * 1.1)
    with pytest.raises(ValueError):
        shift_set_density(p, 10.0)
    with pytest.raises(ValueError):
        shift_set_density(p, 1e6, step=0.0)


def test_density_near_full_measure():
    p = PhaseTargetProblem((3, 4, 5), (0.1, 0.5, 0.9), 0.499)
    assert shift_set_density(p, 1e5) == pytest.approx(0.998**3, abs=0.003)


@pytest.mark.parametrize("traces,theta,delta,expected,tol", [((3,), (0.3,), 0.05, 0.10, 0.01), ((3, 4), (0.3, 0.7), 0.25, 0.25, 0.02)])
def test_density_law_two_steps(traces, theta, delta, expected, tol):
    p = PhaseTargetProblem(traces, theta, delta)
    step = default_step(p.max_log_eps)
    a, b = shift_set_density(p, 1e6, step), shift_set_density(p, 1e6, step / 2)
    assert abs(a - expected) < tol and abs(b - expected) < tol
    assert abs(a - b) / b < 0.02


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.2), st.floats(0.0, 0.99))
def test_monotone_membership(delta, theta):
    small = PhaseTargetProblem((3, 5), (theta, 0.4), delta)
    big = PhaseTargetProblem((3, 5), (theta, 0.4), delta * 2)
    taus = np.arange(20000) * default_step(small.max_log_eps)
    a, b = small.members(taus), big.members(taus)
    assert np.all(b[a])


def test_find_shift_planted():
    tau0 = 123.456
    p = PhaseTargetProblem.planted((3, 4, 5), tau0, 0.02)
    tau = find_shift(p, 1e4)
    assert tau is not None and tau <= tau0 + default_step(p.max_log_eps)
    assert p.members(np.array([tau]))[0]
    assert find_shift(PhaseTargetProblem((3, 4), (0.2, 0.9), 0.49), 1e4) < 5.0


def test_find_shift_refines_to_interval_entry():
    p = PhaseTargetProblem((3,), (0.3,), 0.05)
    step = default_step(p.max_log_eps)
    tau = find_shift(p, 1e4, step)
    assert p.members(np.array([tau]))[0]
    assert not p.members(np.array([tau - step / 100]))[0]


def test_find_shift_hit_rate_matches_density():
    rng = np.random.default_rng(7)
    delta, T = 0.02, 2e4
    hits = 0
    draws = 40
    for _ in range(draws):
        p = PhaseTargetProblem((3, 4, 5), tuple(rng.random(3)), delta)
        tau = find_shift(p, T)
        hits += tau is not None
    # P(no hit) for a constant-density set over [0, T] is tiny
    assert hits == draws
    p = PhaseTargetProblem((3, 4, 5), tuple(rng.random(3)), delta)
    assert shift_set_density(p, 2e5) == pytest.approx((2 * delta) ** 3, rel=0.3)


def test_weyl_discrepancy():
    long_run = weyl_discrepancy((3,), 1e7)
    assert long_run < 0.01
    assert weyl_discrepancy((3,), 1e7, default_step(log_epsilon(3)) / 2) < 0.01
    # T = 10 covers ~4.2 phase cycles of log eps(3)/pi; frozen measurement
    short = weyl_discrepancy((3,), 10.0, 0.009)
    assert short == pytest.approx(0.0187, abs=5e-4)
    assert short > 100 * long_run
    assert weyl_discrepancy((3,), 2.0, 0.001) > 0.1
    with pytest.raises(ValueError):
        weyl_discrepancy((3, 7), 1e4)
    with pytest.raises(ValueError):
        weyl_discrepancy((3, 4, 5, 6), 1e4)


def test_region_and_target_validation():
    with pytest.raises(ValueError):
        CompactRegion(0.8, 0.9, 2, 4)
    with pytest.raises(ValueError):
        CompactRegion(0.86, 0.9, 2, 4, 4, 5)
    with pytest.raises(ValueError):
        TargetFunction.Constant(0)
    with pytest.raises(ValueError):
        TargetFunction.GridSamples(np.zeros((5, 5)))


def test_grid_log_is_continuous():
    R = REGION
    vals = np.exp(1j * 3 * R.points())
    logs = TargetFunction.GridSamples(vals).log_on(R)
    assert np.allclose(np.exp(logs), vals)
    assert np.max(np.abs(np.diff(logs.imag, axis=1))) < np.pi
    assert np.max(np.abs(np.diff(logs.imag[:, 0]))) < np.pi


def test_sup_error_identity_case(sl2z_table):
    z = zeta_on_region("SL2Z", REGION, 50.0, table=sl2z_table)
    f = TargetFunction.GridSamples(z)
    assert sup_error("SL2Z", REGION, f, 50.0, table=sl2z_table) < 1e-12


def test_sup_error_constant_target(sl2z_table):
    z = zeta_on_region("SL2Z", REGION, 10.0, table=sl2z_table)
    c = 25.0
    err = sup_error("SL2Z", REGION, TargetFunction.Constant(c), 10.0, table=sl2z_table)
    assert err == pytest.approx(np.max(np.abs(z - c)), rel=1e-12)


def test_sup_error_grid_refinement_stable(sl2z_table):
    target = TargetFunction.ExpPolynomial([0.1, 0.2j])
    coarse = sup_error("SL2Z", REGION, target, 30.0, table=sl2z_table)
    fine = sup_error("SL2Z", REGION.refined(2), target, 30.0, table=sl2z_table)
    assert abs(fine - coarse) / fine < 0.1


def _planted(group, region, tau0, table):
    return TargetFunction.GridSamples(zeta_on_region(group, region, tau0, table=table))


def test_scan_records_and_superset(sl2z_table):
    target = TargetFunction.Constant(1.0)
    a = universality_scan("SL2Z", REGION, target, 50.0, table=sl2z_table)
    b = universality_scan("SL2Z", REGION, target, 100.0, table=sl2z_table)
    errs = [e for _, e in a.record_history]
    assert all(y < x for x, y in zip(errs, errs[1:]))
    assert a.record_history[-1] == (a.best_tau, a.best_error)
    assert b.best_error <= a.best_error
    for tau, err in a.record_history:
        assert sup_error("SL2Z", REGION, target, tau, table=sl2z_table) == err


def test_scan_is_deterministic_across_threads(sl2z_table):
    target = TargetFunction.Constant(0.7 + 0.2j)
    a = universality_scan("SL2Z", REGION, target, 60.0, table=sl2z_table, threads=1)
    b = universality_scan("SL2Z", REGION, target, 60.0, table=sl2z_table, threads=3)
    assert a.record_history == b.record_history and a.samples_evaluated == b.samples_evaluated


def test_scan_recovers_planted_shift(sl2z_table):
    tau0 = 71.8
    target = _planted("SL2Z", REGION, tau0, sl2z_table)
    res = universality_scan("SL2Z", REGION, target, 120.0, table=sl2z_table)
    assert res.best_error < 1e-3
    assert abs(res.best_tau - tau0) < 1e-3


def test_record_history_must_decrease():
    with pytest.raises(ValueError):
        ShiftSearchResult(1.0, 0.5, [(0.0, 0.4), (1.0, 0.5)], 2)


def test_joint_scan_single_group_matches(sl2z_table):
    target = TargetFunction.Constant(1.0)
    a = universality_scan("SL2Z", REGION, target, 40.0, table=sl2z_table)
    b = joint_scan([("SL2Z", REGION, target)], 40.0, tables=[sl2z_table])
    assert a.record_history == b.record_history


def test_joint_scan_planted_and_warning(sl2z_table):
    g3 = multiplicity_table("Gamma(3)", sl2z_table.n_max)
    tau0 = 33.3
    items = [("Gamma(3)", REGION, _planted("Gamma(3)", REGION, tau0, g3)), ("SL2Z", REGION, _planted("SL2Z", REGION, tau0, sl2z_table))]
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConditionWarning)
        res = joint_scan(items, 50.0, tables=[g3, sl2z_table])
    assert res.best_error < 1e-3 and abs(res.best_tau - tau0) < 1e-3
    with pytest.warns(ConditionWarning):
        joint_scan(items[::-1], 5.0, tables=[sl2z_table, g3])


def test_joint_error_dominates_each_group(sl2z_table):
    g3 = multiplicity_table("Gamma(3)", sl2z_table.n_max)
    t1, t2 = TargetFunction.Constant(1.0), TargetFunction.Constant(2.0)
    joint = joint_scan([("Gamma(3)", REGION, t1), ("SL2Z", REGION, t2)], 30.0, tables=[g3, sl2z_table])
    single = universality_scan("SL2Z", REGION, t2, 30.0, table=sl2z_table)
    single3 = universality_scan("Gamma(3)", REGION, t1, 30.0, table=g3)
    assert joint.best_error >= single.best_error and joint.best_error >= single3.best_error


def test_refinement_diagnostic(sl2z_table):
    p = PhaseTargetProblem((3, 4, 5, 6), (0.1, 0.2, 0.3, 0.4), 0.25)
    rep = refinement_diagnostic("SL2Z", p, (0.9, 3.0), 200, 1e4, table=sl2z_table)
    assert rep["members_checked"] > 0
    assert 0.0 <= rep["fraction_below"] <= 1.0
    assert rep["reference"] == pytest.approx(0.5 * 0.5**4)
