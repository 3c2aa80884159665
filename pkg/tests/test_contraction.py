"""Certifier pass/fail boundaries, metric constants, and envelope fits."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levy_contract.contraction import (
    ContractionCertificate,
    SamplingPlan,
    StructuralFailure,
    check_basic_contraction,
    check_riccati_tv,
    estimate_metric_constants,
    fit_transition_envelope,
)
from levy_contract.noise import NoiseBounds
from levy_contract.systems import LevySystemModel, LtvSystemModel

SCALAR_PLAN = SamplingPlan((0.0, 1.0), ((-1.0, 1.0),), 11)
PLAN_2D = SamplingPlan((0.0, 1.0), ((-1.0, 1.0), (-1.0, 1.0)), 9)


def _scalar_model(a=1.0):
    return LevySystemModel(dim=1, drift=lambda t, x: -a * np.asarray(x),
                           noise=NoiseBounds(0.0, 0.0, 1.0))


def _diag_model():
    return LevySystemModel(
        dim=2,
        drift=lambda t, x: np.asarray(x) * np.array([-1.0, -2.0]),
        noise=NoiseBounds(0.0, 0.0, 1.0))


def _diag_ltv(entries=(-1.0, -2.0)):
    return LtvSystemModel(dim=2, a_matrix=lambda t: np.diag(entries),
                          noise=NoiseBounds(0.0, 0.0, 1.0))


def test_basic_scalar_pass_at_equality():
    report = check_basic_contraction(_scalar_model(1.0),
                                     ContractionCertificate.constant(np.eye(1), 1.0),
                                     SCALAR_PLAN, tol=1e-8)
    assert report.passed
    assert abs(report.worst_slack) < 1e-8


def test_basic_scalar_fail_with_slack():
    report = check_basic_contraction(_scalar_model(1.0),
                                     ContractionCertificate.constant(np.eye(1), 1.1),
                                     SCALAR_PLAN, tol=1e-8)
    assert not report.passed
    assert abs(report.worst_slack - 0.2) < 1e-6


def test_basic_2d_boundary():
    ok = check_basic_contraction(_diag_model(),
                                 ContractionCertificate.constant(np.eye(2), 1.0),
                                 PLAN_2D, tol=1e-8)
    assert ok.passed and abs(ok.worst_slack) < 1e-7
    bad = check_basic_contraction(_diag_model(),
                                  ContractionCertificate.constant(np.eye(2), 1.5),
                                  PLAN_2D, tol=1e-8)
    # slowest mode is the first coordinate: slack = -2 + 2*1.5 = 1
    assert not bad.passed and abs(bad.worst_slack - 1.0) < 1e-6


def test_basic_total_vs_partial_metric_derivative():
    model = _scalar_model(1.0)
    metric = lambda t, x: np.array([[1.0 + x[0] ** 2]])  # noqa: E731
    cert = ContractionCertificate(metric, 0.1, 1.0, 2.0, 2.0, 2.0)
    plan = SamplingPlan((0.0, 0.0), ((0.5, 0.5),), 1)
    total = check_basic_contraction(model, cert, plan, total_derivative=True)
    partial = check_basic_contraction(model, cert, plan, total_derivative=False)
    # along the flow, d/dt (1 + x^2) = -2 x^2; the partial variant misses it
    assert abs(total.worst_slack - (partial.worst_slack - 2 * 0.25)) < 1e-5


def test_structural_failure_on_indefinite_metric():
    model = _scalar_model()
    cert = ContractionCertificate(lambda t, x: np.array([[1.0]]), 1.0, 1.0, 1.0)
    bad = ContractionCertificate(lambda t, x: -np.eye(1), 1.0, 1.0, 1.0)
    with pytest.raises(StructuralFailure):
        check_basic_contraction(model, bad, SCALAR_PLAN)
    check_basic_contraction(model, cert, SCALAR_PLAN)  # sanity: no raise


def test_riccati_constant_identity_metric():
    model = _diag_ltv((-1.0, -1.0))
    report = check_riccati_tv(model, lambda t: np.eye(2), 1.0,
                              np.linspace(0, 1, 11), tol=1e-8)
    assert report.passed
    assert abs(report.alpha1 - 1.0) < 1e-12 and abs(report.alpha2 - 1.0) < 1e-12


def test_riccati_time_varying_boundary():
    model = LtvSystemModel(
        dim=2,
        a_matrix=lambda t: np.diag([-1.0 - 0.5 * np.sin(t), -2.0]),
        noise=NoiseBounds(0.0, 0.0, 1.0))
    samples = np.linspace(0.0, 2 * np.pi, 41)  # includes 3*pi/2 exactly
    ok = check_riccati_tv(model, lambda t: np.eye(2), 0.5, samples, tol=1e-7)
    assert ok.passed and abs(ok.worst_slack) < 1e-7
    bad = check_riccati_tv(model, lambda t: np.eye(2), 0.6, samples, tol=1e-7)
    assert not bad.passed and abs(bad.worst_slack - 0.2) < 1e-6


def test_riccati_alpha_extrema():
    model = _diag_ltv((-3.0, -3.0))
    p = lambda t: np.diag([1.0, 2.0 + np.sin(t)])  # noqa: E731
    report = check_riccati_tv(model, p, 0.5, np.linspace(0, 2 * np.pi, 41))
    assert abs(report.alpha1 - 1.0) < 1e-9
    assert abs(report.alpha2 - 3.0) < 1e-9


def test_riccati_structural_failure():
    model = _diag_ltv()
    with pytest.raises(StructuralFailure):
        check_riccati_tv(model, lambda t: np.diag([1.0, -1.0]), 0.5,
                         np.linspace(0, 1, 5))


def test_riccati_reduces_to_eigenvalue_condition():
    # constant A and P = I: pass iff lambda_max((A + A^T)/2) <= -alpha + tol/2
    a = np.array([[-1.0, 0.3], [0.0, -2.0]])
    model = LtvSystemModel(dim=2, a_matrix=lambda t: a,
                           noise=NoiseBounds(0.0, 0.0, 1.0))
    lam_max = np.linalg.eigvalsh(0.5 * (a + a.T))[-1]
    for alpha in (0.5, -lam_max, -lam_max + 0.05):
        report = check_riccati_tv(model, lambda t: np.eye(2), alpha,
                                  np.linspace(0, 1, 5), tol=1e-9)
        assert report.passed == (lam_max <= -alpha + 1e-9 / 2)


def test_metric_constants_identity():
    plan = SamplingPlan((0.0, 1.0), ((-1.0, 1.0),), 9)
    assert estimate_metric_constants(lambda t, x: np.eye(2), plan) == (1.0, 1.0, 0.0, 0.0)


def test_metric_constants_state_dependent():
    plan = SamplingPlan((0.0, 0.0), ((-1.0, 1.0), (0.0, 0.0)), 21)
    metric = lambda t, x: np.diag([1.0 + x[0] ** 2, 1.0])  # noqa: E731
    m_lo, m_hi, mp, mpp = estimate_metric_constants(metric, plan)
    assert abs(m_lo - 1.0) < 1e-12
    assert abs(m_hi - 2.0) < 1e-12
    assert abs(mp - 2.0) < 1e-6
    assert abs(mpp - 2.0) < 1e-4


def test_metric_constants_time_only():
    plan = SamplingPlan((0.0, 2 * np.pi), ((-1.0, 1.0), (-1.0, 1.0)), 9)
    metric = lambda t, x: np.diag([1.0, 2.0 + np.sin(t)])  # noqa: E731
    _, _, mp, mpp = estimate_metric_constants(metric, plan)
    assert mp == 0.0 and mpp == 0.0


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.1, 10.0))
def test_metric_scaling_invariance(c):
    model = _scalar_model(1.0)
    plan = SamplingPlan((0.0, 0.0), ((-1.0, 1.0),), 5)
    for alpha in (0.9, 1.1):
        base = check_basic_contraction(
            model, ContractionCertificate.constant(np.eye(1), alpha), plan)
        scaled = check_basic_contraction(
            model, ContractionCertificate.constant(c * np.eye(1), alpha), plan)
        assert base.passed == scaled.passed
    lo, hi, mp, mpp = estimate_metric_constants(
        lambda t, x: c * np.diag([1.0 + x[0] ** 2]), plan)
    assert abs(lo - c) < 1e-9 and abs(hi - 2 * c) < 1e-9
    assert abs(mp - 2 * c) < 1e-4 * c and abs(mpp - 2 * c) < 1e-2 * c


def _pairs(horizon=2.0, n=7):
    taus = np.linspace(0.0, horizon, n)
    return [(a, b) for a in taus for b in taus if a <= b]


def test_envelope_given_diagonal_exact():
    model = _diag_ltv()
    env = fit_transition_envelope(model, _pairs(), "given", kappa=1.0, beta=1.0)
    assert env.margin >= -1e-12


def test_envelope_optimize_constant():
    model = _diag_ltv((-2.0, -2.0))
    env = fit_transition_envelope(model, _pairs(), "optimize")
    assert abs(env.beta - 2.0) < 0.1
    assert env.kappa < 1.05


def test_envelope_jordan_needs_kappa_above_one():
    model = LtvSystemModel(dim=2,
                           a_matrix=lambda t: np.array([[-1.0, 1.0], [0.0, -1.0]]),
                           noise=NoiseBounds(0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        fit_transition_envelope(model, _pairs(), "given", kappa=1.0, beta=1.0)
    env = fit_transition_envelope(model, _pairs(), "optimize")
    assert env.kappa > 1.0
    assert env.margin >= 0.0


def test_envelope_given_dominating_optimized_passes():
    model = _diag_ltv()
    opt = fit_transition_envelope(model, _pairs(), "optimize")
    dominated = fit_transition_envelope(model, _pairs(), "given",
                                        kappa=opt.kappa * 1.5, beta=opt.beta * 0.5)
    assert dominated.margin >= 0.0
