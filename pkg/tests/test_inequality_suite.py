import numpy as np
import pytest

from src.cq_model import Grid, StateFamilySpec, gaussian_density, make_ccq, marginal_x, realize
from src.entropy_functionals import cmi
from src.fisher import METHOD_ENTROPY_DERIVATIVE, FisherEstimate
from src.inequality_suite import (
    FisherTriple,
    FlowTrace,
    InequalityReport,
    Verdict,
    check_asymptotic,
    check_concavity,
    check_epi,
    check_linear_epi,
    check_linear_stam,
    check_mi_chain,
    check_phi_flow,
    check_stam,
    decide_verdict,
    entropy_triple,
    epi_deficit,
    fisher_triple,
    linear_epi_deficit,
    make_report,
    mixing_term,
    optimal_lambda,
    phi_flow,
    random_structured_suite,
)
from src.validator import FisherInconclusive, InvalidParameters, NotConditionallyIndependent
from tests.helpers import gaussian_pair

HALF_LN2 = 0.5 * np.log(2)


def fisher_estimate(value, error):
    return FisherEstimate(value, METHOD_ENTROPY_DERIVATIVE, [0.02, 0.01], True, error)


@pytest.fixture(scope="module")
def stam_pair():
    return gaussian_pair(Grid.line(-8.0, 8.0, 129), var_x=1.0, var_y=2.0)


@pytest.fixture(scope="module")
def stam_fisher(stam_pair):
    return fisher_triple(stam_pair)


@pytest.mark.parametrize("deficit, error_bar, expected", [
    (0.5, 0.0, Verdict.PASS),
    (-5e-4, 0.0, Verdict.PASS),
    (-0.01, 0.1, Verdict.INCONCLUSIVE),
    (-0.01, 0.001, Verdict.FAIL),
])
def test_decide_verdict(deficit, error_bar, expected):
    assert decide_verdict(deficit, 1e-3, error_bar) == expected


@pytest.mark.parametrize("lam, expected", [(0.0, 0.0), (1.0, 0.0), (0.5, HALF_LN2)])
def test_mixing_term(lam, expected):
    assert mixing_term(lam) == pytest.approx(expected, abs=1e-15)


def test_report_round_trip():
    report = make_report("epi", 2.0, 1.5, 0.3, 1e-3, 0.01, details={"state": "a"}, seed=7)
    restored = InequalityReport.from_dict(report.to_dict())
    assert restored == report
    assert restored.passed


def test_flow_trace_rejects_ragged_columns():
    with pytest.raises(InvalidParameters):
        FlowTrace(t=[0.0, 1.0], sum_entropies=[1.0], x_entropies=[1.0, 1.0], y_entropies=[1.0, 1.0],
                  phi=[0.0, 0.0], phi_prime=[0.0, 0.0], lam=0.5, limit=HALF_LN2)


def test_epi_equality_for_equal_gaussians(equal_gaussians):
    report = check_epi(equal_gaussians)
    assert report.verdict == Verdict.PASS
    assert report.deficit == pytest.approx(0.0, abs=1e-6)
    assert report.details["lambda_star"] == pytest.approx(0.5, abs=1e-9)
    assert report.lhs == pytest.approx(report.rhs, rel=1e-6)


def test_optimal_lambda_matches_linear_form(stam_pair):
    triple = entropy_triple(stam_pair, with_error=False)
    assert triple.coarse is None
    lam = optimal_lambda(triple)
    assert linear_epi_deficit(triple, lam) == pytest.approx(epi_deficit(triple), abs=1e-12)
    for other in (0.1, 0.4, 0.9):
        assert linear_epi_deficit(triple, other) >= linear_epi_deficit(triple, lam)


@pytest.mark.parametrize("lam, expected", [(0.0, HALF_LN2), (0.5, 0.0), (1.0, HALF_LN2)])
def test_linear_epi_for_equal_gaussians(equal_gaussians, lam, expected):
    report = check_linear_epi(equal_gaussians, lam)
    assert report.name == f"linear_epi[lambda={lam:g}]"
    assert report.deficit == pytest.approx(expected, abs=1e-6)
    assert report.passed


def test_epi_rejects_correlated_state(line):
    joint = gaussian_density([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]], Grid.product(line, line))
    s = make_ccq(joint, lambda x, y: np.ones((1, 1)))
    with pytest.raises(NotConditionallyIndependent):
        check_epi(s)


def test_stam_equality_for_gaussians(stam_pair, stam_fisher):
    report = check_stam(stam_pair, fisher=stam_fisher)
    assert report.lhs == pytest.approx(6.0, rel=2e-3)
    assert report.rhs == pytest.approx(6.0, rel=2e-3)
    assert report.verdict == Verdict.PASS
    assert report.details["lambda_opt"] == pytest.approx(1 / 3, rel=2e-3)


@pytest.mark.parametrize("lam", [0.0, 1 / 3, 0.5, 1.0])
def test_linear_stam_for_gaussians(stam_pair, stam_fisher, lam):
    report = check_linear_stam(stam_pair, lam, fisher=stam_fisher)
    assert report.passed
    assert report.lhs == pytest.approx(1 / 6, rel=2e-3)


def test_linear_stam_rejects_bad_lambda(stam_pair, stam_fisher):
    with pytest.raises(InvalidParameters):
        check_linear_stam(stam_pair, 1.5, fisher=stam_fisher)


def test_mi_chain_for_gaussians(equal_gaussians):
    reports = check_mi_chain(equal_gaussians, 0.5, 0.1)
    assert len(reports) == 5
    assert all(r.passed for r in reports)
    lines = reports[0].details["lines"]
    assert lines["A"] == pytest.approx(0.5 * np.log(1.05), abs=1e-6)
    assert lines["B"] == pytest.approx(lines["A"], abs=1e-6)
    assert lines["E"] == pytest.approx(np.log(1.025), abs=1e-6)
    assert reports[-1].name == "mi_chain_vanishing[lambda=0.5,t=0.1]"
    zero = reports[-1].details["lines_at_zero"]
    assert {"A", "B", "C", "D", "E", "A_bundle", "I_U_Z_bundle", "I_V_Z_bundle"} <= set(zero)
    assert max(abs(v) for v in zero.values()) < 1e-8


def test_mi_chain_needs_lattice_lambda(equal_gaussians):
    with pytest.raises(InvalidParameters):
        check_mi_chain(equal_gaussians, 0.3, 0.1)


def test_entropy_is_concave_along_heat_flow(equal_gaussians):
    report = check_concavity(marginal_x(equal_gaussians), [0.0, 0.5, 1.0, 1.5, 2.0])
    assert report.passed
    assert len(report.details["second_differences"]) == 3
    assert max(report.details["second_differences"]) < 0.0


@pytest.mark.parametrize("t_grid", [[0.0, 1.0, 2.0], [0.0, 0.5, 1.5, 2.0, 2.5]])
def test_concavity_needs_uniform_grid(equal_gaussians, t_grid):
    with pytest.raises(InvalidParameters):
        check_concavity(marginal_x(equal_gaussians), t_grid)


def test_asymptotic_residual_decays(equal_gaussians):
    report = check_asymptotic(marginal_x(equal_gaussians), [10.0, 100.0, 1000.0])
    residuals = report.details["residuals"]
    assert residuals[1] == pytest.approx(0.5 * np.log(1.01), abs=1e-5)
    assert abs(residuals[-1]) < abs(residuals[1]) < abs(residuals[0])
    assert report.passed


def test_asymptotic_needs_two_decades(equal_gaussians):
    with pytest.raises(InvalidParameters):
        check_asymptotic(marginal_x(equal_gaussians), [10.0, 50.0])


def test_phi_is_constant_for_equal_gaussians(equal_gaussians):
    trace = phi_flow(equal_gaussians, 0.5, [0.0, 1.0, 2.0, 4.0])
    assert trace.limit == pytest.approx(HALF_LN2)
    assert trace.phi == pytest.approx([HALF_LN2] * 4, abs=1e-6)


def test_check_phi_flow_reports(equal_gaussians):
    trace = check_phi_flow(equal_gaussians, 0.5, [0.0, 0.5, 1.0, 1.5, 2.0])
    names = [r.name for r in trace.reports]
    assert names == [
        "phi_monotone[lambda=0.5]",
        "phi_endpoints[lambda=0.5]",
        "phi_limit[lambda=0.5]",
        "phi_linear_epi[lambda=0.5]",
        "phi_fisher_crosscheck[lambda=0.5,t=1]",
    ]
    assert all(r.passed for r in trace.reports)
    assert trace.to_dict()["reports"][0]["verdict"] == "pass"


def test_phi_for_unequal_gaussians_at_matched_lambda():
    s = gaussian_pair(Grid.line(-14.0, 14.0, 225), var_x=1.0, var_y=4.0)
    trace = phi_flow(s, 0.2, [0.0, 2.0, 4.0])
    assert np.ptp(trace.phi) < 1e-6


def test_random_suite_is_reproducible(line):
    first = random_structured_suite(5, 3, line)
    second = random_structured_suite(5, 3, line)
    assert len(first) == 3
    for a, b in zip(first, second):
        assert np.array_equal(a.weights, b.weights)
        assert a.structure == b.structure


def test_random_suite_draws_are_conditionally_independent(line):
    draw = random_structured_suite(11, 1, line)[0]
    assert all(b.family_x.name in ("constant", "qubit_bloch") for b in draw.blocks)
    assert abs(cmi(realize(draw))) < 1e-8


def test_qubit_memory_state_passes_epi(line):
    family = StateFamilySpec("qubit_bloch", {"alpha": 1.0, "beta": 1.0, "mu": 0.1})
    s = gaussian_pair(line, family_x=family, family_y=family)
    assert check_epi(s).passed


def test_epi_reports_cmi_error_bar(equal_gaussians):
    details = check_epi(equal_gaussians).details
    assert abs(details["cmi"]) < 1e-10
    assert 0.0 <= details["cmi_error_bar"] < 1e-8


def test_stam_linear_form_at_optimal_lambda(stam_pair, stam_fisher):
    report = check_stam(stam_pair, fisher=stam_fisher)
    js = report.details["J_sum_given_M"]
    linear = report.details["linear_rhs_at_lambda_opt"]
    assert linear == pytest.approx(1.0 / report.rhs, rel=1e-12)
    assert report.details["linear_deficit_at_lambda_opt"] == pytest.approx(report.deficit * js * linear, abs=1e-9)


def test_stam_within_error_bars_is_inconclusive(stam_pair):
    fisher = FisherTriple(fisher_estimate(1.0, 0.2), fisher_estimate(1.0, 0.2), fisher_estimate(0.6, 0.1))
    with pytest.raises(FisherInconclusive) as raised:
        check_stam(stam_pair, fisher=fisher)
    report = raised.value.report
    assert report.verdict == Verdict.INCONCLUSIVE
    assert report.deficit == pytest.approx(1.0 / 0.6 - 2.0)
    assert raised.value.to_dict()["error_type"] == "FISHER_INCONCLUSIVE"


def test_stam_violation_beyond_error_bars_fails(stam_pair):
    fisher = FisherTriple(fisher_estimate(1.0, 1e-3), fisher_estimate(1.0, 1e-3), fisher_estimate(0.6, 1e-3))
    assert check_stam(stam_pair, fisher=fisher).verdict == Verdict.FAIL


def test_linear_stam_within_error_bars_is_inconclusive(stam_pair):
    fisher = FisherTriple(fisher_estimate(1.0, 0.2), fisher_estimate(1.0, 0.2), fisher_estimate(0.6, 0.1))
    with pytest.raises(FisherInconclusive) as raised:
        check_linear_stam(stam_pair, 0.5, fisher=fisher)
    assert raised.value.report.name == "linear_stam[lambda=0.5]"
    assert raised.value.report.deficit == pytest.approx(-0.1)


def test_mi_chain_with_qubit_memory(qubit_pair):
    reports = check_mi_chain(qubit_pair, 0.5, 0.05)
    assert all(r.passed for r in reports)
    lines = reports[0].details["lines"]
    assert lines["B"] == pytest.approx(lines["C"], abs=1e-6)
    assert lines["A"] > 0.0
    assert max(abs(v) for v in reports[-1].details["lines_at_zero"].values()) < 1e-8


def test_concavity_with_qubit_memory(qubit_pair):
    assert check_concavity(marginal_x(qubit_pair), [0.0, 0.5, 1.0, 1.5, 2.0]).passed


def test_asymptotic_with_qubit_memory(qubit_pair):
    report = check_asymptotic(marginal_x(qubit_pair), [10.0, 100.0, 1000.0])
    magnitudes = np.abs(report.details["residuals"])
    assert magnitudes[2] < magnitudes[1] < magnitudes[0]
    assert report.passed


def test_phi_flow_with_qubit_memory(qubit_pair):
    trace = check_phi_flow(qubit_pair, 0.5, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert [r.name for r in trace.reports][-1] == "phi_fisher_crosscheck[lambda=0.5,t=0.5]"
    assert all(r.passed for r in trace.reports)
    assert trace.phi[0] >= trace.phi[-1]
