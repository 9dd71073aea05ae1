# Tests for analytic.py

import math
import os
import sys

import pytest
from scipy import integrate

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src.analytic import (MODELS, BoundInterval, CorrectionInputs, UnknownModelError, aaoi_mm1_fcfs,
                              aaoi_mm11_nonpreemptive, aaoi_tandem_two, analytic_report, correction_bounds,
                              correction_term, correlation_lower_limit, hem1_aaoi, hem1_arrival_queue_pmf,
                              hem1_fixed_point_residual, hem1_moments, hem1_sigma, hem1_sigma_bisect,
                              retrial_aaoi, retrial_balance_residuals, retrial_orbit_metrics, retrial_pgf,
                              retrial_steady_state, retrial_zero_age_exact, slowest_last, tandem_chain_bounds,
                              tandem_covariance, tandem_cross_moment, tandem_cross_moment_decomposition,
                              tandem_hetero_aaoi, tandem_homogeneous_bounds, theorem1_combine, zw_aaoi,
                              zw_correction_inputs, zw_initial_age_mixture, zw_initial_age_positive_part)
    from src.stochastic import PointMass
    from src.utils import ConfigError, DegenerateParameterError, InconsistentInputsError, StabilityError
except ImportError:
    from analytic import (MODELS, BoundInterval, CorrectionInputs, UnknownModelError, aaoi_mm1_fcfs,
                          aaoi_mm11_nonpreemptive, aaoi_tandem_two, analytic_report, correction_bounds,
                          correction_term, correlation_lower_limit, hem1_aaoi, hem1_arrival_queue_pmf,
                          hem1_fixed_point_residual, hem1_moments, hem1_sigma, hem1_sigma_bisect, retrial_aaoi,
                          retrial_balance_residuals, retrial_orbit_metrics, retrial_pgf, retrial_steady_state,
                          retrial_zero_age_exact, slowest_last, tandem_chain_bounds, tandem_covariance,
                          tandem_cross_moment, tandem_cross_moment_decomposition, tandem_hetero_aaoi,
                          tandem_homogeneous_bounds, theorem1_combine, zw_aaoi, zw_correction_inputs,
                          zw_initial_age_mixture, zw_initial_age_positive_part)
    from stochastic import PointMass
    from utils import ConfigError, DegenerateParameterError, InconsistentInputsError, StabilityError


# --- Test M/M/1 and the decomposition ---

def test_aaoi_mm1_fcfs_known_value():
    assert aaoi_mm1_fcfs(1.0, 2.0) == pytest.approx(1.75)


@pytest.mark.parametrize("lam, mu", [(2.0, 1.0), (1.0, 1.0)])
def test_aaoi_mm1_fcfs_unstable(lam, mu):
    with pytest.raises(StabilityError):
        aaoi_mm1_fcfs(lam, mu)


def test_aaoi_mm1_fcfs_rejects_nonpositive_rate():
    with pytest.raises(ConfigError):
        aaoi_mm1_fcfs(0.0, 1.0)


def test_theorem1_combine():
    assert theorem1_combine(1.75, 1.0, 0.8333333333) == pytest.approx(2.5833333333)
    with pytest.raises(InconsistentInputsError):
        theorem1_combine(-1.0, 1.0, 1.0)


def test_correction_term_independent_ages_is_mean():
    inputs = CorrectionInputs(mean_initial_age=2.0, sd_initial_age=3.0, cv_interdeparture=1.0,
                              correlation=0.0, effective_rate=1.0)
    assert correction_term(inputs) == pytest.approx(2.0)


def test_correction_term_rejects_correlation_below_limit():
    inputs = CorrectionInputs(mean_initial_age=1.0, sd_initial_age=2.0, cv_interdeparture=1.0,
                              correlation=-0.9, effective_rate=1.0)
    with pytest.raises(InconsistentInputsError, match="negative correction"):
        correction_term(inputs)


def test_correction_inputs_validation():
    with pytest.raises(InconsistentInputsError):
        CorrectionInputs(mean_initial_age=1.0, sd_initial_age=1.0, cv_interdeparture=1.0,
                         correlation=1.5, effective_rate=1.0)
    with pytest.raises(InconsistentInputsError):
        CorrectionInputs(mean_initial_age=1.0, sd_initial_age=1.0, cv_interdeparture=1.0,
                         correlation=0.0, effective_rate=0.0)


def test_correction_bounds_and_clamping():
    interval = correction_bounds(1.0, 2.0, 1.0)
    assert interval.lower == pytest.approx(-1.0)
    assert interval.upper == pytest.approx(3.0)
    assert interval.width == pytest.approx(4.0)
    assert interval.clamped_lower == 0.0
    clamped = interval.clamped()
    assert clamped.lower == 0.0
    assert clamped.width == pytest.approx(3.0)


def test_bound_interval_contains_and_shifts():
    interval = BoundInterval(lower=1.0, upper=2.0, width=1.0, clamped_lower=1.0)
    assert interval.contains(1.5)
    assert not interval.contains(2.1)
    shifted = interval.shifted(0.5)
    assert (shifted.lower, shifted.upper) == (1.5, 2.5)


def test_correlation_lower_limit():
    assert correlation_lower_limit(1.0, 1.0) == pytest.approx(-1.0)
    assert correlation_lower_limit(0.5, 1.0) == pytest.approx(-2.0)
    assert correlation_lower_limit(0.0, 1.0) == -math.inf


def test_fixed_delay_correction_equals_delay():
    report = analytic_report("fixed-delay", {"lambda": 1.0, "mu": 2.0, "delay": 0.5})
    assert report.delta == pytest.approx(2.25)
    assert report.interval.lower == pytest.approx(0.5)
    assert report.interval.upper == pytest.approx(0.5)


# --- Test zero-wait erasure model ---

def test_zw_aaoi_known_values():
    assert zw_aaoi(0.5, 1.0) == pytest.approx(4.0)
    assert zw_aaoi(0.0, 1.0) == pytest.approx(2.0)


def test_zw_aaoi_alpha_out_of_range():
    with pytest.raises(ConfigError):
        zw_aaoi(1.0, 1.0)


def test_zw_initial_age_mixture_moments():
    assert zw_initial_age_mixture(0.0, 1.0) == PointMass(0.0)
    mixture = zw_initial_age_mixture(0.5, 1.0)
    assert mixture.weights == pytest.approx((0.25, 0.5, 0.25))
    assert mixture.mean() == pytest.approx(2.0)



@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_zw_positive_part_is_the_mixture_without_its_atom(alpha):
    mixture = zw_initial_age_mixture(alpha, 1.0)
    positive = zw_initial_age_positive_part(alpha, 1.0)
    atom = (1 - alpha) ** 2
    assert positive.cdf(0.0) == pytest.approx(0.0)
    for x in (0.1, 1.0, 5.0):
        assert mixture.cdf(x) == pytest.approx(atom + (1 - atom) * positive.cdf(x))
    assert mixture.mean() == pytest.approx((1 - atom) * positive.mean())


def test_zw_positive_part_needs_erasures():
    with pytest.raises(ConfigError):
        zw_initial_age_positive_part(0.0, 1.0)


def test_zw_correction_reproduces_closed_form():
    inputs = zw_correction_inputs(0.5, 1.0)
    assert 2.0 + correction_term(inputs) == pytest.approx(zw_aaoi(0.5, 1.0))


def test_zw_lower_bound_vanishes_at_two_thirds():
    inputs = zw_correction_inputs(2.0 / 3.0, 1.0)
    interval = correction_bounds(inputs.mean_initial_age, inputs.sd_initial_age, 1.0)
    assert interval.lower == pytest.approx(0.0, abs=1e-9)


# --- Test tandem queues ---

def test_tandem_cross_moment_known_values():
    assert tandem_cross_moment(1.0, 2.0, 2.0) == pytest.approx(0.8333333333)
    assert tandem_cross_moment(1.0, 3.0, 2.0) == pytest.approx(0.4305555556)


@pytest.mark.parametrize("lam, gamma, mu", [(1.0, 2.0, 2.0), (1.0, 3.0, 2.0), (0.7, 1.1, 4.0)])
def test_tandem_decomposition_sums_to_cross_moment(lam, gamma, mu):
    parts = tandem_cross_moment_decomposition(lam, gamma, mu)
    assert parts["baseline"] + parts["busy_first"] + parts["idle_first"] == pytest.approx(parts["total"])
    assert parts["total"] == pytest.approx(tandem_cross_moment(lam, gamma, mu))


def test_aaoi_tandem_two_matches_decomposition():
    assert aaoi_tandem_two(1.0, 2.0, 2.0) == pytest.approx(2.5833333333)
    assert aaoi_tandem_two(1.0, 2.0, 2.0) == pytest.approx(
        theorem1_combine(aaoi_mm1_fcfs(1.0, 2.0), 1.0, tandem_cross_moment(1.0, 2.0, 2.0)))


def test_tandem_covariance_is_negative_when_stable():
    assert tandem_covariance(1.0, 2.0, 2.0) == pytest.approx(-1.0 / 6.0)
    assert tandem_covariance(0.5, 1.0, 3.0) < 0


def test_tandem_unstable_first_queue():
    with pytest.raises(StabilityError):
        aaoi_tandem_two(2.0, 1.5, 3.0)


def test_tandem_chain_bounds_contain_two_queue_exact():
    bounds = tandem_chain_bounds(1.0, [2.0], 2.0)
    assert bounds.delta0 == pytest.approx(1.75)
    assert bounds.interval.lower == pytest.approx(1.75)
    assert bounds.interval.upper == pytest.approx(3.75)
    assert bounds.practical_upper == pytest.approx(2.75)
    assert bounds.interval.contains(aaoi_tandem_two(1.0, 2.0, 2.0))


def test_tandem_homogeneous_bounds():
    interval = tandem_homogeneous_bounds(1.0, 2.0, 3)
    assert interval.lower == pytest.approx(1.75 + 3.0 - math.sqrt(3.0))
    assert interval.upper == pytest.approx(1.75 + 3.0 + math.sqrt(3.0))
    with pytest.raises(ConfigError):
        tandem_homogeneous_bounds(1.0, 2.0, -1)


def test_slowest_last_moves_minimum_to_end():
    assert slowest_last([0.5, 2.0, 1.0]) == [2.0, 1.0, 0.5]
    assert slowest_last([3.0, 1.0]) == [3.0, 1.0]


# --- Test HE/M/1 ---

@pytest.mark.parametrize("lam, gamma, mu, expected", [
    (1.0, 1.0, 2.0, 2.02831),
    (1.0, 2.0, 3.0, 1.51457),
])
def test_hem1_aaoi_known_values(lam, gamma, mu, expected):
    assert hem1_aaoi(lam, gamma, mu) == pytest.approx(expected, rel=1e-4)


def test_hetero_tandem_adds_first_stage_mean():
    assert tandem_hetero_aaoi(1.0, 1.0, 2.0) == pytest.approx(3.02831, rel=1e-4)


def test_hem1_sigma_closed_form_matches_bisection():
    for lam, gamma, mu in [(1.0, 2.0, 3.0), (0.3, 5.0, 1.0), (2.0, 2.0, 1.5)]:
        sigma = hem1_sigma(lam, gamma, mu)
        assert 0 < sigma < 1
        assert sigma == pytest.approx(hem1_sigma_bisect(lam, gamma, mu), abs=1e-10)
        assert hem1_fixed_point_residual(lam, gamma, mu) < 1e-12


def test_hem1_unstable():
    with pytest.raises(StabilityError):
        hem1_aaoi(4.0, 4.0, 1.0)


def test_hem1_arrival_queue_pmf_sums_to_one():
    total = sum(hem1_arrival_queue_pmf(1.0, 2.0, 3.0, n) for n in range(200))
    assert total == pytest.approx(1.0)
    assert hem1_arrival_queue_pmf(1.0, 2.0, 3.0, -1) == 0.0


def test_hem1_moments_close_the_zero_age_identity():
    m = hem1_moments(1.0, 2.0, 3.0)
    assert m.cross_yt == pytest.approx(0.4628, abs=1e-4)
    assert (m.second_moment_y / 2 + m.cross_yt) / m.mean_y == pytest.approx(hem1_aaoi(1.0, 2.0, 3.0))


def test_hem1_moment_densities():
    m = hem1_moments(1.0, 2.0, 3.0)
    mass, _ = integrate.quad(m.pdf_y, 0, math.inf)
    mean, _ = integrate.quad(lambda t: t * m.pdf_y(t), 0, math.inf)
    residual_mass, _ = integrate.quad(m.residual_pdf, 0, math.inf)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(m.mean_y, abs=1e-8)
    assert residual_mass == pytest.approx(1.0, abs=1e-8)


def test_hem1_moments_need_distinct_rates():
    with pytest.raises(DegenerateParameterError):
        hem1_moments(1.0, 1.0, 2.0)


# --- Test retrial queue ---

def test_retrial_known_values():
    assert retrial_aaoi(1.0, 1.0, 4.0) == pytest.approx(1.208333, rel=1e-6)
    ss = retrial_steady_state(1.0, 1.0, 4.0)
    assert ss.p00 == pytest.approx(0.5)
    assert ss.busy_probability() == pytest.approx(0.25)
    assert ss.total_probability() == pytest.approx(1.0, abs=1e-10)


def test_retrial_orbit_metrics():
    orbit = retrial_orbit_metrics(1.0, 1.0, 4.0)
    assert orbit.w_orbit == pytest.approx(0.75)
    assert orbit.l_orbit == pytest.approx(0.75)
    assert orbit.mean_initial_age == pytest.approx(0.375)
    # Little's law on the orbit.
    assert orbit.l_orbit == pytest.approx(1.0 * orbit.w_orbit)


def test_retrial_balance_equations_hold():
    assert retrial_balance_residuals(1.0, 1.0, 4.0) < 1e-12
    assert retrial_balance_residuals(0.8, 2.5, 1.7) < 1e-12


def test_retrial_pgf():
    p0, p1 = retrial_pgf(1.0, 1.0, 4.0, 1.0)
    assert p0 + p1 == pytest.approx(1.0)
    assert p1 == pytest.approx(0.25)
    with pytest.raises(ConfigError):
        retrial_pgf(1.0, 1.0, 4.0, 3.0)


def test_retrial_zero_age_exact():
    zero = retrial_zero_age_exact(1.0, 1.0, 4.0)
    assert zero.mean_y == pytest.approx(1.0)
    assert zero.delta0 == pytest.approx(1.1125)


def test_retrial_unstable():
    with pytest.raises(StabilityError):
        retrial_steady_state(2.0, 1.0, 4.0)


def test_mm11_nonpreemptive():
    assert aaoi_mm11_nonpreemptive(2.0, 4.0) == pytest.approx(0.5 + 0.25 + 2.0 / 24.0)


# --- Test report dispatch ---

def test_every_model_builds_a_report():
    params = {
        "mm1": {"lambda": 1.0, "mu": 2.0},
        "fixed-delay": {"lambda": 1.0, "mu": 2.0, "delay": 1.0},
        "zero-wait": {"alpha": 0.5, "mu": 1.0},
        "tandem-two": {"lambda": 1.0, "gamma": 2.0, "mu": 2.0},
        "tandem-chain": {"lambda": 1.0, "rates": [2.0, 3.0, 1.5]},
        "hetero-tandem": {"lambda": 1.0, "gamma": 1.0, "mu": 2.0},
        "hem1": {"lambda": 1.0, "gamma": 2.0, "mu": 3.0},
        "mm11": {"lambda": 2.0, "mu": 4.0},
        "retrial": {"lambda": 1.0, "theta": 1.0, "mu": 4.0},
    }
    assert set(params) == set(MODELS)
    for model, p in params.items():
        report = analytic_report(model, p)
        assert report.model == model
        rows = report.as_rows()
        assert rows[0]["quantity"] == "delta0"
        assert all(r["value"] is not None for r in rows)


def test_report_values():
    assert analytic_report("tandem-two", {"lambda": 1.0, "gamma": 2.0, "mu": 2.0}).delta == pytest.approx(2.5833333)
    retrial = analytic_report("retrial", {"lambda": 1.0, "theta": 1.0, "mu": 4.0})
    assert retrial.delta == pytest.approx(1.208333, rel=1e-6)
    assert retrial.extras["delta0_exact"] == pytest.approx(1.1125)


def test_tandem_chain_report_without_exact_value():
    report = analytic_report("tandem-chain", {"lambda": 1.0, "rates": [2.0, 3.0, 1.5]})
    assert report.delta is None
    assert report.extras["age_lb"] <= report.extras["age_ub"]
    quantities = [r["quantity"] for r in report.as_rows()]
    assert "delta" not in quantities
    assert "slowest_last_ub" in quantities


def test_unknown_model():
    with pytest.raises(UnknownModelError, match="Unknown model 'mg1'"):
        analytic_report("mg1", {})


def test_missing_parameters():
    with pytest.raises(ConfigError, match="needs parameters: gamma"):
        analytic_report("tandem-two", {"lambda": 1.0, "mu": 2.0})
