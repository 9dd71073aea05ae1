# Tests for simkernel.py

import io
import logging
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src.analytic import aaoi_mm11_nonpreemptive, aaoi_tandem_two, retrial_steady_state, zw_aaoi
    from src.simkernel import (PACKET_LOG_FIELDS, AgeAccumulator, DeliveryTrace, EventCalendar, EventKind,
                               NodeModel, PacketRecord, default_warmup, departure_process_ks,
                               estimate_theorem1_terms, run_hetero_tandem, run_retrial, run_single_node,
                               run_tandem, run_zero_wait, sample_age_path, trapezoid_area,
                               write_packet_log_csv)
    from src.stochastic import PointMass, RngStream
    from src.utils import ConfigError, InsufficientDataError, StabilityError
except ImportError:
    from analytic import aaoi_mm11_nonpreemptive, aaoi_tandem_two, retrial_steady_state, zw_aaoi
    from simkernel import (PACKET_LOG_FIELDS, AgeAccumulator, DeliveryTrace, EventCalendar, EventKind, NodeModel,
                           PacketRecord, default_warmup, departure_process_ks, estimate_theorem1_terms,
                           run_hetero_tandem, run_retrial, run_single_node, run_tandem, run_zero_wait,
                           sample_age_path, trapezoid_area, write_packet_log_csv)
    from stochastic import PointMass, RngStream
    from utils import ConfigError, InsufficientDataError, StabilityError


# --- Fixtures ---

@pytest.fixture(autouse=True)
def setup_logging_for_tests(caplog):
    caplog.set_level(logging.INFO)


def _records(departures, generations, arrivals):
    return [PacketRecord(i, g, a, a, d, a - g) for i, (d, g, a) in enumerate(zip(departures, generations, arrivals))]


# --- Test building blocks ---

def test_node_model_validation():
    with pytest.raises(ConfigError):
        NodeModel.fcfs(0.0)
    with pytest.raises(ConfigError):
        NodeModel.zero_wait(1.0, 1.0)
    with pytest.raises(ConfigError):
        NodeModel.retrial(1.0, None)


def test_age_accumulator_trapezoids_and_far_updates():
    acc = AgeAccumulator()
    assert acc.record(1.0, 0.0) == 0.0
    assert acc.record(3.0, 2.0) == pytest.approx(4.0)
    assert acc.aaoi == pytest.approx(2.0)
    acc.record(4.0, 1.0)
    assert acc.far_update_count == 1
    assert acc.age_at(5.0) == pytest.approx(4.0)


def test_age_accumulator_extend_matches_record():
    deps = np.array([1.0, 3.0, 4.5, 7.0])
    gens = np.array([0.0, 2.0, 3.0, 6.0])
    one = AgeAccumulator()
    for d, g in zip(deps, gens):
        one.record(d, g)
    many = AgeAccumulator()
    many.extend(deps[:2], gens[:2])
    many.extend(deps[2:], gens[2:])
    assert many.accumulated_area == pytest.approx(one.accumulated_area)
    assert many.elapsed == pytest.approx(one.elapsed)


def test_event_calendar_breaks_ties_by_kind():
    calendar = EventCalendar()
    calendar.schedule(1.0, EventKind.ARRIVAL)
    calendar.schedule(1.0, EventKind.DEPARTURE, 7)
    calendar.schedule(0.5, EventKind.RETRIAL)
    assert calendar.pop()[1] == EventKind.RETRIAL
    assert calendar.pop() == (1.0, EventKind.DEPARTURE, 7)
    assert calendar.pop()[1] == EventKind.ARRIVAL
    assert len(calendar) == 0


def test_default_warmup():
    assert default_warmup(100_000) == 10_000
    assert default_warmup(1_000_000) == 50_000
    assert default_warmup(1_000) == 50


# --- Test statistics ---

def test_estimate_theorem1_terms_on_small_log():
    records = _records([1.0, 2.0, 4.0], [0.0, 1.0, 2.0], [0.5, 1.5, 2.5])
    terms = estimate_theorem1_terms(records)
    assert terms.samples == 2
    assert terms.effective_rate == pytest.approx(2.0 / 3.0)
    assert terms.cross_moment == pytest.approx(0.75)
    assert terms.mean_initial_age == pytest.approx(0.5)
    assert terms.correlation == 0.0


def test_estimate_theorem1_terms_needs_two_deliveries():
    with pytest.raises(InsufficientDataError):
        estimate_theorem1_terms(_records([1.0], [0.0], [0.5]))


def test_estimate_theorem1_terms_rejects_bad_offset():
    records = _records([1.0, 2.0, 4.0], [0.0, 1.0, 2.0], [0.5, 1.5, 2.5])
    with pytest.raises(ConfigError, match="pairing_offset"):
        estimate_theorem1_terms(records, pairing_offset=2)


def test_from_records_requires_departure_order():
    records = _records([2.0, 1.0], [0.0, 0.5], [0.5, 0.7])
    with pytest.raises(ConfigError, match="departure order"):
        DeliveryTrace.from_records(records)


# --- Test single-node runs ---

def test_mm1_aaoi_matches_closed_form(caplog):
    stats = run_single_node(NodeModel.fcfs(2.0), 1.0, warmup=10_000, departures=1_010_000, rng=RngStream(1))
    assert stats.delivered == 1_000_000
    assert stats.aaoi_estimate == pytest.approx(1.75, rel=0.01)
    assert stats.effective_rate == pytest.approx(1.0, rel=0.01)
    assert stats.se_reliable
    assert stats.se("aaoi_estimate") > 0
    assert stats.far_update_count == 0
    assert "single node fcfs" in caplog.text


def test_single_node_unstable_rejected():
    with pytest.raises(StabilityError):
        run_single_node(NodeModel.fcfs(1.0), 1.0, departures=1000)


def test_single_node_unstable_allowed_with_warning(caplog):
    stats = run_single_node(NodeModel.fcfs(1.0), 1.5, departures=2000, warmup=0, allow_unstable=True)
    assert stats.delivered == 1999
    assert "exploratory run of an unstable queue" in caplog.text


def test_point_mass_feed_shifts_aaoi_exactly():
    base = run_single_node(NodeModel.fcfs(2.0), 1.0, departures=20_000, rng=RngStream(3))
    aged = run_single_node(NodeModel.fcfs(2.0), 1.0, initial_age_feed=PointMass(0.5), departures=20_000,
                           rng=RngStream(3))
    assert aged.aaoi_estimate - base.aaoi_estimate == pytest.approx(0.5, abs=1e-9)
    assert aged.mean_initial_age == pytest.approx(0.5)


def test_short_initial_age_trace_raises():
    with pytest.raises(InsufficientDataError, match="exhausted"):
        run_single_node(NodeModel.fcfs(2.0), 1.0, initial_age_feed=np.zeros(10), departures=100)


def test_tail_warmup_leaves_unreliable_standard_errors(caplog):
    stats = run_single_node(NodeModel.fcfs(2.0), 1.0, departures=1000, warmup=999)
    assert stats.delivered == 1
    assert not stats.se_reliable
    assert np.isnan(stats.se("aaoi_estimate"))
    assert "standard errors are unreliable" in caplog.text


@pytest.mark.parametrize("departures, warmup", [(1, None), (100, 100), (100, -1)])
def test_bad_counts_rejected(departures, warmup):
    with pytest.raises(ConfigError):
        run_single_node(NodeModel.fcfs(2.0), 1.0, departures=departures, warmup=warmup)


def test_same_seed_same_result():
    a = run_single_node(NodeModel.fcfs(2.0), 1.0, departures=20_000, rng=RngStream(11, 2))
    b = run_single_node(NodeModel.fcfs(2.0), 1.0, departures=20_000, rng=RngStream(11, 2))
    assert a == b


def test_blocking_node_matches_mm11():
    stats = run_single_node(NodeModel.blocking(4.0), 1.0, departures=100_000, rng=RngStream(5))
    assert stats.aaoi_estimate == pytest.approx(aaoi_mm11_nonpreemptive(1.0, 4.0), rel=0.02)
    assert stats.blocked > 0


def test_blocking_node_takes_one_trace_age_per_delivery():
    stats = run_single_node(NodeModel.blocking(4.0), 1.0, initial_age_feed=np.full(100, 0.5), warmup=0,
                            departures=100, rng=RngStream(3), keep_log=True)
    assert len(stats.log) == 100
    assert np.allclose(stats.log.initial_age, 0.5)


def test_area_matches_trapezoid_integration():
    stats = run_single_node(NodeModel.fcfs(2.0), 1.0, departures=2000, warmup=0, rng=RngStream(8),
                            keep_log=True)
    trace = stats.log
    start, end = trace.departure[0], trace.departure[-1]
    numeric = trapezoid_area(trace, start, end, points=200_000) / (end - start)
    assert stats.aaoi_estimate == pytest.approx(numeric, rel=0.01)


def test_sample_age_path_before_first_delivery_is_nan():
    trace = DeliveryTrace.from_records(_records([1.0, 2.0], [0.0, 1.0], [0.5, 1.5]))
    path = sample_age_path(trace, np.array([0.5, 1.0, 1.5, 2.5]))
    assert np.isnan(path[0])
    np.testing.assert_allclose(path[1:], [1.0, 1.5, 1.5])


def test_mm1_departures_are_poisson():
    stats = run_single_node(NodeModel.fcfs(2.0), 1.0, departures=20_000, rng=RngStream(9), keep_log=True)
    assert departure_process_ks(stats.log, 1.0, warmup=2000, alpha=0.001).passed


# --- Test tandems ---

def test_single_queue_tandem_equals_single_node():
    chain = run_tandem([2.0], 1.0, departures=20_000, rng=RngStream(4))
    node = run_single_node(NodeModel.fcfs(2.0), 1.0, departures=20_000, rng=RngStream(4))
    assert chain.aaoi_estimate == pytest.approx(node.aaoi_estimate, rel=1e-12)
    assert "per_node" not in chain.extras


def test_tandem_two_matches_closed_form():
    stats = run_tandem([2.0, 2.0], 1.0, departures=200_000, rng=RngStream(21))
    assert stats.aaoi_estimate == pytest.approx(aaoi_tandem_two(1.0, 2.0, 2.0), rel=0.02)
    assert stats.cross_moment == pytest.approx(0.8333333, rel=0.05)
    assert stats.correlation < 0
    assert stats.far_update_count == 0
    per_node = stats.extras["per_node"]
    assert [p["node"] for p in per_node] == [1]


def test_tandem_rejects_unstable_stage():
    with pytest.raises(StabilityError, match="mu_2"):
        run_tandem([2.0, 0.5], 1.0, departures=1000)


def test_tandem_keeps_node_epochs():
    stats = run_tandem([3.0, 2.0, 4.0], 1.0, departures=5000, rng=RngStream(2), keep_log=True)
    log = stats.log
    assert log.node_arrivals.shape == (3, 5000)
    np.testing.assert_array_equal(log.node_arrivals[1], log.node_departures[0])
    assert np.all(np.diff(log.departure) >= 0)


def test_hetero_tandem_close_to_formula():
    stats = run_hetero_tandem(1.0, 1.0, 2.0, departures=400_000, rng=RngStream(13))
    # The closed form sits about 0.6 % below the simulated value.
    assert stats.aaoi_estimate == pytest.approx(3.0283, rel=0.015)
    assert stats.blocked > 0
    assert 0.0 <= stats.extras["feed_ks_pvalue"] <= 1.0


# --- Test zero-wait ---

@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_zero_wait_matches_closed_form(alpha):
    stats = run_zero_wait(alpha, 1.0, departures=200_000, rng=RngStream(17))
    assert stats.aaoi_estimate == pytest.approx(zw_aaoi(alpha, 1.0), rel=0.03)
    assert stats.extras["success_rate"] == pytest.approx(1 - alpha, abs=0.01)


def test_zero_wait_through_single_node_dispatch():
    direct = run_zero_wait(0.3, 1.0, departures=10_000, rng=RngStream(6))
    dispatched = run_single_node(NodeModel.zero_wait(1.0, 0.3), 99.0, departures=10_000, rng=RngStream(6))
    assert dispatched.aaoi_estimate == pytest.approx(direct.aaoi_estimate)


# --- Test retrial ---

def test_retrial_occupancy_and_zero_age(caplog):
    stats = run_retrial(1.0, 1.0, 4.0, departures=100_000, rng=RngStream(31))
    ss = retrial_steady_state(1.0, 1.0, 4.0)
    occupancy = stats.extras["occupancy"]
    for n in range(4):
        for busy in (0, 1):
            assert occupancy[(busy, n)] == pytest.approx(ss.p(busy, n), abs=0.02)
    assert stats.extras["busy_probability"] == pytest.approx(0.25, abs=0.01)
    assert stats.extras["mean_orbit_time"] == pytest.approx(0.75, rel=0.1)
    assert stats.zero_age_estimate == pytest.approx(1.1125, rel=0.03)
    assert "retrial (1.0, 1.0, 4.0)" in caplog.text


def test_retrial_unstable_rejected():
    with pytest.raises(StabilityError):
        run_retrial(2.0, 1.0, 4.0, departures=1000)


# --- Test packet log ---

def test_write_packet_log_csv():
    trace = DeliveryTrace.from_records(_records([1.0, 2.0, 4.0], [0.0, 1.0, 2.0], [0.5, 1.5, 2.5]))
    out = io.StringIO()
    rows = write_packet_log_csv(trace, out, header="# aoi-lab test")
    lines = out.getvalue().splitlines()
    assert rows == 3
    assert lines[0] == "# aoi-lab test"
    assert lines[1] == ",".join(PACKET_LOG_FIELDS)
    assert lines[2] == "0,0,0.5,0.5,1,0.5"
