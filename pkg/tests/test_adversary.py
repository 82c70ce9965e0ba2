#!/usr/bin/env python3

import numpy as np
import pytest

import adversary
import learning
import simulator
import stability
from adversary import AdversarySchedule, ScheduleKind
from errors import AdversaryViolation, ConfigError
from netgen import load_fixture


# ----------------------------------------------------------------------------------------------------------------------
def record(schedule,
           steps):
    return np.array([schedule.draw(t) for t in range(steps)])


# ----------------------------------------------------------------------------------------------------------------------
def test_window_caps():
    assert adversary.window_caps([0.3, 0.25], 10).tolist() == [3, 2]
    # 0.29 * 100 is 28.999999999999996 in floating point
    assert adversary.window_caps([0.29], 100).tolist() == [29]


# ----------------------------------------------------------------------------------------------------------------------
def test_burst_front_loads_every_window():
    schedule = AdversarySchedule(ScheduleKind.FRONT_LOADED_BURST, 10, [0.3])
    arrivals = record(schedule, 20)[:, 0]
    assert arrivals[:10].tolist() == [True] * 3 + [False] * 7
    assert arrivals[10:].tolist() == arrivals[:10].tolist()


# ----------------------------------------------------------------------------------------------------------------------
@pytest.mark.parametrize("kind", [ScheduleKind.FRONT_LOADED_BURST, ScheduleKind.ROUND_ROBIN])
def test_schedules_respect_the_window_rule(kind):
    lam = [0.3, 0.25, 0.55]
    schedule = AdversarySchedule(kind, 10, lam)
    arrivals = record(schedule, 200)
    assert adversary.full_window_check(arrivals, 10, lam)
    for start in range(0, 200, 10):
        assert arrivals[start:start + 10].sum(axis=0).tolist() == [3, 2, 5]


# ----------------------------------------------------------------------------------------------------------------------
def test_round_robin_spreads_arrivals():
    schedule = AdversarySchedule(ScheduleKind.ROUND_ROBIN, 10, [0.2])
    arrivals = record(schedule, 10)[:, 0]
    positions = np.flatnonzero(arrivals)
    assert len(positions) == 2
    assert positions[1] - positions[0] == 5


# ----------------------------------------------------------------------------------------------------------------------
def test_full_window_check_catches_sliding_windows():
    # Two aligned windows of three arrivals each, but four in the window straddling them
    arrivals = np.zeros((20, 1), dtype=int)
    arrivals[7:11] = 1
    assert not adversary.full_window_check(arrivals, 10, [0.3])
    assert adversary.full_window_check(np.zeros((0, 1)), 10, [0.3])


# ----------------------------------------------------------------------------------------------------------------------
def test_validator_raises_on_first_breach():
    validator = adversary.WindowValidator(10, [0.3], sources=[4])
    for _ in range(3):
        validator.observe([1])
    with pytest.raises(AdversaryViolation) as info:
        validator.observe([1])
    assert info.value.step == 3
    assert info.value.source == 4
    assert info.value.count == 4


# ----------------------------------------------------------------------------------------------------------------------
def test_validator_forgets_old_steps():
    validator = adversary.WindowValidator(4, [0.5])
    for arrived in [1, 1, 0, 0, 1, 1, 0, 0, 1]:
        validator.observe([arrived])
    assert validator.max_ratio().tolist() == [0.5]


# ----------------------------------------------------------------------------------------------------------------------
def test_trace_files(tmp_path):
    path = tmp_path / "trace.txt"
    path.write_text("# steps\n1 0\n\n0 1\n1 1\n")
    trace = adversary.read_trace(str(path), 2)
    assert trace.tolist() == [[True, False], [False, True], [True, True]]

    schedule = AdversarySchedule(ScheduleKind.CUSTOM, 5, [0.5, 0.5], trace)
    assert schedule.draw(2).tolist() == [True, True]
    assert schedule.draw(3).tolist() == [False, False]

    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n")
    with pytest.raises(ConfigError):
        adversary.read_trace(str(bad), 2)
    with pytest.raises(ConfigError):
        adversary.read_trace(str(path), 3)
    with pytest.raises(ConfigError):
        adversary.read_trace(str(tmp_path / "missing.txt"), 2)


# ----------------------------------------------------------------------------------------------------------------------
def test_schedule_arguments():
    with pytest.raises(ConfigError):
        AdversarySchedule(ScheduleKind.CUSTOM, 10, [0.3])
    with pytest.raises(ConfigError):
        AdversarySchedule(ScheduleKind.CUSTOM, 10, [0.3], np.ones((4, 2), dtype=bool))
    with pytest.raises(ConfigError):
        AdversarySchedule(ScheduleKind.FRONT_LOADED_BURST, 0, [0.3])


# ----------------------------------------------------------------------------------------------------------------------
def test_adversarial_run():
    net = load_fixture("two_layer_light")
    schedule = adversary.schedule_for(net, ScheduleKind.FRONT_LOADED_BURST, 20)
    policy = simulator.DecentralizedPolicy(simulator.LearnerConfig(learning.Algorithm.HEDGE))
    result = adversary.adversarial_run(net, schedule, policy, 2000, 1)
    assert result.state.arrival_totals.tolist() == [300, 300]
    validator = result.state.arrivals.validator
    assert np.all(validator.max_ratio() <= net.rates[list(net.sources)] + 1e-12)


# ----------------------------------------------------------------------------------------------------------------------
def test_adversarial_run_checks_source_count():
    net = load_fixture("two_layer_light")
    schedule = AdversarySchedule(ScheduleKind.ROUND_ROBIN, 20, [0.15])
    policy = simulator.DecentralizedPolicy(simulator.LearnerConfig(learning.Algorithm.HEDGE))
    with pytest.raises(ConfigError):
        adversary.adversarial_run(net, schedule, policy, 2000, 1)


# ----------------------------------------------------------------------------------------------------------------------
def test_schedules_that_break_the_rule_abort_the_run():
    net = load_fixture("two_layer_light")
    # Every step an arrival at both sources, far above 0.15 per step
    schedule = AdversarySchedule(ScheduleKind.CUSTOM, 20, [0.15, 0.15], np.ones((100, 2), dtype=bool))
    policy = simulator.DecentralizedPolicy(simulator.LearnerConfig(learning.Algorithm.HEDGE))
    with pytest.raises(AdversaryViolation):
        adversary.adversarial_run(net, schedule, policy, 200, 1)


# ----------------------------------------------------------------------------------------------------------------------
@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_burst_arrivals_stay_bounded_under_queue_differences(seed):
    net = load_fixture("two_layer_light")
    assert stability.check_assumption_dag(net, 0.1).holds
    schedule = adversary.schedule_for(net, ScheduleKind.FRONT_LOADED_BURST, 100)
    policy = simulator.DecentralizedPolicy(simulator.LearnerConfig(learning.Algorithm.HEDGE),
                                           simulator.PriorityRule.LONGEST_QUEUE,
                                           simulator.UtilityModel.QUEUE_DIFF)
    # A breach of the window rule would have raised AdversaryViolation
    result = adversary.adversarial_run(net, schedule, policy, 20000, seed)
    assert result.estimate.verdict == "bounded"
    validator = result.state.arrivals.validator
    assert validator.steps == 20000
    assert np.all(validator.max_ratio() <= net.rates[list(net.sources)] + 1e-12)
