#!/usr/bin/env python3

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import learning
from errors import ConfigError, WindowOutOfRange
from learning import Algorithm, Feedback, Learner, Schedule
from netgen import load_fixture


# ----------------------------------------------------------------------------------------------------------------------
def test_action_set_puts_idle_first():
    net = load_fixture("example_4_1")
    assert learning.action_set(net, 0) == (learning.IDLE, 2, 4)
    assert learning.action_set(net, 4) == (learning.IDLE, 7)


# ----------------------------------------------------------------------------------------------------------------------
def test_hedge_update():
    learner = Learner(Algorithm.HEDGE, (learning.IDLE, 2, 4), rate=0.1)
    learning.update(learner, Feedback.full_information([0.0, 1.0, 0.0]))
    assert learner.weights == pytest.approx([1.0, math.exp(0.1), 1.0])
    distribution = learner.distribution()
    assert distribution.sum() == pytest.approx(1.0)
    assert distribution[1] > distribution[0]


# ----------------------------------------------------------------------------------------------------------------------
def test_hedge_scales_large_utilities():
    learner = Learner(Algorithm.HEDGE, (learning.IDLE, 2), rate=0.5)
    learning.update(learner, Feedback.full_information([0.0, 4.0]))
    assert learner.scale == 4.0
    assert learner.weights == pytest.approx([1.0, math.exp(0.5)])


# ----------------------------------------------------------------------------------------------------------------------
def test_exp3_updates_only_the_played_action():
    learner = Learner(Algorithm.EXP3, (learning.IDLE, 2, 4), rate=1.0)
    learner.distribution()
    learning.update(learner, Feedback.bandit(1, 0.1))
    # 0.1 reward at probability 1/3 is an estimate of 0.3
    assert learner.weights == pytest.approx([1.0, math.exp(0.3), 1.0])


# ----------------------------------------------------------------------------------------------------------------------
def test_hedge_and_exp3_need_their_feedback():
    with pytest.raises(ValueError):
        learning.update(Learner(Algorithm.HEDGE, (learning.IDLE, 2)), Feedback.bandit(1, 1.0))
    with pytest.raises(ValueError):
        learning.update(Learner(Algorithm.EXP3, (learning.IDLE, 2)), Feedback.full_information([0.0, 1.0]))


# ----------------------------------------------------------------------------------------------------------------------
def test_sqrt_schedule():
    learner = Learner(Algorithm.HEDGE, (learning.IDLE, 2), rate=0.4, schedule=Schedule.SQRT)
    assert learner.current_rate() == pytest.approx(0.4)
    learning.update(learner, Feedback.full_information([0.0, 0.0]))
    learning.update(learner, Feedback.full_information([0.0, 0.0]))
    learning.update(learner, Feedback.full_information([0.0, 0.0]))
    assert learner.current_rate() == pytest.approx(0.2)


# ----------------------------------------------------------------------------------------------------------------------
def test_fixed_learner_validation_and_sampling():
    with pytest.raises(ConfigError):
        Learner(Algorithm.FIXED, (learning.IDLE, 2))
    with pytest.raises(ConfigError):
        Learner(Algorithm.FIXED, (learning.IDLE, 2), probabilities=[0.5, 0.6])
    with pytest.raises(ConfigError):
        Learner(Algorithm.FIXED, (learning.IDLE, 2), probabilities=[1.0])

    learner = Learner(Algorithm.FIXED, (learning.IDLE, 2, 4), probabilities=[0.0, 0.0, 1.0])
    rng = np.random.default_rng(0)
    assert all(learning.select_action(learner, rng) == 2 for _ in range(20))
    learning.update(learner, Feedback.full_information([0.0, 5.0, 0.0]))
    assert learner.weights.tolist() == [0.0, 0.0, 1.0]


# ----------------------------------------------------------------------------------------------------------------------
def test_masked_actions_are_never_drawn():
    learner = Learner(Algorithm.HEDGE, (learning.IDLE, 2, 4))
    rng = np.random.default_rng(7)
    mask = np.array([False, False, True])
    drawn = {learning.select_action(learner, rng, mask) for _ in range(200)}
    assert drawn <= {0, 2}
    # Idle stays available even when the mask leaves it out.
    assert learner.distribution(np.array([False, False, False])).tolist() == [1.0, 0.0, 0.0]


# ----------------------------------------------------------------------------------------------------------------------
def test_greedy_ties_go_to_the_lowest_target():
    learner = Learner(Algorithm.GREEDY, (learning.IDLE, 2, 4))
    rng = np.random.default_rng(0)
    assert learning.select_action(learner, rng) == 1

    learning.update(learner, Feedback.full_information([0.0, 1.0, 3.0]))
    assert learning.select_action(learner, rng) == 2
    assert learning.select_action(learner, rng, np.array([True, True, False])) == 1

    learning.update(learner, Feedback.full_information([2.0, 1.0, 1.0]))
    assert learning.select_action(learner, rng) == 0


# ----------------------------------------------------------------------------------------------------------------------
def test_rescaling_keeps_ratios():
    learner = Learner(Algorithm.HEDGE, (learning.IDLE, 2, 4), rate=1.0)
    learner.weights = np.array([1e150, 1e210, 1e205])
    before = learner.distribution()
    learning.update(learner, Feedback.full_information([0.0, 0.0, 0.0]))
    assert learner.weights.max() == pytest.approx(1.0)
    assert learner.distribution() == pytest.approx(before)


# ----------------------------------------------------------------------------------------------------------------------
@given(st.lists(st.lists(st.floats(-5.0, 5.0), min_size=3, max_size=3), min_size=1, max_size=60))
@settings(max_examples=50, deadline=None)
def test_hedge_distribution_stays_a_distribution(vectors):
    learner = Learner(Algorithm.HEDGE, (learning.IDLE, 2, 4), rate=0.5)
    for vector in vectors:
        learning.update(learner, Feedback.full_information(vector))
    distribution = learner.distribution()
    assert np.all(np.isfinite(distribution))
    assert np.all(distribution >= 0.0)
    assert distribution.sum() == pytest.approx(1.0)


# ----------------------------------------------------------------------------------------------------------------------
def test_ledger_window_regret():
    ledger = learning.RegretLedger((0, 1), (3, 2), capacity=2)
    for _ in range(3):
        ledger.append(np.array([1.0, 0.5]), np.array([[0.0, 2.0, 1.0], [0.0, 0.5, 9.0]]))
    assert ledger.steps == 3

    regret = learning.record_window(ledger, 3, 3)
    # Node 1 has only two actions, so the 9.0 in its padding slot is ignored.
    assert regret.tolist() == pytest.approx([3.0, 0.0])
    assert learning.record_window(ledger, 2, 1).tolist() == pytest.approx([1.0, 0.0])


# ----------------------------------------------------------------------------------------------------------------------
def test_ledger_rejects_windows_outside_the_record():
    ledger = learning.RegretLedger((0,), (2,))
    ledger.append(np.array([0.0]), np.array([[0.0, 1.0]]))
    with pytest.raises(WindowOutOfRange):
        learning.record_window(ledger, 2, 1)
    with pytest.raises(WindowOutOfRange):
        learning.record_window(ledger, 1, 2)
    with pytest.raises(WindowOutOfRange):
        learning.record_window(ledger, 1, 0)


# ----------------------------------------------------------------------------------------------------------------------
@given(st.integers(2, 5), st.floats(0.05, 1.0), st.data())
@settings(max_examples=60, deadline=None)
def test_hedge_window_regret_bound(k, eta, data):
    w = data.draw(st.integers(1, 60))
    vectors = data.draw(st.lists(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k), min_size=w, max_size=w))
    learner = Learner(Algorithm.HEDGE, (learning.IDLE,) + tuple(range(1, k)), rate=eta)
    ledger = learning.RegretLedger((0,), (k,))
    for vector in vectors:
        utilities = np.array(vector)
        realized = float(learner.distribution() @ utilities)
        ledger.append(np.array([realized]), utilities[np.newaxis, :])
        learning.update(learner, Feedback.full_information(utilities))

    # Utilities in [0, 1] never move the scale, so this is the unnormalized update.
    assert learner.scale == 1.0
    regret = learning.record_window(ledger, w, w)
    assert regret[0] <= math.log(k) / eta + eta * w + 1e-9
