#!/usr/bin/env python3

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from errors import ConfigError, WindowOutOfRange

# Target id used for the idle action (slot 0 of every action set).
IDLE = -1

WEIGHT_FLOOR = 1e-300

# Weights are rescaled by their max once it passes this, which leaves every ratio (and the distribution) unchanged.
WEIGHT_CEILING = 1e200

DEFAULT_RATE = 0.1


# ======================================================================================================================
class Algorithm(Enum):
    HEDGE = "hedge"
    EXP3 = "exp3"
    FIXED = "fixed"
    GREEDY = "greedy"


# ======================================================================================================================
class Schedule(Enum):
    CONSTANT = "constant"
    SQRT = "sqrt"


# ----------------------------------------------------------------------------------------------------------------------
def action_set(net,
               node) -> tuple:
    """
    The admissible actions of a node: idle first, then its out-neighbors in id order.

    :param net: The network.
    :param node: A node id in S1 or S2.

    :return: A tuple of target ids, IDLE in slot 0.
    """

    return (IDLE,) + tuple(net.out_neighbors[node])


# ======================================================================================================================
@dataclass(frozen=True)
class Feedback:
    """
    What a learner is told after a step. Full information carries one utility per action; bandit feedback carries only
    the played action and what it earned.
    """

    vector: np.ndarray = None
    action: int = None
    reward: float = 0.0

    # ------------------------------------------------------------------------------------------------------------------
    @classmethod
    def full_information(cls,
                         vector):
        return cls(vector=np.asarray(vector, dtype=float))

    # ------------------------------------------------------------------------------------------------------------------
    @classmethod
    def bandit(cls,
               action,
               reward):
        return cls(action=int(action), reward=float(reward))


# ======================================================================================================================
class Learner(object):
    """
    One node's strategy engine. Weights are kept unnormalized; the sampling distribution is always the normalized,
    masked weights.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 algorithm,
                 targets,
                 rate=DEFAULT_RATE,
                 schedule=Schedule.CONSTANT,
                 probabilities=None,
                 stream=0):
        """
        :param algorithm: An Algorithm.
        :param targets: The action set (IDLE first).
        :param rate: The learning rate eta (the base rate under the sqrt schedule).
        :param schedule: A Schedule.
        :param probabilities: The fixed distribution over targets, required for Algorithm.FIXED.
        :param stream: The id of the RNG substream this learner draws from. Metadata only.
        """

        self.algorithm = Algorithm(algorithm)
        self.targets = tuple(targets)
        self.rate = float(rate)
        self.schedule = Schedule(schedule)
        self.stream = stream
        self.weights = np.ones(len(self.targets))
        self.last_estimate = np.zeros(len(self.targets))
        self.last_distribution = self.weights / self.weights.sum()
        self.scale = 1.0
        self.updates = 0

        if self.algorithm is Algorithm.FIXED:
            if probabilities is None:
                raise ConfigError("A fixed learner needs a probability vector.")
            probabilities = np.asarray(probabilities, dtype=float)
            if len(probabilities) != len(self.targets) or np.any(probabilities < 0):
                raise ConfigError("Fixed probabilities must be nonnegative, one per action.")
            if abs(probabilities.sum() - 1.0) > 1e-12:
                raise ConfigError("Fixed probabilities must sum to 1, got " + str(probabilities.sum()))
            self.weights = probabilities.copy()

    # ------------------------------------------------------------------------------------------------------------------
    def current_rate(self) -> float:
        if self.schedule is Schedule.SQRT:
            return self.rate / math.sqrt(self.updates + 1)
        return self.rate

    # ------------------------------------------------------------------------------------------------------------------
    def distribution(self,
                     mask=None) -> np.ndarray:
        """
        :param mask: Optional boolean array of allowed actions. Idle is always allowed.

        :return: The sampling distribution over actions.
        """

        weights = self.weights.copy()
        if mask is not None:
            mask = np.asarray(mask, dtype=bool).copy()
            mask[0] = True
            weights = np.where(mask, weights, 0.0)
        total = weights.sum()
        if total <= 0.0:
            output = np.zeros(len(weights))
            output[0] = 1.0
            return output
        return weights / total


# ----------------------------------------------------------------------------------------------------------------------
def select_action(learner,
                  rng,
                  mask=None) -> int:
    """
    Draws an action index.

    :param learner: The Learner.
    :param rng: A numpy Generator (the learner stream).
    :param mask: Optional boolean array of allowed actions.

    :return: The action index (0 is idle).
    """

    if learner.algorithm is Algorithm.GREEDY:
        return _greedy_choice(learner, mask)

    probabilities = learner.distribution(mask)
    learner.last_distribution = probabilities
    cumulative = np.cumsum(probabilities)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    index = min(index, len(probabilities) - 1)
    if probabilities[index] == 0.0:
        # Only reachable through rounding at the top of the cumulative sum.
        index = int(np.flatnonzero(probabilities)[-1])
    return index


# ----------------------------------------------------------------------------------------------------------------------
def _greedy_choice(learner,
                   mask):
    estimate = learner.last_estimate.copy()
    allowed = np.ones(len(estimate), dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    allowed[0] = True
    best = None
    # Ties go to the lowest target id; idle only wins when it is strictly best.
    for index in list(range(1, len(estimate))) + [0]:
        if not allowed[index]:
            continue
        if best is None or estimate[index] > estimate[best]:
            best = index
    distribution = np.zeros(len(estimate))
    distribution[best] = 1.0
    learner.last_distribution = distribution
    return best


# ----------------------------------------------------------------------------------------------------------------------
def _rescale(learner):
    learner.weights = np.maximum(learner.weights, WEIGHT_FLOOR)
    top = learner.weights.max()
    if top > WEIGHT_CEILING:
        learner.weights = np.maximum(learner.weights / top, WEIGHT_FLOOR)


# ----------------------------------------------------------------------------------------------------------------------
def update(learner,
           feedback) -> Learner:
    """
    Multiplicative weights update. Hedge multiplies every weight by exp(eta * u_a / scale) from the full counterfactual
    vector; EXP3 multiplies only the played action's weight by exp(eta * g) with g the importance weighted reward
    (reward / scale / probability played). The scale is the running max(1, largest absolute utility seen). Utilities
    in [0, 1] leave it at 1, so the update is the plain exp(eta * u_a) one and the window regret of a Hedge learner
    started at uniform weights stays below ln K / eta + eta * w. Larger utilities (queue differences) shrink the
    effective rate to eta / scale. Fixed learners ignore feedback; greedy learners remember the last vector.

    :param learner: The Learner, updated in place.
    :param feedback: A Feedback.

    :return: The same learner.
    """

    eta = learner.current_rate()
    learner.updates += 1

    if feedback.vector is not None:
        learner.last_estimate = np.asarray(feedback.vector, dtype=float).copy()

    if learner.algorithm is Algorithm.HEDGE:
        vector = feedback.vector
        if vector is None:
            raise ValueError("Hedge needs the full utility vector.")
        learner.scale = max(learner.scale, float(np.max(np.abs(vector))) if len(vector) else 1.0)
        learner.weights = learner.weights * np.exp(eta * vector / learner.scale)
        _rescale(learner)

    elif learner.algorithm is Algorithm.EXP3:
        if feedback.action is None:
            raise ValueError("EXP3 needs the played action and its reward.")
        learner.scale = max(learner.scale, abs(feedback.reward))
        probability = learner.last_distribution[feedback.action]
        if probability > 0.0 and feedback.reward != 0.0:
            estimate = feedback.reward / learner.scale / probability
            learner.weights[feedback.action] *= math.exp(eta * estimate)
            _rescale(learner)

    return learner


# ======================================================================================================================
class RegretLedger(object):
    """
    Append-only per-step record of realized utility and the counterfactual utility of every fixed action, for every
    sender. Stored as prefix sums so that any window is two lookups. Slot 0 of every action row is idle.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 nodes,
                 action_counts,
                 capacity=1024):
        """
        :param nodes: The sender ids, in row order.
        :param action_counts: The action set size of each sender.
        :param capacity: Initial number of steps to preallocate.
        """

        self.nodes = tuple(nodes)
        self.width = max(action_counts) if action_counts else 1
        self.valid = np.zeros((len(self.nodes), self.width), dtype=bool)
        for row, count in enumerate(action_counts):
            self.valid[row, :count] = True
        self.steps = 0
        self._realized = np.zeros((capacity + 1, len(self.nodes)))
        self._counterfactual = np.zeros((capacity + 1, len(self.nodes), self.width))

    # ------------------------------------------------------------------------------------------------------------------
    def _grow(self):
        extra = max(1024, self._realized.shape[0])
        self._realized = np.concatenate([self._realized, np.zeros((extra,) + self._realized.shape[1:])])
        self._counterfactual = np.concatenate([self._counterfactual,
                                               np.zeros((extra,) + self._counterfactual.shape[1:])])

    # ------------------------------------------------------------------------------------------------------------------
    def append(self,
               realized,
               counterfactual):
        """
        :param realized: One realized utility per sender.
        :param counterfactual: A senders x width array; entries outside a sender's action set are ignored.

        :return: Nothing.
        """

        if self.steps + 1 >= self._realized.shape[0]:
            self._grow()
        self._realized[self.steps + 1] = self._realized[self.steps] + realized
        self._counterfactual[self.steps + 1] = self._counterfactual[self.steps] + np.where(self.valid,
                                                                                           counterfactual,
                                                                                           0.0)
        self.steps += 1

    # ------------------------------------------------------------------------------------------------------------------
    def window_totals(self,
                      t0,
                      w):
        if w < 1 or t0 - w < 0 or t0 > self.steps:
            raise WindowOutOfRange("Window [" + str(t0 - w) + ", " + str(t0) + ") is outside the " +
                                   str(self.steps) + " recorded steps.")
        realized = self._realized[t0] - self._realized[t0 - w]
        counterfactual = self._counterfactual[t0] - self._counterfactual[t0 - w]
        return realized, counterfactual


# ----------------------------------------------------------------------------------------------------------------------
def record_window(ledger,
                  t0,
                  w) -> np.ndarray:
    """
    Window regret Reg_i(w, t0): the best fixed out-neighbor's counterfactual total over steps [t0 - w, t0) minus the
    realized total.

    :param ledger: A RegretLedger.
    :param t0: The end of the window (exclusive).
    :param w: The window length.

    :return: One regret per sender, in ledger row order.
    """

    realized, counterfactual = ledger.window_totals(t0, w)
    targets = ledger.valid.copy()
    targets[:, 0] = False
    best = np.where(targets, counterfactual, -np.inf).max(axis=1)
    best = np.where(np.isfinite(best), best, 0.0)
    return best - realized
