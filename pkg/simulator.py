#!/usr/bin/env python3

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

import display
import learning
from errors import ConfigError

# Number of steps of Bernoulli draws taken from a stream at a time.
DRAW_BLOCK = 4096

DEFAULT_SLOPE_TOL = 1e-3

# "bounded" also needs max <= BOUNDED_RATIO * median over the last half of the run.
BOUNDED_RATIO = 3.0

PROGRESS_EVERY = 50000


# ======================================================================================================================
class PriorityRule(Enum):
    OLDEST_PACKET = "oldest"
    LONGEST_QUEUE = "longest"


# ======================================================================================================================
class UtilityModel(Enum):
    UNIT = "unit"
    QUEUE_DIFF = "queuediff"


# ======================================================================================================================
@dataclass(frozen=True)
class LearnerConfig:
    """
    How to build the per-node learners of a decentralized run. `profile` maps a node id to a probability vector over
    that node's action set and is required for the fixed algorithm (nodes missing from it stay idle).
    """

    algorithm: learning.Algorithm = learning.Algorithm.HEDGE
    rate: float = learning.DEFAULT_RATE
    schedule: learning.Schedule = learning.Schedule.CONSTANT
    seed_offset: int = 0
    profile: dict = field(default_factory=dict)


# ======================================================================================================================
@dataclass(frozen=True)
class DecentralizedPolicy:
    learner: LearnerConfig
    priority: PriorityRule = PriorityRule.OLDEST_PACKET
    utility: UtilityModel = UtilityModel.UNIT

    # ------------------------------------------------------------------------------------------------------------------
    @property
    def masks_longer_queues(self) -> bool:
        """
        Queue lengths are part of what a node observes only under queue-length utilities, and only then are targets
        with a longer queue than the sender's masked out.
        """

        return self.utility is UtilityModel.QUEUE_DIFF

    # ------------------------------------------------------------------------------------------------------------------
    def build_learners(self,
                       net,
                       seed_sequence):
        """
        :param net: The network.
        :param seed_sequence: The numpy SeedSequence reserved for learner sampling.

        :return: A tuple (dict of node id -> Learner, dict of node id -> numpy Generator).
        """

        learners = dict()
        streams = dict()
        children = seed_sequence.spawn(self.learner.seed_offset + len(net.senders))
        for index, node in enumerate(net.senders):
            targets = learning.action_set(net, node)
            probabilities = None
            if self.learner.algorithm is learning.Algorithm.FIXED:
                probabilities = self.learner.profile.get(node)
                if probabilities is None:
                    probabilities = np.zeros(len(targets))
                    probabilities[0] = 1.0
            stream = self.learner.seed_offset + index
            learners[node] = learning.Learner(self.learner.algorithm,
                                              targets,
                                              rate=self.learner.rate,
                                              schedule=self.learner.schedule,
                                              probabilities=probabilities,
                                              stream=stream)
            streams[node] = np.random.default_rng(children[stream])
        return learners, streams


# ======================================================================================================================
@dataclass(frozen=True)
class CentralizedPolicy:
    """
    Each step one path ensemble is sampled from the distribution and every nonempty tail of one of its edges offers
    its oldest packet along that edge.
    """

    distribution: object
    priority: PriorityRule = PriorityRule.OLDEST_PACKET
    utility: UtilityModel = UtilityModel.UNIT


# ======================================================================================================================
class BernoulliArrivals(object):
    """
    Independent Bernoulli(lambda_i) arrivals at every source, drawn from the arrival stream in blocks.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 net,
                 rng):
        self.lam = net.rates[list(net.sources)]
        self.rng = rng
        self.block = np.zeros((0, len(self.lam)), dtype=bool)
        self.index = 0

    # ------------------------------------------------------------------------------------------------------------------
    def draw(self,
             t) -> np.ndarray:
        if self.index >= len(self.block):
            self.block = self.rng.random((DRAW_BLOCK, len(self.lam))) < self.lam
            self.index = 0
        output = self.block[self.index]
        self.index += 1
        return output


# ======================================================================================================================
class CoinStream(object):
    """
    One Bernoulli(mu_j) coin per node per step, drawn for every server whether or not it receives offers. Sources always
    get False.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 net,
                 rng):
        self.rates = np.zeros(net.size)
        for node in net.servers:
            self.rates[node] = net.rates[node]
        self.rng = rng
        self.block = np.zeros((0, net.size), dtype=bool)
        self.index = 0

    # ------------------------------------------------------------------------------------------------------------------
    def draw(self) -> np.ndarray:
        if self.index >= len(self.block):
            self.block = self.rng.random((DRAW_BLOCK, len(self.rates))) < self.rates
            self.index = 0
        output = self.block[self.index]
        self.index += 1
        return output


# ======================================================================================================================
@dataclass(frozen=True)
class MetricsFrame:
    t: int
    queue_lengths: tuple
    ages: tuple
    phi_age: float
    phi_len: int
    mean_total: float
    utilities: tuple
    regrets: tuple
    arrivals: tuple
    coins: tuple


# ======================================================================================================================
@dataclass(frozen=True)
class StabilityEstimate:
    """
    Finite horizon stand-in for stability: the least squares slope of the (stride averaged) total queue length over the
    last half of the run, and the ratio of its max to its median.
    """

    slope: float
    max_q: float
    median_q: float
    verdict: str
    slope_tol: float = DEFAULT_SLOPE_TOL

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self) -> dict:
        return {"slope": float(self.slope),
                "max_q": float(self.max_q),
                "median_q": float(self.median_q),
                "verdict": self.verdict,
                "slope_tol": float(self.slope_tol)}


# ======================================================================================================================
@dataclass
class RunResult:
    frames: list
    estimate: StabilityEstimate
    state: object
    ledger: object = None


# ======================================================================================================================
class SimState(object):
    """
    Everything a run owns: the clock, per-node packet heaps keyed by (birth, packet id, origin), the three random
    streams (arrivals, server coins, policy) and the cumulative counters.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 net,
                 policy,
                 seed,
                 arrivals=None,
                 backlog=0,
                 record_ledger=True):
        """
        :param net: The network.
        :param policy: A DecentralizedPolicy or CentralizedPolicy.
        :param seed: The run seed.
        :param arrivals: Optional arrival process replacing the Bernoulli one (anything with draw(t) returning one bool
               per source).
        :param backlog: Number of packets preloaded at every source, spaced 1/lambda_i steps apart in the past.
        :param record_ledger: Whether to keep the regret ledger (decentralized runs only).
        """

        self.net = net
        self.policy = policy
        self.seed = seed
        self.t = 0
        self.queues = [list() for _ in net.nodes]
        self.next_pid = 0

        arrival_seq, coin_seq, policy_seq = np.random.SeedSequence(seed).spawn(3)
        self.arrival_rng = np.random.default_rng(arrival_seq)
        self.coin_rng = np.random.default_rng(coin_seq)
        self.policy_rng = np.random.default_rng(policy_seq)
        self.arrivals = arrivals if arrivals is not None else BernoulliArrivals(net, self.arrival_rng)
        self.coins = CoinStream(net, self.coin_rng)

        self.learners = dict()
        self.learner_rngs = dict()
        if isinstance(policy, DecentralizedPolicy):
            self.learners, self.learner_rngs = policy.build_learners(net, policy_seq)

        self.sender_row = {node: row for row, node in enumerate(net.senders)}
        self.ledger = None
        if record_ledger and isinstance(policy, DecentralizedPolicy):
            self.ledger = learning.RegretLedger(net.senders,
                                                [len(learning.action_set(net, node)) for node in net.senders])

        self.arrival_totals = np.zeros(len(net.sources), dtype=np.int64)
        self.departures = 0
        self.coin_totals = np.zeros(net.size, dtype=np.int64)
        self.utility_totals = np.zeros(len(net.senders))
        self.coupling_checked = 0
        self.coupling_violations = 0
        self.block_total = 0

        for source in net.sources:
            spacing = 1.0 / net.rates[source]
            for k in range(backlog, 0, -1):
                self._push(source, -int(round(k * spacing)), source)

    # ------------------------------------------------------------------------------------------------------------------
    def _push(self,
              node,
              birth,
              origin):
        heapq.heappush(self.queues[node], (birth, self.next_pid, origin))
        self.next_pid += 1

    # ------------------------------------------------------------------------------------------------------------------
    def lengths(self) -> list:
        return [len(queue) for queue in self.queues]

    # ------------------------------------------------------------------------------------------------------------------
    def ages(self) -> list:
        return [self.t - queue[0][0] if queue else 0 for queue in self.queues]

    # ------------------------------------------------------------------------------------------------------------------
    def in_system(self) -> int:
        return sum(len(queue) for queue in self.queues)


# ----------------------------------------------------------------------------------------------------------------------
def phi_age(net,
            ages) -> float:
    """
    Age potential: half the sum over sources of lambda_i * T_i * (T_i - 1).
    """

    return 0.5 * sum(net.rates[source] * ages[source] * (ages[source] - 1) for source in net.sources)


# ----------------------------------------------------------------------------------------------------------------------
def phi_len(lengths) -> int:
    """
    Length potential: half the sum of Q_i * (Q_i - 1). Always an integer.
    """

    return sum(q * (q - 1) for q in lengths) // 2


# ----------------------------------------------------------------------------------------------------------------------
def potential_coupling(lengths_before,
                       lengths_after,
                       utility_sum) -> int:
    """
    Under queue-length utilities every cleared packet from x to y earns Q_x - Q_y, and the clearing phase changes the
    length potential by Q * delta + (delta^2 - delta) / 2 at each node whose queue moved by delta. Summed, the utilities
    exceed the potential drop by exactly one per node whose queue shrank:

        sum of utilities - (number of shrunk queues) = phi_len(before) - phi_len(after clearing)

    :param lengths_before: Queue lengths at the start of the step.
    :param lengths_after: Queue lengths after clearing, before arrivals.
    :param utility_sum: The integer sum of realized utilities this step.

    :return: The gap between the two sides; 0 when the identity holds.
    """

    shrunk = sum(1 for before, after in zip(lengths_before, lengths_after) if after < before)
    return int(round(utility_sum)) - shrunk - (phi_len(lengths_before) - phi_len(lengths_after))


# ----------------------------------------------------------------------------------------------------------------------
def _priority_key(state,
                  rule,
                  sender,
                  lengths):
    if rule is PriorityRule.OLDEST_PACKET:
        return state.queues[sender][0][0], sender
    return -lengths[sender], sender


# ----------------------------------------------------------------------------------------------------------------------
def _utility(model,
             sender,
             target,
             lengths):
    if model is UtilityModel.UNIT:
        return 1
    return lengths[sender] - lengths[target]


# ----------------------------------------------------------------------------------------------------------------------
def counterfactuals(state,
                    targets,
                    coins,
                    lengths,
                    keys,
                    policy) -> dict:
    """
    For each nonempty sender i and each action, the utility i would have earned had it taken that action while every
    other sender kept its realized choice. Server j would pick i iff i's priority key beats every other offer at j; the
    payoff then uses j's realized coin.

    :param state: The SimState.
    :param targets: Dict of sender -> target for the realized offers.
    :param coins: The step's coins, one per node id.
    :param lengths: Start of step queue lengths.
    :param keys: Dict of sender -> priority key for every nonempty sender.
    :param policy: The policy (for the utility model).

    :return: Dict of sender -> numpy array of utilities over its action set (idle in slot 0).
    """

    best = dict()
    runner_up = dict()
    for sender, target in targets.items():
        key = keys[sender]
        if target not in best or key < best[target][0]:
            if target in best:
                runner_up[target] = best[target][0]
            best[target] = (key, sender)
        elif target not in runner_up or key < runner_up[target]:
            runner_up[target] = key

    output = dict()
    for sender, key in keys.items():
        learner = state.learners[sender]
        values = np.zeros(len(learner.targets))
        for index in range(1, len(learner.targets)):
            target = learner.targets[index]
            if not coins[target]:
                continue
            if target in best and best[target][1] != sender:
                rival = best[target][0]
            else:
                rival = runner_up.get(target)
            if rival is None or key < rival:
                values[index] = _utility(policy.utility, sender, target, lengths)
        output[sender] = values
    return output


# ----------------------------------------------------------------------------------------------------------------------
def step(state,
         policy) -> SimState:
    """
    Advances the system by one time step.

    Phase I: every nonempty node of S1 and S2 picks a target (its learner's draw, or the edge its tail owns in the
    sampled path ensemble) and offers its oldest packet. Phase II: each server with offers picks one by the priority
    rule and clears it when its coin comes up; cleared packets join a middle server's queue or leave at a terminal, the
    rest stay with their senders. Arrivals stamped with the current time then join the sources.

    :param state: The SimState, advanced in place.
    :param policy: The policy the state was built with.

    :return: The same state.
    """

    net = state.net
    t = state.t
    lengths = state.lengths()
    coins = state.coins.draw()
    state.coin_totals += coins

    # Phase I
    targets = dict()
    choices = dict()
    keys = dict()
    decentralized = isinstance(policy, DecentralizedPolicy)
    if decentralized:
        for sender in net.senders:
            if lengths[sender] == 0:
                continue
            learner = state.learners[sender]
            mask = None
            if policy.masks_longer_queues:
                mask = np.array([True] + [lengths[target] <= lengths[sender] for target in learner.targets[1:]])
            action = learning.select_action(learner, state.learner_rngs[sender], mask)
            choices[sender] = action
            keys[sender] = _priority_key(state, policy.priority, sender, lengths)
            if learner.targets[action] != learning.IDLE:
                targets[sender] = learner.targets[action]
    else:
        for tail, head in policy.distribution.sample(state.policy_rng):
            if lengths[tail] > 0:
                targets[tail] = head
                keys[tail] = _priority_key(state, policy.priority, tail, lengths)

    # Phase II: pick one offer per server
    winners = dict()
    for sender, target in targets.items():
        if target not in winners or keys[sender] < keys[winners[target]]:
            winners[target] = sender

    realized = dict()
    cleared = list()
    for target, sender in winners.items():
        if coins[target]:
            realized[sender] = _utility(policy.utility, sender, target, lengths)
            cleared.append((sender, target))

    # Pop every cleared packet before pushing, so a middle server forwards its own oldest packet.
    moving = [(heapq.heappop(state.queues[sender]), target) for sender, target in cleared]
    for packet, target in moving:
        if net.out_neighbors[target]:
            heapq.heappush(state.queues[target], packet)
        else:
            state.departures += 1

    if policy.utility is UtilityModel.QUEUE_DIFF:
        state.coupling_checked += 1
        if potential_coupling(lengths, state.lengths(), sum(realized.values())) != 0:
            state.coupling_violations += 1

    for index, arrived in enumerate(state.arrivals.draw(t)):
        if arrived:
            state._push(net.sources[index], t, net.sources[index])
            state.arrival_totals[index] += 1

    # Learner feedback and regret accounting
    realized_row = np.zeros(len(net.senders))
    for sender, value in realized.items():
        realized_row[state.sender_row[sender]] = value
    state.utility_totals += realized_row

    if decentralized:
        outcomes = counterfactuals(state, targets, coins, lengths, keys, policy)
        for sender, values in outcomes.items():
            learner = state.learners[sender]
            if learner.algorithm is learning.Algorithm.EXP3:
                feedback = learning.Feedback.bandit(choices[sender], realized.get(sender, 0))
            else:
                feedback = learning.Feedback.full_information(values)
            learning.update(learner, feedback)
        if state.ledger is not None:
            matrix = np.zeros((len(net.senders), state.ledger.width))
            for sender, values in outcomes.items():
                matrix[state.sender_row[sender], :len(values)] = values
            state.ledger.append(realized_row, matrix)

    state.t = t + 1
    state.block_total += state.in_system()
    return state


# ----------------------------------------------------------------------------------------------------------------------
def snapshot(state,
             stride,
             window) -> MetricsFrame:
    """
    Builds the metrics frame for the current clock and resets the stride accumulator.
    """

    lengths = state.lengths()
    ages = state.ages()
    regrets = tuple()
    if state.ledger is not None and state.t >= window:
        regrets = tuple(float(value) for value in learning.record_window(state.ledger, state.t, window))
    frame = MetricsFrame(t=state.t,
                         queue_lengths=tuple(lengths),
                         ages=tuple(ages),
                         phi_age=phi_age(state.net, ages),
                         phi_len=phi_len(lengths),
                         mean_total=state.block_total / float(stride),
                         utilities=tuple(float(value) for value in state.utility_totals),
                         regrets=regrets,
                         arrivals=tuple(int(value) for value in state.arrival_totals),
                         coins=tuple(int(value) for value in state.coin_totals))
    state.block_total = 0
    return frame


# ----------------------------------------------------------------------------------------------------------------------
def slope(xs,
          ys) -> float:
    """
    Least squares slope of ys against xs.
    """

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or np.ptp(xs) == 0.0:
        return 0.0
    return float(np.polyfit(xs, ys, 1)[0])


# ----------------------------------------------------------------------------------------------------------------------
def estimate_stability(frames,
                       slope_tol=DEFAULT_SLOPE_TOL) -> StabilityEstimate:
    """
    Reads a verdict off the last half of a run. "growth" when the slope of the stride-averaged total queue length is
    above slope_tol; "bounded" when it is not and the max over the last half is within BOUNDED_RATIO times the median
    (a median under one packet counts as one); otherwise "inconclusive".

    :param frames: The run's MetricsFrames.
    :param slope_tol: Packets per step.

    :return: A StabilityEstimate.
    """

    if not frames:
        return StabilityEstimate(0.0, 0.0, 0.0, "inconclusive", slope_tol)
    horizon = frames[-1].t
    tail = [frame for frame in frames if frame.t > horizon / 2.0]
    if len(tail) < 2:
        tail = list(frames)
    xs = [frame.t for frame in tail]
    ys = [frame.mean_total for frame in tail]
    growth = slope(xs, ys)
    max_q = float(np.max(ys))
    median_q = float(np.median(ys))
    if growth > slope_tol:
        verdict = "growth"
    elif max_q <= BOUNDED_RATIO * max(median_q, 1.0):
        verdict = "bounded"
    else:
        verdict = "inconclusive"
    return StabilityEstimate(growth, max_q, median_q, verdict, slope_tol)


# ----------------------------------------------------------------------------------------------------------------------
def run(net,
        policy,
        horizon,
        seed,
        window,
        stride=None,
        arrivals=None,
        backlog=0,
        slope_tol=DEFAULT_SLOPE_TOL,
        record_ledger=True) -> RunResult:
    """
    Runs one seeded simulation.

    :param net: The network.
    :param policy: A DecentralizedPolicy or CentralizedPolicy.
    :param horizon: Number of steps T; must be at least 10 windows.
    :param seed: The run seed.
    :param window: The regret window w.
    :param stride: Steps between metrics frames. Defaults to the window.
    :param arrivals: Optional replacement arrival process.
    :param backlog: Packets preloaded at every source.
    :param slope_tol: Growth threshold of the stability estimate.
    :param record_ledger: Whether to keep the regret ledger.

    :return: A RunResult.
    """

    if window < 1:
        raise ConfigError("The window must be at least one step.")
    if horizon < 10 * window:
        raise ConfigError("Horizon " + str(horizon) + " is shorter than 10 windows of " + str(window) + " steps.")
    stride = stride or window

    state = SimState(net, policy, seed, arrivals=arrivals, backlog=backlog, record_ledger=record_ledger)
    frames = list()
    for _ in range(horizon):
        step(state, policy)
        if state.t % stride == 0:
            frames.append(snapshot(state, stride, window))
        if state.t % PROGRESS_EVERY == 0:
            display.debug("seed " + str(seed) + ": t=" + str(state.t) + " in system=" + str(state.in_system()))

    estimate = estimate_stability(frames, slope_tol)
    return RunResult(frames, estimate, state, state.ledger)


# ----------------------------------------------------------------------------------------------------------------------
def regret_trajectory(ledger,
                      node,
                      start,
                      stride):
    """
    Cumulative regret of one node measured from a fixed start: the regret of windows [start, start + k * stride) for
    k = 1, 2, ... up to the ledger's length.

    :param ledger: A RegretLedger.
    :param node: The node id.
    :param start: The first step counted (e.g. the end of a burn-in).
    :param stride: Spacing of the sample points.

    :return: A tuple (ends, regrets) of numpy arrays.
    """

    row = ledger.nodes.index(node)
    ends = np.arange(start + stride, ledger.steps + 1, stride)
    regrets = np.array([learning.record_window(ledger, end, end - start)[row] for end in ends])
    return ends, regrets


# ----------------------------------------------------------------------------------------------------------------------
def age_threshold(net,
                  window,
                  beta) -> float:
    """
    Level above which the square root of the age potential has negative expected drift per window:
    w / sqrt(2 lambda_min) * max(8 / beta * sum(lambda), 16 n^2).
    """

    lam = net.rates[list(net.sources)]
    n = len(net.sources)
    return window / math.sqrt(2.0 * lam.min()) * max(8.0 / beta * lam.sum(), 16.0 * n * n)


# ----------------------------------------------------------------------------------------------------------------------
def length_threshold(net,
                     window,
                     beta) -> float:
    """
    The same level for the length potential: 8 sqrt(2(n + m)) / (beta mu_min) * (sum lambda^2 w^2 + sum mu w^2 + w),
    with n sources and m servers.
    """

    lam = net.rates[list(net.sources)]
    mu = net.rates[list(net.servers)]
    size = len(lam) + len(mu)
    scale = 8.0 * math.sqrt(2.0 * size) / (beta * mu.min())
    return scale * (float(np.sum(lam ** 2)) * window ** 2 + float(np.sum(mu)) * window ** 2 + window)


# ======================================================================================================================
@dataclass(frozen=True)
class DriftReport:
    windows: int
    above_threshold: int
    threshold: float
    mean_drift: float
    fraction_negative: float
    event_a: float
    event_b: float
    drifts: tuple

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self) -> dict:
        return {"windows": self.windows,
                "above_threshold": self.above_threshold,
                "threshold": float(self.threshold),
                "mean_drift": float(self.mean_drift),
                "fraction_negative": float(self.fraction_negative),
                "event_a": float(self.event_a),
                "event_b": float(self.event_b)}


# ----------------------------------------------------------------------------------------------------------------------
def drift_probe(net,
                policy,
                windows,
                seed,
                window,
                epsilon,
                beta=None,
                threshold=None,
                potential="age",
                backlog=0,
                arrivals=None) -> DriftReport:
    """
    Runs `windows` consecutive windows of length w and looks at the one-window change of sqrt(potential) from every
    window boundary, together with two concentration events per window:

      A: every server's coins reach (1 - eps) mu_j w, every source's arrivals lie within (1 +- eps) lambda_i w, and the
         summed window regret plus n stays below eps lambda_min w / 2.
      B: arrivals at most (1 + eps) lambda_i w, coins at least (1 - eps) mu_j w, and summed window regret at most w.

    Drift statistics are conditioned on windows that start with sqrt(potential) at or above the threshold.

    :param net: The network.
    :param policy: The policy.
    :param windows: Number of windows to sample.
    :param seed: The run seed.
    :param window: The window length w.
    :param epsilon: The concentration slack.
    :param beta: The assumption constant used for the default threshold.
    :param threshold: Explicit threshold on sqrt(potential); defaults to the negative drift level for the potential.
    :param potential: "age" or "len".
    :param backlog: Packets preloaded per source, to start above the threshold.
    :param arrivals: Optional replacement arrival process.

    :return: A DriftReport.
    """

    if potential not in ("age", "len"):
        raise ConfigError("Unknown potential: " + str(potential))
    if threshold is None:
        if beta is None:
            raise ConfigError("The drift threshold needs either beta or an explicit value.")
        threshold = age_threshold(net, window, beta) if potential == "age" else length_threshold(net, window, beta)

    state = SimState(net, policy, seed, arrivals=arrivals, backlog=backlog)
    frames = [snapshot(state, 1, window)]
    for _ in range(windows):
        for _ in range(window):
            step(state, policy)
        frames.append(snapshot(state, window, window))

    lam = net.rates[list(net.sources)]
    mu = net.rates[list(net.servers)]
    servers = list(net.servers)
    n = len(net.senders)

    drifts = list()
    count_a = 0
    count_b = 0
    for index in range(windows):
        start = frames[index]
        end = frames[index + 1]
        arrived = np.array(end.arrivals) - np.array(start.arrivals)
        coins = (np.array(end.coins) - np.array(start.coins))[servers]
        regret = 0.0
        if state.ledger is not None:
            regret = float(np.sum(learning.record_window(state.ledger, end.t, window)))

        coins_ok = bool(np.all(coins >= (1.0 - epsilon) * mu * window))
        upper_ok = bool(np.all(arrived <= (1.0 + epsilon) * lam * window))
        lower_ok = bool(np.all(arrived >= (1.0 - epsilon) * lam * window))
        if coins_ok and upper_ok and lower_ok and regret + n <= epsilon * lam.min() * window / 2.0:
            count_a += 1
        if coins_ok and upper_ok and regret <= window:
            count_b += 1

        before = start.phi_age if potential == "age" else start.phi_len
        after = end.phi_age if potential == "age" else end.phi_len
        if math.sqrt(before) >= threshold:
            drifts.append(math.sqrt(after) - math.sqrt(before))

    mean_drift = float(np.mean(drifts)) if drifts else 0.0
    fraction_negative = float(np.mean([drift < 0 for drift in drifts])) if drifts else 0.0
    return DriftReport(windows=windows,
                       above_threshold=len(drifts),
                       threshold=float(threshold),
                       mean_drift=mean_drift,
                       fraction_negative=fraction_negative,
                       event_a=count_a / float(windows) if windows else 0.0,
                       event_b=count_b / float(windows) if windows else 0.0,
                       drifts=tuple(drifts))
