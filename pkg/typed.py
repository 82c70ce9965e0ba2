#!/usr/bin/env python3

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import optimize

import display
import learning
import netfile
import network
import simulator
import stability
from errors import ConfigError, DegreeError, SchemaError, TooLarge


# ======================================================================================================================
@dataclass(frozen=True)
class TypedNetworkSpec:
    """
    A network whose packets carry the id of the source they arrived at. masks[i] is the set of edges type-i packets may
    use. Sources without a declared mask may use every edge.
    """

    net: network.NetworkSpec
    masks: dict

    # ------------------------------------------------------------------------------------------------------------------
    @property
    def types(self) -> tuple:
        return self.net.sources

    # ------------------------------------------------------------------------------------------------------------------
    def type_index(self,
                   source) -> int:
        return self.net.sources.index(source)

    # ------------------------------------------------------------------------------------------------------------------
    def out_neighbors(self,
                      node,
                      source) -> tuple:
        """
        N_out(node) restricted to edges usable by type `source`.
        """

        return tuple(head for head in self.net.out_neighbors[node] if (node, head) in self.masks[source])

    # ------------------------------------------------------------------------------------------------------------------
    def in_neighbors(self,
                     node,
                     source) -> tuple:
        return tuple(tail for tail in self.net.in_neighbors[node] if (tail, node) in self.masks[source])

    # ------------------------------------------------------------------------------------------------------------------
    def mask_names(self) -> dict:
        net = self.net
        return {net.name_of(source): [(net.name_of(tail), net.name_of(head)) for tail, head in sorted(edges)]
                for source, edges in self.masks.items()}


# ----------------------------------------------------------------------------------------------------------------------
def typed_paths(typed,
                source,
                cap=stability.DEFAULT_PATH_CAP) -> tuple:
    """
    Every path from `source` to a terminal that only uses edges of the source's type, in lexicographic order.
    """

    net = typed.net
    output = list()
    stack = [(source,)]
    while stack:
        path = stack.pop()
        tail = path[-1]
        if not net.out_neighbors[tail]:
            output.append(path)
            if len(output) > cap:
                raise TooLarge("More than " + str(cap) + " typed paths for source " + net.name_of(source) + ".")
            continue
        for head in reversed(typed.out_neighbors(tail, source)):
            stack.append(path + (head,))
    return tuple(output)


# ----------------------------------------------------------------------------------------------------------------------
def make_typed(net,
               masks) -> TypedNetworkSpec:
    """
    Validates per-type edge masks against a network.

    :param net: A validated NetworkSpec.
    :param masks: A dict keyed by source (id or name) whose values list the usable (tail, head) edges, by id or name.

    :return: A TypedNetworkSpec.
    """

    edge_set = set(net.edges)
    resolved = dict()
    violations = list()
    for key, edges in masks.items():
        source = net.id_of(key)
        if source not in net.sources:
            raise SchemaError("Type mask declared for " + net.name_of(source) + ", which is not a source.")
        usable = set()
        for tail, head in edges:
            edge = (net.id_of(tail), net.id_of(head))
            if edge not in edge_set:
                violations.append("Type " + net.name_of(source) + " lists " + str(tail) + " -> " + str(head) +
                                  ", which is not an edge")
                continue
            usable.add(edge)
        resolved[source] = frozenset(usable)
    if violations:
        raise SchemaError(violations[0], violations)

    for source in net.sources:
        if source not in resolved:
            resolved[source] = frozenset(edge_set)

    typed = TypedNetworkSpec(net, resolved)
    for source in net.sources:
        if not typed_paths(typed, source):
            violations.append("Type " + net.name_of(source) + " has no usable path to a terminal")
    if violations:
        raise DegreeError(violations[0], violations)
    return typed


# ----------------------------------------------------------------------------------------------------------------------
def load_typed_network(network_file) -> TypedNetworkSpec:
    """
    Reads a network file together with its [type-<source>] sections.
    """

    description = netfile.read_network_description(network_file)
    net = network.validate(description)
    return make_typed(net, description["types"])


# ----------------------------------------------------------------------------------------------------------------------
def typed_action_set(typed,
                     node) -> tuple:
    """
    Idle first, then every usable (target, type) pair of the node, ordered by target then type.
    """

    actions = [(head, source) for head in typed.net.out_neighbors[node] for source in typed.types
               if (node, head) in typed.masks[source]]
    return (learning.IDLE,) + tuple(actions)


# ======================================================================================================================
class TypedQueueState(object):
    """
    Per node, per type FIFO stores of packet birth times. counts[x, k] is the number of type k packets at node x (types
    indexed in source order); terminals never hold packets.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 typed,
                 learner_config,
                 seed,
                 record_ledger=True):
        net = typed.net
        self.typed = typed
        self.seed = seed
        self.t = 0
        self.counts = np.zeros((net.size, len(typed.types)), dtype=np.int64)
        self.stores = {(node, k): deque() for node in range(net.size) for k in range(len(typed.types))}

        arrival_seq, coin_seq, policy_seq = np.random.SeedSequence(seed).spawn(3)
        self.arrivals = simulator.BernoulliArrivals(net, np.random.default_rng(arrival_seq))
        self.coins = simulator.CoinStream(net, np.random.default_rng(coin_seq))

        self.learners = dict()
        self.learner_rngs = dict()
        children = policy_seq.spawn(learner_config.seed_offset + len(net.senders))
        for index, node in enumerate(net.senders):
            actions = typed_action_set(typed, node)
            probabilities = None
            if learner_config.algorithm is learning.Algorithm.FIXED:
                probabilities = learner_config.profile.get(node)
                if probabilities is None:
                    probabilities = np.zeros(len(actions))
                    probabilities[0] = 1.0
            stream = learner_config.seed_offset + index
            self.learners[node] = learning.Learner(learner_config.algorithm,
                                                   actions,
                                                   rate=learner_config.rate,
                                                   schedule=learner_config.schedule,
                                                   probabilities=probabilities,
                                                   stream=stream)
            self.learner_rngs[node] = np.random.default_rng(children[stream])

        self.sender_row = {node: row for row, node in enumerate(net.senders)}
        self.ledger = None
        if record_ledger:
            self.ledger = learning.RegretLedger(net.senders, [len(self.learners[node].targets) for node in net.senders])

        self.arrival_totals = np.zeros(len(typed.types), dtype=np.int64)
        self.departure_totals = np.zeros(len(typed.types), dtype=np.int64)
        self.coin_totals = np.zeros(net.size, dtype=np.int64)
        self.utility_totals = np.zeros(len(net.senders))
        self.coupling_checked = 0
        self.coupling_violations = 0
        self.conservation_violations = 0
        self.last_moves = tuple()
        self.block_total = 0

    # ------------------------------------------------------------------------------------------------------------------
    def lengths(self) -> list:
        return [int(value) for value in self.counts.sum(axis=1)]

    # ------------------------------------------------------------------------------------------------------------------
    def ages(self) -> list:
        output = list()
        for node in range(self.typed.net.size):
            births = [self.stores[(node, k)][0] for k in range(len(self.typed.types)) if self.stores[(node, k)]]
            output.append(self.t - min(births) if births else 0)
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def in_system(self) -> int:
        return int(self.counts.sum())


# ----------------------------------------------------------------------------------------------------------------------
def typed_phi_len(counts) -> int:
    """
    Half the sum over nodes and types of Q * (Q - 1).
    """

    counts = np.asarray(counts, dtype=np.int64)
    return int(np.sum(counts * (counts - 1)) // 2)


# ----------------------------------------------------------------------------------------------------------------------
def _offer_key(counts,
               sender,
               target,
               k):
    return -(int(counts[sender, k]) - int(counts[target, k])), sender, k


# ----------------------------------------------------------------------------------------------------------------------
def typed_counterfactuals(state,
                          offers,
                          coins,
                          counts) -> dict:
    """
    For every nonempty sender and each of its typed actions, the utility it would have earned had it made that offer
    while every other sender kept its own. Actions on a type the sender holds no packet of are worth nothing.

    :param state: The TypedQueueState.
    :param offers: Dict of sender -> (target, type index) for the realized offers.
    :param coins: The step's coins.
    :param counts: Start of step typed counts.

    :return: Dict of sender -> numpy array over its action set.
    """

    best = dict()
    runner_up = dict()
    for sender, (target, k) in offers.items():
        key = _offer_key(counts, sender, target, k)
        if target not in best or key < best[target]:
            if target in best:
                runner_up[target] = best[target]
            best[target] = key
        elif target not in runner_up or key < runner_up[target]:
            runner_up[target] = key

    typed = state.typed
    output = dict()
    for sender in typed.net.senders:
        if counts[sender].sum() == 0:
            continue
        learner = state.learners[sender]
        values = np.zeros(len(learner.targets))
        for index in range(1, len(learner.targets)):
            target, source = learner.targets[index]
            k = typed.type_index(source)
            if counts[sender, k] == 0 or not coins[target]:
                continue
            key = _offer_key(counts, sender, target, k)
            rival = best.get(target)
            if rival is not None and rival[1] == sender:
                rival = runner_up.get(target)
            if rival is None or key < rival:
                values[index] = int(counts[sender, k]) - int(counts[target, k])
        output[sender] = values
    return output


# ----------------------------------------------------------------------------------------------------------------------
def typed_step(state) -> TypedQueueState:
    """
    One step of the typed model.

    Phase I: every nonempty sender draws a (target, type) action. Actions on a type the sender holds none of, or whose
    target holds more packets of that type than the sender, are masked out. Phase II: each server takes the offer with
    the largest typed difference Q[x, i] - Q[y, i] (ties to the lowest sender, then the lowest type) and clears it when
    its coin comes up, paying the sender that difference. Arrivals of the sources' own types follow.

    :param state: The TypedQueueState, advanced in place.

    :return: The same state.
    """

    typed = state.typed
    net = typed.net
    t = state.t
    counts = state.counts.copy()
    lengths = state.lengths()
    coins = state.coins.draw()
    state.coin_totals += coins

    offers = dict()
    choices = dict()
    for sender in net.senders:
        if lengths[sender] == 0:
            continue
        learner = state.learners[sender]
        mask = [True]
        for target, source in learner.targets[1:]:
            k = typed.type_index(source)
            mask.append(bool(counts[sender, k] > 0 and counts[sender, k] >= counts[target, k]))
        action = learning.select_action(learner, state.learner_rngs[sender], np.array(mask))
        choices[sender] = action
        if action != 0:
            target, source = learner.targets[action]
            offers[sender] = (target, typed.type_index(source))

    winners = dict()
    for sender, (target, k) in offers.items():
        key = _offer_key(counts, sender, target, k)
        if target not in winners or key < winners[target][0]:
            winners[target] = (key, sender)

    realized = dict()
    moving = list()
    for target, (key, sender) in winners.items():
        if not coins[target]:
            continue
        k = offers[sender][1]
        realized[sender] = int(counts[sender, k]) - int(counts[target, k])
        moving.append((sender, target, k, state.stores[(sender, k)].popleft()))
        state.counts[sender, k] -= 1

    for sender, target, k, birth in moving:
        if net.out_neighbors[target]:
            state.stores[(target, k)].append(birth)
            state.counts[target, k] += 1
        else:
            state.departure_totals[k] += 1
    state.last_moves = tuple((sender, target, typed.types[k]) for sender, target, k, _ in moving)

    state.coupling_checked += 1
    if simulator.potential_coupling(counts.ravel(), state.counts.ravel(), sum(realized.values())) != 0:
        state.coupling_violations += 1

    for k, arrived in enumerate(state.arrivals.draw(t)):
        if arrived:
            source = typed.types[k]
            state.stores[(source, k)].append(t)
            state.counts[source, k] += 1
            state.arrival_totals[k] += 1

    if np.any(state.arrival_totals - state.departure_totals != state.counts.sum(axis=0)):
        state.conservation_violations += 1

    realized_row = np.zeros(len(net.senders))
    for sender, value in realized.items():
        realized_row[state.sender_row[sender]] = value
    state.utility_totals += realized_row

    outcomes = typed_counterfactuals(state, offers, coins, counts)
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
def typed_snapshot(state,
                   stride,
                   window) -> simulator.MetricsFrame:
    lengths = state.lengths()
    ages = state.ages()
    regrets = tuple()
    if state.ledger is not None and state.t >= window:
        regrets = tuple(float(value) for value in learning.record_window(state.ledger, state.t, window))
    frame = simulator.MetricsFrame(t=state.t,
                                   queue_lengths=tuple(lengths),
                                   ages=tuple(ages),
                                   phi_age=simulator.phi_age(state.typed.net, ages),
                                   phi_len=typed_phi_len(state.counts),
                                   mean_total=state.block_total / float(stride),
                                   utilities=tuple(float(value) for value in state.utility_totals),
                                   regrets=regrets,
                                   arrivals=tuple(int(value) for value in state.arrival_totals),
                                   coins=tuple(int(value) for value in state.coin_totals))
    state.block_total = 0
    return frame


# ----------------------------------------------------------------------------------------------------------------------
def typed_run(typed,
              learner_config,
              horizon,
              seed,
              window,
              stride=None,
              slope_tol=simulator.DEFAULT_SLOPE_TOL,
              record_ledger=True) -> simulator.RunResult:
    """
    Runs the typed model with one learner per sender over its typed action set.

    :param typed: A TypedNetworkSpec.
    :param learner_config: A simulator.LearnerConfig.
    :param horizon: Number of steps; at least 10 windows.
    :param seed: The run seed.
    :param window: The regret window.
    :param stride: Steps between frames. Defaults to the window.
    :param slope_tol: Growth threshold of the stability estimate.
    :param record_ledger: Whether to keep the regret ledger.

    :return: A simulator.RunResult whose state is the TypedQueueState.
    """

    if window < 1:
        raise ConfigError("The window must be at least one step.")
    if horizon < 10 * window:
        raise ConfigError("Horizon " + str(horizon) + " is shorter than 10 windows of " + str(window) + " steps.")
    stride = stride or window

    state = TypedQueueState(typed, learner_config, seed, record_ledger=record_ledger)
    frames = list()
    for _ in range(horizon):
        typed_step(state)
        if state.t % stride == 0:
            frames.append(typed_snapshot(state, stride, window))
        if state.t % simulator.PROGRESS_EVERY == 0:
            display.debug("typed seed " + str(seed) + ": t=" + str(state.t) + " in system=" + str(state.in_system()))

    if state.coupling_violations or state.conservation_violations:
        display.debug("Typed run: " + str(state.coupling_violations) + " coupling and " +
                      str(state.conservation_violations) + " conservation violations")
    estimate = simulator.estimate_stability(frames, slope_tol)
    return simulator.RunResult(frames, estimate, state, state.ledger)


# ----------------------------------------------------------------------------------------------------------------------
def typed_dual_check(typed,
                     beta,
                     alpha=None,
                     cap=stability.DEFAULT_PATH_CAP) -> stability.AssumptionCheck:
    """
    Checks the doubled-capacity condition of the typed model. Over all nonnegative weights it is decided by the typed
    path flow LP on rates scaled by (1 - beta) / 2: every type routes at least lambda_i + s along its own usable paths,
    and all types share the sender and server capacities

        sum over typed paths using (x, y) of f / mu_y  <= 1      for x in S1 and S2
        sum over typed paths entering y of f            <= mu_y   for y in S2 and S3

    With explicit weights (a dict keyed by (node, source)) it runs in witness mode: a max-weight matching on the split
    graph where edge (x, y) is worth the best type's (alpha[x, i] - alpha[y, i]) * mu_y, compared against
    sum_i alpha[i, i] * lambda_i.

    :param typed: A TypedNetworkSpec.
    :param beta: The slack constant.
    :param alpha: Optional typed node weights for witness mode.
    :param cap: The typed path cap.

    :return: An AssumptionCheck.
    """

    net = typed.net
    scaled = net.rates.copy()
    for node in net.servers:
        scaled[node] = 0.5 * (1.0 - beta) * net.rates[node]

    if alpha is not None:
        return _typed_witness(typed, alpha, scaled)

    paths = list()
    for source in typed.types:
        paths.extend(typed_paths(typed, source, cap))
        if len(paths) > cap:
            raise TooLarge("More than " + str(cap) + " typed paths.")

    senders = {node: index for index, node in enumerate(net.senders)}
    servers = {node: index for index, node in enumerate(net.servers)}
    sources = {node: index for index, node in enumerate(net.sources)}
    count = len(paths)
    rows = len(senders) + len(servers) + len(sources)
    offset_servers = len(senders)
    offset_sources = len(senders) + len(servers)

    c = np.zeros(count + 1)
    c[-1] = -1.0
    a_ub = np.zeros((rows, count + 1))
    b_ub = np.zeros(rows)
    for index, path in enumerate(paths):
        for tail, head in stability.path_edges(path):
            a_ub[senders[tail], index] += 1.0 / scaled[head]
            a_ub[offset_servers + servers[head], index] += 1.0
        a_ub[offset_sources + sources[path[0]], index] = -1.0
    b_ub[:len(senders)] = 1.0
    for node, index in servers.items():
        b_ub[offset_servers + index] = scaled[node]
    for node, index in sources.items():
        b_ub[offset_sources + index] = -scaled[node]
    a_ub[offset_sources:, -1] = 1.0
    bounds = [(0.0, None)] * count + [(None, None)]

    result = stability._solve_lp(c, a_ub, b_ub, bounds)
    slack = float(result.x[-1])
    display.debug("Typed flow LP: " + str(count) + " typed paths, s* = " + str(slack))
    return stability.AssumptionCheck(slack > stability.STRICTNESS_TOL, slack=slack)


# ----------------------------------------------------------------------------------------------------------------------
def _typed_witness(typed,
                   alpha,
                   scaled) -> stability.AssumptionCheck:
    net = typed.net
    for (node, source), value in alpha.items():
        if value < 0.0:
            raise ConfigError("Typed weights must be nonnegative.")
        if value != 0.0 and (node in net.terminals or (node in net.sources and node != source)):
            raise ConfigError("Typed weights must be zero on terminals and on sources of other types.")

    def weight(tail, head):
        best = 0.0
        for source in typed.types:
            if (tail, head) in typed.masks[source]:
                gain = (alpha.get((tail, source), 0.0) - alpha.get((head, source), 0.0)) * scaled[head]
                best = max(best, gain)
        return best

    graph = network.split(net)
    weights = graph.weight_matrix(weight)
    rows, cols = optimize.linear_sum_assignment(weights, maximize=True)
    pairs = [(row, col) for row, col in zip(rows, cols) if weights[row, col] > 0.0]
    edges = graph.decode(pairs)
    value = float(sum(weights[row, col] for row, col in pairs))
    threshold = float(sum(alpha.get((source, source), 0.0) * net.rates[source] for source in net.sources))
    witness = stability.DualWitness(edges, value, threshold)
    return stability.AssumptionCheck(witness.holds(), witness=witness)
