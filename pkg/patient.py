#!/usr/bin/env python3

import itertools
from dataclasses import dataclass

import numpy as np

import display
import learning
import network
import simulator
import stability
from errors import EmptySet, SchemaError, TooManyQueues

F_TOL = 1e-9

# Subsets evaluated per vectorized batch.
SUBSET_CHUNK = 4096

DEFAULT_DENSITY = 21
DEFAULT_SAMPLES = 200
DEFAULT_ROUNDS = 50


# ======================================================================================================================
@dataclass(frozen=True)
class StrategyProfile:
    """
    Mixed strategies of the queues of a bipartite network, one row per queue (view row order) and one column per
    server. Rows sum to 1 and put no weight off the edge set.
    """

    view: network.BipartiteView
    matrix: np.ndarray

    # ------------------------------------------------------------------------------------------------------------------
    def row(self,
            queue) -> np.ndarray:
        return self.matrix[self.view.queue_index(queue)]

    # ------------------------------------------------------------------------------------------------------------------
    def replace(self,
                row,
                distribution):
        matrix = self.matrix.copy()
        matrix[row] = distribution
        return StrategyProfile(self.view, matrix)

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self) -> dict:
        net = self.view.net
        output = dict()
        for row, queue in enumerate(self.view.queues):
            output[net.name_of(queue)] = {net.name_of(server): float(self.matrix[row, col])
                                          for col, server in enumerate(self.view.servers) if self.matrix[row, col] > 0}
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def action_vectors(self) -> dict:
        """
        The profile as fixed learner probabilities over each queue's action set (idle first, never chosen).
        """

        output = dict()
        for row, queue in enumerate(self.view.queues):
            targets = learning.action_set(self.view.net, queue)
            output[queue] = np.array([0.0] + [self.matrix[row, self.view.server_index(target)]
                                              for target in targets[1:]])
        return output


# ----------------------------------------------------------------------------------------------------------------------
def make_profile(net,
                 rows) -> StrategyProfile:
    """
    Builds and validates a profile.

    :param net: A bipartite NetworkSpec.
    :param rows: Either an n x m array, or a dict mapping queue id to a dict of server id -> probability.

    :return: A StrategyProfile.
    """

    view = network.bipartite_view(net)
    if isinstance(rows, dict):
        matrix = np.zeros((view.n, view.m))
        for queue, distribution in rows.items():
            for server, probability in distribution.items():
                if queue not in view.queues or server not in view.servers:
                    raise SchemaError("Profile entry " + str((queue, server)) + " is not a queue/server pair.")
                matrix[view.queue_index(queue), view.server_index(server)] = probability
    else:
        matrix = np.array(rows, dtype=float)

    if matrix.shape != (view.n, view.m):
        raise SchemaError("Profile must be " + str(view.n) + "x" + str(view.m) + ".")
    if np.any(matrix < 0):
        raise SchemaError("Profile has negative probabilities.")
    if np.any((matrix > 0) & ~view.adjacency):
        raise SchemaError("Profile puts weight on a server a queue is not connected to.")
    sums = matrix.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-12):
        raise SchemaError("Every queue's strategy must sum to 1, got " + str(sums.tolist()))
    return StrategyProfile(view, matrix)


# ----------------------------------------------------------------------------------------------------------------------
def uniform_profile(net) -> StrategyProfile:
    view = network.bipartite_view(net)
    matrix = view.adjacency / view.adjacency.sum(axis=1, keepdims=True)
    return StrategyProfile(view, matrix)


# ======================================================================================================================
@dataclass(frozen=True)
class CostReport:
    """
    Output of the cost algorithm: the groups extracted round by round (as queue ids), their f values, the aging rate of
    every queue and the residual server rates after each round.
    """

    groups: tuple
    f_values: tuple
    rates: dict
    residuals: tuple
    terminated: bool

    # ------------------------------------------------------------------------------------------------------------------
    def rate_vector(self,
                    view) -> np.ndarray:
        return np.array([self.rates[queue] for queue in view.queues])

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        return {"groups": [[net.name_of(queue) for queue in group] for group in self.groups],
                "f_values": [float(value) for value in self.f_values],
                "rates": {net.name_of(queue): float(rate) for queue, rate in sorted(self.rates.items())},
                "residuals": [[float(value) for value in residual] for residual in self.residuals],
                "terminated": self.terminated}


# ----------------------------------------------------------------------------------------------------------------------
def f_value(queues,
            profile,
            net,
            residual=None) -> float:
    """
    f(Q) = sum_j mu_j (1 - prod_{i in Q} (1 - p_ij)) / sum_{i in Q} lambda_i: the rate at which the servers can be
    reached by at least one queue of Q, per unit of Q's load.

    :param queues: An iterable of queue ids.
    :param profile: A StrategyProfile.
    :param net: The network.
    :param residual: The current server rates (one per view column). Defaults to the network's.

    :return: The value of f.
    """

    view = profile.view
    rows = [view.queue_index(queue) for queue in queues]
    if not rows:
        raise EmptySet("f is undefined on the empty set.")
    mu = view.mu if residual is None else np.asarray(residual, dtype=float)
    missed = np.prod(1.0 - profile.matrix[rows], axis=0)
    return float(np.sum(mu * (1.0 - missed)) / np.sum(view.lam[rows]))


# ----------------------------------------------------------------------------------------------------------------------
def _subset_values(rows,
                   profile,
                   residual):
    """
    Evaluates f on every nonempty subset of `rows`, in chunks.

    :return: A tuple (masks, values) where masks is a boolean array (subsets x len(rows)).
    """

    k = len(rows)
    p = profile.matrix[rows]
    lam = profile.view.lam[rows]
    bits = np.arange(k)
    all_masks = list()
    all_values = list()
    total = 2 ** k
    for start in range(1, total, SUBSET_CHUNK):
        ints = np.arange(start, min(start + SUBSET_CHUNK, total))
        masks = ((ints[:, None] >> bits) & 1).astype(bool)
        factors = np.where(masks[:, :, None], 1.0 - p[None, :, :], 1.0)
        missed = np.prod(factors, axis=1)
        served = (residual[None, :] * (1.0 - missed)).sum(axis=1)
        load = masks.astype(float) @ lam
        all_masks.append(masks)
        all_values.append(served / load)
    return np.concatenate(all_masks), np.concatenate(all_values)


# ----------------------------------------------------------------------------------------------------------------------
def compute_costs(profile,
                  net) -> CostReport:
    """
    The cost algorithm. Each round takes the subset of remaining queues minimizing f against the residual rates. Tight
    sets are closed under union, so the union of all minimizers (within F_TOL) is taken, which is also the largest one.
    If its f is at least 1 every remaining queue gets rate 0 and the loop stops; otherwise its queues age at rate
    1 - f, the servers' rates are reduced by the share those queues claim, and the loop continues on the rest.

    :param profile: A StrategyProfile.
    :param net: The bipartite network.

    :return: A CostReport.
    """

    view = profile.view
    if view.n > stability.ENUMERATION_LIMIT:
        raise TooManyQueues(str(view.n) + " queues is beyond the enumeration bound of " +
                            str(stability.ENUMERATION_LIMIT) + ".")

    residual = view.mu.copy()
    remaining = list(range(view.n))
    groups = list()
    f_values = list()
    residuals = list()
    rates = dict()
    terminated = False

    while remaining:
        masks, values = _subset_values(remaining, profile, residual)
        lowest = float(values.min())
        minimizers = masks[values <= lowest + F_TOL]
        union = minimizers.any(axis=0)
        chosen = [remaining[index] for index in np.flatnonzero(union)]
        union_value = f_value([view.queues[row] for row in chosen], profile, net, residual)
        if union_value > lowest + F_TOL:
            largest = minimizers[np.argmax(minimizers.sum(axis=1))]
            chosen = [remaining[index] for index in np.flatnonzero(largest)]
            display.debug("Union of minimizers is not tight; using the largest minimizer instead.")
            union_value = lowest

        if union_value >= 1.0 - F_TOL:
            for row in remaining:
                rates[view.queues[row]] = 0.0
            groups.append(tuple(view.queues[row] for row in remaining))
            f_values.append(union_value)
            terminated = True
            break

        for row in chosen:
            rates[view.queues[row]] = 1.0 - union_value
        residual = residual * np.prod(1.0 - profile.matrix[chosen], axis=0)
        groups.append(tuple(view.queues[row] for row in chosen))
        f_values.append(union_value)
        residuals.append(residual.copy())
        remaining = [row for row in remaining if row not in chosen]

    return CostReport(tuple(groups), tuple(f_values), rates, tuple(residuals), terminated)


# ----------------------------------------------------------------------------------------------------------------------
def check_stability_nash(profile,
                         net) -> bool:
    """
    Whether the first group's f clears 1 by more than F_TOL, which makes every queue's aging rate zero with room to
    spare.
    """

    report = compute_costs(profile, net)
    return bool(report.f_values[0] > 1.0 + F_TOL)


# ----------------------------------------------------------------------------------------------------------------------
def candidate_strategies(size,
                         density=DEFAULT_DENSITY,
                         samples=DEFAULT_SAMPLES,
                         rng=None) -> list:
    """
    The deviations tried for a queue with `size` servers: every pure strategy, then a grid of `density` points along
    the simplex for two servers, or `samples` Dirichlet draws for more.

    :return: A list of probability vectors.
    """

    output = [np.eye(size)[index] for index in range(size)]
    if size == 2:
        for point in np.linspace(0.0, 1.0, density):
            output.append(np.array([point, 1.0 - point]))
    elif size > 2:
        rng = rng if rng is not None else np.random.default_rng(0)
        output.extend(rng.dirichlet(np.ones(size), samples))
    return output


# ----------------------------------------------------------------------------------------------------------------------
def _expand(view,
            row,
            strategy):
    output = np.zeros(view.m)
    output[np.flatnonzero(view.adjacency[row])] = strategy
    return output


# ======================================================================================================================
@dataclass(frozen=True)
class NashVerdict:
    """
    `violated` is True when some deviation lowers a queue's aging rate by more than F_TOL. `queue`, `deviation` and
    `improvement` describe the largest reduction found (the deviation is over all servers, view column order).
    """

    violated: bool
    queue: int
    deviation: np.ndarray
    improvement: float

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        output = {"violated": self.violated, "improvement": float(self.improvement)}
        if self.violated:
            view = network.bipartite_view(net)
            output["queue"] = net.name_of(self.queue)
            output["deviation"] = {net.name_of(server): float(self.deviation[col])
                                   for col, server in enumerate(view.servers) if self.deviation[col] > 0}
        else:
            output["message"] = "no violation found at this density"
        return output


# ----------------------------------------------------------------------------------------------------------------------
def verify_nash(profile,
                net,
                density=DEFAULT_DENSITY,
                samples=DEFAULT_SAMPLES,
                seed=0) -> NashVerdict:
    """
    Searches for a profitable unilateral deviation. For each queue, every candidate strategy is scored by the aging
    rate the queue would get from the cost algorithm with the other queues fixed. This can only falsify.

    :param profile: A StrategyProfile.
    :param net: The bipartite network.
    :param density: Grid points along the simplex for two-server queues.
    :param samples: Dirichlet draws for queues with more servers.
    :param seed: Seed of the Dirichlet sampler.

    :return: A NashVerdict.
    """

    view = profile.view
    rng = np.random.default_rng(seed)
    baseline = compute_costs(profile, net).rates
    best = NashVerdict(False, None, None, 0.0)

    for row, queue in enumerate(view.queues):
        size = int(view.adjacency[row].sum())
        for strategy in candidate_strategies(size, density, samples, rng):
            deviation = _expand(view, row, strategy)
            rate = compute_costs(profile.replace(row, deviation), net).rates[queue]
            improvement = baseline[queue] - rate
            if improvement > best.improvement:
                best = NashVerdict(improvement > F_TOL, queue, deviation, improvement)

    display.debug("Nash search: largest improvement " + str(best.improvement))
    return best


# ----------------------------------------------------------------------------------------------------------------------
def check_theorem54_condition(net) -> stability.AssumptionCheck:
    """
    For every alpha in {0,1}^n (other than zero) there must be a matching with half of alpha^T M mu above
    alpha^T lambda. Under this condition every Nash equilibrium of the patient game is stable.

    :param net: A bipartite NetworkSpec.

    :return: An AssumptionCheck with the first failing alpha.
    """

    view = network.bipartite_view(net)
    if view.n > stability.ENUMERATION_LIMIT:
        raise TooManyQueues(str(view.n) + " queues is beyond the enumeration bound of " +
                            str(stability.ENUMERATION_LIMIT) + ".")
    for alpha in itertools.product((0, 1), repeat=view.n):
        if not any(alpha):
            continue
        witness = stability.best_matching(net, alpha)
        if not witness.holds(0.5):
            return stability.AssumptionCheck(False, failing=alpha, witness=witness)
    return stability.AssumptionCheck(True)


# ======================================================================================================================
@dataclass(frozen=True)
class DynamicsResult:
    trace: tuple
    converged: bool
    verdict: NashVerdict


# ----------------------------------------------------------------------------------------------------------------------
def best_response_dynamics(net,
                           init,
                           rounds=DEFAULT_ROUNDS,
                           density=DEFAULT_DENSITY,
                           samples=DEFAULT_SAMPLES,
                           seed=0) -> DynamicsResult:
    """
    Round-robin best responses: each queue in turn switches to the candidate strategy with the lowest aging rate against
    the others, when that beats its current rate by more than F_TOL (ties go to the earliest candidate, pure strategies
    first). Stops after a round with no switch or after `rounds` rounds.

    :param net: The bipartite network.
    :param init: The starting StrategyProfile.
    :param rounds: Round cap.
    :param density: Grid density for two-server queues.
    :param samples: Dirichlet draws for larger queues.
    :param seed: Sampler seed.

    :return: A DynamicsResult with one profile per round (the initial profile first).
    """

    view = init.view
    rng = np.random.default_rng(seed)
    profile = init
    trace = [profile]
    converged = False

    for round_index in range(rounds):
        changed = False
        for row, queue in enumerate(view.queues):
            current = compute_costs(profile, net).rates[queue]
            size = int(view.adjacency[row].sum())
            best_rate = current
            best_profile = None
            for strategy in candidate_strategies(size, density, samples, rng):
                candidate = profile.replace(row, _expand(view, row, strategy))
                rate = compute_costs(candidate, net).rates[queue]
                if rate < best_rate - F_TOL:
                    best_rate = rate
                    best_profile = candidate
            if best_profile is not None:
                profile = best_profile
                changed = True
        trace.append(profile)
        display.debug("Best response round " + str(round_index + 1) + (": changed" if changed else ": fixed point"))
        if not changed:
            converged = True
            break

    verdict = verify_nash(profile, net, density, samples, seed)
    return DynamicsResult(tuple(trace), converged, verdict)


# ----------------------------------------------------------------------------------------------------------------------
def simulate_aging(net,
                   profile,
                   horizon,
                   seed,
                   window=None) -> dict:
    """
    Plays a fixed profile in the simulator (unit utilities, oldest packet first) and returns the empirical aging rate
    T_t / t of every queue at the horizon.

    :return: A dict of queue id -> T_t / t.
    """

    config = simulator.LearnerConfig(algorithm=learning.Algorithm.FIXED, profile=profile.action_vectors())
    policy = simulator.DecentralizedPolicy(config, simulator.PriorityRule.OLDEST_PACKET, simulator.UtilityModel.UNIT)
    window = window or max(1, horizon // 100)
    result = simulator.run(net, policy, horizon, seed, window, record_ledger=False)
    ages = result.state.ages()
    return {queue: ages[queue] / float(result.state.t) for queue in profile.view.queues}
