#!/usr/bin/env python3

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

import display
import network
import stability
from errors import NoStrictSlack, NotSubstochastic, SolverError

# Entries at or below this are treated as zero while peeling permutations off the padded matrix.
ZERO_TOL = 1e-12

# Allowed overshoot of a row or column sum above 1 (LP optima sit on the boundary, up to solver tolerance).
SUM_TOL = 1e-7

# Joins node names in the paths of a written policy.
PATH_SEPARATOR = "->"


# ======================================================================================================================
@dataclass(frozen=True)
class PolicyDistribution:
    """
    An executable centralized policy: a list of (component, probability) pairs. A component is a tuple of pairs with
    distinct first and distinct second entries; for network policies these are edges (tail id, head id), for a raw
    matrix decomposition they are (row, column) indices.
    """

    components: tuple

    # ------------------------------------------------------------------------------------------------------------------
    @property
    def probabilities(self) -> np.ndarray:
        return np.array([probability for _, probability in self.components], dtype=float)

    # ------------------------------------------------------------------------------------------------------------------
    def total(self) -> float:
        return float(self.probabilities.sum())

    # ------------------------------------------------------------------------------------------------------------------
    def sample(self,
               rng) -> tuple:
        """
        Draws one component.

        :param rng: A numpy Generator.

        :return: The component (a tuple of edges).
        """

        cumulative = np.cumsum(self.probabilities)
        index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        return self.components[min(index, len(self.components) - 1)][0]

    # ------------------------------------------------------------------------------------------------------------------
    def marginals(self) -> dict:
        output = dict()
        for component, probability in self.components:
            for edge in component:
                output[edge] = output.get(edge, 0.0) + probability
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def reconstruction_error(self,
                             target) -> float:
        """
        The largest absolute gap between the policy's edge marginals and a target.

        :param target: A FractionalRouting, a dict keyed by edge, or a 2D array (for matrix decompositions).

        :return: The max marginal error.
        """

        if isinstance(target, stability.FractionalRouting):
            target = target.z
        elif isinstance(target, np.ndarray):
            target = {(row, col): float(target[row, col]) for row, col in zip(*np.nonzero(target))}
        marginals = self.marginals()
        keys = set(marginals.keys()) | set(target.keys())
        if not keys:
            return 0.0
        return float(max(abs(marginals.get(key, 0.0) - target.get(key, 0.0)) for key in keys))

    # ------------------------------------------------------------------------------------------------------------------
    def as_paths(self) -> list:
        """
        :return: A list of (list of paths, probability) where each path is a list of node ids.
        """

        return [(network.chain_paths(component), probability) for component, probability in self.components]

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        output = list()
        for paths, probability in self.as_paths():
            output.append({"paths": [PATH_SEPARATOR.join(net.name_of(node) for node in path) for path in paths],
                           "probability": float(probability)})
        return {"components": output}


# ----------------------------------------------------------------------------------------------------------------------
def policy_from_dict(net,
                     document) -> PolicyDistribution:
    """
    Rebuilds a PolicyDistribution from its to_dict form, as read back from a decompose report.

    :param net: The network the policy was written for.
    :param document: A dict with a "components" list of {"paths": ["a->b->c", ...], "probability": p}.

    :return: A PolicyDistribution over network edges.
    """

    edge_set = set(net.edges)
    components = list()
    for component in document["components"]:
        edges = list()
        for path in component["paths"]:
            nodes = [net.id_of(name) for name in path.split(PATH_SEPARATOR)]
            edges.extend(zip(nodes[:-1], nodes[1:]))
        for edge in edges:
            if edge not in edge_set:
                raise NotSubstochastic("Policy uses " + net.name_of(edge[0]) + PATH_SEPARATOR + net.name_of(edge[1]) +
                                       ", which is not an edge.")
        if not network.is_vertex_disjoint(edges):
            raise NotSubstochastic("Policy component " + str(component["paths"]) + " is not vertex disjoint.")
        probability = float(component["probability"])
        if probability < 0.0:
            raise NotSubstochastic("Policy component has negative probability " + str(probability) + ".")
        components.append((tuple(sorted(edges)), probability))

    policy = PolicyDistribution(tuple(components))
    if not components or abs(policy.total() - 1.0) > SUM_TOL:
        raise NotSubstochastic("Policy probabilities sum to " + str(policy.total()) + ", not 1.")
    return policy


# ----------------------------------------------------------------------------------------------------------------------
def _check_substochastic(matrix):
    if matrix.ndim != 2 or not np.all(np.isfinite(matrix)):
        raise NotSubstochastic("Expected a finite 2D matrix.")
    if np.any(matrix < -SUM_TOL):
        raise NotSubstochastic("Matrix has negative entries.")
    row_sums = matrix.sum(axis=1)
    col_sums = matrix.sum(axis=0)
    if np.any(row_sums > 1.0 + SUM_TOL):
        raise NotSubstochastic("Row sum " + str(float(row_sums.max())) + " exceeds 1.")
    if np.any(col_sums > 1.0 + SUM_TOL):
        raise NotSubstochastic("Column sum " + str(float(col_sums.max())) + " exceeds 1.")


# ----------------------------------------------------------------------------------------------------------------------
def pad_doubly_stochastic(matrix) -> np.ndarray:
    """
    Embeds an n x m substochastic matrix P into the (n + m) square doubly stochastic matrix

        [ P               diag(1 - row sums) ]
        [ diag(1 - col)   P^T                ]

    :param matrix: The substochastic matrix.

    :return: The padded matrix.
    """

    n, m = matrix.shape
    row_slack = np.clip(1.0 - matrix.sum(axis=1), 0.0, None)
    col_slack = np.clip(1.0 - matrix.sum(axis=0), 0.0, None)
    output = np.zeros((n + m, n + m))
    output[:n, :m] = matrix
    output[:n, m:] = np.diag(row_slack)
    output[n:, :m] = np.diag(col_slack)
    output[n:, m:] = matrix.T
    return output


# ----------------------------------------------------------------------------------------------------------------------
def decompose_bvn(matrix) -> PolicyDistribution:
    """
    Birkhoff-von Neumann decomposition of a substochastic matrix. The matrix is padded to a doubly stochastic one, then
    a perfect matching on the support is extracted, weighted by its smallest entry, and subtracted, until nothing is
    left. Each component is read from the top-left block, so it is a (partial) matching of the original matrix.
    Identical components are merged.

    :param matrix: An n x m array with nonnegative entries and row and column sums at most 1.

    :return: A PolicyDistribution whose components are tuples of (row, column) pairs.
    """

    matrix = np.array(matrix, dtype=float)
    _check_substochastic(matrix)
    matrix = np.clip(matrix, 0.0, None)
    n, m = matrix.shape

    work = pad_doubly_stochastic(matrix)
    size = n + m
    remaining = 1.0
    merged = dict()
    order = list()

    while remaining > ZERO_TOL:
        support = sparse.csr_matrix(work > ZERO_TOL)
        perm = csgraph.maximum_bipartite_matching(support, perm_type="column")
        if np.any(perm < 0):
            if remaining > SUM_TOL:
                raise SolverError("No perfect matching left on the support with " + str(remaining) +
                                  " probability mass undecomposed.")
            break
        rows = np.arange(size)
        theta = float(work[rows, perm].min())
        work[rows, perm] -= theta
        work[work <= ZERO_TOL] = 0.0
        remaining -= theta

        component = tuple((int(row), int(perm[row])) for row in range(n) if perm[row] < m)
        if component not in merged:
            merged[component] = 0.0
            order.append(component)
        merged[component] += theta

    display.debug("Decomposed " + str(n) + "x" + str(m) + " matrix into " + str(len(order)) + " components")
    return PolicyDistribution(tuple((component, merged[component]) for component in order))


# ----------------------------------------------------------------------------------------------------------------------
def decompose_paths(net,
                    routing) -> PolicyDistribution:
    """
    Splits edge variables into a distribution over vertex-disjoint path sets whose edge marginals equal the routing.
    The routing is laid out on the split graph (senders as rows, servers as columns), which turns the capacity
    constraints into a substochastic matrix, and that matrix is decomposed.

    :param net: A validated NetworkSpec.
    :param routing: A FractionalRouting (or a dict keyed by edge).

    :return: A PolicyDistribution whose components are tuples of network edges.
    """

    if isinstance(routing, stability.FractionalRouting):
        routing = routing.z
    edge_set = set(net.edges)
    for edge, value in routing.items():
        if edge not in edge_set and value != 0.0:
            raise NotSubstochastic("Routing puts weight on " + str(edge) + ", which is not an edge.")

    graph = network.split(net)
    matrix = graph.weight_matrix(routing)
    raw = decompose_bvn(matrix)

    components = list()
    for pairs, probability in raw.components:
        edges = graph.decode(pairs)
        if not network.is_vertex_disjoint(edges):
            raise SolverError("Decomposition produced a component that is not vertex disjoint.")
        components.append((edges, probability))
    return PolicyDistribution(tuple(components))


# ----------------------------------------------------------------------------------------------------------------------
def decompose_bipartite(net,
                        routing) -> PolicyDistribution:
    """
    Decomposes a bipartite routing through its queue x server matrix and maps the components back to network edges.
    """

    view = network.bipartite_view(net)
    if isinstance(routing, dict):
        routing = stability.FractionalRouting(routing)
    raw = decompose_bvn(routing.matrix(view))
    components = list()
    for pairs, probability in raw.components:
        edges = tuple(sorted((view.queues[row], view.servers[col]) for row, col in pairs))
        components.append((edges, probability))
    return PolicyDistribution(tuple(components))


# ----------------------------------------------------------------------------------------------------------------------
def derive_policy(net,
                  cap=stability.DEFAULT_PATH_CAP):
    """
    Builds a centralized policy straight from a network: runs the feasibility check, turns its optimum into edge
    variables and decomposes them. Infeasible networks still get a policy, built from the LP optimum without the strict
    slack scaling, so that their growth can be simulated.

    :param net: A validated NetworkSpec.
    :param cap: The path enumeration cap.

    :return: A tuple (Verdict, FractionalRouting, PolicyDistribution).
    """

    if net.is_bipartite:
        verdict = stability.check_bipartite_centralized(net)
        routing = verdict.routing
        return verdict, routing, decompose_bipartite(net, routing)

    verdict = stability.check_dag_flow(net, cap=cap)
    try:
        routing = stability.flow_to_edge(net, verdict.flow)
    except NoStrictSlack:
        routing = stability.unscaled_routing(net, verdict.flow)
    return verdict, routing, decompose_paths(net, routing)
