#!/usr/bin/env python3

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

import display
import network
from errors import NoStrictSlack, NotCompleteBipartite, PathExplosion, SolverError, TooLarge, TooManyQueues

# Strict inequalities are decided by maximizing a slack variable and comparing it against this margin.
STRICTNESS_TOL = 1e-7

# Tolerance for the capacity, conservation and marginal checks on LP solutions.
FLOW_TOL = 1e-9

# Upper bound on the number of source to terminal paths enumerated before giving up. Overridden by QNET_PATH_CAP.
DEFAULT_PATH_CAP = 10 ** 6

# Largest queue count for which {0,1}^n weight vectors are enumerated.
ENUMERATION_LIMIT = 25

# Largest edge count for the exhaustive path set oracle.
BRUTE_FORCE_EDGE_LIMIT = 20


# ======================================================================================================================
@dataclass(frozen=True)
class FractionalRouting:
    """
    Edge variables z_ij in [0, 1]. In a bipartite network this is the fractional matching matrix P.
    """

    z: dict

    # ------------------------------------------------------------------------------------------------------------------
    def value(self,
              tail,
              head) -> float:
        return self.z.get((tail, head), 0.0)

    # ------------------------------------------------------------------------------------------------------------------
    def out_sums(self,
                 net) -> np.ndarray:
        output = np.zeros(net.size)
        for (tail, head), value in self.z.items():
            output[tail] += value
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def in_sums(self,
                net) -> np.ndarray:
        output = np.zeros(net.size)
        for (tail, head), value in self.z.items():
            output[head] += value
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def matrix(self,
               view) -> np.ndarray:
        """
        The queue x server matrix of a bipartite routing.

        :param view: The BipartiteView of the network.

        :return: An n x m array.
        """

        output = np.zeros((view.n, view.m))
        for (tail, head), value in self.z.items():
            output[view.queue_index(tail), view.server_index(head)] = value
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        return {net.name_of(tail) + " " + net.name_of(head): value for (tail, head), value in sorted(self.z.items())}


# ======================================================================================================================
@dataclass(frozen=True)
class PathFlow:
    """
    Flow f on every source to terminal path. Each path is a tuple of node ids; the source is its first node, so flow on
    a path can only ever belong to that source.
    """

    paths: tuple
    values: np.ndarray
    slack: float = 0.0

    # ------------------------------------------------------------------------------------------------------------------
    def source_totals(self,
                      net) -> np.ndarray:
        output = np.zeros(net.size)
        for path, value in zip(self.paths, self.values):
            output[path[0]] += value
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def edge_flows(self) -> dict:
        output = dict()
        for path, value in zip(self.paths, self.values):
            for edge in path_edges(path):
                output[edge] = output.get(edge, 0.0) + value
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def conservation_error(self,
                           net) -> float:
        """
        The largest imbalance between inflow and outflow over the middle servers.
        """

        inflow = np.zeros(net.size)
        outflow = np.zeros(net.size)
        for (tail, head), value in self.edge_flows().items():
            outflow[tail] += value
            inflow[head] += value
        if not net.middle:
            return 0.0
        middle = list(net.middle)
        return float(np.max(np.abs(inflow[middle] - outflow[middle])))

    # ------------------------------------------------------------------------------------------------------------------
    def capacity_margin(self,
                        net,
                        mu=None) -> float:
        """
        The smallest slack over the per-sender service constraint (sum of f/mu_y over out-edges at most 1) and the
        per-server inflow constraint (inflow at most mu_x). Negative means a violation.
        """

        rates = net.rates if mu is None else np.asarray(mu, dtype=float)
        usage = np.zeros(net.size)
        inflow = np.zeros(net.size)
        for (tail, head), value in self.edge_flows().items():
            usage[tail] += value / rates[head]
            inflow[head] += value
        margins = [1.0 - usage[x] for x in net.senders]
        margins.extend(rates[y] - inflow[y] for y in net.servers)
        return float(min(margins))

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        return {"->".join(net.name_of(node) for node in path): float(value)
                for path, value in zip(self.paths, self.values) if value > FLOW_TOL}


# ======================================================================================================================
@dataclass(frozen=True)
class DualWitness:
    """
    A matching or vertex-disjoint path set together with its weighted value and the arrival threshold it is compared
    against.
    """

    edges: tuple
    value: float
    threshold: float

    # ------------------------------------------------------------------------------------------------------------------
    def holds(self,
              scale=1.0) -> bool:
        return scale * self.value > self.threshold

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        return {"edges": [[net.name_of(tail), net.name_of(head)] for tail, head in self.edges],
                "value": float(self.value),
                "threshold": float(self.threshold)}


# ======================================================================================================================
@dataclass(frozen=True)
class Verdict:
    """
    Result of a centralized feasibility check. Feasible verdicts carry the routing (bipartite) or path flow (DAG);
    infeasible bipartite verdicts carry the Farkas certificate alpha, one weight per queue in the view's row order.
    """

    feasible: bool
    slack: float
    routing: FractionalRouting = None
    flow: PathFlow = None
    certificate: np.ndarray = None

    # ------------------------------------------------------------------------------------------------------------------
    def __bool__(self):
        return self.feasible

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        output = dict()
        output["feasible"] = self.feasible
        output["slack"] = float(self.slack)
        if self.routing is not None:
            output["routing"] = self.routing.to_dict(net)
        if self.flow is not None:
            output["flow"] = self.flow.to_dict(net)
        if self.certificate is not None:
            output["certificate"] = {net.name_of(queue): float(value)
                                     for queue, value in zip(net.sources, self.certificate)}
        return output


# ======================================================================================================================
@dataclass(frozen=True)
class AssumptionCheck:
    """
    Outcome of one of the sufficient-condition checkers. `failing` names what broke the condition: a 0/1 weight vector
    for the enumeration checkers, the prefix length k for the sorted-rate checker.
    """

    holds: bool
    failing: object = None
    slack: float = None
    witness: DualWitness = None
    detail: dict = field(default_factory=dict)

    # ------------------------------------------------------------------------------------------------------------------
    def __bool__(self):
        return self.holds

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net=None) -> dict:
        output = {"holds": self.holds}
        if self.failing is not None:
            output["failing"] = list(self.failing) if isinstance(self.failing, tuple) else self.failing
        if self.slack is not None:
            output["slack"] = float(self.slack)
        if self.witness is not None and net is not None:
            output["witness"] = self.witness.to_dict(net)
        output.update(self.detail)
        return output


# ======================================================================================================================
@dataclass(frozen=True)
class EdgeConditionReport:
    """
    Margins of the edge-variable system. Each dict maps a node id to lhs - rhs of its constraint. The arrival and
    middle-server constraints are strict, the capacity constraints are not.
    """

    arrival: dict
    middle: dict
    sender_capacity: dict
    server_capacity: dict
    min_value: float
    off_edge: float

    # ------------------------------------------------------------------------------------------------------------------
    def holds(self,
              margin=0.0) -> bool:
        if any(value <= margin for value in self.arrival.values()):
            return False
        if any(value <= margin for value in self.middle.values()):
            return False
        if any(value < -FLOW_TOL for value in self.sender_capacity.values()):
            return False
        if any(value < -FLOW_TOL for value in self.server_capacity.values()):
            return False
        return self.min_value >= -FLOW_TOL and self.off_edge == 0.0


# ----------------------------------------------------------------------------------------------------------------------
def _solve_lp(c,
              a_ub,
              b_ub,
              bounds,
              a_eq=None,
              b_eq=None):
    """
    Runs linprog with HiGHS and insists on an optimal status.

    :return: The scipy OptimizeResult.
    """

    result = optimize.linprog(c,
                              A_ub=a_ub,
                              b_ub=b_ub,
                              A_eq=a_eq,
                              b_eq=b_eq,
                              bounds=bounds,
                              method="highs")
    if result.status != 0:
        raise SolverError("LP solver did not reach an optimum (status " + str(result.status) + "): " + result.message)
    return result


# ----------------------------------------------------------------------------------------------------------------------
def _server_rates(view,
                  mu):
    if mu is None:
        return view.mu
    mu = np.asarray(mu, dtype=float)
    if len(mu) == view.net.size:
        return mu[list(view.servers)]
    return mu


# ----------------------------------------------------------------------------------------------------------------------
def check_bipartite_centralized(net,
                                mu=None) -> Verdict:
    """
    Decides whether a bipartite network can be stabilized by a centralized scheduler: is there a fractional matching
    matrix P with row and column sums at most 1 such that P mu > lambda entrywise. Solved as "maximize s subject to
    (P mu)_i >= lambda_i + s"; the verdict is feasible when s* clears STRICTNESS_TOL. When it does not, the Farkas
    certificate is read off the dual.

    :param net: A bipartite NetworkSpec.
    :param mu: Optional server rates replacing the network's own, either one per server column or one per node id.

    :return: A Verdict.
    """

    view = network.bipartite_view(net)
    mu = _server_rates(view, mu)
    edges = [(row, col) for row in range(view.n) for col in range(view.m) if view.adjacency[row, col]]
    count = len(edges)

    # Variables: one P entry per edge, then s.
    c = np.zeros(count + 1)
    c[-1] = -1.0
    a_ub = np.zeros((2 * view.n + view.m, count + 1))
    b_ub = np.zeros(2 * view.n + view.m)
    for index, (row, col) in enumerate(edges):
        a_ub[row, index] = -mu[col]
        a_ub[view.n + row, index] = 1.0
        a_ub[2 * view.n + col, index] = 1.0
    a_ub[:view.n, -1] = 1.0
    b_ub[:view.n] = -view.lam
    b_ub[view.n:] = 1.0
    bounds = [(0.0, 1.0)] * count + [(None, None)]

    result = _solve_lp(c, a_ub, b_ub, bounds)
    slack = float(result.x[-1])
    display.debug("Bipartite centralized LP on " + (net.name or "network") + ": s* = " + str(slack))

    # The optimal P is a valid fractional matching either way; infeasible verdicts keep it for simulation.
    z = {(view.queues[row], view.servers[col]): float(result.x[index])
         for index, (row, col) in enumerate(edges) if result.x[index] > 0.0}
    if slack > STRICTNESS_TOL:
        return Verdict(True, slack, routing=FractionalRouting(z))

    alpha, dual_value = farkas_certificate(view, mu)
    return Verdict(False, dual_value, routing=FractionalRouting(z), certificate=alpha)


# ----------------------------------------------------------------------------------------------------------------------
def farkas_certificate(view,
                       mu=None):
    """
    Solves the dual of the bipartite slack LP:

        minimize   -sum_i y_i lambda_i + sum_i u_i + sum_j v_j
        subject to sum_i y_i = 1
                   y_i mu_j - u_i - v_j <= 0   for every edge (i, j)
                   y, u, v >= 0

    Its optimum equals s*, and every matching M satisfies y^T M mu <= y^T lambda + s*. With s* <= STRICTNESS_TOL the
    vector y is therefore a certificate of infeasibility.

    :param view: The BipartiteView.
    :param mu: Optional replacement server rates (one per column).

    :return: A tuple (alpha, dual optimum).
    """

    mu = _server_rates(view, mu)
    n = view.n
    m = view.m
    edges = [(row, col) for row in range(n) for col in range(m) if view.adjacency[row, col]]

    # Variables: y (n), u (n), v (m).
    c = np.concatenate([-view.lam, np.ones(n), np.ones(m)])
    a_ub = np.zeros((len(edges), 2 * n + m))
    for index, (row, col) in enumerate(edges):
        a_ub[index, row] = mu[col]
        a_ub[index, n + row] = -1.0
        a_ub[index, 2 * n + col] = -1.0
    b_ub = np.zeros(len(edges))
    a_eq = np.zeros((1, 2 * n + m))
    a_eq[0, :n] = 1.0
    bounds = [(0.0, None)] * (2 * n + m)

    result = _solve_lp(c, a_ub if len(edges) else None, b_ub if len(edges) else None, bounds, a_eq, np.ones(1))
    alpha = np.clip(result.x[:n], 0.0, None)
    return alpha, float(result.fun)


# ----------------------------------------------------------------------------------------------------------------------
def enumerate_matchings(view) -> list:
    """
    Lists every matching (including the empty one) of a bipartite view. Exponential; for oracles on small instances.

    :param view: The BipartiteView.

    :return: A list of tuples of (row, column) pairs.
    """

    output = list()

    def extend(row, used, current):
        if row == view.n:
            output.append(tuple(current))
            return
        extend(row + 1, used, current)
        for col in range(view.m):
            if view.adjacency[row, col] and col not in used:
                extend(row + 1, used | {col}, current + [(row, col)])

    extend(0, frozenset(), [])
    return output


# ----------------------------------------------------------------------------------------------------------------------
def farkas_certificate_holds(net,
                             alpha,
                             tol=STRICTNESS_TOL) -> bool:
    """
    Checks a certificate by brute force: alpha^T M mu <= alpha^T lambda + tol for every matching M.

    :param net: A bipartite NetworkSpec.
    :param alpha: One nonnegative weight per queue.
    :param tol: The allowed excess.

    :return: True if no matching beats the threshold.
    """

    view = network.bipartite_view(net)
    alpha = np.asarray(alpha, dtype=float)
    threshold = float(alpha @ view.lam)
    for matching in enumerate_matchings(view):
        value = sum(alpha[row] * view.mu[col] for row, col in matching)
        if value > threshold + tol:
            return False
    return True


# ----------------------------------------------------------------------------------------------------------------------
def brute_force_bipartite_slack(net) -> float:
    """
    Oracle for check_bipartite_centralized. Maximizes min_i ((P mu)_i - lambda_i) over convex combinations of the
    extreme points of the matching polytope, which are the (partial) matching matrices.

    :param net: A bipartite NetworkSpec.

    :return: The optimal slack.
    """

    view = network.bipartite_view(net)
    matchings = enumerate_matchings(view)
    service = np.zeros((view.n, len(matchings)))
    for index, matching in enumerate(matchings):
        for row, col in matching:
            service[row, index] = view.mu[col]

    # Variables: one weight per matching, then s.
    count = len(matchings)
    c = np.zeros(count + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-service, np.ones((view.n, 1))])
    b_ub = -view.lam
    a_eq = np.zeros((1, count + 1))
    a_eq[0, :count] = 1.0
    bounds = [(0.0, None)] * count + [(None, None)]
    result = _solve_lp(c, a_ub, b_ub, bounds, a_eq, np.ones(1))
    return float(result.x[-1])


# ----------------------------------------------------------------------------------------------------------------------
def path_edges(path) -> list:
    return list(zip(path[:-1], path[1:]))


# ----------------------------------------------------------------------------------------------------------------------
def enumerate_paths(net,
                    cap=DEFAULT_PATH_CAP) -> tuple:
    """
    Lists every source to terminal path by depth first search from each source, visiting out-neighbors in id order, so
    the result is in lexicographic order of node id sequences.

    :param net: A validated NetworkSpec.
    :param cap: The most paths allowed before PathExplosion is raised.

    :return: A tuple of paths, each a tuple of node ids.
    """

    output = list()
    stack = list()
    for source in net.sources:
        stack.append((source,))
        while stack:
            path = stack.pop()
            tail = path[-1]
            if not net.out_neighbors[tail]:
                output.append(path)
                if len(output) > cap:
                    raise PathExplosion("More than " + str(cap) + " source to terminal paths in " +
                                        (net.name or "network") + ".")
                continue
            for head in reversed(net.out_neighbors[tail]):
                stack.append(path + (head,))

    display.debug("Enumerated " + str(len(output)) + " paths")
    return tuple(output)


# ----------------------------------------------------------------------------------------------------------------------
def check_dag_flow(net,
                   mu=None,
                   cap=DEFAULT_PATH_CAP) -> Verdict:
    """
    Decides centralized stabilizability of a DAG network through the path flow system:

        maximize s
        subject to  sum over paths using (x, y) of f / mu_y  <= 1        for x in S1 and S2
                    sum over paths entering x of f           <= mu_x     for x in S2 and S3
                    sum over paths from source i of f        >= lambda_i + s
                    f >= 0

    Conservation at middle servers holds by construction since flow lives on whole paths.

    :param net: A validated NetworkSpec.
    :param mu: Optional per-node rate vector replacing the processing rates (used for scaled instances).
    :param cap: The path enumeration cap.

    :return: A Verdict carrying the PathFlow at the optimum.
    """

    rates = net.rates if mu is None else np.asarray(mu, dtype=float)
    paths = enumerate_paths(net, cap)
    count = len(paths)
    senders = {node: index for index, node in enumerate(net.senders)}
    servers = {node: index for index, node in enumerate(net.servers)}
    sources = {node: index for index, node in enumerate(net.sources)}
    rows = len(senders) + len(servers) + len(sources)

    c = np.zeros(count + 1)
    c[-1] = -1.0
    a_ub = np.zeros((rows, count + 1))
    b_ub = np.zeros(rows)
    offset_servers = len(senders)
    offset_sources = len(senders) + len(servers)
    for index, path in enumerate(paths):
        for tail, head in path_edges(path):
            a_ub[senders[tail], index] += 1.0 / rates[head]
            a_ub[offset_servers + servers[head], index] += 1.0
        a_ub[offset_sources + sources[path[0]], index] = -1.0
    b_ub[:len(senders)] = 1.0
    for node, index in servers.items():
        b_ub[offset_servers + index] = rates[node]
    for node, index in sources.items():
        b_ub[offset_sources + index] = -rates[node]
    a_ub[offset_sources:, -1] = 1.0
    bounds = [(0.0, None)] * count + [(None, None)]

    result = _solve_lp(c, a_ub, b_ub, bounds)
    slack = float(result.x[-1])
    # LP dust is zeroed per path so edge flows stay conserved.
    values = np.where(result.x[:count] > FLOW_TOL, result.x[:count], 0.0)
    flow = PathFlow(paths, values, slack)
    display.debug("DAG flow LP on " + (net.name or "network") + ": " + str(count) + " paths, s* = " + str(slack))
    return Verdict(slack > STRICTNESS_TOL, slack, flow=flow)


# ----------------------------------------------------------------------------------------------------------------------
def flow_to_edge(net,
                 flow,
                 mu=None) -> FractionalRouting:
    """
    Converts a strictly feasible path flow into edge variables. First z1_xy = (flow on (x, y)) / mu_y, then with
    gamma = min_i (flow out of source i) / lambda_i and servers numbered 1..m in topological order (sources 0), every
    edge out of x is scaled by gamma ** ((t(x) + 1) / (m + 1) - 1). Later nodes are scaled down less, which turns
    conservation at a middle server into a strict surplus of outflow over inflow.

    :param net: A validated NetworkSpec.
    :param flow: A PathFlow with strict slack.
    :param mu: Optional per-node rate vector the flow was solved against.

    :return: A FractionalRouting.
    """

    rates = net.rates if mu is None else np.asarray(mu, dtype=float)
    totals = flow.source_totals(net)
    gamma = min(totals[source] / rates[source] for source in net.sources)
    if gamma <= 1.0 + 1e-12:
        raise NoStrictSlack("Path flow has no strict slack (gamma = " + str(gamma) + ").")

    servers = set(net.servers)
    order = [node for node in net.topological_order if node in servers]
    position = {node: index + 1 for index, node in enumerate(order)}
    m = len(order)

    z = dict()
    for (tail, head), value in unscaled_routing(net, flow, mu=mu).z.items():
        exponent = (position.get(tail, 0) + 1) / (m + 1) - 1.0
        z[(tail, head)] = value * gamma ** exponent
    return FractionalRouting(z)


# ----------------------------------------------------------------------------------------------------------------------
def unscaled_routing(net,
                     flow,
                     mu=None) -> FractionalRouting:
    """
    z1_xy = (flow on (x, y)) / mu_y. Satisfies the capacity constraints of the edge system whenever the flow meets its
    own capacity constraints, strict slack or not, so it is what an infeasible instance gets routed by.
    """

    rates = net.rates if mu is None else np.asarray(mu, dtype=float)
    return FractionalRouting({(tail, head): value / rates[head]
                              for (tail, head), value in flow.edge_flows().items() if value > 0.0})


# ----------------------------------------------------------------------------------------------------------------------
def edge_condition_report(net,
                          routing,
                          mu=None) -> EdgeConditionReport:
    """
    Evaluates the edge-variable system for a routing:

        sum_j z_ij mu_j > lambda_i                          for every source i
        sum_y z_xy mu_y > sum_w z_wx mu_x                   for middle x whose incoming z are all positive
        sum_j z_xj <= 1                                     for x in S1 and S2
        sum_i z_iy <= 1                                     for y in S2 and S3
        z >= 0, and z = 0 off the edge set

    :param net: A validated NetworkSpec.
    :param routing: The FractionalRouting.
    :param mu: Optional per-node rate vector.

    :return: An EdgeConditionReport.
    """

    rates = net.rates if mu is None else np.asarray(mu, dtype=float)
    edge_set = set(net.edges)

    served = np.zeros(net.size)
    received = np.zeros(net.size)
    for (tail, head), value in routing.z.items():
        served[tail] += value * rates[head]
        received[head] += value * rates[head]

    arrival = {source: float(served[source] - rates[source]) for source in net.sources}

    middle = dict()
    for node in net.middle:
        if all(routing.value(tail, node) > 0.0 for tail in net.in_neighbors[node]):
            middle[node] = float(served[node] - received[node])

    out_sums = routing.out_sums(net)
    in_sums = routing.in_sums(net)
    sender_capacity = {node: float(1.0 - out_sums[node]) for node in net.senders}
    server_capacity = {node: float(1.0 - in_sums[node]) for node in net.servers}

    values = list(routing.z.values())
    min_value = float(min(values)) if values else 0.0
    off_edge = float(sum(abs(value) for edge, value in routing.z.items() if edge not in edge_set))

    return EdgeConditionReport(arrival, middle, sender_capacity, server_capacity, min_value, off_edge)


# ----------------------------------------------------------------------------------------------------------------------
def check_dag_edge(net,
                   mu=None,
                   cap=DEFAULT_PATH_CAP) -> Verdict:
    """
    The edge-variable form of the DAG condition. The conditional middle-server constraint is not convex, so the system
    is never solved directly: the path flow LP is solved and its optimum mapped through flow_to_edge, then the result is
    checked against the edge system.

    :return: A Verdict carrying the routing when feasible.
    """

    verdict = check_dag_flow(net, mu=mu, cap=cap)
    if not verdict.feasible:
        return verdict
    routing = flow_to_edge(net, verdict.flow, mu=mu)
    report = edge_condition_report(net, routing, mu=mu)
    if not report.holds():
        raise SolverError("Routing derived from a feasible path flow fails the edge system.")
    return Verdict(True, verdict.slack, routing=routing, flow=verdict.flow)


# ----------------------------------------------------------------------------------------------------------------------
def _queue_alpha(view,
                 alpha) -> np.ndarray:
    if isinstance(alpha, dict):
        return np.array([float(alpha.get(queue, 0.0)) for queue in view.queues])
    alpha = np.asarray(alpha, dtype=float)
    if len(alpha) == view.net.size:
        return alpha[list(view.queues)]
    return alpha


# ----------------------------------------------------------------------------------------------------------------------
def _node_alpha(net,
                alpha) -> np.ndarray:
    if isinstance(alpha, dict):
        output = np.zeros(net.size)
        for node, value in alpha.items():
            output[node] = value
        return output
    return np.asarray(alpha, dtype=float)


# ----------------------------------------------------------------------------------------------------------------------
def best_matching(net,
                  alpha,
                  mu=None) -> DualWitness:
    """
    Finds the matching maximizing alpha^T M mu by max-weight bipartite matching with weight alpha_i mu_j.

    :param net: A bipartite NetworkSpec.
    :param alpha: Nonnegative queue weights: one per queue in row order, one per node id, or a dict keyed by node id.
    :param mu: Optional replacement server rates.

    :return: A DualWitness with the matched network edges, alpha^T M mu and alpha^T lambda.
    """

    view = network.bipartite_view(net)
    alpha = _queue_alpha(view, alpha)
    mu = _server_rates(view, mu)
    weights = np.where(view.adjacency, np.outer(alpha, mu), 0.0)
    weights = np.clip(weights, 0.0, None)

    rows, cols = optimize.linear_sum_assignment(weights, maximize=True)
    edges = list()
    value = 0.0
    for row, col in zip(rows, cols):
        if weights[row, col] > 0.0:
            edges.append((view.queues[row], view.servers[col]))
            value += weights[row, col]
    return DualWitness(tuple(sorted(edges)), float(value), float(alpha @ view.lam))


# ----------------------------------------------------------------------------------------------------------------------
def best_path_set(net,
                  alpha,
                  mu=None) -> DualWitness:
    """
    Finds the vertex-disjoint path set maximizing sum over (i, j) of (alpha_i - alpha_j) mu_j, as a max-weight matching
    on the split graph. Edges whose weight is not positive are left out.

    :param net: A validated NetworkSpec.
    :param alpha: Nonnegative node weights, one per node id (or a dict keyed by node id), zero on terminals.
    :param mu: Optional per-node rate vector.

    :return: A DualWitness.
    """

    alpha = _node_alpha(net, alpha)
    if any(alpha[node] != 0.0 for node in net.terminals):
        raise ValueError("Node weights must be zero on terminals.")
    rates = net.rates if mu is None else np.asarray(mu, dtype=float)

    graph = network.split(net)
    weights = graph.weight_matrix(lambda tail, head: max(0.0, (alpha[tail] - alpha[head]) * rates[head]))
    rows, cols = optimize.linear_sum_assignment(weights, maximize=True)
    pairs = [(row, col) for row, col in zip(rows, cols) if weights[row, col] > 0.0]
    edges = graph.decode(pairs)
    value = float(sum(weights[row, col] for row, col in pairs))
    threshold = float(sum(alpha[source] * rates[source] for source in net.sources))
    return DualWitness(edges, value, threshold)


# ----------------------------------------------------------------------------------------------------------------------
def brute_force_path_sets(net) -> list:
    """
    Lists every vertex-disjoint path set (edge subsets with distinct tails and distinct heads), the empty set included.

    :param net: A validated NetworkSpec with at most BRUTE_FORCE_EDGE_LIMIT edges.

    :return: A list of edge tuples.
    """

    if len(net.edges) > BRUTE_FORCE_EDGE_LIMIT:
        raise TooLarge("Exhaustive path set search is limited to " + str(BRUTE_FORCE_EDGE_LIMIT) + " edges.")

    output = list()
    for size in range(len(net.edges) + 1):
        for subset in itertools.combinations(net.edges, size):
            if network.is_vertex_disjoint(subset):
                output.append(subset)
    return output


# ----------------------------------------------------------------------------------------------------------------------
def _binary_vectors(n):
    for bits in itertools.product((0, 1), repeat=n):
        if any(bits):
            yield bits


# ----------------------------------------------------------------------------------------------------------------------
def check_assumption_bipartite(net,
                               beta) -> AssumptionCheck:
    """
    Checks the doubled-capacity condition over 0/1 queue weights: for every alpha in {0,1}^n (other than zero) the best
    matching must satisfy (1 - beta) / 2 * alpha^T M mu > alpha^T lambda.

    :param net: A bipartite NetworkSpec.
    :param beta: The slack constant, strictly between 0 and 1.

    :return: An AssumptionCheck whose `failing` is the first alpha (in lexicographic order) that breaks the condition.
    """

    view = network.bipartite_view(net)
    if view.n > ENUMERATION_LIMIT:
        raise TooManyQueues(str(view.n) + " queues is beyond the enumeration bound of " + str(ENUMERATION_LIMIT) + ".")

    scale = 0.5 * (1.0 - beta)
    for alpha in _binary_vectors(view.n):
        witness = best_matching(net, alpha)
        if not witness.holds(scale):
            return AssumptionCheck(False, failing=alpha, witness=witness)
    return AssumptionCheck(True)


# ----------------------------------------------------------------------------------------------------------------------
def check_assumption_bipartite_relaxed(net,
                                       beta) -> AssumptionCheck:
    """
    The same condition quantified over all nonnegative alpha, decided by the centralized LP on rates scaled by
    (1 - beta) / 2. A failure carries the LP certificate as its alpha.
    """

    view = network.bipartite_view(net)
    verdict = check_bipartite_centralized(net, mu=0.5 * (1.0 - beta) * view.mu)
    if verdict.feasible:
        return AssumptionCheck(True, slack=verdict.slack)
    return AssumptionCheck(False, failing=tuple(float(value) for value in verdict.certificate), slack=verdict.slack)


# ----------------------------------------------------------------------------------------------------------------------
def check_assumption_dag(net,
                         beta,
                         alpha=None,
                         mu=None,
                         cap=DEFAULT_PATH_CAP) -> AssumptionCheck:
    """
    Checks the doubled-capacity path set condition. Over all nonnegative alpha this is equivalent to the path flow LP on
    the instance with every processing rate replaced by (1 - beta) / 2 times itself, which is how it is decided. Given
    an explicit alpha, the check runs in witness mode instead and reports best_path_set on the scaled rates.

    :param net: A validated NetworkSpec.
    :param beta: The slack constant, strictly between 0 and 1.
    :param alpha: Optional node weights for witness mode.
    :param mu: Optional per-node rate vector to scale instead of the network's own (may exceed 1).
    :param cap: The path enumeration cap.

    :return: An AssumptionCheck.
    """

    rates = np.array(net.rates if mu is None else mu, dtype=float)
    scaled = rates.copy()
    for node in net.servers:
        scaled[node] = 0.5 * (1.0 - beta) * rates[node]

    if alpha is not None:
        witness = best_path_set(net, alpha, mu=scaled)
        return AssumptionCheck(witness.value > witness.threshold, witness=witness)

    verdict = check_dag_flow(net, mu=scaled, cap=cap)
    return AssumptionCheck(verdict.feasible, slack=verdict.slack)


# ----------------------------------------------------------------------------------------------------------------------
def check_cb_tighter(net,
                     beta) -> AssumptionCheck:
    """
    The sharper condition for complete bipartite networks: with lambda and mu sorted descending (mu padded with zeros
    when there are fewer servers than queues), k / (2k - 1) * (1 - beta) * sum of the k largest mu must exceed the sum
    of the k largest lambda for every k in 1..n.

    :param net: A complete bipartite NetworkSpec.
    :param beta: The slack constant.

    :return: An AssumptionCheck whose `failing` is the first k that breaks the condition.
    """

    view = network.bipartite_view(net)
    if not view.is_complete:
        raise NotCompleteBipartite("The sorted-rate condition needs a complete bipartite network.")

    lam = np.sort(view.lam)[::-1]
    mu = np.sort(view.mu)[::-1]
    if len(mu) < len(lam):
        mu = np.concatenate([mu, np.zeros(len(lam) - len(mu))])

    margins = dict()
    for k in range(1, view.n + 1):
        lhs = k / (2 * k - 1) * (1.0 - beta) * float(np.sum(mu[:k]))
        rhs = float(np.sum(lam[:k]))
        margins[k] = lhs - rhs
        if not lhs > rhs:
            return AssumptionCheck(False, failing=k, detail={"margins": margins})
    return AssumptionCheck(True, detail={"margins": margins})
