#!/usr/bin/env python3

import hashlib
import heapq
import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from errors import CycleError, DegreeError, NotBipartite, RateRangeError, SchemaError


# ======================================================================================================================
class NodeKind(Enum):
    SOURCE = "source"
    SERVER = "server"
    TERMINAL = "terminal"


# ======================================================================================================================
@dataclass(frozen=True)
class NodeSpec:
    id: int
    name: str
    kind: NodeKind
    rate: float


# ======================================================================================================================
@dataclass(frozen=True)
class NetworkSpec:
    """
    A validated queueing network: a DAG whose sources carry arrival rates and whose servers (middle servers and
    terminals) carry processing rates. Node ids are dense in [0, |V|) and are the index used by every array in the
    package. Build these through validate(); never construct one by hand.
    """

    nodes: tuple
    edges: tuple
    name: str = ""

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def size(self) -> int:
        return len(self.nodes)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def out_neighbors(self) -> tuple:
        output = [list() for _ in self.nodes]
        for tail, head in self.edges:
            output[tail].append(head)
        return tuple(tuple(sorted(item)) for item in output)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def in_neighbors(self) -> tuple:
        output = [list() for _ in self.nodes]
        for tail, head in self.edges:
            output[head].append(tail)
        return tuple(tuple(sorted(item)) for item in output)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def sources(self) -> tuple:
        return tuple(node.id for node in self.nodes if node.kind is NodeKind.SOURCE)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def middle(self) -> tuple:
        return tuple(node.id for node in self.nodes if node.kind is NodeKind.SERVER)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def terminals(self) -> tuple:
        return tuple(node.id for node in self.nodes if node.kind is NodeKind.TERMINAL)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def servers(self) -> tuple:
        """
        S2 ∪ S3 in id order: every node with a processing rate.
        """
        return tuple(node.id for node in self.nodes if node.kind is not NodeKind.SOURCE)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def senders(self) -> tuple:
        """
        S1 ∪ S2 in id order: every node that can hold a queue.
        """
        return tuple(node.id for node in self.nodes if node.kind is not NodeKind.TERMINAL)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def rates(self) -> np.ndarray:
        """
        One rate per node id: λ for sources, μ for servers and terminals.
        """
        return np.array([node.rate for node in self.nodes], dtype=float)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def topological_order(self) -> tuple:
        order, _ = _kahn(len(self.nodes), self.edges)
        return tuple(order)

    # ------------------------------------------------------------------------------------------------------------------
    @cached_property
    def is_bipartite(self) -> bool:
        return len(self.middle) == 0

    # ------------------------------------------------------------------------------------------------------------------
    def name_of(self,
                node_id) -> str:
        return self.nodes[node_id].name

    # ------------------------------------------------------------------------------------------------------------------
    def id_of(self,
              name) -> int:
        """
        Resolves a node name to its id.

        :param name: The node name as it appears in the network file. Integers are accepted as ids.

        :return: The dense node id.
        """

        if isinstance(name, (int, np.integer)):
            if 0 <= int(name) < len(self.nodes):
                return int(name)
            raise SchemaError("Unknown node id: " + str(name))
        for node in self.nodes:
            if node.name == name:
                return node.id
        raise SchemaError("Unknown node: " + str(name))

    # ------------------------------------------------------------------------------------------------------------------
    def to_raw(self) -> dict:
        """
        Converts the network back into the raw description accepted by validate().

        :return: A dict with "name", "nodes" and "edges" keys.
        """

        output = dict()
        output["name"] = self.name
        output["nodes"] = [{"name": node.name, "kind": node.kind.value, "rate": node.rate} for node in self.nodes]
        output["edges"] = [(self.nodes[tail].name, self.nodes[head].name) for tail, head in self.edges]
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def instance_hash(self) -> str:
        raw = self.to_raw()
        raw["edges"] = [list(edge) for edge in raw["edges"]]
        text = json.dumps(raw, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# ======================================================================================================================
@dataclass(frozen=True)
class BipartiteView:
    """
    The queue/server view of a network without middle servers. Rows index queues (S1), columns index servers (S3),
    both in node id order.
    """

    net: NetworkSpec
    queues: tuple
    servers: tuple
    adjacency: np.ndarray
    lam: np.ndarray
    mu: np.ndarray

    # ------------------------------------------------------------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.queues)

    # ------------------------------------------------------------------------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.servers)

    # ------------------------------------------------------------------------------------------------------------------
    @property
    def is_complete(self) -> bool:
        return bool(self.adjacency.all())

    # ------------------------------------------------------------------------------------------------------------------
    def queue_index(self,
                    node_id) -> int:
        return self.queues.index(node_id)

    # ------------------------------------------------------------------------------------------------------------------
    def server_index(self,
                     node_id) -> int:
        return self.servers.index(node_id)


# ======================================================================================================================
@dataclass(frozen=True)
class SplitGraph:
    """
    Every node of S1 ∪ S2 gets an out-copy on the left, every node of S2 ∪ S3 an in-copy on the right, and every
    network edge (i, j) becomes the split edge (i_out, j_in). A matching of this graph is exactly a set of network edges
    with distinct tails and distinct heads, i.e. a vertex-disjoint path set.
    """

    net: NetworkSpec
    left: tuple
    right: tuple
    edges: tuple

    # ------------------------------------------------------------------------------------------------------------------
    def weight_matrix(self,
                      weights) -> np.ndarray:
        """
        Fills the weight slot of every split edge.

        :param weights: A mapping from network edge (tail id, head id) to weight, or a callable taking (tail, head).
               Missing edges get weight 0.

        :return: A |left| x |right| float matrix, zero where there is no split edge.
        """

        output = np.zeros((len(self.left), len(self.right)))
        for row, col in self.edges:
            edge = (self.left[row], self.right[col])
            if callable(weights):
                output[row, col] = weights(*edge)
            else:
                output[row, col] = weights.get(edge, 0.0)
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def support(self) -> np.ndarray:
        output = np.zeros((len(self.left), len(self.right)), dtype=bool)
        for row, col in self.edges:
            output[row, col] = True
        return output

    # ------------------------------------------------------------------------------------------------------------------
    def decode(self,
               pairs) -> tuple:
        """
        Reads a matching back as network edges.

        :param pairs: An iterable of (left index, right index) pairs.

        :return: A sorted tuple of network edges. Raises SchemaError if a pair is not a split edge or if two pairs share
                 a row or a column.
        """

        output = list()
        rows = set()
        cols = set()
        edge_set = set(self.edges)
        for row, col in pairs:
            row = int(row)
            col = int(col)
            if (row, col) not in edge_set:
                raise SchemaError("Pair " + str((row, col)) + " is not an edge of the split graph.")
            if row in rows or col in cols:
                raise SchemaError("Pairs do not form a matching: " + str(list(pairs)))
            rows.add(row)
            cols.add(col)
            output.append((self.left[row], self.right[col]))
        return tuple(sorted(output))

    # ------------------------------------------------------------------------------------------------------------------
    def encode(self,
               network_edges) -> tuple:
        """
        The inverse of decode().

        :param network_edges: An iterable of (tail id, head id) network edges.

        :return: A sorted tuple of (left index, right index) pairs.
        """

        return tuple(sorted((self.left.index(tail), self.right.index(head)) for tail, head in network_edges))


# ----------------------------------------------------------------------------------------------------------------------
def _kahn(size,
          edges):
    """
    Kahn's algorithm with a min-heap so the order is deterministic (lowest node id first among ready nodes).

    :param size: The number of nodes.
    :param edges: An iterable of (tail, head) id pairs.

    :return: A tuple (order, leftover) where leftover is the set of nodes that sit on or behind a cycle.
    """

    in_degree = [0] * size
    out = [list() for _ in range(size)]
    for tail, head in edges:
        out[tail].append(head)
        in_degree[head] += 1

    ready = [node for node in range(size) if in_degree[node] == 0]
    heapq.heapify(ready)
    order = list()
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for head in out[node]:
            in_degree[head] -= 1
            if in_degree[head] == 0:
                heapq.heappush(ready, head)

    leftover = set(range(size)) - set(order)
    return order, leftover


# ----------------------------------------------------------------------------------------------------------------------
def is_vertex_disjoint(edges) -> bool:
    """
    Whether a set of network edges has all-distinct tails and all-distinct heads.

    :param edges: An iterable of (tail, head) pairs.

    :return: True if no two edges share a tail or a head.
    """

    edges = list(edges)
    tails = [edge[0] for edge in edges]
    heads = [edge[1] for edge in edges]
    return len(set(tails)) == len(tails) and len(set(heads)) == len(heads)


# ----------------------------------------------------------------------------------------------------------------------
def chain_paths(edges) -> list:
    """
    Chains a vertex-disjoint edge set into its maximal paths.

    :param edges: An iterable of (tail, head) pairs with distinct tails and distinct heads.

    :return: A list of node id lists, ordered by their first node.
    """

    successor = dict(edges)
    heads = set(successor.values())
    output = list()
    for start in sorted(successor.keys()):
        if start in heads:
            continue
        path = [start]
        while path[-1] in successor:
            path.append(successor[path[-1]])
        output.append(path)
    return output


# ----------------------------------------------------------------------------------------------------------------------
def _resolve(name,
             names):
    if isinstance(name, (int, np.integer)) and not isinstance(name, bool):
        if 0 <= int(name) < len(names):
            return int(name)
        return None
    name = str(name)
    if name in names:
        return names.index(name)
    return None


# ----------------------------------------------------------------------------------------------------------------------
def validate(spec) -> NetworkSpec:
    """
    Validates a raw network description and returns the frozen NetworkSpec. Every problem found is collected; the
    exception raised is the one for the first category that has problems, in the order schema, cycle, degree, rate,
    and carries the complete list in its `violations` attribute.

    :param spec: Either a dict with "nodes" (a list of {"name", "kind", "rate"} dicts, declaration order gives the ids)
           and "edges" (a list of (tail, head) pairs given by name or id) and an optional "name"; or an existing
           NetworkSpec, which is re-validated.

    :return: A NetworkSpec.
    """

    if isinstance(spec, NetworkSpec):
        spec = spec.to_raw()

    schema = list()
    cycles = list()
    degrees = list()
    ranges = list()

    raw_nodes = list(spec.get("nodes", []))
    raw_edges = list(spec.get("edges", []))

    if not raw_nodes:
        raise SchemaError("A network needs at least one node.")

    names = list()
    nodes = list()
    for index, raw in enumerate(raw_nodes):
        name = str(raw.get("name", index))
        if name in names:
            schema.append("Duplicate node name: " + name)
        names.append(name)
        kind = raw.get("kind")
        try:
            kind = NodeKind(kind.value if isinstance(kind, NodeKind) else str(kind).lower())
        except ValueError:
            schema.append("Node " + name + " has unknown kind: " + str(kind))
            kind = NodeKind.SERVER
        try:
            rate = float(raw.get("rate"))
        except (TypeError, ValueError):
            schema.append("Node " + name + " has a non-numeric rate: " + str(raw.get("rate")))
            rate = float("nan")
        nodes.append(NodeSpec(index, name, kind, rate))

    edges = list()
    for raw in raw_edges:
        try:
            tail, head = raw
        except (TypeError, ValueError):
            schema.append("Malformed edge: " + str(raw))
            continue
        tail_id = _resolve(tail, names)
        head_id = _resolve(head, names)
        if tail_id is None or head_id is None:
            schema.append("Edge " + str(tail) + "->" + str(head) + " references an unknown node.")
            continue
        if tail_id == head_id:
            cycles.append("Self loop on node " + names[tail_id] + ".")
            continue
        if (tail_id, head_id) in edges:
            schema.append("Duplicate edge " + names[tail_id] + "->" + names[head_id])
            continue
        edges.append((tail_id, head_id))
    edges = sorted(edges)

    _, leftover = _kahn(len(nodes), edges)
    if leftover:
        on_cycle = [(t, h) for t, h in edges if t in leftover and h in leftover]
        text = ", ".join(names[t] + "->" + names[h] for t, h in on_cycle)
        cycles.append("The edge relation has a cycle through edges: " + text)

    in_degree = [0] * len(nodes)
    out_degree = [0] * len(nodes)
    for tail, head in edges:
        out_degree[tail] += 1
        in_degree[head] += 1

    for node in nodes:
        if node.kind is NodeKind.SOURCE:
            if in_degree[node.id] != 0:
                degrees.append("Source " + node.name + " has incoming edges.")
            if out_degree[node.id] == 0:
                degrees.append("Source " + node.name + " has no outgoing edge and cannot reach a server.")
            if not 0.0 < node.rate < 1.0:
                ranges.append("Source " + node.name + " has arrival rate " + str(node.rate) + " outside (0, 1).")
        else:
            if node.kind is NodeKind.TERMINAL and out_degree[node.id] != 0:
                degrees.append("Terminal " + node.name + " has outgoing edges.")
            if node.kind is NodeKind.SERVER and out_degree[node.id] == 0:
                degrees.append("Server " + node.name + " has no outgoing edge (declare it as a terminal).")
            if in_degree[node.id] == 0:
                degrees.append(node.kind.value.capitalize() + " " + node.name + " has no incoming edge.")
            if not 0.0 < node.rate <= 1.0:
                ranges.append(node.kind.value.capitalize() + " " + node.name + " has processing rate " +
                              str(node.rate) + " outside (0, 1].")

    if not any(node.kind is NodeKind.SOURCE for node in nodes):
        degrees.append("A network needs at least one source.")

    violations = schema + cycles + degrees + ranges
    for category, error_class in ((schema, SchemaError),
                                  (cycles, CycleError),
                                  (degrees, DegreeError),
                                  (ranges, RateRangeError)):
        if category:
            raise error_class(category[0], violations)

    return NetworkSpec(tuple(nodes), tuple(edges), str(spec.get("name", "")))


# ----------------------------------------------------------------------------------------------------------------------
def scale_capacities(net,
                     factor) -> NetworkSpec:
    """
    Multiplies every processing rate by a factor and re-validates (so factors pushing a rate above 1 are rejected).

    :param net: The network.
    :param factor: The multiplier applied to every server and terminal rate.

    :return: A new NetworkSpec.
    """

    raw = net.to_raw()
    for raw_node in raw["nodes"]:
        if raw_node["kind"] != NodeKind.SOURCE.value:
            raw_node["rate"] = raw_node["rate"] * factor
    return validate(raw)


# ----------------------------------------------------------------------------------------------------------------------
def bipartite_view(net) -> BipartiteView:
    """
    Builds the queue/server view of a network.

    :param net: A NetworkSpec with no middle servers.

    :return: A BipartiteView. Raises NotBipartite if any node lies in S2.
    """

    if not net.is_bipartite:
        names = ", ".join(net.name_of(node) for node in net.middle)
        raise NotBipartite("Network has middle servers: " + names)

    queues = net.sources
    servers = net.terminals
    adjacency = np.zeros((len(queues), len(servers)), dtype=bool)
    for tail, head in net.edges:
        adjacency[queues.index(tail), servers.index(head)] = True
    lam = net.rates[list(queues)]
    mu = net.rates[list(servers)]
    return BipartiteView(net, queues, servers, adjacency, lam, mu)


# ----------------------------------------------------------------------------------------------------------------------
def split(net) -> SplitGraph:
    """
    Builds the node-split bipartite graph used by the matching and decomposition routines.

    :param net: A validated NetworkSpec.

    :return: A SplitGraph.
    """

    left = net.senders
    right = net.servers
    edges = tuple((left.index(tail), right.index(head)) for tail, head in net.edges)
    return SplitGraph(net, left, right, edges)
