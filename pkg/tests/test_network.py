#!/usr/bin/env python3

import pytest

import network
from errors import CycleError, DegreeError, NotBipartite, RateRangeError, SchemaError
from netgen import bipartite, load_fixture


# ----------------------------------------------------------------------------------------------------------------------
def raw_chain():
    return {"name": "chain",
            "nodes": [{"name": "a", "kind": "source", "rate": 0.3},
                      {"name": "b", "kind": "server", "rate": 0.9},
                      {"name": "c", "kind": "terminal", "rate": 0.8}],
            "edges": [("a", "b"), ("b", "c")]}


# ----------------------------------------------------------------------------------------------------------------------
def test_validate_assigns_dense_ids_and_roles():
    net = network.validate(raw_chain())
    assert net.size == 3
    assert net.sources == (0,)
    assert net.middle == (1,)
    assert net.terminals == (2,)
    assert net.senders == (0, 1)
    assert net.servers == (1, 2)
    assert net.topological_order == (0, 1, 2)
    assert net.out_neighbors[0] == (1,)
    assert net.in_neighbors[2] == (1,)
    assert not net.is_bipartite


# ----------------------------------------------------------------------------------------------------------------------
def test_validate_accepts_edges_by_id():
    raw = raw_chain()
    raw["edges"] = [(0, 1), (1, 2)]
    assert network.validate(raw).edges == ((0, 1), (1, 2))


# ----------------------------------------------------------------------------------------------------------------------
def test_cycle_is_rejected():
    raw = raw_chain()
    raw["nodes"].append({"name": "d", "kind": "server", "rate": 0.5})
    raw["edges"].extend([("b", "d"), ("d", "b")])
    with pytest.raises(CycleError):
        network.validate(raw)


# ----------------------------------------------------------------------------------------------------------------------
def test_source_with_incoming_edge_is_a_degree_error():
    raw = raw_chain()
    raw["edges"].append(("b", "a"))
    # b -> a -> b is also a cycle, which is reported first
    with pytest.raises(CycleError) as info:
        network.validate(raw)
    assert any("incoming" in violation for violation in info.value.violations)


# ----------------------------------------------------------------------------------------------------------------------
def test_terminal_with_outgoing_edge_is_a_degree_error():
    raw = raw_chain()
    raw["nodes"].append({"name": "d", "kind": "terminal", "rate": 0.5})
    raw["edges"].append(("c", "d"))
    with pytest.raises(DegreeError):
        network.validate(raw)


# ----------------------------------------------------------------------------------------------------------------------
def test_every_violation_is_collected():
    raw = raw_chain()
    raw["nodes"][0]["rate"] = 1.5
    raw["nodes"][2]["rate"] = 0.0
    with pytest.raises(RateRangeError) as info:
        network.validate(raw)
    assert len(info.value.violations) == 2


# ----------------------------------------------------------------------------------------------------------------------
def test_schema_errors_come_before_range_errors():
    raw = raw_chain()
    raw["nodes"][0]["rate"] = 1.5
    raw["edges"].append(("a", "nowhere"))
    with pytest.raises(SchemaError) as info:
        network.validate(raw)
    assert len(info.value.violations) == 2


# ----------------------------------------------------------------------------------------------------------------------
def test_duplicate_names_and_unknown_kinds():
    raw = raw_chain()
    raw["nodes"][1]["name"] = "a"
    with pytest.raises(SchemaError):
        network.validate(raw)

    raw = raw_chain()
    raw["nodes"][1]["kind"] = "router"
    with pytest.raises(SchemaError):
        network.validate(raw)


# ----------------------------------------------------------------------------------------------------------------------
def test_id_of_and_name_of():
    net = network.validate(raw_chain())
    assert net.id_of("b") == 1
    assert net.id_of(2) == 2
    assert net.name_of(0) == "a"
    with pytest.raises(SchemaError):
        net.id_of("zz")


# ----------------------------------------------------------------------------------------------------------------------
def test_instance_hash_tracks_content():
    net = network.validate(raw_chain())
    assert net.instance_hash() == network.validate(raw_chain()).instance_hash()
    assert len(net.instance_hash()) == 16

    raw = raw_chain()
    raw["nodes"][1]["rate"] = 0.8
    assert network.validate(raw).instance_hash() != net.instance_hash()


# ----------------------------------------------------------------------------------------------------------------------
def test_to_raw_revalidates_to_the_same_network():
    net = load_fixture("example_4_1")
    assert network.validate(net) == net


# ----------------------------------------------------------------------------------------------------------------------
def test_scale_capacities():
    net = load_fixture("example_4_1")
    half = network.scale_capacities(net, 0.5)
    for node in net.servers:
        assert half.rates[node] == pytest.approx(0.5 * net.rates[node])
    for node in net.sources:
        assert half.rates[node] == net.rates[node]
    with pytest.raises(RateRangeError):
        network.scale_capacities(net, 2.0)


# ----------------------------------------------------------------------------------------------------------------------
def test_bipartite_view():
    net = load_fixture("appendix_c")
    view = network.bipartite_view(net)
    assert view.n == 2
    assert view.m == 2
    assert view.adjacency.tolist() == [[True, True], [True, False]]
    assert not view.is_complete
    assert view.lam.tolist() == [0.25, 0.125]

    with pytest.raises(NotBipartite):
        network.bipartite_view(load_fixture("example_4_1"))


# ----------------------------------------------------------------------------------------------------------------------
def test_split_graph_decodes_matchings_to_disjoint_edges():
    net = load_fixture("example_4_1")
    graph = network.split(net)
    assert len(graph.left) == len(net.senders)
    assert len(graph.right) == len(net.servers)
    assert len(graph.edges) == len(net.edges)

    edges = ((0, 2), (2, 5), (1, 4))
    pairs = graph.encode(edges)
    assert graph.decode(pairs) == tuple(sorted(edges))

    # Two edges out of the same tail are not a matching.
    with pytest.raises(SchemaError):
        graph.decode(graph.encode(((0, 2), (0, 4))))


# ----------------------------------------------------------------------------------------------------------------------
def test_chain_paths():
    assert network.chain_paths([(2, 5), (0, 2), (1, 4)]) == [[0, 2, 5], [1, 4]]
    assert network.is_vertex_disjoint([(0, 2), (1, 4)])
    assert not network.is_vertex_disjoint([(0, 2), (1, 2)])


# ----------------------------------------------------------------------------------------------------------------------
def test_weight_matrix_accepts_dicts_and_callables():
    net = bipartite([0.2, 0.3], [0.5])
    graph = network.split(net)
    from_dict = graph.weight_matrix({(0, 2): 1.5})
    from_callable = graph.weight_matrix(lambda tail, head: tail + 1.0)
    assert from_dict.tolist() == [[1.5], [0.0]]
    assert from_callable.tolist() == [[1.0], [2.0]]
    assert graph.support().all()
