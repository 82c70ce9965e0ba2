#!/usr/bin/env python3

import numpy as np
import pytest
from hypothesis import given, settings

import decompose
import network
from errors import NotSubstochastic
from netgen import layered_dags, load_fixture, substochastic_matrices


# ----------------------------------------------------------------------------------------------------------------------
def is_matching(component):
    rows = [row for row, _ in component]
    cols = [col for _, col in component]
    return len(set(rows)) == len(rows) and len(set(cols)) == len(cols)


# ----------------------------------------------------------------------------------------------------------------------
def test_padding_is_doubly_stochastic():
    matrix = np.array([[0.2, 0.3], [0.0, 0.5], [0.1, 0.0]])
    padded = decompose.pad_doubly_stochastic(matrix)
    assert padded.shape == (5, 5)
    assert np.allclose(padded.sum(axis=0), 1.0)
    assert np.allclose(padded.sum(axis=1), 1.0)


# ----------------------------------------------------------------------------------------------------------------------
def test_uniform_matrix_splits_into_two_permutations():
    dist = decompose.decompose_bvn([[0.5, 0.5], [0.5, 0.5]])
    assert dist.total() == pytest.approx(1.0)
    assert dist.reconstruction_error(np.array([[0.5, 0.5], [0.5, 0.5]])) < 1e-12
    assert sorted(component for component, _ in dist.components) == [((0, 0), (1, 1)), ((0, 1), (1, 0))]


# ----------------------------------------------------------------------------------------------------------------------
def test_zero_matrix_is_the_empty_matching():
    dist = decompose.decompose_bvn(np.zeros((2, 3)))
    assert dist.components == (((), 1.0),)


# ----------------------------------------------------------------------------------------------------------------------
def test_non_substochastic_matrices_are_rejected():
    with pytest.raises(NotSubstochastic):
        decompose.decompose_bvn([[0.7, 0.6]])
    with pytest.raises(NotSubstochastic):
        decompose.decompose_bvn([[0.7], [0.6]])
    with pytest.raises(NotSubstochastic):
        decompose.decompose_bvn([[-0.1, 0.2]])


# ----------------------------------------------------------------------------------------------------------------------
@given(substochastic_matrices())
@settings(max_examples=80, deadline=None)
def test_decomposition_reconstructs_the_matrix(matrix):
    dist = decompose.decompose_bvn(matrix)
    assert dist.total() == pytest.approx(1.0, abs=1e-9)
    assert np.all(dist.probabilities > 0.0)
    assert all(is_matching(component) for component, _ in dist.components)
    assert dist.reconstruction_error(np.array(matrix)) < 1e-8


# ----------------------------------------------------------------------------------------------------------------------
def test_derive_policy_on_a_dag():
    net = load_fixture("example_4_1")
    verdict, routing, dist = decompose.derive_policy(net)
    assert verdict.feasible
    assert dist.reconstruction_error(routing) < 1e-6
    edges = set(net.edges)
    for component, probability in dist.components:
        assert probability > 0.0
        assert set(component) <= edges
        assert network.is_vertex_disjoint(component)

    rendered = dist.to_dict(net)
    assert sum(entry["probability"] for entry in rendered["components"]) == pytest.approx(1.0)


# ----------------------------------------------------------------------------------------------------------------------
def test_derive_policy_on_bipartite_networks():
    net = load_fixture("appendix_f")
    verdict, routing, dist = decompose.derive_policy(net)
    assert verdict.feasible
    assert dist.reconstruction_error(routing) < 1e-6
    for component, _ in dist.components:
        assert all(tail in net.sources and head in net.terminals for tail, head in component)

    # Infeasible networks still get a policy to simulate with.
    verdict, routing, dist = decompose.derive_policy(load_fixture("overloaded_single_server"))
    assert not verdict.feasible
    assert dist.total() == pytest.approx(1.0)


# ----------------------------------------------------------------------------------------------------------------------
def test_infeasible_dags_fall_back_to_the_unscaled_routing():
    net = network.scale_capacities(load_fixture("example_4_1"), 0.5)
    verdict, routing, dist = decompose.derive_policy(net)
    assert not verdict.feasible
    assert dist.reconstruction_error(routing) < 1e-6


# ----------------------------------------------------------------------------------------------------------------------
def test_off_edge_routing_is_rejected():
    net = load_fixture("two_layer_light")
    with pytest.raises(NotSubstochastic):
        decompose.decompose_paths(net, {(0, 4): 0.5})


# ----------------------------------------------------------------------------------------------------------------------
def test_sampling_only_returns_components():
    dist = decompose.decompose_bvn([[0.25, 0.5], [0.5, 0.25]])
    rng = np.random.default_rng(3)
    components = {component for component, _ in dist.components}
    for _ in range(50):
        assert dist.sample(rng) in components


# ----------------------------------------------------------------------------------------------------------------------
@given(layered_dags())
@settings(max_examples=40, deadline=None)
def test_dag_policies_are_vertex_disjoint_and_exact(net):
    _, routing, dist = decompose.derive_policy(net)
    assert dist.total() == pytest.approx(1.0, abs=1e-6)
    assert dist.reconstruction_error(routing) < 1e-6
    assert all(network.is_vertex_disjoint(component) for component, _ in dist.components)


# ----------------------------------------------------------------------------------------------------------------------
def test_marginals_and_paths():
    policy = decompose.PolicyDistribution((
        (((0, 2), (2, 5), (1, 4)), 0.5),
        (((1, 4), (4, 7)), 0.25),
        ((), 0.25),
    ))
    assert policy.marginals() == {(0, 2): 0.5, (2, 5): 0.5, (1, 4): 0.75, (4, 7): 0.25}
    assert policy.as_paths() == [([[0, 2, 5], [1, 4]], 0.5), ([[1, 4, 7]], 0.25), ([], 0.25)]
    assert policy.total() == 1.0
    assert policy.reconstruction_error({(0, 2): 0.5, (2, 5): 0.5, (1, 4): 0.75, (4, 7): 0.5}) == 0.25


# ----------------------------------------------------------------------------------------------------------------------
def test_policy_reads_back_from_its_dict():
    net = load_fixture("example_4_1")
    _, routing, dist = decompose.derive_policy(net)
    restored = decompose.policy_from_dict(net, dist.to_dict(net))
    assert list(restored.probabilities) == list(dist.probabilities)
    assert restored.reconstruction_error(dist.marginals()) < 1e-12
    assert restored.reconstruction_error(routing) < 1e-6
    assert {tuple(sorted(component)) for component, _ in dist.components} == \
        {component for component, _ in restored.components}


# ----------------------------------------------------------------------------------------------------------------------
@pytest.mark.parametrize("components", [
    [{"paths": ["1->8"], "probability": 1.0}],
    [{"paths": ["1->5->8", "2->5->8"], "probability": 1.0}],
    [{"paths": ["1->3->6"], "probability": 0.5}],
    [{"paths": ["1->3->6"], "probability": 1.5}, {"paths": [], "probability": -0.5}],
    [],
])
def test_invalid_policy_dicts_are_rejected(components):
    with pytest.raises(NotSubstochastic):
        decompose.policy_from_dict(load_fixture("example_4_1"), {"components": components})
