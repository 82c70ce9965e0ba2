#!/usr/bin/env python3

import numpy as np
import pytest
from hypothesis import assume, given, settings

import network
import stability
from errors import NotBipartite, NotCompleteBipartite, PathExplosion, TooManyQueues
from netgen import bipartite, bipartite_networks, layered_dags, load_fixture


# ----------------------------------------------------------------------------------------------------------------------
def test_example_dag_slack():
    """
    Each source gets 0.05 through its dead end and half of server 5's 0.8, so 0.45 against an arrival rate of 0.3.
    """

    net = load_fixture("example_4_1")
    verdict = stability.check_dag_flow(net)
    assert verdict.feasible
    assert verdict.slack == pytest.approx(0.15, abs=1e-7)
    assert verdict.flow.capacity_margin(net) >= -1e-9
    assert verdict.flow.conservation_error(net) == pytest.approx(0.0, abs=1e-12)


# ----------------------------------------------------------------------------------------------------------------------
def test_example_dag_with_halved_capacities_is_infeasible():
    net = load_fixture("example_4_1")
    verdict = stability.check_dag_flow(network.scale_capacities(net, 0.5))
    assert not verdict.feasible
    assert verdict.slack == pytest.approx(-0.075, abs=1e-7)

    # The same through an explicit rate vector
    mu = net.rates.copy()
    mu[list(net.servers)] *= 0.5
    assert stability.check_dag_flow(net, mu=mu).slack == pytest.approx(-0.075, abs=1e-7)


# ----------------------------------------------------------------------------------------------------------------------
def test_enumerate_paths_order_and_cap():
    net = load_fixture("example_4_1")
    paths = stability.enumerate_paths(net)
    assert paths == ((0, 2, 5), (0, 4, 7), (1, 3, 6), (1, 4, 7))
    with pytest.raises(PathExplosion):
        stability.enumerate_paths(net, cap=2)


# ----------------------------------------------------------------------------------------------------------------------
def test_dag_edge_form_on_feasible_fixtures():
    for name in ["example_4_1", "two_layer_light"]:
        net = load_fixture(name)
        verdict = stability.check_dag_edge(net)
        assert verdict.feasible
        report = stability.edge_condition_report(net, verdict.routing)
        assert report.holds()
        assert all(value > 0.0 for value in report.arrival.values())


# ----------------------------------------------------------------------------------------------------------------------
def test_dag_edge_form_passes_infeasible_verdicts_through():
    net = network.scale_capacities(load_fixture("example_4_1"), 0.5)
    verdict = stability.check_dag_edge(net)
    assert not verdict.feasible
    assert verdict.routing is None


# ----------------------------------------------------------------------------------------------------------------------
def test_edge_condition_flags_off_edge_weight():
    net = load_fixture("two_layer_light")
    verdict = stability.check_dag_edge(net)
    z = dict(verdict.routing.z)
    z[(0, 4)] = 0.01
    assert not stability.edge_condition_report(net, stability.FractionalRouting(z)).holds()


# ----------------------------------------------------------------------------------------------------------------------
def test_bipartite_feasible_and_infeasible():
    feasible = stability.check_bipartite_centralized(load_fixture("appendix_f"))
    assert feasible.feasible
    assert feasible.certificate is None

    overloaded = load_fixture("overloaded_single_server")
    verdict = stability.check_bipartite_centralized(overloaded)
    assert not verdict.feasible
    # One server at 0.5 split between two queues at 0.4
    assert verdict.slack == pytest.approx(-0.15, abs=1e-7)
    assert verdict.certificate.sum() == pytest.approx(1.0)
    assert stability.farkas_certificate_holds(overloaded, verdict.certificate, tol=1e-6)


# ----------------------------------------------------------------------------------------------------------------------
def test_bipartite_check_rejects_dags():
    with pytest.raises(NotBipartite):
        stability.check_bipartite_centralized(load_fixture("example_4_1"))


# ----------------------------------------------------------------------------------------------------------------------
def test_integer_weights_pass_where_real_weights_fail():
    """
    At beta = 0.01 every 0/1 weight vector has a good matching, but the scaled LP is infeasible.
    """

    net = load_fixture("appendix_c")
    assert stability.check_assumption_bipartite(net, 0.01).holds

    relaxed = stability.check_assumption_bipartite_relaxed(net, 0.01)
    assert not relaxed.holds
    alpha = np.array(relaxed.failing)
    assert np.all(alpha >= 0.0)
    view = network.bipartite_view(net)
    witness = stability.best_matching(net, alpha)
    assert 0.5 * 0.99 * witness.value <= float(alpha @ view.lam) + 1e-6


# ----------------------------------------------------------------------------------------------------------------------
def test_bipartite_condition_reports_first_failing_vector():
    check = stability.check_assumption_bipartite(load_fixture("appendix_f"), 0.1)
    assert not check.holds
    assert check.failing == (1, 1)
    assert not check.witness.holds(0.45)


# ----------------------------------------------------------------------------------------------------------------------
def test_enumeration_limit():
    net = bipartite([0.01] * (stability.ENUMERATION_LIMIT + 1), [1.0])
    with pytest.raises(TooManyQueues):
        stability.check_assumption_bipartite(net, 0.1)


# ----------------------------------------------------------------------------------------------------------------------
def test_sorted_rate_condition():
    single = stability.check_cb_tighter(load_fixture("cb_single"), 0.1)
    assert single.holds
    assert single.detail["margins"][1] == pytest.approx(0.81 - 0.6)
    assert not stability.check_assumption_bipartite(load_fixture("cb_single"), 0.1).holds

    failing = stability.check_cb_tighter(load_fixture("overloaded_single_server"), 0.1)
    assert not failing.holds
    # mu is padded with a zero for the second queue
    assert failing.failing == 2

    with pytest.raises(NotCompleteBipartite):
        stability.check_cb_tighter(load_fixture("appendix_c"), 0.1)


# ----------------------------------------------------------------------------------------------------------------------
def test_dag_condition_modes():
    net = load_fixture("two_layer_light")
    assert stability.check_assumption_dag(net, 0.1).holds
    assert not stability.check_assumption_dag(load_fixture("example_4_1"), 0.1).holds

    alpha = np.zeros(net.size)
    alpha[0] = 1.0
    witness_check = stability.check_assumption_dag(net, 0.1, alpha=alpha)
    assert witness_check.witness is not None
    # The best single edge out of source 1 is worth 0.45 * 0.9 against 0.15
    assert witness_check.witness.value == pytest.approx(0.45 * 0.9)
    assert witness_check.holds


# ----------------------------------------------------------------------------------------------------------------------
def test_best_path_set_needs_zero_terminal_weights():
    net = load_fixture("two_layer_light")
    alpha = np.ones(net.size)
    with pytest.raises(ValueError):
        stability.best_path_set(net, alpha)


# ----------------------------------------------------------------------------------------------------------------------
@given(bipartite_networks())
@settings(max_examples=60, deadline=None)
def test_centralized_slack_matches_matching_polytope(net):
    verdict = stability.check_bipartite_centralized(net)
    assert verdict.slack == pytest.approx(stability.brute_force_bipartite_slack(net), abs=1e-6)
    if not verdict.feasible:
        assert stability.farkas_certificate_holds(net, verdict.certificate, tol=1e-6)


# ----------------------------------------------------------------------------------------------------------------------
@given(bipartite_networks())
@settings(max_examples=60, deadline=None)
def test_best_matching_matches_enumeration(net):
    view = network.bipartite_view(net)
    alpha = np.linspace(1.0, 0.5, view.n)
    witness = stability.best_matching(net, alpha)
    best = max(sum(alpha[row] * view.mu[col] for row, col in matching)
               for matching in stability.enumerate_matchings(view))
    assert witness.value == pytest.approx(best, abs=1e-9)
    assert network.is_vertex_disjoint(witness.edges)


# ----------------------------------------------------------------------------------------------------------------------
@given(bipartite_networks())
@settings(max_examples=40, deadline=None)
def test_real_weight_condition_implies_integer_condition(net):
    if stability.check_assumption_bipartite_relaxed(net, 0.1).holds:
        assert stability.check_assumption_bipartite(net, 0.1).holds


# ----------------------------------------------------------------------------------------------------------------------
@given(layered_dags())
@settings(max_examples=50, deadline=None)
def test_best_path_set_matches_exhaustive_search(net):
    alpha = np.zeros(net.size)
    for node in net.senders:
        alpha[node] = 1.0 + 0.25 * node
    rates = net.rates
    witness = stability.best_path_set(net, alpha)
    best = 0.0
    for subset in stability.brute_force_path_sets(net):
        best = max(best, sum((alpha[tail] - alpha[head]) * rates[head] for tail, head in subset))
    assert witness.value == pytest.approx(best, abs=1e-9)
    assert network.is_vertex_disjoint(witness.edges)


# ----------------------------------------------------------------------------------------------------------------------
@given(layered_dags())
@settings(max_examples=50, deadline=None)
def test_path_flow_respects_capacities(net):
    verdict = stability.check_dag_flow(net)
    totals = verdict.flow.source_totals(net)
    for source in net.sources:
        assert totals[source] >= net.rates[source] + verdict.slack - 1e-6
    assert verdict.flow.capacity_margin(net) >= -1e-6


# ----------------------------------------------------------------------------------------------------------------------
@given(layered_dags())
@settings(max_examples=50, deadline=None)
def test_strict_path_flow_maps_to_edge_system(net):
    verdict = stability.check_dag_flow(net)
    assume(verdict.slack > 0.01)
    routing = stability.flow_to_edge(net, verdict.flow)
    assert stability.edge_condition_report(net, routing).holds()


# ----------------------------------------------------------------------------------------------------------------------
@given(layered_dags())
@settings(max_examples=40, deadline=None)
def test_doubled_capacity_condition_implies_feasibility(net):
    if stability.check_assumption_dag(net, 0.1).holds:
        assert stability.check_dag_flow(net).feasible
