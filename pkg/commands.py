#!/usr/bin/env python3

import os
from concurrent import futures

import numpy as np

import adversary
import catalog
import config
import decompose
import display
import learning
import netfile
import network
import patient
import report
import simulator
import stability
import typed
from errors import ConfigError, SchemaError

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2

DEFAULT_VERIFY_SIM_HORIZON = 500000

SUMMARY_COLUMNS = ["seed", "verdict", "slope", "max_q", "median_q", "mean_window_regret", "departures",
                   "coupling_violations"]

AGREEMENT_COLUMNS = ["seed", "queue", "rate", "empirical", "gap"]


# ----------------------------------------------------------------------------------------------------------------------
def load_instance(cfg,
                  settings):
    """
    Resolves and loads the network named by a config.

    :param cfg: The ExperimentConfig.
    :param settings: The settings from qnetmain.read_user_settings_from_env.

    :return: A tuple (NetworkSpec, TypedNetworkSpec or None).
    """

    path = catalog.resolve_network(cfg.network, settings["network_search_paths"], base_dir=cfg.base_dir)
    description = netfile.read_network_description(path)
    net = network.validate(description)
    typed_net = typed.make_typed(net, description["types"]) if description["types"] else None
    return net, typed_net


# ----------------------------------------------------------------------------------------------------------------------
def output_path(cfg,
                net,
                suffix) -> str:
    name = net.name or os.path.splitext(os.path.basename(cfg.network))[0]
    return os.path.join(cfg.output, cfg.mode + "-" + name + suffix)


# ----------------------------------------------------------------------------------------------------------------------
def base_document(cfg,
                  net) -> dict:
    output = dict()
    output["config_hash"] = cfg.config_hash
    output["instance_hash"] = net.instance_hash()
    output["network"] = net.name
    output["mode"] = cfg.mode
    output["seeds"] = list(cfg.seeds)
    return output


# ----------------------------------------------------------------------------------------------------------------------
def resolve_profile(net,
                    raw) -> dict:
    """
    Turns [profile] entries (queue name -> {server name: probability}) into fixed learner vectors over each node's
    action set. Probability left over goes to idle.

    :return: A dict of node id -> numpy array.
    """

    output = dict()
    for name, distribution in raw.items():
        node = net.id_of(name)
        if node not in net.senders:
            raise SchemaError("Profile given for " + name + ", which does not send packets.")
        targets = learning.action_set(net, node)
        vector = np.zeros(len(targets))
        for server_name, probability in distribution.items():
            server = net.id_of(server_name)
            if server not in targets[1:]:
                raise SchemaError("Profile sends " + name + " to " + server_name + ", which is not an out-neighbor.")
            vector[targets.index(server)] = probability
        if np.any(vector < 0.0) or vector.sum() > 1.0 + 1e-12:
            raise SchemaError("Profile for " + name + " is not a probability distribution.")
        vector[0] = max(0.0, 1.0 - vector[1:].sum())
        output[node] = vector
    return output


# ----------------------------------------------------------------------------------------------------------------------
def resolve_patient_profile(net,
                            raw) -> patient.StrategyProfile:
    rows = dict()
    for name, distribution in raw.items():
        rows[net.id_of(name)] = {net.id_of(server): probability for server, probability in distribution.items()}
    return patient.make_profile(net, rows)


# ----------------------------------------------------------------------------------------------------------------------
def resolve_routing(net,
                    raw) -> dict:
    return {(net.id_of(tail), net.id_of(head)): value for (tail, head), value in raw.items()}


# ----------------------------------------------------------------------------------------------------------------------
def build_policy(cfg,
                 net,
                 settings):
    """
    :return: A simulator policy as described by the [policy] and [learner] sections.
    """

    if cfg.policy_kind == "centralized":
        if cfg.distribution_document is not None:
            distribution = decompose.policy_from_dict(net, cfg.distribution_document)
        else:
            _, _, distribution = decompose.derive_policy(net, cap=settings["path_cap"])
        return simulator.CentralizedPolicy(distribution, cfg.priority, cfg.utility)

    learner = cfg.learner
    if learner.algorithm is learning.Algorithm.FIXED:
        learner = simulator.LearnerConfig(algorithm=learner.algorithm,
                                          rate=learner.rate,
                                          schedule=learner.schedule,
                                          seed_offset=learner.seed_offset,
                                          profile=resolve_profile(net, cfg.profile))
    return simulator.DecentralizedPolicy(learner, cfg.priority, cfg.utility)


# ----------------------------------------------------------------------------------------------------------------------
def run_assumption(name,
                   cfg,
                   net,
                   typed_net,
                   settings) -> dict:
    if name == "bipartite":
        return stability.check_assumption_bipartite(net, cfg.beta).to_dict(net)
    if name == "bipartite_relaxed":
        return stability.check_assumption_bipartite_relaxed(net, cfg.beta).to_dict(net)
    if name == "dag":
        return stability.check_assumption_dag(net, cfg.beta, cap=settings["path_cap"]).to_dict(net)
    if name == "cb_tighter":
        return stability.check_cb_tighter(net, cfg.beta).to_dict(net)
    if name == "theorem54":
        return patient.check_theorem54_condition(net).to_dict(net)
    if typed_net is None:
        raise ConfigError("The typed check needs a network with [type-<source>] sections.")
    return typed.typed_dual_check(typed_net, cfg.beta, cap=settings["path_cap"]).to_dict(net)


# ----------------------------------------------------------------------------------------------------------------------
def cmd_check(cfg,
              settings) -> int:
    """
    Centralized feasibility plus the requested sufficient conditions.

    :param cfg: The ExperimentConfig.
    :param settings: The env settings.

    :return: 0 when the network is centrally stabilizable, 1 when it is not.
    """

    net, typed_net = load_instance(cfg, settings)
    document = base_document(cfg, net)

    if net.is_bipartite:
        verdict = stability.check_bipartite_centralized(net)
        document["centralized"] = verdict.to_dict(net)
    else:
        verdict = stability.check_dag_flow(net, cap=settings["path_cap"])
        document["centralized"] = verdict.to_dict(net)
        if verdict.feasible:
            routing = stability.flow_to_edge(net, verdict.flow)
            document["centralized"]["routing"] = routing.to_dict(net)
            document["centralized"]["edge_condition"] = stability.edge_condition_report(net, routing).holds()

    if typed_net is not None:
        document["types"] = typed_net.mask_names()
    document["assumptions"] = {name: run_assumption(name, cfg, net, typed_net, settings) for name in cfg.assumptions}

    report.write_json(output_path(cfg, net, ".json"), document)
    display.display_message(net.name + ": " + ("feasible" if verdict.feasible else "infeasible") +
                            " (s* = " + "{:.6g}".format(verdict.slack) + ")")
    return EXIT_OK if verdict.feasible else EXIT_NEGATIVE


# ----------------------------------------------------------------------------------------------------------------------
def mean_window_regret(frames) -> float:
    values = [float(np.mean(frame.regrets)) for frame in frames if frame.regrets]
    return float(np.mean(values)) if values else 0.0


# ----------------------------------------------------------------------------------------------------------------------
def arrival_schedule(cfg,
                     net) -> adversary.AdversarySchedule:
    trace = config.resolve_path(cfg, cfg.trace)
    return adversary.schedule_for(net, cfg.arrivals, cfg.window, trace)


# ----------------------------------------------------------------------------------------------------------------------
def drift_arrivals(cfg,
                   net):
    """
    The arrival process for drift diagnostics: None (Bernoulli) or the config's schedule behind a fresh validator.
    Diagnostics and the run see the same arrivals.
    """

    if cfg.arrivals == "bernoulli":
        return None
    return adversary.scheduled_arrivals(net, arrival_schedule(cfg, net))


# ----------------------------------------------------------------------------------------------------------------------
def check_typed_options(cfg,
                        typed_net,
                        policy):
    """
    Typed networks with learners run on the typed engine, which has Bernoulli arrivals and no drift probe.

    :return: Nothing. Raises ConfigError for the options it cannot honour.
    """

    if typed_net is None or not isinstance(policy, simulator.DecentralizedPolicy):
        return
    if cfg.arrivals != "bernoulli":
        raise ConfigError("[arrivals] schedule = " + cfg.arrivals + " is not supported on typed networks.")
    if cfg.drift != "none":
        raise ConfigError("[diagnostics] drift is not supported on typed networks.")


# ----------------------------------------------------------------------------------------------------------------------
def simulate_seed(cfg,
                  net,
                  typed_net,
                  policy,
                  seed) -> dict:
    """
    One seed of cmd_simulate: runs the engine the config asks for, writes the seed's metrics CSV and returns its summary
    row. Module level so that it can run in a worker process.

    :return: A dict with the SUMMARY_COLUMNS plus "estimate", "drift" and "adversary" entries for the JSON summary.
    """

    extra = dict()
    if typed_net is not None and isinstance(policy, simulator.DecentralizedPolicy):
        result = typed.typed_run(typed_net, policy.learner, cfg.horizon, seed, cfg.window, stride=cfg.stride)
        departures = int(result.state.departure_totals.sum())
    elif cfg.arrivals != "bernoulli":
        schedule = arrival_schedule(cfg, net)
        result = adversary.adversarial_run(net, schedule, policy, cfg.horizon, seed, stride=cfg.stride)
        departures = result.state.departures
        extra["adversary"] = {net.name_of(source): float(ratio)
                              for source, ratio in zip(net.sources, result.state.arrivals.validator.max_ratio())}
    else:
        result = simulator.run(net, policy, cfg.horizon, seed, cfg.window, stride=cfg.stride)
        departures = result.state.departures

    report.write_metrics_csv(output_path(cfg, net, "-seed" + str(seed) + ".csv"), net, result.frames, seed,
                             cfg.config_hash)

    if cfg.drift != "none":
        drift = simulator.drift_probe(net,
                                      policy,
                                      cfg.drift_windows,
                                      seed,
                                      cfg.window,
                                      cfg.epsilon,
                                      beta=cfg.beta,
                                      threshold=cfg.threshold,
                                      potential=cfg.drift,
                                      backlog=cfg.backlog,
                                      arrivals=drift_arrivals(cfg, net))
        extra["drift"] = drift.to_dict()

    row = dict()
    row["seed"] = seed
    row["verdict"] = result.estimate.verdict
    row["slope"] = repr(float(result.estimate.slope))
    row["max_q"] = repr(float(result.estimate.max_q))
    row["median_q"] = repr(float(result.estimate.median_q))
    row["mean_window_regret"] = repr(mean_window_regret(result.frames))
    row["departures"] = departures
    row["coupling_violations"] = result.state.coupling_violations
    row["estimate"] = result.estimate.to_dict()
    row.update(extra)
    display.display_message(net.name + " seed " + str(seed) + ": " + result.estimate.verdict)
    return row


# ----------------------------------------------------------------------------------------------------------------------
def fan_out(function,
            jobs,
            argument_lists) -> list:
    """
    Calls function(*arguments) for every argument list, in worker processes when jobs > 1. Results come back in
    argument order.
    """

    if jobs <= 1 or len(argument_lists) <= 1:
        return [function(*arguments) for arguments in argument_lists]
    with futures.ProcessPoolExecutor(max_workers=jobs) as executor:
        pending = [executor.submit(function, *arguments) for arguments in argument_lists]
        return [future.result() for future in pending]


# ----------------------------------------------------------------------------------------------------------------------
def cmd_simulate(cfg,
                 settings) -> int:
    """
    One simulation per seed, each with its own metrics CSV, then a summary CSV and JSON.

    :param cfg: The ExperimentConfig.
    :param settings: The env settings.

    :return: 0.
    """

    net, typed_net = load_instance(cfg, settings)
    policy = build_policy(cfg, net, settings)
    check_typed_options(cfg, typed_net, policy)
    rows = fan_out(simulate_seed, cfg.jobs, [(cfg, net, typed_net, policy, seed) for seed in cfg.seeds])

    report.write_table_csv(output_path(cfg, net, "-summary.csv"),
                           SUMMARY_COLUMNS,
                           [{column: row[column] for column in SUMMARY_COLUMNS} for row in rows],
                           list(cfg.seeds),
                           cfg.config_hash,
                           net.instance_hash())

    document = base_document(cfg, net)
    document["runs"] = [{key: value for key, value in row.items() if key not in SUMMARY_COLUMNS or key == "seed"}
                        for row in rows]
    report.write_json(output_path(cfg, net, ".json"), document)
    return EXIT_OK


# ----------------------------------------------------------------------------------------------------------------------
def cmd_patient(cfg,
                settings,
                verify_sim=False) -> int:
    """
    Costs, stability and Nash checks for a fixed profile of a bipartite network, optionally with best-response dynamics
    and a simulated aging table.

    :param cfg: The ExperimentConfig.
    :param settings: The env settings.
    :param verify_sim: Whether to simulate the profile and compare T_t / t against the computed rates.

    :return: 0 when the first group clears f > 1, 1 otherwise.
    """

    net, _ = load_instance(cfg, settings)
    profile = resolve_patient_profile(net, cfg.profile)
    costs = patient.compute_costs(profile, net)
    stable = patient.check_stability_nash(profile, net)

    document = base_document(cfg, net)
    document["profile"] = profile.to_dict()
    document["costs"] = costs.to_dict(net)
    document["stable"] = stable
    document["nash"] = patient.verify_nash(profile, net, density=cfg.density).to_dict(net)
    document["theorem54_condition"] = patient.check_theorem54_condition(net).to_dict(net)

    if cfg.dynamics:
        result = patient.best_response_dynamics(net, profile, rounds=cfg.rounds, density=cfg.density)
        final = result.trace[-1]
        document["dynamics"] = {"rounds": len(result.trace) - 1,
                                "converged": result.converged,
                                "profile": final.to_dict(),
                                "costs": patient.compute_costs(final, net).to_dict(net),
                                "nash": result.verdict.to_dict(net)}

    if verify_sim:
        horizon = cfg.verify_sim_horizon or DEFAULT_VERIFY_SIM_HORIZON
        seeds = cfg.seeds or (1,)
        rows = list()
        for seed in seeds:
            empirical = patient.simulate_aging(net, profile, horizon, seed)
            for queue in profile.view.queues:
                gap = abs(empirical[queue] - costs.rates[queue])
                rows.append({"seed": seed,
                             "queue": net.name_of(queue),
                             "rate": repr(float(costs.rates[queue])),
                             "empirical": repr(float(empirical[queue])),
                             "gap": repr(float(gap))})
        report.write_table_csv(output_path(cfg, net, "-agreement.csv"), AGREEMENT_COLUMNS, rows, list(seeds),
                               cfg.config_hash, net.instance_hash())
        document["max_gap"] = max(float(row["gap"]) for row in rows)
        document["seeds"] = list(seeds)

    report.write_json(output_path(cfg, net, ".json"), document)
    rates = [round(costs.rates[queue], 6) for queue in profile.view.queues]
    display.display_message(net.name + ": rates " + str(rates))
    return EXIT_OK if stable else EXIT_NEGATIVE


# ----------------------------------------------------------------------------------------------------------------------
def cmd_decompose(cfg,
                  settings) -> int:
    """
    Decomposes the [routing] edge variables (or, without them, the routing derived from the feasibility check) into a
    distribution over vertex-disjoint path sets.

    :param cfg: The ExperimentConfig.
    :param settings: The env settings.

    :return: 0.
    """

    net, _ = load_instance(cfg, settings)
    document = base_document(cfg, net)

    if cfg.routing:
        routing = stability.FractionalRouting(resolve_routing(net, cfg.routing))
        if net.is_bipartite:
            policy = decompose.decompose_bipartite(net, routing)
        else:
            policy = decompose.decompose_paths(net, routing)
    else:
        verdict, routing, policy = decompose.derive_policy(net, cap=settings["path_cap"])
        document["verdict"] = verdict.to_dict(net)

    document["routing"] = routing.to_dict(net)
    document["policy"] = policy.to_dict(net)
    document["reconstruction_error"] = policy.reconstruction_error(routing)
    document["total_probability"] = policy.total()

    report.write_json(output_path(cfg, net, ".json"), document)
    display.display_message(net.name + ": " + str(len(policy.components)) + " components, max marginal error " +
                            "{:.3g}".format(document["reconstruction_error"]))
    return EXIT_OK


# ----------------------------------------------------------------------------------------------------------------------
def cmd_experiment(cfg,
                   settings,
                   verify_sim=False) -> int:
    """
    Runs every config listed in [experiment] configs, in order, and records each one's exit code.

    :return: The largest exit code of the batch.
    """

    document = {"config_hash": cfg.config_hash, "mode": cfg.mode, "seeds": list(cfg.seeds), "runs": list()}
    worst = EXIT_OK
    for path in cfg.configs:
        sub = config.load_config(config.resolve_path(cfg, path), default_output=cfg.output)
        if sub.mode == "experiment":
            raise ConfigError("Experiment configs cannot nest: " + path)
        code = dispatch(sub, settings, verify_sim)
        document["runs"].append({"config": path, "config_hash": sub.config_hash, "mode": sub.mode, "exit_code": code})
        worst = max(worst, code)

    report.write_json(os.path.join(cfg.output, "experiment-" + cfg.config_hash + ".json"), document)
    return worst


# ----------------------------------------------------------------------------------------------------------------------
def dispatch(cfg,
             settings,
             verify_sim=False) -> int:
    """
    Runs the command named by the config's mode.

    :return: The command's exit code.
    """

    # ===========================
    if cfg.mode == "check":
        return cmd_check(cfg, settings)

    # ===========================
    if cfg.mode == "simulate":
        return cmd_simulate(cfg, settings)

    # ===========================
    if cfg.mode == "patient":
        return cmd_patient(cfg, settings, verify_sim)

    # ===========================
    if cfg.mode == "decompose":
        return cmd_decompose(cfg, settings)

    return cmd_experiment(cfg, settings, verify_sim)
