#!/usr/bin/env python3

from dataclasses import dataclass

import display
import learning
import network
import simulator
import stability
from errors import NotCompleteBipartite

DEFAULT_SEEDS = (1, 2, 3)


# ======================================================================================================================
@dataclass(frozen=True)
class CbTighterReport:
    """
    The sorted-rate condition next to the doubled-capacity one and to what simulation shows. `agreement` is the share of
    seeds whose verdict matches the prediction of the sorted-rate condition (bounded when it holds, growth otherwise).
    """

    condition: stability.AssumptionCheck
    half_condition: stability.AssumptionCheck
    estimates: tuple
    seeds: tuple
    agreement: float

    # ------------------------------------------------------------------------------------------------------------------
    def to_dict(self,
                net) -> dict:
        return {"condition": self.condition.to_dict(net),
                "half_condition": self.half_condition.to_dict(net),
                "seeds": list(self.seeds),
                "verdicts": [estimate.to_dict() for estimate in self.estimates],
                "agreement": float(self.agreement)}


# ----------------------------------------------------------------------------------------------------------------------
def cb_tighter_experiment(net,
                          beta,
                          horizon,
                          seeds=DEFAULT_SEEDS,
                          window=None,
                          rate=learning.DEFAULT_RATE) -> CbTighterReport:
    """
    Pairs check_cb_tighter with Hedge learners under unit utilities and oldest-packet priority, one run per seed.

    :param net: A complete bipartite NetworkSpec.
    :param beta: The slack constant of both conditions.
    :param horizon: Steps per run.
    :param seeds: The run seeds.
    :param window: The regret window. Defaults to a hundredth of the horizon.
    :param rate: The Hedge learning rate.

    :return: A CbTighterReport.
    """

    view = network.bipartite_view(net)
    if not view.is_complete:
        raise NotCompleteBipartite("The sorted-rate experiment needs a complete bipartite network.")

    condition = stability.check_cb_tighter(net, beta)
    half_condition = stability.check_assumption_bipartite(net, beta)

    config = simulator.LearnerConfig(algorithm=learning.Algorithm.HEDGE, rate=rate)
    policy = simulator.DecentralizedPolicy(config, simulator.PriorityRule.OLDEST_PACKET, simulator.UtilityModel.UNIT)
    window = window or max(1, horizon // 100)

    estimates = list()
    expected = "bounded" if condition.holds else "growth"
    matches = 0
    for seed in seeds:
        result = simulator.run(net, policy, horizon, seed, window, record_ledger=False)
        estimates.append(result.estimate)
        if result.estimate.verdict == expected:
            matches += 1
        display.debug("cb_tighter seed " + str(seed) + ": " + result.estimate.verdict)

    agreement = matches / float(len(seeds)) if seeds else 0.0
    return CbTighterReport(condition, half_condition, tuple(estimates), tuple(seeds), agreement)
