#!/usr/bin/env python3

import json
import os

import pytest

import config
import learning
import simulator
from errors import ConfigError


# ----------------------------------------------------------------------------------------------------------------------
def write(tmp_path,
          text,
          name="run.cfg") -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ----------------------------------------------------------------------------------------------------------------------
def test_simulate_config(tmp_path):
    path = write(tmp_path, """
[experiment]
mode = simulate
network = example_4_1
horizon = 2000
window = 20
seeds = 1-3

[policy]
priority = longest
utility = queuediff

[learner]
algorithm = exp3
rate = 0.05
schedule = sqrt
""")
    cfg = config.load_config(path, default_output="fallback")
    assert cfg.mode == "simulate"
    assert cfg.seeds == (1, 2, 3)
    assert cfg.priority is simulator.PriorityRule.LONGEST_QUEUE
    assert cfg.utility is simulator.UtilityModel.QUEUE_DIFF
    assert cfg.learner.algorithm is learning.Algorithm.EXP3
    assert cfg.learner.rate == 0.05
    assert cfg.learner.schedule is learning.Schedule.SQRT
    assert cfg.output == "fallback"
    assert cfg.base_dir == str(tmp_path)
    assert len(cfg.config_hash) == 16


# ----------------------------------------------------------------------------------------------------------------------
def test_check_config_defaults(tmp_path):
    path = write(tmp_path, "[experiment]\nmode = check\nnetwork = appendix_f\n\n"
                           "[check]\nassumptions = dag, bipartite\n")
    cfg = config.load_config(path)
    assert cfg.assumptions == ("dag", "bipartite")
    assert cfg.beta == config.DEFAULT_BETA
    assert cfg.policy_kind == "decentralized"
    assert cfg.arrivals == "bernoulli"
    assert cfg.drift == "none"


# ----------------------------------------------------------------------------------------------------------------------
def test_command_line_overrides(tmp_path):
    path = write(tmp_path, "[experiment]\nmode = check\nnetwork = appendix_f\nseeds = 1 2\noutput = mine\n")
    cfg = config.load_config(path, seed=5, default_output="fallback")
    assert cfg.seeds == (5,)
    assert cfg.output == "mine"
    assert config.load_config(path, output="cli").output == "cli"


# ----------------------------------------------------------------------------------------------------------------------
@pytest.mark.parametrize("text", [
    "[experiment]\nmode = check\nnetwork = a\ncolour = red\n",
    "[experiment]\nmode = check\nnetwork = a\n\n[extras]\nx = 1\n",
    "[experiment]\nnetwork = a\n",
    "[experiment]\nmode = sing\nnetwork = a\n",
    "[experiment]\nmode = check\n",
    "[experiment]\nmode = simulate\nnetwork = a\nhorizon = 50\nwindow = 10\nseeds = 1\n",
    "[experiment]\nmode = simulate\nnetwork = a\nhorizon = ten\nwindow = 10\nseeds = 1\n",
    "[experiment]\nmode = simulate\nnetwork = a\nhorizon = 100\nwindow = 10\n",
    "[experiment]\nmode = patient\nnetwork = a\n",
    "[experiment]\nmode = check\nnetwork = a\n\n[check]\nbeta = 1.5\n",
    "[experiment]\nmode = check\nnetwork = a\n\n[check]\nassumptions = psychic\n",
    "[experiment]\nmode = check\nnetwork = a\n\n[arrivals]\nschedule = custom\n",
    "[experiment]\nmode = check\nnetwork = a\n\n[policy]\ndistribution = manual\n",
    "[experiment]\nmode = check\nnetwork = a\n\n[learner]\nalgorithm = gradient\n",
    "[experiment]\nmode = check\nnetwork = a\nnetwork = b\n",
])
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        config.load_config(write(tmp_path, text))


# ----------------------------------------------------------------------------------------------------------------------
def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load_config(str(tmp_path / "absent.cfg"))


# ----------------------------------------------------------------------------------------------------------------------
def test_hash_ignores_order_and_whitespace(tmp_path):
    first = write(tmp_path, "[experiment]\nmode = check\nnetwork = appendix_f\n\n[check]\nbeta = 0.2\n", "a.cfg")
    second = write(tmp_path, "[check]\nbeta=0.2\n\n[experiment]\nnetwork   =   appendix_f\nmode = check\n", "b.cfg")
    third = write(tmp_path, "[experiment]\nmode = check\nnetwork = appendix_f\n\n[check]\nbeta = 0.3\n", "c.cfg")
    assert config.load_config(first).config_hash == config.load_config(second).config_hash
    assert config.load_config(first).config_hash != config.load_config(third).config_hash


# ----------------------------------------------------------------------------------------------------------------------
def test_parse_seeds():
    assert config.parse_seeds("1-3") == (1, 2, 3)
    assert config.parse_seeds("1, 2 3") == (1, 2, 3)
    assert config.parse_seeds("7") == (7,)


# ----------------------------------------------------------------------------------------------------------------------
def test_profile_and_routing_sections(tmp_path):
    path = write(tmp_path, """
[experiment]
mode = patient
network = appendix_f

[profile]
q1 = s1:0.25 s2:0.75
q2 = s2:1

[routing]
1 5 = 0.4
""")
    cfg = config.load_config(path)
    assert cfg.profile == {"q1": {"s1": 0.25, "s2": 0.75}, "q2": {"s2": 1.0}}
    assert cfg.routing == {("1", "5"): 0.4}

    with pytest.raises(ConfigError):
        config.parse_profile_line("s1")
    with pytest.raises(ConfigError):
        config.parse_profile_line("s1:half")
    with pytest.raises(ConfigError):
        config.parse_routing({"1": "0.4"})
    with pytest.raises(ConfigError):
        config.parse_routing({"1 5": "lots"})


# ----------------------------------------------------------------------------------------------------------------------
def test_paths_are_relative_to_the_config(tmp_path):
    cfg = config.load_config(write(tmp_path, "[experiment]\nmode = check\nnetwork = appendix_f\n"))
    assert config.resolve_path(cfg, "trace.txt") == os.path.join(str(tmp_path), "trace.txt")
    assert config.resolve_path(cfg, "/abs/trace.txt") == "/abs/trace.txt"
    assert config.resolve_path(cfg, None) is None


# ----------------------------------------------------------------------------------------------------------------------
POLICY = {"components": [{"paths": ["1->3->6", "2->5->8"], "probability": 0.75},
                         {"paths": ["1->5->8"], "probability": 0.25}]}


# ----------------------------------------------------------------------------------------------------------------------
def test_centralized_policy_file(tmp_path):
    write(tmp_path, json.dumps({"mode": "decompose", "policy": POLICY}), "policy.json")
    path = write(tmp_path, "[experiment]\nmode = simulate\nnetwork = example_4_1\nhorizon = 100\nwindow = 10\n"
                           "seeds = 1\n\n[policy]\nkind = centralized\ndistribution = policy.json\n")
    cfg = config.load_config(path)
    assert cfg.distribution == "policy.json"
    assert cfg.distribution_document == POLICY


# ----------------------------------------------------------------------------------------------------------------------
def test_bare_policy_is_accepted(tmp_path):
    assert config.read_policy_file(write(tmp_path, json.dumps(POLICY), "policy.json")) == POLICY


# ----------------------------------------------------------------------------------------------------------------------
@pytest.mark.parametrize("text", [
    "{not json",
    json.dumps({"policy": {}}),
    json.dumps({"components": [{"paths": "1->3", "probability": 1.0}]}),
    json.dumps({"components": [{"paths": ["1->3"], "probability": "half"}]}),
    json.dumps({"components": [{"paths": ["1->3"], "probability": True}]}),
    json.dumps({"components": ["1->3"]}),
])
def test_invalid_policy_files(tmp_path, text):
    with pytest.raises(ConfigError):
        config.read_policy_file(write(tmp_path, text, "policy.json"))


# ----------------------------------------------------------------------------------------------------------------------
def test_missing_policy_file(tmp_path):
    path = write(tmp_path, "[experiment]\nmode = simulate\nnetwork = example_4_1\nhorizon = 100\nwindow = 10\n"
                           "seeds = 1\n\n[policy]\nkind = centralized\ndistribution = nowhere.json\n")
    with pytest.raises(ConfigError):
        config.load_config(path)


# ----------------------------------------------------------------------------------------------------------------------
def test_policy_file_needs_a_centralized_kind(tmp_path):
    write(tmp_path, json.dumps(POLICY), "policy.json")
    path = write(tmp_path, "[experiment]\nmode = simulate\nnetwork = example_4_1\nhorizon = 100\nwindow = 10\n"
                           "seeds = 1\n\n[policy]\nkind = decentralized\ndistribution = policy.json\n")
    with pytest.raises(ConfigError):
        config.load_config(path)
