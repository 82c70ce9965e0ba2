#!/usr/bin/env python3

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field

import adversary
import display
import learning
import netfile
import simulator
from errors import ConfigError

LEGAL_MODES = ["check", "simulate", "patient", "decompose", "experiment"]

# Every section an experiment config may have, and the keys each one accepts. [profile] and [routing] are free-form
# (one line per queue or per edge) and are checked when they are parsed.
LEGAL_KEYS = {
    "experiment": ["mode", "network", "horizon", "window", "stride", "seeds", "output", "jobs", "configs"],
    "policy": ["kind", "priority", "utility", "distribution"],
    "learner": ["algorithm", "rate", "schedule", "seed_offset"],
    "profile": None,
    "check": ["beta", "assumptions"],
    "routing": None,
    "arrivals": ["schedule", "trace"],
    "diagnostics": ["drift", "epsilon", "threshold", "windows", "backlog"],
    "patient": ["density", "verify_sim_horizon", "rounds", "dynamics"],
}

REQUIRED_KEYS = {
    "check": ["network"],
    "simulate": ["network", "horizon", "window", "seeds"],
    "patient": ["network"],
    "decompose": ["network"],
    "experiment": ["configs"],
}

LEGAL_ASSUMPTIONS = ["bipartite", "bipartite_relaxed", "dag", "cb_tighter", "theorem54", "typed"]
LEGAL_POLICY_KINDS = ["decentralized", "centralized"]
LEGAL_ARRIVALS = ["bernoulli"] + [kind.value for kind in adversary.ScheduleKind]
LEGAL_DRIFT = ["none", "age", "len"]

DEFAULT_BETA = 0.1
DEFAULT_EPSILON = 0.1
DEFAULT_DRIFT_WINDOWS = 100
DEFAULT_DENSITY = 21
DEFAULT_ROUNDS = 50


# ======================================================================================================================
@dataclass(frozen=True)
class ExperimentConfig:
    """
    A parsed experiment config. Raw values are kept as strings only where they name things in the network (profile and
    routing entries), which are resolved once the network is loaded.
    """

    mode: str
    network: str = None
    horizon: int = None
    window: int = None
    stride: int = None
    seeds: tuple = tuple()
    output: str = None
    jobs: int = 1
    configs: tuple = tuple()
    policy_kind: str = "decentralized"
    priority: simulator.PriorityRule = simulator.PriorityRule.OLDEST_PACKET
    utility: simulator.UtilityModel = simulator.UtilityModel.UNIT
    distribution: str = "auto"
    distribution_document: dict = None
    learner: simulator.LearnerConfig = field(default_factory=simulator.LearnerConfig)
    profile: dict = field(default_factory=dict)
    beta: float = DEFAULT_BETA
    assumptions: tuple = tuple()
    routing: dict = field(default_factory=dict)
    arrivals: str = "bernoulli"
    trace: str = None
    drift: str = "none"
    epsilon: float = DEFAULT_EPSILON
    threshold: float = None
    drift_windows: int = DEFAULT_DRIFT_WINDOWS
    backlog: int = 0
    density: int = DEFAULT_DENSITY
    verify_sim_horizon: int = None
    rounds: int = DEFAULT_ROUNDS
    dynamics: bool = False
    base_dir: str = "."
    config_hash: str = ""


# ----------------------------------------------------------------------------------------------------------------------
def read_config_file(config_file):
    """
    Opens an experiment config.

    :param config_file: The full path to the config file.

    :return: A configParser object.
    """

    if not os.path.isfile(config_file):
        raise ConfigError("Config file does not exist: " + str(config_file))

    config_obj = configparser.ConfigParser(allow_no_value=True,
                                           delimiters="=",
                                           interpolation=None)

    # Keep node names as written.
    config_obj.optionxform = str

    try:
        config_obj.read(config_file)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError("Duplicate entries in config file " + str(config_file) + ": " + str(e))
    except configparser.Error as e:
        raise ConfigError("Could not parse config file " + str(config_file) + ": " + str(e))

    return config_obj


# ----------------------------------------------------------------------------------------------------------------------
def config_hash(config_obj) -> str:
    """
    Hash of the canonicalised config: sections and keys sorted, values stripped.

    :param config_obj: The config parser object.

    :return: The first 16 hex digits of the sha256.
    """

    canonical = dict()
    for section in sorted(config_obj.sections()):
        canonical[section] = {key: (value or "").strip()
                              for key, value in sorted(netfile.get_key_value_pairs(config_obj, section).items())}
    text = json.dumps(canonical, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# ----------------------------------------------------------------------------------------------------------------------
def _check_keys(config_obj):
    for section in config_obj.sections():
        if section not in LEGAL_KEYS:
            raise ConfigError("Unknown section in config: [" + section + "]")
        if LEGAL_KEYS[section] is None:
            continue
        for key in netfile.get_key_value_pairs(config_obj, section).keys():
            if key not in LEGAL_KEYS[section]:
                raise ConfigError("Unknown key in [" + section + "]: " + key)


# ----------------------------------------------------------------------------------------------------------------------
def _get(values,
         key,
         convert,
         default=None,
         section="experiment"):
    """
    Converts one raw value, reporting the section and key on failure.
    """

    raw = values.get(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        return convert(raw.strip())
    except ValueError:
        raise ConfigError("[" + section + "] " + key + ": cannot read '" + raw + "'")


# ----------------------------------------------------------------------------------------------------------------------
def _positive_int(raw) -> int:
    value = int(raw)
    if value < 1:
        raise ValueError(raw)
    return value


# ----------------------------------------------------------------------------------------------------------------------
def _nonnegative_int(raw) -> int:
    value = int(raw)
    if value < 0:
        raise ValueError(raw)
    return value


# ----------------------------------------------------------------------------------------------------------------------
def _bool(raw) -> bool:
    if raw.upper() not in ["TRUE", "FALSE"]:
        raise ValueError(raw)
    return raw.upper() == "TRUE"


# ----------------------------------------------------------------------------------------------------------------------
def _choice(legal):
    def convert(raw):
        if raw.lower() not in legal:
            raise ValueError(raw)
        return raw.lower()
    return convert


# ----------------------------------------------------------------------------------------------------------------------
def _enum(enum_class):
    def convert(raw):
        return enum_class(raw.lower())
    return convert


# ----------------------------------------------------------------------------------------------------------------------
def parse_seeds(raw) -> tuple:
    """
    Seeds are written as a list ("1 2 3" or "1, 2, 3") or a range ("1-5", inclusive).
    """

    raw = raw.strip()
    if "-" in raw and "," not in raw and " " not in raw:
        low, high = raw.split("-", 1)
        return tuple(range(int(low), int(high) + 1))
    return tuple(int(token) for token in raw.replace(",", " ").split())


# ----------------------------------------------------------------------------------------------------------------------
def parse_profile_line(value) -> dict:
    """
    Parses "<server>:<prob> <server>:<prob> ..." into a dict of server name -> probability.
    """

    output = dict()
    for token in value.split():
        if ":" not in token:
            raise ConfigError("Profile entries must read <server>:<probability>, got: " + token)
        server, probability = token.rsplit(":", 1)
        try:
            output[server] = float(probability)
        except ValueError:
            raise ConfigError("Profile probability is not a number: " + token)
    return output


# ----------------------------------------------------------------------------------------------------------------------
def parse_routing(values) -> dict:
    """
    Parses [routing] lines of the form "<tail> <head> = <z>" into a dict of (tail name, head name) -> z.
    """

    output = dict()
    for key, value in values.items():
        parts = key.split()
        if len(parts) != 2 or value is None:
            raise ConfigError("Routing lines must read '<tail> <head> = <value>', got: " + key)
        try:
            output[(parts[0], parts[1])] = float(value)
        except ValueError:
            raise ConfigError("Routing value is not a number: " + key + " = " + value)
    return output


# ----------------------------------------------------------------------------------------------------------------------
def read_policy_file(policy_file) -> dict:
    """
    Reads a centralized policy written by the decompose command. Either the whole decompose report or just its "policy"
    entry is accepted. Node names are resolved later, against the loaded network.

    :param policy_file: The path to the JSON file.

    :return: A dict with a "components" list of {"paths": [...], "probability": p}.
    """

    if not os.path.isfile(policy_file):
        raise ConfigError("Policy file does not exist: " + str(policy_file))
    try:
        with open(policy_file, "r") as f:
            document = json.load(f)
    except ValueError as e:
        raise ConfigError("Policy file " + str(policy_file) + " is not valid JSON: " + str(e))

    if isinstance(document, dict) and "policy" in document:
        document = document["policy"]
    if not isinstance(document, dict) or not isinstance(document.get("components"), list):
        raise ConfigError("Policy file " + str(policy_file) + " has no components list.")

    for component in document["components"]:
        if not isinstance(component, dict):
            raise ConfigError("Policy components must be objects, got: " + str(component))
        paths = component.get("paths")
        probability = component.get("probability")
        if not isinstance(paths, list) or not all(isinstance(path, str) for path in paths):
            raise ConfigError("Policy component paths must be a list of strings, got: " + str(paths))
        if isinstance(probability, bool) or not isinstance(probability, (int, float)):
            raise ConfigError("Policy component probability is not a number: " + str(probability))
    return {"components": document["components"]}


# ----------------------------------------------------------------------------------------------------------------------
def load_config(config_file,
                seed=None,
                output=None,
                default_output=None) -> ExperimentConfig:
    """
    Reads, checks and converts an experiment config.

    :param config_file: The path to the config.
    :param seed: Optional seed from the command line; replaces the seed list.
    :param output: Optional output directory from the command line.
    :param default_output: The output directory used when neither the config nor the command line names one.

    :return: An ExperimentConfig.
    """

    config_obj = read_config_file(config_file)
    _check_keys(config_obj)

    sections = {section: netfile.get_key_value_pairs(config_obj, section) for section in config_obj.sections()}
    experiment = sections.get("experiment", dict())
    mode = _get(experiment, "mode", _choice(LEGAL_MODES))
    if mode is None:
        raise ConfigError("[experiment] mode is required (one of " + ", ".join(LEGAL_MODES) + ").")

    for key in REQUIRED_KEYS[mode]:
        if not (experiment.get(key) or "").strip():
            raise ConfigError("Mode " + mode + " requires [experiment] " + key + ".")
    if mode == "patient" and "profile" not in sections:
        raise ConfigError("Mode patient requires a [profile] section.")

    values = dict()
    values["mode"] = mode
    values["network"] = _get(experiment, "network", str)
    values["horizon"] = _get(experiment, "horizon", _positive_int)
    values["window"] = _get(experiment, "window", _positive_int)
    values["stride"] = _get(experiment, "stride", _positive_int)
    values["seeds"] = _get(experiment, "seeds", parse_seeds, tuple())
    values["output"] = _get(experiment, "output", str)
    values["jobs"] = _get(experiment, "jobs", _positive_int, 1)
    values["configs"] = _get(experiment, "configs", lambda raw: tuple(raw.split()), tuple())

    if values["horizon"] is not None and values["window"] is not None:
        if values["horizon"] < 10 * values["window"]:
            raise ConfigError("Horizon " + str(values["horizon"]) + " is shorter than 10 windows of " +
                              str(values["window"]) + " steps.")

    policy = sections.get("policy", dict())
    values["policy_kind"] = _get(policy, "kind", _choice(LEGAL_POLICY_KINDS), "decentralized", "policy")
    values["priority"] = _get(policy, "priority", _enum(simulator.PriorityRule), simulator.PriorityRule.OLDEST_PACKET,
                              "policy")
    values["utility"] = _get(policy, "utility", _enum(simulator.UtilityModel), simulator.UtilityModel.UNIT, "policy")
    values["distribution"] = _get(policy, "distribution", str, "auto", "policy")
    values["distribution_document"] = None
    if values["distribution"] != "auto":
        if values["policy_kind"] != "centralized":
            raise ConfigError("[policy] distribution only applies to kind = centralized.")
        policy_file = os.path.join(os.path.dirname(os.path.abspath(config_file)), values["distribution"])
        values["distribution_document"] = read_policy_file(policy_file)

    learner = sections.get("learner", dict())
    profile_raw = {queue: parse_profile_line(line or "") for queue, line in sections.get("profile", dict()).items()}
    values["learner"] = simulator.LearnerConfig(
        algorithm=_get(learner, "algorithm", _enum(learning.Algorithm), learning.Algorithm.HEDGE, "learner"),
        rate=_get(learner, "rate", float, learning.DEFAULT_RATE, "learner"),
        schedule=_get(learner, "schedule", _enum(learning.Schedule), learning.Schedule.CONSTANT, "learner"),
        seed_offset=_get(learner, "seed_offset", _nonnegative_int, 0, "learner"))
    values["profile"] = profile_raw

    check = sections.get("check", dict())
    values["beta"] = _get(check, "beta", float, DEFAULT_BETA, "check")
    if not 0.0 < values["beta"] < 1.0:
        raise ConfigError("[check] beta must be strictly between 0 and 1.")
    values["assumptions"] = _get(check, "assumptions", lambda raw: tuple(raw.replace(",", " ").split()), tuple(),
                                 "check")
    for name in values["assumptions"]:
        if name not in LEGAL_ASSUMPTIONS:
            raise ConfigError("[check] assumptions: unknown check '" + name + "'")

    values["routing"] = parse_routing(sections.get("routing", dict()))

    arrivals = sections.get("arrivals", dict())
    values["arrivals"] = _get(arrivals, "schedule", _choice(LEGAL_ARRIVALS), "bernoulli", "arrivals")
    values["trace"] = _get(arrivals, "trace", str, None, "arrivals")
    if values["arrivals"] == adversary.ScheduleKind.CUSTOM.value and values["trace"] is None:
        raise ConfigError("[arrivals] schedule = custom needs a trace.")

    diagnostics = sections.get("diagnostics", dict())
    values["drift"] = _get(diagnostics, "drift", _choice(LEGAL_DRIFT), "none", "diagnostics")
    values["epsilon"] = _get(diagnostics, "epsilon", float, DEFAULT_EPSILON, "diagnostics")
    values["threshold"] = _get(diagnostics, "threshold", float, None, "diagnostics")
    values["drift_windows"] = _get(diagnostics, "windows", _positive_int, DEFAULT_DRIFT_WINDOWS, "diagnostics")
    values["backlog"] = _get(diagnostics, "backlog", _nonnegative_int, 0, "diagnostics")

    patient = sections.get("patient", dict())
    values["density"] = _get(patient, "density", _positive_int, DEFAULT_DENSITY, "patient")
    values["verify_sim_horizon"] = _get(patient, "verify_sim_horizon", _positive_int, None, "patient")
    values["rounds"] = _get(patient, "rounds", _positive_int, DEFAULT_ROUNDS, "patient")
    values["dynamics"] = _get(patient, "dynamics", _bool, False, "patient")

    if seed is not None:
        values["seeds"] = (int(seed),)
    if output is not None:
        values["output"] = output
    if values["output"] is None:
        values["output"] = default_output

    values["base_dir"] = os.path.dirname(os.path.abspath(config_file))
    values["config_hash"] = config_hash(config_obj)

    display.debug("Read config " + str(config_file) + " (mode " + mode + ", hash " + values["config_hash"] + ")")
    return ExperimentConfig(**values)


# ----------------------------------------------------------------------------------------------------------------------
def resolve_path(config,
                 path) -> str:
    """
    Paths inside a config are relative to the config's own directory.
    """

    if path is None or os.path.isabs(path):
        return path
    return os.path.join(config.base_dir, path)
