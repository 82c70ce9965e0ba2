#!/usr/bin/env python3

import argparse
import os
import sys

import commands
import config
import display
import envmapping
from errors import QnetError

LEGAL_COMMANDS = [
    "check",
    "simulate",
    "patient",
    "decompose",
    "experiment",
]

# Where reports and metrics go when neither the config nor --out names a directory. This setting can be overridden by
# using an env variable set below.
DEFAULT_OUTPUT_DIR = "./qnet-out"

# Extra directories searched for network files by name, before the fixtures shipped in networks/. More than one path
# may be supplied by using the format: /path/number/1/:/path/number/2/ etc.
DEFAULT_NETWORK_PATHS = ""

# The most source to terminal paths the DAG solvers will enumerate.
DEFAULT_PATH_CAP = 10 ** 6

DEFAULT_DEBUG = False


# ----------------------------------------------------------------------------------------------------------------------
def read_user_settings_from_env():
    """
    Reads some specific settings from the env. If they are missing, then it uses the built in constants.

    :return: a dictionary containing the values of the env settings. If any of these settings are missing from the env,
             then the globals will be substituted.
    """

    output = dict()

    output["output_dir"] = os.getenv(envmapping.QNET_OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)

    # Network search paths (converted to a list, empty entries dropped)
    paths = os.getenv(envmapping.QNET_NETWORK_PATHS_ENV, DEFAULT_NETWORK_PATHS)
    output["network_search_paths"] = [path for path in paths.split(":") if path]

    # Path enumeration cap, converted to a positive integer
    output["path_cap"] = os.getenv(envmapping.QNET_PATH_CAP_ENV, str(DEFAULT_PATH_CAP))
    try:
        output["path_cap"] = int(output["path_cap"])
        if output["path_cap"] < 1:
            raise ValueError(output["path_cap"])
    except ValueError:
        msg = "Environmental variable: " + envmapping.QNET_PATH_CAP_ENV
        msg += " must be a positive integer. Exiting."
        display.display_error(msg, quit_after_display=True, exit_code=commands.EXIT_ERROR)

    # Whether to print debug messages, converted to a boolean
    output["debug"] = os.getenv(envmapping.QNET_DEBUG_ENV, str(DEFAULT_DEBUG))
    if output["debug"].upper() not in ["TRUE", "FALSE"]:
        msg = "Environmental variable: " + envmapping.QNET_DEBUG_ENV
        msg += " must be either 'True' or 'False'. Exiting."
        display.display_error(msg, quit_after_display=True, exit_code=commands.EXIT_ERROR)
    output["debug"] = output["debug"].upper() == "TRUE"

    return output


# ----------------------------------------------------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qnetmain.py",
                                     description="Stability checks, simulations and patient-queue costs for DAG "
                                                 "queueing networks.")
    parser.add_argument("command", help="One of: " + ", ".join(LEGAL_COMMANDS))
    parser.add_argument("--config", required=True, help="The experiment config file.")
    parser.add_argument("--seed", type=int, default=None, help="Run this seed only.")
    parser.add_argument("--out", default=None, help="Output directory.")
    parser.add_argument("--verify-sim", action="store_true", dest="verify_sim",
                        help="patient: simulate the profile and compare the aging rates.")
    return parser


# ----------------------------------------------------------------------------------------------------------------------
def main(argv=None) -> int:
    """
    Main entry point.

    :param argv: The arguments (without the program name). Defaults to sys.argv[1:].

    :return: The exit code: 0 success or feasible, 1 negative verdict, 2 usage, IO or schema error.
    """

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return commands.EXIT_OK if e.code == 0 else commands.EXIT_ERROR

    # Only handle specific types of requests
    if args.command not in LEGAL_COMMANDS:
        display.display_error("Unknown command: " + args.command)
        display.display_usage()
        return commands.EXIT_ERROR

    # Read the env and stuff its settings into the constants
    settings = read_user_settings_from_env()
    display.DEBUG = display.DEBUG or settings["debug"]

    try:
        cfg = config.load_config(args.config,
                                 seed=args.seed,
                                 output=args.out,
                                 default_output=settings["output_dir"])
        if cfg.mode != args.command:
            display.display_error("Command " + args.command + " does not match the config's mode (" + cfg.mode + ").")
            return commands.EXIT_ERROR
        if args.verify_sim and cfg.mode not in ["patient", "experiment"]:
            display.display_error("--verify-sim only applies to the patient command.")
            return commands.EXIT_ERROR
        return commands.dispatch(cfg, settings, args.verify_sim)
    except QnetError as e:
        display.display_error(type(e).__name__ + ":", str(e))
        for violation in getattr(e, "violations", [])[1:]:
            display.display_error("  " + violation)
        return commands.EXIT_ERROR
    except OSError as e:
        display.display_error("IO error:", str(e))
        return commands.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
