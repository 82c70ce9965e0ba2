#!/usr/bin/env python3

import os.path

import display
from errors import ConfigError

NETWORK_FILE_EXTENSION = ".net"

# The fixtures that ship with the tool. Always searched after any user supplied paths.
SHIPPED_NETWORKS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "networks")


# ----------------------------------------------------------------------------------------------------------------------
def evaluate_network_file(file_n,
                          dir_n):
    """
    Given a file name, evaluates whether it is a network file or not. If it is, returns a tuple containing the network
    name (the file name without the extension) and the path to the file.

    :param file_n: The name of the file.
    :param dir_n: The path where the file is located.

    :return: A tuple (name, full path), or None if the file is not a network file.
    """

    if file_n.endswith(NETWORK_FILE_EXTENSION):
        return os.path.splitext(file_n)[0], os.path.join(dir_n, file_n)
    return None


# ----------------------------------------------------------------------------------------------------------------------
def find_all_network_files(search_paths) -> dict:
    """
    Searches the given paths and locates any network files in these paths. When the same name appears more than once,
    the first search path wins.

    :param search_paths: A list of paths where the network files could live.

    :return: A dictionary where the key is the network name and the value is the full path to the network file.
    """

    network_files = dict()
    for search_path in search_paths:
        search_path = os.path.expanduser(search_path)
        if not (os.path.exists(search_path) and os.path.isdir(search_path)):
            continue
        for file_n in sorted(os.listdir(search_path)):
            result = evaluate_network_file(file_n, search_path)
            if result and result[0] not in network_files:
                network_files[result[0]] = result[1]

    return network_files


# ----------------------------------------------------------------------------------------------------------------------
def resolve_network(name_or_path,
                    search_paths=None,
                    base_dir=None) -> str:
    """
    Turns the network entry of an experiment config into a file path. Explicit paths (absolute, or relative to the
    config file) are used as is; anything else is looked up by name in the search paths and then the shipped fixtures.

    :param name_or_path: A fixture name such as "example_4_1" or a path to a .net file.
    :param search_paths: A list of extra directories to search. Defaults to none.
    :param base_dir: The directory relative paths are resolved against. Defaults to the current directory.

    :return: The full path to the network file.
    """

    candidate = os.path.expanduser(name_or_path)
    if not os.path.isabs(candidate) and base_dir:
        candidate = os.path.join(base_dir, candidate)
    if os.path.isfile(candidate):
        return candidate

    paths = list(search_paths or [])
    paths.append(SHIPPED_NETWORKS_DIR)
    network_files = find_all_network_files(paths)

    name = os.path.splitext(os.path.basename(name_or_path))[0]
    if name in network_files:
        display.debug("Resolved network " + name_or_path + " to " + network_files[name])
        return network_files[name]

    raise ConfigError("No network file found for: " + name_or_path + ". I looked in: " + ":".join(paths))
