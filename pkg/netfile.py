#!/usr/bin/env python3

import configparser

import display
from errors import SchemaError

LEGAL_SECTIONS = ["network", "nodes", "edges"]
LEGAL_NETWORK_KEYS = ["name", "description"]
TYPE_SECTION_PREFIX = "type-"


# ----------------------------------------------------------------------------------------------------------------------
def read_network_file(network_file):
    """
    Opens a network file (given by network_file).

    :param network_file: The full path to the network file.

    :return: A configParser object.
    """

    net_obj = configparser.ConfigParser(allow_no_value=True,
                                        delimiters="=",
                                        empty_lines_in_values=False)

    # Force configparser to maintain capitalization of keys
    net_obj.optionxform = str

    try:
        with open(network_file, "r") as f:
            net_obj.read_file(f)
    except OSError as e:
        raise SchemaError("Unable to read network file " + str(network_file) + ": " + str(e))
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise SchemaError("Duplicate entries in network file " + str(network_file) + ": " + str(e))
    except configparser.Error as e:
        raise SchemaError("Malformed network file " + str(network_file) + ": " + str(e))

    return net_obj


# ----------------------------------------------------------------------------------------------------------------------
def get_item_list(net_obj,
                  section) -> list:
    """
    Returns a list of the items in the section given by "section". Assumes that these are merely lists (vs. key/value
    pairs) and strips out the empty value to return only what would be the keys.

    :param net_obj: The config parser object.
    :param section: The section to extract the list of items from.

    :return: A list of strings, one per line of the section.
    """

    try:
        items = net_obj.items(section, raw=True)
    except configparser.NoSectionError:
        return []

    output = list()
    for key, value in items:
        if value is not None:
            raise SchemaError("Section [" + section + "] takes bare lines, got a value for: " + key)
        output.append(key)
    return output


# ----------------------------------------------------------------------------------------------------------------------
def get_key_value_pairs(net_obj,
                        section) -> dict:
    """
    Returns all of the items from a specific section of the net_obj, in file order.

    :param net_obj: The config parser object.
    :param section: The section from which to extract the key value pairs.

    :return: A dict containing all of the items, where the key is the name of the item and value is its raw value.
    """

    output = dict()
    try:
        items = net_obj.items(section, raw=True)
    except (configparser.NoSectionError, configparser.NoOptionError):
        return output

    for key, value in items:
        if value is None:
            raise SchemaError("Section [" + section + "] expects key = value lines, got: " + key)
        output[key] = value

    return output


# ----------------------------------------------------------------------------------------------------------------------
def parse_edge_line(line) -> tuple:
    """
    Splits a "<tail> <head>" line.

    :param line: The raw line.

    :return: A (tail name, head name) tuple.
    """

    parts = line.split()
    if len(parts) != 2:
        raise SchemaError("Edge lines must read '<tail> <head>', got: " + line)
    return parts[0], parts[1]


# ----------------------------------------------------------------------------------------------------------------------
def get_type_masks(net_obj) -> dict:
    """
    Typed networks have one section per source, and we don't know how many there are ahead of time. Returns a
    dictionary keyed with the source name where the value is the list of edges usable by that source's packets. The
    source name is embedded in the section name. For example:

    [type-q1]

    :param net_obj: The config parser object.

    :return: A dictionary where the key is the source name, and the value is a LIST of (tail, head) name pairs.
    """

    output = dict()
    for section in net_obj.sections():
        if section.startswith(TYPE_SECTION_PREFIX):
            source = section[len(TYPE_SECTION_PREFIX):]
            output[source] = [parse_edge_line(line) for line in get_item_list(net_obj, section)]
    return output


# ----------------------------------------------------------------------------------------------------------------------
def read_network_description(network_file) -> dict:
    """
    Reads a network file into the raw description accepted by network.validate.

    :param network_file: The full path to the network file.

    :return: A dict with "name", "description", "nodes", "edges" and "types" keys. "types" is empty for untyped
             networks.
    """

    net_obj = read_network_file(network_file)

    for section in net_obj.sections():
        if section not in LEGAL_SECTIONS and not section.startswith(TYPE_SECTION_PREFIX):
            raise SchemaError("Unknown section in network file: [" + section + "]")
    if not net_obj.has_section("nodes"):
        raise SchemaError("Network file has no [nodes] section: " + str(network_file))

    metadata = get_key_value_pairs(net_obj, "network")
    for key in metadata.keys():
        if key not in LEGAL_NETWORK_KEYS:
            raise SchemaError("Unknown key in [network]: " + key)

    nodes = list()
    for name, value in get_key_value_pairs(net_obj, "nodes").items():
        parts = value.split()
        if len(parts) != 2:
            raise SchemaError("Node lines must read '<name> = <kind> <rate>', got: " + name + " = " + value)
        nodes.append({"name": name, "kind": parts[0], "rate": parts[1]})

    output = dict()
    output["name"] = metadata.get("name", "")
    output["description"] = metadata.get("description", "")
    output["nodes"] = nodes
    output["edges"] = [parse_edge_line(line) for line in get_item_list(net_obj, "edges")]
    output["types"] = get_type_masks(net_obj)

    display.debug("Read network " + output["name"] + " from " + str(network_file),
                  str(len(nodes)) + " nodes, " + str(len(output["edges"])) + " edges, " +
                  str(len(output["types"])) + " typed sections")

    return output

