#!/usr/bin/env python3

import pytest

import netfile
from errors import SchemaError
from netgen import fixture_path, load_fixture

FIXTURES = ["appendix_c", "appendix_f", "cb_single", "example_4_1", "overloaded_single_server", "two_layer_light",
            "typed_two_branch"]


# ----------------------------------------------------------------------------------------------------------------------
@pytest.mark.parametrize("name", FIXTURES)
def test_every_shipped_fixture_validates(name):
    net = load_fixture(name)
    assert net.name == name
    assert net.sources


# ----------------------------------------------------------------------------------------------------------------------
def test_node_names_are_kept_as_written():
    net = load_fixture("example_4_1")
    assert [node.name for node in net.nodes] == ["1", "2", "3", "4", "5", "6", "7", "8"]
    assert net.rates.tolist() == [0.3, 0.3, 0.9, 0.9, 0.8, 0.05, 0.05, 0.9]


# ----------------------------------------------------------------------------------------------------------------------
def test_type_sections_are_read():
    description = netfile.read_network_description(fixture_path("typed_two_branch"))
    assert description["types"] == {"a": [("a", "m"), ("m", "ta")], "b": [("b", "m"), ("m", "tb")]}
    assert netfile.read_network_description(fixture_path("appendix_f"))["types"] == dict()


# ----------------------------------------------------------------------------------------------------------------------
def test_unknown_section_is_rejected(tmp_path):
    path = tmp_path / "bad.net"
    path.write_text("[nodes]\nq = source 0.2\ns = terminal 0.5\n\n[edges]\nq s\n\n[extras]\nfoo\n")
    with pytest.raises(SchemaError):
        netfile.read_network_description(str(path))


# ----------------------------------------------------------------------------------------------------------------------
def test_malformed_node_line_is_rejected(tmp_path):
    path = tmp_path / "bad.net"
    path.write_text("[nodes]\nq = source\ns = terminal 0.5\n\n[edges]\nq s\n")
    with pytest.raises(SchemaError):
        netfile.read_network_description(str(path))


# ----------------------------------------------------------------------------------------------------------------------
def test_malformed_edge_line_is_rejected(tmp_path):
    path = tmp_path / "bad.net"
    path.write_text("[nodes]\nq = source 0.2\ns = terminal 0.5\n\n[edges]\nq s extra\n")
    with pytest.raises(SchemaError):
        netfile.read_network_description(str(path))


# ----------------------------------------------------------------------------------------------------------------------
def test_missing_nodes_section_and_missing_file(tmp_path):
    path = tmp_path / "bad.net"
    path.write_text("[edges]\nq s\n")
    with pytest.raises(SchemaError):
        netfile.read_network_description(str(path))
    with pytest.raises(SchemaError):
        netfile.read_network_description(str(tmp_path / "absent.net"))
