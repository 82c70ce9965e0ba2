#!/usr/bin/env python3

import os
import sys

import envmapping

# Whether debug messages are shown. Flipped on by the QNET_DEBUG env variable (see qnetmain.read_user_settings_from_env)
# or directly by tests.
DEBUG = os.getenv(envmapping.QNET_DEBUG_ENV, "False").upper() == "TRUE"


# ----------------------------------------------------------------------------------------------------------------------
def display_usage():
    """
    Prints the usage string to stdErr. The reports themselves go to files, so everything meant for a human watching the
    run goes to stdErr.

    :return: Nothing.
    """

    display_error("Usage: qnetmain.py <check|simulate|patient|decompose|experiment> --config <file> [--seed N]",
                  "[--out DIR] [--verify-sim]")


# ----------------------------------------------------------------------------------------------------------------------
def _join(msgs):
    """
    Joins an arbitrary list of items into a single line of text.

    :param msgs: The items to join. Each is converted to a string first.

    :return: A single string.
    """

    message = ""
    for item in msgs:
        message += str(item) + " "
    return message.strip(" ")


# ----------------------------------------------------------------------------------------------------------------------
def display_error(*msgs,
                  quit_after_display=False,
                  exit_code=2):
    """
    Displays a message to the stdErr

    :param msgs: An arbitrary list of items to display. Each item will be converted to a string before being displayed.
           All items will be displayed on a single line.
    :param quit_after_display: If true, then the system will exit after displaying the message. Defaults to False.
    :param exit_code: The exit code used when quit_after_display is True. Defaults to 2 (usage/IO error).

    :return: Nothing.
    """

    print(_join(msgs), file=sys.stderr)

    if quit_after_display:
        sys.exit(exit_code)


# ----------------------------------------------------------------------------------------------------------------------
def display_message(*msgs):
    """
    Displays a progress or summary line on stdErr.

    :param msgs: An arbitrary list of items to display on a single line.

    :return: Nothing.
    """

    print(_join(msgs), file=sys.stderr)


# ----------------------------------------------------------------------------------------------------------------------
def debug(*msgs):
    """
    If the module level global value of DEBUG is set to True, prints each message on its own line to stdErr.

    :param msgs: an arbitrary number of messages to print.

    :return: Nothing.
    """

    if DEBUG:
        for msg in msgs:
            print("[debug] " + str(msg), file=sys.stderr)
