#!/usr/bin/env python3


# ======================================================================================================================
class QnetError(Exception):
    """
    Base class for every error raised by the qnet modules. The command line entry point turns these into an error
    message on stderr and exit code 2.
    """


# ======================================================================================================================
class ConfigError(QnetError):
    pass


# ======================================================================================================================
class SolverError(QnetError):
    pass


# ======================================================================================================================
class NetworkError(QnetError):

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 message,
                 violations=None):
        """
        :param message: A one line description of the first problem found.
        :param violations: A list of strings, one per problem found while validating. Defaults to just the message.
        """

        super().__init__(message)
        self.violations = list(violations) if violations else [message]


# ======================================================================================================================
class CycleError(NetworkError):
    pass


# ======================================================================================================================
class DegreeError(NetworkError):
    pass


# ======================================================================================================================
class RateRangeError(NetworkError):
    pass


# ======================================================================================================================
class SchemaError(NetworkError):
    pass


# ======================================================================================================================
class NotBipartite(NetworkError):
    pass


# ======================================================================================================================
class NotCompleteBipartite(NetworkError):
    pass


# ======================================================================================================================
class PathExplosion(QnetError):
    pass


# ======================================================================================================================
class NoStrictSlack(QnetError):
    pass


# ======================================================================================================================
class NotSubstochastic(QnetError):
    pass


# ======================================================================================================================
class TooManyQueues(QnetError):
    pass


# ======================================================================================================================
class TooLarge(QnetError):
    pass


# ======================================================================================================================
class EmptySet(QnetError):
    pass


# ======================================================================================================================
class WindowOutOfRange(QnetError):
    pass


# ======================================================================================================================
class AdversaryViolation(QnetError):

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 step,
                 source,
                 count,
                 window):
        """
        :param step: The time step at which the window constraint was first breached.
        :param source: The node id of the offending source.
        :param count: The number of arrivals seen in the window ending at that step.
        :param window: The window length w.
        """

        msg = "Source " + str(source) + " received " + str(count) + " packets in the " + str(window)
        msg += "-step window ending at step " + str(step) + "."
        super().__init__(msg)
        self.step = step
        self.source = source
        self.count = count
        self.window = window
