#!/usr/bin/env python3

import os
from collections import deque
from enum import Enum

import numpy as np

import display
import simulator
from errors import AdversaryViolation, ConfigError

# Slack on lambda_i * w when turning it into an integer arrival cap.
CAP_TOL = 1e-9


# ======================================================================================================================
class ScheduleKind(Enum):
    FRONT_LOADED_BURST = "burst"
    ROUND_ROBIN = "roundrobin"
    CUSTOM = "custom"


# ----------------------------------------------------------------------------------------------------------------------
def window_caps(lam,
                window) -> np.ndarray:
    """
    The largest integer number of arrivals each source may see in any w-step window: floor(lambda_i * w).
    """

    return np.floor(np.asarray(lam, dtype=float) * window + CAP_TOL).astype(np.int64)


# ----------------------------------------------------------------------------------------------------------------------
def read_trace(path,
               sources) -> np.ndarray:
    """
    Reads an arrival trace: one line per step, one 0/1 token per source separated by whitespace. Blank lines and lines
    starting with # are skipped.

    :param path: The trace file.
    :param sources: The number of sources.

    :return: A (steps x sources) boolean array.
    """

    if not os.path.isfile(path):
        raise ConfigError("Arrival trace " + path + " does not exist.")

    rows = list()
    with open(path, "r") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != sources or any(token not in ("0", "1") for token in tokens):
                raise ConfigError("Trace " + path + " line " + str(line_number) + ": expected " + str(sources) +
                                  " tokens of 0 or 1, got '" + line + "'")
            rows.append([token == "1" for token in tokens])
    return np.array(rows, dtype=bool).reshape(len(rows), sources)


# ======================================================================================================================
class AdversarySchedule(object):
    """
    An offline arrival schedule constrained by a (w, lambda) window rule: no source may see more than lambda_i * w
    arrivals in any w consecutive steps.

    FRONT_LOADED_BURST puts floor(lambda_i w) arrivals at the start of every window. ROUND_ROBIN spreads the same
    number evenly over the window, staggered by source. CUSTOM replays a trace and is idle once the trace runs out.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 kind,
                 window,
                 lam,
                 trace=None):
        """
        :param kind: A ScheduleKind (or its value).
        :param window: The window length w.
        :param lam: The per-source rate bounds, in source order.
        :param trace: A (steps x sources) boolean array, required for CUSTOM.
        """

        self.kind = ScheduleKind(kind)
        if window < 1:
            raise ConfigError("The adversary window must be at least one step.")
        self.window = int(window)
        self.lam = np.asarray(lam, dtype=float)
        self.caps = window_caps(self.lam, self.window)
        self.trace = None
        if self.kind is ScheduleKind.CUSTOM:
            if trace is None:
                raise ConfigError("A custom schedule needs a trace.")
            self.trace = np.asarray(trace, dtype=bool)
            if self.trace.ndim != 2 or self.trace.shape[1] != len(self.lam):
                raise ConfigError("Trace must have one column per source.")

    # ------------------------------------------------------------------------------------------------------------------
    def draw(self,
             t) -> np.ndarray:
        """
        :param t: The step.

        :return: One bool per source.
        """

        if self.kind is ScheduleKind.CUSTOM:
            if t < len(self.trace):
                return self.trace[t]
            return np.zeros(len(self.lam), dtype=bool)

        phase = t % self.window
        if self.kind is ScheduleKind.FRONT_LOADED_BURST:
            return phase < self.caps

        output = np.zeros(len(self.lam), dtype=bool)
        for index, cap in enumerate(self.caps):
            shifted = (phase + index) % self.window
            output[index] = (shifted + 1) * cap // self.window > shifted * cap // self.window
        return output


# ----------------------------------------------------------------------------------------------------------------------
def schedule_for(net,
                 kind,
                 window,
                 trace_path=None) -> AdversarySchedule:
    """
    Builds a schedule bounded by the network's own arrival rates.
    """

    lam = net.rates[list(net.sources)]
    trace = read_trace(trace_path, len(lam)) if trace_path else None
    return AdversarySchedule(kind, window, lam, trace)


# ======================================================================================================================
class WindowValidator(object):
    """
    Checks the window rule online. It keeps the last w arrival vectors and a running count per source; every step the
    count of the window ending at that step is compared against the integer cap. Windows shorter than w at the start of
    the run are contained in full windows, so checking them is never stricter than the rule.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 window,
                 lam,
                 sources=None):
        """
        :param window: The window length w.
        :param lam: The per-source rate bounds.
        :param sources: The source node ids, for error reporting. Defaults to the source positions.
        """

        self.window = int(window)
        self.lam = np.asarray(lam, dtype=float)
        self.caps = window_caps(self.lam, self.window)
        self.sources = tuple(sources) if sources is not None else tuple(range(len(self.lam)))
        self.history = deque()
        self.counts = np.zeros(len(self.lam), dtype=np.int64)
        self.max_counts = np.zeros(len(self.lam), dtype=np.int64)
        self.steps = 0

    # ------------------------------------------------------------------------------------------------------------------
    def observe(self,
                arrivals):
        """
        :param arrivals: One bool per source for the current step.

        :return: Nothing. Raises AdversaryViolation on the first breach.
        """

        arrivals = np.asarray(arrivals, dtype=np.int64)
        self.history.append(arrivals)
        self.counts += arrivals
        if len(self.history) > self.window:
            self.counts -= self.history.popleft()
        self.max_counts = np.maximum(self.max_counts, self.counts)

        over = np.flatnonzero(self.counts > self.caps)
        if len(over):
            index = int(over[0])
            raise AdversaryViolation(self.steps, self.sources[index], int(self.counts[index]), self.window)
        self.steps += 1

    # ------------------------------------------------------------------------------------------------------------------
    def max_ratio(self) -> np.ndarray:
        """
        :return: The largest N(theta, i) / w seen so far, per source.
        """

        return self.max_counts / float(self.window)


# ======================================================================================================================
class ScheduledArrivals(object):
    """
    Arrival process for the simulator that replays a schedule through a validator.
    """

    # ------------------------------------------------------------------------------------------------------------------
    def __init__(self,
                 schedule,
                 validator):
        self.schedule = schedule
        self.validator = validator

    # ------------------------------------------------------------------------------------------------------------------
    def draw(self,
             t) -> np.ndarray:
        arrivals = self.schedule.draw(t)
        self.validator.observe(arrivals)
        return arrivals


# ----------------------------------------------------------------------------------------------------------------------
def scheduled_arrivals(net,
                       schedule) -> ScheduledArrivals:
    """
    Wraps a schedule in a fresh validator checking its window against the network's arrival rates.

    :param net: The network.
    :param schedule: An AdversarySchedule with one rate per source.

    :return: A ScheduledArrivals ready to replace the Bernoulli arrivals of a run or a drift probe.
    """

    lam = net.rates[list(net.sources)]
    if len(schedule.lam) != len(lam):
        raise ConfigError("Schedule has " + str(len(schedule.lam)) + " sources, network has " + str(len(lam)) + ".")
    return ScheduledArrivals(schedule, WindowValidator(schedule.window, lam, net.sources))


# ----------------------------------------------------------------------------------------------------------------------
def adversarial_run(net,
                    schedule,
                    policy,
                    horizon,
                    seed,
                    window=None,
                    stride=None,
                    slope_tol=simulator.DEFAULT_SLOPE_TOL) -> simulator.RunResult:
    """
    Runs the simulator with the Bernoulli arrivals replaced by a validated schedule. The validator checks the schedule's
    own window against the network's arrival rates and aborts the run on the first breach.

    :param net: The network.
    :param schedule: An AdversarySchedule.
    :param policy: A simulator policy.
    :param horizon: Number of steps.
    :param seed: The run seed (coins and learners).
    :param window: The regret window. Defaults to the schedule's window.
    :param stride: Steps between metrics frames.
    :param slope_tol: Growth threshold of the stability estimate.

    :return: A RunResult; result.state.arrivals.validator holds the window statistics.
    """

    arrivals = scheduled_arrivals(net, schedule)
    window = window or schedule.window
    result = simulator.run(net, policy, horizon, seed, window, stride=stride, arrivals=arrivals, slope_tol=slope_tol)
    display.debug("Adversary: max window ratio " + str(arrivals.validator.max_ratio().tolist()) + " against " +
                  str(arrivals.validator.lam.tolist()))
    return result


# ----------------------------------------------------------------------------------------------------------------------
def full_window_check(arrivals,
                      window,
                      lam) -> bool:
    """
    Offline check of a complete arrival record: every window of length w (all T - w + 1 of them) is within its cap.

    :param arrivals: A (steps x sources) array of 0/1.
    :param window: The window length w.
    :param lam: The per-source rate bounds.

    :return: True when every window is within bounds.
    """

    arrivals = np.asarray(arrivals, dtype=np.int64)
    if len(arrivals) == 0:
        return True
    caps = window_caps(lam, window)
    prefix = np.vstack([np.zeros((1, arrivals.shape[1]), dtype=np.int64), np.cumsum(arrivals, axis=0)])
    width = min(window, len(arrivals))
    counts = prefix[width:] - prefix[:-width]
    return bool(np.all(counts <= caps))


