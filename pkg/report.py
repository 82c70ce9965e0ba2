#!/usr/bin/env python3

import csv
import json
import os

import numpy as np

import display
from errors import ConfigError


# ----------------------------------------------------------------------------------------------------------------------
def ensure_dir(output_dir):
    """
    Creates the output directory if needed.

    :param output_dir: The directory.

    :return: Nothing.
    """

    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as e:
        raise ConfigError("Cannot create output directory " + str(output_dir) + ": " + str(e))


# ----------------------------------------------------------------------------------------------------------------------
def _builtin(value):
    # Solver results carry numpy scalars and arrays.
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError("Cannot write " + type(value).__name__ + " to a report.")


# ----------------------------------------------------------------------------------------------------------------------
def format_json(document) -> str:
    return json.dumps(document, indent=2, sort_keys=True, default=_builtin) + "\n"


# ----------------------------------------------------------------------------------------------------------------------
def write_json(path,
               document):
    """
    Writes a report document as sorted, indented JSON.

    :param path: The file to write.
    :param document: A JSON-serializable dict.

    :return: The path written.
    """

    ensure_dir(os.path.dirname(path) or ".")
    with open(path, "w") as f:
        f.write(format_json(document))
    display.debug("Wrote " + path)
    return path


# ----------------------------------------------------------------------------------------------------------------------
def header_line(seed,
                config_hash,
                instance_hash) -> str:
    return "# seed=" + str(seed) + " config=" + str(config_hash) + " instance=" + str(instance_hash)


# ----------------------------------------------------------------------------------------------------------------------
def metric_columns(net) -> list:
    """
    Column names of a metrics CSV. Per-node columns use node names and follow node id order.
    """

    columns = ["t", "in_system", "mean_total", "phi_age", "phi_len"]
    columns.extend("q_" + node.name for node in net.nodes)
    columns.extend("age_" + net.name_of(source) for source in net.sources)
    columns.extend("utility_" + net.name_of(sender) for sender in net.senders)
    columns.extend("regret_" + net.name_of(sender) for sender in net.senders)
    return columns


# ----------------------------------------------------------------------------------------------------------------------
def frame_row(net,
              frame) -> list:
    row = [frame.t, sum(frame.queue_lengths), repr(float(frame.mean_total)), repr(float(frame.phi_age)), frame.phi_len]
    row.extend(frame.queue_lengths)
    row.extend(frame.ages[source] for source in net.sources)
    row.extend(repr(float(value)) for value in frame.utilities)
    if frame.regrets:
        row.extend(repr(float(value)) for value in frame.regrets)
    else:
        row.extend("" for _ in net.senders)
    return row


# ----------------------------------------------------------------------------------------------------------------------
def write_metrics_csv(path,
                      net,
                      frames,
                      seed,
                      config_hash):
    """
    Writes the metric frames of one run. The first line is a comment naming the seed, config and instance; the column
    order is fixed by metric_columns.

    :param path: The file to write.
    :param net: The network.
    :param frames: The run's MetricsFrames.
    :param seed: The run seed.
    :param config_hash: The config hash.

    :return: The path written.
    """

    ensure_dir(os.path.dirname(path) or ".")
    with open(path, "w", newline="") as f:
        f.write(header_line(seed, config_hash, net.instance_hash()) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(metric_columns(net))
        for frame in frames:
            writer.writerow(frame_row(net, frame))
    display.debug("Wrote " + path + " (" + str(len(frames)) + " frames)")
    return path


# ----------------------------------------------------------------------------------------------------------------------
def write_table_csv(path,
                    columns,
                    rows,
                    seed,
                    config_hash,
                    instance_hash):
    """
    Writes a small table (summaries, agreement tables) with the same comment header as the metrics files.

    :param path: The file to write.
    :param columns: The column names.
    :param rows: A list of dicts keyed by column name.
    :param seed: The seed, or a list of seeds.
    :param config_hash: The config hash.
    :param instance_hash: The network's instance hash.

    :return: The path written.
    """

    ensure_dir(os.path.dirname(path) or ".")
    if isinstance(seed, (list, tuple)):
        seed = ",".join(str(value) for value in seed)
    with open(path, "w", newline="") as f:
        f.write(header_line(seed, config_hash, instance_hash) + "\n")
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


# ----------------------------------------------------------------------------------------------------------------------
def read_metrics_csv(path) -> tuple:
    """
    Reads a metrics CSV back.

    :param path: The file.

    :return: A tuple (header comment, list of row dicts with string values).
    """

    with open(path, "r", newline="") as f:
        header = f.readline().rstrip("\n")
        reader = csv.DictReader(f)
        rows = list(reader)
    return header, rows
