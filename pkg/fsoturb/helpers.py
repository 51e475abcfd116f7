"""
A list of functions with a clear purpose that does
not belong specifically to any of the existing units.
"""
import argparse
import csv
import io
import json
import logging
import pathlib
import sys

import numpy as np


logger = logging.getLogger(__name__)


class ArgparseChecker():

    @staticmethod
    def str2bool(v):
        "ArgumentParser tool to figure out the bool value"
        if isinstance(v, bool):
            return v
        if v.lower() in ('yes', 'true', 't', 'y', '1', 'on'):
            return True
        elif v.lower() in ('no', 'false', 'f', 'n', '0', 'off'):
            return False
        else:
            raise argparse.ArgumentTypeError('Boolean value expected.')

    @staticmethod
    def logging_lvl(v):
        "ArgumentParser tool to figure out the logging level"
        logging_levels = {
            'NOTSET': logging.NOTSET,
            'DEBUG': logging.DEBUG,
            'INFO': logging.INFO,
            'WARNING': logging.WARNING,
            'ERROR': logging.ERROR,
            'CRITICAL': logging.CRITICAL,
            # extras
            'ALL': logging.INFO,
            'FALSE': logging.ERROR,
        }

        if isinstance(v, bool) and v is True:
            return logging.WARNING
        elif isinstance(v, bool) and v is False:
            # effectively we disable logging until an error happens
            return logging.ERROR
        elif v.upper() in logging_levels:
            return logging_levels[v.upper()]
        else:
            raise argparse.ArgumentTypeError('Meaningful logging level expected.')

    @staticmethod
    def existing_file(v):
        if not pathlib.Path(v).is_file():
            raise argparse.ArgumentTypeError(f'The file {v} could not be found.')
        return pathlib.Path(v)

    @staticmethod
    def seed_u64(v):
        try:
            seed = int(v, 0)
        except ValueError:
            raise argparse.ArgumentTypeError(f'The seed has to be an integer, got "{v}".')
        if not 0 <= seed < 2 ** 64:
            raise argparse.ArgumentTypeError(f'The seed has to be an unsigned 64-bit integer, got {seed}.')
        return seed

    @staticmethod
    def positive_float(v):
        try:
            value = float(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f'A number expected, got "{v}".')
        if not np.isfinite(value) or value <= 0:
            raise argparse.ArgumentTypeError(f'A positive number expected, got {v}.')
        return value

    @staticmethod
    def positive_int(v):
        try:
            value = int(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f'An integer expected, got "{v}".')
        if value < 1:
            raise argparse.ArgumentTypeError(f'A positive integer expected, got {v}.')
        return value


def format_number(value):
    """
    The shortest text that reads back as the same float, always with the "." decimal separator.
    """
    return repr(float(value))


def to_csv(header, rows):
    """
    :param header: the column names
    :param rows: iterables of numbers (formatted with :func:`format_number`) or strings
    :return: the CSV text with a header line and newline terminated rows
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])
    return buffer.getvalue()


def to_json(document):
    """
    JSON text with sorted keys so that the same results give the same bytes.
    """
    return json.dumps(document, indent=2, sort_keys=True, default=_json_default) + '\n'


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, pathlib.Path):
        return str(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def write_output(text, path=None):
    """
    Write the text to the file, or to the standard output when no path is given.
    """
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as out:
        out.write(text)
    logger.info(f'Saved {path}')
