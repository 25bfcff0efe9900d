"""Report writers.

Reports are byte-for-byte reproducible: CSV numbers are written as
``%.16e``, booleans as ``true``/``false``, JSON is sorted and indented and
nothing carries a timestamp.
"""
from __future__ import absolute_import

import csv
import io
import json
import logging
import os

import numpy as np
import six

from mixmonster import streams

logger = logging.getLogger("mixmonster")

MANIFEST_NAME = 'manifest.json'


def format_value(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (six.integer_types, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return '%.16e' % value
    return six.text_type(value)


def _plain(value):
    """Converts numpy scalars and arrays for ``json``."""
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError('%r is not JSON serialisable' % (value,))


def csv_text(columns, rows):
    handle = six.StringIO()
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return handle.getvalue()


def json_text(data):
    return json.dumps(data, sort_keys=True, indent=2, default=_plain) + '\n'


def _write(directory, name, text):
    if not os.path.isdir(directory):
        os.makedirs(directory)
    path = os.path.join(directory, name)
    with io.open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(six.text_type(text))
    logger.info('Wrote %s', path)
    return path


def write_csv(directory, name, columns, rows):
    return _write(directory, name, csv_text(columns, rows))


def write_json(directory, name, data):
    return _write(directory, name, json_text(data))


def write_manifest(directory, config, version, outputs, passed):
    """Records everything needed to reproduce the reports."""
    return write_json(directory, MANIFEST_NAME, {
        'config': config.as_dict(),
        'version': version,
        'seed': config.seed,
        'streams': streams.describe(),
        'outputs': sorted(outputs),
        'passed': passed,
    })
