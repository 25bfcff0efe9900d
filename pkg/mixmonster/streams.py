"""Seeded random number streams.

Every random draw in mixmonster comes from a Philox generator (a
counter-based 64-bit bit generator) keyed by a ``SeedSequence`` built from
the master seed plus a stream path:

    master seed -> experiment stream -> path length -> replication

The path is a tuple of non-negative integers, so two draws agree iff their
(seed, path) agree. Each replication owns its own generator, which makes a
replication's draws independent of the batch split and of how many worker
threads ran the experiment.
"""
from __future__ import absolute_import

import hashlib

import numpy as np
import six

# Replications are handed to workers in batches of this size.
BATCH_SIZE = 500

SEED_LIMIT = 2 ** 64


def stream_id(name):
    """Maps a stream name such as ``"blocking"`` onto a stable 32 bit id.

    Python's ``hash`` is salted per process so it cannot be used here.
    """
    digest = hashlib.sha256(name.encode('utf-8')).hexdigest()
    return int(digest[:8], 16)


def _entropy(seed, path):
    if not isinstance(seed, six.integer_types) or isinstance(seed, bool):
        raise ValueError('Seed must be an integer, not %r' % (seed,))
    if seed < 0 or seed >= SEED_LIMIT:
        raise ValueError('Seed %d is not a 64 bit unsigned integer' % seed)
    keys = [seed]
    for key in path:
        if isinstance(key, six.string_types):
            key = stream_id(key)
        if key < 0:
            raise ValueError('Stream keys must be non-negative, got %d' % key)
        keys.append(int(key))
    return keys


def make_rng(seed, *path):
    """Returns a ``numpy.random.Generator`` for the given seed and stream
    path. Path elements may be integers or stream names.

        >>> rng = make_rng(12345, 'blocking', 4096, 0)
    """
    sequence = np.random.SeedSequence(_entropy(seed, path))
    return np.random.Generator(np.random.Philox(sequence))


def batches(total, batch_size=BATCH_SIZE):
    """Splits ``total`` replications into ``(batch_index, start, size)``
    triples. The split depends only on ``total`` and ``batch_size``.
    """
    if total <= 0:
        raise ValueError('Need at least one replication, got %d' % total)
    result = []
    for index, start in enumerate(six.moves.range(0, total, batch_size)):
        result.append((index, start, min(batch_size, total - start)))
    return result


def describe():
    """Human readable description of the stream derivation, stored in every
    experiment manifest."""
    return {
        'bit_generator': 'numpy.random.Philox (counter-based, 64 bit)',
        'seeding': 'numpy.random.SeedSequence([seed, stream, ...])',
        'derivation': 'master seed -> experiment stream -> path length -> '
                      'replication',
        'stream_names': 'sha256(name)[:8] read as a 32 bit integer',
        'batch_size': BATCH_SIZE,
    }
