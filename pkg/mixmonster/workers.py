"""Fans Monte Carlo replications out over worker threads.

Replications are split into fixed batches (``streams.batches``). Workers
pull batches from a shared queue and the manager hands results back in
batch order, so the reduction is the same for one thread or many.
"""
from __future__ import absolute_import

import logging
import sys
import threading
import time
import traceback

import six
from six.moves import queue

from mixmonster import streams

logger = logging.getLogger("mixmonster")


class ReplicationError(Exception):
    def __init__(self, message, cause=None):
        super(ReplicationError, self).__init__(message)
        self.cause = cause


class ReplicationThread(threading.Thread):
    def __init__(self, manager):
        self.manager = manager
        self.exception = None
        super(ReplicationThread, self).__init__()
        self.daemon = True

    def run(self):
        try:
            while not self.manager.failed:
                try:
                    index, start, size = self.manager.pending.get_nowait()
                except queue.Empty:
                    return
                result = self.manager.task(start, size)
                self.manager.store(index, result, size)
        except Exception:
            self.exception = sys.exc_info()


class ReplicationManager(object):
    """Runs ``task(start, size)`` over every batch of ``replications``.

    :param task: callable returning the result for replications
        ``start .. start + size - 1``
    :param int replications: total number of replications
    :param int threads: number of worker threads
    :param str label: name used in status messages
    """
    def __init__(self, task, replications, threads=1, label='replications',
                 batch_size=streams.BATCH_SIZE):
        if threads < 1:
            raise ValueError('Need at least one thread, got %r' % threads)
        self.task = task
        self.replications = replications
        self.threads = threads
        self.label = label
        self.pending = queue.Queue()
        self.batches = streams.batches(replications, batch_size)
        self._results = {}
        self._lock = threading.Lock()
        self.completed = 0
        self._workers = []

    @property
    def failed(self):
        return any(worker.exception for worker in self._workers)

    def store(self, index, result, size):
        with self._lock:
            self._results[index] = result
            self.completed += size

    def start(self):
        for batch in self.batches:
            self.pending.put(batch)
        self._workers = [ReplicationThread(self)
                         for _ in six.moves.range(self.threads)]
        for worker in self._workers:
            worker.start()

    def is_finished(self):
        for worker in self._workers:
            if worker.exception:
                exc = traceback.format_exception(*worker.exception)
                raise ReplicationError(
                    'Replications of %s failed, exception in thread:\n'
                    '> %s' % (self.label, "> ".join(exc)),
                    worker.exception[1])
        return not any(worker.is_alive() for worker in self._workers)

    def block_until_finished(self, status_interval=60):
        """Blocks the current thread until every batch is done."""
        last_status = time.time()
        while not self.is_finished():
            time.sleep(0.01)
            if time.time() - last_status > status_interval:
                self.print_status()
                last_status = time.time()

    def print_status(self):
        logger.info('%s: %d of %d replications done', self.label,
                    self.completed, self.replications)

    def results(self):
        """Batch results in batch order."""
        return [self._results[index] for index, _, _ in self.batches]


def run_replications(task, replications, threads=1, label='replications'):
    """Runs ``task`` over all batches and returns the ordered results."""
    manager = ReplicationManager(task, replications, threads, label)
    manager.start()
    manager.block_until_finished()
    return manager.results()
