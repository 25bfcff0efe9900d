from __future__ import absolute_import

from unittest.mock import Mock

import numpy as np

from mixmonster import streams
from mixmonster.tests.base import StatisticalTestCase
from mixmonster.workers import (
    ReplicationError, ReplicationManager, run_replications)


def draw_task(seed):
    def task(start, size):
        return np.array([streams.make_rng(seed, 'test', r).standard_normal()
                         for r in range(start, start + size)])
    return task


class TestReplicationManager(StatisticalTestCase):
    def test_results_come_back_in_batch_order(self):
        task = Mock(side_effect=lambda start, size: (start, size))
        results = run_replications(task, 1200, threads=3)
        self.assertEqual(results, [(0, 500), (500, 500), (1000, 200)])
        self.assertEqual(task.call_count, 3)

    def test_thread_count_does_not_change_the_draws(self):
        single = np.concatenate(run_replications(draw_task(1), 1700, 1))
        multi = np.concatenate(run_replications(draw_task(1), 1700, 4))
        np.testing.assert_array_equal(single, multi)

    def test_worker_exceptions_are_reported(self):
        task = Mock(side_effect=KeyError('boom'))
        manager = ReplicationManager(task, 10, threads=2, label='sums')
        manager.start()
        with self.assertRaises(ReplicationError) as catcher:
            manager.block_until_finished()
        message = str(catcher.exception)
        self.assertTrue(message.startswith(
            'Replications of sums failed, exception in thread:'))
        self.assertIn('KeyError', message)
        self.assertIsInstance(catcher.exception.cause, KeyError)

    def test_needs_a_thread(self):
        with self.assertRaises(ValueError):
            ReplicationManager(Mock(), 10, threads=0)

    def test_progress_is_counted(self):
        manager = ReplicationManager(Mock(return_value=None), 600,
                                     batch_size=100)
        manager.start()
        manager.block_until_finished()
        self.assertEqual(manager.completed, 600)
        self.assertEqual(len(manager.results()), 6)
