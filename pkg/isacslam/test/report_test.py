# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import json
import os
import shutil
import tempfile
import unittest

import numpy as np  # type: ignore

from isacslam.report import (RunReport, collect_summaries, format_value, iter_runs, read_table, table_to_csv,
                             tidy_rows)
from isacslam.runner import TrackRow
from isacslam.slam_engine import Feature


def track_rows(ue_id):  # type: (int) -> list
    return [TrackRow(ue_id, k, 1.0, 2.0, 1.1, 2.0, 0.1 * k, 0.5, 0.01, 3) for k in (1, 2)]


class TestFormatting(unittest.TestCase):

    def test_values(self):  # type: () -> None
        self.assertEqual(format_value(True), 'true')
        self.assertEqual(format_value(3), '3')
        self.assertEqual(format_value(np.int64(3)), '3')
        self.assertEqual(format_value(0.1), '0.1')
        self.assertEqual(format_value(float('nan')), 'nan')
        self.assertEqual(format_value('hybrid'), 'hybrid')

    def test_csv(self):  # type: () -> None
        self.assertEqual(table_to_csv(('a', 'b'), [(1, 0.5), (False, 1.0 / 3.0)]),
                         b'a,b\n1,0.5\nfalse,0.3333333333\n')


class TestRunReport(unittest.TestCase):

    def setUp(self):  # type: () -> None
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):  # type: () -> None
        shutil.rmtree(self.tmp)

    def make_report(self, seed):  # type: (int) -> RunReport
        report = RunReport('hybrid_fig5ab', seed, b'{"name": "room"}\n')
        report.add_series('hybrid', track_rows(0))
        report.add_summary('hybrid', 'mae', 0.25 + seed)
        report.add_map('hybrid', [Feature('pa-0', 'PA', (5.667, 6.29), 1e-6 * np.eye(2), 1.0)])
        return report

    def test_header_mismatch(self):  # type: () -> None
        report = RunReport('custom', 0)
        report.add_rows('t', ('a',), [(1,)])
        self.assertRaises(ValueError, report.add_rows, 't', ('b',), [(1,)])

    def test_layout(self):  # type: () -> None
        path = self.make_report(2).write(self.tmp)
        self.assertEqual(path, os.path.join(self.tmp, 'hybrid_fig5ab', 'seed-2'))
        self.assertEqual(sorted(os.listdir(path)),
                         ['map.json', 'runtime.json', 'scenario.json', 'series.csv', 'summary.csv'])
        with open(os.path.join(path, 'scenario.json'), 'rb') as f:
            self.assertEqual(f.read(), b'{"name": "room"}\n')
        with open(os.path.join(path, 'map.json')) as fi:
            doc = json.load(fi)
        self.assertEqual(doc['hybrid'][0]['id'], 'pa-0')
        self.assertEqual(doc['hybrid'][0]['mean'], [5.667, 6.29])
        rows = read_table(os.path.join(path, 'series.csv'))
        self.assertEqual(rows[0]['mechanism'], 'hybrid')
        self.assertEqual(rows[1]['epoch'], '2')

    def test_tidy_and_summaries(self):  # type: () -> None
        for seed in (1, 0):
            self.make_report(seed).write(self.tmp)
        os.makedirs(os.path.join(self.tmp, 'hybrid_fig5ab', 'scratch'))
        self.assertEqual([(e, s) for e, s, _ in iter_runs(self.tmp)],
                         [('hybrid_fig5ab', 0), ('hybrid_fig5ab', 1)])
        tidy = tidy_rows(self.tmp)
        self.assertEqual(len(tidy), 2 * 2 * 2)
        self.assertEqual(tidy[0], ('hybrid_fig5ab', 'hybrid', 0, 0, 1, 'error', 0.1))
        self.assertEqual(tidy[1], ('hybrid_fig5ab', 'hybrid', 0, 0, 1, 'ospa', 0.5))
        self.assertEqual(collect_summaries(self.tmp),
                         [('hybrid_fig5ab', 'hybrid', 'mae', 0, 0.25), ('hybrid_fig5ab', 'hybrid', 'mae', 1, 1.25)])

    def test_missing_directory(self):  # type: () -> None
        self.assertRaises(IOError, list, iter_runs(os.path.join(self.tmp, 'nope')))


if __name__ == '__main__':
    unittest.main()
