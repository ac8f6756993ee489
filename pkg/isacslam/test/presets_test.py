# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import copy
import unittest

from typing import Any, Dict, Text

from isacslam import ConfigurationError, Scenario, ValidationError, load_scenario
from isacslam.presets import PRESETS, get_preset, run_experiment
from isacslam.presets.base import collect_presets
from isacslam.report import table_to_csv


def small_scenario():  # type: () -> Scenario
    doc = copy.deepcopy(load_scenario().document)
    doc['horizon'] = 3
    doc['ues'] = doc['ues'][:2]
    doc['slam']['n_particles'] = 50
    doc['seeds'] = {'master': 3, 'count': 2}
    doc['presets'] = {
        'sweep_fig6': {'track': {'grid': {'origin': [2.0, 1.0], 'step': 0.6, 'shape': [2, 1]}}},
        'hybrid_fig5ab': {'ue': 1},
    }
    return Scenario(doc)


def noiseless_document(horizon):  # type: (int) -> Dict[Text, Any]
    doc = copy.deepcopy(load_scenario().document)
    doc['horizon'] = horizon
    doc['noise'] = {'clutter_rate': 0.0, 'detection_probability': 1.0, 'sigma_aoa_deg': 0.0, 'sigma_aod_deg': 0.0,
                    'sigma_rsrp': 0.0, 'sigma_toa': 0.0}
    doc['slam']['n_particles'] = 300
    doc['seeds'] = {'master': 1, 'count': 1}
    return doc


def entry_ospa(report, ue_id, epoch):  # type: (Any, int, int) -> Dict[Text, float]
    """Map OSPA per mechanism of one UE at one epoch."""
    series = report.tables['series'][1]
    return {r[0]: r[8] for r in series if r[1] == ue_id and r[2] == epoch}


class TestRegistry(unittest.TestCase):

    def test_every_preset_registered(self):  # type: () -> None
        self.assertEqual(sorted(collect_presets()), sorted(PRESETS))

    def test_unknown_preset(self):  # type: () -> None
        self.assertRaises(ConfigurationError, get_preset, 'fig7')

    def test_invalid_scenario_is_refused(self):  # type: () -> None
        doc = copy.deepcopy(small_scenario().document)
        doc['noise']['sigma_toa'] = -1
        self.assertRaises(ValidationError, run_experiment, Scenario(doc), 'sweep_fig6', [0])


class TestBeamSweep(unittest.TestCase):

    def test_rsrp_matrices(self):  # type: () -> None
        reports = run_experiment(small_scenario(), 'sweep_fig6', [3])
        self.assertEqual(len(reports), 1)
        report = reports[0]
        header, rows = report.tables['rsrp']
        self.assertEqual(len(rows), 256)
        self.assertEqual(header[-1], 'rsrp_dbm')
        self.assertEqual(sorted(set(r[0] for r in rows)), [0, 1, 2, 3])
        self.assertEqual(len(report.tables['series'][1]), 2)
        self.assertEqual(report.summary()[('beam_sweep', 'rsrp_matrices')], 4)

    def test_same_seed_same_bytes(self):  # type: () -> None
        a = run_experiment(small_scenario(), 'sweep_fig6', [5])[0]
        b = run_experiment(small_scenario(), 'sweep_fig6', [5])[0]
        self.assertEqual(list(a.tables), list(b.tables))
        for name in a.tables:
            self.assertEqual(table_to_csv(*a.tables[name]), table_to_csv(*b.tables[name]))
        self.assertEqual(a.map_bytes(), b.map_bytes())
        self.assertEqual(a.config, b.config)


class TestHybridSensing(unittest.TestCase):

    def test_both_mechanisms(self):  # type: () -> None
        report = run_experiment(small_scenario(), 'hybrid_fig5ab')
        self.assertEqual([r.seed for r in report], [3, 4])
        summary = report[0].summary()
        for mechanism in ('hybrid', 'passive_known_pa'):
            self.assertIn((mechanism, 'mae'), summary)
            self.assertIn(mechanism, report[0].maps)
        series = report[0].tables['series'][1]
        self.assertEqual(len(series), 6)
        self.assertEqual(set(r[1] for r in series), {1})

    def test_hybrid_maps_faster_than_baseline(self):  # type: () -> None
        doc = noiseless_document(3)
        doc['presets'] = {'hybrid_fig5ab': {'ue': 0}}
        report = run_experiment(Scenario(doc), 'hybrid_fig5ab', [1])[0]
        first = entry_ospa(report, 0, 1)
        self.assertLess(first['hybrid'], first['passive_known_pa'])


class TestBeamTracking(unittest.TestCase):

    def test_tracking_log(self):  # type: () -> None
        sc = small_scenario()
        sc.document['presets']['beamtrack'] = {'horizon': 3, 'blockage': {'start': 2, 'duration': 1,
                                                                          'loss_db': 30.0}}
        report = run_experiment(sc, 'beamtrack', [0])[0]
        header, rows = report.tables['tracking']
        self.assertEqual(header[:3], ('epoch', 'mode', 'overhead'))
        self.assertEqual([r[0] for r in rows], [1, 2, 3])
        self.assertEqual(rows[0][1:3], ('full_sweep', 64))
        summary = report.summary()
        for metric in ('overhead_fraction', 'median_rsrp_loss_db', 'recovery_latency', 'mae'):
            self.assertIn(('slam_tracking', metric), summary)


class TestCrowdsourcing(unittest.TestCase):

    def test_no_upload_before_horizon(self):  # type: () -> None
        report = run_experiment(small_scenario(), 'crowd_fig5cd', [0])[0]
        series = report.tables['series'][1]
        shared = [r[1:] for r in series if r[0] == 'crowdsourcing']
        alone = [r[1:] for r in series if r[0] == 'independent']
        self.assertEqual(len(shared), 6)
        self.assertEqual(shared, alone)
        self.assertNotIn('orf_history', report.tables)
        self.assertEqual(report.maps['orf'], [])

    def test_late_ue_starts_from_shared_map(self):  # type: () -> None
        doc = noiseless_document(10)
        late = copy.deepcopy(doc['ues'][1])
        late['entering_time'] = 7
        doc['ues'] = [doc['ues'][0], late]
        doc['presets'] = {'crowd_fig5cd': {'focus_ue': 1}}
        report = run_experiment(Scenario(doc), 'crowd_fig5cd', [1])[0]
        self.assertGreater(len(report.maps['orf']), 1)
        entry = entry_ospa(report, 1, 7)
        self.assertLess(entry['crowdsourcing'], entry['independent'])


if __name__ == '__main__':
    unittest.main()
