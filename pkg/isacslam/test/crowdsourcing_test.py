# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import unittest

import numpy as np  # type: ignore
from typing import Any, Text

from isacslam.crowdsourcing import (FeatureRecord, FrameSchedule, ORFMap, covariance_intersection, download,
                                    download_region, information_fusion, run_cohort, upload)
from isacslam.errors import ConfigurationError
from isacslam.geometry import mirror_point
from isacslam.helper import make_environment, make_noise_profile, make_track, make_wall
from isacslam.measurement import noiseless
from isacslam.rng import RngStreams
from isacslam.runner import run_track
from isacslam.slam_engine import Feature, ProcessNoise, SlamConfig


def record(reporter, id, mean, var=0.01, confidence=0.9, kind='VA'):
    # type: (int, Text, Any, float, float, Text) -> FeatureRecord
    return FeatureRecord(Feature(id, kind, mean, var * np.eye(2), confidence), reporter, 5, confidence)


class TestFusionRules(unittest.TestCase):

    def test_information_fusion_shrinks(self):  # type: () -> None
        mean, cov = information_fusion([np.array([0.0, 0.0]), np.array([1.0, 0.0])],
                                       [np.eye(2), np.eye(2)])
        np.testing.assert_allclose(mean, [0.5, 0.0])
        np.testing.assert_allclose(cov, 0.5 * np.eye(2))

    def test_covariance_intersection_is_conservative(self):  # type: () -> None
        means = [np.zeros(2), np.zeros(2)]
        covs = [np.diag([1.0, 4.0]), np.diag([4.0, 1.0])]
        _, info_cov = information_fusion(means, covs)
        mean, ci_cov = covariance_intersection(means, covs)
        np.testing.assert_allclose(mean, [0.0, 0.0], atol=1e-12)
        self.assertGreaterEqual(np.trace(ci_cov), np.trace(info_cov))
        self.assertLess(np.trace(ci_cov), 5.0)
        self.assertAlmostEqual(np.trace(ci_cov), 3.2, places=3)

    def test_two_inputs_commute(self):  # type: () -> None
        means = [np.array([1.0, 0.0]), np.array([0.2, 0.7])]
        covs = [np.array([[0.3, 0.05], [0.05, 0.1]]), np.diag([0.05, 0.2])]
        for rule in (information_fusion, covariance_intersection):
            mean_ab, cov_ab = rule(means, covs)
            mean_ba, cov_ba = rule(means[::-1], covs[::-1])
            np.testing.assert_allclose(mean_ab, mean_ba, atol=1e-9)
            np.testing.assert_allclose(cov_ab, cov_ba, atol=1e-9)
        _, cov = information_fusion(means, covs)
        self.assertLessEqual(np.trace(cov), min(np.trace(c) for c in covs))


class TestUpload(unittest.TestCase):

    def test_reports_of_one_feature_fuse(self):  # type: () -> None
        orf = upload(ORFMap(), [record(0, 'a', (1.0, 2.0))])
        orf = upload(orf, [record(1, 'b', (1.02, 2.0))])
        self.assertEqual(orf.version, 2)
        self.assertEqual(len(orf), 1)
        fused = orf.features[0]
        self.assertEqual(fused.id, 'orf-0')
        self.assertEqual(fused.contributors, [0, 1])
        np.testing.assert_allclose(fused.mean, [1.01, 2.0])
        np.testing.assert_allclose(fused.covariance, 0.005 * np.eye(2))
        self.assertAlmostEqual(fused.confidence, 0.99)

    def test_upload_leaves_input_untouched(self):  # type: () -> None
        orf = ORFMap()
        out = upload(orf, [record(0, 'a', (1.0, 2.0))])
        self.assertEqual(orf.version, 0)
        self.assertEqual(len(orf), 0)
        self.assertEqual(len(out), 1)

    def test_distant_and_other_kind_stay_apart(self):  # type: () -> None
        orf = upload(ORFMap(), [record(0, 'a', (1.0, 2.0))])
        orf = upload(orf, [record(1, 'b', (6.0, 2.0)), record(1, 'c', (1.0, 2.0), kind='PA')])
        self.assertEqual(sorted(f.kind for f in orf.features), ['PA', 'VA', 'VA'])
        self.assertEqual([f.id for f in orf.features], ['orf-0', 'orf-1', 'orf-2'])

    def test_resend_replaces_contribution(self):  # type: () -> None
        orf = upload(ORFMap(), [record(0, 'a', (1.0, 2.0))])
        orf = upload(orf, [record(0, 'a', (1.1, 2.0))])
        self.assertEqual(len(orf), 1)
        self.assertEqual(len(orf.features[0].contributions), 1)
        np.testing.assert_allclose(orf.features[0].mean, [1.1, 2.0])

    def test_malformed_records_rejected(self):  # type: () -> None
        bad = FeatureRecord(Feature('x', 'VA', (0.0, 0.0), [[1.0, 2.0], [2.0, 1.0]], 0.9), 0, 5, 0.9)
        with self.assertLogs('isacslam.crowdsourcing', level='WARNING'):
            orf = upload(ORFMap(), [bad, record(0, 'a', (1.0, 2.0))])
        self.assertEqual(orf.rejected, 1)
        self.assertEqual(len(orf), 1)

    def test_ci_rule(self):  # type: () -> None
        orf = upload(ORFMap('ci'), [record(0, 'a', (1.0, 2.0))])
        orf = upload(orf, [record(1, 'b', (1.0, 2.0))])
        self.assertEqual(len(orf), 1)
        self.assertAlmostEqual(float(np.trace(orf.features[0].covariance)), 0.02, places=6)

    def test_unknown_rule(self):  # type: () -> None
        self.assertRaises(ConfigurationError, ORFMap, 'average')

    def test_upload_order_does_not_matter(self):  # type: () -> None
        first, second = record(0, 'a', (1.0, 2.0), var=0.01), record(1, 'b', (1.05, 1.98), var=0.02)
        for rule in ('information', 'ci'):
            ab = upload(upload(ORFMap(rule), [first]), [second])
            ba = upload(upload(ORFMap(rule), [second]), [first])
            self.assertEqual((len(ab), len(ba)), (1, 1))
            np.testing.assert_allclose(ab.features[0].mean, ba.features[0].mean, atol=1e-9)
            np.testing.assert_allclose(ab.features[0].covariance, ba.features[0].covariance, atol=1e-9)


class TestDownload(unittest.TestCase):

    def test_threshold_and_region(self):  # type: () -> None
        orf = upload(ORFMap(), [record(0, 'a', (1.0, 1.0), confidence=0.9),
                                record(0, 'b', (5.0, 5.0), confidence=0.2),
                                record(0, 'c', (20.0, 1.0), confidence=0.9),
                                record(0, 'd', (3.0, 3.0), confidence=0.6)])
        served = download(orf, (0.0, 0.0, 9.0, 8.0))
        np.testing.assert_allclose([f.existence for f in served], [0.9, 0.6])
        np.testing.assert_allclose(served[0].mean, [1.0, 1.0])
        self.assertEqual(download(orf, (0.0, 0.0, 9.0, 8.0), threshold=0.95), [])

    def test_region_reaches_virtual_anchors(self):  # type: () -> None
        walls = [make_wall('south', (0, 0), (9, 0)), make_wall('east', (9, 0), (9, 8)),
                 make_wall('north', (9, 8), (0, 8)), make_wall('west', (0, 8), (0, 0))]
        env = make_environment(walls, [('pa-0', (5.667, 6.29))])
        vas = [mirror_point((5.667, 6.29), w) for w in walls]
        orf = upload(ORFMap(), [record(0, 'va-{}'.format(k), va) for k, va in enumerate(vas)])
        self.assertEqual(download(orf, env.bounds), [])
        self.assertEqual(len(download(orf, download_region(env))), 4)


class TestFrameSchedule(unittest.TestCase):

    def test_uploads(self):  # type: () -> None
        s = FrameSchedule({0: 1, 1: 4}, upload_period=5)
        self.assertTrue(s.uploads_at(10))
        self.assertFalse(s.uploads_at(7))
        self.assertFalse(FrameSchedule({0: 1}, upload_period=None).uploads_at(5))

    def test_bad_values(self):  # type: () -> None
        self.assertRaises(ConfigurationError, FrameSchedule, {0: 0})
        self.assertRaises(ConfigurationError, FrameSchedule, {0: 1}, 0)


class TestCohort(unittest.TestCase):

    def setUp(self):  # type: () -> None
        walls = [make_wall('south', (0, 0), (9, 0)), make_wall('east', (9, 0), (9, 8)),
                 make_wall('north', (9, 8), (0, 8)), make_wall('west', (0, 8), (0, 0))]
        self.env = make_environment(walls, [('pa-0', (5.667, 6.29))])
        self.cfg = SlamConfig(n_particles=100, process_noise=ProcessNoise(accel_std=0.05))
        self.noise = make_noise_profile(clutter_rate=0.5)
        self.tracks = {0: make_track({'line': {'start': (1.5, 2.0), 'end': (3.0, 2.0)}}, 7),
                       1: make_track({'line': {'start': (7.0, 2.0), 'end': (7.0, 4.0)}}, 5)}

    def test_without_crowdsourcing_matches_independent_runs(self):  # type: () -> None
        schedule = FrameSchedule({0: 1, 1: 3}, upload_period=2)
        result = run_cohort(self.env, schedule, self.tracks, self.cfg, RngStreams(9), self.noise,
                            horizon=7, crowdsourcing=False)
        self.assertEqual(result.orf_history, [])
        self.assertEqual(len(result.orf), 0)
        for ue_id, entering in ((0, 1), (1, 3)):
            alone = run_track(self.env, self.tracks[ue_id], self.cfg, self.noise, RngStreams(9), ue_id,
                              entering=entering)
            self.assertEqual([r for r in result.rows if r.ue_id == ue_id], alone.rows)

    def test_uploads_follow_schedule(self):  # type: () -> None
        schedule = FrameSchedule({0: 1, 1: 3}, upload_period=2)
        result = run_cohort(self.env, schedule, self.tracks, self.cfg, RngStreams(9), self.noise, horizon=7)
        self.assertEqual([epoch for epoch, _, _ in result.orf_history], [2, 4, 6])
        versions = [version for _, version, _ in result.orf_history]
        self.assertEqual(versions, sorted(versions))
        self.assertEqual(len(result.rows), 7 + 5)

    def test_short_track(self):  # type: () -> None
        schedule = FrameSchedule({0: 1, 1: 3}, upload_period=2)
        self.assertRaises(ConfigurationError, run_cohort, self.env, schedule, self.tracks, self.cfg,
                          RngStreams(9), self.noise, 9)

    def test_shared_feature_tighter_than_each_report(self):  # type: () -> None
        schedule = FrameSchedule({0: 1, 1: 1}, upload_period=3, download_on_entry=False)
        result = run_cohort(self.env, schedule, self.tracks, SlamConfig(n_particles=200), RngStreams(2),
                            noiseless(), horizon=5)
        shared = [f for f in result.orf.features if f.contributors == [0, 1]]
        self.assertGreater(len(shared), 0)
        for f in shared:
            traces = [np.trace(c.covariance) for c in f.contributions.values()]
            self.assertLessEqual(np.trace(f.covariance), min(traces))


if __name__ == '__main__':
    unittest.main()
