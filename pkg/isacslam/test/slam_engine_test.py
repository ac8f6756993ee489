# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math
import unittest

import numpy as np  # type: ignore
from typing import Any

from isacslam.active_sensing import VaPrior
from isacslam.beam_mgmt import ImuConfig
from isacslam.errors import ConfigurationError
from isacslam.geometry import C, Point2, bearing, distance
from isacslam.helper import make_environment, make_noise_profile, make_wall
from isacslam.measurement import Measurement, UEState, enumerate_paths, noiseless, observe
from isacslam.metrics import ospa, visible_features
from isacslam.rng import RngStreams
from isacslam.runner import run_track
from isacslam.slam_engine import (Association, Feature, ParticleSet, ProcessNoise, SlamConfig, SlamEngine, associate,
                                  back_project, birth_and_prune, gate_threshold, init_hybrid, init_known_pa, model,
                                  predict, systematic_resample, update, _bp_marginals)

PA = (5.667, 6.29)
VA = (-PA[0], PA[1])  # PA mirrored in the west wall


def room():  # type: () -> Any
    walls = [make_wall('south', (0, 0), (9, 0)), make_wall('east', (9, 0), (9, 8)),
             make_wall('north', (9, 8), (0, 8)), make_wall('west', (0, 8), (0, 0))]
    return make_environment(walls, [('pa-0', PA)])


def small_config(**kwargs):  # type: (**Any) -> SlamConfig
    fields = dict(n_particles=300, process_noise=ProcessNoise(accel_std=0.05))
    fields.update(kwargs)
    return SlamConfig(**fields)


def run_line(seed, epochs=20, noise=None, cfg=None):  # type: (int, int, Any, Any) -> SlamEngine
    env = room()
    if noise is None:
        noise = make_noise_profile(sigma_aoa_deg=1.0, sigma_aod_deg=1.0, sigma_toa=0.3e-9, sigma_rsrp=0.0,
                                   detection_probability=1.0, clutter_rate=0.0)
    if cfg is None:
        cfg = small_config()
    streams = RngStreams(seed)
    truth = [UEState(Point2(1.5 + 0.25 * k, 2.0), (0.25, 0.0)) for k in range(epochs)]
    engine = SlamEngine(cfg, noise, truth[0], streams, 0, init_known_pa('pa-0', PA, cfg))
    for k, ue in enumerate(truth):
        paths = enumerate_paths(env, ue, noise)
        engine.step(observe(paths, ue, noise, streams.get(0, k + 1, 'measure'), k + 1, env=env), k + 1)
    return engine


class TestSlamConfig(unittest.TestCase):

    def test_defaults(self):  # type: () -> None
        cfg = SlamConfig()
        self.assertEqual(cfg.n_particles, 2000)
        self.assertEqual(cfg.mode, 'passive_known_pa')
        self.assertEqual(cfg.keys, ('AOA', 'TOA'))

    def test_bad_values(self):  # type: () -> None
        self.assertRaises(ConfigurationError, SlamConfig, mode='active_only')
        self.assertRaises(ConfigurationError, SlamConfig, n_particles=0)
        self.assertRaises(ConfigurationError, SlamConfig, measurements=('FOA',))
        self.assertRaises(ConfigurationError, SlamConfig, gate=0.0)

    def test_replace(self):  # type: () -> None
        cfg = SlamConfig().replace(measurements=('aod', 'aoa'))
        self.assertEqual(cfg.keys, ('AOA', 'AOD'))
        self.assertEqual(SlamConfig().replace(), SlamConfig())

    def test_gate_scales_with_dimension(self):  # type: () -> None
        self.assertEqual(gate_threshold(13.8, 2), 13.8)
        self.assertGreater(gate_threshold(13.8, 3), 13.8)
        self.assertLess(gate_threshold(13.8, 1), 13.8)


class TestModel(unittest.TestCase):

    def test_pa_components(self):  # type: () -> None
        state = np.array([0.0, 0.0, 0.0, 0.0, 1.5, math.radians(10.0)])
        z = model(state, 'PA', (1.0, 1.0), None, ('AOA', 'AOD', 'TOA'))[0]
        self.assertAlmostEqual(math.degrees(z[0]), 35.0)
        self.assertAlmostEqual(math.degrees(z[1]), -135.0)
        self.assertAlmostEqual(z[2], math.sqrt(2.0) + 1.5)

    def test_va_departure_hits_bounce(self):  # type: () -> None
        pa = np.array([0.0, 2.0])
        va = np.array([4.0, 2.0])
        state = np.zeros(6)
        aod = model(state, 'VA', va, pa, ('AOD',))[0, 0]
        self.assertAlmostEqual(aod, bearing(pa, (2.0, 1.0)))

    def test_back_project_lands_on_anchor(self):  # type: () -> None
        va = (-1.0, 3.0)
        ue = np.array([2.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        m = Measurement(bearing(ue[:2], va), 0.0, distance(ue[:2], va) / C, -70.0, ('unknown',), 1)
        mean, cov = back_project(ue, 0.01 * np.eye(6), m, make_noise_profile(), small_config())
        np.testing.assert_allclose(mean, va, atol=1e-9)
        np.linalg.cholesky(cov)


class TestParticles(unittest.TestCase):

    def test_bad_shape(self):  # type: () -> None
        self.assertRaises(ValueError, ParticleSet, np.zeros((4, 5)))

    def test_from_prior(self):  # type: () -> None
        cfg = small_config(n_particles=5000)
        ps = ParticleSet.from_prior(UEState(Point2(1.0, 2.0), (0.5, 0.0)), cfg, np.random.default_rng(0))
        self.assertEqual(len(ps), 5000)
        np.testing.assert_allclose(ps.mean()[:4], [1.0, 2.0, 0.5, 0.0], atol=0.01)
        self.assertAlmostEqual(ps.ess(), 5000.0)

    def test_systematic_resample(self):  # type: () -> None
        idx = systematic_resample(np.array([0.0, 1.0, 0.0]), np.random.default_rng(0))
        self.assertEqual(list(idx), [1, 1, 1])


class TestAssociation(unittest.TestCase):

    def test_rows_are_distributions(self):  # type: () -> None
        cfg = small_config()
        noise = make_noise_profile(clutter_rate=1.0)
        ue = UEState(Point2(2.0, 2.0))
        ps = ParticleSet.from_prior(ue, cfg, np.random.default_rng(0))
        features = init_known_pa('pa-0', PA, cfg)
        los = Measurement(bearing((2.0, 2.0), PA), 0.0, distance((2.0, 2.0), PA) / C, -60.0, ('LOS', 'pa-0'), 1)
        stray = Measurement(-2.5, 0.0, 30e-9, -85.0, ('clutter',), 1)
        assoc = associate(ps, features, [los, stray], cfg, noise)
        self.assertEqual(assoc.probabilities.shape, (2, 3))
        np.testing.assert_allclose(assoc.probabilities.sum(axis=1), 1.0)
        self.assertGreater(assoc.probabilities[0, 0], 0.9)
        self.assertLess(assoc.probabilities[1, 0], 1e-6)

    def test_no_measurements(self):  # type: () -> None
        cfg = small_config()
        ps = ParticleSet.from_prior(UEState(Point2(2.0, 2.0)), cfg, np.random.default_rng(0))
        assoc = associate(ps, init_known_pa('pa-0', PA, cfg), [], cfg, make_noise_profile())
        self.assertEqual(assoc.probabilities.shape, (0, 3))

    def test_certain_feature_keeps_marginals_finite(self):  # type: () -> None
        xi = 1.0 + 2.0 / 0.01
        marginals = _bp_marginals(np.array([[1e30]]), np.array([1e-12]), xi, 20, 1e-6)
        self.assertTrue(np.all(np.isfinite(marginals)))
        np.testing.assert_allclose(marginals.sum(axis=1), 1.0)
        self.assertGreater(marginals[0, 0], 0.99)

        beta = np.array([[1e30, 0.0, 5.0], [0.0, 1e30, 0.0]])
        marginals = _bp_marginals(beta, np.array([1e-12, 1e-12]), xi, 20, 1e-6)
        self.assertTrue(np.all(np.isfinite(marginals)))
        np.testing.assert_allclose(marginals.sum(axis=1), 1.0)
        self.assertGreater(marginals[0, 0], 0.99)
        self.assertGreater(marginals[1, 1], 0.99)
        self.assertGreater(marginals[2, 3] + marginals[2, 2], 0.9)

    def test_symmetric_rows_and_columns(self):  # type: () -> None
        beta = np.array([[50.0, 50.0], [50.0, 50.0]])
        marginals = _bp_marginals(beta, np.array([0.1, 0.1]), 3.0, 20, 1e-6)
        np.testing.assert_allclose(marginals.sum(axis=1), 1.0, atol=1e-9)
        self.assertTrue(np.all(marginals[:, :2].sum(axis=0) <= 1.0 + 1e-9))
        self.assertAlmostEqual(marginals[0, 0], marginals[1, 1])


class TestInitialisation(unittest.TestCase):

    def test_known_pa_is_fixed(self):  # type: () -> None
        f = init_known_pa('pa-0', PA, SlamConfig())[0]
        self.assertTrue(f.fixed)
        self.assertEqual(f.kind, 'PA')
        self.assertEqual(f.existence, 1.0)

    def test_hybrid(self):  # type: () -> None
        priors = [VaPrior(Point2(-1.0, 1.0), 0.01 * np.eye(2), 'active-0', 'pa-0', 'active')]
        features = init_hybrid(priors, ('pa-0', np.array([5.0, 1.0]), 0.25 * np.eye(2)))
        self.assertEqual([f.kind for f in features], ['VA', 'PA'])
        self.assertEqual(features[0].pa_id, 'pa-0')
        self.assertFalse(features[1].fixed)
        self.assertEqual(init_hybrid([], None), [])

    def test_passive_needs_pa(self):  # type: () -> None
        self.assertRaises(ConfigurationError, init_hybrid, [], None, 'passive_known_pa')

    def test_feature_checks(self):  # type: () -> None
        self.assertRaises(ValueError, Feature, 'x', 'wall', (0, 0), np.eye(2))
        self.assertRaises(ValueError, Feature, 'x', 'VA', (0, 0), np.eye(2), 1.5)


class TestPredict(unittest.TestCase):

    def particles(self):  # type: () -> ParticleSet
        return ParticleSet(np.tile([1.0, 2.0, 0.5, -0.25, 0.0, 0.0], (3, 1)), np.array([0.2, 0.3, 0.5]))

    def test_constant_velocity(self):  # type: () -> None
        ps = self.particles()
        out = predict(ps, 2.0, ProcessNoise(accel_std=0.0), np.random.default_rng(0))
        np.testing.assert_allclose(out.states[:, :4], np.tile([2.0, 1.5, 0.5, -0.25], (3, 1)))
        np.testing.assert_allclose(out.weights, [0.2, 0.3, 0.5])
        np.testing.assert_allclose(ps.states[0, :2], [1.0, 2.0])

    def test_odometry_control(self):  # type: () -> None
        out = predict(self.particles(), 2.0, ProcessNoise(accel_std=0.0, control_std=0.0),
                      np.random.default_rng(0), control=(0.4, 0.2))
        np.testing.assert_allclose(out.states[:, :4], np.tile([1.4, 2.2, 0.2, 0.1], (3, 1)))

    def test_bad_dt(self):  # type: () -> None
        self.assertRaises(ValueError, predict, self.particles(), 0.0, ProcessNoise(), np.random.default_rng(0))

    def test_acceleration_spread(self):  # type: () -> None
        sigma, dt = 0.2, 1.0
        ps = ParticleSet(np.tile([1.0, 2.0, 0.5, 0.0, 0.0, 0.0], (10000, 1)))
        out = predict(ps, dt, ProcessNoise(accel_std=sigma), np.random.default_rng(3))
        position_std = np.std(out.states[:, :2], axis=0)
        velocity_std = np.std(out.states[:, 2:4], axis=0)
        np.testing.assert_allclose(position_std, 0.5 * sigma * dt * dt, rtol=0.05)
        np.testing.assert_allclose(velocity_std, sigma * dt, rtol=0.05)
        np.testing.assert_allclose(np.mean(out.states[:, :2], axis=0), [1.5, 2.0], atol=0.01)


def va_measurement(ue, epoch=1):  # type: (Any, int) -> Measurement
    return Measurement(bearing(ue, VA), 0.0, distance(ue, VA) / C, -70.0, ('NLOS', 'pa-0', 'west'), epoch)


class TestUpdate(unittest.TestCase):

    ue = np.array([2.0, 1.0, 0.0, 0.0, 0.0, 0.0])

    def setUp(self):  # type: () -> None
        self.cfg = small_config(ekf_refinement=False)
        self.noise = noiseless()
        self.particles = ParticleSet(np.tile(self.ue, (50, 1)))

    def features(self, existence=0.3):  # type: (float) -> Any
        return init_known_pa('pa-0', PA, self.cfg) + [
            Feature('va', 'VA', (VA[0] + 0.05, VA[1] - 0.05), 0.04 * np.eye(2), existence, pa_id='pa-0')]

    def detect_repeatedly(self, epochs):  # type: (int) -> Any
        features = self.features()
        history = []
        for epoch in range(1, epochs + 1):
            m = [va_measurement(self.ue[:2], epoch)]
            assoc = associate(self.particles, features, m, self.cfg, self.noise)
            _, features, _ = update(self.particles, features, m, assoc, self.noise, self.cfg,
                                    np.random.default_rng(epoch), epoch)
            history.append(features[1])
        return history

    def test_existence_rises_under_repeated_detection(self):  # type: () -> None
        history = self.detect_repeatedly(10)
        existence = [0.3] + [f.existence for f in history]
        for before, after in zip(existence, existence[1:]):
            self.assertGreaterEqual(after, before - 1e-12)
        self.assertGreater(existence[-1], 0.99)

    def test_covariance_shrinks_under_repeated_detection(self):  # type: () -> None
        history = self.detect_repeatedly(10)
        traces = [0.08] + [float(np.trace(f.covariance)) for f in history]
        for before, after in zip(traces, traces[1:]):
            self.assertLessEqual(after, before + 1e-15)
        self.assertLess(traces[-1], traces[0])
        self.assertLess(distance(history[-1].mean, VA), distance((VA[0] + 0.05, VA[1] - 0.05), VA))

    def test_existence_outside_field_of_view_unchanged(self):  # type: () -> None
        cfg = small_config(ekf_refinement=False, fov=math.radians(90.0))
        ahead = Feature('ahead', 'VA', (6.0, 1.0), 0.04 * np.eye(2), 0.8, pa_id='pa-0')
        behind = Feature('behind', 'VA', VA, 0.04 * np.eye(2), 0.8, pa_id='pa-0')
        features = init_known_pa('pa-0', PA, cfg) + [ahead, behind]
        assoc = associate(self.particles, features, [], cfg, self.noise)
        _, out, _ = update(self.particles, features, [], assoc, self.noise, cfg, np.random.default_rng(0), 1)
        self.assertAlmostEqual(out[1].existence, cfg.survival * 0.8)
        self.assertEqual(out[2].existence, 0.8)

    def test_missed_feature_pruned_after_decay(self):  # type: () -> None
        features = [Feature('va', 'VA', VA, 0.04 * np.eye(2), 1.0)]
        pruned_at = None
        for epoch in range(1, 301):
            assoc = associate(self.particles, features, [], self.cfg, self.noise)
            _, features, _ = update(self.particles, features, [], assoc, self.noise, self.cfg,
                                    np.random.default_rng(epoch), epoch)
            if epoch <= 200:
                self.assertAlmostEqual(features[0].existence, self.cfg.survival ** epoch, places=12)
            features = birth_and_prune(features, [], assoc, self.particles, self.cfg, self.noise, epoch)
            if not features:
                pruned_at = epoch
                break
        # 0.97 ** 200 is still above the threshold, 0.97 ** 227 is the first value below it
        self.assertEqual(pruned_at, 227)

    def test_underflow_reinitialises_uniform(self):  # type: () -> None
        ps = ParticleSet(np.tile(self.ue, (8, 1)), np.zeros(8))
        features = init_known_pa('pa-0', PA, self.cfg)
        los = Measurement(bearing(self.ue[:2], PA), 0.0, distance(self.ue[:2], PA) / C, -60.0, ('LOS', 'pa-0'), 1)
        assoc = Association(np.array([[1.0, 0.0, 0.0]]), ['pa-0'])
        with self.assertLogs('isacslam.slam_engine', 'WARNING'):
            out, _, loglik = update(ps, features, [los], assoc, self.noise, self.cfg, np.random.default_rng(0), 1)
        self.assertTrue(out.underflow)
        np.testing.assert_allclose(out.weights, np.full(8, 1.0 / 8))
        self.assertEqual(loglik, -np.inf)


class TestBirthAndPrune(unittest.TestCase):

    def test_unexplained_measurement_is_born_and_weak_feature_pruned(self):  # type: () -> None
        cfg = small_config()
        ue = np.array([2.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        ps = ParticleSet(np.tile(ue, (4, 1)))
        features = [Feature('pa-0', 'PA', PA, 1e-6 * np.eye(2), 1.0),
                    Feature('f1.0', 'VA', (12.0, 3.0), 0.1 * np.eye(2), 1e-4)]
        va = (-1.0, 3.0)
        m = Measurement(bearing(ue[:2], va), 0.0, distance(ue[:2], va) / C, -70.0, ('unknown',), 4)
        assoc = Association(np.array([[0.0, 0.0, 0.0, 1.0]]), ['pa-0', 'f1.0'])
        out = birth_and_prune(features, [m], assoc, ps, cfg, make_noise_profile(), epoch=4)
        self.assertEqual([f.id for f in out], ['pa-0', 'f4.0'])
        born = out[1]
        self.assertEqual(born.kind, 'VA')
        self.assertEqual(born.pa_id, 'pa-0')
        self.assertAlmostEqual(born.existence, cfg.birth_existence)
        np.testing.assert_allclose(born.mean, va, atol=1e-9)

    def test_low_new_feature_mass_gives_no_birth(self):  # type: () -> None
        cfg = small_config()
        ps = ParticleSet(np.tile([2.0, 1.0, 0.0, 0.0, 0.0, 0.0], (4, 1)))
        features = init_known_pa('pa-0', PA, cfg)
        m = Measurement(0.3, 0.0, 20e-9, -80.0, ('clutter',), 2)
        assoc = Association(np.array([[0.1, 0.6, 0.3]]), ['pa-0'])
        out = birth_and_prune(features, [m], assoc, ps, cfg, make_noise_profile(), epoch=2)
        self.assertEqual([f.id for f in out], ['pa-0'])

    def test_non_finite_new_feature_mass_gives_no_birth(self):  # type: () -> None
        cfg = small_config()
        ps = ParticleSet(np.tile([2.0, 1.0, 0.0, 0.0, 0.0, 0.0], (4, 1)))
        features = init_known_pa('pa-0', PA, cfg)
        m = va_measurement((2.0, 1.0), 2)
        assoc = Association(np.array([[0.0, 0.0, np.nan]]), ['pa-0'])
        out = birth_and_prune(features, [m], assoc, ps, cfg, make_noise_profile(), epoch=2)
        self.assertEqual([f.id for f in out], ['pa-0'])

    def test_reflection_births_virtual_anchor_and_bounce(self):  # type: () -> None
        ue = np.array([2.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        t = ue[0] / (ue[0] - VA[0])
        bounce = ue[:2] + t * (np.array(VA) - ue[:2])
        m = Measurement(bearing(ue[:2], VA), bearing(PA, bounce), distance(ue[:2], VA) / C, -70.0,
                        ('NLOS', 'pa-0', 'west'), 3)
        ps = ParticleSet(np.tile(ue, (4, 1)))
        assoc = Association(np.array([[0.0, 0.0, 1.0]]), ['pa-0'])
        for scatterers, kinds in ((False, ['PA', 'VA']), (True, ['PA', 'VA', 'scatterer'])):
            cfg = small_config(measurements=('AOA', 'AOD'), scatterer_births=scatterers)
            out = birth_and_prune(init_known_pa('pa-0', PA, cfg), [m], assoc, ps, cfg, noiseless(), epoch=3)
            self.assertEqual([f.kind for f in out], kinds)
            np.testing.assert_allclose(out[1].mean, VA, atol=1e-6)
            if scatterers:
                np.testing.assert_allclose(out[2].mean, bounce, atol=1e-6)


class TestSlamEngine(unittest.TestCase):

    def test_known_pa_tracks_line(self):  # type: () -> None
        engine = run_line(0)
        self.assertEqual(len(engine.history), 20)
        truth = [(1.5 + 0.25 * k, 2.0) for k in range(20)]
        errors = [distance(r.position, t) for r, t in zip(engine.history, truth)]
        self.assertLess(np.mean(errors), 0.5)
        self.assertLess(errors[-1], 0.5)
        pa = [f for f in engine.features if f.kind == 'PA'][0]
        np.testing.assert_allclose(pa.mean, PA)
        self.assertEqual(engine.diagnostics['weight_underflow'], 0)

    def test_imu_driven_track_stays_bounded(self):  # type: () -> None
        noise = make_noise_profile(sigma_aoa_deg=1.0, sigma_aod_deg=1.0, sigma_toa=0.3e-9, sigma_rsrp=0.0,
                                   detection_probability=1.0, clutter_rate=0.0)
        track = [(1.5 + 0.25 * k, 2.0) for k in range(20)]
        runner = run_track(room(), track, small_config(), noise, RngStreams(0), imu=ImuConfig(0.02, 0.005))
        self.assertEqual(len(runner.controls), 19)
        errors = [r.error for r in runner.rows]
        self.assertEqual(len(errors), 20)
        self.assertLess(np.mean(errors), 0.5)
        self.assertLess(errors[-1], 0.5)
        self.assertEqual(runner.engine.diagnostics['weight_underflow'], 0)

    def test_noiseless_known_pa(self):  # type: () -> None
        truth = [(1.5 + 0.25 * k, 2.0) for k in range(20)]
        expected_map = visible_features(room(), truth)
        for seed in range(3):
            engine = run_line(seed, noise=noiseless(), cfg=SlamConfig())
            self.assertEqual(engine.diagnostics['weight_underflow'], 0)
            errors = [distance(r.position, t) for r, t in zip(engine.history, truth)]
            self.assertLess(np.mean(errors), 1e-3)
            estimated = [f.position for f in engine.map_estimate()]
            self.assertLess(ospa(estimated, expected_map), 1e-3)

    def test_hybrid_estimates_follow_translation(self):  # type: () -> None
        def run(shift):  # type: (Any) -> SlamEngine
            t = np.array(shift, dtype=np.float64)
            corners = [(0, 0), (9, 0), (9, 8), (0, 8)]
            names = ['south', 'east', 'north', 'west']
            walls = [make_wall(names[k], np.add(corners[k], t), np.add(corners[(k + 1) % 4], t)) for k in range(4)]
            env = make_environment(walls, [('pa-0', np.add(PA, t))])
            noise = make_noise_profile(sigma_aoa_deg=1.0, sigma_aod_deg=1.0, sigma_toa=0.3e-9,
                                       detection_probability=0.9, clutter_rate=0.5)
            cfg = small_config(mode='hybrid')
            priors = [VaPrior(Point2(*np.add(VA, t)), 0.01 * np.eye(2), 'west', 'pa-0', 'active')]
            features = init_hybrid(priors, ('pa-0', np.add(PA, t) + [0.3, -0.2], 0.25 * np.eye(2)))
            streams = RngStreams(11)
            truth = [UEState(Point2(*np.add((1.5 + 0.25 * k, 2.0), t)), (0.25, 0.0)) for k in range(8)]
            engine = SlamEngine(cfg, noise, truth[0], streams, 0, features)
            for k, ue in enumerate(truth):
                paths = enumerate_paths(env, ue, noise)
                engine.step(observe(paths, ue, noise, streams.get(0, k + 1, 'measure'), k + 1, env=env), k + 1)
            return engine

        shift = (3.0, -2.0)
        base, moved = run((0.0, 0.0)), run(shift)
        for a, b in zip(base.history, moved.history):
            np.testing.assert_allclose(np.add(a.position, shift), b.position, atol=1e-6)
        self.assertEqual([f.id for f in base.features], [f.id for f in moved.features])
        for a, b in zip(base.features, moved.features):
            np.testing.assert_allclose(a.mean + shift, b.mean, atol=1e-6)

    def test_walls_become_virtual_anchors(self):  # type: () -> None
        engine = run_line(1)
        vas = engine.map_estimate(kinds=('VA',))
        self.assertGreater(len(vas), 0)
        for f in vas:
            np.linalg.cholesky(f.covariance)

    def test_same_seed_same_history(self):  # type: () -> None
        a = run_line(5, epochs=6)
        b = run_line(5, epochs=6)
        self.assertEqual(a.history, b.history)

    def test_inject_skips_duplicates(self):  # type: () -> None
        cfg = small_config()
        engine = SlamEngine(cfg, make_noise_profile(), UEState(Point2(2.0, 2.0)), RngStreams(0), 0,
                            init_known_pa('pa-0', PA, cfg))
        legacy = [Feature('orf-0', 'PA', PA, 0.01 * np.eye(2), 0.9),
                  Feature('orf-1', 'VA', (-5.667, 6.29), 0.01 * np.eye(2), 0.9)]
        self.assertEqual(engine.inject(legacy, 3), 1)
        self.assertEqual([f.kind for f in engine.features], ['PA', 'VA'])
        self.assertEqual(engine.features[1].birth_epoch, 3)


if __name__ == '__main__':
    unittest.main()
