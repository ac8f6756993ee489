# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import numpy as np  # type: ignore
from typing import Any, List, Sequence, Tuple

from isacslam.beam_mgmt import TrackingLogRow, TrackingState, predict_beams, tracking_step
from isacslam.geometry import Point2, bearing, distance
from isacslam.measurement import UEState, apply_blockage, enumerate_paths, observe, \
    sweep_rsrp, ue_states_from_track
from isacslam.metrics import overhead_stats
from isacslam.presets.base import Base, error_summary
from isacslam.report import RunReport
from isacslam.rng import RngStreams
from isacslam.runner import TrackRow
from isacslam.slam_engine import Feature, SlamEngine, init_known_pa

MECHANISM = 'slam_tracking'


def predicted_pose(engine, fallback, dt=1.0):  # type: (SlamEngine, UEState, float) -> Tuple[UEState, Any]
    """Constant-velocity prediction of the UE pose and its position covariance."""
    if not engine.history:
        std = engine.cfg.initial_position_std
        return fallback, np.diag([std ** 2, std ** 2])
    est = engine.estimate()
    position = Point2(est.position.x + est.velocity[0] * dt, est.position.y + est.velocity[1] * dt)
    return est._replace(position=position), engine.position_covariance()


def strongest_features(features, position, n):  # type: (Sequence[Feature], Any, int) -> List[Feature]
    """The ``n`` confirmed features closest to ``position`` (shortest, hence strongest, paths)."""
    confirmed = [f for f in features if f.existence > 0.5]
    return sorted(confirmed, key=lambda f: (distance(position, f.mean), f.id))[:n]


class BeamTracking(Base):
    """SLAM-aided beam tracking through a scripted LOS blockage.

    Every epoch the PA and UE point their arrays at each other from the
    predicted pose, the full RSRP matrix is synthesised (with the LOS path
    attenuated while blocked) and the tracker measures only the beam pairs
    the map predicts, falling back to a full sweep on beam death.
    """
    name = 'beamtrack'
    defaults = {
        'ue': None,
        'horizon': None,
        'blockage': {'start': 20, 'duration': 5, 'loss_db': 30.0},
        'gate': 3.0,
        'drop_db': 6.0,
        'miss_limit': 2,
        'window': 5,
        'max_paths': 2,
    }

    def run(self, seed):  # type: (int) -> RunReport
        sc = self.scenario
        opts = self.options
        env = sc.environment()
        noise = sc.noise_profile()
        cfg = sc.slam_config(mode='passive_known_pa')
        tx_cb, rx_cb = sc.codebooks()
        ue_id = self.ue_option()
        track = sc.track(ue_id)
        if opts['horizon'] is not None:
            track = track[:int(opts['horizon'])]
        truth = ue_states_from_track(track, sc.clock_biases()[ue_id], sc.orientations()[ue_id])
        streams = RngStreams(seed)
        features = []  # type: List[Any]
        for pa_id, pa in env.pas:
            features.extend(init_known_pa(pa_id, pa, cfg))
        engine = SlamEngine(cfg, noise, truth[0], streams, ue_id, features)
        serving = env.pas[0][1]
        block = opts['blockage']
        start, stop = int(block['start']), int(block['start']) + int(block['duration'])
        ts = TrackingState()
        log = []  # type: List[TrackingLogRow]
        rows = []  # type: List[TrackRow]
        for k, ue in enumerate(truth):
            epoch = k + 1
            paths = enumerate_paths(env, ue, noise)
            if start <= epoch < stop:
                paths = apply_blockage(paths, float(block['loss_db']))
            pred, cov = predicted_pose(engine, truth[0])
            tx_o = bearing(serving, pred.position)
            rx_o = bearing(pred.position, serving)
            m = sweep_rsrp(env, ue, tx_cb, rx_cb, noise, streams.get(ue_id, epoch, 'sweep'), tx_o, rx_o, paths)
            nearest = strongest_features(engine.features, pred.position, int(opts['max_paths']))
            candidates = predict_beams(nearest, pred, cov, tx_cb, rx_cb, float(opts['gate']), tx_o, rx_o)
            result = tracking_step(ts._replace(candidate_beams=candidates), m, True, float(opts['drop_db']),
                                   int(opts['miss_limit']), int(opts['window']))
            ts = result.state
            chosen = result.chosen if result.chosen is not None else (-1, -1)
            log.append(TrackingLogRow(epoch, 'full_sweep' if result.swept else 'tracking', result.overhead,
                                      chosen[0], chosen[1], result.achieved_rsrp, float(np.max(m.values))))
            measurements = observe(paths, ue, noise, streams.get(ue_id, epoch, 'measure'), epoch, env=env)
            record = engine.step(measurements, epoch)
            rows.append(TrackRow(ue_id, epoch, record.position.x, record.position.y, ue.position.x,
                                 ue.position.y, distance(record.position, ue.position), float('nan'),
                                 record.covariance_trace, record.n_features))
        report = self.new_report(seed)
        report.add_series(MECHANISM, rows)
        report.add_rows('tracking', TrackingLogRow._fields, log)
        report.add_map(MECHANISM, engine.features)
        error_summary(report, MECHANISM, rows)
        stats = overhead_stats(log, tx_cb.n_beams * rx_cb.n_beams, start if start <= len(truth) else None)
        report.add_summary(MECHANISM, 'overhead_fraction', stats.mean_overhead_fraction)
        report.add_summary(MECHANISM, 'median_rsrp_loss_db', stats.median_rsrp_loss_db)
        report.add_summary(MECHANISM, 'recovery_latency', stats.recovery_latency)
        return report
