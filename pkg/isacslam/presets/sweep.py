# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math

from typing import Any, List, Sequence, Tuple

from isacslam.beam_mgmt import successive_cancellation, to_measurement
from isacslam.errors import ConfigurationError
from isacslam.geometry import Environment, distance, wrap_angle
from isacslam.helper import make_track
from isacslam.measurement import (BeamCodebook, Measurement, RSRPMatrix, enumerate_paths, sweep_rsrp,
                                  ue_states_from_track)
from isacslam.metrics import mae, mean_matched_error, ospa, visible_features
from isacslam.presets.base import Base, error_summary
from isacslam.report import RunReport
from isacslam.rng import RngStreams
from isacslam.runner import TrackRow
from isacslam.slam_engine import SlamEngine, init_known_pa

MECHANISM = 'beam_sweep'

RSRP_HEADER = ('orientation', 'tx_orientation_deg', 'rx_orientation_deg', 'tx_beam', 'rx_beam', 'rsrp_dbm')
EXTRACTION_HEADER = ('epoch', 'orientation', 'tx_beam', 'rx_beam', 'aod_deg', 'aoa_deg', 'strength_db')


def merge_extractions(measurements, aoa_tolerance, aod_tolerance):
    # type: (Sequence[Measurement], float, float) -> List[Measurement]
    """Drops paths seen again under another orientation; the strongest copy stays."""
    kept = []  # type: List[Measurement]
    for m in sorted(measurements, key=lambda m: -m.rsrp):
        if any(abs(wrap_angle(m.aoa - k.aoa)) < aoa_tolerance and abs(wrap_angle(m.aod - k.aod)) < aod_tolerance
               for k in kept):
            continue
        kept.append(m)
    return kept


def rsrp_rows(k, m, tx_cb, rx_cb):  # type: (int, RSRPMatrix, BeamCodebook, BeamCodebook) -> List[Tuple[Any, ...]]
    return [(k, math.degrees(m.tx_orientation), math.degrees(m.rx_orientation), i, j, float(m.values[i, j]))
            for i in range(tx_cb.n_beams) for j in range(rx_cb.n_beams)]


class BeamSweep(Base):
    """Synthetic replication of the beam-sweeping room experiment.

    At every grid point the PA and UE sweep all beam pairs under each
    (PA, UE) array orientation; successive cancellation turns each RSRP
    matrix into AOA/AOD paths and SLAM with the known PA runs on them. The
    RSRP matrices of ``rsrp_point`` are emitted.
    """
    name = 'sweep_fig6'
    defaults = {
        'pa': None,
        'track': {'grid': {'origin': [2.0, 1.0], 'step': 0.6, 'shape': [5, 5], 'serpentine': True}},
        'orientations_deg': [[-90.0, 90.0], [-90.0, -90.0], [-30.0, 0.0], [-150.0, 180.0]],
        'rsrp_point': 0,
        'angle_sigma_deg': 3.0,
        'accel_std': 0.5,
        'stop_threshold_db': 10.0,
        'dynamic_range_db': 30.0,
        'ue_orientation_deg': 0.0,
    }

    def environment(self):  # type: () -> Tuple[Environment, Any, Any]
        env = self.scenario.environment()
        pa_id = self.options['pa'] or env.pas[0][0]
        try:
            pa = env.pa(pa_id)
        except KeyError:
            raise ConfigurationError('Preset {} refers to unknown PA {!r}'.format(self.name, pa_id))
        return Environment(env.walls, [(pa_id, pa)], env.scatterers, env.bounds), pa_id, pa

    def run(self, seed):  # type: (int) -> RunReport
        sc = self.scenario
        opts = self.options
        env, pa_id, pa = self.environment()
        track = make_track(opts['track'])
        truth = ue_states_from_track(track, 0.0, math.radians(opts['ue_orientation_deg']))
        tx_cb, rx_cb = sc.codebooks()
        noise = sc.noise_profile()
        sigma = math.radians(opts['angle_sigma_deg'])
        slam_noise = noise.replace(sigma_aoa=sigma, sigma_aod=sigma)
        cfg = sc.slam_config(mode='passive_known_pa', measurements=['AOA', 'AOD'],
                             accel_std=opts['accel_std'])
        streams = RngStreams(seed)
        engine = SlamEngine(cfg, slam_noise, truth[0], streams, 0, init_known_pa(pa_id, pa, cfg))
        orientations = [(math.radians(t), math.radians(r)) for t, r in opts['orientations_deg']]
        report = self.new_report(seed)
        rows = []  # type: List[TrackRow]
        seen = []  # type: List[Any]
        for k, ue in enumerate(truth):
            epoch = k + 1
            rng = streams.get(0, epoch, 'sweep')
            paths = enumerate_paths(env, ue, noise)
            extracted = []  # type: List[Measurement]
            for o, (tx_o, rx_o) in enumerate(orientations):
                m = sweep_rsrp(env, ue, tx_cb, rx_cb, noise, rng, tx_o, rx_o, paths)
                if k == int(opts['rsrp_point']):
                    report.add_rows('rsrp', RSRP_HEADER, rsrp_rows(o, m, tx_cb, rx_cb))
                estimates = successive_cancellation(m, tx_cb, rx_cb, opts['stop_threshold_db'],
                                                    noise.noise_floor_dbm,
                                                    dynamic_range_db=opts['dynamic_range_db'])
                for est in estimates:
                    meas = to_measurement(est, m, epoch, ue.orientation)
                    extracted.append(meas)
                    report.add_rows('extraction', EXTRACTION_HEADER, [(
                        epoch, o, est.tx_beam, est.rx_beam, math.degrees(meas.aod),
                        math.degrees(wrap_angle(meas.aoa + ue.orientation)), est.strength)])
            measurements = merge_extractions(extracted, rx_cb.spacing, tx_cb.spacing)
            record = engine.step(measurements, epoch)
            seen.append(ue.position)
            estimated = [f.position for f in engine.map_estimate(kinds=('PA', 'VA'))]
            rows.append(TrackRow(0, epoch, record.position.x, record.position.y, ue.position.x, ue.position.y,
                                 distance(record.position, ue.position),
                                 ospa(estimated, visible_features(env, seen, False), sc.ospa_params()),
                                 record.covariance_trace, record.n_features))
        report.add_series(MECHANISM, rows)
        report.add_map(MECHANISM, engine.features)
        error_summary(report, MECHANISM, rows)
        vas = [f.position for f in engine.map_estimate(kinds=('VA',))]
        truth_vas = visible_features(env, seen, False)[len(env.pas):]
        report.add_summary(MECHANISM, 'me_loc', mae([(r.x, r.y) for r in rows], track))
        report.add_summary(MECHANISM, 'me_map', mean_matched_error(vas, truth_vas))
        report.add_summary(MECHANISM, 'rsrp_matrices', len(orientations))
        return report
