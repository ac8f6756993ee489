# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

from isacslam.presets.base import Base, error_summary
from isacslam.report import RunReport
from isacslam.rng import RngStreams
from isacslam.runner import run_track

MECHANISMS = (('hybrid', 'hybrid'), ('passive_known_pa', 'passive_known_pa'))


class HybridSensing(Base):
    """Hybrid active/passive sensing against the known-PA passive baseline.

    Both mechanisms see the same measurements (same seed, same streams).
    """
    name = 'hybrid_fig5ab'
    defaults = {'ue': None, 'horizon': None, 'mapping_target': 1.0}

    def run(self, seed):  # type: (int) -> RunReport
        sc = self.scenario
        env = sc.environment()
        noise = sc.noise_profile()
        ue_id = self.ue_option()
        track = sc.track(ue_id)
        if self.options['horizon'] is not None:
            track = track[:int(self.options['horizon'])]
        _, rx_cb = sc.codebooks()
        report = self.new_report(seed)
        for mechanism, mode in MECHANISMS:
            runner = run_track(env, track, sc.slam_config(mode=mode), noise, RngStreams(seed), ue_id,
                               codebook=rx_cb, ospa_params=sc.ospa_params(),
                               include_scatterers=sc.include_scatterers,
                               clock_bias=sc.clock_biases()[ue_id], orientation=sc.orientations()[ue_id],
                               imu=sc.imu())
            report.add_series(mechanism, runner.rows)
            report.add_map(mechanism, runner.engine.features if runner.engine is not None else [])
            error_summary(report, mechanism, runner.rows, float(self.options['mapping_target']))
            if runner.engine is not None:
                report.add_summary(mechanism, 'weight_underflow',
                                   runner.engine.diagnostics['weight_underflow'])
        return report
