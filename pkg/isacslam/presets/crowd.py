# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

from isacslam.crowdsourcing import CohortResult, OrfSnapshotRow, run_cohort
from isacslam.presets.base import Base, error_summary
from isacslam.report import RunReport
from isacslam.rng import RngStreams
from isacslam.scenario import Scenario

MECHANISMS = (('crowdsourcing', True), ('independent', False))


def run_scenario_cohort(sc, seed, crowdsourcing):  # type: (Scenario, int, bool) -> CohortResult
    _, rx_cb = sc.codebooks()
    return run_cohort(sc.environment(), sc.schedule(), sc.tracks(), sc.slam_config(), RngStreams(seed),
                      sc.noise_profile(), sc.horizon, crowdsourcing, sc.fusion, rx_cb, sc.ospa_params(),
                      sc.include_scatterers, sc.clock_biases(), sc.orientations(), sc.imu())


def add_cohort(report, mechanism, result):  # type: (RunReport, str, CohortResult) -> None
    report.add_series(mechanism, result.rows)
    if result.snapshots:
        report.add_rows('orf', ('mechanism',) + OrfSnapshotRow._fields,
                        [(mechanism,) + tuple(r) for r in result.snapshots])
    if result.orf_history:
        report.add_rows('orf_history', ('mechanism', 'epoch', 'version', 'n_features'),
                        [(mechanism,) + tuple(h) for h in result.orf_history])


class Crowdsourcing(Base):
    """The UE cohort with and without ORF-Map sharing.

    Scalars are reported for ``focus_ue``, by default the last UE to enter.
    """
    name = 'crowd_fig5cd'
    defaults = {'focus_ue': None, 'mapping_target': 1.0}

    def focus(self):  # type: () -> int
        if self.options['focus_ue'] is not None:
            return self.ue_option('focus_ue')
        entering = self.scenario.entering_times()
        return max(entering, key=lambda u: (entering[u], u))

    def run(self, seed):  # type: (int) -> RunReport
        report = self.new_report(seed)
        focus = self.focus()
        for mechanism, flag in MECHANISMS:
            result = run_scenario_cohort(self.scenario, seed, flag)
            add_cohort(report, mechanism, result)
            if flag:
                report.add_map('orf', [f.to_feature() for f in result.orf.features])
            rows = [r for r in result.rows if r.ue_id == focus]
            error_summary(report, mechanism, rows, float(self.options['mapping_target']))
        return report
