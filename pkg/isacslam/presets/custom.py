# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

from isacslam.presets.base import Base, error_summary
from isacslam.presets.crowd import add_cohort, run_scenario_cohort
from isacslam.report import RunReport


class Custom(Base):
    """Runs the scenario as written: every UE, its schedule, one mechanism."""
    name = 'custom'
    defaults = {'crowdsourcing': True, 'mapping_target': 1.0}

    def run(self, seed):  # type: (int) -> RunReport
        mechanism = 'crowdsourcing' if self.options['crowdsourcing'] else 'independent'
        result = run_scenario_cohort(self.scenario, seed, bool(self.options['crowdsourcing']))
        report = self.new_report(seed)
        add_cohort(report, mechanism, result)
        if self.options['crowdsourcing']:
            report.add_map('orf', [f.to_feature() for f in result.orf.features])
        for ue_id in self.scenario.ue_ids():
            rows = [r for r in result.rows if r.ue_id == ue_id]
            error_summary(report, '{}/ue-{}'.format(mechanism, ue_id), rows,
                          float(self.options['mapping_target']))
        return report
