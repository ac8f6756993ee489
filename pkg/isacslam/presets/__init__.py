# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import logging
import multiprocessing
import time

from typing import List, Optional, Sequence, Text, Tuple

from isacslam.checker import check_scenario
from isacslam.errors import ConfigurationError
from isacslam.report import RunReport
from isacslam.scenario import Scenario, parse

logger = logging.getLogger(__name__)

PRESETS = ('hybrid_fig5ab', 'crowd_fig5cd', 'sweep_fig6', 'beamtrack', 'custom')


def get_preset(name):  # type: (Text) -> type
    from isacslam.presets.base import collect_presets
    presets = collect_presets()
    if name not in presets:
        raise ConfigurationError('Unknown preset {!r}, expected one of {}'.format(name, ', '.join(sorted(presets))))
    return presets[name]


def _run_one(job):  # type: (Tuple[Text, bytes, int]) -> RunReport
    name, config, seed = job
    scenario = parse(config)
    start = time.time()
    report = get_preset(name)(scenario).run(seed)
    report.runtime = time.time() - start
    logger.info('%s seed %d finished in %.1f s', name, seed, report.runtime)
    return report


def run_experiment(scenario, preset, seeds=None, jobs=1):
    # type: (Scenario, Text, Optional[Sequence[int]], int) -> List[RunReport]
    """Runs ``preset`` on ``scenario`` once per seed.

    Arguments:
        scenario: a validated or unvalidated Scenario; it is checked first.
        preset: one of PRESETS.
        seeds: master seeds; defaults to the scenario's seed list.
        jobs: worker processes. Reports are returned in seed order whatever
            the number of workers.

    Returns:
        One RunReport per seed.
    """
    check_scenario(scenario)
    get_preset(preset)
    if seeds is None:
        seeds = scenario.seeds()
    config = scenario.echo()
    work = [(preset, config, int(s)) for s in sorted(seeds)]
    if jobs > 1 and len(work) > 1:
        pool = multiprocessing.Pool(min(jobs, len(work)))
        try:
            return pool.map(_run_one, work)
        finally:
            pool.close()
            pool.join()
    return [_run_one(job) for job in work]
