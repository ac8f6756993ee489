# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import argparse

from isacslam import load_scenario, checker


def check_scenario():  # type: () -> None
    parser = argparse.ArgumentParser('check-scenario')
    parser.add_argument('scenario_json', type=argparse.FileType('rb'))
    args = parser.parse_args()

    scenario = load_scenario(args.scenario_json)
    checker.check_scenario(scenario)
