# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import importlib
import pkgutil

from typing import Any, Dict, Optional, Sequence, Text, Tuple, Type

from six import add_metaclass

from isacslam.errors import ConfigurationError
from isacslam.metrics import series_mean
from isacslam.report import RunReport
from isacslam.runner import TrackRow
from isacslam.scenario import Scenario


class _Registry(type):
    presets = {}  # type: Dict[Text, Type[Any]]

    def __init__(cls, name, bases, dct):  # type: (str, Tuple[Type[Any], ...], Dict[str, Any]) -> None
        preset_name = dct.get('name')
        if preset_name is not None:
            if preset_name in _Registry.presets:
                raise ValueError('Preset {!r} is registered twice'.format(preset_name))
            _Registry.presets[preset_name] = cls
        super(_Registry, cls).__init__(name, bases, dct)


@add_metaclass(_Registry)
class Base(object):
    """An experiment: turns (scenario, seed) into a RunReport.

    Subclasses set ``name`` and ``defaults`` (their options, overridable
    from the scenario's ``presets.<name>`` section) and implement ``run``.
    """
    name = None  # type: Optional[Text]
    defaults = {}  # type: Dict[Text, Any]

    def __init__(self, scenario):  # type: (Scenario) -> None
        self.scenario = scenario
        self.options = scenario.preset_options(self.name or '', self.defaults)

    def new_report(self, seed):  # type: (int) -> RunReport
        return RunReport(self.name or 'preset', seed, self.scenario.echo())

    def run(self, seed):  # type: (int) -> RunReport
        raise NotImplementedError

    def ue_option(self, key='ue'):  # type: (Text) -> int
        ue_id = self.options.get(key)
        ids = self.scenario.ue_ids()
        if ue_id is None:
            return ids[0]
        if ue_id not in ids:
            raise ConfigurationError('Preset {} refers to unknown ue {}'.format(self.name, ue_id))
        return int(ue_id)


def error_summary(report, mechanism, rows, mapping_target=1.0):
    # type: (RunReport, Text, Sequence[TrackRow], float) -> None
    """Adds the localization/mapping scalars of one UE's rows to ``report``."""
    if not rows:
        return
    errors = [r.error for r in rows]
    ospas = [r.ospa for r in rows]
    report.add_summary(mechanism, 'mae', series_mean(errors))
    report.add_summary(mechanism, 'final_error', float(errors[-1]))
    report.add_summary(mechanism, 'mean_ospa', series_mean(ospas))
    report.add_summary(mechanism, 'final_ospa', float(ospas[-1]))
    reached = [r.epoch for r in rows if r.ospa < mapping_target]
    report.add_summary(mechanism, 'epochs_to_map', float(reached[0]) if reached else float('nan'))


def collect_presets():  # type: () -> Dict[Text, Type[Base]]
    """Imports every module under isacslam.presets so each Base subclass registers."""
    from isacslam import presets
    for info in pkgutil.iter_modules(presets.__path__):  # type: ignore
        importlib.import_module('{}.{}'.format(presets.__name__, info[1]))
    return dict(_Registry.presets)
