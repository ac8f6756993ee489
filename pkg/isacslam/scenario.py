# SPDX-License-Identifier: Apache-2.0

"""Scenario documents.

A Scenario keeps the document exactly as read (file units: degrees, meters,
seconds) so that ``parse(emit(s)) == s``; domain objects are built on demand
through the ``isacslam.helper`` constructors. Missing sections and fields
take the values in DEFAULTS.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import copy
import json
import math

from typing import Any, Dict, List, Optional, Text, Tuple

from isacslam import helper
from isacslam.beam_mgmt import ImuConfig
from isacslam.crowdsourcing import FrameSchedule
from isacslam.errors import ConfigurationError
from isacslam.geometry import Environment, Point2
from isacslam.measurement import BeamCodebook, NoiseProfile
from isacslam.metrics import OspaParams
from isacslam.slam_engine import SlamConfig

DEFAULTS = {
    'noise': {
        'sigma_aoa_deg': 2.0,
        'sigma_aod_deg': 2.0,
        'sigma_toa': 1e-9,
        'sigma_rsrp': 1.0,
        'detection_probability': 0.95,
        'clutter_rate': 1.0,
        'noise_floor_dbm': -90.0,
        'tx_power_dbm': 30.0,
        'carrier_hz': 28e9,
    },
    'slam': {
        'n_particles': 2000,
        'gate': 13.8,
        'birth_threshold': 0.5,
        'prune_threshold': 1e-3,
        'survival': 0.97,
        'mode': 'passive_known_pa',
        'measurements': ['AOA', 'TOA'],
        'fov_deg': 360.0,
        'bp_iterations': 20,
        'bp_tolerance': 1e-6,
        'min_sigma_angle_deg': math.degrees(1e-3),
        'min_sigma_range': 1e-3,
        'initial_position_std': 0.1,
        'initial_velocity_std': 0.05,
        'initial_clock_std': 0.0,
        'initial_orientation_std_deg': 0.0,
        'birth_existence': 0.5,
        'new_feature_rate': 2.0,
        'clutter_floor': 0.01,
        'clutter_range': 30.0,
        'soft_min': 1e-3,
        'ekf_refinement': True,
        'ekf_iterations': 3,
        'roughening': 0.2,
        'scatterer_births': False,
        'pa_init_std': 0.5,
        'known_pa_variance': 1e-6,
        'min_triangulation_angle_deg': 2.0,
        'accel_std': 0.1,
        'clock_std': 0.0,
        'orientation_std_deg': 0.0,
        'control_std': 0.05,
    },
    'schedule': {
        'upload_period': 5,
        'download_on_entry': True,
        'fusion': 'information',
    },
    'codebook': {
        'n_beams': 8,
        'sector_deg': 100.0,
        'beamwidth_deg': None,
    },
    'seeds': {
        'master': 0,
        'count': 50,
    },
    'imu': {
        'enabled': False,
        'sigma': 0.05,
        'drift_sigma': 0.005,
    },
    'ospa': {
        'cutoff': 5.0,
        'order': 1.0,
        'include_scatterers': True,
    },
    'ue': {
        'entering_time': 1,
        'clock_bias': 0.0,
        'orientation_deg': 0.0,
    },
}  # type: Dict[Text, Dict[Text, Any]]

TOP_LEVEL_KEYS = ('name', 'description', 'environment', 'ues', 'noise', 'slam', 'schedule',
                  'codebooks', 'seeds', 'horizon', 'ospa', 'imu', 'presets')


class Scenario(object):
    """A scenario document plus the bytes it was read from, if any."""

    def __init__(self, document, raw=None):  # type: (Dict[Text, Any], Optional[bytes]) -> None
        if not isinstance(document, dict):
            raise ConfigurationError('A scenario must be a JSON object, got {}'.format(
                type(document).__name__))
        self.document = document
        self.raw = raw

    def __eq__(self, other):  # type: (Any) -> bool
        return isinstance(other, Scenario) and self.document == other.document

    def __ne__(self, other):  # type: (Any) -> bool
        return not self == other

    def __repr__(self):  # type: () -> Text
        return 'Scenario(name={!r}, ues={})'.format(self.name, len(self.document.get('ues', [])))

    def echo(self):  # type: () -> bytes
        """Bytes to store as the configuration echo of a run."""
        return self.raw if self.raw is not None else emit(self)

    def section(self, name):  # type: (Text) -> Dict[Text, Any]
        out = dict(DEFAULTS.get(name, {}))
        out.update(self.document.get(name) or {})
        return out

    @property
    def name(self):  # type: () -> Text
        return self.document.get('name', 'scenario')

    @property
    def horizon(self):  # type: () -> int
        return int(self.document['horizon'])

    def environment(self):  # type: () -> Environment
        env = self.document['environment']
        walls = [helper.make_wall(w['id'], w['a'], w['b'], w.get('reflection_loss_db', 10.0))
                 for w in env.get('walls', [])]
        pas = [(p['id'], p['position']) for p in env.get('pas', [])]
        scatterers = [(s['id'], s['position']) for s in env.get('scatterers', [])]
        return helper.make_environment(walls, pas, scatterers, env.get('bounds'))

    def ues(self):  # type: () -> List[Dict[Text, Any]]
        out = []
        for ue in self.document.get('ues', []):
            merged = dict(DEFAULTS['ue'])
            merged.update(ue)
            out.append(merged)
        return sorted(out, key=lambda u: u['id'])

    def ue_ids(self):  # type: () -> List[int]
        return [int(u['id']) for u in self.ues()]

    def ue(self, ue_id):  # type: (int) -> Dict[Text, Any]
        for u in self.ues():
            if u['id'] == ue_id:
                return u
        raise KeyError(ue_id)

    def track(self, ue_id):  # type: (int) -> List[Point2]
        u = self.ue(ue_id)
        return helper.make_track(u['track'], self.horizon - int(u['entering_time']) + 1)

    def tracks(self):  # type: () -> Dict[int, List[Point2]]
        return dict((uid, self.track(uid)) for uid in self.ue_ids())

    def entering_times(self):  # type: () -> Dict[int, int]
        return dict((int(u['id']), int(u['entering_time'])) for u in self.ues())

    def clock_biases(self):  # type: () -> Dict[int, float]
        return dict((int(u['id']), float(u['clock_bias'])) for u in self.ues())

    def orientations(self):  # type: () -> Dict[int, float]
        return dict((int(u['id']), math.radians(u['orientation_deg'])) for u in self.ues())

    def noise_profile(self):  # type: () -> NoiseProfile
        return helper.make_noise_profile(**self.section('noise'))

    def slam_config(self, **overrides):  # type: (**Any) -> SlamConfig
        fields = self.section('slam')
        fields.update(overrides)
        return helper.make_slam_config(**fields)

    def schedule(self):  # type: () -> FrameSchedule
        s = self.section('schedule')
        return helper.make_schedule(self.entering_times(), s['upload_period'], s['download_on_entry'])

    @property
    def fusion(self):  # type: () -> Text
        return self.section('schedule')['fusion']

    def codebooks(self):  # type: () -> Tuple[BeamCodebook, BeamCodebook]
        books = self.document.get('codebooks') or {}
        out = []
        for side in ('tx', 'rx'):
            fields = dict(DEFAULTS['codebook'])
            fields.update(books.get(side) or {})
            out.append(helper.make_codebook(**fields))
        return out[0], out[1]

    def seeds(self, count=None):  # type: (Optional[int]) -> List[int]
        s = self.section('seeds')
        n = int(s['count']) if count is None else int(count)
        return [int(s['master']) + k for k in range(n)]

    def imu(self):  # type: () -> Optional[ImuConfig]
        """Odometry settings, or None when the IMU is disabled."""
        s = self.section('imu')
        if not s['enabled']:
            return None
        return helper.make_imu_config(s['sigma'], s['drift_sigma'])

    def ospa_params(self):  # type: () -> OspaParams
        s = self.section('ospa')
        return helper.make_ospa_params(s['cutoff'], s['order'])

    @property
    def include_scatterers(self):  # type: () -> bool
        return bool(self.section('ospa')['include_scatterers'])

    def preset_options(self, name, defaults=None):  # type: (Text, Optional[Dict[Text, Any]]) -> Dict[Text, Any]
        out = copy.deepcopy(defaults or {})
        out.update(copy.deepcopy((self.document.get('presets') or {}).get(name) or {}))
        return out


def parse(data):  # type: (Any) -> Scenario
    """Scenario from JSON bytes or text; bytes are kept for the config echo."""
    raw = data if isinstance(data, bytes) else None
    text = data.decode('utf-8') if isinstance(data, bytes) else data
    try:
        document = json.loads(text)
    except ValueError as e:
        raise ConfigurationError('Scenario is not valid JSON: {}'.format(e))
    return Scenario(document, raw)


def emit(scenario):  # type: (Scenario) -> bytes
    return (json.dumps(scenario.document, sort_keys=True, indent=2) + '\n').encode('utf-8')
