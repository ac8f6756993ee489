# SPDX-License-Identifier: Apache-2.0

"""isacslam checker

Checks whether a scenario document is legal. ``validate`` collects every
violation and never raises on malformed input; ``check_scenario`` raises a
ValidationError carrying the full list.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math
import numbers

from six import integer_types, string_types
from typing import Any, Dict, List, Optional, Sequence, Text, Union

from isacslam.errors import IsacSlamError, ValidationError
from isacslam.helper import TRACK_KINDS, make_track
from isacslam.scenario import DEFAULTS, TOP_LEVEL_KEYS, Scenario
from isacslam.slam_engine import MEASUREMENT_KEYS, MODES

POSITIVE_SLAM_FIELDS = ('gate', 'birth_threshold', 'prune_threshold', 'survival', 'fov_deg',
                        'bp_tolerance', 'min_sigma_angle_deg', 'min_sigma_range', 'clutter_floor',
                        'clutter_range', 'new_feature_rate')
NON_NEGATIVE_SLAM_FIELDS = ('initial_position_std', 'initial_velocity_std', 'initial_clock_std',
                            'initial_orientation_std_deg', 'soft_min', 'roughening', 'pa_init_std',
                            'known_pa_variance', 'min_triangulation_angle_deg', 'accel_std',
                            'clock_std', 'orientation_std_deg', 'control_std')
UNIT_INTERVAL_SLAM_FIELDS = ('birth_threshold', 'prune_threshold', 'survival', 'birth_existence')
NOISE_STD_FIELDS = ('sigma_aoa_deg', 'sigma_aod_deg', 'sigma_toa', 'sigma_rsrp')
FUSION_RULES = ('information', 'ci')


def _is_int(v):  # type: (Any) -> bool
    return isinstance(v, integer_types) and not isinstance(v, bool)


def _is_number(v):  # type: (Any) -> bool
    return isinstance(v, numbers.Real) and not isinstance(v, bool) and math.isfinite(v)


def _is_point(v):  # type: (Any) -> bool
    return isinstance(v, (list, tuple)) and len(v) == 2 and all(_is_number(c) for c in v)


class _Collector(object):

    def __init__(self):  # type: () -> None
        self.violations = []  # type: List[Text]

    def add(self, where, message):  # type: (Text, Text) -> None
        self.violations.append('{}: {}'.format(where, message))

    def number(self, section, key, value, minimum=None, strict=False, maximum=None):
        # type: (Text, Text, Any, Optional[float], bool, Optional[float]) -> bool
        where = '{}.{}'.format(section, key)
        if not _is_number(value):
            self.add(where, 'must be a number, got {!r}'.format(value))
            return False
        if minimum is not None and (value <= minimum if strict else value < minimum):
            self.add(where, 'must be {} {}, got {}'.format('>' if strict else '>=', minimum, value))
            return False
        if maximum is not None and value > maximum:
            self.add(where, 'must be <= {}, got {}'.format(maximum, value))
            return False
        return True

    def integer(self, section, key, value, minimum=None):  # type: (Text, Text, Any, Optional[int]) -> bool
        where = '{}.{}'.format(section, key)
        if not _is_int(value):
            self.add(where, 'must be an integer, got {!r}'.format(value))
            return False
        if minimum is not None and value < minimum:
            self.add(where, 'must be >= {}, got {}'.format(minimum, value))
            return False
        return True

    def unknown(self, section, mapping, known):  # type: (Text, Dict[Text, Any], Sequence[Text]) -> None
        for key in sorted(mapping):
            if key not in known:
                self.add('{}.{}'.format(section, key), 'unknown field')

    def mapping(self, where, value):  # type: (Text, Any) -> bool
        if not isinstance(value, dict):
            self.add(where, 'must be an object, got {}'.format(type(value).__name__))
            return False
        return True


def _check_environment(c, env):  # type: (_Collector, Any) -> Optional[Sequence[float]]
    if not c.mapping('environment', env):
        return None
    c.unknown('environment', env, ('bounds', 'walls', 'pas', 'scatterers'))
    bounds = env.get('bounds')
    if not (isinstance(bounds, (list, tuple)) and len(bounds) == 4 and all(_is_number(v) for v in bounds)):
        c.add('environment.bounds', 'must be [xmin, ymin, xmax, ymax], got {!r}'.format(bounds))
        bounds = None
    elif not (bounds[0] < bounds[2] and bounds[1] < bounds[3]):
        c.add('environment.bounds', 'is empty: {!r}'.format(bounds))
        bounds = None
    seen = set()  # type: set

    def check_id(where, item):  # type: (Text, Any) -> None
        ident = item.get('id')
        if not isinstance(ident, string_types) or not ident:
            c.add(where, 'id must be a non-empty string, got {!r}'.format(ident))
        elif ident in seen:
            c.add(where, 'duplicate id {!r}'.format(ident))
        else:
            seen.add(ident)

    walls = env.get('walls', [])
    if not isinstance(walls, list):
        c.add('environment.walls', 'must be a list')
        walls = []
    for k, w in enumerate(walls):
        where = 'environment.walls[{}]'.format(k)
        if not c.mapping(where, w):
            continue
        c.unknown(where, w, ('id', 'a', 'b', 'reflection_loss_db'))
        check_id(where, w)
        if not _is_point(w.get('a')) or not _is_point(w.get('b')):
            c.add(where, 'endpoints a and b must be [x, y] pairs')
        elif math.hypot(w['a'][0] - w['b'][0], w['a'][1] - w['b'][1]) <= 1e-9:
            c.add(where, 'wall {!r} has zero length'.format(w.get('id')))
        if 'reflection_loss_db' in w:
            c.number(where, 'reflection_loss_db', w['reflection_loss_db'], 0.0)
    for key, label in (('pas', 'PA'), ('scatterers', 'scatterer')):
        anchors = env.get(key, [])
        if not isinstance(anchors, list):
            c.add('environment.{}'.format(key), 'must be a list')
            continue
        for k, a in enumerate(anchors):
            where = 'environment.{}[{}]'.format(key, k)
            if not c.mapping(where, a):
                continue
            c.unknown(where, a, ('id', 'position'))
            check_id(where, a)
            p = a.get('position')
            if not _is_point(p):
                c.add(where, 'position must be an [x, y] pair, got {!r}'.format(p))
            elif bounds is not None and not _inside(p, bounds):
                c.add(where, '{} {!r} at ({}, {}) lies outside the bounds'.format(label, a.get('id'), p[0], p[1]))
    if not env.get('pas'):
        c.add('environment.pas', 'at least one PA is required')
    return bounds


def _inside(p, bounds):  # type: (Sequence[float], Sequence[float]) -> bool
    return bounds[0] <= p[0] <= bounds[2] and bounds[1] <= p[1] <= bounds[3]


def _check_track_points(c, label, points, bounds, first_epoch):
    # type: (_Collector, Text, Sequence[Any], Optional[Sequence[float]], int) -> None
    if bounds is None:
        return
    for k, p in enumerate(points):
        if not _inside(p, bounds):
            c.add(label, 'epoch {}: track point ({:.6g}, {:.6g}) lies outside the bounds'.format(
                first_epoch + k, p[0], p[1]))


def _check_ues(c, ues, bounds, horizon):  # type: (_Collector, Any, Optional[Sequence[float]], Optional[int]) -> List[int]
    if not isinstance(ues, list) or not ues:
        c.add('ues', 'must be a non-empty list')
        return []
    ids = []  # type: List[int]
    for k, ue in enumerate(ues):
        where = 'ues[{}]'.format(k)
        if not c.mapping(where, ue):
            continue
        c.unknown(where, ue, ('id', 'entering_time', 'track', 'clock_bias', 'orientation_deg'))
        ident = ue.get('id')
        if not _is_int(ident) or ident < 0:
            c.add(where, 'id must be a non-negative integer, got {!r}'.format(ident))
            continue
        if ident in ids:
            c.add(where, 'duplicate ue id {}'.format(ident))
            continue
        ids.append(ident)
        label = 'ue {}'.format(ident)
        entering = ue.get('entering_time', DEFAULTS['ue']['entering_time'])
        if not c.integer(label, 'entering_time', entering, 1):
            entering = None
        for key in ('clock_bias', 'orientation_deg'):
            if key in ue:
                c.number(label, key, ue[key])
        if 'track' not in ue:
            c.add(label, 'track is missing')
            continue
        track_def = ue['track']
        if isinstance(track_def, dict):
            if len(track_def) != 1 or list(track_def)[0] not in TRACK_KINDS:
                c.add(label, 'track must have exactly one of {}, got {}'.format(
                    ', '.join(TRACK_KINDS), sorted(track_def)))
                continue
        elif isinstance(track_def, list):
            bad = [e for e, p in enumerate(track_def) if not _is_point(p)]
            if bad:
                first = (entering or 1) + bad[0]
                c.add(label, 'epoch {}: track point {!r} is not an [x, y] pair'.format(first, track_def[bad[0]]))
                continue
        else:
            c.add(label, 'track must be a list of points or a parametric object')
            continue
        if entering is None or horizon is None:
            continue
        try:
            points = make_track(track_def, horizon - entering + 1)
        except (IsacSlamError, ValueError, TypeError, KeyError, IndexError) as e:
            c.add(label, 'bad track: {}'.format(e))
            continue
        if not points:
            c.add(label, 'track is empty')
            continue
        needed = horizon - entering + 1
        if needed < 1:
            c.add(label, 'entering_time {} lies after the horizon {}'.format(entering, horizon))
        elif len(points) < needed:
            c.add(label, 'track has {} points, needs {} to reach the horizon {}'.format(
                len(points), needed, horizon))
        _check_track_points(c, label, points, bounds, entering)
    return ids


def _check_noise(c, noise):  # type: (_Collector, Any) -> None
    if not c.mapping('noise', noise):
        return
    c.unknown('noise', noise, list(DEFAULTS['noise']))
    for key in NOISE_STD_FIELDS + ('clutter_rate',):
        if key in noise:
            c.number('noise', key, noise[key], 0.0)
    if 'detection_probability' in noise:
        c.number('noise', 'detection_probability', noise['detection_probability'], 0.0, maximum=1.0)
    for key in ('noise_floor_dbm', 'tx_power_dbm'):
        if key in noise:
            c.number('noise', key, noise[key])
    if 'carrier_hz' in noise:
        c.number('noise', 'carrier_hz', noise['carrier_hz'], 0.0, strict=True)


def _check_slam(c, slam):  # type: (_Collector, Any) -> None
    if not c.mapping('slam', slam):
        return
    c.unknown('slam', slam, list(DEFAULTS['slam']))
    for key in ('n_particles', 'bp_iterations', 'ekf_iterations'):
        if key in slam:
            c.integer('slam', key, slam[key], 1 if key == 'n_particles' else 0)
    for key in POSITIVE_SLAM_FIELDS:
        if key in slam:
            c.number('slam', key, slam[key], 0.0, strict=True)
    for key in NON_NEGATIVE_SLAM_FIELDS:
        if key in slam:
            c.number('slam', key, slam[key], 0.0)
    for key in UNIT_INTERVAL_SLAM_FIELDS:
        if key in slam and _is_number(slam[key]) and slam[key] > 1.0:
            c.add('slam.{}'.format(key), 'must be <= 1, got {}'.format(slam[key]))
    if 'fov_deg' in slam and _is_number(slam['fov_deg']) and slam['fov_deg'] > 360.0:
        c.add('slam.fov_deg', 'must be <= 360, got {}'.format(slam['fov_deg']))
    if 'mode' in slam and slam['mode'] not in MODES:
        c.add('slam.mode', 'must be one of {}, got {!r}'.format(', '.join(MODES), slam['mode']))
    if 'measurements' in slam:
        keys = slam['measurements']
        if not isinstance(keys, list) or not keys or \
                any(not isinstance(k, string_types) or k.upper() not in MEASUREMENT_KEYS for k in keys):
            c.add('slam.measurements', 'must be a non-empty subset of {}, got {!r}'.format(
                ', '.join(MEASUREMENT_KEYS), keys))
    for key in ('ekf_refinement', 'scatterer_births'):
        if key in slam and not isinstance(slam[key], bool):
            c.add('slam.{}'.format(key), 'must be true or false, got {!r}'.format(slam[key]))


def _check_codebooks(c, books):  # type: (_Collector, Any) -> None
    if not c.mapping('codebooks', books):
        return
    c.unknown('codebooks', books, ('tx', 'rx'))
    for side in ('tx', 'rx'):
        where = 'codebooks.{}'.format(side)
        book = books.get(side)
        if book is None:
            continue
        if not c.mapping(where, book):
            continue
        c.unknown(where, book, list(DEFAULTS['codebook']))
        if 'n_beams' in book:
            c.integer(where, 'n_beams', book['n_beams'], 2)
        if 'sector_deg' in book:
            c.number(where, 'sector_deg', book['sector_deg'], 0.0, strict=True, maximum=360.0)
        if book.get('beamwidth_deg') is not None:
            c.number(where, 'beamwidth_deg', book['beamwidth_deg'], 0.0, strict=True)


def _check_schedule(c, schedule):  # type: (_Collector, Any) -> None
    if not c.mapping('schedule', schedule):
        return
    c.unknown('schedule', schedule, list(DEFAULTS['schedule']))
    if schedule.get('upload_period') is not None:
        c.integer('schedule', 'upload_period', schedule['upload_period'], 1)
    if 'download_on_entry' in schedule and not isinstance(schedule['download_on_entry'], bool):
        c.add('schedule.download_on_entry', 'must be true or false')
    if 'fusion' in schedule and schedule['fusion'] not in FUSION_RULES:
        c.add('schedule.fusion', 'must be one of {}, got {!r}'.format(', '.join(FUSION_RULES),
                                                                     schedule['fusion']))


def _check_presets(c, presets, pa_ids, ue_ids, bounds):
    # type: (_Collector, Any, Sequence[Text], Sequence[int], Optional[Sequence[float]]) -> None
    if not c.mapping('presets', presets):
        return
    known = ('hybrid_fig5ab', 'crowd_fig5cd', 'sweep_fig6', 'beamtrack', 'custom')
    c.unknown('presets', presets, known)
    for name in known:
        opts = presets.get(name)
        if opts is None:
            continue
        where = 'presets.{}'.format(name)
        if not c.mapping(where, opts):
            continue
        for key in ('ue', 'focus_ue'):
            if key in opts and opts[key] not in ue_ids:
                c.add('{}.{}'.format(where, key), 'unknown ue id {!r}'.format(opts[key]))
        if 'pa' in opts and opts['pa'] not in pa_ids:
            c.add('{}.pa'.format(where), 'unknown PA id {!r}'.format(opts['pa']))
        if 'horizon' in opts:
            c.integer(where, 'horizon', opts['horizon'], 1)
        if 'blockage' in opts:
            block = opts['blockage']
            if c.mapping('{}.blockage'.format(where), block):
                c.integer('{}.blockage'.format(where), 'start', block.get('start'), 1)
                c.integer('{}.blockage'.format(where), 'duration', block.get('duration'), 1)
                c.number('{}.blockage'.format(where), 'loss_db', block.get('loss_db'), 0.0)
        if 'orientations_deg' in opts:
            pairs = opts['orientations_deg']
            if not isinstance(pairs, list) or not pairs or not all(_is_point(p) for p in pairs):
                c.add('{}.orientations_deg'.format(where), 'must be a list of [tx, rx] pairs')
        if 'track' in opts:
            try:
                points = make_track(opts['track'])
            except (IsacSlamError, ValueError, TypeError, KeyError, IndexError) as e:
                c.add('{}.track'.format(where), 'bad track: {}'.format(e))
            else:
                _check_track_points(c, '{}.track'.format(where), points, bounds, 1)


def validate(scenario):  # type: (Union[Scenario, Dict[Text, Any]]) -> List[Text]
    """Every violated constraint of ``scenario``; empty when it is legal."""
    doc = scenario.document if isinstance(scenario, Scenario) else scenario
    c = _Collector()
    if not isinstance(doc, dict):
        c.add('scenario', 'must be an object')
        return c.violations
    c.unknown('scenario', doc, TOP_LEVEL_KEYS)
    horizon = doc.get('horizon')
    if not c.integer('scenario', 'horizon', horizon, 1):
        horizon = None
    bounds = _check_environment(c, doc.get('environment'))
    env = doc.get('environment') if isinstance(doc.get('environment'), dict) else {}
    pa_ids = [a.get('id') for a in (env.get('pas') or []) if isinstance(a, dict)]
    ue_ids = _check_ues(c, doc.get('ues'), bounds, horizon)
    if 'noise' in doc:
        _check_noise(c, doc['noise'])
    if 'slam' in doc:
        _check_slam(c, doc['slam'])
    if 'codebooks' in doc:
        _check_codebooks(c, doc['codebooks'])
    if 'schedule' in doc:
        _check_schedule(c, doc['schedule'])
    if 'seeds' in doc and c.mapping('seeds', doc['seeds']):
        c.unknown('seeds', doc['seeds'], list(DEFAULTS['seeds']))
        if 'master' in doc['seeds']:
            c.integer('seeds', 'master', doc['seeds']['master'], 0)
        if 'count' in doc['seeds']:
            c.integer('seeds', 'count', doc['seeds']['count'], 1)
    if 'ospa' in doc and c.mapping('ospa', doc['ospa']):
        c.unknown('ospa', doc['ospa'], list(DEFAULTS['ospa']))
        if 'cutoff' in doc['ospa']:
            c.number('ospa', 'cutoff', doc['ospa']['cutoff'], 0.0, strict=True)
        if 'order' in doc['ospa']:
            c.number('ospa', 'order', doc['ospa']['order'], 1.0)
    if 'imu' in doc and c.mapping('imu', doc['imu']):
        c.unknown('imu', doc['imu'], list(DEFAULTS['imu']))
        if 'enabled' in doc['imu'] and not isinstance(doc['imu']['enabled'], bool):
            c.add('imu.enabled', 'must be true or false')
        for key in ('sigma', 'drift_sigma'):
            if key in doc['imu']:
                c.number('imu', key, doc['imu'][key], 0.0)
    if 'presets' in doc:
        _check_presets(c, doc['presets'], pa_ids, ue_ids, bounds)
    return c.violations


def check_scenario(scenario):  # type: (Union[Scenario, Dict[Text, Any]]) -> None
    violations = validate(scenario)
    if violations:
        raise ValidationError(violations)
