# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math
import numbers

from six import string_types
from typing import Any, Dict, List, Mapping, Optional, Sequence, Text, Tuple

from isacslam.beam_mgmt import ImuConfig
from isacslam.crowdsourcing import FrameSchedule
from isacslam.errors import ConfigurationError, InvalidGeometryError
from isacslam.geometry import (MIN_WALL_LENGTH, Environment, Point2, Rect, WallSegment,
                               wall_length)
from isacslam.measurement import BeamCodebook, NoiseProfile, UEState
from isacslam.metrics import OspaParams, check_ospa_params
from isacslam.slam_engine import ProcessNoise, SlamConfig

# SlamConfig fields stored in degrees in scenario files.
SLAM_DEGREE_FIELDS = {
    'fov_deg': 'fov',
    'min_sigma_angle_deg': 'min_sigma_angle',
    'initial_orientation_std_deg': 'initial_orientation_std',
    'min_triangulation_angle_deg': 'min_triangulation_angle',
}

PROCESS_NOISE_FIELDS = ('accel_std', 'clock_std', 'orientation_std_deg', 'control_std')

TRACK_KINDS = ('loop', 'grid', 'line')


def make_point(x, y):  # type: (float, float) -> Point2
    return Point2(float(x), float(y))


def make_wall(id,  # type: Text
              a,  # type: Sequence[float]
              b,  # type: Sequence[float]
              reflection_loss_db=10.0,  # type: float
              ):  # type: (...) -> WallSegment
    """Construct a WallSegment.

    Arguments:
        id (string): unique wall identifier
        a, b (pair of numbers): segment endpoints in meters
        reflection_loss_db (float): scalar loss of a specular bounce

    Returns:
        WallSegment
    """
    w = WallSegment(make_point(*a), make_point(*b), id, float(reflection_loss_db))
    if wall_length(w) < MIN_WALL_LENGTH:
        raise InvalidGeometryError('Wall {!r} has zero length'.format(id))
    if w.reflection_loss_db < 0:
        raise InvalidGeometryError('Wall {!r} has negative reflection loss {}'.format(
            id, reflection_loss_db))
    return w


def make_rect(xmin, ymin, xmax, ymax):  # type: (float, float, float, float) -> Rect
    if not (xmin < xmax and ymin < ymax):
        raise InvalidGeometryError('Empty bounds ({}, {}, {}, {})'.format(xmin, ymin, xmax, ymax))
    return Rect(float(xmin), float(ymin), float(xmax), float(ymax))


def make_environment(walls,  # type: Sequence[WallSegment]
                     pas,  # type: Sequence[Tuple[Text, Sequence[float]]]
                     scatterers=(),  # type: Sequence[Tuple[Text, Sequence[float]]]
                     bounds=None,  # type: Optional[Sequence[float]]
                     ):  # type: (...) -> Environment
    """Construct an Environment, checking ids and anchor placement.

    Without ``bounds`` the bounding box of the walls is used.
    """
    ids = [w.id for w in walls] + [pid for pid, _ in pas] + [sid for sid, _ in scatterers]
    dupes = sorted(set(i for i in ids if ids.count(i) > 1))
    if dupes:
        raise InvalidGeometryError('Duplicate ids: {}'.format(', '.join(dupes)))
    if bounds is None:
        if not walls:
            raise InvalidGeometryError('Bounds are required when there are no walls')
        xs = [p[0] for w in walls for p in (w.a, w.b)]
        ys = [p[1] for w in walls for p in (w.a, w.b)]
        bounds = (min(xs), min(ys), max(xs), max(ys))
    env = Environment(walls, [(pid, make_point(*p)) for pid, p in pas],
                      [(sid, make_point(*p)) for sid, p in scatterers], make_rect(*bounds))
    for kind, anchors in (('PA', env.pas), ('scatterer', env.scatterers)):
        for aid, p in anchors:
            if not env.contains(p):
                raise InvalidGeometryError('{} {!r} at ({}, {}) lies outside the bounds'.format(
                    kind, aid, p.x, p.y))
    return env


def make_noise_profile(sigma_aoa_deg=2.0,  # type: float
                       sigma_aod_deg=2.0,  # type: float
                       sigma_toa=1e-9,  # type: float
                       sigma_rsrp=1.0,  # type: float
                       detection_probability=0.95,  # type: float
                       clutter_rate=1.0,  # type: float
                       noise_floor_dbm=-90.0,  # type: float
                       tx_power_dbm=30.0,  # type: float
                       carrier_hz=28e9,  # type: float
                       ):  # type: (...) -> NoiseProfile
    """NoiseProfile from file units: angular deviations in degrees."""
    for name, value in (('sigma_aoa_deg', sigma_aoa_deg), ('sigma_aod_deg', sigma_aod_deg),
                        ('sigma_toa', sigma_toa), ('sigma_rsrp', sigma_rsrp),
                        ('clutter_rate', clutter_rate)):
        if value < 0:
            raise ConfigurationError('{} must be >= 0, got {}'.format(name, value))
    if not 0.0 <= detection_probability <= 1.0:
        raise ConfigurationError('detection_probability must lie in [0, 1], got {}'.format(
            detection_probability))
    return NoiseProfile(math.radians(sigma_aoa_deg), math.radians(sigma_aod_deg), sigma_toa, sigma_rsrp,
                        detection_probability, clutter_rate, noise_floor_dbm, tx_power_dbm, carrier_hz)


def make_codebook(n_beams=8, sector_deg=100.0, beamwidth_deg=None):
    # type: (int, float, Optional[float]) -> BeamCodebook
    if not 0.0 < sector_deg <= 360.0:
        raise ConfigurationError('sector_deg must lie in (0, 360], got {}'.format(sector_deg))
    return BeamCodebook(int(n_beams), math.radians(sector_deg),
                        None if beamwidth_deg is None else math.radians(beamwidth_deg))


def make_process_noise(accel_std=0.1, clock_std=0.0, orientation_std_deg=0.0, control_std=0.05):
    # type: (float, float, float, float) -> ProcessNoise
    return ProcessNoise(float(accel_std), float(clock_std), math.radians(orientation_std_deg),
                        float(control_std))


def make_slam_config(**fields):  # type: (**Any) -> SlamConfig
    """SlamConfig from file units.

    Degree fields (``fov_deg`` ...) are converted, process noise fields are
    gathered into a ProcessNoise; everything else is passed through.
    """
    kwargs = {}  # type: Dict[Text, Any]
    noise = {}  # type: Dict[Text, Any]
    for key, value in fields.items():
        if key in SLAM_DEGREE_FIELDS:
            kwargs[SLAM_DEGREE_FIELDS[key]] = math.radians(value)
        elif key in PROCESS_NOISE_FIELDS:
            noise[key] = value
        elif key == 'measurements':
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return SlamConfig(process_noise=make_process_noise(**noise), **kwargs)
    except TypeError as e:
        raise ConfigurationError('Bad SLAM configuration: {}'.format(e))


def make_ue_state(position, velocity=(0.0, 0.0), clock_bias=0.0, orientation_deg=0.0):
    # type: (Sequence[float], Sequence[float], float, float) -> UEState
    return UEState(make_point(*position), (float(velocity[0]), float(velocity[1])), float(clock_bias),
                   math.radians(orientation_deg))


def _loop(center, radii, period, phase_deg=0.0, length=None):
    # type: (Sequence[float], Sequence[float], float, float, Optional[int]) -> List[Point2]
    if not period > 0:
        raise ConfigurationError('loop period must be positive, got {}'.format(period))
    phase = math.radians(phase_deg)
    return [make_point(center[0] + radii[0] * math.cos(phase + 2.0 * math.pi * k / period),
                       center[1] + radii[1] * math.sin(phase + 2.0 * math.pi * k / period))
            for k in range(int(length))]


def _grid(origin, step, shape, serpentine=True, length=None):
    # type: (Sequence[float], float, Sequence[int], bool, Optional[int]) -> List[Point2]
    nx, ny = int(shape[0]), int(shape[1])
    out = []
    for j in range(ny):
        cols = list(range(nx))
        if serpentine and j % 2 == 1:
            cols.reverse()
        out.extend(make_point(origin[0] + i * step, origin[1] + j * step) for i in cols)
    return out


def _line(start, end, length=None):
    # type: (Sequence[float], Sequence[float], Optional[int]) -> List[Point2]
    n = int(length)
    if n == 1:
        return [make_point(*start)]
    return [make_point(start[0] + (end[0] - start[0]) * k / (n - 1),
                       start[1] + (end[1] - start[1]) * k / (n - 1)) for k in range(n)]


def make_track(track_def, length=None):  # type: (Any, Optional[int]) -> List[Point2]
    """Per-epoch UE positions.

    ``track_def`` is either an explicit list of points or a single-key mapping
    ``{'loop': {...}}``, ``{'grid': {...}}`` or ``{'line': {...}}``. Loop and
    line tracks without their own ``length`` get ``length`` points.
    """
    if isinstance(track_def, Mapping):
        if len(track_def) != 1 or list(track_def)[0] not in TRACK_KINDS:
            raise ConfigurationError('Track must have exactly one of {}, got {}'.format(
                TRACK_KINDS, sorted(track_def)))
        kind = list(track_def)[0]
        params = dict(track_def[kind])
        params.setdefault('length', length)
        if kind != 'grid' and params['length'] is None:
            raise ConfigurationError('{} track needs a length'.format(kind))
        builder = {'loop': _loop, 'grid': _grid, 'line': _line}[kind]
        try:
            return builder(**params)
        except TypeError as e:
            raise ConfigurationError('Bad {} track: {}'.format(kind, e))
    if isinstance(track_def, string_types) or not isinstance(track_def, Sequence):
        raise ConfigurationError('Track must be a list of points or a parametric mapping')
    out = []
    for p in track_def:
        if len(p) != 2 or not all(isinstance(v, numbers.Real) for v in p):
            raise ConfigurationError('Track point {!r} is not a pair of numbers'.format(p))
        out.append(make_point(*p))
    return out


def make_schedule(entering_time, upload_period=5, download_on_entry=True):
    # type: (Mapping[int, int], Optional[int], bool) -> FrameSchedule
    return FrameSchedule(dict(entering_time), upload_period, download_on_entry)


def make_ospa_params(cutoff=5.0, order=1.0):  # type: (float, float) -> OspaParams
    params = OspaParams(float(cutoff), float(order))
    try:
        check_ospa_params(params)
    except ValueError as e:
        raise ConfigurationError(str(e))
    return params


def make_imu_config(sigma=0.05, drift_sigma=0.005):  # type: (float, float) -> ImuConfig
    """ImuConfig of per-epoch displacement noise and bias random-walk steps, in meters."""
    if sigma < 0 or drift_sigma < 0:
        raise ConfigurationError('IMU deviations must be non-negative, got sigma={}, drift_sigma={}'.format(
            sigma, drift_sigma))
    return ImuConfig(float(sigma), float(drift_sigma))
