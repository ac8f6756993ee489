# SPDX-License-Identifier: Apache-2.0

"""Drives one UE through a track: measure, run SLAM, score against truth."""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import logging
from collections import namedtuple

from typing import Any, Dict, List, Optional, Sequence, Tuple

from isacslam.active_sensing import rsps_to_va_priors, sense_room
from isacslam.beam_mgmt import ImuConfig, imu_odometry
from isacslam.geometry import Environment, Point2, distance
from isacslam.measurement import (BeamCodebook, Measurement, NoiseProfile, UEState, enumerate_paths,
                                  observe, ue_states_from_track)
from isacslam.metrics import OspaParams, ospa, visible_features
from isacslam.rng import RngStreams
from isacslam.slam_engine import (Feature, SlamConfig, SlamEngine, init_hybrid, init_known_pa,
                                  pa_prior_from_measurements)

logger = logging.getLogger(__name__)

TrackRow = namedtuple('TrackRow', ['ue_id', 'epoch', 'x', 'y', 'true_x', 'true_y', 'error', 'ospa',
                                   'covariance_trace', 'n_features'])

LOS_POWER_MARGIN_DB = 15.0


def strongest_paths(measurements, margin_db=LOS_POWER_MARGIN_DB):
    # type: (Sequence[Measurement], float) -> List[Measurement]
    if not measurements:
        return []
    top = max(m.rsrp for m in measurements)
    return [m for m in measurements if m.rsrp >= top - margin_db]


def initial_map(env,  # type: Environment
                ue,  # type: UEState
                measurements,  # type: Sequence[Measurement]
                cfg,  # type: SlamConfig
                noise,  # type: NoiseProfile
                streams,  # type: RngStreams
                ue_id=0,  # type: int
                epoch=1,  # type: int
                codebook=None,  # type: Optional[BeamCodebook]
                ):  # type: (...) -> List[Feature]
    """Map a UE starts from.

    passive_known_pa: every PA of the environment, known and fixed. hybrid:
    the PA belief back-projected from the earliest of the strong first-epoch
    paths, mirrored across the walls found by active sensing.
    """
    if cfg.mode == 'passive_known_pa':
        features = []  # type: List[Feature]
        for pa_id, pa in env.pas:
            features.extend(init_known_pa(pa_id, pa, cfg))
        return features
    if codebook is None:
        codebook = BeamCodebook()
    rsps = sense_room(env, ue, codebook, noise, streams.get(ue_id, epoch, 'echo'))
    pa_prior = pa_prior_from_measurements(ue, strongest_paths(measurements), noise, cfg)
    priors = rsps_to_va_priors(rsps, [pa_prior]) if pa_prior is not None else []
    logger.info('ue %d: %d RSPs, %d VA priors', ue_id, len(rsps), len(priors))
    return init_hybrid(priors, pa_prior, 'hybrid', epoch)


class UeRunner(object):
    """One UE of an experiment: its truth track, SLAM engine and score rows."""

    def __init__(self,
                 env,  # type: Environment
                 track,  # type: Sequence[Any]
                 cfg,  # type: SlamConfig
                 noise,  # type: NoiseProfile
                 streams,  # type: RngStreams
                 ue_id=0,  # type: int
                 entering=1,  # type: int
                 codebook=None,  # type: Optional[BeamCodebook]
                 ospa_params=None,  # type: Optional[OspaParams]
                 include_scatterers=True,  # type: bool
                 clock_bias=0.0,  # type: float
                 orientation=0.0,  # type: float
                 controls=None,  # type: Optional[Sequence[Any]]
                 ):  # type: (...) -> None
        self.env = env
        self.truth = ue_states_from_track(track, clock_bias, orientation)
        self.cfg = cfg
        self.noise = noise
        self.streams = streams
        self.ue_id = int(ue_id)
        self.entering = int(entering)
        self.codebook = codebook
        self.ospa_params = ospa_params or OspaParams()
        self.include_scatterers = include_scatterers
        self.controls = controls
        self.engine = None  # type: Optional[SlamEngine]
        self.rows = []  # type: List[TrackRow]
        self._seen = {}  # type: Dict[Tuple[float, float], Point2]

    def active(self, epoch):  # type: (int) -> bool
        return self.entering <= epoch < self.entering + len(self.truth)

    def measure(self, epoch):  # type: (int) -> List[Measurement]
        ue = self.truth[epoch - self.entering]
        paths = enumerate_paths(self.env, ue, self.noise)
        return observe(paths, ue, self.noise, self.streams.get(self.ue_id, epoch, 'measure'), epoch,
                       env=self.env)

    def advance(self, epoch, legacy=()):  # type: (int, Sequence[Feature]) -> TrackRow
        """Runs epoch ``epoch``; ``legacy`` features are injected on entry only."""
        k = epoch - self.entering
        measurements = self.measure(epoch)
        if self.engine is None:
            features = initial_map(self.env, self.truth[0], measurements, self.cfg, self.noise,
                                   self.streams, self.ue_id, epoch, self.codebook)
            self.engine = SlamEngine(self.cfg, self.noise, self.truth[0], self.streams, self.ue_id, features)
            if legacy:
                added = self.engine.inject(legacy, epoch)
                logger.info('ue %d: %d legacy features downloaded on entry', self.ue_id, added)
        control = None
        if self.controls is not None and k > 0:
            control = self.controls[k - 1]
        record = self.engine.step(measurements, epoch, control=control)
        truth = self.truth[k].position
        for p in visible_features(self.env, [truth], self.include_scatterers):
            self._seen.setdefault((round(p[0], 9), round(p[1], 9)), p)
        kinds = ('PA', 'VA', 'scatterer') if self.include_scatterers else ('PA', 'VA')
        estimated = [f.position for f in self.engine.map_estimate(kinds=kinds)]
        row = TrackRow(self.ue_id, epoch, record.position.x, record.position.y, truth.x, truth.y,
                       distance(record.position, truth), ospa(estimated, list(self._seen.values()),
                                                              self.ospa_params),
                       record.covariance_trace, record.n_features)
        self.rows.append(row)
        return row


def imu_controls(track, imu, streams, ue_id=0):
    # type: (Sequence[Any], ImuConfig, RngStreams, int) -> List[Any]
    """Odometry displacements between consecutive track points, from the UE's own IMU stream."""
    return imu_odometry(track, imu.sigma, imu.drift_sigma, streams.get(ue_id, 0, 'imu'))


def run_track(env, track, cfg, noise, streams, ue_id=0, imu=None, **kwargs):
    # type: (Environment, Sequence[Any], SlamConfig, NoiseProfile, RngStreams, int, Optional[ImuConfig], **Any) -> UeRunner
    """Runs a single UE over its whole track and returns the finished runner.

    With ``imu`` the prediction of every epoch after the first is driven by
    simulated odometry instead of the constant-velocity model.
    """
    if imu is not None:
        kwargs['controls'] = imu_controls(track, imu, streams, ue_id)
    runner = UeRunner(env, track, cfg, noise, streams, ue_id, **kwargs)
    for k in range(len(runner.truth)):
        runner.advance(runner.entering + k)
    return runner
