# SPDX-License-Identifier: Apache-2.0

"""Multipath measurement synthesis.

Ground-truth paths (LOS, single-bounce specular NLOS, single-bounce scatter)
are enumerated from an Environment, then observed with UE clock bias, UE
orientation, per-path detection and Poisson clutter. Beam-pair RSRP tables
are produced from the same paths through a codebook gain model.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math
from collections import namedtuple

import numpy as np  # type: ignore
from typing import List, Optional, Sequence, Text, Any

from isacslam.errors import InvalidGeometryError
from isacslam.geometry import (C, Point2, Environment, bearing, distance, wrap_angle,
                               is_occluded, trace_specular_path)

UEState = namedtuple('UEState', ['position', 'velocity', 'clock_bias', 'orientation'])
UEState.__new__.__defaults__ = ((0.0, 0.0), 0.0, 0.0)

# truth_tag is ('LOS', pa_id), ('NLOS', pa_id, wall_id), ('scatter', scatterer_id, pa_id)
# or ('clutter',). Estimators must never read it.
PathTruth = namedtuple('PathTruth', ['aoa', 'aod', 'toa', 'rsrp', 'truth_tag', 'interaction'])

Measurement = namedtuple('Measurement', ['aoa', 'aod', 'toa', 'rsrp', 'truth_tag', 'epoch'])

RSRPMatrix = namedtuple('RSRPMatrix', ['values', 'tx_orientation', 'rx_orientation'])

SIDELOBE_LEVEL = 0.01  # -20 dB
SCATTER_LOSS_DB = 20.0


class NoiseProfile(object):
    """Measurement noise and radio link budget.

    Angles in radians, times in seconds, powers in dB/dBm.
    """

    def __init__(self,
                 sigma_aoa=math.radians(2.0),  # type: float
                 sigma_aod=math.radians(2.0),  # type: float
                 sigma_toa=1e-9,  # type: float
                 sigma_rsrp=1.0,  # type: float
                 detection_probability=0.95,  # type: float
                 clutter_rate=1.0,  # type: float
                 noise_floor_dbm=-90.0,  # type: float
                 tx_power_dbm=30.0,  # type: float
                 carrier_hz=28e9,  # type: float
                 ):  # type: (...) -> None
        self.sigma_aoa = float(sigma_aoa)
        self.sigma_aod = float(sigma_aod)
        self.sigma_toa = float(sigma_toa)
        self.sigma_rsrp = float(sigma_rsrp)
        self.detection_probability = float(detection_probability)
        self.clutter_rate = float(clutter_rate)
        self.noise_floor_dbm = float(noise_floor_dbm)
        self.tx_power_dbm = float(tx_power_dbm)
        self.carrier_hz = float(carrier_hz)

    def replace(self, **kwargs):  # type: (**Any) -> NoiseProfile
        fields = dict(self.__dict__)
        fields.update(kwargs)
        return NoiseProfile(**fields)

    def __eq__(self, other):  # type: (Any) -> bool
        return isinstance(other, NoiseProfile) and self.__dict__ == other.__dict__

    def __ne__(self, other):  # type: (Any) -> bool
        return not self == other

    def __repr__(self):  # type: () -> Text
        return 'NoiseProfile({})'.format(', '.join(
            '{}={!r}'.format(k, v) for k, v in sorted(self.__dict__.items())))


def noiseless():  # type: () -> NoiseProfile
    return NoiseProfile(sigma_aoa=0.0, sigma_aod=0.0, sigma_toa=0.0, sigma_rsrp=0.0,
                        detection_probability=1.0, clutter_rate=0.0)


def free_space_loss_db(d, carrier_hz):  # type: (float, float) -> float
    d = max(d, 1e-3)
    return 20.0 * math.log10(4.0 * math.pi * d * carrier_hz / C)


class BeamCodebook(object):
    """Evenly spaced analog beams over a sector, in the array frame."""

    def __init__(self, n_beams=8, sector=math.radians(100.0), beamwidth=None):  # type: (int, float, Optional[float]) -> None
        if n_beams < 2:
            raise ValueError('A codebook needs at least 2 beams, got {}'.format(n_beams))
        self.n_beams = int(n_beams)
        self.sector = float(sector)
        self.spacing = self.sector / self.n_beams
        self.beamwidth = float(beamwidth) if beamwidth is not None else self.spacing
        self.centers = [-self.sector / 2.0 + self.spacing * (k + 0.5) for k in range(self.n_beams)]

    def gain(self, k, angle):  # type: (int, Any) -> Any
        """Linear power gain of beam ``k`` toward array-frame ``angle``.

        Raised-cosine mainlobe with half-power points at +-beamwidth/2 and a
        flat sidelobe floor at -20 dB.
        """
        offset = np.abs(wrap_angle(np.asarray(angle, dtype=np.float64) - self.centers[k]))
        main = np.where(offset < self.beamwidth,
                        np.cos(np.pi * offset / (2.0 * self.beamwidth)) ** 2, 0.0)
        return np.maximum(main, SIDELOBE_LEVEL)

    def gains(self, angle):  # type: (float) -> np.ndarray
        return np.array([float(self.gain(k, angle)) for k in range(self.n_beams)])

    def nearest(self, angle):  # type: (float) -> int
        offsets = [abs(wrap_angle(angle - c)) for c in self.centers]
        return int(np.argmin(offsets))

    def __eq__(self, other):  # type: (Any) -> bool
        return isinstance(other, BeamCodebook) and (self.n_beams, self.sector, self.beamwidth) == \
            (other.n_beams, other.sector, other.beamwidth)

    def __ne__(self, other):  # type: (Any) -> bool
        return not self == other

    def __repr__(self):  # type: () -> Text
        return 'BeamCodebook(n_beams={}, sector={:.4f}, beamwidth={:.4f})'.format(
            self.n_beams, self.sector, self.beamwidth)


def enumerate_paths(env, ue, noise=None):  # type: (Environment, UEState, Optional[NoiseProfile]) -> List[PathTruth]
    """All propagation paths reaching ``ue``.

    Returns LOS paths first (per PA), then specular paths (per PA, wall), then
    scatter paths (per scatterer, PA); each with global AOA at the UE, global
    AOD at the anchor, propagation delay and received power. Raises
    InvalidGeometryError when ``ue`` lies outside the room bounds.
    """
    if not env.contains(ue.position):
        raise InvalidGeometryError('UE at ({:.3f}, {:.3f}) lies outside the room bounds'.format(
            ue.position[0], ue.position[1]))
    if noise is None:
        noise = NoiseProfile()
    p = ue.position
    out = []  # type: List[PathTruth]

    def power(length, extra_loss):  # type: (float, float) -> float
        return noise.tx_power_dbm - free_space_loss_db(length, noise.carrier_hz) - extra_loss

    for pa_id, pa in env.pas:
        if is_occluded(pa, p, env.walls):
            continue
        d = distance(pa, p)
        out.append(PathTruth(bearing(p, pa), bearing(pa, p), d / C, power(d, 0.0),
                             ('LOS', pa_id), pa))
    for pa_id, pa in env.pas:
        for w in env.walls:
            specular = trace_specular_path(p, pa, w, env.walls)
            if specular is None:
                continue
            bounce = specular.reflection_point
            out.append(PathTruth(bearing(p, bounce), bearing(pa, bounce), specular.path_length / C,
                                 power(specular.path_length, w.reflection_loss_db),
                                 ('NLOS', pa_id, w.id), bounce))
    for sid, s in env.scatterers:
        for pa_id, pa in env.pas:
            if is_occluded(pa, s, env.walls) or is_occluded(s, p, env.walls):
                continue
            d1, d2 = distance(pa, s), distance(s, p)
            out.append(PathTruth(bearing(p, s), bearing(pa, s), (d1 + d2) / C,
                                 power(d1 + d2, SCATTER_LOSS_DB), ('scatter', sid, pa_id), s))
    return out


def observation_window(env):  # type: (Environment) -> float
    return 2.0 * env.diagonal() / C


def observe(paths,  # type: Sequence[PathTruth]
            ue,  # type: UEState
            noise,  # type: NoiseProfile
            rng,  # type: np.random.Generator
            epoch=0,  # type: int
            toa_window=None,  # type: Optional[float]
            env=None,  # type: Optional[Environment]
            ):  # type: (...) -> List[Measurement]
    """Noisy, biased, cluttered observation of ``paths`` at ``ue``.

    Each path is kept with probability Pd. AOA is reported in the UE body
    frame, TOA carries the UE clock bias. Clutter delays are uniform over
    ``toa_window``, by default the observation window of ``env``; one of the
    two is needed whenever clutter is on.
    """
    if min(noise.sigma_aoa, noise.sigma_aod, noise.sigma_toa, noise.sigma_rsrp) < 0:
        raise ValueError('Noise standard deviations must be non-negative')
    if not 0.0 <= noise.detection_probability <= 1.0:
        raise ValueError('Detection probability must lie in [0, 1], got {}'.format(
            noise.detection_probability))
    if toa_window is None and env is not None:
        toa_window = observation_window(env)
    if toa_window is None and noise.clutter_rate > 0:
        raise ValueError('Clutter needs a delay window: pass toa_window or env')
    out = []  # type: List[Measurement]
    for path in paths:
        if rng.random() >= noise.detection_probability:
            continue
        e_aoa, e_aod, e_toa, e_rsrp = rng.normal(
            0.0, [noise.sigma_aoa, noise.sigma_aod, noise.sigma_toa, noise.sigma_rsrp])
        aoa = wrap_angle(wrap_angle(path.aoa - ue.orientation) + e_aoa)
        out.append(Measurement(aoa, wrap_angle(path.aod + e_aod),
                               path.toa + ue.clock_bias + e_toa,
                               path.rsrp + e_rsrp, path.truth_tag, epoch))
    n_clutter = rng.poisson(noise.clutter_rate) if noise.clutter_rate > 0 else 0
    for _ in range(n_clutter):
        aoa, aod = rng.uniform(-math.pi, math.pi, size=2)
        toa = rng.uniform(0.0, toa_window)
        rsrp = noise.noise_floor_dbm + rng.uniform(0.0, 10.0)
        out.append(Measurement(wrap_angle(aoa), wrap_angle(aod), toa, rsrp, ('clutter',), epoch))
    return out


def apply_blockage(paths, loss_db, kinds=('LOS',)):  # type: (Sequence[PathTruth], float, Sequence[Text]) -> List[PathTruth]
    return [p._replace(rsrp=p.rsrp - loss_db) if p.truth_tag[0] in kinds else p for p in paths]


def sweep_rsrp(env,  # type: Environment
               ue,  # type: UEState
               tx_cb,  # type: BeamCodebook
               rx_cb,  # type: BeamCodebook
               noise,  # type: NoiseProfile
               rng,  # type: np.random.Generator
               tx_orientation=0.0,  # type: float
               rx_orientation=None,  # type: Optional[float]
               paths=None,  # type: Optional[Sequence[PathTruth]]
               ):  # type: (...) -> RSRPMatrix
    """Bidirectional exhaustive beam sweep.

    Entry (i, j) is the power sum over paths of path power times tx gain of
    beam i toward the path AOD times rx gain of beam j toward the path AOA,
    plus the noise floor, in dB, with Gaussian RSRP noise.
    """
    if rx_orientation is None:
        rx_orientation = ue.orientation
    if paths is None:
        paths = enumerate_paths(env, ue, noise)
    lin = np.full((tx_cb.n_beams, rx_cb.n_beams), 10.0 ** (noise.noise_floor_dbm / 10.0))
    for path in paths:
        g_tx = tx_cb.gains(wrap_angle(path.aod - tx_orientation))
        g_rx = rx_cb.gains(wrap_angle(path.aoa - rx_orientation))
        lin += 10.0 ** (path.rsrp / 10.0) * np.outer(g_tx, g_rx)
    values = 10.0 * np.log10(lin)
    values = values + rng.normal(0.0, noise.sigma_rsrp, size=values.shape)
    return RSRPMatrix(values, float(tx_orientation), float(rx_orientation))


def ue_states_from_track(track, clock_bias=0.0, orientation=0.0, dt=1.0):
    # type: (Sequence[Any], float, float, float) -> List[UEState]
    """Truth states along a track; velocity is the forward difference."""
    pts = [Point2(float(p[0]), float(p[1])) for p in track]
    states = []
    for k, p in enumerate(pts):
        if len(pts) == 1:
            v = (0.0, 0.0)
        elif k + 1 < len(pts):
            v = ((pts[k + 1][0] - p[0]) / dt, (pts[k + 1][1] - p[1]) / dt)
        else:
            v = ((p[0] - pts[k - 1][0]) / dt, (p[1] - pts[k - 1][1]) / dt)
        states.append(UEState(p, v, float(clock_bias), wrap_angle(orientation)))
    return states
