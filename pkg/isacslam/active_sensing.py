# SPDX-License-Identifier: Apache-2.0

"""Monostatic echo sensing: the UE sweeps its codebook while listening.

Echo round-trip times become reflective surface points (RSPs), RSPs are
grouped into walls, and walls mirror the current PA belief into VA priors
with first-order uncertainty.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import itertools
import logging
import math
from collections import namedtuple

import numpy as np  # type: ignore
from typing import List, Sequence, Tuple, Any

from isacslam.errors import DegenerateFitError, InsufficientDataError
from isacslam.geometry import (C, Point2, Environment, ray_hit_distance, rsp_from_echo,
                               wall_from_rsps, mirror_across_line, mirror_jacobians,
                               line_params)
from isacslam.measurement import UEState, NoiseProfile, BeamCodebook, free_space_loss_db

logger = logging.getLogger(__name__)

Echo = namedtuple('Echo', ['beam_index', 'round_trip_time', 'snr'])
RspEstimate = namedtuple('RspEstimate', ['point', 'covariance', 'beam_index', 'snr'])
VaPrior = namedtuple('VaPrior', ['mean', 'covariance', 'wall_id', 'pa_id', 'source'])
PaHypothesis = namedtuple('PaHypothesis', ['id', 'mean', 'covariance'])

MIN_ECHO_RANGE = 0.5
CLUSTER_THRESHOLD = 0.3
ECHO_SNR_KNEE_DB = 10.0
COVARIANCE_FLOOR = 1e-12


def simulate_echo(env,  # type: Environment
                  ue,  # type: UEState
                  cb,  # type: BeamCodebook
                  noise,  # type: NoiseProfile
                  rng,  # type: np.random.Generator
                  min_range=MIN_ECHO_RANGE,  # type: float
                  ):  # type: (...) -> List[Echo]
    """One echo per beam whose boresight ray hits a wall.

    The beam boresight in the global frame is ``ue.orientation + center``.
    Echoes closer than ``min_range`` are lost to self-interference. The
    detection probability equals the configured Pd while the two-way SNR is
    above 10 dB and falls off linearly in power below it.
    """
    out = []  # type: List[Echo]
    for k, center in enumerate(cb.centers):
        hit = ray_hit_distance(ue.position, ue.orientation + center, env.walls)
        if hit is None:
            continue
        d, wall_id = hit
        if d < min_range:
            continue
        loss = env.wall(wall_id).reflection_loss_db
        snr = noise.tx_power_dbm - free_space_loss_db(2.0 * d, noise.carrier_hz) - loss \
            - noise.noise_floor_dbm
        pd = noise.detection_probability * min(1.0, 10.0 ** ((snr - ECHO_SNR_KNEE_DB) / 10.0))
        if rng.random() >= pd:
            continue
        tau = 2.0 * d / C + rng.normal(0.0, noise.sigma_toa)
        out.append(Echo(k, tau, snr))
    return out


def estimate_rsps(echoes, ue, cb, noise):  # type: (Sequence[Echo], UEState, BeamCodebook, NoiseProfile) -> List[RspEstimate]
    """Maps echoes to RSPs with a polar-to-Cartesian covariance.

    Range error std is c*sigma_toa/2; angular error std is the beamwidth
    over sqrt(12) (uniform inside the beam).
    """
    out = []  # type: List[RspEstimate]
    dropped = 0
    sigma_d = C * noise.sigma_toa / 2.0
    sigma_t = cb.beamwidth / math.sqrt(12.0)
    for echo in echoes:
        if not echo.round_trip_time > 0:
            dropped += 1
            continue
        theta = ue.orientation + cb.centers[echo.beam_index]
        point = rsp_from_echo(ue.position, theta, echo.round_trip_time)
        d = C * echo.round_trip_time / 2.0
        jac = np.array([[math.cos(theta), -d * math.sin(theta)],
                        [math.sin(theta), d * math.cos(theta)]])
        cov = jac.dot(np.diag([sigma_d ** 2, sigma_t ** 2])).dot(jac.T)
        out.append(RspEstimate(point, 0.5 * (cov + cov.T), echo.beam_index, echo.snr))
    if dropped:
        logger.warning('Dropped %d echo(es) with non-positive round-trip time', dropped)
    return out


def _line_through(p, q):  # type: (Any, Any) -> Tuple[np.ndarray, float]
    d = np.array([q[0] - p[0], q[1] - p[1]])
    n = np.array([-d[1], d[0]]) / np.linalg.norm(d)
    return n, float(n.dot([p[0], p[1]]))


def cluster_rsps(rsps, threshold=CLUSTER_THRESHOLD, min_size=2):
    # type: (Sequence[RspEstimate], float, int) -> List[List[RspEstimate]]
    """Groups RSPs that lie on a common line.

    Greedy line consensus: every pair of remaining points proposes a line,
    the proposal with the most points within ``threshold`` wins (ties go to
    the smaller summed distance, then to the earlier pair), is refit on its
    members, and is removed. Stops when no proposal reaches ``min_size``.
    """
    remaining = list(rsps)
    clusters = []  # type: List[List[RspEstimate]]
    while len(remaining) >= max(min_size, 2):
        pts = np.array([[r.point[0], r.point[1]] for r in remaining])
        best = None  # type: Any
        for i, j in itertools.combinations(range(len(remaining)), 2):
            if np.hypot(*(pts[i] - pts[j])) < 1e-9:
                continue
            n, off = _line_through(pts[i], pts[j])
            dist = np.abs(pts.dot(n) - off)
            members = dist <= threshold
            key = (-int(members.sum()), float(dist[members].sum()))
            if best is None or key < best[0]:
                best = (key, members)
        if best is None or -best[0][0] < min_size:
            break
        members = best[1]
        try:
            seg, _ = wall_from_rsps(pts[members])
            n_fit, off_fit = _line_through(seg.a, seg.b)
            refined = np.abs(pts.dot(n_fit) - off_fit) <= threshold
            if refined.sum() >= members.sum():
                members = refined
        except (DegenerateFitError, InsufficientDataError):
            pass
        clusters.append([r for r, m in zip(remaining, members) if m])
        remaining = [r for r, m in zip(remaining, members) if not m]
    return clusters


def rsps_to_va_priors(rsps,  # type: Sequence[RspEstimate]
                      pa_hypotheses,  # type: Sequence[Any]
                      threshold=CLUSTER_THRESHOLD,  # type: float
                      ):  # type: (...) -> List[VaPrior]
    """Converts RSP clusters into VA priors for every PA hypothesis.

    Each cluster is fitted to a wall; each PA hypothesis (id, mean, cov) is
    mirrored across it. VA covariance = M C_pa M^T + J C_line J^T where M is
    the (orthogonal) mirror map and J its Jacobian in the line parameters.
    """
    priors = []  # type: List[VaPrior]
    hyps = [PaHypothesis(*h) for h in pa_hypotheses]
    for idx, cluster in enumerate(cluster_rsps(rsps, threshold)):
        wall_id = 'active-{}'.format(idx)
        try:
            seg, line_cov = wall_from_rsps([r.point for r in cluster],
                                           [r.covariance for r in cluster], wall_id)
        except (DegenerateFitError, InsufficientDataError):
            continue
        phi, r = line_params(seg)
        for h in hyps:
            mean = mirror_across_line(h.mean, phi, r)
            j_point, j_line = mirror_jacobians(h.mean, phi, r)
            cov = j_point.dot(np.asarray(h.covariance)).dot(j_point.T) + \
                j_line.dot(line_cov).dot(j_line.T)
            cov = 0.5 * (cov + cov.T) + COVARIANCE_FLOOR * np.eye(2)
            priors.append(VaPrior(Point2(mean[0], mean[1]), cov, wall_id, h.id, 'active'))
    return priors


def active_walls(rsps, threshold=CLUSTER_THRESHOLD):  # type: (Sequence[RspEstimate], float) -> List[Tuple[Any, np.ndarray]]
    """Fitted (segment, line covariance) per RSP cluster."""
    out = []
    for idx, cluster in enumerate(cluster_rsps(rsps, threshold)):
        try:
            out.append(wall_from_rsps([r.point for r in cluster], [r.covariance for r in cluster],
                                      'active-{}'.format(idx)))
        except (DegenerateFitError, InsufficientDataError):
            continue
    return out


def sense_room(env, ue, cb, noise, rng, orientations=(0.0, math.pi / 2, math.pi, -math.pi / 2)):
    # type: (Environment, UEState, BeamCodebook, NoiseProfile, np.random.Generator, Sequence[float]) -> List[RspEstimate]
    """Runs echo sweeps at several array orientations and pools the RSPs."""
    rsps = []  # type: List[RspEstimate]
    for k, orientation in enumerate(orientations):
        rotated = ue._replace(orientation=ue.orientation + orientation)
        echoes = simulate_echo(env, rotated, cb, noise, rng)
        rsps.extend(r._replace(beam_index=k * cb.n_beams + r.beam_index)
                    for r in estimate_rsps(echoes, rotated, cb, noise))
    return rsps
