# SPDX-License-Identifier: Apache-2.0

"""Beam management on top of the beam-pair RSRP substrate.

Path extraction from exhaustive sweeps, SLAM-predicted candidate beams, and
the switching rule between small-scale tracking and full-scale sweeping.
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
from typing import Any, FrozenSet, List, Optional, Sequence, Tuple
from typing_extensions import Literal

from isacslam.geometry import bearing, distance, wrap_angle
from isacslam.measurement import BeamCodebook, Measurement, RSRPMatrix, UEState
from isacslam.slam_engine import Feature, anchor_position, model

logger = logging.getLogger(__name__)

TrackingMode = Literal['full_sweep', 'tracking']

PathEstimate = namedtuple('PathEstimate', ['aod', 'aoa', 'strength', 'tx_beam', 'rx_beam'])

TrackingState = namedtuple('TrackingState', ['mode', 'candidate_beams', 'misses', 'history', 'last_pair'])
TrackingState.__new__.__defaults__ = ('full_sweep', frozenset(), 0, (), None)

TrackingResult = namedtuple('TrackingResult', ['state', 'chosen', 'overhead', 'achieved_rsrp', 'swept'])

TrackingLogRow = namedtuple('TrackingLogRow', ['epoch', 'mode', 'overhead', 'tx_beam', 'rx_beam',
                                               'achieved_rsrp', 'best_rsrp'])

DROP_THRESHOLD_DB = 6.0
MISS_LIMIT = 2
MEDIAN_WINDOW = 5


def _parabolic_offset(values, k):  # type: (np.ndarray, int) -> float
    """Vertex offset (in beams) of the parabola through k-1, k, k+1."""
    if k == 0 or k == len(values) - 1:
        return 0.0
    lo, mid, hi = values[k - 1], values[k], values[k + 1]
    denom = lo - 2.0 * mid + hi
    if not np.isfinite(denom) or abs(denom) < 1e-12:
        return 0.0
    return float(np.clip(0.5 * (lo - hi) / denom, -0.5, 0.5))


def successive_cancellation(m,  # type: RSRPMatrix
                            tx_cb,  # type: BeamCodebook
                            rx_cb,  # type: BeamCodebook
                            stop_threshold_db=10.0,  # type: float
                            noise_floor_dbm=-90.0,  # type: float
                            max_paths=5,  # type: int
                            mask_radius=1,  # type: int
                            dynamic_range_db=None,  # type: Optional[float]
                            ):  # type: (...) -> List[PathEstimate]
    """Strongest-first path extraction from a beam-pair RSRP matrix.

    Each round takes the global maximum of the residual, refines both angles
    by quadratic interpolation over the neighbouring beams, subtracts the
    reconstructed path (gain model, linear domain) and masks +-mask_radius
    beams around the peak. Angles are returned in the array frames.
    """
    values = np.asarray(m.values, dtype=np.float64)
    if values.shape != (tx_cb.n_beams, rx_cb.n_beams):
        raise ValueError('RSRP matrix shape {} does not match codebooks ({}, {})'.format(
            values.shape, tx_cb.n_beams, rx_cb.n_beams))
    floor_lin = 10.0 ** (noise_floor_dbm / 10.0)
    residual = 10.0 ** (values / 10.0)
    masked = np.zeros(values.shape, dtype=bool)
    out = []  # type: List[PathEstimate]
    first_peak = None  # type: Optional[float]
    while len(out) < max_paths and not masked.all():
        search = np.where(masked, -np.inf, residual)
        i, j = np.unravel_index(int(np.argmax(search)), search.shape)
        peak_db = 10.0 * math.log10(residual[i, j])
        if peak_db < noise_floor_dbm + stop_threshold_db:
            break
        if first_peak is None:
            first_peak = peak_db
        elif dynamic_range_db is not None and peak_db < first_peak - dynamic_range_db:
            break
        db = 10.0 * np.log10(np.maximum(residual, floor_lin))
        aod = wrap_angle(tx_cb.centers[i] + _parabolic_offset(db[:, j], i) * tx_cb.spacing)
        aoa = wrap_angle(rx_cb.centers[j] + _parabolic_offset(db[i, :], j) * rx_cb.spacing)
        g_tx, g_rx = tx_cb.gains(aod), rx_cb.gains(aoa)
        power = max(residual[i, j] - floor_lin, floor_lin) / (g_tx[i] * g_rx[j])
        out.append(PathEstimate(aod, aoa, 10.0 * math.log10(power), int(i), int(j)))
        residual = np.maximum(residual - power * np.outer(g_tx, g_rx), floor_lin)
        masked[max(i - mask_radius, 0):i + mask_radius + 1, max(j - mask_radius, 0):j + mask_radius + 1] = True
    return out


def to_measurement(est, m, epoch=0, body_orientation=None):
    # type: (PathEstimate, RSRPMatrix, int, Optional[float]) -> Measurement
    """Turns a path estimate into a SLAM measurement without delay information.

    AOD goes to the global frame; AOA to the UE body frame, which is the
    receive array frame unless ``body_orientation`` says otherwise.
    """
    if body_orientation is None:
        body_orientation = m.rx_orientation
    return Measurement(wrap_angle(est.aoa + m.rx_orientation - body_orientation),
                       wrap_angle(est.aod + m.tx_orientation), float('nan'), est.strength,
                       ('unknown',), epoch)


def _beam_window(cb, angle, sigma, gate):  # type: (BeamCodebook, float, float, float) -> List[int]
    k = cb.nearest(angle)
    picked = set(range(max(k - 1, 0), min(k + 1, cb.n_beams - 1) + 1))
    for idx, center in enumerate(cb.centers):
        if abs(wrap_angle(center - angle)) <= gate * sigma:
            picked.add(idx)
    return sorted(picked)


def full_candidate_set(tx_cb, rx_cb):  # type: (BeamCodebook, BeamCodebook) -> FrozenSet[Tuple[int, int]]
    return frozenset(itertools.product(range(tx_cb.n_beams), range(rx_cb.n_beams)))


def predict_beams(features,  # type: Sequence[Feature]
                  ue_pred,  # type: UEState
                  ue_cov,  # type: Any
                  tx_cb,  # type: BeamCodebook
                  rx_cb,  # type: BeamCodebook
                  gate=3.0,  # type: float
                  tx_orientation=0.0,  # type: float
                  rx_orientation=None,  # type: Optional[float]
                  existence_threshold=0.5,  # type: float
                  ):  # type: (...) -> FrozenSet[Tuple[int, int]]
    """Beam pairs worth measuring given the map and the predicted UE state.

    Every feature above the existence threshold predicts an AOD/AOA pair (a
    VA as the virtual BS the reflected signal seems to come from); both
    angles are widened by gate x the angular spread implied by the UE and
    feature position uncertainty. Falls back to the full sweep when no
    feature qualifies.
    """
    if rx_orientation is None:
        rx_orientation = ue_pred.orientation
    ue_cov = np.asarray(ue_cov, dtype=np.float64).reshape(2, 2)
    state = np.array([ue_pred.position[0], ue_pred.position[1], 0.0, 0.0, 0.0, 0.0])
    out = set()  # type: set
    for f in features:
        if f.existence <= existence_threshold:
            continue
        pa = anchor_position(f, features)
        r = max(distance(ue_pred.position, f.mean), 1e-6)
        sigma = math.sqrt(max(np.trace(ue_cov) + np.trace(f.covariance), 0.0)) / r
        aoa = bearing(ue_pred.position, f.mean)
        rx_beams = _beam_window(rx_cb, wrap_angle(aoa - rx_orientation), sigma, gate)
        if f.kind == 'PA' or pa is not None:
            aod = float(model(state, f.kind, f.mean, pa, ('AOD',))[0, 0])
            tx_beams = _beam_window(tx_cb, wrap_angle(aod - tx_orientation), sigma, gate)
        else:
            tx_beams = list(range(tx_cb.n_beams))
        out.update(itertools.product(tx_beams, rx_beams))
    if not out:
        return full_candidate_set(tx_cb, rx_cb)
    return frozenset(out)


def tracking_step(ts,  # type: TrackingState
                  values,  # type: Any
                  full_matrix_available=True,  # type: bool
                  drop_db=DROP_THRESHOLD_DB,  # type: float
                  miss_limit=MISS_LIMIT,  # type: int
                  window=MEDIAN_WINDOW,  # type: int
                  ):  # type: (...) -> TrackingResult
    """One epoch of the birth/death switching module.

    In tracking mode only the candidate pairs (and the last chosen pair) are
    measured and the best is chosen. A best value more than ``drop_db`` below
    the running median counts as a miss; ``miss_limit`` consecutive misses
    trigger a full sweep, run in the same epoch when the full matrix is
    available and deferred otherwise. After a sweep the running history
    restarts from the swept best.
    """
    grid = np.asarray(values.values if isinstance(values, RSRPMatrix) else values, dtype=np.float64)
    n_tx, n_rx = grid.shape
    if ts.mode == 'full_sweep':
        if full_matrix_available:
            return _sweep(ts, grid, 0)
        return TrackingResult(ts, ts.last_pair, 0, float('nan'), False)

    measured = set(p for p in ts.candidate_beams if 0 <= p[0] < n_tx and 0 <= p[1] < n_rx)
    if ts.last_pair is not None:
        measured.add(tuple(ts.last_pair))
    if not measured:
        logger.warning('Tracking with an empty candidate set; sweeping')
        return _sweep(ts, grid, 0)
    pairs = sorted(measured)
    scores = [grid[p] for p in pairs]
    chosen = pairs[int(np.argmax(scores))]
    best = float(grid[chosen])
    misses = ts.misses
    history = ts.history
    if history and best < float(np.median(history)) - drop_db:
        misses += 1
    else:
        misses = 0
        history = (history + (best,))[-window:]
    state = ts._replace(misses=misses, history=history, last_pair=chosen)
    if misses >= miss_limit:
        logger.info('Beam death suspected after %d misses; full sweep', misses)
        if full_matrix_available:
            return _sweep(state, grid, len(pairs))
        return TrackingResult(state._replace(mode='full_sweep', misses=0), chosen, len(pairs), best, False)
    return TrackingResult(state, chosen, len(pairs), best, False)


def _sweep(ts, grid, already):  # type: (TrackingState, np.ndarray, int) -> TrackingResult
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    best = float(grid[i, j])
    state = ts._replace(mode='tracking', misses=0, history=(best,), last_pair=(int(i), int(j)))
    return TrackingResult(state, (int(i), int(j)), already + grid.size, best, True)


ImuConfig = namedtuple('ImuConfig', ['sigma', 'drift_sigma'])
ImuConfig.__new__.__defaults__ = (0.05, 0.005)


def imu_odometry(track, sigma, drift_sigma, rng):
    # type: (Sequence[Any], float, float, np.random.Generator) -> List[np.ndarray]
    """Per-epoch displacements with white noise and a random-walk bias."""
    pts = np.array([[p[0], p[1]] for p in track], dtype=np.float64)
    bias = np.zeros(2)
    out = []
    for k in range(1, len(pts)):
        if drift_sigma > 0:
            bias = bias + rng.normal(0.0, drift_sigma, size=2)
        noise = rng.normal(0.0, sigma, size=2) if sigma > 0 else np.zeros(2)
        out.append(pts[k] - pts[k - 1] + noise + bias)
    return out
