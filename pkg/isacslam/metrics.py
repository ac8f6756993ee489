# SPDX-License-Identifier: Apache-2.0

"""Localization, mapping and beam-overhead error measures."""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math
from collections import namedtuple

import numpy as np  # type: ignore
from scipy.optimize import linear_sum_assignment  # type: ignore
from typing import Any, List, Optional, Sequence

from isacslam.errors import InsufficientDataError
from isacslam.geometry import Environment, Point2, as_point, is_occluded, mirror_point, trace_specular_path
from isacslam.numpy_helper import to_array

OspaParams = namedtuple('OspaParams', ['cutoff', 'order'])
OspaParams.__new__.__defaults__ = (5.0, 1.0)

OverheadStats = namedtuple('OverheadStats', ['mean_overhead_fraction', 'median_rsrp_loss_db',
                                             'recovery_latency'])


def check_ospa_params(params):  # type: (OspaParams) -> None
    if not params.cutoff > 0:
        raise ValueError('OSPA cutoff must be positive, got {}'.format(params.cutoff))
    if not params.order >= 1:
        raise ValueError('OSPA order must be >= 1, got {}'.format(params.order))


def mae(estimates, truths):  # type: (Sequence[Any], Sequence[Any]) -> float
    """Mean Euclidean distance between paired estimates and truths."""
    if len(estimates) != len(truths):
        raise ValueError('MAE needs paired lists, got {} estimates and {} truths'.format(
            len(estimates), len(truths)))
    if not estimates:
        raise InsufficientDataError('MAE needs at least one pair')
    d = to_array(estimates) - to_array(truths)
    return float(np.mean(np.hypot(d[:, 0], d[:, 1])))


def _cutoff_distances(x, y, cutoff, order):  # type: (np.ndarray, np.ndarray, float, float) -> np.ndarray
    d = np.hypot(x[:, None, 0] - y[None, :, 0], x[:, None, 1] - y[None, :, 1])
    return np.minimum(d, cutoff) ** order


def ospa(x, y, params=None):  # type: (Sequence[Any], Sequence[Any], Optional[OspaParams]) -> float
    """Optimal subpattern assignment distance between two finite point sets.

    The optimal assignment is exact (Hungarian method). Two empty sets are at
    distance 0; the result never exceeds the cutoff.
    """
    if params is None:
        params = OspaParams()
    check_ospa_params(params)
    c, p = float(params.cutoff), float(params.order)
    a, b = to_array(x), to_array(y)
    if len(a) > len(b):
        a, b = b, a
    m, n = len(a), len(b)
    if n == 0:
        return 0.0
    local = 0.0
    if m > 0:
        cost = _cutoff_distances(a, b, c, p)
        rows, cols = linear_sum_assignment(cost)
        local = float(cost[rows, cols].sum())
    value = ((local + c ** p * (n - m)) / n) ** (1.0 / p)
    return min(value, c)


def mospa(runs):  # type: (Sequence[Sequence[float]]) -> List[float]
    """Element-wise mean of per-epoch OSPA series over runs."""
    if not runs:
        raise InsufficientDataError('MOSPA needs at least one run')
    lengths = set(len(r) for r in runs)
    if len(lengths) != 1:
        raise ValueError('MOSPA needs equal-length series, got lengths {}'.format(sorted(lengths)))
    return [float(v) for v in np.mean(np.array(runs, dtype=np.float64), axis=0)]


def mean_matched_error(estimates, truths):  # type: (Sequence[Any], Sequence[Any]) -> float
    """Mean distance over the optimal one-to-one matching, ignoring cardinality.

    NaN when either set is empty.
    """
    a, b = to_array(estimates), to_array(truths)
    if len(a) == 0 or len(b) == 0:
        return float('nan')
    cost = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    rows, cols = linear_sum_assignment(cost)
    return float(np.mean(cost[rows, cols]))


def visible_features(env, positions, include_scatterers=True):
    # type: (Environment, Sequence[Any], bool) -> List[Point2]
    """Ground-truth map seen from any of ``positions``.

    PAs always count; a VA counts once its specular path reached some
    position; a scatterer once both of its legs were unoccluded.
    """
    pts = [as_point(p) for p in positions]
    out = [pa for _, pa in env.pas]
    for _, pa in env.pas:
        for w in env.walls:
            if any(trace_specular_path(p, pa, w, env.walls) is not None for p in pts):
                out.append(mirror_point(pa, w))
    if include_scatterers:
        for _, s in env.scatterers:
            if any(not is_occluded(pa, s, env.walls) and not is_occluded(s, p, env.walls)
                   for _, pa in env.pas for p in pts):
                out.append(s)
    return out


def overhead_stats(log, full_sweep_pairs=64, blockage_epoch=None):
    # type: (Sequence[Any], int, Optional[int]) -> OverheadStats
    """Summary of a beam-tracking log.

    Arguments:
        log: rows with ``epoch``, ``mode``, ``overhead``, ``achieved_rsrp``
            and ``best_rsrp`` fields.
        full_sweep_pairs: overhead of one exhaustive sweep.
        blockage_epoch: when given, the recovery latency is the number of
            epochs from it to the first full sweep at or after it.
    """
    if not log:
        raise InsufficientDataError('Empty tracking log')
    fraction = float(np.mean([row.overhead for row in log])) / full_sweep_pairs
    loss = float(np.median([row.best_rsrp - row.achieved_rsrp for row in log]))
    latency = float('nan')
    if blockage_epoch is not None:
        for row in log:
            if row.epoch >= blockage_epoch and row.mode == 'full_sweep':
                latency = float(row.epoch - blockage_epoch)
                break
    return OverheadStats(fraction, loss, latency)


def series_mean(values):  # type: (Sequence[float]) -> float
    finite = [v for v in values if not math.isnan(v)]
    return float(np.mean(finite)) if finite else float('nan')
