# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import numpy as np  # type: ignore
from typing import Any, List, Sequence, Text

from isacslam.geometry import Point2


def to_array(points):  # type: (Sequence[Any]) -> np.ndarray
    """Converts a sequence of points to an (n, 2) float array.

    Inputs:
        points: Point2 records or anything indexable as p[0], p[1].
    Returns:
        arr: the converted array; shape (0, 2) when ``points`` is empty.
    """
    if len(points) == 0:
        return np.zeros((0, 2))
    arr = np.array([[p[0], p[1]] for p in points], dtype=np.float64)
    return arr


def from_array(arr):  # type: (np.ndarray) -> List[Point2]
    """Converts an (n, 2) array to a list of Point2."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError('Expected an (n, 2) array, got shape {}'.format(arr.shape))
    return [Point2(float(x), float(y)) for x, y in arr]


def is_spd(cov, size=2):  # type: (Any, int) -> bool
    """True for a finite, symmetric, positive definite ``size`` x ``size`` matrix."""
    try:
        c = np.asarray(cov, dtype=np.float64)
    except (TypeError, ValueError):
        return False
    if c.shape != (size, size) or not np.all(np.isfinite(c)):
        return False
    if not np.allclose(c, c.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(c).max()))):
        return False
    try:
        np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        return False
    return True


def check_covariance(cov, name='covariance', size=2):  # type: (Any, Text, int) -> np.ndarray
    if not is_spd(cov, size):
        raise ValueError('{} must be a finite symmetric positive definite {}x{} matrix, got {!r}'.format(
            name, size, size, cov))
    return np.asarray(cov, dtype=np.float64)
