# SPDX-License-Identifier: Apache-2.0

"""Ground-truth 2D world model.

Walls are finite line segments. A wall's infinite line is kept in normal form
``n(phi) . x = r`` with ``n(phi) = (cos phi, sin phi)`` and ``r >= 0``; every
mirror, fit and covariance propagation below works on ``(phi, r)``.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math
from collections import namedtuple

import numpy as np  # type: ignore
from typing import List, Optional, Sequence, Text, Tuple, Iterable, Any

from isacslam.errors import (InvalidGeometryError, InvalidMeasurementError,
                             InsufficientDataError, DegenerateFitError)

# Speed of light in vacuum (m/s). Fixed on purpose.
C = 299792458.0

MIN_WALL_LENGTH = 1e-9
MIN_RSP_SPREAD = 1e-6
GRAZING_TOLERANCE = 1e-9

Point2 = namedtuple('Point2', ['x', 'y'])

WallSegment = namedtuple('WallSegment', ['a', 'b', 'id', 'reflection_loss_db'])
WallSegment.__new__.__defaults__ = (10.0,)

Rect = namedtuple('Rect', ['xmin', 'ymin', 'xmax', 'ymax'])

VirtualAnchor = namedtuple('VirtualAnchor', ['position', 'pa_id', 'wall_id'])

SpecularPath = namedtuple('SpecularPath', ['reflection_point', 'path_length'])


def as_point(p):  # type: (Any) -> Point2
    if isinstance(p, Point2):
        return p
    x, y = p
    return Point2(float(x), float(y))


def _vec(p):  # type: (Any) -> np.ndarray
    return np.array([p[0], p[1]], dtype=np.float64)


def distance(p, q):  # type: (Any, Any) -> float
    return math.hypot(q[0] - p[0], q[1] - p[1])


def bearing(src, dst):  # type: (Any, Any) -> float
    """Azimuth of ``dst`` seen from ``src`` in the global frame, in (-pi, pi]."""
    return math.atan2(dst[1] - src[1], dst[0] - src[0])


def wrap_angle(a):  # type: (Any) -> Any
    """Wraps scalar or array angles into (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(a, dtype=np.float64), 2.0 * np.pi)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def wall_length(w):  # type: (WallSegment) -> float
    return distance(w.a, w.b)


def _check_wall(w):  # type: (WallSegment) -> None
    if wall_length(w) <= MIN_WALL_LENGTH:
        raise InvalidGeometryError(
            'Wall {!r} is degenerate (length {:.3g} m)'.format(w.id, wall_length(w)))


def line_params(w):  # type: (WallSegment) -> Tuple[float, float]
    """Returns ``(phi, r)`` of the infinite line through ``w``, with ``r >= 0``."""
    _check_wall(w)
    dx, dy = w.b[0] - w.a[0], w.b[1] - w.a[1]
    length = math.hypot(dx, dy)
    nx, ny = -dy / length, dx / length
    r = nx * w.a[0] + ny * w.a[1]
    if r < 0:
        nx, ny, r = -nx, -ny, -r
    return math.atan2(ny, nx), r


def signed_offset(p, phi, r):  # type: (Any, float, float) -> float
    return math.cos(phi) * p[0] + math.sin(phi) * p[1] - r


def mirror_across_line(p, phi, r):  # type: (Any, float, float) -> Point2
    n = (math.cos(phi), math.sin(phi))
    s = signed_offset(p, phi, r)
    return Point2(p[0] - 2.0 * s * n[0], p[1] - 2.0 * s * n[1])


def mirror_point(p, w):  # type: (Any, WallSegment) -> Point2
    """Reflects ``p`` across the infinite line through wall ``w``.

    Raises InvalidGeometryError for walls shorter than MIN_WALL_LENGTH.
    """
    phi, r = line_params(w)
    return mirror_across_line(p, phi, r)


def mirror_jacobians(p, phi, r):  # type: (Any, float, float) -> Tuple[np.ndarray, np.ndarray]
    """Jacobians of the mirror map with respect to the point and to (phi, r)."""
    n = np.array([math.cos(phi), math.sin(phi)])
    dn = np.array([-math.sin(phi), math.cos(phi)])
    pv = _vec(p)
    s = float(n.dot(pv)) - r
    j_point = np.eye(2) - 2.0 * np.outer(n, n)
    j_line = np.zeros((2, 2))
    j_line[:, 0] = -2.0 * (float(dn.dot(pv)) * n + s * dn)
    j_line[:, 1] = 2.0 * n
    return j_point, j_line


def _segment_hit(p, q, w):  # type: (Any, Any, WallSegment) -> Optional[Tuple[float, float]]
    """Parameters (t on p->q, u on a->b) of the proper intersection, if any."""
    d1 = (q[0] - p[0], q[1] - p[1])
    d2 = (w.b[0] - w.a[0], w.b[1] - w.a[1])
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-15:
        return None
    wx, wy = w.a[0] - p[0], w.a[1] - p[1]
    t = (wx * d2[1] - wy * d2[0]) / denom
    u = (wx * d1[1] - wy * d1[0]) / denom
    return t, u


def is_occluded(p, q, walls, exclude=()):  # type: (Any, Any, Iterable[WallSegment], Sequence[Text]) -> bool
    """True when segment p->q strictly crosses any wall not listed in ``exclude``.

    Touching a wall within GRAZING_TOLERANCE of either segment's end counts
    as unblocked.
    """
    seg_len = distance(p, q)
    if seg_len <= GRAZING_TOLERANCE:
        return False
    for w in walls:
        if w.id in exclude:
            continue
        hit = _segment_hit(p, q, w)
        if hit is None:
            continue
        t, u = hit
        w_len = wall_length(w)
        if t * seg_len <= GRAZING_TOLERANCE or (1.0 - t) * seg_len <= GRAZING_TOLERANCE:
            continue
        if u * w_len <= GRAZING_TOLERANCE or (1.0 - u) * w_len <= GRAZING_TOLERANCE:
            continue
        return True
    return False


def trace_specular_path(ue, pa, w, walls=()):  # type: (Any, Any, WallSegment, Iterable[WallSegment]) -> Optional[SpecularPath]
    """Single-bounce specular path from ``pa`` to ``ue`` off wall ``w``.

    Arguments:
        ue, pa: end points of the path.
        w: the reflecting wall.
        walls: obstacles checked on both legs; ``w`` itself is skipped.

    Returns:
        SpecularPath(reflection_point, path_length) or None when the bounce
        point falls outside the segment, the end points lie on opposite
        sides of (or on) the wall line, or a leg is occluded.
    """
    phi, r = line_params(w)
    s_ue = signed_offset(ue, phi, r)
    s_pa = signed_offset(pa, phi, r)
    if abs(s_ue) <= GRAZING_TOLERANCE or abs(s_pa) <= GRAZING_TOLERANCE:
        return None
    if (s_ue > 0) != (s_pa > 0):
        return None
    va = mirror_across_line(pa, phi, r)
    # ue and va sit on opposite sides, so the crossing parameter is in (0, 1).
    t = s_ue / (s_ue - signed_offset(va, phi, r))
    bounce = Point2(ue[0] + t * (va[0] - ue[0]), ue[1] + t * (va[1] - ue[1]))
    w_len = wall_length(w)
    along = ((bounce[0] - w.a[0]) * (w.b[0] - w.a[0]) +
             (bounce[1] - w.a[1]) * (w.b[1] - w.a[1])) / w_len
    if along < -GRAZING_TOLERANCE or along > w_len + GRAZING_TOLERANCE:
        return None
    others = list(walls)
    if is_occluded(ue, bounce, others, exclude=(w.id,)) or \
            is_occluded(bounce, pa, others, exclude=(w.id,)):
        return None
    return SpecularPath(bounce, distance(ue, va))


def rsp_from_echo(ue, beam_azimuth, round_trip_time):  # type: (Any, float, float) -> Point2
    if not round_trip_time > 0:
        raise InvalidMeasurementError(
            'Round-trip time must be positive, got {!r}'.format(round_trip_time))
    d = C * round_trip_time / 2.0
    return Point2(ue[0] + d * math.cos(beam_azimuth), ue[1] + d * math.sin(beam_azimuth))


def ray_hit_distance(origin, azimuth, walls):  # type: (Any, float, Iterable[WallSegment]) -> Optional[Tuple[float, Text]]
    """Distance along a ray to the nearest wall it hits, with that wall's id."""
    dx, dy = math.cos(azimuth), math.sin(azimuth)
    best = None  # type: Optional[Tuple[float, Text]]
    for w in walls:
        ex, ey = w.b[0] - w.a[0], w.b[1] - w.a[1]
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-15:
            continue
        wx, wy = w.a[0] - origin[0], w.a[1] - origin[1]
        t = (wx * ey - wy * ex) / denom
        u = (wx * dy - wy * dx) / denom
        if t <= 0 or u < 0 or u > 1:
            continue
        if best is None or t < best[0]:
            best = (t, w.id)
    return best


def wall_from_rsps(rsps, covariances=None, wall_id='fit'):
    # type: (Sequence[Any], Optional[Sequence[np.ndarray]], Text) -> Tuple[WallSegment, np.ndarray]
    """Total-least-squares wall fit through reflective surface points.

    Arguments:
        rsps: at least two points.
        covariances: optional 2x2 covariance per point; zero when omitted.
        wall_id: id given to the returned segment.

    Returns:
        (segment clipped to the RSP span, 2x2 covariance of (phi, r)).
    """
    if len(rsps) < 2:
        raise InsufficientDataError('Need at least 2 RSPs to fit a wall, got {}'.format(len(rsps)))
    pts = np.array([[p[0], p[1]] for p in rsps], dtype=np.float64)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, _, vt = np.linalg.svd(centered)
    direction = vt[0]
    along = centered.dot(direction)
    if along.max() - along.min() < MIN_RSP_SPREAD:
        raise DegenerateFitError('RSP spread {:.3g} m is too small to fit a wall'.format(
            along.max() - along.min()))
    n = np.array([-direction[1], direction[0]])
    r = float(n.dot(centroid))
    if r < 0:
        n, r = -n, -r
    phi = math.atan2(n[1], n[0])
    a = centroid + along.min() * direction
    b = centroid + along.max() * direction
    segment = WallSegment(Point2(float(a[0]), float(a[1])), Point2(float(b[0]), float(b[1])), wall_id)

    line_cov = np.zeros((2, 2))
    if covariances is not None:
        dn = np.array([-math.sin(phi), math.cos(phi)])
        proj_dn = pts.dot(dn)
        resid = pts.dot(n) - r
        hess = np.array([[np.sum(proj_dn ** 2 - resid * pts.dot(n)), -np.sum(proj_dn)],
                         [-np.sum(proj_dn), float(len(pts))]])
        hess_inv = np.linalg.inv(hess)
        for i, cov in enumerate(covariances):
            b_i = np.vstack([proj_dn[i] * n + resid[i] * dn, -n])
            j_i = -hess_inv.dot(b_i)
            line_cov += j_i.dot(np.asarray(cov, dtype=np.float64)).dot(j_i.T)
        line_cov = 0.5 * (line_cov + line_cov.T)
    return segment, line_cov


class Environment(object):
    """Walls, physical anchors and scatterers of the simulated world."""

    def __init__(self,
                 walls,  # type: Sequence[WallSegment]
                 pas,  # type: Sequence[Tuple[Text, Point2]]
                 scatterers,  # type: Sequence[Tuple[Text, Point2]]
                 bounds,  # type: Rect
                 ):  # type: (...) -> None
        self.walls = list(walls)
        self.pas = [(pid, as_point(p)) for pid, p in pas]
        self.scatterers = [(sid, as_point(p)) for sid, p in scatterers]
        self.bounds = Rect(*bounds)

    def contains(self, p):  # type: (Any) -> bool
        b = self.bounds
        return b.xmin <= p[0] <= b.xmax and b.ymin <= p[1] <= b.ymax

    def diagonal(self):  # type: () -> float
        b = self.bounds
        return math.hypot(b.xmax - b.xmin, b.ymax - b.ymin)

    def wall(self, wall_id):  # type: (Text) -> WallSegment
        for w in self.walls:
            if w.id == wall_id:
                return w
        raise KeyError(wall_id)

    def pa(self, pa_id):  # type: (Text) -> Point2
        for pid, p in self.pas:
            if pid == pa_id:
                return p
        raise KeyError(pa_id)

    def virtual_anchors(self):  # type: () -> List[VirtualAnchor]
        return [VirtualAnchor(mirror_point(p, w), pid, w.id)
                for pid, p in self.pas for w in self.walls]

    def translated(self, dx, dy):  # type: (float, float) -> Environment
        def move(p):  # type: (Any) -> Point2
            return Point2(p[0] + dx, p[1] + dy)
        b = self.bounds
        return Environment(
            [w._replace(a=move(w.a), b=move(w.b)) for w in self.walls],
            [(pid, move(p)) for pid, p in self.pas],
            [(sid, move(p)) for sid, p in self.scatterers],
            Rect(b.xmin + dx, b.ymin + dy, b.xmax + dx, b.ymax + dy))

    def __repr__(self):  # type: () -> Text
        return 'Environment(walls={}, pas={}, scatterers={})'.format(
            len(self.walls), len(self.pas), len(self.scatterers))
