# SPDX-License-Identifier: Apache-2.0

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import math
import unittest

import numpy as np  # type: ignore
from typing import Any, Text

from isacslam.errors import (DegenerateFitError, InsufficientDataError, InvalidGeometryError,
                             InvalidMeasurementError)
from isacslam.geometry import (C, Point2, WallSegment, bearing, distance, is_occluded, line_params,
                               mirror_point, ray_hit_distance, rsp_from_echo, trace_specular_path,
                               wall_from_rsps, wrap_angle)


def wall(a, b, id='w'):  # type: (Any, Any, Text) -> WallSegment
    return WallSegment(Point2(*a), Point2(*b), id)


class TestMirror(unittest.TestCase):

    def test_mirror_vertical_line(self):  # type: () -> None
        p = mirror_point((5.0, 1.0), wall((2, 0), (2, 10)))
        self.assertAlmostEqual(p.x, -1.0, places=12)
        self.assertAlmostEqual(p.y, 1.0, places=12)

    def test_point_on_line_is_fixed(self):  # type: () -> None
        p = mirror_point((2.0, 7.5), wall((2, 0), (2, 10)))
        self.assertAlmostEqual(p.x, 2.0, places=12)
        self.assertAlmostEqual(p.y, 7.5, places=12)

    def test_mirror_room_pa_across_y_axis(self):  # type: () -> None
        p = mirror_point((5.667, 6.290), wall((0, 0), (0, 10)))
        self.assertAlmostEqual(p.x, -5.667, places=12)
        self.assertAlmostEqual(p.y, 6.290, places=12)

    def test_degenerate_wall(self):  # type: () -> None
        self.assertRaises(InvalidGeometryError, mirror_point, (1.0, 1.0), wall((2, 2), (2, 2)))

    def test_involution(self):  # type: () -> None
        rng = np.random.default_rng(7)
        for _ in range(200):
            a, b, p = rng.uniform(-10, 10, size=(3, 2))
            if np.hypot(*(a - b)) < 1e-3:
                continue
            w = wall(a, b)
            back = mirror_point(mirror_point(p, w), w)
            self.assertLess(distance(back, p), 1e-12)

    def test_line_params_non_negative_offset(self):  # type: () -> None
        phi, r = line_params(wall((-1, -3), (-1, 3)))
        self.assertGreaterEqual(r, 0.0)
        self.assertAlmostEqual(r, 1.0)
        self.assertAlmostEqual(abs(wrap_angle(phi)), math.pi)


class TestSpecularPath(unittest.TestCase):

    def test_bounce_point_and_length(self):  # type: () -> None
        path = trace_specular_path((0.0, 0.0), (0.0, 2.0), wall((2, -5), (2, 5)))
        assert path is not None
        self.assertAlmostEqual(path.reflection_point.x, 2.0, places=12)
        self.assertAlmostEqual(path.reflection_point.y, 1.0, places=12)
        self.assertAlmostEqual(path.path_length, 2.0 * math.sqrt(5.0), places=12)

    def test_bounce_outside_segment(self):  # type: () -> None
        self.assertIsNone(trace_specular_path((0.0, 0.0), (0.0, 2.0), wall((2, 10), (2, 20))))

    def test_opposite_sides(self):  # type: () -> None
        self.assertIsNone(trace_specular_path((0.0, 0.0), (4.0, 2.0), wall((2, -5), (2, 5))))

    def test_occluded_leg(self):  # type: () -> None
        w = wall((2, -5), (2, 5), 'mirror')
        blocker = wall((0.5, -1), (0.5, 1), 'blocker')
        self.assertIsNone(trace_specular_path((0.0, 0.0), (0.0, 2.0), w, [w, blocker]))

    def test_virtual_anchor_equivalence(self):  # type: () -> None
        rng = np.random.default_rng(11)
        w = wall((3, -4), (3, 6))
        checked = 0
        for _ in range(300):
            ue = rng.uniform([-4, -4], [2.9, 6])
            pa = rng.uniform([-4, -4], [2.9, 6])
            path = trace_specular_path(ue, pa, w)
            if path is None:
                continue
            checked += 1
            va = mirror_point(pa, w)
            self.assertLess(abs(path.path_length - distance(ue, va)), 1e-9)
            angle = wrap_angle(bearing(ue, path.reflection_point) - bearing(ue, va))
            self.assertLess(abs(angle), 1e-9)
        self.assertGreater(checked, 50)


class TestOcclusion(unittest.TestCase):

    def test_crossing_blocks(self):  # type: () -> None
        self.assertTrue(is_occluded((0, 0), (4, 0), [wall((2, -1), (2, 1))]))

    def test_grazing_endpoint_is_unblocked(self):  # type: () -> None
        self.assertFalse(is_occluded((0, 0), (4, 0), [wall((2, 0), (2, 1))]))

    def test_excluded_wall(self):  # type: () -> None
        self.assertFalse(is_occluded((0, 0), (4, 0), [wall((2, -1), (2, 1), 'x')], exclude=('x',)))


class TestEcho(unittest.TestCase):

    def test_rsp_along_x(self):  # type: () -> None
        p = rsp_from_echo((0.0, 0.0), 0.0, 20e-9)
        self.assertAlmostEqual(p.x, 2.99792458, places=12)
        self.assertAlmostEqual(p.y, 0.0, places=12)

    def test_rsp_along_y(self):  # type: () -> None
        p = rsp_from_echo((1.0, 1.0), math.pi / 2, 20e-9)
        self.assertAlmostEqual(p.x, 1.0, places=12)
        self.assertAlmostEqual(p.y, 3.99792458, places=12)

    def test_rsp_distance(self):  # type: () -> None
        tau = 37.3e-9
        p = rsp_from_echo((0.5, -2.0), 2.1, tau)
        self.assertAlmostEqual(distance(p, (0.5, -2.0)), C * tau / 2.0, places=12)

    def test_non_positive_round_trip(self):  # type: () -> None
        self.assertRaises(InvalidMeasurementError, rsp_from_echo, (0.0, 0.0), math.pi, 0.0)
        self.assertRaises(InvalidMeasurementError, rsp_from_echo, (0.0, 0.0), 0.0, -1e-9)

    def test_ray_hit_nearest_wall(self):  # type: () -> None
        hit = ray_hit_distance((0.0, 0.0), 0.0, [wall((5, -1), (5, 1), 'far'), wall((3, -1), (3, 1), 'near')])
        assert hit is not None
        self.assertAlmostEqual(hit[0], 3.0)
        self.assertEqual(hit[1], 'near')

    def test_ray_into_open_space(self):  # type: () -> None
        self.assertIsNone(ray_hit_distance((0.0, 0.0), math.pi, [wall((3, -1), (3, 1))]))


class TestWallFit(unittest.TestCase):

    def test_two_points(self):  # type: () -> None
        seg, _ = wall_from_rsps([(2.0, 0.0), (2.0, 2.0)])
        phi, r = line_params(seg)
        self.assertAlmostEqual(r, 2.0, places=12)
        self.assertAlmostEqual(math.cos(phi), 1.0, places=12)

    def test_exact_collinear_residual(self):  # type: () -> None
        pts = [(2.0, 0.0), (2.0, 1.0), (2.0, 2.0)]
        seg, cov = wall_from_rsps(pts)
        phi, r = line_params(seg)
        for p in pts:
            self.assertLess(abs(math.cos(phi) * p[0] + math.sin(phi) * p[1] - r), 1e-12)
        self.assertEqual(sorted(round(y, 9) for y in (seg.a.y, seg.b.y)), [0.0, 2.0])
        np.testing.assert_array_equal(cov, np.zeros((2, 2)))

    def test_noisy_fit(self):  # type: () -> None
        hits = 0
        for seed in range(40):
            rng = np.random.default_rng(seed)
            pts = np.column_stack([2.0 + rng.normal(0.0, 0.05, 50), np.linspace(0.0, 5.0, 50)])
            seg, _ = wall_from_rsps(pts)
            _, r = line_params(seg)
            hits += abs(r - 2.0) < 0.05
        self.assertGreaterEqual(hits, 36)

    def test_line_covariance_from_point_covariances(self):  # type: () -> None
        pts = [(2.0, y) for y in np.linspace(0.0, 4.0, 9)]
        _, cov = wall_from_rsps(pts, [0.01 * np.eye(2)] * len(pts))
        self.assertEqual(cov.shape, (2, 2))
        np.testing.assert_allclose(cov, cov.T)
        self.assertTrue(np.all(np.linalg.eigvalsh(cov) > 0))

    def test_insufficient(self):  # type: () -> None
        self.assertRaises(InsufficientDataError, wall_from_rsps, [(1.0, 1.0)])

    def test_degenerate(self):  # type: () -> None
        self.assertRaises(DegenerateFitError, wall_from_rsps, [(1.0, 1.0), (1.0, 1.0 + 1e-8)])


if __name__ == '__main__':
    unittest.main()
