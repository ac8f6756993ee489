# SPDX-License-Identifier: Apache-2.0

"""Multi-UE cooperation through a cloud-side open radio feature map.

Each UE keeps a local radio feature map (its SLAM map). On the frame
schedule every UE uploads it, the ORF-Map fuses the reports, and a newly
entering UE downloads the fused features as its starting map.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import logging
from collections import namedtuple

import numpy as np  # type: ignore
from scipy.optimize import minimize_scalar  # type: ignore
from scipy.stats import chi2  # type: ignore
from typing import Any, Dict, List, Optional, Sequence, Text, Tuple

from isacslam.beam_mgmt import ImuConfig
from isacslam.errors import ConfigurationError
from isacslam.geometry import Environment, Rect
from isacslam.measurement import BeamCodebook, NoiseProfile
from isacslam.metrics import OspaParams
from isacslam.numpy_helper import is_spd
from isacslam.rng import RngStreams
from isacslam.runner import TrackRow, UeRunner, imu_controls
from isacslam.slam_engine import Feature, SlamConfig, SlamEngine

logger = logging.getLogger(__name__)

# chi-square, 2 dof, 99 %
FUSION_GATE = float(chi2.ppf(0.99, 2))
SERVE_THRESHOLD = 0.3
UPLOAD_THRESHOLD = 0.5
FUSION_RULES = ('information', 'ci')

FeatureRecord = namedtuple('FeatureRecord', ['feature', 'reporter', 'report_epoch', 'confidence'])

Contribution = namedtuple('Contribution', ['mean', 'covariance', 'confidence', 'report_epoch'])

OrfSnapshotRow = namedtuple('OrfSnapshotRow', ['epoch', 'version', 'id', 'kind', 'x', 'y', 'cxx', 'cxy',
                                               'cyy', 'confidence', 'contributors'])

CohortResult = namedtuple('CohortResult', ['rows', 'orf_history', 'snapshots', 'orf'])


def information_fusion(means, covs):  # type: (Sequence[np.ndarray], Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]
    """Covariance-weighted combination of independent Gaussian estimates."""
    info = np.zeros((2, 2))
    vec = np.zeros(2)
    for m, c in zip(means, covs):
        inv = np.linalg.inv(c)
        info += inv
        vec += inv.dot(m)
    cov = np.linalg.inv(info)
    return cov.dot(vec), 0.5 * (cov + cov.T)


def covariance_intersection(means, covs):  # type: (Sequence[np.ndarray], Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]
    """Pairwise covariance intersection with trace-minimising weights.

    Consistent under unknown cross-correlation between reports, at the price
    of a larger fused covariance than information fusion. Reports are folded
    in a canonical order, so the result does not depend on argument order.
    """
    order = sorted(range(len(means)), key=lambda k: (tuple(np.ravel(means[k])), tuple(np.ravel(covs[k]))))
    means = [np.asarray(means[k], dtype=np.float64) for k in order]
    covs = [np.asarray(covs[k], dtype=np.float64) for k in order]
    mean, cov = means[0].copy(), covs[0].copy()
    for m_i, c_i in zip(means[1:], covs[1:]):
        inv_a, inv_b = np.linalg.inv(cov), np.linalg.inv(c_i)

        def fused_trace(w):  # type: (float) -> float
            return float(np.trace(np.linalg.inv(w * inv_a + (1.0 - w) * inv_b)))

        w = float(minimize_scalar(fused_trace, bounds=(0.0, 1.0), method='bounded').x)
        info = w * inv_a + (1.0 - w) * inv_b
        new_cov = np.linalg.inv(info)
        mean = new_cov.dot(w * inv_a.dot(mean) + (1.0 - w) * inv_b.dot(m_i))
        cov = 0.5 * (new_cov + new_cov.T)
    return mean, cov


class FusedFeature(object):
    """One ORF-Map entry and the reports it was fused from."""

    def __init__(self, id, kind):  # type: (Text, Text) -> None
        self.id = id
        self.kind = kind
        self.contributions = {}  # type: Dict[Tuple[int, Text], Contribution]
        self.mean = np.zeros(2)
        self.covariance = np.eye(2)
        self.confidence = 0.0

    @property
    def contributors(self):  # type: () -> List[int]
        return sorted(set(reporter for reporter, _ in self.contributions))

    def refit(self, rule='information'):  # type: (Text) -> None
        keys = sorted(self.contributions)
        means = [self.contributions[k].mean for k in keys]
        covs = [self.contributions[k].covariance for k in keys]
        if rule == 'ci':
            self.mean, self.covariance = covariance_intersection(means, covs)
        else:
            self.mean, self.covariance = information_fusion(means, covs)
        miss = 1.0
        for k in keys:
            miss *= 1.0 - self.contributions[k].confidence
        self.confidence = float(min(max(1.0 - miss, 0.0), 1.0))

    def to_feature(self):  # type: () -> Feature
        return Feature(self.id, self.kind, self.mean.copy(), self.covariance.copy(), self.confidence)

    def copy(self):  # type: () -> FusedFeature
        out = FusedFeature(self.id, self.kind)
        out.contributions = dict(self.contributions)
        out.mean, out.covariance, out.confidence = self.mean.copy(), self.covariance.copy(), self.confidence
        return out

    def __repr__(self):  # type: () -> Text
        return 'FusedFeature({!r}, {}, mean=({:.3f}, {:.3f}), confidence={:.3f}, contributors={})'.format(
            self.id, self.kind, self.mean[0], self.mean[1], self.confidence, self.contributors)


class ORFMap(object):
    """Cloud-side fused feature map. Uploads are applied one at a time."""

    def __init__(self, fusion='information', gate=FUSION_GATE):  # type: (Text, float) -> None
        if fusion not in FUSION_RULES:
            raise ConfigurationError('Unknown fusion rule {!r}, expected one of {}'.format(fusion, FUSION_RULES))
        self.fusion = fusion
        self.gate = float(gate)
        self.features = []  # type: List[FusedFeature]
        self.version = 0
        self.rejected = 0
        self.next_id = 0

    def copy(self):  # type: () -> ORFMap
        out = ORFMap(self.fusion, self.gate)
        out.features = [f.copy() for f in self.features]
        out.version, out.rejected, out.next_id = self.version, self.rejected, self.next_id
        return out

    def _new_feature(self, kind):  # type: (Text) -> FusedFeature
        f = FusedFeature('orf-{}'.format(self.next_id), kind)
        self.next_id += 1
        self.features.append(f)
        return f

    def snapshot(self, epoch):  # type: (int) -> List[OrfSnapshotRow]
        return [OrfSnapshotRow(epoch, self.version, f.id, f.kind, float(f.mean[0]), float(f.mean[1]),
                               float(f.covariance[0, 0]), float(f.covariance[0, 1]),
                               float(f.covariance[1, 1]), f.confidence,
                               ' '.join(str(c) for c in f.contributors))
                for f in self.features]

    def __len__(self):  # type: () -> int
        return len(self.features)

    def __repr__(self):  # type: () -> Text
        return 'ORFMap(version={}, features={}, rejected={})'.format(
            self.version, len(self.features), self.rejected)


def _mahalanobis2(mean_a, cov_a, mean_b, cov_b):  # type: (Any, Any, Any, Any) -> float
    d = np.asarray(mean_a, dtype=np.float64) - np.asarray(mean_b, dtype=np.float64)
    return float(d.dot(np.linalg.solve(np.asarray(cov_a) + np.asarray(cov_b), d)))


def _merge_close(orf):  # type: (ORFMap) -> None
    while True:
        best = None  # type: Any
        for i, a in enumerate(orf.features):
            for j in range(i + 1, len(orf.features)):
                b = orf.features[j]
                if a.kind != b.kind:
                    continue
                d2 = _mahalanobis2(a.mean, a.covariance, b.mean, b.covariance)
                if d2 <= orf.gate and (best is None or d2 < best[0]):
                    best = (d2, i, j)
        if best is None:
            return
        _, i, j = best
        keep, gone = orf.features[i], orf.features[j]
        keep.contributions.update(gone.contributions)
        keep.refit(orf.fusion)
        del orf.features[j]


def upload(orf, lrf):  # type: (ORFMap, Sequence[FeatureRecord]) -> ORFMap
    """Fuses one UE's report into a copy of ``orf``.

    A report that re-sends a (reporter, local feature id) already in the map
    replaces its earlier contribution. Other reports are matched to fused
    features of the same kind by a Mahalanobis gate, greedily in ascending
    distance; unmatched reports become new fused features. Records with a
    malformed covariance are rejected and counted.
    """
    out = orf.copy()
    fresh = []  # type: List[FeatureRecord]
    for rec in lrf:
        if not is_spd(rec.feature.covariance) or not 0.0 <= rec.confidence <= 1.0:
            out.rejected += 1
            logger.warning('Rejected ORF record %r from ue %s: malformed covariance or confidence',
                           rec.feature.id, rec.reporter)
            continue
        key = (rec.reporter, rec.feature.id)
        owner = [f for f in out.features if key in f.contributions]
        contribution = Contribution(rec.feature.mean.copy(), np.asarray(rec.feature.covariance, dtype=np.float64),
                                    float(rec.confidence), rec.report_epoch)
        if owner:
            owner[0].contributions[key] = contribution
            owner[0].refit(out.fusion)
        else:
            fresh.append(rec)

    candidates = []
    for ri, rec in enumerate(fresh):
        for fi, f in enumerate(out.features):
            if f.kind != rec.feature.kind:
                continue
            d2 = _mahalanobis2(rec.feature.mean, rec.feature.covariance, f.mean, f.covariance)
            if d2 <= out.gate:
                candidates.append((d2, ri, fi))
    candidates.sort()
    used_records, used_features = set(), set()
    matches = {}  # type: Dict[int, int]
    for d2, ri, fi in candidates:
        if ri in used_records or fi in used_features:
            continue
        used_records.add(ri)
        used_features.add(fi)
        matches[ri] = fi
    for ri, rec in enumerate(fresh):
        target = out.features[matches[ri]] if ri in matches else out._new_feature(rec.feature.kind)
        target.contributions[(rec.reporter, rec.feature.id)] = Contribution(
            rec.feature.mean.copy(), np.asarray(rec.feature.covariance, dtype=np.float64),
            float(rec.confidence), rec.report_epoch)
        target.refit(out.fusion)
    _merge_close(out)
    out.version += 1
    return out


def download(orf, region, threshold=SERVE_THRESHOLD):  # type: (ORFMap, Any, float) -> List[Feature]
    """Fused features inside ``region`` above ``threshold``, most confident first."""
    r = Rect(*region)
    picked = [f for f in orf.features
              if f.confidence > threshold and r.xmin <= f.mean[0] <= r.xmax and r.ymin <= f.mean[1] <= r.ymax]
    picked.sort(key=lambda f: (-f.confidence, f.id))
    return [f.to_feature() for f in picked]


def download_region(env):  # type: (Environment) -> Rect
    """Room bounds grown by the room diagonal on every side.

    First-order VAs of anchors inside the room mirror across walls inside it,
    so they lie within one diagonal of the bounds.
    """
    b, d = env.bounds, env.diagonal()
    return Rect(b.xmin - d, b.ymin - d, b.xmax + d, b.ymax + d)


def lrf_records(engine, epoch, threshold=UPLOAD_THRESHOLD):  # type: (SlamEngine, int, float) -> List[FeatureRecord]
    """A UE's local map as upload records; confidence is the existence probability."""
    return [FeatureRecord(f.copy(), engine.ue_id, epoch, f.existence)
            for f in engine.features if f.existence > threshold]


class FrameSchedule(object):
    """When each UE enters and how often local maps are uploaded."""

    def __init__(self, entering_time, upload_period=5, download_on_entry=True):
        # type: (Dict[int, int], Optional[int], bool) -> None
        for ue_id, t in entering_time.items():
            if int(t) < 1:
                raise ConfigurationError('Entering time of ue {} must be >= 1, got {}'.format(ue_id, t))
        if upload_period is not None and int(upload_period) < 1:
            raise ConfigurationError('upload_period must be >= 1 or None, got {}'.format(upload_period))
        self.entering_time = dict((int(k), int(v)) for k, v in entering_time.items())
        self.upload_period = None if upload_period is None else int(upload_period)
        self.download_on_entry = bool(download_on_entry)

    def uploads_at(self, epoch):  # type: (int) -> bool
        return self.upload_period is not None and epoch % self.upload_period == 0

    def __eq__(self, other):  # type: (Any) -> bool
        return isinstance(other, FrameSchedule) and self.__dict__ == other.__dict__

    def __ne__(self, other):  # type: (Any) -> bool
        return not self == other

    def __repr__(self):  # type: () -> Text
        return 'FrameSchedule(entering_time={}, upload_period={}, download_on_entry={})'.format(
            self.entering_time, self.upload_period, self.download_on_entry)


def run_cohort(env,  # type: Environment
               schedule,  # type: FrameSchedule
               tracks,  # type: Dict[int, Sequence[Any]]
               cfg,  # type: SlamConfig
               streams,  # type: RngStreams
               noise=None,  # type: Optional[NoiseProfile]
               horizon=None,  # type: Optional[int]
               crowdsourcing=True,  # type: bool
               fusion='information',  # type: Text
               codebook=None,  # type: Optional[BeamCodebook]
               ospa_params=None,  # type: Optional[OspaParams]
               include_scatterers=True,  # type: bool
               clock_biases=None,  # type: Optional[Dict[int, float]]
               orientations=None,  # type: Optional[Dict[int, float]]
               imu=None,  # type: Optional[ImuConfig]
               ):  # type: (...) -> CohortResult
    """Runs every scheduled UE from its entering time to the horizon.

    Within an epoch UEs step in ascending id; uploads follow in the same
    order. With ``crowdsourcing`` off no upload or download happens, so each
    UE reproduces its independent run exactly. With ``imu`` every UE predicts
    from its own simulated odometry.
    """
    if noise is None:
        noise = NoiseProfile()
    if horizon is None:
        horizon = max(schedule.entering_time[u] + len(tracks[u]) - 1 for u in schedule.entering_time)
    runners = {}  # type: Dict[int, UeRunner]
    for ue_id in sorted(schedule.entering_time):
        if ue_id not in tracks:
            raise ConfigurationError('No track for scheduled ue {}'.format(ue_id))
        entering = schedule.entering_time[ue_id]
        needed = horizon - entering + 1
        if len(tracks[ue_id]) < needed:
            raise ConfigurationError('Track of ue {} has {} points, needs {} to reach epoch {}'.format(
                ue_id, len(tracks[ue_id]), needed, horizon))
        track = list(tracks[ue_id])[:needed]
        controls = imu_controls(track, imu, streams, ue_id) if imu is not None else None
        runners[ue_id] = UeRunner(env, track, cfg, noise, streams, ue_id, entering,
                                  codebook, ospa_params, include_scatterers,
                                  (clock_biases or {}).get(ue_id, 0.0), (orientations or {}).get(ue_id, 0.0),
                                  controls)
    orf = ORFMap(fusion)
    history = []  # type: List[Tuple[int, int, int]]
    snapshots = []  # type: List[OrfSnapshotRow]
    rows = []  # type: List[TrackRow]
    for epoch in range(1, horizon + 1):
        for ue_id in sorted(runners):
            runner = runners[ue_id]
            if not runner.active(epoch):
                continue
            legacy = []  # type: List[Feature]
            if crowdsourcing and schedule.download_on_entry and runner.engine is None:
                legacy = download(orf, download_region(env))
            rows.append(runner.advance(epoch, legacy))
        if crowdsourcing and schedule.uploads_at(epoch):
            for ue_id in sorted(runners):
                engine = runners[ue_id].engine
                if engine is not None and runners[ue_id].active(epoch):
                    orf = upload(orf, lrf_records(engine, epoch))
            history.append((epoch, orf.version, len(orf)))
            snapshots.extend(orf.snapshot(epoch))
            logger.info('epoch %d: ORF version %d with %d features', epoch, orf.version, len(orf))
    return CohortResult(rows, history, snapshots, orf)
