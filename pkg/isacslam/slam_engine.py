# SPDX-License-Identifier: Apache-2.0

"""Particle belief-propagation SLAM over the UE state and a feature map.

The UE posterior is a weighted particle cloud over

    [x, y, vx, vy, clock_bias * c, orientation]

(clock bias is carried in meters). The map is one Gaussian per feature with
a Bernoulli existence probability, conditioned on the weighted-mean UE state.
Data association is probabilistic: per-epoch sum-product message passing
between features and measurements, with a clutter and a new-feature column.
"""
from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
from __future__ import unicode_literals

import logging
import math
from collections import namedtuple

import numpy as np  # type: ignore
from scipy.special import logsumexp  # type: ignore
from scipy.stats import chi2  # type: ignore
from typing import Any, Dict, List, Optional, Sequence, Text, Tuple
from typing_extensions import Literal

from isacslam.errors import ConfigurationError, InvalidMeasurementError
from isacslam.geometry import C, Point2, wrap_angle, bearing, distance
from isacslam.measurement import Measurement, NoiseProfile, UEState
from isacslam.rng import RngStreams

logger = logging.getLogger(__name__)

FeatureKind = Literal['PA', 'VA', 'scatterer']
SlamMode = Literal['passive_known_pa', 'hybrid']

KINDS = ('PA', 'VA', 'scatterer')
MODES = ('passive_known_pa', 'hybrid')
MEASUREMENT_KEYS = ('AOA', 'AOD', 'TOA')
ANGLE_KEYS = ('AOA', 'AOD')

# state layout
X, Y, VX, VY, CB, ORI = range(6)
STATE_DIM = 6

MIN_MISS = 1e-12
KNOWN_PA_VARIANCE = 1e-6
JACOBIAN_STEP = 1e-6

Particle = namedtuple('Particle', ['state', 'weight'])

ProcessNoise = namedtuple('ProcessNoise', ['accel_std', 'clock_std', 'orientation_std', 'control_std'])
ProcessNoise.__new__.__defaults__ = (0.1, 0.0, 0.0, 0.05)

Association = namedtuple('Association', ['probabilities', 'feature_ids'])

StepRecord = namedtuple('StepRecord', ['epoch', 'position', 'covariance_trace', 'n_features',
                                       'log_likelihood', 'underflow'])


class SlamConfig(object):
    """Knobs of one SLAM instance.

    Thresholds follow the usual BP-SLAM defaults: the gate is a chi-square
    value for 2 degrees of freedom (13.8 ~ 99.9 %) and is rescaled to the
    dimension of each measurement; births need a new-feature mass above
    ``birth_threshold``; features below ``prune_threshold`` are removed and
    missed features inside the field of view decay by ``survival``.
    """

    def __init__(self,
                 n_particles=2000,  # type: int
                 process_noise=None,  # type: Optional[ProcessNoise]
                 gate=13.8,  # type: float
                 birth_threshold=0.5,  # type: float
                 prune_threshold=1e-3,  # type: float
                 survival=0.97,  # type: float
                 mode='passive_known_pa',  # type: Text
                 measurements=('AOA', 'TOA'),  # type: Sequence[Text]
                 fov=2.0 * math.pi,  # type: float
                 bp_iterations=20,  # type: int
                 bp_tolerance=1e-6,  # type: float
                 min_sigma_angle=1e-3,  # type: float
                 min_sigma_range=1e-3,  # type: float
                 initial_position_std=0.1,  # type: float
                 initial_velocity_std=0.05,  # type: float
                 initial_clock_std=0.0,  # type: float
                 initial_orientation_std=0.0,  # type: float
                 birth_existence=0.5,  # type: float
                 new_feature_rate=2.0,  # type: float
                 clutter_floor=0.01,  # type: float
                 clutter_range=30.0,  # type: float
                 soft_min=1e-3,  # type: float
                 ekf_refinement=True,  # type: bool
                 ekf_iterations=3,  # type: int
                 roughening=0.2,  # type: float
                 scatterer_births=False,  # type: bool
                 pa_init_std=0.5,  # type: float
                 known_pa_variance=KNOWN_PA_VARIANCE,  # type: float
                 min_triangulation_angle=math.radians(2.0),  # type: float
                 ):  # type: (...) -> None
        self.n_particles = int(n_particles)
        self.process_noise = process_noise if process_noise is not None else ProcessNoise()
        self.gate = float(gate)
        self.birth_threshold = float(birth_threshold)
        self.prune_threshold = float(prune_threshold)
        self.survival = float(survival)
        self.mode = mode
        self.measurements = tuple(k.upper() for k in measurements)
        self.fov = float(fov)
        self.bp_iterations = int(bp_iterations)
        self.bp_tolerance = float(bp_tolerance)
        self.min_sigma_angle = float(min_sigma_angle)
        self.min_sigma_range = float(min_sigma_range)
        self.initial_position_std = float(initial_position_std)
        self.initial_velocity_std = float(initial_velocity_std)
        self.initial_clock_std = float(initial_clock_std)
        self.initial_orientation_std = float(initial_orientation_std)
        self.birth_existence = float(birth_existence)
        self.new_feature_rate = float(new_feature_rate)
        self.clutter_floor = float(clutter_floor)
        self.clutter_range = float(clutter_range)
        self.soft_min = float(soft_min)
        self.ekf_refinement = bool(ekf_refinement)
        self.ekf_iterations = int(ekf_iterations)
        self.roughening = float(roughening)
        self.scatterer_births = bool(scatterer_births)
        self.pa_init_std = float(pa_init_std)
        self.known_pa_variance = float(known_pa_variance)
        self.min_triangulation_angle = float(min_triangulation_angle)
        self.check()

    def check(self):  # type: () -> None
        if self.n_particles < 1:
            raise ConfigurationError('n_particles must be >= 1, got {}'.format(self.n_particles))
        for name in ('gate', 'birth_threshold', 'prune_threshold', 'survival', 'fov',
                     'bp_tolerance', 'min_sigma_angle', 'min_sigma_range', 'clutter_floor',
                     'clutter_range', 'new_feature_rate'):
            if not getattr(self, name) > 0:
                raise ConfigurationError('{} must be positive, got {}'.format(name, getattr(self, name)))
        if self.mode not in MODES:
            raise ConfigurationError('Unknown SLAM mode {!r}, expected one of {}'.format(self.mode, MODES))
        unknown = [k for k in self.measurements if k not in MEASUREMENT_KEYS]
        if unknown or not self.measurements:
            raise ConfigurationError('Measurement set must be a non-empty subset of {}, got {}'.format(
                MEASUREMENT_KEYS, list(self.measurements)))

    @property
    def keys(self):  # type: () -> Tuple[Text, ...]
        return tuple(k for k in MEASUREMENT_KEYS if k in self.measurements)

    def replace(self, **kwargs):  # type: (**Any) -> SlamConfig
        values = dict(self.__dict__)
        values.update(kwargs)
        return SlamConfig(**values)

    def __eq__(self, other):  # type: (Any) -> bool
        return isinstance(other, SlamConfig) and self.__dict__ == other.__dict__

    def __ne__(self, other):  # type: (Any) -> bool
        return not self == other

    def __repr__(self):  # type: () -> Text
        return 'SlamConfig(mode={!r}, n_particles={}, measurements={})'.format(
            self.mode, self.n_particles, list(self.measurements))


class Feature(object):
    """A mapped PA, VA or scatterer with a Gaussian position belief."""

    def __init__(self,
                 id,  # type: Text
                 kind,  # type: Text
                 mean,  # type: Any
                 covariance,  # type: Any
                 existence=0.5,  # type: float
                 birth_epoch=0,  # type: int
                 last_seen=None,  # type: Optional[int]
                 pa_id=None,  # type: Optional[Text]
                 wall_id=None,  # type: Optional[Text]
                 fixed=False,  # type: bool
                 ):  # type: (...) -> None
        if kind not in KINDS:
            raise ValueError('Feature kind must be one of {}, got {!r}'.format(KINDS, kind))
        if not 0.0 <= existence <= 1.0:
            raise ValueError('Existence must lie in [0, 1], got {}'.format(existence))
        self.id = id
        self.kind = kind
        self.mean = np.array([mean[0], mean[1]], dtype=np.float64)
        self.covariance = np.array(covariance, dtype=np.float64).reshape(2, 2)
        self.existence = float(existence)
        self.birth_epoch = int(birth_epoch)
        self.last_seen = int(birth_epoch if last_seen is None else last_seen)
        self.pa_id = pa_id
        self.wall_id = wall_id
        self.fixed = bool(fixed)

    @property
    def position(self):  # type: () -> Point2
        return Point2(float(self.mean[0]), float(self.mean[1]))

    def copy(self):  # type: () -> Feature
        return Feature(self.id, self.kind, self.mean.copy(), self.covariance.copy(), self.existence,
                       self.birth_epoch, self.last_seen, self.pa_id, self.wall_id, self.fixed)

    def __repr__(self):  # type: () -> Text
        return 'Feature({!r}, {}, mean=({:.3f}, {:.3f}), existence={:.3f})'.format(
            self.id, self.kind, self.mean[0], self.mean[1], self.existence)


class ParticleSet(object):
    """Weighted particles over the 6-dimensional UE state."""

    def __init__(self, states, weights=None):  # type: (np.ndarray, Optional[np.ndarray]) -> None
        states = np.array(states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != STATE_DIM or states.shape[0] < 1:
            raise ValueError('Particle states must have shape (n, {}), got {}'.format(
                STATE_DIM, states.shape))
        self.states = states
        n = states.shape[0]
        if weights is None:
            self.weights = np.full(n, 1.0 / n)
        else:
            self.weights = np.array(weights, dtype=np.float64)
        self.underflow = False

    @classmethod
    def from_prior(cls, ue, cfg, rng):  # type: (UEState, SlamConfig, np.random.Generator) -> ParticleSet
        n = cfg.n_particles
        center = np.array([ue.position[0], ue.position[1], ue.velocity[0], ue.velocity[1],
                           C * ue.clock_bias, ue.orientation])
        stds = np.array([cfg.initial_position_std] * 2 + [cfg.initial_velocity_std] * 2 +
                        [C * cfg.initial_clock_std, cfg.initial_orientation_std])
        states = center + rng.normal(0.0, 1.0, size=(n, STATE_DIM)) * stds
        states[:, ORI] = wrap_angle(states[:, ORI])
        return cls(states)

    def __len__(self):  # type: () -> int
        return self.states.shape[0]

    def particle(self, i):  # type: (int) -> Particle
        return Particle(_to_ue_state(self.states[i]), float(self.weights[i]))

    def copy(self):  # type: () -> ParticleSet
        out = ParticleSet(self.states.copy(), self.weights.copy())
        out.underflow = self.underflow
        return out

    def mean(self):  # type: () -> np.ndarray
        m = self.weights.dot(self.states)
        m[ORI] = math.atan2(self.weights.dot(np.sin(self.states[:, ORI])),
                            self.weights.dot(np.cos(self.states[:, ORI])))
        return m

    def covariance(self):  # type: () -> np.ndarray
        d = self.states - self.mean()
        d[:, ORI] = wrap_angle(d[:, ORI])
        cov = (d * self.weights[:, None]).T.dot(d)
        return 0.5 * (cov + cov.T)

    def ess(self):  # type: () -> float
        return float(1.0 / np.sum(self.weights ** 2))

    def estimate(self):  # type: () -> UEState
        return _to_ue_state(self.mean())


def _to_ue_state(s):  # type: (np.ndarray) -> UEState
    return UEState(Point2(float(s[X]), float(s[Y])), (float(s[VX]), float(s[VY])),
                   float(s[CB]) / C, wrap_angle(float(s[ORI])))


def predict(particles, dt, process_noise, rng, control=None):
    # type: (ParticleSet, float, ProcessNoise, np.random.Generator, Optional[Any]) -> ParticleSet
    """Constant-velocity prediction with Gaussian acceleration noise.

    With ``control`` (an odometry displacement for this step) the position is
    advanced by the displacement plus ``control_std`` noise instead, and the
    velocity is set to displacement / dt. Clock bias and orientation follow
    random walks; weights are unchanged.
    """
    if not dt > 0:
        raise ValueError('dt must be positive, got {}'.format(dt))
    s = particles.states.copy()
    n = s.shape[0]
    if control is None:
        if process_noise.accel_std > 0:
            a = rng.normal(0.0, process_noise.accel_std, size=(n, 2))
        else:
            a = np.zeros((n, 2))
        s[:, X:Y + 1] += s[:, VX:VY + 1] * dt + 0.5 * a * dt * dt
        s[:, VX:VY + 1] += a * dt
    else:
        disp = np.tile(np.asarray(control, dtype=np.float64).reshape(1, 2), (n, 1))
        if process_noise.control_std > 0:
            disp = disp + rng.normal(0.0, process_noise.control_std, size=(n, 2))
        s[:, X:Y + 1] += disp
        s[:, VX:VY + 1] = disp / dt
    if process_noise.clock_std > 0:
        s[:, CB] += rng.normal(0.0, C * process_noise.clock_std * math.sqrt(dt), size=n)
    if process_noise.orientation_std > 0:
        s[:, ORI] = wrap_angle(s[:, ORI] + rng.normal(0.0, process_noise.orientation_std * math.sqrt(dt), size=n))
    out = ParticleSet(s, particles.weights.copy())
    return out


# ---- measurement model ---------------------------------------------------

def measurement_vector(m, keys):  # type: (Measurement, Sequence[Text]) -> np.ndarray
    values = {'AOA': m.aoa, 'AOD': m.aod, 'TOA': C * m.toa}
    return np.array([values[k] for k in keys], dtype=np.float64)


def measurement_covariance(noise, keys, cfg):  # type: (NoiseProfile, Sequence[Text], SlamConfig) -> np.ndarray
    stds = {'AOA': max(noise.sigma_aoa, cfg.min_sigma_angle),
            'AOD': max(noise.sigma_aod, cfg.min_sigma_angle),
            'TOA': max(C * noise.sigma_toa, cfg.min_sigma_range)}
    return np.diag([stds[k] ** 2 for k in keys])


def _wrap_residual(r, keys):  # type: (np.ndarray, Sequence[Text]) -> np.ndarray
    r = np.array(r, dtype=np.float64)
    for i, k in enumerate(keys):
        if k in ANGLE_KEYS:
            r[..., i] = wrap_angle(r[..., i])
    return r


def usable_keys(kind, pa_position, keys):  # type: (Text, Optional[Any], Sequence[Text]) -> Tuple[Text, ...]
    """Measurement components a feature can predict.

    VA departure angles and every scatterer component except the arrival
    angle depend on the PA, so they drop out while no PA is mapped.
    """
    if pa_position is not None or kind == 'PA':
        return tuple(keys)
    if kind == 'VA':
        return tuple(k for k in keys if k != 'AOD')
    return tuple(k for k in keys if k == 'AOA')


def model(states, kind, position, pa_position, keys):
    # type: (np.ndarray, Text, Any, Optional[Any], Sequence[Text]) -> np.ndarray
    """Predicted measurement components for every row of ``states``."""
    states = np.atleast_2d(states)
    p = states[:, X:Y + 1]
    f = np.array([position[0], position[1]], dtype=np.float64)
    d = f - p
    rng_f = np.hypot(d[:, 0], d[:, 1])
    cols = []
    for key in keys:
        if key == 'AOA':
            cols.append(wrap_angle(np.arctan2(d[:, 1], d[:, 0]) - states[:, ORI]))
        elif key == 'TOA':
            if kind == 'scatterer':
                leg = math.hypot(f[0] - pa_position[0], f[1] - pa_position[1])
                cols.append(rng_f + leg + states[:, CB])
            else:
                cols.append(rng_f + states[:, CB])
        elif key == 'AOD':
            if kind == 'PA':
                cols.append(np.arctan2(p[:, 1] - f[1], p[:, 0] - f[0]))
            elif kind == 'scatterer':
                cols.append(np.full(len(p), math.atan2(f[1] - pa_position[1], f[0] - pa_position[0])))
            else:
                cols.append(_va_departure(p, f, np.array([pa_position[0], pa_position[1]], dtype=np.float64)))
    return np.stack(cols, axis=1)


def _va_departure(p, va, pa):  # type: (np.ndarray, np.ndarray, np.ndarray) -> np.ndarray
    # The wall is the perpendicular bisector of PA-VA; the bounce lies on the UE-VA segment.
    axis = va - pa
    n = axis / max(np.hypot(axis[0], axis[1]), 1e-12)
    mid = 0.5 * (pa + va)
    toward = va - p
    denom = toward.dot(n)
    denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
    t = (mid - p).dot(n) / denom
    bounce = p + t[:, None] * toward
    return np.arctan2(bounce[:, 1] - pa[1], bounce[:, 0] - pa[0])


def state_jacobian(state, kind, position, pa_position, keys):
    # type: (np.ndarray, Text, Any, Optional[Any], Sequence[Text]) -> np.ndarray
    base = model(state, kind, position, pa_position, keys)[0]
    jac = np.zeros((len(keys), STATE_DIM))
    for i in range(STATE_DIM):
        shifted = np.array(state, dtype=np.float64).copy()
        shifted[i] += JACOBIAN_STEP
        diff = model(shifted, kind, position, pa_position, keys)[0] - base
        jac[:, i] = _wrap_residual(diff, keys) / JACOBIAN_STEP
    return jac


def feature_jacobian(state, kind, position, pa_position, keys):
    # type: (np.ndarray, Text, Any, Optional[Any], Sequence[Text]) -> np.ndarray
    base = model(state, kind, position, pa_position, keys)[0]
    jac = np.zeros((len(keys), 2))
    for i in range(2):
        shifted = np.array([position[0], position[1]], dtype=np.float64)
        shifted[i] += JACOBIAN_STEP
        diff = model(state, kind, shifted, pa_position, keys)[0] - base
        jac[:, i] = _wrap_residual(diff, keys) / JACOBIAN_STEP
    return jac


def anchor_position(feature, features):  # type: (Feature, Sequence[Feature]) -> Optional[np.ndarray]
    """Mean of the PA a VA or scatterer hangs off, if it is mapped."""
    if feature.kind == 'PA':
        return feature.mean
    pas = [f for f in features if f.kind == 'PA']
    for f in pas:
        if f.id == feature.pa_id:
            return f.mean
    if len(pas) == 1:
        return pas[0].mean
    return None


def in_field_of_view(state, feature, fov):  # type: (np.ndarray, Feature, float) -> bool
    if fov >= 2.0 * math.pi:
        return True
    rel = wrap_angle(bearing(state[X:Y + 1], feature.mean) - state[ORI])
    return abs(rel) <= fov / 2.0


def _clutter_density(keys, cfg):  # type: (Sequence[Text], SlamConfig) -> float
    density = 1.0
    for k in keys:
        density /= (2.0 * math.pi) if k in ANGLE_KEYS else cfg.clutter_range
    return density


def gate_threshold(gate, dof):  # type: (float, int) -> float
    """Chi-square gate for ``dof`` components at the confidence ``gate`` has for 2."""
    if dof == 2:
        return gate
    return float(chi2.ppf(chi2.cdf(gate, 2), dof))


def _gaussian_logpdf(residual, cov):  # type: (np.ndarray, np.ndarray) -> Tuple[np.ndarray, np.ndarray]
    """Log density and squared Mahalanobis distance of rows of ``residual``."""
    k = cov.shape[0]
    chol = np.linalg.cholesky(cov)
    sol = np.linalg.solve(chol, np.atleast_2d(residual).T)
    d2 = np.sum(sol ** 2, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (d2 + logdet + k * math.log(2.0 * math.pi)), d2


def predicted_moments(particles, feature, pa_position, keys, noise, cfg):
    # type: (ParticleSet, Feature, Optional[Any], Sequence[Text], NoiseProfile, SlamConfig) -> Tuple[np.ndarray, np.ndarray]
    """Predicted measurement mean and innovation covariance of one feature.

    The particle spread is marginalized by moment matching; the feature
    covariance enters through its Jacobian; R is the floored noise.
    """
    mean_state = particles.mean()
    center = model(mean_state, feature.kind, feature.mean, pa_position, keys)[0]
    h = model(particles.states, feature.kind, feature.mean, pa_position, keys)
    dev = _wrap_residual(h - center, keys)
    offset = particles.weights.dot(dev)
    zhat = _wrap_residual(center + offset, keys)
    dev = dev - offset
    spread = (dev * particles.weights[:, None]).T.dot(dev)
    g = feature_jacobian(mean_state, feature.kind, feature.mean, pa_position, keys)
    s = spread + g.dot(feature.covariance).dot(g.T) + measurement_covariance(noise, keys, cfg)
    return zhat, 0.5 * (s + s.T)


def _bp_marginals(beta, beta0, xi, iterations, tolerance):
    # type: (np.ndarray, np.ndarray, float, int, float) -> np.ndarray
    """Sum-product association between F features and M measurements.

    ``beta[f, m]`` is the likelihood ratio of feature f producing measurement
    m against clutter; ``beta0[f]`` the missed-detection weight; ``xi`` the
    clutter-plus-new-feature weight of a measurement. Returns (M, F + 2)
    marginals with clutter and new-feature columns last.
    """
    n_f, n_m = beta.shape
    out = np.zeros((n_m, n_f + 2))
    if n_m == 0:
        return out
    nu = np.ones((n_f, n_m))
    phi = np.zeros((n_f, n_m))
    for _ in range(iterations):
        phi = beta / (beta0[:, None] + _sum_others(beta * nu, axis=1))
        new_nu = 1.0 / (xi + _sum_others(phi, axis=0))
        delta = float(np.max(np.abs(new_nu - nu))) if n_f else 0.0
        nu = new_nu
        if delta < tolerance:
            break
    phi = beta / (beta0[:, None] + _sum_others(beta * nu, axis=1))
    denom = xi + phi.sum(axis=0)
    out[:, :n_f] = (phi / denom[None, :]).T
    out[:, n_f] = 1.0 / denom
    out[:, n_f + 1] = (xi - 1.0) / denom
    bad = ~np.all(np.isfinite(out), axis=1)
    if np.any(bad):
        logger.debug('Association rows %s not finite; assigned to clutter', np.flatnonzero(bad).tolist())
        out[bad] = 0.0
        out[bad, n_f] = 1.0
    return out


def _sum_others(a, axis):  # type: (np.ndarray, int) -> np.ndarray
    """Sum along ``axis`` leaving each entry out, built from exclusive prefix and suffix sums."""
    if a.shape[axis] == 0:
        return np.zeros_like(a)
    a = np.moveaxis(a, axis, -1)
    zero = np.zeros(a.shape[:-1] + (1,))
    before = np.concatenate([zero, np.cumsum(a[..., :-1], axis=-1)], axis=-1)
    after = np.concatenate([np.cumsum(a[..., :0:-1], axis=-1)[..., ::-1], zero], axis=-1)
    return np.moveaxis(before + after, -1, axis)


def associate(particles, features, measurements, cfg, noise):
    # type: (ParticleSet, Sequence[Feature], Sequence[Measurement], SlamConfig, NoiseProfile) -> Association
    """Probabilistic data association for one epoch.

    Returns an (M, F + 2) row-stochastic matrix: one column per feature in
    ``features`` order, then clutter, then new feature.
    """
    keys = cfg.keys
    lam = max(noise.clutter_rate, cfg.clutter_floor)
    n_f, n_m = len(features), len(measurements)
    beta = np.zeros((n_f, n_m))
    beta0 = np.ones(n_f)
    mean_state = particles.mean()
    for fi, f in enumerate(features):
        pa = anchor_position(f, features)
        fkeys = usable_keys(f.kind, pa, keys)
        pd = noise.detection_probability if in_field_of_view(mean_state, f, cfg.fov) else 0.0
        beta0[fi] = max(1.0 - f.existence * pd, MIN_MISS)
        if not fkeys or pd <= 0 or f.existence <= 0 or n_m == 0:
            continue
        zhat, s = predicted_moments(particles, f, pa, fkeys, noise, cfg)
        kappa = lam * _clutter_density(fkeys, cfg)
        threshold = gate_threshold(cfg.gate, len(fkeys))
        residuals = _wrap_residual(np.array([measurement_vector(m, fkeys) for m in measurements]) - zhat,
                                   fkeys)
        logpdf, d2 = _gaussian_logpdf(residuals, s)
        ratio = f.existence * pd * np.exp(logpdf) / kappa
        beta[fi] = np.where(d2 <= threshold, ratio, 0.0)
    xi = 1.0 + cfg.new_feature_rate / lam
    probabilities = _bp_marginals(beta, beta0, xi, cfg.bp_iterations, cfg.bp_tolerance)
    return Association(probabilities, [f.id for f in features])


# ---- update ---------------------------------------------------------------

def systematic_resample(weights, rng):  # type: (np.ndarray, np.random.Generator) -> np.ndarray
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.clip(np.searchsorted(cumulative, positions), 0, n - 1)


def _sqrtm(cov):  # type: (np.ndarray) -> Tuple[np.ndarray, np.ndarray]
    """Symmetric square root and its pseudo-inverse."""
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    vals = np.clip(vals, 0.0, None)
    root = np.sqrt(vals)
    tol = max(vals.max(), 0.0) * 1e-12 if vals.size else 0.0
    inv = np.where(vals > tol, 1.0 / np.where(root > 0, root, 1.0), 0.0)
    return (vecs * root).dot(vecs.T), (vecs * inv).dot(vecs.T)


def _hard_associations(assoc, n_features, threshold=0.5):  # type: (Association, int, float) -> List[Tuple[int, int]]
    out = []
    for mi, row in enumerate(assoc.probabilities):
        if n_features == 0:
            continue
        fi = int(np.argmax(row[:n_features]))
        if row[fi] > threshold:
            out.append((mi, fi))
    return out


def refine_state(prior_mean, prior_cov, features, measurements, pairs, noise, cfg):
    # type: (np.ndarray, np.ndarray, Sequence[Feature], Sequence[Measurement], Sequence[Tuple[int, int]], NoiseProfile, SlamConfig) -> Tuple[np.ndarray, np.ndarray]
    """Iterated EKF update of the UE state against hard-associated measurements."""
    blocks = []
    for mi, fi in pairs:
        f = features[fi]
        pa = anchor_position(f, features)
        fkeys = usable_keys(f.kind, pa, cfg.keys)
        if fkeys:
            blocks.append((measurements[mi], f, pa, fkeys))
    if not blocks:
        return prior_mean, prior_cov
    x = prior_mean.copy()
    gain = None  # type: Any
    jac = None  # type: Any
    for _ in range(max(cfg.ekf_iterations, 1)):
        residuals, jacs, covs = [], [], []
        for m, f, pa, fkeys in blocks:
            h = model(x, f.kind, f.mean, pa, fkeys)[0]
            hx = state_jacobian(x, f.kind, f.mean, pa, fkeys)
            g = feature_jacobian(x, f.kind, f.mean, pa, fkeys)
            residuals.append(_wrap_residual(measurement_vector(m, fkeys) - h, fkeys) + hx.dot(x - prior_mean))
            jacs.append(hx)
            covs.append(measurement_covariance(noise, fkeys, cfg) + g.dot(f.covariance).dot(g.T))
        jac = np.vstack(jacs)
        r = _block_diag(covs)
        s = jac.dot(prior_cov).dot(jac.T) + r
        gain = prior_cov.dot(jac.T).dot(np.linalg.inv(s))
        step = gain.dot(np.concatenate(residuals))
        x = prior_mean + step
        x[ORI] = wrap_angle(x[ORI])
    ikh = np.eye(STATE_DIM) - gain.dot(jac)
    cov = ikh.dot(prior_cov).dot(ikh.T) + gain.dot(r).dot(gain.T)
    return x, 0.5 * (cov + cov.T)


def _block_diag(blocks):  # type: (Sequence[np.ndarray]) -> np.ndarray
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def _moment_match(particles, mean, cov):  # type: (ParticleSet, np.ndarray, np.ndarray) -> ParticleSet
    """Affine map of the cloud onto the given first two moments."""
    m_p = particles.mean()
    root, _ = _sqrtm(cov)
    _, inv_root = _sqrtm(particles.covariance())
    a = root.dot(inv_root)
    d = particles.states - m_p
    d[:, ORI] = wrap_angle(d[:, ORI])
    states = mean + d.dot(a.T)
    states[:, ORI] = wrap_angle(states[:, ORI])
    out = ParticleSet(states, particles.weights)
    out.underflow = particles.underflow
    return out


def _roughen(states, coefficient, rng):  # type: (np.ndarray, float, np.random.Generator) -> np.ndarray
    n, dim = states.shape
    spread = states.max(axis=0) - states.min(axis=0)
    spread[ORI] = min(spread[ORI], 2.0 * math.pi)
    sigma = coefficient * spread * n ** (-1.0 / dim)
    if not np.any(sigma > 0):
        return states
    out = states + rng.normal(0.0, 1.0, size=states.shape) * sigma
    out[:, ORI] = wrap_angle(out[:, ORI])
    return out


def update(particles,  # type: ParticleSet
           features,  # type: Sequence[Feature]
           measurements,  # type: Sequence[Measurement]
           assoc,  # type: Association
           noise,  # type: NoiseProfile
           cfg,  # type: SlamConfig
           rng,  # type: np.random.Generator
           epoch=0,  # type: int
           ):  # type: (...) -> Tuple[ParticleSet, List[Feature], float]
    """Measurement update of the particles and the map.

    Particle weights are multiplied by the association-marginalized
    likelihood; the cloud is resampled (systematic) when the effective sample
    size drops below n/2, and moment matched to an iterated-EKF posterior
    when any measurement is confidently associated. Features then get a
    soft EKF update per associated measurement and a Bernoulli existence
    update.
    """
    keys = cfg.keys
    n_f = len(features)
    features = [f.copy() for f in features]
    prior_mean, prior_cov = particles.mean(), particles.covariance()
    lam = max(noise.clutter_rate, cfg.clutter_floor)
    loglik = np.zeros(len(particles))
    for mi, m in enumerate(measurements):
        q = assoc.probabilities[mi]
        terms = []
        # likelihoods are ratios against each feature's own clutter density, as in associate
        background = q[n_f] + q[n_f + 1]
        if background > 0:
            terms.append(np.full(len(particles), math.log(background)))
        for fi, f in enumerate(features):
            if q[fi] <= cfg.soft_min:
                continue
            pa = anchor_position(f, features)
            fkeys = usable_keys(f.kind, pa, keys)
            if not fkeys:
                continue
            g = feature_jacobian(prior_mean, f.kind, f.mean, pa, fkeys)
            r = measurement_covariance(noise, fkeys, cfg) + g.dot(f.covariance).dot(g.T)
            h = model(particles.states, f.kind, f.mean, pa, fkeys)
            residual = _wrap_residual(measurement_vector(m, fkeys) - h, fkeys)
            logpdf, _ = _gaussian_logpdf(residual, r)
            terms.append(math.log(q[fi]) + logpdf - math.log(lam * _clutter_density(fkeys, cfg)))
        if terms:
            loglik += logsumexp(np.vstack(terms), axis=0)

    with np.errstate(divide='ignore'):
        logw = np.log(particles.weights) + loglik
    total = logsumexp(logw) if np.any(np.isfinite(logw)) else -np.inf
    out = particles.copy()
    out.underflow = False
    if not np.isfinite(total):
        logger.warning('Particle weights underflowed at epoch %d; reinitialising uniform', epoch)
        out.weights = np.full(len(out), 1.0 / len(out))
        out.underflow = True
        log_likelihood = -np.inf
    else:
        out.weights = np.exp(logw - total)
        out.weights /= out.weights.sum()
        log_likelihood = float(total)

    if out.ess() < len(out) / 2.0:
        idx = systematic_resample(out.weights, rng)
        states = out.states[idx]
        if cfg.roughening > 0:
            states = _roughen(states, cfg.roughening, rng)
        underflow = out.underflow
        out = ParticleSet(states)
        out.underflow = underflow

    pairs = _hard_associations(assoc, n_f)
    if cfg.ekf_refinement and pairs:
        mean, cov = refine_state(prior_mean, prior_cov, features, measurements, pairs, noise, cfg)
        out = _moment_match(out, mean, cov)

    post_mean, post_cov = out.mean(), out.covariance()
    _update_features(features, measurements, assoc, post_mean, post_cov, noise, cfg, epoch)
    return out, features, log_likelihood


def _update_features(features, measurements, assoc, ue_mean, ue_cov, noise, cfg, epoch):
    # type: (List[Feature], Sequence[Measurement], Association, np.ndarray, np.ndarray, NoiseProfile, SlamConfig, int) -> None
    keys = cfg.keys
    n_f = len(features)
    pd = noise.detection_probability
    for fi, f in enumerate(features):
        q_total = 0.0
        pa = anchor_position(f, features)
        fkeys = usable_keys(f.kind, pa, keys)
        for mi, m in enumerate(measurements):
            q = float(assoc.probabilities[mi][fi]) if n_f else 0.0
            if q <= cfg.soft_min:
                continue
            q_total += q
            if f.fixed or not fkeys:
                continue
            h = model(ue_mean, f.kind, f.mean, pa, fkeys)[0]
            hx = state_jacobian(ue_mean, f.kind, f.mean, pa, fkeys)
            g = feature_jacobian(ue_mean, f.kind, f.mean, pa, fkeys)
            r = (measurement_covariance(noise, fkeys, cfg) + hx.dot(ue_cov).dot(hx.T)) / q
            s = g.dot(f.covariance).dot(g.T) + r
            k = f.covariance.dot(g.T).dot(np.linalg.inv(s))
            f.mean = f.mean + k.dot(_wrap_residual(measurement_vector(m, fkeys) - h, fkeys))
            ikg = np.eye(2) - k.dot(g)
            cov = ikg.dot(f.covariance).dot(ikg.T) + k.dot(r).dot(k.T)
            f.covariance = 0.5 * (cov + cov.T)
        q_total = min(q_total, 1.0)
        if q_total > cfg.soft_min:
            f.last_seen = epoch
        if f.fixed or not in_field_of_view(ue_mean, f, cfg.fov):
            continue
        detected = 1.0 - (1.0 - f.existence) * (1.0 - pd)
        f.existence = float(np.clip(q_total * detected + (1.0 - q_total) * cfg.survival * f.existence,
                                    0.0, 1.0))


# ---- births ---------------------------------------------------------------

PendingRay = namedtuple('PendingRay', ['origin', 'direction', 'aod', 'epoch'])


class BearingMemory(object):
    """Unexplained bearing-only rays kept one epoch for triangulation."""

    def __init__(self):  # type: () -> None
        self.rays = []  # type: List[PendingRay]

    def expire(self, epoch):  # type: (int) -> None
        self.rays = [r for r in self.rays if epoch - r.epoch <= 1]


def _ray_intersection(p, a, q, b):  # type: (Any, float, Any, float) -> Optional[np.ndarray]
    """Forward intersection of rays p + s(cos a, sin a) and q + t(cos b, sin b)."""
    d1 = np.array([math.cos(a), math.sin(a)])
    d2 = np.array([math.cos(b), math.sin(b)])
    mat = np.column_stack([d1, -d2])
    if abs(np.linalg.det(mat)) < 1e-9:
        return None
    s, t = np.linalg.solve(mat, np.array([q[0] - p[0], q[1] - p[1]]))
    if s <= 0 or t <= 0:
        return None
    return np.array([p[0], p[1]]) + s * d1


def _propagate(fn, x, cov):  # type: (Any, np.ndarray, np.ndarray) -> np.ndarray
    """Numerical first-order propagation of ``cov`` through ``fn``."""
    base = fn(x)
    jac = np.zeros((2, len(x)))
    for i in range(len(x)):
        shifted = x.copy()
        shifted[i] += JACOBIAN_STEP
        jac[:, i] = (fn(shifted) - base) / JACOBIAN_STEP
    out = jac.dot(cov).dot(jac.T)
    return 0.5 * (out + out.T)


def back_project(ue_mean, ue_cov, m, noise, cfg):
    # type: (np.ndarray, np.ndarray, Measurement, NoiseProfile, SlamConfig) -> Tuple[np.ndarray, np.ndarray]
    """Anchor position implied by one AOA+TOA measurement.

    The arrival ray is walked back for the clock-corrected path length; for a
    specular path this lands on the VA.
    """
    sa = max(noise.sigma_aoa, cfg.min_sigma_angle)
    sr = max(C * noise.sigma_toa, cfg.min_sigma_range)

    def fn(v):  # type: (np.ndarray) -> np.ndarray
        theta = v[6] + v[ORI]
        rho = v[7] - v[CB]
        return np.array([v[X] + rho * math.cos(theta), v[Y] + rho * math.sin(theta)])

    x = np.concatenate([ue_mean, [m.aoa, C * m.toa]])
    cov = _block_diag([ue_cov, np.diag([sa ** 2, sr ** 2])])
    return fn(x), _propagate(fn, x, cov) + 1e-12 * np.eye(2)


def reflect_project(ue_mean, ue_cov, m, pa, noise, cfg):
    # type: (np.ndarray, np.ndarray, Measurement, Any, NoiseProfile, SlamConfig) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]
    """VA and bounce point implied by one AOA+AOD measurement and a mapped PA.

    The bounce is where the arrival ray (from the UE) meets the departure ray
    (from the PA); the wall normal bisects the two directions there.
    """
    sa = max(noise.sigma_aoa, cfg.min_sigma_angle)
    sd = max(noise.sigma_aod, cfg.min_sigma_angle)
    bounce = _ray_intersection(ue_mean[X:Y + 1], m.aoa + ue_mean[ORI], pa, m.aod)
    if bounce is None:
        return None
    pa_vec = np.array([pa[0], pa[1]], dtype=np.float64)

    def fn(v):  # type: (np.ndarray) -> np.ndarray
        b = _ray_intersection(v[X:Y + 1], v[6] + v[ORI], pa_vec, v[7])
        if b is None:
            b = bounce
        d_in = np.array([math.cos(v[7]), math.sin(v[7])])
        d_out = -np.array([math.cos(v[6] + v[ORI]), math.sin(v[6] + v[ORI])])
        n = d_out - d_in
        n = n / max(np.hypot(n[0], n[1]), 1e-12)
        return pa_vec - 2.0 * (pa_vec - b).dot(n) * n

    x = np.concatenate([ue_mean, [m.aoa, m.aod]])
    cov = _block_diag([ue_cov, np.diag([sa ** 2, sd ** 2])])
    va = fn(x)
    return va, _propagate(fn, x, cov) + 1e-12 * np.eye(2), bounce


def birth_and_prune(features,  # type: Sequence[Feature]
                    measurements,  # type: Sequence[Measurement]
                    assoc,  # type: Association
                    particles,  # type: ParticleSet
                    cfg,  # type: SlamConfig
                    noise=None,  # type: Optional[NoiseProfile]
                    epoch=0,  # type: int
                    memory=None,  # type: Optional[BearingMemory]
                    ):  # type: (...) -> List[Feature]
    """Spawns features from unexplained measurements and drops unreliable ones.

    Back-projection depends on the measurement set: AOA+TOA walks the arrival
    ray back by the path length, AOA+AOD reflects through the mapped PA, and
    AOA alone triangulates against an unexplained ray of the previous epoch
    kept in ``memory``.

    Every birth is a VA: a single specular bounce seen from the UE is
    indistinguishable from a path emitted at the mirrored anchor. The bounce
    point of an AOA+AOD birth is added as a scatterer only with
    ``cfg.scatterer_births``. PA features come from initialisation alone.
    """
    if noise is None:
        noise = NoiseProfile()
    keys = cfg.keys
    n_f = len(features)
    ue_mean, ue_cov = particles.mean(), particles.covariance()
    out = [f for f in features if f.existence >= cfg.prune_threshold]
    pas = [f for f in out if f.kind == 'PA']
    pa = pas[0] if pas else None
    if memory is not None:
        memory.expire(epoch)
    fresh_rays = []  # type: List[PendingRay]
    for mi, m in enumerate(measurements):
        new_mass = float(assoc.probabilities[mi][n_f + 1])
        if not np.isfinite(new_mass) or new_mass <= cfg.birth_threshold:
            continue
        existence = min(cfg.birth_existence * new_mass, 1.0)
        fid = 'f{}.{}'.format(epoch, mi)
        if 'TOA' in keys and 'AOA' in keys:
            mean, cov = back_project(ue_mean, ue_cov, m, noise, cfg)
            out.append(Feature(fid, 'VA', mean, cov, existence, epoch,
                               pa_id=pa.id if pa is not None else None))
        elif 'AOD' in keys and 'AOA' in keys and pa is not None:
            projected = reflect_project(ue_mean, ue_cov, m, pa.mean, noise, cfg)
            if projected is None:
                continue
            va, cov, bounce = projected
            out.append(Feature(fid, 'VA', va, cov, existence, epoch, pa_id=pa.id))
            if cfg.scatterer_births:
                out.append(Feature(fid + 's', 'scatterer', bounce, cov, existence, epoch, pa_id=pa.id))
        elif 'AOA' in keys and memory is not None:
            ray = PendingRay(ue_mean[X:Y + 1].copy(), m.aoa + ue_mean[ORI],
                             m.aod if 'AOD' in keys else None, epoch)
            match = _triangulate(ray, memory, cfg)
            if match is None:
                fresh_rays.append(ray)
                continue
            point, old = match
            memory.rays.remove(old)
            spread = np.trace(ue_cov[X:Y + 1, X:Y + 1]) + (
                distance(ray.origin, point) * max(noise.sigma_aoa, cfg.min_sigma_angle)) ** 2
            out.append(Feature(fid, 'VA', point, spread * np.eye(2), existence, epoch,
                               pa_id=pa.id if pa is not None else None))
    if memory is not None:
        memory.rays.extend(fresh_rays)
    return out


def _triangulate(ray, memory, cfg):  # type: (PendingRay, BearingMemory, SlamConfig) -> Optional[Tuple[np.ndarray, PendingRay]]
    best = None  # type: Any
    for old in memory.rays:
        if old.epoch >= ray.epoch:
            continue
        if abs(wrap_angle(ray.direction - old.direction)) < cfg.min_triangulation_angle:
            continue
        point = _ray_intersection(old.origin, old.direction, ray.origin, ray.direction)
        if point is None:
            continue
        if ray.aod is not None and old.aod is not None:
            score = abs(wrap_angle(ray.aod - old.aod))
        else:
            score = abs(wrap_angle(ray.direction - old.direction))
        if best is None or score < best[0]:
            best = (score, point, old)
    if best is None:
        return None
    return best[1], best[2]


# ---- initialisation -------------------------------------------------------

def init_known_pa(pa_id, position, cfg):  # type: (Text, Any, SlamConfig) -> List[Feature]
    """Map of a passive-only run: the PA is known and held fixed."""
    return [Feature(pa_id, 'PA', position, cfg.known_pa_variance * np.eye(2), 1.0, 0, fixed=True)]


def init_hybrid(va_priors, pa_prior, mode='hybrid', epoch=0):
    # type: (Sequence[Any], Optional[Any], Text, int) -> List[Feature]
    """Initial map of a hybrid run.

    Arguments:
        va_priors: VaPrior records from active sensing.
        pa_prior: (id, mean, covariance) of the PA belief, or None.
        mode: 'hybrid' or 'passive_known_pa'.

    Returns:
        VA features at existence 0.5 followed by the PA feature. In
        passive_known_pa mode only the PA is returned, fixed, with the given
        covariance. Hybrid mode with no priors starts from an empty map.
    """
    if mode not in MODES:
        raise ConfigurationError('Unknown SLAM mode {!r}'.format(mode))
    if mode == 'passive_known_pa':
        if pa_prior is None:
            raise ConfigurationError('passive_known_pa mode needs the PA position')
        pa_id, mean, cov = pa_prior
        if cov is None:
            cov = KNOWN_PA_VARIANCE * np.eye(2)
        return [Feature(pa_id, 'PA', mean, cov, 1.0, epoch, fixed=True)]
    if not va_priors:
        logger.warning('Hybrid initialisation without VA priors; starting from an empty map')
        return []
    features = []
    for k, prior in enumerate(va_priors):
        features.append(Feature('va-{}-{}'.format(prior.wall_id, k), 'VA', prior.mean, prior.covariance,
                                0.5, epoch, pa_id=prior.pa_id, wall_id=prior.wall_id))
    if pa_prior is not None:
        pa_id, mean, cov = pa_prior
        features.append(Feature(pa_id, 'PA', mean, cov, 0.5, epoch))
    return features


def pa_prior_from_measurements(ue, measurements, noise, cfg, pa_id='pa-0'):
    # type: (UEState, Sequence[Measurement], NoiseProfile, SlamConfig, Text) -> Optional[Tuple[Text, np.ndarray, np.ndarray]]
    """PA belief from the earliest-arriving path, back-projected from the UE prior."""
    if 'TOA' not in cfg.keys or not measurements:
        return None
    first = min(measurements, key=lambda m: m.toa)
    if not first.toa > 0:
        raise InvalidMeasurementError('Earliest TOA must be positive, got {}'.format(first.toa))
    mean_state = np.array([ue.position[0], ue.position[1], ue.velocity[0], ue.velocity[1],
                           C * ue.clock_bias, ue.orientation])
    ue_cov = np.diag([cfg.initial_position_std ** 2] * 2 + [cfg.initial_velocity_std ** 2] * 2 +
                     [(C * cfg.initial_clock_std) ** 2, cfg.initial_orientation_std ** 2])
    mean, cov = back_project(mean_state, ue_cov, first, noise, cfg)
    return pa_id, mean, cov + cfg.pa_init_std ** 2 * np.eye(2)


# ---- engine ---------------------------------------------------------------

class SlamEngine(object):
    """One UE's SLAM instance: owns its particles, map and random streams."""

    def __init__(self,
                 cfg,  # type: SlamConfig
                 noise,  # type: NoiseProfile
                 initial_state,  # type: UEState
                 streams,  # type: RngStreams
                 ue_id=0,  # type: int
                 features=None,  # type: Optional[Sequence[Feature]]
                 ):  # type: (...) -> None
        self.cfg = cfg
        self.noise = noise
        self.streams = streams
        self.ue_id = int(ue_id)
        self.particles = ParticleSet.from_prior(initial_state, cfg, streams.get(ue_id, 0, 'slam-init'))
        self.features = list(features or [])
        self.memory = BearingMemory()
        self.history = []  # type: List[StepRecord]
        self.diagnostics = {'weight_underflow': 0}  # type: Dict[Text, int]

    def step(self, measurements, epoch, dt=1.0, control=None):
        # type: (Sequence[Measurement], int, float, Optional[Any]) -> StepRecord
        rng = self.streams.get(self.ue_id, epoch, 'slam')
        if self.history:
            self.particles = predict(self.particles, dt, self.cfg.process_noise, rng, control)
        assoc = associate(self.particles, self.features, measurements, self.cfg, self.noise)
        self.particles, features, loglik = update(self.particles, self.features, measurements, assoc,
                                                  self.noise, self.cfg, rng, epoch)
        if self.particles.underflow:
            self.diagnostics['weight_underflow'] += 1
        self.features = birth_and_prune(features, measurements, assoc, self.particles, self.cfg,
                                        self.noise, epoch, self.memory)
        mean = self.particles.mean()
        cov = self.particles.covariance()
        record = StepRecord(epoch, Point2(float(mean[X]), float(mean[Y])),
                            float(cov[X, X] + cov[Y, Y]), len(self.features), loglik,
                            self.particles.underflow)
        self.history.append(record)
        logger.debug('ue %d epoch %d: %d features, position (%.3f, %.3f)', self.ue_id, epoch,
                     len(self.features), mean[X], mean[Y])
        return record

    def estimate(self):  # type: () -> UEState
        return self.particles.estimate()

    def position_covariance(self):  # type: () -> np.ndarray
        return self.particles.covariance()[X:Y + 1, X:Y + 1]

    def map_estimate(self, threshold=0.5, kinds=KINDS):  # type: (float, Sequence[Text]) -> List[Feature]
        return [f for f in self.features if f.existence > threshold and f.kind in kinds]

    def inject(self, features, epoch):  # type: (Sequence[Feature], int) -> int
        """Adds downloaded legacy features not already explained by the local map."""
        added = 0
        threshold = gate_threshold(self.cfg.gate, 2)
        for k, incoming in enumerate(features):
            duplicate = False
            for f in self.features:
                if f.kind != incoming.kind:
                    continue
                d = incoming.mean - f.mean
                s = incoming.covariance + f.covariance
                if d.dot(np.linalg.solve(s, d)) <= threshold:
                    duplicate = True
                    break
            if duplicate:
                continue
            g = incoming.copy()
            g.id = 'orf{}.{}'.format(epoch, k)
            g.birth_epoch = g.last_seen = epoch
            self.features.append(g)
            added += 1
        return added
