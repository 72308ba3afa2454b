# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

"""Null CDF and p-values of the correlation rebuilt from its permutation moments.

Two reconstructions of a distribution on a bounded interval are offered:

* ``hausdorff``: moment inversion on ``t = (rho + 1) / 2 in [0, 1]``. Node
  ``k / alpha`` receives the weight ``E[C(alpha, k) t^k (1 - t)^(alpha - k)]``,
  which only needs the moments of ``t`` up to ``alpha``. The result is a step
  CDF on ``alpha + 1`` nodes.
* ``legendre``: the density as a Legendre series of degree ``d`` on
  ``[-1, 1]``, whose coefficients are linear in the moments of ``rho``. The CDF
  is its exact integral, with negative lobes clipped.

Both report how much they had to correct to return a proper CDF.
"""

# pylint: disable=invalid-name

import logging
import math
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Legendre
from numpy.polynomial import legendre as L

from permcorr.core.dataset import Dataset, pearson_obs, spearman_obs
from permcorr.core.errors import PermCorrError_Range
from permcorr.core.moments import DEFAULT_ORDER, MomentVector, moment_vector
from permcorr.core.utils import accurate_sum


__all__ = [
    'UnitMoments', 'CdfEstimate', 'HausdorffCdf', 'LegendreCdf', 'PvalueEstimate',
    'to_unit_moments', 'hausdorff_cdf', 'legendre_cdf', 'tail_probability', 'moment_pvalue',
    'TAILS', 'RECONSTRUCTIONS'
]


LOGGER = logging.getLogger('permcorr.reconstruct')

TAILS = ('two', 'right', 'left')
RECONSTRUCTIONS = ('hausdorff', 'legendre')

# Node membership slack for the step CDF, so that atoms sitting on a node count as reached.
NODE_SLACK = 1e-12
ROOT_IMAGINARY_TOLERANCE = 1e-9
COEFFICIENT_TOLERANCE = 1e-15
SUPPORT_EDGE_SLACK = 1e-12


class UnitMoments(NamedTuple):
    """Moments ``mu[j] = E[t^j]``, ``j = 0..K``, of ``t = (rho + 1) / 2`` on ``[0, 1]``."""

    K: int
    mu: Tuple[float, ...]

    def is_valid(self, tolerance: float = 1e-12) -> bool:
        mu = self.mu
        if abs(mu[0] - 1.0) > tolerance:
            return False
        for j in range(self.K):
            if not -tolerance <= mu[j + 1] <= mu[j] + tolerance:
                return False
        return self.K < 2 or mu[2] >= mu[1] ** 2 - tolerance


class PvalueEstimate(NamedTuple):
    p: float
    method: str
    tail: str
    K: int
    rho_obs: float
    diagnostics: Dict[str, object] = {}

    def to_dict(self) -> dict:
        return {
            'rho_obs': self.rho_obs,
            'p': self.p,
            'method': self.method,
            'tail': self.tail,
            'diagnostics': dict(self.diagnostics, K=self.K),
        }


def _moment_values(mv: Union[MomentVector, Sequence[float]]) -> Tuple[float, ...]:
    if isinstance(mv, MomentVector):
        return tuple(mv.values)
    return tuple(float(value) for value in mv)


def to_unit_moments(mv: Union[MomentVector, Sequence[float]]) -> UnitMoments:
    """Transport moments of ``rho`` on ``[-1, 1]`` to moments of ``(rho + 1) / 2``."""

    values = _moment_values(mv)
    if len(values) == 0:
        raise PermCorrError_Range('no moments given')
    K = len(values) - 1
    mu = tuple(accurate_sum(math.comb(j, i) * values[i] for i in range(j + 1)) / 2 ** j
               for j in range(K + 1))
    return UnitMoments(K=K, mu=mu)


class CdfEstimate:
    """An estimated null CDF of the correlation on ``[-1, 1]``.

    Calling the estimate evaluates ``F(rho)``; :meth:`left_limit` evaluates
    ``F(rho-)``. ``correction`` is the size of the repair applied to make the
    raw reconstruction a proper CDF.
    """

    method = None

    def __init__(self, params: Dict[str, int], correction: float) -> None:
        self.params = dict(params)
        self.correction = float(correction)

    def __str__(self) -> str:
        return '{}({}, correction={:.3g})'.format(
            self.__class__.__name__,
            ', '.join('{}={}'.format(key, value) for key, value in sorted(self.params.items())),
            self.correction
        )

    __repr__ = __str__

    def __call__(self, rho):
        return self._evaluate(rho, left=False)

    def left_limit(self, rho):
        return self._evaluate(rho, left=True)

    def _evaluate(self, rho, left):
        raise NotImplementedError

    def diagnostics(self) -> Dict[str, object]:
        return dict(self.params, correction=self.correction)


class HausdorffCdf(CdfEstimate):
    method = 'hausdorff'

    def __init__(self, alpha: int, nodes: np.ndarray, correction: float) -> None:
        super().__init__({'alpha': alpha}, correction)
        self.alpha = alpha
        self.nodes = nodes

    def _evaluate(self, rho, left):
        scalar = np.ndim(rho) == 0
        t = (np.asarray(rho, dtype=np.float64) + 1.0) / 2.0
        scaled = self.alpha * t
        if left:
            index = np.ceil(scaled - NODE_SLACK).astype(np.int64) - 1
        else:
            index = np.floor(scaled + NODE_SLACK).astype(np.int64)
        values = np.where(index < 0, 0.0, self.nodes[np.clip(index, 0, self.alpha)])
        values = np.where(index > self.alpha, 1.0, values)
        return float(values) if scalar else values


def hausdorff_cdf(um: UnitMoments, alpha: int) -> HausdorffCdf:
    """Step CDF from the moments of ``t`` up to order ``alpha``.

    ``F(t) = sum_{k <= alpha t} sum_{j = k}^{alpha} C(alpha, j) C(j, k) (-1)^(j - k) mu[j]``.
    The cumulative node values are made monotone (running maximum) and clipped
    to ``[0, 1]``; the summed absolute change is reported as the correction.
    """

    if not 0 <= alpha <= um.K:
        raise PermCorrError_Range('inversion order must be in [0, {}], got {}'.format(um.K, alpha))

    weights = []
    for k in range(alpha + 1):
        terms = [math.comb(alpha - k, i) * (-1) ** i * um.mu[k + i] for i in range(alpha - k + 1)]
        weights.append(math.comb(alpha, k) * accurate_sum(terms))
    raw = np.array([accurate_sum(weights[:k + 1]) for k in range(alpha + 1)])
    nodes = np.clip(np.maximum.accumulate(raw), 0.0, 1.0)
    correction = float(np.sum(np.abs(nodes - raw)))
    nodes.setflags(write=False)
    LOGGER.debug('Hausdorff inversion alpha=%d, correction %.3g', alpha, correction)
    return HausdorffCdf(alpha, nodes, correction)


class LegendreCdf(CdfEstimate):
    method = 'legendre'

    def __init__(self, degree: int, density: Legendre) -> None:
        super().__init__({'degree': degree}, 0.0)
        self.degree = degree
        self.density = density
        self.antiderivative = density.integ()

        breaks = [-1.0, 1.0]
        if len(density.coef) > 1:
            for root in density.roots():
                if abs(root.imag) <= ROOT_IMAGINARY_TOLERANCE and -1.0 < root.real < 1.0:
                    breaks.append(float(root.real))
        self.breaks = np.unique(breaks)
        lower, upper = self.breaks[:-1], self.breaks[1:]
        self.positive = self.density((lower + upper) / 2.0) > 0.0
        masses = np.where(self.positive, self.antiderivative(upper) - self.antiderivative(lower), 0.0)
        self.cumulative = np.concatenate([[0.0], np.cumsum(masses)])
        self.total = float(self.cumulative[-1])
        # mass of the clipped negative lobes
        self.correction = self.total - float(self.antiderivative(1.0) - self.antiderivative(-1.0))

    def _evaluate(self, rho, left):
        scalar = np.ndim(rho) == 0
        rho = np.clip(np.asarray(rho, dtype=np.float64), -1.0, 1.0)
        segment = np.clip(np.searchsorted(self.breaks, rho, side='right') - 1, 0, len(self.positive) - 1)
        partial = self.antiderivative(rho) - self.antiderivative(self.breaks[segment])
        values = self.cumulative[segment] + np.where(self.positive[segment], partial, 0.0)
        values = np.clip(values / self.total, 0.0, 1.0)
        return float(values) if scalar else values


def legendre_cdf(mv: Union[MomentVector, Sequence[float]], degree: int) -> LegendreCdf:
    """CDF of the degree-``degree`` Legendre series matching the moments of ``rho``.

    ``c_j = (2j + 1) / 2 * E[P_j(rho)]`` with ``E[P_j(rho)]`` expanded over the
    power coefficients of ``P_j``. Negative density is clipped (its mass is the
    reported correction) and the result is renormalized to ``F(1) = 1``.
    """

    values = _moment_values(mv)
    K = len(values) - 1
    if not 0 <= degree <= K:
        raise PermCorrError_Range('series degree must be in [0, {}], got {}'.format(K, degree))

    coefficients = []
    for j in range(degree + 1):
        power = L.leg2poly([0.0] * j + [1.0])
        expectation = accurate_sum(float(power[i]) * values[i] for i in range(j + 1))
        coefficients.append((2 * j + 1) / 2.0 * expectation)
    cdf = LegendreCdf(degree, Legendre(coefficients).trim(tol=COEFFICIENT_TOLERANCE))
    LOGGER.debug('Legendre series degree=%d, clipped mass %.3g', degree, cdf.correction)
    return cdf


def tail_probability(cdf: CdfEstimate, rho_obs: float, tail: str = 'two') -> Tuple[float, float]:
    """``(p, raw)``: the tail probability clamped to ``[0, 1]`` and its unclamped value."""

    if tail == 'two':
        r = abs(rho_obs)
        raw = cdf(-r) + 1.0 - cdf.left_limit(r)
    elif tail == 'right':
        raw = 1.0 - cdf.left_limit(rho_obs)
    elif tail == 'left':
        raw = cdf(rho_obs)
    else:
        raise PermCorrError_Range('unknown tail {!r}, expected one of {}'.format(tail, TAILS))
    return min(max(raw, 0.0), 1.0), raw


def _reaches_support_edge(rho_obs: float, tail: str) -> bool:
    """Whether the tail event is ``|rho| >= 1`` (or its one-sided half)."""

    edge = 1.0 - SUPPORT_EDGE_SLACK
    if tail == 'two':
        return abs(rho_obs) >= edge
    if tail == 'right':
        return rho_obs >= edge
    return rho_obs <= -edge


def moment_pvalue(dataset: Dataset, K: int = DEFAULT_ORDER, method: str = 'legendre', tail: str = 'two',
                  mode: str = 'pearson', alpha: Optional[int] = None, degree: Optional[int] = None) -> PvalueEstimate:
    """Permutation p-value of the observed correlation from ``K`` exact moments.

    A continuous series puts no mass on ``rho = +-1``, so when the tail event
    only holds the edge of the support the Legendre method reads it off the
    step estimator of the same order instead (``diagnostics['estimator']``).
    """

    if method not in RECONSTRUCTIONS:
        raise PermCorrError_Range('unknown reconstruction {!r}, expected one of {}'.format(method, RECONSTRUCTIONS))
    if tail not in TAILS:
        raise PermCorrError_Range('unknown tail {!r}, expected one of {}'.format(tail, TAILS))

    rho_obs = spearman_obs(dataset) if mode == 'spearman' else pearson_obs(dataset)
    mv = moment_vector(dataset, K, mode=mode)
    estimator = method
    if method == 'legendre' and _reaches_support_edge(rho_obs, tail):
        estimator = 'hausdorff'
        LOGGER.debug('Observed correlation %r sits on the support edge, using the step estimator', rho_obs)
    if estimator == 'hausdorff':
        order = alpha if method == 'hausdorff' else degree
        cdf = hausdorff_cdf(to_unit_moments(mv), K if order is None else order)
    else:
        cdf = legendre_cdf(mv, K if degree is None else degree)

    p, raw = tail_probability(cdf, rho_obs, tail)
    diagnostics = cdf.diagnostics()
    diagnostics.update(n=dataset.n, mode=mode, clamped=(p != raw), raw_p=raw, estimator=estimator)
    return PvalueEstimate(p=p, method=method, tail=tail, K=K, rho_obs=rho_obs, diagnostics=diagnostics)
