import math
import logging
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from quadomain.errors import DomainError
from quadomain.geometry.domains import (
    Annulus, Ball, Disc, Domain, FiberedDomain, Product,
)
from quadomain.parallel import map_chunks, split_rows

logger = logging.getLogger(__name__)

MIN_ORDER = 4
EVAL_CHUNK = 65536


def gauss_unit(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def trapezoid_angles(count: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(count) / count


class VolumeRule:
    """Nodes and positive weights for Lebesgue integration over a domain.

    Tensor rules over product domains keep their factor rules and build the
    full node array only on first access; callers that can exploit the
    tensor structure should use ``factors`` directly.
    """

    def __init__(self, domain: Domain, nodes: Optional[np.ndarray] = None,
                 weights: Optional[np.ndarray] = None,
                 factors: Tuple['VolumeRule', ...] = ()):
        if nodes is None and not factors:
            raise DomainError("A volume rule needs nodes or factor rules")
        self.domain = domain
        self.factors = tuple(factors)
        if nodes is not None:
            self.__dict__['nodes'] = np.asarray(nodes, dtype=complex).reshape(len(weights), -1)
            self.__dict__['weights'] = np.asarray(weights, dtype=float)

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = self.factors[0].nodes
        for factor in self.factors[1:]:
            other = factor.nodes
            nodes = np.hstack([np.repeat(nodes, len(other), axis=0),
                               np.tile(other, (len(nodes), 1))])
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        weights = self.factors[0].weights
        for factor in self.factors[1:]:
            weights = np.outer(weights, factor.weights).ravel()
        return weights

    @property
    def size(self) -> int:
        if self.factors:
            return math.prod(f.size for f in self.factors)
        return len(self.weights)

    @property
    def is_tensor(self) -> bool:
        return bool(self.factors)

    def total_weight(self) -> float:
        if self.factors:
            return math.prod(f.total_weight() for f in self.factors)
        return float(np.sum(self.weights))

    def integrate(self, func: Callable[[np.ndarray], np.ndarray]) -> complex:
        """Integrate ``func`` (vectorized over an ``(N, n)`` node array)."""
        nodes, weights = self.nodes, self.weights

        def partial(rows: slice) -> complex:
            return complex(np.dot(weights[rows], func(nodes[rows])))

        return complex(sum(map_chunks(partial, split_rows(len(weights), EVAL_CHUNK))))

    def describe(self):
        return {'domain': self.domain.describe(), 'size': self.size,
                'factors': [f.describe() for f in self.factors]}


def _polar_rule(domain: Domain, center: complex, lo: float, hi: float,
                order: int, angular: int) -> VolumeRule:
    x, w = gauss_unit(order)
    rho = lo + (hi - lo) * x
    radial_w = (hi - lo) * w * rho
    theta = trapezoid_angles(angular)
    nodes = center + np.outer(rho, np.exp(1j * theta)).ravel()
    weights = np.repeat(radial_w, angular) * (2.0 * np.pi / angular)
    return VolumeRule(domain, nodes.reshape(-1, 1), weights)


def _ball_rule(domain: Ball, order: int, angular: int) -> VolumeRule:
    # conical product on the simplex of squared moduli t_i = |z_i|^2
    n = domain.n
    x, w = gauss_unit(order)
    grids = np.meshgrid(*([x] * n), indexing='ij')
    wgrids = np.meshgrid(*([w] * n), indexing='ij')
    xs = [g.ravel() for g in grids]
    weight = np.prod([g.ravel() for g in wgrids], axis=0)
    t = np.empty((len(weight), n))
    remaining = np.ones(len(weight))
    for k in range(n):
        t[:, k] = remaining * xs[k]
        weight = weight * (1.0 - xs[k]) ** (n - 1 - k)
        remaining = remaining * (1.0 - xs[k])
    weight = weight * 0.5 ** n * (2.0 * np.pi / angular) ** n

    phases = np.exp(1j * trapezoid_angles(angular))
    phase_grid = np.stack([g.ravel() for g in np.meshgrid(*([phases] * n), indexing='ij')], axis=1)
    moduli = np.sqrt(t)
    nodes = (moduli[:, None, :] * phase_grid[None, :, :]).reshape(-1, n)
    weights = np.repeat(weight, len(phase_grid))
    return VolumeRule(domain, nodes, weights)


def _fibered_rule(domain: FiberedDomain, order: int, angular: int) -> VolumeRule:
    s, ws = gauss_unit(order)
    t = domain.base_t(s)
    base_w = 0.5 * domain.base_dt(s) * ws * (2.0 * np.pi / angular)
    fiber_sq = domain.fiber_radius_sq_at(s)
    u, wu = gauss_unit(order)
    theta = trapezoid_angles(angular)
    phases = np.exp(1j * theta)

    z1 = np.sqrt(t)[:, None, None, None] * phases[None, :, None, None]
    z2 = np.sqrt(fiber_sq[:, None] * u[None, :])[:, None, :, None] * phases[None, None, None, :]
    z1, z2 = np.broadcast_arrays(z1, z2)
    fiber_w = 0.5 * fiber_sq[:, None] * wu[None, :] * (2.0 * np.pi / angular)
    weights = (base_w[:, None, None, None] * fiber_w[:, None, :, None]
               * np.ones((1, angular, 1, angular)))
    nodes = np.stack([z1.ravel(), z2.ravel()], axis=1)
    return VolumeRule(domain, nodes, weights.ravel())


def volume_rule(domain: Domain, order: int, angular_order: Optional[int] = None) -> VolumeRule:
    """Build a volume rule of the given radial order.

    Args:
        domain: Any supported domain kind
        order: Gauss-Legendre points per radial variable (at least 4)
        angular_order: Trapezoid points per angle; defaults to ``order``

    Returns:
        VolumeRule whose weights sum to the domain volume
    """
    if order < MIN_ORDER:
        raise DomainError(f"Volume rule order must be >= {MIN_ORDER}, got {order}")
    angular = order if angular_order is None else int(angular_order)
    if angular < 1:
        raise DomainError(f"Invalid angular order: {angular_order}")

    if isinstance(domain, Disc):
        return _polar_rule(domain, domain.center, 0.0, domain.radius, order, angular)
    if isinstance(domain, Annulus):
        lo, hi = domain.radial_range()
        return _polar_rule(domain, domain.center, lo, hi, order, angular)
    if isinstance(domain, Ball):
        return _ball_rule(domain, order, angular)
    if isinstance(domain, Product):
        return VolumeRule(domain, factors=tuple(
            volume_rule(f, order, angular_order) for f in domain.factors))
    if isinstance(domain, FiberedDomain):
        return _fibered_rule(domain, order, angular)
    raise DomainError(f"No volume rule for domain kind {domain.kind!r}")
