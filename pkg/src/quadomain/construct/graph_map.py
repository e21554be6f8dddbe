import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, Optional

import numpy as np

from quadomain.differentiation import cauchy_derivative, cauchy_riemann_residual
from quadomain.errors import DomainError, PathError
from quadomain.geometry.domains import (
    DEFAULT_MARGIN, Disc, Domain, FiberedDomain, Product, as_points, multi_index,
)
from quadomain.geometry.lattices import PointSet, random_points
from quadomain.geometry.paths import canonical_path, path_length
from quadomain.span.element import SpanElement

logger = logging.getLogger(__name__)

PATH_TOL = 1e-10
SPOT_CHECKS = 16
DERIVATIVE_RADIUS = 0.01


def fiber_of(domain: Domain, zprime) -> Domain:
    """Planar domain swept by the last coordinate over fixed leading coordinates."""
    if isinstance(domain, Product):
        return domain.factors[-1]
    if isinstance(domain, FiberedDomain):
        return domain.fiber_domain(complex(np.atleast_1d(zprime)[0]))
    if domain.is_planar:
        return domain
    raise DomainError(f"{domain.kind} is not fibered over its leading coordinates")


def default_base_point(domain: Domain) -> complex:
    """``(inner + outer) / 2`` on the positive axis for annular fibers, the center otherwise."""
    fiber = domain.factors[-1] if isinstance(domain, Product) else domain
    if isinstance(domain, FiberedDomain):
        return 0j
    if isinstance(fiber, Disc):
        return fiber.center
    return fiber.center + 0.5 * (fiber.inner + fiber.outer)


class GraphMapBase(ABC):
    """Map ``f(z) = (z', g(z))`` on a fibered domain."""

    def __init__(self, domain: Domain, base: complex):
        self.domain = domain
        self.base = complex(base)

    @abstractmethod
    def g(self, points) -> np.ndarray:
        ...

    @abstractmethod
    def dg_dzn(self, points) -> np.ndarray:
        """``dg / dz_n``, the Jacobian determinant of ``f``."""

    def g_on(self, points: PointSet) -> np.ndarray:
        return self.g(points.points)

    def g_fiber(self, zprime, w) -> np.ndarray:
        """``g(z', w_k)`` for one fixed ``z'`` and a cloud of last coordinates."""
        zprime = np.atleast_1d(np.asarray(zprime, dtype=complex))
        w = np.asarray(w, dtype=complex).reshape(-1, 1)
        if isinstance(self.domain, Product):
            return self.g_on(PointSet(tuple(c.reshape(1, 1) for c in zprime) + (w,)))
        return self.g(np.hstack([np.broadcast_to(zprime, (len(w), len(zprime))), w]))

    def f(self, points) -> np.ndarray:
        pts, _ = as_points(points, self.domain.dimension)
        image = pts.copy()
        image[:, -1] = self.g(pts)
        return image

    def jacobian(self, points) -> np.ndarray:
        return self.dg_dzn(points)

    def derivative(self, points, beta) -> np.ndarray:
        """``d^beta g`` by Cauchy's formula on small polycircles."""
        beta = multi_index(beta, self.domain.dimension)
        if not any(beta):
            return self.g(points)
        pts, _ = as_points(points, self.domain.dimension)
        return cauchy_derivative(self.g, pts, beta, radius=DERIVATIVE_RADIUS)


class GraphMap(GraphMapBase):
    """Graph map whose last component integrates a span element along the fiber.

    ``g(z', z_n) = a + int_a^{z_n} v(z', lam) d lam``; it is recomputed from the
    span terms on demand and never stored as samples.
    """

    def __init__(self, domain: Domain, v: SpanElement, base: complex, path_tol: float = PATH_TOL):
        super().__init__(domain, base)
        self.v = v
        self.path_tol = path_tol

    def g(self, points) -> np.ndarray:
        return self.base + self.v.antiderivative(points, self.base, tol=self.path_tol * 1e-2)

    def g_on(self, points: PointSet) -> np.ndarray:
        return self.base + self.v.antiderivative_on(points, self.base, tol=self.path_tol * 1e-2)

    def alternate_g(self, points) -> np.ndarray:
        return self.base + self.v.antiderivative(points, self.base, tol=self.path_tol * 1e-2, alternate=True)

    def dg_dzn(self, points) -> np.ndarray:
        return self.v.evaluate(points)

    def derivative(self, points, beta) -> np.ndarray:
        """``d^beta g``; orders in ``z_n`` reduce to derivatives of ``v``."""
        beta = multi_index(beta, self.domain.dimension)
        if beta[-1] > 0:
            return self.v.evaluate(points, beta[:-1] + (beta[-1] - 1,))
        values = self.v.antiderivative(points, self.base, beta, tol=self.path_tol * 1e-2)
        return values + (self.base if not any(beta) else 0.0)

    def to_dict(self) -> Dict:
        return {'domain': self.domain.describe(), 'base_point': [self.base.real, self.base.imag],
                'integrand': self.v.to_dict()}


class ExplicitGraphMap(GraphMapBase):
    """Graph map with a closed-form last component (checks and experiments)."""

    def __init__(self, domain: Domain, g: Callable[[np.ndarray], np.ndarray],
                 dg: Callable[[np.ndarray], np.ndarray], base: complex = 0j):
        super().__init__(domain, base)
        self._g = g
        self._dg = dg

    def g(self, points) -> np.ndarray:
        pts, _ = as_points(points, self.domain.dimension)
        return self._g(pts)

    def dg_dzn(self, points) -> np.ndarray:
        pts, _ = as_points(points, self.domain.dimension)
        return self._dg(pts)


def antiderivative(v: SpanElement, base: complex, z, tol: float = PATH_TOL, check: bool = True) -> np.ndarray:
    """``g(z) = a + int_a^{z_n} v(z', lam) d lam`` along the canonical path.

    With ``check`` the alternate path is integrated too; disagreement above
    ``tol`` means ``v`` still has a period and raises PathError.
    """
    values = base + v.antiderivative(z, base, tol=tol * 1e-2)
    if check:
        other = base + v.antiderivative(z, base, tol=tol * 1e-2, alternate=True)
        gap = float(np.max(np.abs(values - other), initial=0.0))
        if gap > tol:
            raise PathError(f"Path independence violated by {gap:.2e}; residual periods remain")
    return values


def sample_points(domain: Domain, count: int = SPOT_CHECKS, margin: float = DEFAULT_MARGIN,
                  seed: int = 0) -> np.ndarray:
    return random_points(domain, count, np.random.default_rng(seed), margin)


def build_graph_map(v: SpanElement, base: Optional[complex] = None, domain: Optional[Domain] = None,
                    path_tol: float = PATH_TOL, seed: int = 0) -> GraphMap:
    """Wrap ``v`` as a graph map after a path-independence spot check."""
    domain = v.kernel.domain if domain is None else domain
    base = default_base_point(domain) if base is None else base
    graph = GraphMap(domain, v, base, path_tol)
    points = sample_points(domain, margin=v.kernel.margin, seed=seed)
    gap = float(np.max(np.abs(graph.g(points) - graph.alternate_g(points))))
    if gap > path_tol:
        raise PathError(f"Path independence violated by {gap:.2e}; residual periods remain")
    graph.path_gap = gap
    logger.info(f"Graph map built on {domain.kind}; path-independence gap {gap:.2e}")
    return graph


def jacobian_check(graph: GraphMapBase, points: np.ndarray, margin: float = DEFAULT_MARGIN) -> float:
    """Largest ``|d g / d z_n - v|`` with the derivative taken by Cauchy's formula."""
    pts, _ = as_points(points, graph.domain.dimension)
    radius = 0.25 * margin * min(_fiber_scale(graph.domain, p) for p in pts)
    direction = (0,) * (graph.domain.dimension - 1) + (1,)
    numeric = cauchy_derivative(graph.g, pts, direction, radius=radius)
    return float(np.max(np.abs(numeric - graph.dg_dzn(pts))))


def _fiber_scale(domain: Domain, point: np.ndarray) -> float:
    fiber = fiber_of(domain, point[:-1] if len(point) > 1 else point)
    if isinstance(fiber, Disc):
        return fiber.radius
    return fiber.inner


def holomorphy_check(graph: GraphMapBase, points: np.ndarray, step: float = 1e-5) -> float:
    """Cauchy-Riemann residual of ``g`` in every variable."""
    return float(np.max(cauchy_riemann_residual(graph.g, points, step)))


def closeness_report(graph: GraphMap, points: PointSet) -> Dict:
    """``sup |f - id|`` on a grid against the path-length bound ``sup|v - 1| * length``."""
    grid = points.points
    deviation = float(np.max(np.abs(graph.g_on(points) - grid[:, -1])))
    v_error = float(np.max(np.abs(graph.v.evaluate_on(points) - 1.0)))
    if isinstance(graph.domain, FiberedDomain):
        lengths = np.abs(grid[:, -1] - graph.base)
    else:
        fiber = fiber_of(graph.domain, grid[0, :-1])
        lengths = path_length(canonical_path(fiber, graph.base, grid[:, -1]))
    max_length = float(np.max(lengths))
    report = {'sup_deviation': deviation, 'v_sup_error': v_error, 'max_path_length': max_length,
              'bound': v_error * max_length, 'within_bound': deviation <= v_error * max_length * (1 + 1e-6) + 1e-12}
    logger.info(f"sup|f - id| = {deviation:.3e} (path bound {report['bound']:.3e})")
    return report
