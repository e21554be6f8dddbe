import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from quadomain.certify.battery import BatteryFunction
from quadomain.construct.graph_map import GraphMapBase
from quadomain.errors import IntegrationError
from quadomain.geometry.domains import Annulus, Ball, Disc, Domain, FiberedDomain, Product
from quadomain.geometry.lattices import PointSet
from quadomain.geometry.rules import VolumeRule, volume_rule
from quadomain.parallel import map_chunks, split_rows
from quadomain.span.element import SpanElement

logger = logging.getLogger(__name__)

RULE_TAIL = 1e-12
MIN_ANGULAR = 16
MAX_ANGULAR = 512
MAX_FIBERED_ANGULAR = 48
REFINE_FACTOR = 1.25
# battery functions are analytic on a polydisc about 2.5 times larger
MIN_RATIO = 0.4
EVAL_CHUNK = 65536
GENERALIZATION_RATIO = 10.0
# in-basis residuals below this fraction of the tolerance are roundoff
GENERALIZATION_FLOOR = 1e-3


class Pullback:
    """``int_{f(G)} h = int_G |v|^2 (h o f)`` on a fixed source rule.

    The last image coordinate and the weights ``w |v|^2`` are computed once,
    so many test functions can be integrated against the same rule. Image
    rows are assembled chunk by chunk from the tensor parts of the rule.
    """

    def __init__(self, graph: GraphMapBase, v=None, rule: Optional[VolumeRule] = None):
        if rule is None:
            raise IntegrationError("A pullback needs a source volume rule")
        self.graph = graph
        self.rule = rule
        tensor = (rule.is_tensor and isinstance(graph.domain, Product)
                  and len(rule.factors) == len(graph.domain.factors)
                  and all(f.domain.dimension == 1 for f in rule.factors))
        self.points = PointSet(tuple(f.nodes for f in rule.factors)) if tensor else PointSet.single(rule.nodes)
        self.last = graph.g_on(self.points)
        if v is None:
            jacobian = graph.dg_dzn(self.points.points)
        elif isinstance(v, SpanElement):
            jacobian = v.evaluate_on(self.points)
        else:
            jacobian = np.asarray(v(self.points.points))
        self.weights = rule.weights * np.abs(jacobian) ** 2
        logger.debug(f"Pullback rule with {rule.size} nodes, image volume {self.volume():.12g}")

    def volume(self) -> float:
        return float(np.sum(self.weights))

    def image(self, rows: slice) -> np.ndarray:
        """Image points ``f(x)`` for a slice of rule nodes."""
        index = np.unravel_index(np.arange(rows.start, rows.stop), self.points.shape)
        source = np.hstack([part[i] for part, i in zip(self.points.parts, index)])
        source[:, -1] = self.last[rows]
        return source

    def integral(self, h: Callable[[np.ndarray], np.ndarray]) -> complex:
        def partial(rows: slice) -> complex:
            return complex(np.dot(self.weights[rows], h(self.image(rows))))
        return complex(sum(partial(rows) for rows in split_rows(len(self.weights), EVAL_CHUNK)))


def _decay_ratio(domain: Domain, nodes: np.ndarray) -> float:
    """Largest normalized node modulus; kernel sections at the nodes decay like its powers."""
    if isinstance(domain, Disc):
        return float(np.max(np.abs(nodes[:, 0] - domain.center)) / domain.radius)
    if isinstance(domain, Annulus):
        moduli = np.abs(nodes[:, 0] - domain.center)
        return float(max(np.max(moduli) / domain.outer, np.max(domain.inner / moduli)))
    if isinstance(domain, Ball):
        return float(np.max(np.linalg.norm(nodes, axis=1)))
    if isinstance(domain, FiberedDomain):
        base = np.abs(nodes[:, 0]) / domain.base_radius
        fiber = np.abs(nodes[:, 1]) / domain.fiber_radius(nodes[:, 0])
        return float(max(np.max(base), np.max(fiber)))
    raise IntegrationError(f"No pullback rule heuristic for {domain.kind}")


def _rule_orders(ratio: float, tail: float, scale: float, ceiling: int):
    ratio = min(max(ratio, MIN_RATIO), 0.99)
    angular = math.ceil(math.log(tail) / math.log(ratio)) + 8
    angular = int(min(max(angular * scale, MIN_ANGULAR), ceiling * scale))
    angular += angular % 2
    return max(angular // 2 + 8, 8), angular


def pullback_rule(domain: Domain, v=None, tail: float = RULE_TAIL, scale: float = 1.0) -> VolumeRule:
    """Source rule resolving ``|v|^2 (h o f)`` to about ``tail``.

    Sized from how close the span nodes of ``v`` come to the boundary;
    ``scale`` enlarges every order for refinement checks.
    """
    nodes = v.nodes if isinstance(v, SpanElement) else np.zeros((1, domain.dimension), dtype=complex)
    if isinstance(domain, Product):
        factors, start = [], 0
        for factor in domain.factors:
            block = nodes[:, start:start + factor.dimension]
            start += factor.dimension
            order, angular = _rule_orders(_decay_ratio(factor, block), tail, scale, MAX_ANGULAR)
            factors.append(volume_rule(factor, order, angular))
        return VolumeRule(domain, factors=tuple(factors))
    ceiling = MAX_FIBERED_ANGULAR if isinstance(domain, FiberedDomain) else MAX_ANGULAR
    order, angular = _rule_orders(_decay_ratio(domain, nodes), tail, scale, ceiling)
    return volume_rule(domain, order, angular)


def pullback_integral(graph: GraphMapBase, v, h: Callable[[np.ndarray], np.ndarray], rule: VolumeRule,
                      refined: Optional[VolumeRule] = None, tol: float = 1e-10) -> complex:
    """``int_{f(G)} h`` by the change of variables ``|v|^2 (h o f)`` on ``rule``.

    Raises:
        IntegrationError: ``refined`` is given and disagrees by more than ``tol``
            relative to the image volume
    """
    coarse = Pullback(graph, v, rule)
    value = coarse.integral(h)
    if refined is not None:
        fine = Pullback(graph, v, refined).integral(h)
        change = abs(fine - value) / max(1.0, coarse.volume())
        if change > tol:
            raise IntegrationError(f"Pullback changed by {change:.2e} under rule refinement")
        value = fine
    return value


@dataclass
class ResidualReport:
    """Residuals of a quadrature identity over a function battery."""
    rows: List[Dict]
    tolerance: float
    battery_version: int = 1
    methods: Dict[str, Dict] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def max_relative(self) -> float:
        return max((r['relative'] for r in self.rows), default=0.0)

    def _max(self, held_out: bool) -> float:
        return max((r['relative'] for r in self.rows if r.get('held_out', True) == held_out), default=0.0)

    @property
    def generalization_ratio(self) -> Optional[float]:
        """Held-out over in-basis residual, the latter floored at a fraction of the tolerance."""
        if not any(r.get('held_out', True) is False for r in self.rows):
            return None
        return self._max(True) / max(self._max(False), GENERALIZATION_FLOOR * self.tolerance)

    @property
    def generalizes(self) -> bool:
        ratio = self.generalization_ratio
        return ratio is None or ratio <= GENERALIZATION_RATIO

    @property
    def passed(self) -> bool:
        return len(self.rows) > 0 and self.max_relative <= self.tolerance and self.generalizes

    def to_dict(self) -> Dict:
        return {
            'passed': self.passed,
            'tolerance': self.tolerance,
            'battery_version': self.battery_version,
            'battery_size': len(self.rows),
            'max_relative': self.max_relative,
            'max_relative_held_out': self._max(True),
            'max_relative_in_basis': self._max(False),
            'in_basis_count': sum(1 for r in self.rows if r.get('held_out', True) is False),
            'generalization_ratio': self.generalization_ratio,
            'methods': self.methods,
            'notes': self.notes,
            'rows': self.rows,
        }


def certify_identity(data, graph: GraphMapBase, v, battery: Sequence[BatteryFunction],
                     tolerance: float = 1e-6, integrator: Optional[Pullback] = None,
                     refined: Optional[Pullback] = None, in_basis: Sequence[str] = (),
                     battery_version: int = 1) -> ResidualReport:
    """Compare ``int_{f(G)} h`` with the quadrature sum for every battery function.

    Residuals are relative to ``max(|int h|, vol f(G))``. A refined integrator,
    when given, supplies the integration error estimate; an estimate above a
    tenth of ``tolerance`` makes the check meaningless and raises.

    Raises:
        IntegrationError: the pullback rule is not converged at this tolerance
    """
    if integrator is None:
        integrator = Pullback(graph, v, pullback_rule(graph.domain, v))
    volume = integrator.volume()
    in_basis = set(in_basis)

    def row(h: BatteryFunction) -> Dict:
        lhs = integrator.integral(h)
        estimate = abs(refined.integral(h) - lhs) if refined is not None else None
        rhs = data.apply(h)
        residual = abs(lhs - rhs)
        scale = max(abs(lhs), volume)
        if estimate is not None and estimate / scale > 0.1 * tolerance:
            raise IntegrationError(f"Pullback of {h.name} not converged: refinement change {estimate:.2e}")
        return {'name': h.name, 'family': h.family, 'integral': [lhs.real, lhs.imag],
                'quadrature': [rhs.real, rhs.imag], 'residual': residual, 'relative': residual / scale,
                'error_estimate': estimate, 'held_out': h.name not in in_basis, 'method': 'pullback'}

    rows = map_chunks(row, battery)
    methods = {'pullback': {'nodes': integrator.rule.size, 'volume': volume,
                            'refined_nodes': refined.rule.size if refined is not None else None}}
    report = ResidualReport(rows, tolerance, battery_version, methods)
    logger.info(f"Quadrature identity over {len(rows)} functions: max relative residual "
                f"{report.max_relative:.2e} ({'PASS' if report.passed else 'FAIL'})")
    return report
