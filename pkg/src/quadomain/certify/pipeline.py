import logging
from dataclasses import dataclass
from typing import Dict, Optional

from quadomain.certify.battery import Polynomial, default_battery, polynomial_function
from quadomain.certify.converse import reconstruct_jacobian
from quadomain.certify.extraction import (
    QuadratureData, coefficient_agreement, collocation_axes, collocation_basis, extract_by_collocation,
    extract_quadrature_data, spanned_by_axes,
)
from quadomain.certify.identity import REFINE_FACTOR, Pullback, ResidualReport, certify_identity, pullback_rule
from quadomain.config import RunConfig
from quadomain.construct.graph_map import sample_points
from quadomain.construct.pipeline import ConstructionResult, stage
from quadomain.errors import StageError

logger = logging.getLogger(__name__)


@dataclass
class CertificationResult:
    data: QuadratureData
    collocation: QuadratureData
    agreement: float
    collocation_info: Dict
    residuals: ResidualReport
    converse: Dict
    volume: float

    @property
    def passed(self) -> bool:
        return self.residuals.passed

    def to_dict(self) -> Dict:
        return {
            'quadrature_data': self.data.to_dict(),
            'image_volume': self.volume,
            'method_agreement': self.agreement,
            'collocation': dict(self.collocation_info, agreement=self.agreement),
            'identity': self.residuals.to_dict(),
            'converse': self.converse,
        }


def certify_construction(construction: ConstructionResult, config: RunConfig,
                         progress: Optional[Dict] = None) -> CertificationResult:
    """Extract, cross-check and certify the quadrature identity of a constructed image.

    Raises:
        StageError: tagged with the failing certification stage
    """
    progress = {} if progress is None else progress
    timings = progress.setdefault('timing', {})
    tol = config.tolerances
    graph, v = construction.graph, construction.v

    with stage('extraction', timings):
        data = extract_quadrature_data(v, graph)
        progress['quadrature_data'] = data.to_dict()

    with stage('integration', timings):
        integrator = Pullback(graph, v, pullback_rule(graph.domain, v))
        refined = Pullback(graph, v, pullback_rule(graph.domain, v, scale=REFINE_FACTOR))
        volume = integrator.volume()
        change = abs(refined.volume() - volume) / volume
        one = polynomial_function('one', Polynomial.monomial((0,) * graph.domain.dimension), 'monomial')
        predicted = data.apply(one)
        progress['image_volume'] = {'value': volume, 'refinement_change': change,
                                    'quadrature_value': [predicted.real, predicted.imag],
                                    'relative_gap': abs(predicted - volume) / volume}
        if change > tol.identity * 0.1:
            raise StageError('integration', f"image volume changed by {change:.2e} under rule refinement")

    with stage('collocation', timings):
        order = max((sum(beta) for _, beta, _ in data.entries), default=0)
        axes = collocation_axes(graph.domain, data.nodes, order)
        basis = collocation_basis(graph.domain, data.nodes, order)
        collocated, info = extract_by_collocation(graph, v, data, basis, integrator)
        agreement = coefficient_agreement(data, collocated)
        progress['collocation'] = dict(info, agreement=agreement)
        if agreement > tol.method_agreement:
            raise StageError('collocation', f"jet and collocation coefficients differ by {agreement:.2e} "
                                              f"above {tol.method_agreement:.0e}")

    with stage('identity', timings):
        battery = default_battery(graph.domain.dimension, config.battery_version)
        residuals = certify_identity(data, graph, v, battery, tol.identity, integrator, refined,
                                     in_basis=spanned_by_axes(battery, axes),
                                     battery_version=config.battery_version)
        progress['identity'] = residuals.to_dict()

    with stage('converse', timings):
        points = sample_points(graph.domain, margin=config.margin, seed=config.seed)
        _, converse = reconstruct_jacobian(data, graph, v.kernel, reference=v, check_points=points)
        progress['converse'] = converse
        if converse['coefficient_error'] > tol.roundtrip:
            raise StageError('converse', f"round trip coefficient error {converse['coefficient_error']:.2e}")

    if residuals.max_relative > tol.identity:
        raise StageError('identity', f"max relative residual {residuals.max_relative:.2e} "
                                     f"above {tol.identity:.0e}")
    if not residuals.generalizes:
        raise StageError('identity', f"held-out residuals are {residuals.generalization_ratio:.1f} times "
                                     f"the in-basis residuals")
    return CertificationResult(data, collocated, agreement, info, residuals, converse, volume)
