import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from quadomain.config import RunConfig
from quadomain.construct.correction import correct_periods
from quadomain.construct.graph_map import (
    GraphMap, build_graph_map, closeness_report, fiber_of, holomorphy_check, jacobian_check, sample_points,
)
from quadomain.construct.injectivity import InjectivityCertificate, injectivity_certificate
from quadomain.construct.periods import PeriodMatrix, PeriodVector, build_period_matrix, compute_periods
from quadomain.errors import CertificateInconclusive, QuadomainError, StageError
from quadomain.geometry.contours import boundary_contours, inner_contours
from quadomain.geometry.domains import Domain, FiberedDomain, Product
from quadomain.geometry.lattices import verification_grid, zprime_lattice
from quadomain.kernels.base import KernelFunction
from quadomain.kernels.factory import kernel_for
from quadomain.kernels.product import ProductKernel
from quadomain.span.element import SpanElement
from quadomain.span.fitting import FitReport, fit_constant_one, fit_exact_constant

logger = logging.getLogger(__name__)


@contextmanager
def stage(name: str, timings: Dict[str, float]):
    """Time a pipeline stage and tag any failure inside it with ``name``."""
    logger.info(f"Stage {name} started")
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except QuadomainError as e:
        logger.error(f"Stage {name} failed: {e}")
        raise StageError(name, str(e)) from e
    finally:
        timings[name] = time.perf_counter() - start
    logger.info(f"Stage {name} finished in {timings[name]:.2f}s")


@dataclass
class ConstructionResult:
    domain: Domain
    kernel: KernelFunction
    u: SpanElement
    fit_report: FitReport
    periods: PeriodVector
    matrix: PeriodMatrix
    v: SpanElement
    graph: GraphMap
    checks: Dict
    closeness: Dict
    certificate: InjectivityCertificate
    timings: Dict[str, float] = field(default_factory=dict)

    def point_clouds(self, margin: float, samples: int = 128) -> Tuple[np.ndarray, np.ndarray]:
        """Boundary samples of the source fibers and their images under ``f``."""
        rows = []
        for zprime in leading_lattice(self.domain, margin):
            for contour in boundary_contours(fiber_of(self.domain, zprime), margin, samples):
                w = contour.points().reshape(-1, 1)
                rows.append(np.hstack([np.broadcast_to(zprime, (len(w), len(zprime))), w]))
        source = np.vstack(rows)
        return source, self.graph.f(source)

    def to_dict(self) -> Dict:
        return {
            'domain': self.domain.describe(),
            'kernel': self.kernel.describe(),
            'fit': self.fit_report.to_dict(),
            'periods_before': self.periods.to_dict(),
            'period_matrix': self.matrix.to_dict(),
            'terms': {'fitted': len(self.u), 'corrected': len(self.v)},
            'graph_map': self.graph.to_dict(),
            'checks': self.checks,
            'closeness': self.closeness,
            'injectivity': self.certificate.to_dict(),
        }


def leading_lattice(domain: Domain, margin: float) -> np.ndarray:
    if domain.dimension == 1:
        return np.zeros((1, 0), dtype=complex)
    return zprime_lattice(domain, margin)


def period_contours(domain: Domain, samples: int):
    if isinstance(domain, FiberedDomain):
        return []
    fiber = domain.factors[-1] if isinstance(domain, Product) else domain
    return inner_contours(fiber, samples)


def construct_quadrature_domain(config: RunConfig, progress: Optional[Dict] = None) -> ConstructionResult:
    """Fit, remove periods, integrate and certify the graph map described by ``config``.

    Stage summaries are written into ``progress`` as they complete so that a
    failing run still reports how far it got.

    Raises:
        StageError: tagged with the failing stage
    """
    progress = {} if progress is None else progress
    timings = progress.setdefault('timing', {})
    tol = config.tolerances
    margin = config.margin

    with stage('kernel', timings):
        domain = config.domain.build()
        kernel = kernel_for(domain, margin, config.fit.series_degree, config.fit.rule_order)
        progress['kernel'] = kernel.describe()

    with stage('fit', timings):
        if config.fit.exact:
            u, fit_report = fit_exact_constant(kernel, config.fit.lattice, config.fit.epsilon)
        else:
            u, fit_report = fit_constant_one(kernel, config.fit.lattice, config.fit.max_order, config.fit.epsilon,
                                             inner_ring=config.fit.inner_ring)
        progress['fit'] = fit_report.to_dict()

    with stage('periods', timings):
        contours = period_contours(domain, config.contour_samples)
        zprime = leading_lattice(domain, margin)
        periods = compute_periods(u, contours, zprime, tol.quadrature)
        last = kernel.factors[-1] if isinstance(kernel, ProductKernel) else kernel
        matrix = build_period_matrix(last, contours, condition_limit=tol.condition_limit)
        progress['periods_before'] = periods.to_dict()
        progress['period_matrix'] = matrix.to_dict()

    with stage('correction', timings):
        v = correct_periods(u, matrix, periods if contours else None, tol.period)
        progress['terms'] = {'fitted': len(u), 'corrected': len(v)}
        if contours:
            progress['residual_period'] = compute_periods(v, contours, zprime, tol.quadrature).max_abs()

    with stage('graph_map', timings):
        graph = build_graph_map(v, domain=domain, path_tol=tol.path, seed=config.seed)
        points = sample_points(domain, margin=2 * margin, seed=config.seed)
        checks = {
            'path_gap': graph.path_gap,
            'jacobian_residual': jacobian_check(graph, points, margin),
            'holomorphy_residual': holomorphy_check(graph, points),
        }
        for name in ('jacobian_residual', 'holomorphy_residual'):
            if checks[name] > tol.jacobian:
                raise StageError('graph_map', f"{name} {checks[name]:.2e} above {tol.jacobian:.0e}")
        closeness = closeness_report(graph, verification_grid(domain, config.fit.lattice, margin))
        progress['checks'] = checks
        progress['closeness'] = closeness

    with stage('injectivity', timings):
        try:
            certificate = injectivity_certificate(graph, margin, strict=True)
        except CertificateInconclusive as e:
            progress['injectivity'] = e.certificate.to_dict()
            raise
        progress['injectivity'] = certificate.to_dict()
        if not certificate.certified:
            raise StageError('injectivity', f"graph map rejected: {certificate.status}")

    return ConstructionResult(domain, kernel, u, fit_report, periods, matrix, v, graph, checks, closeness,
                              certificate, timings)
