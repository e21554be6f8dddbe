import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from quadomain.certify.identity import ResidualReport
from quadomain.config import RunConfig
from quadomain.construct.pipeline import stage
from quadomain.errors import IntegrationError, StageError
from quadomain.geometry.lattices import random_points
from quadomain.onepoint.automorphisms import (
    PolyAutomorphism, PreimageDomain, automorphism_from_spec, preimage_domain, unit_jacobian_check,
)
from quadomain.onepoint.certification import JACOBIAN_POINTS, certify_onepoint

logger = logging.getLogger(__name__)

# the exact pullback is only limited by roundoff, which grows with the composed degree
PULLBACK_TOL_FACTOR = 100.0


@dataclass
class OnepointResult:
    automorphism: PolyAutomorphism
    domain: PreimageDomain
    checks: Dict
    report: ResidualReport
    timings: Dict[str, float] = field(default_factory=dict)

    def point_clouds(self, samples: int = 2048, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        """Points on the unit sphere and their preimages, which trace the boundary of ``f^{-1}(B)``."""
        rng = np.random.default_rng(seed)
        n = self.domain.dimension
        sphere = rng.normal(size=(samples, n)) + 1j * rng.normal(size=(samples, n))
        sphere /= np.linalg.norm(sphere, axis=1, keepdims=True)
        return sphere, self.automorphism.inverse(sphere)

    def to_dict(self) -> Dict:
        node = self.automorphism.node()
        return {
            'domain': self.domain.describe(),
            'node': [[c.real, c.imag] for c in node],
            'coefficient': self.domain.volume(),
            'checks': self.checks,
            'identity': self.report.to_dict(),
        }


def run_onepoint(config: RunConfig, progress: Optional[Dict] = None) -> OnepointResult:
    """Build the automorphism in ``config`` and certify its one-point quadrature identity.

    Raises:
        StageError: tagged ``automorphism``, ``jacobian``, ``pullback`` or ``monte_carlo``
    """
    progress = {} if progress is None else progress
    timings = progress.setdefault('timing', {})
    tol = config.tolerances
    spec = config.automorphism

    with stage('automorphism', timings):
        automorphism = automorphism_from_spec(spec.kind, spec.coefficients, spec.inject_jacobian_error)
        domain = preimage_domain(automorphism)
        test_points = random_points(domain.target, JACOBIAN_POINTS, np.random.default_rng(config.seed), 0.0)
        roundtrip = automorphism.roundtrip_error(test_points)
        progress['automorphism'] = dict(automorphism.describe(), roundtrip_error=roundtrip)
        if roundtrip > tol.quadrature:
            raise StageError('automorphism', f"inverse composition is off by {roundtrip:.2e}")

    with stage('jacobian', timings):
        deviation = unit_jacobian_check(automorphism, test_points)
        exact = unit_jacobian_check(automorphism, test_points, numerical=False)
        checks = {'roundtrip_error': roundtrip, 'jacobian_deviation': deviation,
                  'jacobian_deviation_exact': exact}
        progress['checks'] = checks
        if max(deviation, exact) > tol.quadrature:
            raise IntegrationError(f"det f' deviates from 1 by {max(deviation, exact):.2e}")

    with stage('pullback', timings):
        report = certify_onepoint(automorphism, domain.target, tolerance=PULLBACK_TOL_FACTOR * tol.quadrature,
                                  mc_samples=config.mc_samples, seed=config.seed,
                                  battery_version=config.battery_version, jacobian_tol=tol.quadrature)
        progress['identity'] = report.to_dict()
        if not report.passed:
            raise StageError('pullback', f"max relative residual {report.max_relative:.2e} above {report.tolerance:.0e}")

    with stage('monte_carlo', timings):
        monte_carlo = report.methods['monte_carlo']
        progress['monte_carlo'] = {k: monte_carlo[k] for k in ('threshold_sigmas', 'nominal_sigmas', 'all_within')}
        if not monte_carlo['all_within']:
            logger.error("Monte Carlo estimates disagree with the one-point identity")
            raise StageError('monte_carlo', f"Monte Carlo estimates outside the Bonferroni corrected "
                                              f"{monte_carlo['threshold_sigmas']:.2f} sigma threshold")
    return OnepointResult(automorphism, domain, checks, report, timings)
