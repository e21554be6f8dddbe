import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from quadomain.certify.battery import BatteryFunction, monomial_battery, polynomial_battery
from quadomain.certify.identity import ResidualReport
from quadomain.errors import IntegrationError
from quadomain.geometry.domains import Ball
from quadomain.geometry.lattices import random_points
from quadomain.geometry.rules import VolumeRule, volume_rule
from quadomain.onepoint.automorphisms import PolyAutomorphism, PreimageDomain, preimage_domain, unit_jacobian_check
from quadomain.parallel import map_chunks, split_rows

logger = logging.getLogger(__name__)

PULLBACK_TOL = 1e-10
JACOBIAN_TOL = 1e-12
JACOBIAN_POINTS = 100
BOX_PADDING = 1.1
BOX_GROWTH = 1.5
BOX_SAMPLES = 4096
MAX_BOX_EXPANSIONS = 8
MC_CHUNK = 100_000
MC_SIGMA = 3.0
VALIDATION_DEGREE = 6


def pullback_ball_rule(target: Ball, degree: int) -> VolumeRule:
    """Ball rule integrating every holomorphic polynomial of total degree ``<= degree`` exactly.

    Trapezoid angles kill every nonzero frequency below ``angular``; only the
    constant term survives the angular average, so few radial points suffice.
    """
    angular = degree + 2 - degree % 2
    order = degree // 4 + target.dimension + 2
    return volume_rule(target, order, angular)


def rule_symmetry_error(rule: VolumeRule, degree: int) -> float:
    """Largest ``|sum w z^gamma|`` over monomials ``0 < |gamma| <= degree``, relative to the volume.

    Mixed monomials are checked to a moderate degree, pure powers to the full one.
    """
    nodes = rule.nodes
    volume = float(np.sum(rule.weights))
    worst = 0.0
    for h in monomial_battery(rule.domain.dimension, min(degree, VALIDATION_DEGREE))[1:]:
        worst = max(worst, abs(np.dot(rule.weights, h(nodes))) / volume)
    for i in range(rule.domain.dimension):
        for k in range(1, degree + 1):
            worst = max(worst, abs(np.dot(rule.weights, nodes[:, i] ** k)) / volume)
    return worst


def bounding_box(domain: PreimageDomain, seed: int = 0) -> np.ndarray:
    """Half-widths of a box ``|Re z_i|, |Im z_i| <= r_i`` holding the preimage.

    Starts from the padded coefficient bounds of the inverse and grows while
    preimages of random ball points escape it.
    """
    radii = BOX_PADDING * domain.bounding_radii()
    preimages = domain.automorphism.inverse(random_points(domain.target, BOX_SAMPLES, np.random.default_rng(seed), 0.0))
    extent = np.maximum(np.max(np.abs(preimages.real), axis=0), np.max(np.abs(preimages.imag), axis=0))
    for _ in range(MAX_BOX_EXPANSIONS):
        escaped = extent > radii
        if not np.any(escaped):
            return radii
        logger.warning(f"Preimage samples escape the bounding box in coordinates "
                       f"{np.flatnonzero(escaped).tolist()}; expanding by {BOX_GROWTH}")
        radii = np.where(escaped, BOX_GROWTH * radii, radii)
    raise IntegrationError(f"Bounding box still misses the preimage after {MAX_BOX_EXPANSIONS} expansions")


def _monte_carlo_chunk(domain: PreimageDomain, battery: Sequence[BatteryFunction], radii: np.ndarray,
                       count: int, seed: np.random.SeedSequence) -> Tuple[int, np.ndarray]:
    rng = np.random.default_rng(seed)
    n = domain.dimension
    points = (rng.uniform(-1.0, 1.0, (count, n)) + 1j * rng.uniform(-1.0, 1.0, (count, n))) * radii
    hits = points[domain.contains(points)]
    moments = np.zeros((len(battery), 4))
    for k, h in enumerate(battery):
        values = h(hits) if len(hits) else np.zeros(0, dtype=complex)
        moments[k] = [values.real.sum(), values.imag.sum(), (values.real ** 2).sum(), (values.imag ** 2).sum()]
    return len(hits), moments


def monte_carlo_integrals(domain: PreimageDomain, battery: Sequence[BatteryFunction], samples: int,
                          seed: int = 0, radii: Optional[np.ndarray] = None) -> Dict:
    """Rejection-sampling estimates of ``int_D h`` with standard errors.

    Chunks draw from ``SeedSequence(seed).spawn`` children, so estimates do
    not depend on the number of workers.

    Raises:
        IntegrationError: no sample landed in the domain
    """
    radii = bounding_box(domain, seed) if radii is None else radii
    box_volume = float(np.prod((2.0 * radii) ** 2))
    chunks = split_rows(samples, MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(len(chunks))
    results = map_chunks(lambda job: _monte_carlo_chunk(domain, battery, radii, job[0].stop - job[0].start, job[1]),
                         list(zip(chunks, children)))
    hits = sum(r[0] for r in results)
    if hits == 0:
        raise IntegrationError(f"No Monte Carlo sample out of {samples} landed in the preimage")
    moments = np.sum([r[1] for r in results], axis=0)
    mean_re, mean_im = moments[:, 0] / samples, moments[:, 1] / samples
    var = moments[:, 2] / samples - mean_re ** 2 + moments[:, 3] / samples - mean_im ** 2
    estimates = box_volume * (mean_re + 1j * mean_im)
    errors = box_volume * np.sqrt(np.maximum(var, 0.0) / samples)
    logger.info(f"Monte Carlo: {hits} of {samples} samples accepted in a box of volume {box_volume:.4g}")
    return {'estimates': estimates, 'errors': errors, 'samples': samples, 'hits': hits,
            'box_half_widths': radii.tolist(), 'box_volume': box_volume}


def bonferroni_sigma(count: int, sigma: float = MC_SIGMA) -> float:
    """Per-test threshold keeping the family-wise level of a two-sided ``sigma`` test.

    The 33-function battery in two variables at the nominal 3 sigma gets
    about 3.94 sigma per function.
    """
    level = 2.0 * norm.sf(sigma)
    return float(norm.isf(level / (2.0 * max(count, 1))))


def certify_onepoint(automorphism: PolyAutomorphism, target: Optional[Ball] = None,
                     battery: Optional[Sequence[BatteryFunction]] = None, tolerance: float = PULLBACK_TOL,
                     mc_samples: int = 1_000_000, seed: int = 0, battery_version: int = 1,
                     jacobian_tol: float = JACOBIAN_TOL) -> ResidualReport:
    """Check ``int_{f^{-1}(B)} h = vol(B) h(f^{-1}(0))`` over a polynomial battery.

    The left side is computed twice: exactly, as ``int_B h o f^{-1}`` on a ball
    rule of sufficient degree, and by rejection sampling over a box around the
    preimage. The report's residuals are the exact-pullback ones; Monte Carlo
    agreement is recorded per row against a Bonferroni corrected threshold.

    Raises:
        IntegrationError: the Jacobian is not identically one, or the ball rule
            fails its symmetry validation
    """
    domain = preimage_domain(automorphism, target)
    battery = polynomial_battery(domain.dimension, battery_version) if battery is None else list(battery)
    rng = np.random.default_rng(seed)

    test_points = random_points(domain.target, JACOBIAN_POINTS, rng, 0.0)
    deviation = unit_jacobian_check(automorphism, test_points)
    if deviation > jacobian_tol:
        raise IntegrationError(f"Jacobian determinant of {automorphism.name} deviates from 1 by {deviation:.2e}")
    roundtrip = automorphism.roundtrip_error(test_points)
    if roundtrip > jacobian_tol:
        raise IntegrationError(f"Inverse of {automorphism.name} is off by {roundtrip:.2e}")

    degree = max(h.degree or 0 for h in battery) * automorphism.inverse_degree
    rule = pullback_ball_rule(domain.target, degree)
    symmetry = rule_symmetry_error(rule, degree)
    if symmetry > PULLBACK_TOL:
        raise IntegrationError(f"Ball rule fails the symmetry check: {symmetry:.2e}")
    preimages = automorphism.inverse(rule.nodes)

    volume = domain.volume()
    node = automorphism.node()
    mc = monte_carlo_integrals(domain, battery, mc_samples, seed)
    threshold = bonferroni_sigma(len(battery))

    rows: List[Dict] = []
    for k, h in enumerate(battery):
        exact = volume * complex(h(node.reshape(1, -1))[0])
        pulled = complex(np.dot(rule.weights, h(preimages)))
        scale = max(abs(exact), volume)
        estimate, error = complex(mc['estimates'][k]), float(mc['errors'][k])
        gap = abs(estimate - exact)
        rows.append({'name': h.name, 'family': h.family, 'quadrature': [exact.real, exact.imag],
                     'integral': [pulled.real, pulled.imag], 'residual': abs(pulled - exact),
                     'relative': abs(pulled - exact) / scale, 'method': 'pullback', 'held_out': True,
                     'monte_carlo': [estimate.real, estimate.imag], 'monte_carlo_error': error,
                     'monte_carlo_sigmas': gap / error if error > 0 else (0.0 if gap == 0 else float('inf')),
                     'monte_carlo_within': gap <= threshold * error})
    within = all(r['monte_carlo_within'] for r in rows)
    methods = {
        'pullback': {'nodes': rule.size, 'degree': degree, 'symmetry_error': symmetry},
        'monte_carlo': {'samples': mc['samples'], 'hits': mc['hits'], 'box_half_widths': mc['box_half_widths'],
                        'threshold_sigmas': threshold, 'nominal_sigmas': MC_SIGMA, 'correction': 'bonferroni',
                        'all_within': within},
    }
    notes = domain.notes() + [f"jacobian deviation {deviation:.2e}, inverse roundtrip {roundtrip:.2e}"]
    report = ResidualReport(rows, tolerance, battery_version, methods, notes)
    logger.info(f"One-point identity for {automorphism.name}: max relative residual {report.max_relative:.2e}, "
                f"Monte Carlo {'consistent' if within else 'INCONSISTENT'} at {threshold:.2f} sigma")
    return report
