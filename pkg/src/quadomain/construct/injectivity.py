import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from quadomain.construct.graph_map import GraphMapBase, fiber_of
from quadomain.errors import CertificateInconclusive
from quadomain.geometry.contours import boundary_contours
from quadomain.geometry.domains import DEFAULT_MARGIN
from quadomain.geometry.lattices import planar_grid, zprime_lattice

logger = logging.getLogger(__name__)

START_SAMPLES = 256
MAX_SAMPLES = 4096
MAX_STEP = 0.5 * np.pi
TARGET_COUNT = 48
COUNT_TOL = 1e-6

CERTIFIED = 'certified'
REJECTED = 'rejected'
INCONCLUSIVE = 'inconclusive'


@dataclass
class FiberResult:
    zprime: np.ndarray
    status: str
    samples: int
    counts: np.ndarray
    separation: float
    reason: str = ''

    def to_dict(self) -> Dict:
        return {
            'zprime': [[c.real, c.imag] for c in self.zprime],
            'status': self.status,
            'samples': self.samples,
            'min_count': int(np.min(self.counts)) if len(self.counts) else None,
            'max_count': int(np.max(self.counts)) if len(self.counts) else None,
            'separation': self.separation,
            'reason': self.reason,
        }


@dataclass
class InjectivityCertificate:
    status: str
    fibers: List[FiberResult] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    @property
    def separation(self) -> float:
        return min((f.separation for f in self.fibers), default=0.0)

    def to_dict(self) -> Dict:
        failing = [f.to_dict() for f in self.fibers if f.status != CERTIFIED]
        return {
            'status': self.status,
            'fibers_checked': len(self.fibers),
            'min_separation': self.separation,
            'max_samples': max((f.samples for f in self.fibers), default=0),
            'failing_fibers': failing[:10],
        }


def winding_numbers(curve: np.ndarray, targets: np.ndarray):
    """Winding number of a closed sampled curve around each target.

    Returns ``(counts, max_step)`` where ``max_step`` is the largest argument
    increment between consecutive samples; it must stay well below ``pi``
    for the count to be trusted.
    """
    nxt = np.roll(curve, -1)
    steps = np.angle((nxt[None, :] - targets[:, None]) / (curve[None, :] - targets[:, None]))
    return steps.sum(axis=1) / (2.0 * np.pi), float(np.max(np.abs(steps), initial=0.0))


def _distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.min(np.abs(a[:, None] - b[None, :]), initial=np.inf))


def check_fiber(graph: GraphMapBase, zprime, margin: float = DEFAULT_MARGIN,
                targets: int = TARGET_COUNT) -> FiberResult:
    """Argument-principle test of ``w -> g(z', w)`` on one fiber."""
    zprime = np.atleast_1d(np.asarray(zprime, dtype=complex))
    fiber = fiber_of(graph.domain, zprime)
    sources = planar_grid(fiber, targets, 2 * margin)[:, 0]
    values = graph.g_fiber(zprime, sources)
    samples = START_SAMPLES
    while True:
        contours = boundary_contours(fiber, margin, samples)
        images = [graph.g_fiber(zprime, c.points()) for c in contours]
        total = np.zeros(len(values))
        worst = 0.0
        for image in images:
            counts, step = winding_numbers(image, values)
            total += counts
            worst = max(worst, step)
        if worst < MAX_STEP or samples >= MAX_SAMPLES:
            break
        samples *= 2

    separation = min(_distance(values, image) for image in images)
    for i, first in enumerate(images):
        for second in images[i + 1:]:
            separation = min(separation, _distance(first, second))
    rounded = np.rint(total)
    result = FiberResult(zprime, CERTIFIED, samples, rounded.astype(int), separation)
    if worst >= MAX_STEP:
        result.status, result.reason = INCONCLUSIVE, f"boundary image under-resolved at {samples} samples"
    elif np.max(np.abs(total - rounded)) > COUNT_TOL or not separation > 0:
        result.status, result.reason = INCONCLUSIVE, "target too close to the boundary image"
    elif np.any(rounded >= 2):
        result.status, result.reason = REJECTED, f"a target has {int(rounded.max())} preimages"
    elif np.any(rounded <= 0):
        result.status, result.reason = INCONCLUSIVE, "a sampled image point was not counted"
    return result


def injectivity_certificate(graph: GraphMapBase, margin: float = DEFAULT_MARGIN,
                            zprime: Optional[np.ndarray] = None, strict: bool = False) -> InjectivityCertificate:
    """Certify ``f = (z', g)`` injective one fiber at a time.

    The leading coordinates are preserved, so ``f`` is injective iff every
    ``g(z', .)`` is. For each ``z'`` the images of the shrunk fiber boundary
    must wind exactly once around the images of interior sample points and
    stay separated from them. A fiber with any count of two or more rejects
    the map; an unresolved fiber makes it inconclusive.
    """
    if graph.domain.dimension == 1:
        lattice = np.zeros((1, 0), dtype=complex)
    else:
        lattice = zprime_lattice(graph.domain, margin) if zprime is None else np.atleast_2d(zprime)
    fibers = [check_fiber(graph, row, margin) for row in lattice]
    statuses = {f.status for f in fibers}
    status = REJECTED if REJECTED in statuses else (INCONCLUSIVE if INCONCLUSIVE in statuses else CERTIFIED)
    certificate = InjectivityCertificate(status, fibers)
    logger.info(f"Injectivity {status} over {len(fibers)} fibers (min separation {certificate.separation:.3e})")
    if status == INCONCLUSIVE:
        reasons = {f.reason for f in fibers if f.status == INCONCLUSIVE}
        message = f"Injectivity inconclusive: {'; '.join(sorted(reasons))}"
        logger.warning(message)
        if strict:
            raise CertificateInconclusive(message, certificate)
    return certificate
