import math
import logging
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from quadomain.errors import DomainError
from quadomain.geometry.domains import (
    DEFAULT_MARGIN, Annulus, Ball, Disc, Domain, FiberedDomain, Product,
)

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
RING_CAPACITY = 48


class PointSet:
    """Point cloud that may be the tensor product of per-factor clouds."""

    def __init__(self, parts: Sequence[np.ndarray]):
        self.parts = tuple(np.asarray(p, dtype=complex).reshape(len(p), -1) for p in parts)

    @classmethod
    def single(cls, points: np.ndarray) -> 'PointSet':
        return cls((points,))

    @property
    def is_tensor(self) -> bool:
        return len(self.parts) > 1

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(p) for p in self.parts)

    def __len__(self) -> int:
        return math.prod(self.shape)

    @cached_property
    def points(self) -> np.ndarray:
        points = self.parts[0]
        for part in self.parts[1:]:
            points = np.hstack([np.repeat(points, len(part), axis=0), np.tile(part, (len(points), 1))])
        return points


def _ring_layout(count: int) -> List[int]:
    rings = max(1, math.ceil(count / RING_CAPACITY))
    return [len(chunk) for chunk in np.array_split(np.arange(count), rings)]


def planar_lattice(domain: Domain, count: int, margin: float = DEFAULT_MARGIN,
                   inner_ring: Optional[float] = None) -> np.ndarray:
    """Quasi-uniform interior nodes of a disc or annulus.

    Discs start with the center and put the rest on rings; annuli use rings
    only. Each ring is rotated by one golden-angle offset. With
    ``inner_ring`` a disc lattice leaves the center out and starts with a
    ring at that fraction of the usable radius.
    """
    if count < 1:
        raise DomainError(f"Lattice needs at least one node, got {count}")
    lo, hi = domain.radial_range(margin)
    center = domain.center
    nodes = []
    if isinstance(domain, Disc) and inner_ring is not None:
        if not 0.0 < inner_ring < 1.0:
            raise DomainError(f"Inner ring fraction must lie in (0, 1), got {inner_ring}")
        layout = _ring_layout(count)
        radii = [hi * (inner_ring + (1.0 - inner_ring) * k / (len(layout) + 1)) for k in range(len(layout))]
    elif isinstance(domain, Disc):
        nodes.append(np.array([center]))
        remaining = count - 1
        layout = _ring_layout(remaining) if remaining else []
        radii = [hi * (k + 1) / (len(layout) + 1) for k in range(len(layout))]
    elif isinstance(domain, Annulus):
        layout = _ring_layout(count)
        radii = [lo + (hi - lo) * (k + 0.5) / len(layout) for k in range(len(layout))]
    else:
        raise DomainError(f"No planar lattice for {domain.kind!r}")
    for radius, size in zip(radii, layout):
        theta = GOLDEN_ANGLE + 2.0 * np.pi * np.arange(size) / size
        nodes.append(center + radius * np.exp(1j * theta))
    return np.concatenate(nodes).reshape(-1, 1)


def planar_grid(domain: Domain, count: int, margin: float = DEFAULT_MARGIN, refine: int = 1) -> np.ndarray:
    """Polar sampling grid covering the margin-shrunk disc or annulus.

    Sized from the node lattice of ``count`` nodes; ``refine`` multiplies both
    the radial and the angular resolution.
    """
    layout = _ring_layout(max(count - 1, 1) if isinstance(domain, Disc) else count)
    radial = (2 * len(layout) + 4) * refine
    angular = max(16, 2 * max(layout)) * refine
    lo, hi = domain.radial_range(margin)
    radii = lo + (hi - lo) * np.arange(radial) / (radial - 1)
    theta = 2.0 * np.pi * (np.arange(angular) + 0.5) / angular
    points = []
    for radius in radii:
        if radius == 0.0:
            points.append(np.array([domain.center]))
        else:
            points.append(domain.center + radius * np.exp(1j * theta))
    return np.concatenate(points).reshape(-1, 1)


def _fibered_cloud(domain: FiberedDomain, counts: Sequence[int], margin: float, planar,
                   base_planar=None) -> np.ndarray:
    base = Disc(0j, domain.base_radius)
    rows = []
    for z1 in (base_planar or planar)(base, counts[0])[:, 0]:
        fiber = Disc(0j, float(domain.fiber_radius(np.array([z1]))[0]))
        z2 = planar(fiber, counts[1])[:, 0]
        rows.append(np.stack([np.full(len(z2), z1), z2], axis=1))
    return np.vstack(rows)


def _counts(domain: Domain, counts: Union[int, Sequence[int]]) -> List[int]:
    counts = [int(counts)] if np.isscalar(counts) else [int(c) for c in counts]
    expected = len(domain.factors) if isinstance(domain, Product) else (2 if isinstance(domain, FiberedDomain) else 1)
    if len(counts) != expected:
        raise DomainError(f"{domain.kind} lattice needs {expected} counts, got {counts}")
    return counts


def interior_lattice(domain: Domain, counts: Union[int, Sequence[int]], margin: float = DEFAULT_MARGIN,
                     inner_ring: Optional[float] = None) -> PointSet:
    """Span nodes for the fitter; tensor over product factors, fibered over Hartogs bases.

    ``inner_ring`` moves the nodes of the leading coordinates off the center
    (see ``planar_lattice``); the last coordinate keeps its default layout.
    """
    counts = _counts(domain, counts)
    if isinstance(domain, Product):
        last = len(domain.factors) - 1
        return PointSet(tuple(interior_lattice(f, c, margin, inner_ring if k < last else None).points
                              for k, (f, c) in enumerate(zip(domain.factors, counts))))
    if isinstance(domain, FiberedDomain):
        return PointSet.single(_fibered_cloud(
            domain, counts, margin, lambda d, c: planar_lattice(d, c, margin),
            lambda d, c: planar_lattice(d, c, margin, inner_ring)))
    if isinstance(domain, Ball):
        if counts[0] != 1:
            raise DomainError("Ball lattices support the single center node only")
        return PointSet.single(np.zeros((1, domain.n), dtype=complex))
    return PointSet.single(planar_lattice(domain, counts[0], margin, inner_ring))


def fit_grid(domain: Domain, counts: Union[int, Sequence[int]], margin: float = DEFAULT_MARGIN,
             refine: int = 1) -> PointSet:
    """Least-squares sampling grid matching a node lattice of ``counts``."""
    counts = _counts(domain, counts)
    if isinstance(domain, Product):
        return PointSet(tuple(fit_grid(f, c, margin, refine).points
                              for f, c in zip(domain.factors, counts)))
    if isinstance(domain, FiberedDomain):
        return PointSet.single(_fibered_cloud(
            domain, counts, margin, lambda d, c: planar_grid(d, c, margin, refine)))
    if isinstance(domain, (Disc, Annulus)):
        return PointSet.single(planar_grid(domain, counts[0], margin, refine))
    raise DomainError(f"No fit grid for domain kind {domain.kind!r}")


def verification_grid(domain: Domain, counts: Union[int, Sequence[int]],
                      margin: float = DEFAULT_MARGIN) -> PointSet:
    """Fit grid refined twice in every radial and angular direction."""
    return fit_grid(domain, counts, margin, refine=2)


def zprime_lattice(domain: Domain, margin: float = DEFAULT_MARGIN, size: int = 9) -> np.ndarray:
    """Polar ``size`` x ``size`` lattice of leading coordinates for period and injectivity checks.

    With several leading discs the same polar pattern is placed in every
    leading coordinate simultaneously.
    """
    if isinstance(domain, Product):
        heads = domain.factors[:-1]
    elif isinstance(domain, FiberedDomain):
        heads = (Disc(0j, domain.base_radius),)
    else:
        raise DomainError(f"{domain.kind} has no leading coordinates")
    if not heads or not all(isinstance(h, Disc) and h.dimension == 1 for h in heads):
        raise DomainError("Leading factors must be discs")
    radii = (1 - margin) * (np.arange(size) + 1) / size
    theta = 2.0 * np.pi * np.arange(size) / size
    pattern = np.outer(radii, np.exp(1j * theta)).ravel()
    return np.stack([h.center + h.radius * pattern for h in heads], axis=1)


def random_points(domain: Domain, count: int, rng: np.random.Generator,
                  margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """Random points of the margin-shrunk domain, shape ``(count, n)``."""
    if isinstance(domain, Product):
        return np.hstack([random_points(f, count, rng, margin) for f in domain.factors])
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    if isinstance(domain, (Disc, Annulus)):
        lo, hi = domain.radial_range(margin)
        radius = np.sqrt(rng.uniform(lo ** 2, hi ** 2, count))
        return (domain.center + radius * np.exp(1j * theta)).reshape(-1, 1)
    if isinstance(domain, Ball):
        direction = rng.normal(size=(count, domain.n)) + 1j * rng.normal(size=(count, domain.n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = (1 - margin) * rng.uniform(0.0, 1.0, count) ** (1.0 / (2 * domain.n))
        return direction * radius[:, None]
    if isinstance(domain, FiberedDomain):
        z1 = (1 - margin) * domain.base_radius * np.sqrt(rng.uniform(0.0, 1.0, count)) * np.exp(1j * theta)
        phi = rng.uniform(0.0, 2.0 * np.pi, count)
        r2 = (1 - margin) * domain.fiber_radius(z1) * np.sqrt(rng.uniform(0.0, 1.0, count))
        return np.stack([z1, r2 * np.exp(1j * phi)], axis=1)
    raise DomainError(f"Cannot sample domain kind {domain.kind!r}")
