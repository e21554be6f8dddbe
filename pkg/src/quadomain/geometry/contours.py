import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from quadomain.errors import DomainError
from quadomain.geometry.domains import Annulus, Disc, Domain

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 512


@dataclass(frozen=True)
class Contour:
    """Counterclockwise circle sampled at ``samples`` equispaced points."""
    center: complex
    radius: float
    samples: int = DEFAULT_SAMPLES
    orientation: int = 1

    def __post_init__(self):
        if self.samples < 16 or self.samples % 2:
            raise DomainError(f"Contour sample count must be even and >= 16, got {self.samples}")
        if not self.radius > 0:
            raise DomainError(f"Contour radius must be positive, got {self.radius}")
        if self.orientation not in (1, -1):
            raise DomainError(f"Invalid orientation: {self.orientation}")

    def points(self) -> np.ndarray:
        theta = 2.0 * np.pi * np.arange(self.samples) / self.samples
        return self.center + self.radius * np.exp(1j * self.orientation * theta)

    def dz_weights(self) -> np.ndarray:
        """Trapezoid weights so that ``sum(w * f(points))`` approximates the contour integral."""
        return (self.points() - self.center) * 1j * self.orientation * (2.0 * np.pi / self.samples)

    def integrate(self, func: Callable[[np.ndarray], np.ndarray]) -> complex:
        return complex(np.dot(self.dz_weights(), func(self.points())))

    def refined(self) -> 'Contour':
        return Contour(self.center, self.radius, 2 * self.samples, self.orientation)

    def describe(self):
        return {'center': [self.center.real, self.center.imag], 'radius': self.radius,
                'samples': self.samples, 'orientation': self.orientation}


def inner_contours(domain: Domain, samples: int = DEFAULT_SAMPLES) -> List[Contour]:
    """One circle per bounded complementary component of a planar domain."""
    if not domain.is_planar:
        raise DomainError(f"inner_contours needs a planar domain, got {domain.kind}")
    if isinstance(domain, Disc):
        return []
    if isinstance(domain, Annulus):
        radius = 0.5 * (domain.inner + domain.outer)
        return [Contour(domain.center, radius, samples)]
    raise DomainError(f"No contour rule for planar kind {domain.kind!r}")


def boundary_contours(domain: Domain, margin: float, samples: int) -> List[Contour]:
    """Boundary circles of a planar domain shrunk by ``margin``.

    The outer circle runs counterclockwise and inner circles clockwise, so the
    argument principle over all of them counts zeros inside.
    """
    if isinstance(domain, Disc):
        return [Contour(domain.center, (1 - margin) * domain.radius, samples)]
    if isinstance(domain, Annulus):
        lo, hi = domain.radial_range(margin)
        return [Contour(domain.center, hi, samples), Contour(domain.center, lo, samples, -1)]
    raise DomainError(f"No boundary contours for domain kind {domain.kind!r}")
