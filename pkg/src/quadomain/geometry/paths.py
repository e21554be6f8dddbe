import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from quadomain.errors import PathError
from quadomain.geometry.domains import Annulus, Disc, Domain
from quadomain.geometry.rules import gauss_unit

logger = logging.getLogger(__name__)

PANEL_ORDER = 16
MAX_PANELS = 256


@dataclass(frozen=True)
class Segment:
    """Straight segment or circular arc, one per target (arrays of shape ``(N,)``)."""
    kind: str
    start: np.ndarray
    end: np.ndarray
    center: complex = 0j
    radius: np.ndarray = None
    theta0: np.ndarray = None
    theta1: np.ndarray = None

    @classmethod
    def line(cls, start, end) -> 'Segment':
        start, end = np.broadcast_arrays(np.atleast_1d(np.asarray(start, dtype=complex)),
                                         np.atleast_1d(np.asarray(end, dtype=complex)))
        return cls('line', start, end)

    @classmethod
    def arc(cls, center: complex, radius, theta0, theta1) -> 'Segment':
        radius, theta0, theta1 = np.broadcast_arrays(
            *(np.atleast_1d(np.asarray(v, dtype=float)) for v in (radius, theta0, theta1)))
        start = center + radius * np.exp(1j * theta0)
        end = center + radius * np.exp(1j * theta1)
        return cls('arc', start, end, center, radius, theta0, theta1)

    def sample(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Points and d(point)/dx at parameters ``x`` in [0, 1], shape ``(N, len(x))``."""
        if self.kind == 'line':
            delta = (self.end - self.start)[:, None]
            return self.start[:, None] + delta * x[None, :], np.broadcast_to(delta, (len(self.start), len(x)))
        span = (self.theta1 - self.theta0)[:, None]
        theta = self.theta0[:, None] + span * x[None, :]
        offset = self.radius[:, None] * np.exp(1j * theta)
        return self.center + offset, 1j * offset * span

    def length(self) -> np.ndarray:
        if self.kind == 'line':
            return np.abs(self.end - self.start)
        return self.radius * np.abs(self.theta1 - self.theta0)


def _wrap(angle: np.ndarray) -> np.ndarray:
    """Wrap to (-pi, pi]."""
    wrapped = np.angle(np.exp(1j * angle))
    return np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)


def angular_increment(domain: Annulus, base: complex, targets, alternate: bool = False) -> np.ndarray:
    """Angle swept around the annulus center by the canonical (or alternate) path to each target."""
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    delta = _wrap(np.angle(targets - domain.center) - np.angle(base - domain.center))
    if not alternate:
        return delta
    return delta - 2 * np.pi * np.where(delta >= 0, 1.0, -1.0)


def canonical_path(domain: Domain, base: complex, targets, alternate: bool = False) -> List[Segment]:
    """Path from ``base`` to each target inside a planar domain.

    Discs use the straight segment. Annuli go along the circle through the
    base to the target's argument (principal branch), then radially. The
    alternate path goes radially first and then around the other side of
    the hole, so a nonzero period shows up as a disagreement.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if not domain.contains(complex(base)):
        raise PathError(f"Base point {base} lies outside the {domain.kind}")
    outside = ~np.asarray(domain.contains(targets))
    if np.any(outside):
        raise PathError(f"Path target {targets[outside][0]} lies outside the {domain.kind}")

    if isinstance(domain, Disc):
        if not alternate:
            return [Segment.line(base, targets)]
        rel = targets - domain.center
        corner = domain.center + np.abs(rel)
        return [Segment.line(base, corner), Segment.arc(domain.center, np.abs(rel), 0.0, np.angle(rel))]

    if isinstance(domain, Annulus):
        c = domain.center
        rho_a, theta_a = abs(base - c), np.angle(base - c)
        rel = targets - c
        rho_t = np.abs(rel)
        turn = angular_increment(domain, base, targets, alternate)
        if not alternate:
            return [Segment.arc(c, rho_a, theta_a, theta_a + turn),
                    Segment.line(c + rho_a * np.exp(1j * (theta_a + turn)), targets)]
        return [Segment.line(base, c + rho_t * np.exp(1j * theta_a)),
                Segment.arc(c, rho_t, theta_a, theta_a + turn)]

    raise PathError(f"No canonical path for domain kind {domain.kind!r}")


def path_length(segments: List[Segment]) -> np.ndarray:
    return sum(s.length() for s in segments)


def path_nodes(segments: List[Segment], panels: int, order: int = PANEL_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and complex ``d(lambda)`` weights along the path."""
    x, w = gauss_unit(order)
    xs = ((np.arange(panels)[:, None] + x[None, :]) / panels).ravel()
    ws = np.tile(w, panels) / panels
    points, weights = [], []
    for segment in segments:
        pts, dpts = segment.sample(xs)
        points.append(pts)
        weights.append(dpts * ws[None, :])
    return np.hstack(points), np.hstack(weights)


def integrate_path(func: Callable[[np.ndarray], np.ndarray], segments: List[Segment],
                   tol: float, order: int = PANEL_ORDER) -> Tuple[np.ndarray, int]:
    """Integrate ``func`` along the path to every target with panel doubling.

    ``func`` maps an ``(N, K)`` array of path points to values of the same shape.

    Returns:
        Tuple of (integrals of shape ``(N,)``, panel count used)
    """
    panels = 1
    pts, wts = path_nodes(segments, panels, order)
    previous = np.sum(wts * func(pts), axis=1)
    while panels < MAX_PANELS:
        panels *= 2
        pts, wts = path_nodes(segments, panels, order)
        current = np.sum(wts * func(pts), axis=1)
        change = np.max(np.abs(current - previous) / np.maximum(1.0, np.abs(current)), initial=0.0)
        if change <= tol:
            logger.debug(f"Path quadrature converged with {panels} panels (change {change:.2e})")
            return current, panels
        previous = current
    raise PathError(f"Path quadrature did not converge to {tol:.1e} within {MAX_PANELS} panels")
