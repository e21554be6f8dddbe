import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from quadomain.errors import PeriodError, PeriodMatrixSingular
from quadomain.geometry.contours import Contour
from quadomain.geometry.domains import Annulus, Domain, fiber_domain_of
from quadomain.geometry.lattices import GOLDEN_ANGLE, PointSet
from quadomain.kernels.base import KernelFunction
from quadomain.span.element import SpanElement

logger = logging.getLogger(__name__)

DOUBLING_TOL = 1e-12
CONDITION_LIMIT = 1e6
MAX_RESELECTIONS = 20


@dataclass
class PeriodVector:
    """Periods ``c_i(z') = int_{gamma_i} u(z', lam) d lam`` on a set of leading coordinates."""
    zprime: np.ndarray
    values: np.ndarray
    doubling_change: float = 0.0

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def to_dict(self) -> Dict:
        return {'points': len(self.zprime), 'contours': int(self.values.shape[1]),
                'max_abs': self.max_abs(), 'doubling_change': self.doubling_change}


@dataclass
class PeriodMatrix:
    """``M_il = int_{gamma_i} K(lam, zeta_l) d lam`` with its kernel points."""
    entries: np.ndarray
    zetas: np.ndarray
    condition: float
    contours: List[Contour] = field(default_factory=list)
    reselections: int = 0

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """``M^{-1} rhs``; an empty matrix maps to an empty result."""
        if self.size == 0:
            return np.zeros((0,) + rhs.shape[1:], dtype=complex)
        return scipy.linalg.solve(self.entries, rhs)

    def to_dict(self) -> Dict:
        return {'size': self.size, 'condition': self.condition, 'reselections': self.reselections,
                'zetas': [[z.real, z.imag] for z in self.zetas],
                'entries': [[[e.real, e.imag] for e in row] for row in self.entries]}


def _check_contours(domain: Domain, contours: Sequence[Contour], margin: float):
    for contour in contours:
        if not np.all(domain.within_margin(contour.points(), margin)):
            raise PeriodError(f"Contour of radius {contour.radius} leaves the certified kernel margin")


def _periods_at(u: SpanElement, contours: Sequence[Contour], zprime: np.ndarray) -> np.ndarray:
    values = np.empty((len(zprime), len(contours)), dtype=complex)
    for i, contour in enumerate(contours):
        samples = contour.points().reshape(-1, 1)
        if zprime.shape[1]:
            grid = PointSet((zprime, samples)) if zprime.shape[1] == 1 else PointSet.single(
                np.hstack([np.repeat(zprime, len(samples), axis=0), np.tile(samples, (len(zprime), 1))]))
        else:
            grid = PointSet.single(samples)
        sampled = u.evaluate_on(grid).reshape(len(zprime), len(samples))
        values[:, i] = sampled @ contour.dz_weights()
    return values


def compute_periods(u: SpanElement, contours: Sequence[Contour], zprime,
                    tol: float = DOUBLING_TOL) -> PeriodVector:
    """Trapezoid periods of ``u`` around each contour, checked by sample doubling."""
    zprime = np.atleast_2d(np.asarray(zprime, dtype=complex))
    if zprime.shape[1] != u.kernel.dimension - 1:
        zprime = zprime.reshape(-1, u.kernel.dimension - 1)
    if not contours:
        return PeriodVector(zprime, np.zeros((len(zprime), 0), dtype=complex))
    fiber = fiber_domain_of(u.kernel.domain)
    _check_contours(fiber, contours, u.kernel.margin)

    coarse = _periods_at(u, contours, zprime)
    fine = _periods_at(u, [c.refined() for c in contours], zprime)
    change = float(np.max(np.abs(fine - coarse) / np.maximum(1.0, np.abs(fine))))
    if change > tol:
        raise PeriodError(f"Contour periods changed by {change:.2e} under sample doubling")
    return PeriodVector(zprime, fine, change)


def _default_zetas(domain: Annulus, count: int, turn: int) -> np.ndarray:
    radius = math.sqrt(domain.inner * domain.outer)
    theta = 2.0 * np.pi * np.arange(count) / count + turn * GOLDEN_ANGLE
    return domain.center + radius * np.exp(1j * theta)


def build_period_matrix(kernel: KernelFunction, contours: Sequence[Contour],
                        candidates: Optional[Sequence[complex]] = None,
                        condition_limit: float = CONDITION_LIMIT) -> PeriodMatrix:
    """Period matrix of kernel sections at points ``zeta_l`` of a planar domain.

    Without candidates the points sit on the circle of radius
    ``sqrt(inner * outer)`` at equispaced angles; ill-conditioned choices are
    rotated by the golden angle and retried.
    """
    count = len(contours)
    if count == 0:
        return PeriodMatrix(np.zeros((0, 0), dtype=complex), np.zeros(0, dtype=complex), 1.0)
    domain = kernel.domain
    _check_contours(domain, contours, kernel.margin)
    weights = [c.dz_weights() for c in contours]
    points = [c.points().reshape(-1, 1) for c in contours]

    for turn in range(MAX_RESELECTIONS + 1):
        if candidates is not None and turn == 0:
            zetas = np.asarray(candidates, dtype=complex).reshape(-1)
            if len(zetas) != count:
                raise PeriodError(f"Expected {count} period points, got {len(zetas)}")
        elif isinstance(domain, Annulus):
            zetas = _default_zetas(domain, count, turn)
        else:
            raise PeriodError(f"No period point rule for {domain.kind}")
        if not np.all(domain.within_margin(zetas, kernel.margin)):
            raise PeriodError("Period points must lie inside the certified kernel margin")
        entries = np.array([[complex(w @ kernel.evaluate(p, np.array([[zeta]]))[:, 0]) for zeta in zetas]
                            for w, p in zip(weights, points)])
        condition = float(np.linalg.cond(entries))
        if np.isfinite(condition) and condition <= condition_limit:
            logger.debug(f"Period matrix condition {condition:.2e} after {turn} reselections")
            return PeriodMatrix(entries, zetas, condition, list(contours), turn)
        logger.warning(f"Period matrix condition {condition:.2e} above {condition_limit:.0e}; "
                       f"rotating period points")
    raise PeriodMatrixSingular(f"No period matrix with condition below {condition_limit:.0e} "
                               f"after {MAX_RESELECTIONS} reselections")
