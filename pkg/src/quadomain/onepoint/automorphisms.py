"""Volume preserving polynomial automorphisms and the preimage domains they produce.

Preimages ``f^{-1}(B)`` of the unit ball under an automorphism with unit
Jacobian and polynomial inverse are one-point quadrature domains: the only
node is ``f^{-1}(0)``.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from quadomain.certify.battery import Polynomial
from quadomain.differentiation import cauchy_derivative
from quadomain.errors import ConfigError, DomainError
from quadomain.geometry.domains import Ball, Domain, MultiIndex, as_points

logger = logging.getLogger(__name__)

JACOBIAN_RADIUS = 0.1
ROUNDTRIP_TOL = 1e-12

Terms = Dict[MultiIndex, complex]


def _add(terms: Terms, exponent: MultiIndex, coefficient: complex):
    terms[exponent] = terms.get(exponent, 0j) + complex(coefficient)


def _univariate(coefficients: Sequence[complex], variable: int, dimension: int) -> Terms:
    terms: Terms = {}
    for k, c in enumerate(coefficients):
        if c != 0:
            exponent = [0] * dimension
            exponent[variable] = k
            _add(terms, tuple(exponent), c)
    return terms


def _coordinate(variable: int, dimension: int, sign: float = 1.0) -> Terms:
    exponent = [0] * dimension
    exponent[variable] = 1
    return {tuple(exponent): complex(sign)}


def _polynomial(terms: Terms, dimension: int) -> Polynomial:
    return Polynomial.from_terms({k: c for k, c in terms.items() if c != 0}, dimension)


@dataclass(frozen=True)
class PolyAutomorphism:
    """Polynomial map of C^n with a declared polynomial inverse."""
    name: str
    components: Tuple[Polynomial, ...]
    inverse_components: Tuple[Polynomial, ...]
    unit_jacobian: bool = True
    coefficients: Tuple[complex, ...] = ()

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.components)

    @property
    def inverse_degree(self) -> int:
        return max(p.degree for p in self.inverse_components)

    def __call__(self, points) -> np.ndarray:
        pts, _ = as_points(points, self.dimension)
        return np.stack([p(pts) for p in self.components], axis=1)

    def inverse(self, points) -> np.ndarray:
        pts, _ = as_points(points, self.dimension)
        return np.stack([p(pts) for p in self.inverse_components], axis=1)

    def node(self) -> np.ndarray:
        """``f^{-1}(0)``, the quadrature node of every preimage of a centered ball."""
        return self.inverse(np.zeros((1, self.dimension), dtype=complex))[0]

    def roundtrip_error(self, points) -> float:
        """``max |f^{-1}(f(z)) - z|`` and ``max |f(f^{-1}(z)) - z|`` over ``points``."""
        pts, _ = as_points(points, self.dimension)
        forward = np.max(np.abs(self.inverse(self(pts)) - pts))
        backward = np.max(np.abs(self(self.inverse(pts)) - pts))
        return float(max(forward, backward))

    def jacobian_matrix(self, points, numerical: bool = False) -> np.ndarray:
        """``(P, n, n)`` Jacobian matrices, from exact polynomial derivatives or Cauchy's formula."""
        pts, _ = as_points(points, self.dimension)
        n = self.dimension
        matrix = np.empty((len(pts), n, n), dtype=complex)
        for i, component in enumerate(self.components):
            for k in range(n):
                beta = tuple(int(k == m) for m in range(n))
                if numerical:
                    matrix[:, i, k] = cauchy_derivative(component, pts, beta, radius=JACOBIAN_RADIUS)
                else:
                    matrix[:, i, k] = component.derivative(beta)(pts)
        return matrix

    def jacobian_determinant(self, points, numerical: bool = False) -> np.ndarray:
        return np.linalg.det(self.jacobian_matrix(points, numerical))

    def with_jacobian_error(self, error: float) -> 'PolyAutomorphism':
        """``D o f`` with ``D = diag(1 + error, 1, ...)``; the inverse stays exact, the Jacobian becomes ``1 + error``."""
        scale = 1.0 + error
        first = self.components[0]
        components = (Polynomial(first.exponents, first.coefficients * scale),) + self.components[1:]
        inverse = tuple(Polynomial(p.exponents, p.coefficients * scale ** (-p.exponents[:, 0].astype(float)))
                        for p in self.inverse_components)
        logger.warning(f"Injected Jacobian error {error:g} into {self.name}")
        return PolyAutomorphism(f"{self.name}+jacobian_error", components, inverse, False, self.coefficients)

    def describe(self) -> Dict:
        return {'name': self.name, 'dimension': self.dimension, 'degree': self.degree,
                'inverse_degree': self.inverse_degree, 'declared_unit_jacobian': self.unit_jacobian,
                'coefficients': [[c.real, c.imag] for c in self.coefficients]}


def _check_coefficients(coefficients: Sequence[complex], name: str) -> Tuple[complex, ...]:
    try:
        values = tuple(complex(c) for c in coefficients)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {name} coefficients {coefficients!r}: {e}") from e
    if not all(np.isfinite(c) for c in values):
        raise ConfigError(f"Invalid {name} coefficients {coefficients!r}: not finite")
    return values


def henon(coefficients: Sequence[complex]) -> PolyAutomorphism:
    """Hénon map ``f(z, w) = (w, p(w) - z)`` with inverse ``(z, w) -> (p(z) - w, z)``.

    Args:
        coefficients: ``p`` in ascending powers; ``[0, 0, 1]`` is ``p(w) = w^2``
    """
    p = _check_coefficients(coefficients, 'Hénon')
    second = _univariate(p, 1, 2)
    _add(second, (1, 0), -1.0)
    first_inverse = _univariate(p, 0, 2)
    _add(first_inverse, (0, 1), -1.0)
    return PolyAutomorphism(
        'henon',
        (_polynomial(_coordinate(1, 2), 2), _polynomial(second, 2)),
        (_polynomial(first_inverse, 2), _polynomial(_coordinate(0, 2), 2)),
        True, p)


def shiftlike(coefficients: Sequence[complex]) -> PolyAutomorphism:
    """Shift-like map ``f(z1, z2, z3) = (z2, z3, z1 + q(z3))`` with inverse ``(z3 - q(z2), z1, z2)``."""
    q = _check_coefficients(coefficients, 'shift-like')
    third = _univariate(q, 2, 3)
    _add(third, (1, 0, 0), 1.0)
    first_inverse = {k: -c for k, c in _univariate(q, 1, 3).items()}
    _add(first_inverse, (0, 0, 1), 1.0)
    return PolyAutomorphism(
        'shiftlike',
        (_polynomial(_coordinate(1, 3), 3), _polynomial(_coordinate(2, 3), 3), _polynomial(third, 3)),
        (_polynomial(first_inverse, 3), _polynomial(_coordinate(0, 3), 3), _polynomial(_coordinate(1, 3), 3)),
        True, q)


def automorphism_from_spec(kind: str, coefficients: Sequence[complex], jacobian_error: float = 0.0) -> PolyAutomorphism:
    builders = {'henon': henon, 'shiftlike': shiftlike}
    if kind not in builders:
        raise ConfigError(f"Unsupported automorphism kind: {kind!r}")
    automorphism = builders[kind](coefficients)
    if jacobian_error:
        automorphism = automorphism.with_jacobian_error(jacobian_error)
    return automorphism


def unit_jacobian_check(automorphism: PolyAutomorphism, points, numerical: bool = True) -> float:
    """Largest ``|det f' - 1|`` over ``points``."""
    deviation = float(np.max(np.abs(automorphism.jacobian_determinant(points, numerical) - 1.0)))
    logger.debug(f"{automorphism.name}: max |det f' - 1| = {deviation:.2e}")
    return deviation


@dataclass(frozen=True)
class PreimageDomain(Domain):
    """``f^{-1}(B)`` for a volume preserving automorphism ``f``."""
    automorphism: PolyAutomorphism = None
    target: Ball = field(default_factory=Ball)
    kind = 'preimage'

    def __post_init__(self):
        if self.automorphism is None:
            raise DomainError("A preimage domain needs an automorphism")
        if self.target.dimension != self.automorphism.dimension:
            raise DomainError(f"Target dimension {self.target.dimension} does not match "
                              f"automorphism dimension {self.automorphism.dimension}")

    @property
    def dimension(self) -> int:
        return self.automorphism.dimension

    def _contains(self, pts):
        return self.target._contains(self.automorphism(pts))

    def _within_margin(self, pts, margin):
        return self.target._within_margin(self.automorphism(pts), margin)

    def volume(self) -> float:
        return self.target.volume()

    def membership_expansion(self, z) -> np.ndarray:
        """``|f(z)|^2`` expanded by hand for the shipped families."""
        pts, _ = as_points(z, self.dimension)
        a = self.automorphism
        if a.name == 'henon':
            zz, w = pts[:, 0], pts[:, 1]
            p = np.polyval(list(reversed(a.coefficients)) or [0], w)
            return np.abs(zz) ** 2 + np.abs(w) ** 2 + np.abs(p) ** 2 - 2.0 * np.real(p * np.conj(zz))
        if a.name == 'shiftlike':
            z1, z2, z3 = pts[:, 0], pts[:, 1], pts[:, 2]
            q = np.polyval(list(reversed(a.coefficients)) or [0], z3)
            return (np.abs(z1) ** 2 + np.abs(z2) ** 2 + np.abs(z3) ** 2 + np.abs(q) ** 2
                    + 2.0 * np.real(z1 * np.conj(q)))
        return np.sum(np.abs(a(pts)) ** 2, axis=1)

    def notes(self) -> List[str]:
        if self.automorphism.name == 'shiftlike':
            return ["Shift-like preimage membership uses |z3|^2 from expanding |f(z)|^2 < 1; "
                    "the published display prints |z3|^3, which is not what the expansion gives."]
        return []

    def bounding_radii(self) -> np.ndarray:
        """Per-coordinate bounds ``|z_i| <= sum |c_k|`` from the inverse over the unit polydisc."""
        return np.array([float(np.sum(np.abs(p.coefficients))) for p in self.automorphism.inverse_components])

    def describe(self) -> Dict:
        return {'kind': self.kind, 'automorphism': self.automorphism.describe(), 'target': self.target.describe()}


def preimage_domain(automorphism: PolyAutomorphism, target: Optional[Ball] = None) -> PreimageDomain:
    target = Ball(automorphism.dimension) if target is None else target
    return PreimageDomain(automorphism, target)
