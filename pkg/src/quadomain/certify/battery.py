import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from quadomain.errors import ConfigError
from quadomain.geometry.domains import MultiIndex, multi_index, multi_indices

logger = logging.getLogger(__name__)

BATTERY_VERSIONS = (1,)
MONOMIAL_DEGREE = 6
RANDOM_POLYNOMIALS = 5
RANDOM_DEGREE = 4
BATTERY_SEED = 20240917

Derivative = Callable[[np.ndarray, MultiIndex], np.ndarray]


def _falling(k: np.ndarray, j: int) -> np.ndarray:
    out = np.ones_like(k)
    for i in range(j):
        out = out * (k - i)
    return out


@dataclass(frozen=True)
class Polynomial:
    """Sparse polynomial ``sum_k c_k z^k`` in ``dimension`` variables."""
    exponents: np.ndarray
    coefficients: np.ndarray

    @classmethod
    def from_terms(cls, terms: Dict[MultiIndex, complex], dimension: int) -> 'Polynomial':
        if not terms:
            return cls(np.zeros((0, dimension), dtype=int), np.zeros(0, dtype=complex))
        exps = np.array(list(terms), dtype=int).reshape(-1, dimension)
        return cls(exps, np.array(list(terms.values()), dtype=complex))

    @classmethod
    def monomial(cls, gamma: Sequence[int]) -> 'Polynomial':
        return cls.from_terms({tuple(gamma): 1.0}, len(gamma))

    @property
    def dimension(self) -> int:
        return self.exponents.shape[1]

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max(initial=0))

    def derivative(self, beta: Sequence[int]) -> 'Polynomial':
        beta = np.asarray(beta, dtype=int)
        keep = np.all(self.exponents >= beta, axis=1)
        exps = self.exponents[keep]
        factor = np.prod([_falling(exps[:, i], int(b)) for i, b in enumerate(beta)], axis=0)
        return Polynomial(exps - beta, self.coefficients[keep] * factor)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=complex))
        out = np.zeros(len(points), dtype=complex)
        for exps, coef in zip(self.exponents, self.coefficients):
            out += coef * np.prod(points ** exps, axis=1)
        return out


@dataclass(frozen=True)
class BatteryFunction:
    """Holomorphic test function with analytic derivatives of every order."""
    name: str
    family: str
    dimension: int
    evaluate: Derivative = field(repr=False)
    degree: Optional[int] = None
    exponents: Optional[MultiIndex] = None

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(np.atleast_2d(np.asarray(points, dtype=complex)), (0,) * self.dimension)

    def derivative(self, points, beta) -> np.ndarray:
        return self.evaluate(np.atleast_2d(np.asarray(points, dtype=complex)), multi_index(beta, self.dimension))

    def describe(self) -> Dict:
        return {'name': self.name, 'family': self.family, 'degree': self.degree}


def polynomial_function(name: str, poly: Polynomial, family: str = 'polynomial',
                        exponents: Optional[MultiIndex] = None) -> BatteryFunction:
    return BatteryFunction(name, family, poly.dimension, lambda z, beta: poly.derivative(beta)(z), poly.degree,
                           exponents)


def monomial_function(gamma: Sequence[int]) -> BatteryFunction:
    name = 'z^(' + ','.join(map(str, gamma)) + ')'
    return polynomial_function(name, Polynomial.monomial(gamma), 'monomial', tuple(int(g) for g in gamma))


def exponential_function(rate: np.ndarray) -> BatteryFunction:
    """``exp(<z, rate>)`` with ``d^beta = rate^beta exp(<z, rate>)``."""
    rate = np.asarray(rate, dtype=complex)

    def evaluate(z, beta):
        return np.prod(rate ** np.asarray(beta)) * np.exp(z @ rate)

    label = ','.join(f"{c.real:g}{c.imag:+g}j" for c in rate)
    return BatteryFunction(f"exp(<z,({label})>)", 'exponential', len(rate), evaluate)


def rational_function(direction: np.ndarray, pole: float) -> BatteryFunction:
    """Kernel-like section ``(pole - <z, direction>)^-2``."""
    direction = np.asarray(direction, dtype=complex)

    def evaluate(z, beta):
        k = sum(beta)
        return (math.factorial(k + 1) * np.prod(direction ** np.asarray(beta))
                / (pole - z @ direction) ** (k + 2))

    return BatteryFunction(f"1/({pole:g}-<z,p>)^2", 'rational', len(direction), evaluate)


def monomial_battery(dimension: int, degree: int = MONOMIAL_DEGREE) -> List[BatteryFunction]:
    return [monomial_function(gamma) for gamma in multi_indices(dimension, degree)]


def random_polynomials(dimension: int, count: int = RANDOM_POLYNOMIALS, degree: int = RANDOM_DEGREE,
                       seed: int = BATTERY_SEED) -> List[BatteryFunction]:
    rng = np.random.default_rng(seed)
    indices = multi_indices(dimension, degree)
    out = []
    for k in range(count):
        coefficients = rng.normal(size=len(indices)) + 1j * rng.normal(size=len(indices))
        poly = Polynomial.from_terms(dict(zip(indices, coefficients)), dimension)
        out.append(polynomial_function(f"random_poly_{k}", poly))
    return out


def default_battery(dimension: int, version: int = 1) -> List[BatteryFunction]:
    """Fixed battery for identity checks: monomials to degree 6, exponentials and rational sections.

    Version 1 content never changes so that residual reports stay comparable
    across runs.
    """
    if version not in BATTERY_VERSIONS:
        raise ConfigError(f"Unknown battery version {version}; known {BATTERY_VERSIONS}")
    battery = monomial_battery(dimension)
    for k in range(3):
        rate = 0.5 * np.exp(2j * np.pi * (k + 0.25 * np.arange(dimension)) / 3)
        battery.append(exponential_function(rate))
    for k in range(2):
        direction = np.exp(1j * (k + 1) * np.arange(1, dimension + 1)) / np.sqrt(dimension)
        battery.append(rational_function(direction, 3.0 + k))
    logger.debug(f"Battery v{version} in {dimension} variables: {len(battery)} functions")
    return battery


def polynomial_battery(dimension: int, version: int = 1) -> List[BatteryFunction]:
    """Monomials to degree 6 plus five fixed random polynomials."""
    if version not in BATTERY_VERSIONS:
        raise ConfigError(f"Unknown battery version {version}; known {BATTERY_VERSIONS}")
    return monomial_battery(dimension) + random_polynomials(dimension)
