"""Truncated multivariate Taylor jets.

A jet of order ``J`` at a point stores the Taylor coefficients
``a_gamma = f^(gamma)(p) / gamma!`` for ``|gamma| <= J`` in a dense tensor
of shape ``(J + 1,) * n``; entries above total degree ``J`` are kept zero.
"""
import logging
from typing import Callable, Dict, Sequence, Union

import numpy as np

from quadomain.differentiation import cauchy_derivative
from quadomain.errors import JetError
from quadomain.geometry.domains import MultiIndex, index_factorial, multi_indices

logger = logging.getLogger(__name__)

MAX_JET_ORDER = 4

__all__ = ['Jet', 'MAX_JET_ORDER', 'cauchy_derivative', 'compose']


def _mask(n: int, order: int) -> np.ndarray:
    grids = np.indices((order + 1,) * n)
    return grids.sum(axis=0) <= order


class Jet:
    def __init__(self, coefficients: np.ndarray, order: int):
        if order > MAX_JET_ORDER:
            raise JetError(f"Jet order {order} exceeds the supported maximum {MAX_JET_ORDER}")
        coefficients = np.asarray(coefficients, dtype=complex)
        self.order = order
        self.dimension = coefficients.ndim
        if coefficients.shape != (order + 1,) * self.dimension:
            raise JetError(f"Jet tensor shape {coefficients.shape} does not match order {order}")
        self.coefficients = np.where(_mask(self.dimension, order), coefficients, 0.0)

    @classmethod
    def constant(cls, value: complex, dimension: int, order: int) -> 'Jet':
        coefficients = np.zeros((order + 1,) * dimension, dtype=complex)
        coefficients[(0,) * dimension] = value
        return cls(coefficients, order)

    @classmethod
    def variable(cls, index: int, value: complex, dimension: int, order: int) -> 'Jet':
        """Jet of the coordinate ``z_index`` at a point where it equals ``value``."""
        jet = cls.constant(value, dimension, order)
        if order >= 1:
            unit = [0] * dimension
            unit[index] = 1
            jet.coefficients[tuple(unit)] = 1.0
        return jet

    @classmethod
    def from_derivatives(cls, derivative: Callable[[MultiIndex], complex], dimension: int, order: int) -> 'Jet':
        """Build from a callable returning ``f^(gamma)(p)``."""
        coefficients = np.zeros((order + 1,) * dimension, dtype=complex)
        for gamma in multi_indices(dimension, order):
            coefficients[gamma] = derivative(gamma) / index_factorial(gamma)
        return cls(coefficients, order)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], point, order: int,
                      radius: float = 0.05) -> 'Jet':
        """Jet of a vectorized holomorphic function, differentiated by Cauchy's formula."""
        point = np.atleast_1d(np.asarray(point, dtype=complex))
        return cls.from_derivatives(
            lambda gamma: complex(cauchy_derivative(func, point.reshape(1, -1), gamma, radius)[0]),
            len(point), order)

    @property
    def value(self) -> complex:
        return complex(self.coefficients[(0,) * self.dimension])

    def coefficient(self, gamma: Sequence[int]) -> complex:
        if sum(gamma) > self.order:
            return 0j
        return complex(self.coefficients[tuple(gamma)])

    def derivative(self, gamma: Sequence[int]) -> complex:
        return self.coefficient(gamma) * index_factorial(gamma)

    def shifted(self) -> 'Jet':
        """The jet minus its constant term."""
        return self - self.value

    def _compatible(self, other: 'Jet'):
        if other.order != self.order or other.dimension != self.dimension:
            raise JetError("Jets of different order or dimension cannot be combined")

    def __add__(self, other: Union['Jet', complex]) -> 'Jet':
        if isinstance(other, Jet):
            self._compatible(other)
            return Jet(self.coefficients + other.coefficients, self.order)
        return self + Jet.constant(other, self.dimension, self.order)

    __radd__ = __add__

    def __neg__(self) -> 'Jet':
        return Jet(-self.coefficients, self.order)

    def __sub__(self, other: Union['Jet', complex]) -> 'Jet':
        return self + (-other)

    def __mul__(self, other: Union['Jet', complex]) -> 'Jet':
        if not isinstance(other, Jet):
            return Jet(self.coefficients * other, self.order)
        self._compatible(other)
        size = self.order + 1
        out = np.zeros_like(self.coefficients)
        for index in zip(*np.nonzero(self.coefficients)):
            target = tuple(slice(i, size) for i in index)
            source = tuple(slice(0, size - i) for i in index)
            out[target] += self.coefficients[index] * other.coefficients[source]
        return Jet(out, self.order)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> 'Jet':
        result = Jet.constant(1.0, self.dimension, self.order)
        for _ in range(power):
            result = result * self
        return result

    def to_dict(self) -> Dict:
        return {'order': self.order, 'coefficients': {
            ','.join(map(str, g)): [self.coefficient(g).real, self.coefficient(g).imag]
            for g in multi_indices(self.dimension, self.order)}}


def monomial_jets(inner: Sequence[Jet], outer_order: int) -> Dict[MultiIndex, Jet]:
    """``prod_i (inner_i - inner_i(p))^{gamma_i} / gamma!`` for every ``|gamma| <= outer_order``.

    Composing ``psi`` with a map whose jets are ``inner`` is the linear
    combination ``sum_gamma psi^(gamma)(q) * result[gamma]`` with ``q`` the
    value of the map.
    """
    shifted = [jet.shifted() for jet in inner]
    result = {}
    for gamma in multi_indices(len(inner), outer_order):
        term = Jet.constant(1.0 / index_factorial(gamma), inner[0].dimension, inner[0].order)
        for jet, power in zip(shifted, gamma):
            term = term * jet ** power
        result[gamma] = term
    return result


def compose(outer: Jet, inner: Sequence[Jet]) -> Jet:
    """Jet of ``psi o F`` from the jet of ``psi`` at ``F(p)`` and the jets of ``F`` at ``p``."""
    if len(inner) != outer.dimension:
        raise JetError(f"Outer jet has {outer.dimension} variables but {len(inner)} inner jets were given")
    total = Jet.constant(0.0, inner[0].dimension, inner[0].order)
    for gamma, term in monomial_jets(inner, min(outer.order, inner[0].order)).items():
        total = total + term * outer.derivative(gamma)
    return total
