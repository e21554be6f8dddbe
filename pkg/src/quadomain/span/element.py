import logging
import string
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from quadomain.errors import DomainError
from quadomain.geometry.domains import MultiIndex, as_points, multi_index
from quadomain.geometry.lattices import PointSet
from quadomain.kernels.base import KernelFunction
from quadomain.kernels.product import ProductKernel

logger = logging.getLogger(__name__)

MERGE_TOL = 1e-9

Term = Tuple[np.ndarray, MultiIndex, complex]


class SpanElement:
    """Finite combination ``sum_j t_j K^(alpha_j)(., b_j)`` over one kernel."""

    def __init__(self, kernel: KernelFunction, nodes, alphas: Sequence[MultiIndex], coefficients,
                 check_margin: bool = True):
        n = kernel.dimension
        self.kernel = kernel
        self.nodes, _ = as_points(np.asarray(nodes, dtype=complex).reshape(-1, n), n)
        self.alphas = [multi_index(a, n) for a in alphas]
        self.coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
        if not len(self.nodes):
            raise DomainError("A span element needs at least one term")
        if not len(self.nodes) == len(self.alphas) == len(self.coefficients):
            raise DomainError("Span nodes, indices and coefficients differ in length")
        if check_margin:
            inside = np.asarray(kernel.domain.within_margin(self.nodes, kernel.margin))
            if not np.all(inside):
                raise DomainError(f"Span node {self.nodes[~inside][0]} lies outside the certified margin")

    def __len__(self) -> int:
        return len(self.coefficients)

    @property
    def terms(self) -> List[Term]:
        return list(zip(self.nodes, self.alphas, self.coefficients))

    @property
    def max_order(self) -> int:
        return max(sum(a) for a in self.alphas)

    def _groups(self) -> Dict[MultiIndex, np.ndarray]:
        groups: Dict[MultiIndex, List[int]] = {}
        for i, alpha in enumerate(self.alphas):
            groups.setdefault(alpha, []).append(i)
        return {alpha: np.array(rows) for alpha, rows in groups.items()}

    def evaluate(self, z, beta=None) -> np.ndarray:
        """``d^beta u`` at every row of ``z``."""
        zs, _ = as_points(z, self.kernel.dimension)
        out = np.zeros(len(zs), dtype=complex)
        for alpha, rows in self._groups().items():
            out += self.kernel.evaluate(zs, self.nodes[rows], alpha, beta) @ self.coefficients[rows]
        return out

    def evaluate_on(self, points: PointSet, beta=None) -> np.ndarray:
        """Evaluate on a point set, exploiting tensor structure for product kernels."""
        if not (points.is_tensor and isinstance(self.kernel, ProductKernel)
                and len(points.parts) == len(self.kernel.factors)):
            return self.evaluate(points.points, beta)
        letters = string.ascii_lowercase[:len(points.parts)]
        spec = ','.join(f'{c}z' for c in letters) + ',z->' + letters
        out = np.zeros(points.shape, dtype=complex)
        for alpha, rows in self._groups().items():
            mats = self.kernel.factor_matrices(points.parts, self.nodes[rows], alpha, beta)
            out += np.einsum(spec, *mats, self.coefficients[rows])
        return out.ravel()

    def antiderivative(self, z, base: complex, beta=None, tol: float = 1e-12,
                       alternate: bool = False) -> np.ndarray:
        """``int_base^{z_n} d^beta u(z', lam) d lam`` at every row of ``z``."""
        zs, _ = as_points(z, self.kernel.dimension)
        integrate = (self.kernel.alternate_antiderivative_last if alternate
                     else self.kernel.antiderivative_last)
        out = np.zeros(len(zs), dtype=complex)
        for alpha, rows in self._groups().items():
            out += integrate(zs, self.nodes[rows], base, alpha, beta, tol) @ self.coefficients[rows]
        return out

    def antiderivative_on(self, points: PointSet, base: complex, beta=None, tol: float = 1e-12,
                          alternate: bool = False) -> np.ndarray:
        """``antiderivative`` on a point set, separable over product factors."""
        if not (points.is_tensor and isinstance(self.kernel, ProductKernel)
                and len(points.parts) == len(self.kernel.factors)):
            return self.antiderivative(points.points, base, beta, tol, alternate)
        letters = string.ascii_lowercase[:len(points.parts)]
        spec = ','.join(f'{c}z' for c in letters) + ',z->' + letters
        out = np.zeros(points.shape, dtype=complex)
        for alpha, rows in self._groups().items():
            mats = self.kernel.factor_antiderivative_matrices(points.parts, self.nodes[rows], base, alpha,
                                                              beta, tol, alternate)
            out += np.einsum(spec, *mats, self.coefficients[rows])
        return out.ravel()

    def merged(self, tol: float = MERGE_TOL) -> 'SpanElement':
        """Combine terms with the same index at nodes closer than ``tol``."""
        nodes, alphas, coefs = [], [], []
        for node, alpha, coef in self.terms:
            for k, (other, other_alpha) in enumerate(zip(nodes, alphas)):
                if other_alpha == alpha and np.max(np.abs(other - node)) <= tol:
                    coefs[k] += coef
                    break
            else:
                nodes.append(node)
                alphas.append(alpha)
                coefs.append(coef)
        if len(nodes) < len(self):
            logger.debug(f"Merged {len(self) - len(nodes)} coincident span terms")
        return SpanElement(self.kernel, np.array(nodes), alphas, np.array(coefs), check_margin=False)

    def combined(self, other: 'SpanElement') -> 'SpanElement':
        """Termwise sum of two elements over the same kernel."""
        if other.kernel is not self.kernel:
            raise DomainError("Cannot add span elements over different kernels")
        return SpanElement(self.kernel, np.vstack([self.nodes, other.nodes]), self.alphas + other.alphas,
                           np.concatenate([self.coefficients, other.coefficients]), check_margin=False)

    def with_coefficients(self, coefficients) -> 'SpanElement':
        return SpanElement(self.kernel, self.nodes, self.alphas, coefficients, check_margin=False)

    def to_dict(self) -> Dict:
        return {
            'kernel': self.kernel.describe(),
            'terms': [{'node': [[c.real, c.imag] for c in node], 'alpha': list(alpha),
                       'coefficient': [coef.real, coef.imag]} for node, alpha, coef in self.terms],
        }


def eval_span(u: SpanElement, z) -> complex:
    return complex(u.evaluate(np.atleast_1d(z))[0])


def eval_span_deriv(u: SpanElement, beta, z) -> complex:
    return complex(u.evaluate(np.atleast_1d(z), beta)[0])


def single_term(kernel: KernelFunction, node, coefficient: complex, alpha: Optional[MultiIndex] = None) -> SpanElement:
    node = np.atleast_1d(np.asarray(node, dtype=complex))
    return SpanElement(kernel, node.reshape(1, -1), [multi_index(alpha, kernel.dimension)], [coefficient])
