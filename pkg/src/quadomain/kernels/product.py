import logging
from typing import List, Sequence

import numpy as np

from quadomain.errors import KernelError
from quadomain.geometry.domains import DEFAULT_MARGIN, MultiIndex, Product, multi_index
from quadomain.kernels.base import KernelFunction

logger = logging.getLogger(__name__)


def _unique_columns(evaluate, w: np.ndarray) -> np.ndarray:
    """Evaluate column-wise on the distinct rows of ``w`` only."""
    unique, inverse = np.unique(w, axis=0, return_inverse=True)
    return evaluate(unique)[:, np.asarray(inverse).reshape(-1)]


class ProductKernel(KernelFunction):
    """``K(z, w) = prod_i K_i(z_i, w_i)`` over the factors of a product domain.

    Derivatives act on disjoint variable blocks, so the Leibniz rule leaves a
    single product of factor derivatives.
    """
    form = 'product'

    def __init__(self, domain: Product, factors: Sequence[KernelFunction], margin: float = DEFAULT_MARGIN):
        super().__init__(domain, margin)
        self.factors = tuple(factors)
        if len(self.factors) != len(domain.factors):
            raise KernelError(f"{len(domain.factors)} factor kernels needed, got {len(self.factors)}")
        self.blocks = domain.blocks()

    def _cross(self, z, w, alpha: MultiIndex, beta: MultiIndex) -> np.ndarray:
        out = np.ones((len(z), len(w)), dtype=complex)
        for kernel, block in zip(self.factors, self.blocks):
            out *= kernel._cross(z[:, block], w[:, block], alpha[block], beta[block])
        return out

    def factor_matrices(self, parts: Sequence[np.ndarray], w, alpha=None, beta=None) -> List[np.ndarray]:
        """Per-factor cross matrices for a tensor point set with one part per factor."""
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        return [_unique_columns(lambda cols, k=kernel, p=part, b=block: k.evaluate(p, cols, alpha[b], beta[b]),
                                w[:, block])
                for kernel, part, block in zip(self.factors, parts, self.blocks)]

    def factor_antiderivative_matrices(self, parts: Sequence[np.ndarray], w, base, alpha=None, beta=None,
                                       tol: float = 1e-12, alternate: bool = False) -> List[np.ndarray]:
        """Like ``factor_matrices`` with the last factor integrated from ``base``."""
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        mats = [_unique_columns(lambda cols, k=kernel, p=part, b=block: k.evaluate(p, cols, alpha[b], beta[b]),
                                w[:, block])
                for kernel, part, block in zip(self.factors[:-1], parts[:-1], self.blocks[:-1])]
        last, block = self.factors[-1], self.blocks[-1]
        integrate = last.alternate_antiderivative_last if alternate else last.antiderivative_last
        mats.append(_unique_columns(
            lambda cols: integrate(parts[-1], cols, base, alpha[block], beta[block], tol), w[:, block]))
        return mats

    def antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        zs, ws = self._check(z, w)
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        head, last = self.blocks[:-1], self.blocks[-1]
        out = self.factors[-1].antiderivative_last(zs[:, last], ws[:, last], base,
                                                   alpha[last], beta[last], tol)
        for kernel, block in zip(self.factors[:-1], head):
            out = out * kernel.evaluate(zs[:, block], ws[:, block], alpha[block], beta[block])
        return out

    def alternate_antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        zs, ws = self._check(z, w)
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        head, last = self.blocks[:-1], self.blocks[-1]
        out = self.factors[-1].alternate_antiderivative_last(zs[:, last], ws[:, last], base,
                                                             alpha[last], beta[last], tol)
        for kernel, block in zip(self.factors[:-1], head):
            out = out * kernel.evaluate(zs[:, block], ws[:, block], alpha[block], beta[block])
        return out

    def describe(self):
        info = super().describe()
        info['factors'] = [k.describe() for k in self.factors]
        return info
