import logging
from typing import List, Optional, Tuple

import numpy as np

from quadomain.errors import KernelError
from quadomain.geometry.domains import (
    DEFAULT_MARGIN, Annulus, Ball, Disc, Domain, FiberedDomain, MultiIndex, Product, multi_index, multi_indices,
)
from quadomain.geometry.paths import Segment, integrate_path
from quadomain.geometry.rules import volume_rule
from quadomain.kernels.base import KernelFunction
from quadomain.parallel import map_chunks, split_rows

logger = logging.getLogger(__name__)

NORM_REFINEMENT_TOL = 1e-10
# relative size of the estimated dropped tail that evaluation accepts
TAIL_TOL = 1e-12
TAIL_SHELLS = 4
MARGIN_CANDIDATES = tuple(round(0.05 * k, 2) for k in range(1, 20))


def _centers(domain: Domain) -> np.ndarray:
    if isinstance(domain, Disc):
        return np.array([domain.center])
    if isinstance(domain, Product):
        if not all(isinstance(f, Disc) for f in domain.factors):
            raise KernelError("Series kernels need every product factor to be a disc")
        return np.array([f.center for f in domain.factors])
    if isinstance(domain, (Ball, FiberedDomain)):
        return np.zeros(domain.dimension, dtype=complex)
    if isinstance(domain, Annulus):
        raise KernelError("Monomials do not span the Bergman space of an annulus")
    raise KernelError(f"No monomial basis for domain kind {domain.kind!r}")


def _power_table(values: np.ndarray, top: int) -> np.ndarray:
    """``values[:, i] ** p`` for ``p = 0..top`` with shape ``(N, n, top + 1)``."""
    table = np.ones(values.shape + (top + 1,), dtype=values.dtype)
    for p in range(1, top + 1):
        table[..., p] = table[..., p - 1] * values
    return table


class SeriesReinhardtKernel(KernelFunction):
    """``K(z, w) = sum_{|a| <= T} z^a conj(w)^a / ||z^a||^2`` with numerically computed norms."""
    form = 'series_reinhardt'
    row_chunk = 512

    def __init__(self, domain: Domain, indices: List[MultiIndex], norms: np.ndarray,
                 truncation: int, rule_order: int, diagnostic: float, margin: float = DEFAULT_MARGIN,
                 tail_tol: float = TAIL_TOL):
        super().__init__(domain, margin)
        self.center = _centers(domain)
        self.indices = np.array(indices, dtype=int)
        self.norms = np.asarray(norms, dtype=float)
        self.inverse_norms = 1.0 / self.norms
        self.truncation = truncation
        self.rule_order = rule_order
        self.diagnostic = diagnostic
        self.degrees = self.indices.sum(axis=1)
        self.shell_matrix = (self.degrees[:, None] == np.arange(truncation + 1)[None, :]).astype(float)
        self.tail_tol = tail_tol
        self.certified_margin: Optional[float] = None

    def _monomials(self, points: np.ndarray, order: MultiIndex, conjugate: bool = False,
                   extra: int = 0, terms: Optional[np.ndarray] = None):
        """Rows ``d^order (p^a)`` for the retained indices ``a`` (all, or those in ``terms``)."""
        indices = self.indices if terms is None else self.indices[terms]
        shifted = points - self.center
        if conjugate:
            shifted = np.conj(shifted)
        table = _power_table(shifted, self.truncation + extra)
        out = np.ones((len(points), len(indices)), dtype=complex)
        for i, k in enumerate(order):
            coef = np.ones(len(indices))
            for step in range(k):
                coef = coef * (indices[:, i] - step)
            out *= coef * table[:, i, np.clip(indices[:, i] - k, 0, None)]
        return out, table

    def _active(self, ws: np.ndarray, alpha: MultiIndex) -> Tuple[np.ndarray, np.ndarray]:
        """Conjugate rows at ``ws`` restricted to the terms that do not vanish there."""
        right, _ = self._monomials(ws, alpha, conjugate=True)
        terms = np.flatnonzero(np.any(right != 0, axis=0))
        return right[:, terms], terms

    def _shells(self, rows: np.ndarray, terms: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Last retained shell ``sum_{|a|=T} |row_a|^2 / ||p^a||^2``, its growth ratio and the retained total."""
        weights = np.abs(rows) ** 2 * self.inverse_norms[terms]
        shells = weights @ self.shell_matrix[terms]
        ratio = np.zeros(len(rows))
        for k in range(max(self.truncation - TAIL_SHELLS, 0) + 1, self.truncation + 1):
            upper, lower = shells[:, k], shells[:, k - 1]
            step = np.divide(upper, lower, out=np.where(upper > 0, np.inf, 0.0), where=lower > 0)
            ratio = np.maximum(ratio, step)
        return shells[:, -1], ratio, weights.sum(axis=1)

    def tail_estimate(self, left: np.ndarray, right: np.ndarray, terms: Optional[np.ndarray] = None) -> np.ndarray:
        """Estimated size of the dropped terms ``|a| > T`` relative to the retained diagonal.

        Shellwise Cauchy-Schwarz bounds the pair terms of degree ``k`` by
        ``sqrt(D_k(z) D_k(w))``; beyond ``T`` the shells are extrapolated
        geometrically with the largest ratio seen over the last few degrees.
        """
        terms = np.arange(len(self.indices)) if terms is None else terms
        z_last, z_ratio, z_total = self._shells(left, terms)
        w_last, w_ratio, w_total = self._shells(right, terms)
        with np.errstate(invalid='ignore', divide='ignore', over='ignore'):
            q = np.sqrt(np.outer(z_ratio, w_ratio))
            head = np.sqrt(np.outer(z_last, w_last))
            tail = np.where(head == 0, 0.0, np.where(q < 1, head * q / (1 - q), np.inf))
        scale = np.maximum(np.sqrt(np.outer(z_total, w_total)), self.inverse_norms[0])
        return tail / scale

    def _enforce_tail(self, left: np.ndarray, right: np.ndarray, terms: np.ndarray):
        worst = float(np.max(self.tail_estimate(left, right, terms), initial=0.0))
        if worst > self.tail_tol:
            raise KernelError(f"Truncation bound not achievable at requested points: estimated relative "
                              f"tail {worst:.1e} above {self.tail_tol:.0e} at T={self.truncation}")

    def _cross(self, z, w, alpha, beta):
        right, terms = self._active(w, alpha)
        left, _ = self._monomials(z, beta, terms=terms)
        self._enforce_tail(left, right, terms)
        return (left * self.inverse_norms[terms]) @ right.T

    def antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        zs, ws = self._check(z, w)
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        if beta[-1] > 0:
            return super().antiderivative_last(zs, ws, base, alpha, beta, tol)
        right, terms = self._active(ws, alpha)

        def rows(block: slice) -> np.ndarray:
            points = zs[block]
            self._enforce_tail(self._monomials(points, beta, terms=terms)[0], right, terms)
            start = points.copy()
            start[:, -1] = base
            return (self._primitives(points, beta, terms) - self._primitives(start, beta, terms)) @ right.T

        return np.vstack(map_chunks(rows, split_rows(len(zs), self.row_chunk)))

    def _primitives(self, points, beta, terms: np.ndarray) -> np.ndarray:
        # integrate the last variable termwise: p^a -> p^(a + e_n) / (a_n + 1)
        head, table = self._monomials(points, beta[:-1], extra=1, terms=terms)
        a_n = self.indices[terms, -1]
        return head * table[:, -1, a_n + 1] / (a_n + 1) * self.inverse_norms[terms]

    def alternate_antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        """Gauss-Legendre integration along the straight segment (fibers are discs about 0)."""
        zs, ws = self._check(z, w)
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        segments = [Segment.line(base, zs[:, -1])]
        out = np.empty((len(zs), len(ws)), dtype=complex)
        for j, wj in enumerate(ws):
            def integrand(lam):
                pts = np.repeat(zs, lam.shape[1], axis=0)
                pts[:, -1] = lam.ravel()
                return self._cross(pts, wj[None, :], alpha, beta)[:, 0].reshape(lam.shape)

            out[:, j], _ = integrate_path(integrand, segments, tol)
        return out

    def describe(self):
        info = super().describe()
        info.update({'truncation': self.truncation, 'rule_order': self.rule_order,
                     'terms': len(self.indices), 'largest_retained_term': self.diagnostic,
                     'norm_of_constant': float(self.norms[0]), 'certified_margin': self.certified_margin,
                     'requested_margin': self.margin, 'tail_tolerance': self.tail_tol})
        return info


def monomial_norms(domain: Domain, indices: np.ndarray, order: int, center: np.ndarray):
    """Squared norms of ``(z - center)^a`` by a volume rule with one angle per coordinate."""
    rule = volume_rule(domain, order, angular_order=1)
    moduli = np.abs(rule.nodes - center)
    table = _power_table(moduli ** 2, int(indices.max(initial=0)))
    values = np.ones((len(moduli), len(indices)))
    for i in range(indices.shape[1]):
        values *= table[:, i, indices[:, i]]
    return rule.weights @ values, rule


def build_reinhardt_kernel(domain: Domain, truncation: int, rule_order: Optional[int] = None,
                           margin: float = DEFAULT_MARGIN) -> SeriesReinhardtKernel:
    """Series kernel from monomial norms of a complete circular domain.

    Args:
        domain: Disc, Ball, polydisc, complex ellipsoid or Hartogs domain
        truncation: Largest retained total degree ``T``
        rule_order: Radial order of the norm rule; defaults to ``T + 8``
        margin: Certified evaluation margin

    Returns:
        SeriesReinhardtKernel with the norm table frozen
    """
    center = _centers(domain)
    if truncation < 0:
        raise KernelError(f"Invalid truncation order: {truncation}")
    order = truncation + 8 if rule_order is None else int(rule_order)
    indices = np.array(multi_indices(domain.dimension, truncation), dtype=int)

    norms, rule = monomial_norms(domain, indices, order, center)
    refined, _ = monomial_norms(domain, indices, order + order // 2, center)
    change = float(np.max(np.abs(refined - norms) / refined))
    if not np.all(norms > 0) or change > NORM_REFINEMENT_TOL:
        raise KernelError(f"Norm rule order {order} too low for degree {truncation} (refinement change {change:.1e})")

    inside = np.asarray(domain.within_margin(rule.nodes, margin))
    top = indices.sum(axis=1) == truncation
    diagnostic = 0.0
    if np.any(inside):
        moduli = np.abs(rule.nodes[inside] - center)
        table = _power_table(moduli ** 2, truncation)
        terms = np.ones((len(moduli), int(top.sum())))
        for i in range(indices.shape[1]):
            terms *= table[:, i, indices[top, i]]
        diagnostic = float(np.max(terms / refined[top]))
    logger.info(f"Series kernel on {domain.kind}: {len(indices)} terms, T={truncation}, "
                f"largest retained term at margin {diagnostic:.2e}")
    kernel = SeriesReinhardtKernel(domain, [tuple(a) for a in indices], refined, truncation, order,
                                   diagnostic, margin)
    kernel.certified_margin = certified_margin(kernel, rule.nodes)
    if kernel.certified_margin is None or kernel.certified_margin > margin:
        logger.warning(f"Series kernel with T={truncation} is certified only at margin {kernel.certified_margin}; "
                       f"evaluations closer to the boundary than that raise KernelError")
    return kernel


def certified_margin(kernel: SeriesReinhardtKernel, nodes: np.ndarray) -> Optional[float]:
    """Smallest candidate margin at which the diagonal tail estimate stays below the kernel tolerance.

    Pair estimates follow the geometric mean of the two diagonal ones, so
    diagonal pairs decide.
    """
    terms = np.arange(len(kernel.indices))
    last, ratio, total = kernel._shells(kernel._monomials(nodes, (0,) * kernel.dimension)[0], terms)
    with np.errstate(divide='ignore', invalid='ignore'):
        tail = np.where(last == 0, 0.0, np.where(ratio < 1, last * ratio / (1 - ratio), np.inf))
    diagonal = tail / np.maximum(total, kernel.inverse_norms[0])
    for margin in MARGIN_CANDIDATES:
        inside = np.asarray(kernel.domain.within_margin(nodes, margin))
        if np.any(inside) and np.max(diagonal[inside]) <= kernel.tail_tol:
            return margin
    return None
