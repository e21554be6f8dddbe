import logging
from typing import Optional

import numpy as np

from quadomain.construct.periods import PeriodMatrix, PeriodVector, compute_periods
from quadomain.errors import PeriodError
from quadomain.kernels.product import ProductKernel
from quadomain.span.element import SpanElement

logger = logging.getLogger(__name__)

PERIOD_TOL = 1e-10


def term_periods(u: SpanElement, matrix: PeriodMatrix) -> np.ndarray:
    """Contour integrals of the last-variable factor of every term, shape ``(m-1, terms)``."""
    kernel = u.kernel
    last = kernel.factors[-1] if isinstance(kernel, ProductKernel) else kernel
    out = np.empty((matrix.size, len(u)), dtype=complex)
    for i, contour in enumerate(matrix.contours):
        points = contour.points().reshape(-1, 1)
        weights = contour.dz_weights()
        for j, (node, alpha, _) in enumerate(u.terms):
            values = last.evaluate(points, node[-1:].reshape(1, 1), alpha[-1:])[:, 0]
            out[i, j] = weights @ values
    return out


def correct_periods(u: SpanElement, matrix: PeriodMatrix, periods: Optional[PeriodVector] = None,
                    tol: float = PERIOD_TOL) -> SpanElement:
    """Subtract ``sum_l a_l(z') K(z_n, zeta_l)`` so that every period of the result vanishes.

    The coefficients ``a_l(z')`` are rows of ``M^{-1}`` applied to the per-term
    periods, so each term of ``u`` spawns terms at ``(w'_j, zeta_l)`` with
    index ``(alpha'_j, 0)``. ``periods``, when given, is rechecked on its
    leading coordinates after the correction.
    """
    if matrix.size == 0:
        return u
    if not isinstance(u.kernel, ProductKernel):
        raise PeriodError("Period correction needs a product kernel with a multiply connected last factor")
    solved = matrix.solve(term_periods(u, matrix))
    nodes, alphas, coefs = [], [], []
    for j, (node, alpha, t) in enumerate(u.terms):
        for l, zeta in enumerate(matrix.zetas):
            nodes.append(np.concatenate([node[:-1], [zeta]]))
            alphas.append(alpha[:-1] + (0,))
            coefs.append(-t * solved[l, j])
    correction = SpanElement(u.kernel, np.array(nodes), alphas, np.array(coefs))
    v = u.combined(correction.merged())
    logger.info(f"Period correction added {len(v) - len(u)} terms at {matrix.size} kernel points")

    if periods is not None:
        residual = compute_periods(v, matrix.contours, periods.zprime)
        worst = residual.max_abs()
        if worst > tol:
            raise PeriodError(f"Corrected element still has period {worst:.2e} above {tol:.0e}")
        logger.debug(f"Residual periods after correction: {worst:.2e}")
    return v
