import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from quadomain.errors import DomainError, FitBudgetExceeded, IllConditionedFit
from quadomain.geometry.domains import Ball, Disc, Domain, FiberedDomain, Product, multi_indices
from quadomain.geometry.lattices import PointSet, fit_grid, interior_lattice, verification_grid
from quadomain.kernels.base import KernelFunction
from quadomain.kernels.product import ProductKernel
from quadomain.span.element import SpanElement, single_term

logger = logging.getLogger(__name__)

REGULARIZATION = 1e-10
REFINEMENT_STEPS = 3
CONDITION_CEILING = 1e15


@dataclass
class FitReport:
    sup_error: float
    deriv_sup_errors: List[float]
    grid: Dict
    residual_history: List[float] = field(default_factory=list)
    condition: float = 1.0
    regularization: float = 0.0
    node_count: int = 0
    epsilon: float = 0.0

    @property
    def passed(self) -> bool:
        return self.sup_error <= self.epsilon

    def to_dict(self) -> Dict:
        return {'sup_error': self.sup_error, 'deriv_sup_errors': self.deriv_sup_errors, 'grid': self.grid,
                'residual_history': self.residual_history, 'condition': self.condition,
                'regularization': self.regularization, 'node_count': self.node_count,
                'epsilon': self.epsilon, 'passed': self.passed}


def design_matrix(kernel: KernelFunction, points: PointSet, nodes: np.ndarray, alphas) -> np.ndarray:
    """Columns ``K^(alpha_j)(., b_j)`` sampled on the point set."""
    columns = np.empty((len(points), len(nodes)), dtype=complex)
    groups: Dict[tuple, List[int]] = {}
    for j, alpha in enumerate(alphas):
        groups.setdefault(tuple(alpha), []).append(j)
    tensor = points.is_tensor and isinstance(kernel, ProductKernel) and len(points.parts) == len(kernel.factors)
    for alpha, cols in groups.items():
        if tensor:
            mats = kernel.factor_matrices(points.parts, nodes[cols], alpha)
            block = mats[0]
            for mat in mats[1:]:
                block = (block[:, None, :] * mat[None, :, :]).reshape(-1, len(cols))
        else:
            block = kernel.evaluate(points.points, nodes[cols], alpha)
        columns[:, cols] = block
    return columns


def _regularized_solver(matrix: np.ndarray, lam: float):
    augmented = np.vstack([matrix, np.sqrt(lam) * np.eye(matrix.shape[1])])
    q, r = scipy.linalg.qr(augmented, mode='economic')
    rows = matrix.shape[0]

    def solve(rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.solve_triangular(r, q[:rows].conj().T @ rhs)

    return solve, r


def fit_constant_one(kernel: KernelFunction, counts: Union[int, Sequence[int]], max_order: int = 0,
                     epsilon: float = 0.05, report_orders: int = 1,
                     margin: Optional[float] = None, inner_ring: Optional[float] = None) -> tuple:
    """Least-squares fit of the constant 1 by kernel sections on an interior lattice.

    Args:
        kernel: Kernel of the domain
        counts: Lattice node counts (one per product factor, or base and fiber counts)
        max_order: Largest conjugate-derivative order used at each node
        epsilon: Target sup error on the verification grid
        report_orders: Derivative orders reported in ``deriv_sup_errors``
        margin: Lattice margin; defaults to the kernel's certified margin
        inner_ring: Move leading-coordinate nodes off the center onto a ring at this radius fraction

    Returns:
        Tuple of (SpanElement, FitReport)

    Raises:
        FitBudgetExceeded: sup error above ``epsilon``; carries the best element
        IllConditionedFit: regularized system still numerically singular
    """
    domain = kernel.domain
    margin = kernel.margin if margin is None else margin
    lattice = interior_lattice(domain, counts, margin, inner_ring).points
    indices = multi_indices(domain.dimension, max_order)
    nodes = np.repeat(lattice, len(indices), axis=0)
    alphas = [alpha for _ in range(len(lattice)) for alpha in indices]

    grid = fit_grid(domain, counts, margin)
    matrix = design_matrix(kernel, grid, nodes, alphas)
    gram_diag = np.sum(np.abs(matrix) ** 2, axis=0)
    lam = REGULARIZATION * float(np.max(gram_diag))
    solve, r = _regularized_solver(matrix, lam)

    diag = np.abs(np.diag(r))
    condition = float(np.max(diag) / np.min(diag)) if np.min(diag) > 0 else np.inf
    if not np.isfinite(condition) or condition > CONDITION_CEILING:
        raise IllConditionedFit(f"Regularized fit matrix has condition estimate {condition:.2e}")

    target = np.ones(len(grid), dtype=complex)
    coefficients = np.zeros(len(nodes), dtype=complex)
    history = []
    for _ in range(REFINEMENT_STEPS):
        residual = target - matrix @ coefficients
        coefficients = coefficients + solve(residual)
        history.append(float(np.sqrt(np.mean(np.abs(target - matrix @ coefficients) ** 2))))
    logger.debug(f"Fit residual history {history}, condition {condition:.2e}, lambda {lam:.2e}")

    element = SpanElement(kernel, nodes, alphas, coefficients)
    report = _verify(element, counts, margin, epsilon, report_orders,
                     history=history, condition=condition, regularization=lam, node_count=len(lattice))
    report.grid.update(fit_points=len(grid), max_order=max_order)
    logger.info(f"Fitted 1 with {len(lattice)} nodes x {len(indices)} orders: sup error {report.sup_error:.3e}")
    if not report.passed:
        raise FitBudgetExceeded(f"Fit sup error {report.sup_error:.3e} exceeds target {epsilon:.3e} "
                                f"with {len(lattice)} nodes", element, report)
    return element, report


def _verify(element: SpanElement, counts, margin: float, epsilon: float, report_orders: int,
            history=(), condition: float = 1.0, regularization: float = 0.0, node_count: int = 1) -> FitReport:
    domain = element.kernel.domain
    check = verification_grid(domain, counts, margin)
    sup_error = float(np.max(np.abs(element.evaluate_on(check) - 1.0)))
    deriv_errors = []
    for order in range(1, report_orders + 1):
        betas = [b for b in multi_indices(domain.dimension, order) if sum(b) == order]
        deriv_errors.append(max(float(np.max(np.abs(element.evaluate_on(check, beta)))) for beta in betas))
    return FitReport(
        sup_error=sup_error, deriv_sup_errors=deriv_errors,
        grid={'counts': list(np.atleast_1d(counts).tolist()), 'verification_points': len(check),
              'margin': margin},
        residual_history=list(history), condition=condition, regularization=regularization,
        node_count=node_count, epsilon=epsilon,
    )


def domain_center(domain: Domain) -> np.ndarray:
    """Center of a domain whose Bergman kernel is constant in its first argument there."""
    if isinstance(domain, Product):
        return np.concatenate([domain_center(f) for f in domain.factors])
    if isinstance(domain, Disc):
        return np.array([domain.center])
    if isinstance(domain, (Ball, FiberedDomain)):
        return np.zeros(domain.dimension, dtype=complex)
    raise DomainError(f"{domain.kind} has no center with a constant kernel section")


def fit_exact_constant(kernel: KernelFunction, counts: Union[int, Sequence[int]], epsilon: float = 0.05,
                       report_orders: int = 1, margin: Optional[float] = None) -> tuple:
    """One-term element ``K(., c) / K(c, c)``, identically 1 for circular domains centered at ``c``.

    Returns:
        Tuple of (SpanElement, FitReport) with the report taken on the usual
        verification grid of ``counts``
    """
    margin = kernel.margin if margin is None else margin
    center = domain_center(kernel.domain)
    coefficient = 1.0 / kernel.eval_kernel(center, center)
    element = single_term(kernel, center, coefficient)
    report = _verify(element, counts, margin, epsilon, report_orders)
    logger.info(f"Exact one-term fit at the center: sup error {report.sup_error:.3e}")
    if not report.passed:
        raise FitBudgetExceeded(f"One-term fit sup error {report.sup_error:.3e} exceeds {epsilon:.3e}",
                                element, report)
    return element, report
