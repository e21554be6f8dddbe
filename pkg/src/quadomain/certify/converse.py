import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from quadomain.certify.extraction import QuadratureData, map_jets
from quadomain.certify.jets import MAX_JET_ORDER, Jet, monomial_jets
from quadomain.construct.graph_map import GraphMapBase
from quadomain.errors import DomainError, JetError
from quadomain.geometry.domains import MultiIndex, index_factorial
from quadomain.kernels.base import KernelFunction
from quadomain.span.element import SpanElement

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-13
NEWTON_STEPS = 50
JET_RCOND = 1e-12


def invert_graph(graph: GraphMapBase, image: np.ndarray, tol: float = NEWTON_TOL) -> np.ndarray:
    """Solve ``f(b) = q`` by Newton's method in the last coordinate.

    Raises:
        DomainError: no convergence, or the preimage leaves the domain
    """
    q = np.atleast_1d(np.asarray(image, dtype=complex))
    point = q.copy().reshape(1, -1)
    for _ in range(NEWTON_STEPS):
        residual = complex(graph.g(point)[0]) - q[-1]
        if abs(residual) <= tol * max(1.0, abs(q[-1])):
            if not graph.domain.contains(point[0]):
                raise DomainError(f"Preimage of {q} lies outside the domain")
            return point[0]
        point[0, -1] -= residual / complex(graph.dg_dzn(point)[0])
    raise DomainError(f"Newton inversion of the graph map did not converge at {q}")


def jacobian_jet(graph: GraphMapBase, point: np.ndarray, order: int) -> Jet:
    """Jet of ``det f' = dg/dz_n``, read off the jets of ``g`` one order higher."""
    n = len(point)
    if order > MAX_JET_ORDER:
        raise JetError(f"Jet order {order} exceeds the supported maximum {MAX_JET_ORDER}")
    shift = (0,) * (n - 1) + (1,)

    def derivative(beta: MultiIndex) -> complex:
        return complex(graph.derivative(point.reshape(1, -1), tuple(b + s for b, s in zip(beta, shift)))[0])

    return Jet.from_derivatives(derivative, n, order)


def _node_system(graph: GraphMapBase, point: np.ndarray, indices: List[MultiIndex]) -> np.ndarray:
    """Matrix ``A[beta, alpha] = alpha! [eps^alpha] (U (f - f(b))^beta / beta!)``."""
    order = max(sum(a) for a in indices)
    ujet = jacobian_jet(graph, point, order)
    products = monomial_jets(map_jets(graph, point, order), order)
    matrix = np.zeros((len(indices), len(indices)), dtype=complex)
    for row, beta in enumerate(indices):
        product = ujet * products[beta]
        for col, alpha in enumerate(indices):
            matrix[row, col] = index_factorial(alpha) * product.coefficient(alpha)
    return matrix


def reconstruct_jacobian(data: QuadratureData, graph: GraphMapBase, kernel: KernelFunction,
                         reference: Optional[SpanElement] = None,
                         check_points: Optional[np.ndarray] = None) -> Tuple[SpanElement, Dict]:
    """Recover ``u = sum t_{j,alpha} K^(alpha)(., b_j)`` from the image quadrature data.

    With multiplicity one the coefficient chain is linear in ``conj(t)`` and
    decouples by node: at each ``b_j = f^{-1}(q_j)`` the jets of ``f`` give a
    square system from the coefficients ``c_{j,beta}`` to ``conj(t_{j,alpha})``.

    Returns:
        Tuple of (SpanElement, diagnostics). With a ``reference`` element the
        diagnostics hold the coefficientwise error and the sup residual on
        ``check_points``.

    Raises:
        JetError: a node system is singular
    """
    nodes, alphas, coefficients = [], [], []
    for j, q in enumerate(data.nodes):
        indices = sorted({beta for k, beta, _ in data.entries if k == j}, key=lambda b: (sum(b), b))
        if not indices:
            continue
        point = invert_graph(graph, q)
        matrix = _node_system(graph, point, indices)
        rhs = np.array([data.coefficient(j, beta) for beta in indices])
        conj_t, _, rank, _ = scipy.linalg.lstsq(matrix, rhs, cond=JET_RCOND)
        if rank < len(indices):
            raise JetError(f"Jet system at node {j} is singular (rank {rank} < {len(indices)})")
        for alpha, value in zip(indices, conj_t):
            nodes.append(point)
            alphas.append(alpha)
            coefficients.append(np.conj(value))
    element = SpanElement(kernel, np.array(nodes), alphas, np.array(coefficients), check_margin=False)
    diagnostics: Dict = {'terms': len(element)}
    if reference is not None:
        diagnostics['coefficient_error'] = coefficient_error(element, reference)
        if check_points is not None:
            gap = element.evaluate(check_points) - reference.evaluate(check_points)
            diagnostics['sup_residual'] = float(np.max(np.abs(gap)))
    logger.info(f"Reconstructed {len(element)} span terms from quadrature data")
    return element, diagnostics


def coefficient_error(element: SpanElement, reference: SpanElement, tol: float = 1e-8) -> float:
    """Largest coefficient mismatch after matching terms by node and index.

    Terms of ``reference`` without a counterpart count with their full size.
    """
    reference = reference.merged()
    used = set()
    worst = 0.0
    for node, alpha, t in reference.terms:
        match = None
        for k, (other, other_alpha, _) in enumerate(element.terms):
            if k not in used and other_alpha == alpha and np.max(np.abs(other - node)) <= tol:
                match = k
                break
        if match is None:
            worst = max(worst, abs(t))
        else:
            used.add(match)
            worst = max(worst, abs(element.coefficients[match] - t))
    for k, (_, _, t) in enumerate(element.terms):
        if k not in used:
            worst = max(worst, abs(t))
    scale = max(1.0, float(np.max(np.abs(reference.coefficients))))
    return worst / scale
