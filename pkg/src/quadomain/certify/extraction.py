import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from quadomain.certify.battery import BatteryFunction, Polynomial, polynomial_function
from quadomain.certify.identity import Pullback, pullback_rule
from quadomain.certify.jets import MAX_JET_ORDER, Jet, monomial_jets
from quadomain.construct.graph_map import GraphMapBase
from quadomain.errors import CollocationError, JetError
from quadomain.geometry.domains import Annulus, MultiIndex, Product, index_factorial, multi_indices
from quadomain.span.element import MERGE_TOL, SpanElement

logger = logging.getLogger(__name__)

COLLOCATION_RCOND = 1e-13

Entry = Tuple[int, MultiIndex, complex]


@dataclass
class QuadratureData:
    """Quadrature identity ``int h = sum_j sum_beta c_{j,beta} h^(beta)(q_j)``."""
    nodes: np.ndarray
    entries: List[Entry]
    merged: int = 0
    method: str = 'jets'

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]

    @property
    def orders(self) -> List[int]:
        """Number of distinct derivative functionals per node."""
        counts = [set() for _ in range(len(self.nodes))]
        for j, beta, _ in self.entries:
            counts[j].add(beta)
        return [len(c) for c in counts]

    @property
    def order(self) -> int:
        return sum(self.orders)

    def coefficient(self, j: int, beta: Sequence[int]) -> complex:
        return sum((c for k, b, c in self.entries if k == j and b == tuple(beta)), 0j)

    def apply(self, h: BatteryFunction) -> complex:
        total = 0j
        for j, beta, coef in self.entries:
            total += coef * complex(h.derivative(self.nodes[j:j + 1], beta)[0])
        return total

    def structure(self) -> List[Tuple[int, MultiIndex]]:
        return [(j, beta) for j, beta, _ in self.entries]

    def coefficient_vector(self, structure: Sequence[Tuple[int, MultiIndex]]) -> np.ndarray:
        return np.array([self.coefficient(j, beta) for j, beta in structure], dtype=complex)

    def to_dict(self) -> Dict:
        return {
            'method': self.method,
            'order': self.order,
            'merged_nodes': self.merged,
            'nodes': [[[c.real, c.imag] for c in node] for node in self.nodes],
            'coefficients': [{'node': j, 'beta': list(beta), 'value': [c.real, c.imag]}
                             for j, beta, c in self.entries],
        }


def _merge(nodes: List[np.ndarray], entries: List[Entry], tol: float) -> QuadratureData:
    unique: List[np.ndarray] = []
    where = []
    for node in nodes:
        for k, other in enumerate(unique):
            if np.max(np.abs(other - node)) <= tol:
                where.append(k)
                break
        else:
            where.append(len(unique))
            unique.append(node)
    combined: Dict[Tuple[int, MultiIndex], complex] = {}
    for j, beta, coef in entries:
        key = (where[j], beta)
        combined[key] = combined.get(key, 0j) + coef
    merged = len(nodes) - len(unique)
    if merged:
        logger.info(f"Merged {merged} coincident quadrature nodes")
    ordered = sorted(combined.items(), key=lambda item: (item[0][0], sum(item[0][1]), item[0][1]))
    return QuadratureData(np.array(unique).reshape(len(unique), -1),
                          [(j, beta, c) for (j, beta), c in ordered], merged)


def map_jets(graph: GraphMapBase, point: np.ndarray, order: int) -> List[Jet]:
    """Jets of ``f = (z', g)`` at ``point``."""
    n = len(point)
    jets = [Jet.variable(i, point[i], n, order) for i in range(n - 1)]
    jets.append(Jet.from_derivatives(
        lambda beta: complex(graph.derivative(point.reshape(1, -1), beta)[0]), n, order))
    return jets


def element_jet(u: SpanElement, point: np.ndarray, order: int) -> Jet:
    n = len(point)
    return Jet.from_derivatives(lambda beta: complex(u.evaluate(point.reshape(1, -1), beta)[0]), n, order)


def extract_quadrature_data(u: SpanElement, graph: GraphMapBase, tol: float = MERGE_TOL) -> QuadratureData:
    """Quadrature data of the image ``f(G)`` from the Jacobian span element ``u``.

    For ``u = sum t_j K^(alpha_j)(., b_j)`` and every holomorphic ``psi``,
    ``int_{f(G)} psi = sum_j conj(t_j) (u (psi o f))^(alpha_j)(b_j)``. Expanding
    ``psi o f`` through jets at ``b_j`` turns each term into coefficients on
    ``psi^(beta)(f(b_j))`` for ``|beta| <= |alpha_j|``.

    Raises:
        JetError: a term has derivative order above the jet cap
    """
    order = u.max_order
    if order > MAX_JET_ORDER:
        raise JetError(f"Span term of order {order} exceeds the jet cap {MAX_JET_ORDER}")
    nodes, entries = [], []
    for node, alpha, t in u.terms:
        level = sum(alpha)
        image = np.concatenate([node[:-1], graph.g(node.reshape(1, -1))])
        ujet = element_jet(u, node, level)
        scale = np.conj(t) * index_factorial(alpha)
        for beta, term in monomial_jets(map_jets(graph, node, level), level).items():
            coef = scale * (ujet * term).coefficient(alpha)
            if coef != 0:
                entries.append((len(nodes), beta, coef))
        nodes.append(image)
    data = _merge(nodes, entries, tol)
    logger.info(f"Extracted quadrature data: {len(data.nodes)} nodes, order {data.order}")
    return data


def _axis_basis(factor, values: np.ndarray, size: int) -> Tuple[complex, float, np.ndarray]:
    """Center, scale and exponents of per-coordinate powers; Laurent for annular factors."""
    if isinstance(factor, Annulus):
        half = size // 2
        return factor.center, float(np.sqrt(factor.inner * factor.outer)), np.arange(-half, size - half)
    center = getattr(factor, 'center', 0j)
    scale = float(np.max(np.abs(values - center), initial=0.0)) or 1.0
    return center, scale, np.arange(size)


def _distinct(values: np.ndarray) -> int:
    return len(np.unique(np.round(values, 9)))


def collocation_axes(domain, data_nodes: np.ndarray, order: int) -> List[Tuple[complex, float, np.ndarray]]:
    """Per-coordinate center, scale and powers of the collocation basis.

    Leading coordinates get as many powers as they have distinct node values
    times ``order + 1``; the last coordinate as many as the largest number of
    distinct values over one fixed ``z'``.
    """
    n = data_nodes.shape[1]
    factors = list(domain.factors) if isinstance(domain, Product) else [None] * n
    if len(factors) != n:
        factors = [None] * n
    sizes = [_distinct(data_nodes[:, i]) for i in range(n - 1)]
    leading = np.round(data_nodes[:, :-1], 9)
    fibers: Dict[Tuple, List[complex]] = {}
    for key, value in zip(map(tuple, leading), data_nodes[:, -1]):
        fibers.setdefault(key, []).append(value)
    sizes.append(max(_distinct(np.array(v)) for v in fibers.values()))
    return [_axis_basis(factors[i], data_nodes[:, i], size * (order + 1)) for i, size in enumerate(sizes)]


def collocation_basis(domain, data_nodes: np.ndarray, order: int) -> List[BatteryFunction]:
    """Tensor basis of per-coordinate powers covering a node structure; see ``collocation_axes``."""
    axes = collocation_axes(domain, data_nodes, order)
    n = len(axes)
    basis = []
    for powers in np.stack(np.meshgrid(*[a[2] for a in axes], indexing='ij'), axis=-1).reshape(-1, n):
        basis.append(_shifted_power([a[0] for a in axes], [a[1] for a in axes], powers))
    return basis


def spanned_by_axes(battery: Sequence[BatteryFunction], axes) -> List[str]:
    """Names of battery monomials lying in the span of the collocation basis."""
    names = []
    for h in battery:
        if h.exponents is None:
            continue
        if all(min(powers) <= 0 and gamma <= max(powers) for gamma, (_, _, powers) in zip(h.exponents, axes)):
            names.append(h.name)
    return names


def _shifted_power(centers, scales, powers) -> BatteryFunction:
    centers = np.asarray(centers, dtype=complex)
    scales = np.asarray(scales, dtype=float)
    powers = np.asarray(powers, dtype=int)

    def evaluate(z, beta):
        out = np.ones(len(z), dtype=complex)
        for i, (k, b) in enumerate(zip(powers, beta)):
            falling = float(np.prod([k - m for m in range(b)])) if b else 1.0
            if falling == 0.0:
                return np.zeros(len(z), dtype=complex)
            out *= falling * (z[:, i] - centers[i]) ** int(k - b) / scales[i] ** float(k)
        return out

    return BatteryFunction('shifted_power(' + ','.join(map(str, powers)) + ')', 'collocation',
                           len(powers), evaluate)


def extract_by_collocation(graph: GraphMapBase, v, structure: QuadratureData,
                           basis: Optional[Sequence[BatteryFunction]] = None,
                           integrator=None) -> Tuple[QuadratureData, Dict]:
    """Solve ``int_{f(G)} h_k = sum c_{j,beta} h_k^(beta)(q_j)`` for the coefficients by least squares.

    Args:
        graph: Injective graph map
        v: Jacobian of ``graph`` (span element or callable)
        structure: Quadrature data whose nodes and indices fix the unknowns
        basis: Test functions; a covering tensor basis by default
        integrator: Pullback integrator for ``f(G)``; built from ``v`` when omitted

    Returns:
        Tuple of (QuadratureData, diagnostics with the residual and condition)

    Raises:
        CollocationError: the system is rank deficient
    """
    if integrator is None:
        integrator = Pullback(graph, v, pullback_rule(graph.domain, v))
    unknowns = structure.structure()
    order = max((sum(beta) for _, beta in unknowns), default=0)
    if basis is None:
        basis = collocation_basis(graph.domain, structure.nodes, order)
    if len(basis) < len(unknowns):
        raise CollocationError(f"{len(basis)} basis functions cannot determine {len(unknowns)} coefficients")
    matrix = np.array([[complex(h.derivative(structure.nodes[j:j + 1], beta)[0]) for j, beta in unknowns]
                       for h in basis])
    rhs = np.array([integrator.integral(h) for h in basis])
    norms = np.linalg.norm(matrix, axis=1)
    norms[norms == 0] = 1.0
    solution, _, rank, sv = scipy.linalg.lstsq(matrix / norms[:, None], rhs / norms, cond=COLLOCATION_RCOND)
    if rank < len(unknowns):
        raise CollocationError(f"Collocation matrix has rank {rank} < {len(unknowns)} unknowns")
    residual = float(np.max(np.abs(matrix @ solution - rhs)) / max(1.0, float(np.max(np.abs(rhs)))))
    condition = float(sv[0] / sv[-1])
    logger.info(f"Collocation with {len(basis)} functions: residual {residual:.2e}, condition {condition:.2e}")
    data = QuadratureData(structure.nodes, [(j, beta, c) for (j, beta), c in zip(unknowns, solution)],
                          structure.merged, 'collocation')
    return data, {'basis_size': len(basis), 'residual': residual, 'condition': condition}


def coefficient_agreement(first: QuadratureData, second: QuadratureData) -> float:
    """Largest coefficient difference relative to the largest coefficient."""
    structure = first.structure()
    a = first.coefficient_vector(structure)
    b = second.coefficient_vector(structure)
    return float(np.max(np.abs(a - b), initial=0.0) / max(1.0, float(np.max(np.abs(a), initial=0.0))))


def monomial_collocation_basis(dimension: int, degree: int) -> List[BatteryFunction]:
    return [polynomial_function(f"z^{gamma}", Polynomial.monomial(gamma), 'monomial')
            for gamma in multi_indices(dimension, degree)]
