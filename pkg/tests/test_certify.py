import math
import pytest
import numpy as np

from quadomain.certify.battery import (
    Polynomial, default_battery, monomial_function, polynomial_battery, polynomial_function,
)
from quadomain.certify.converse import coefficient_error, invert_graph, reconstruct_jacobian
from quadomain.certify.extraction import (
    QuadratureData, coefficient_agreement, collocation_axes, collocation_basis, extract_by_collocation,
    extract_quadrature_data, spanned_by_axes,
)
from quadomain.certify.identity import ResidualReport, certify_identity
from quadomain.certify.jets import Jet, compose
from quadomain.construct.graph_map import build_graph_map, sample_points
from quadomain.errors import ConfigError, JetError
from quadomain.kernels.factory import kernel_for
from quadomain.span.element import SpanElement
from quadomain.span.fitting import fit_exact_constant


@pytest.fixture
def bidisc_construction(bidisc):
    """Exact element 1 on the bidisc with its identity graph map."""
    kernel = kernel_for(bidisc)
    v, _ = fit_exact_constant(kernel, (4, 24))
    return kernel, v, build_graph_map(v)


def test_polynomial_derivative():
    poly = Polynomial.from_terms({(2, 1): 3.0, (0, 1): 1.0j}, 2)
    assert poly.degree == 3
    derived = poly.derivative((1, 1))
    point = np.array([[0.5, -0.2j]])
    assert derived(point)[0] == pytest.approx(6.0 * 0.5)
    assert poly.derivative((3, 0))(point)[0] == 0


def test_battery_sizes():
    assert len(default_battery(2)) == 33
    assert len(polynomial_battery(2)) == 33
    assert len(polynomial_battery(3)) == 89
    names = [h.name for h in default_battery(2)]
    assert len(set(names)) == len(names)
    with pytest.raises(ConfigError):
        default_battery(2, version=7)


def test_battery_is_fixed():
    first = polynomial_battery(2)[-1]
    second = polynomial_battery(2)[-1]
    point = np.array([[0.1, 0.2j]])
    assert first(point)[0] == second(point)[0]


def test_monomial_function_derivatives():
    h = monomial_function((2, 3))
    point = np.array([[0.5, 2.0]])
    assert h(point)[0] == pytest.approx(2.0)
    assert h.derivative(point, (1, 2))[0] == pytest.approx(2 * 0.5 * 6 * 2.0)


def test_jet_products_and_composition():
    z1 = Jet.variable(0, 0.0, 2, 3)
    z2 = Jet.variable(1, 0.0, 2, 3)
    assert (z1 * z2).coefficient((1, 1)) == 1
    assert (z1 ** 4).coefficient((4, 0)) == 0

    # psi(w) = w1 w2 composed with F(z) = (z1, z2 + z1^2)
    composed = compose(z1 * z2, [z1, z2 + z1 ** 2])
    assert composed.coefficient((1, 1)) == pytest.approx(1.0)
    assert composed.coefficient((3, 0)) == pytest.approx(1.0)
    assert composed.coefficient((2, 0)) == 0


def test_jet_from_function():
    jet = Jet.from_function(lambda p: np.exp(p[:, 0] + 2 * p[:, 1]), [0.0, 0.0], 2)
    assert jet.value == pytest.approx(1.0)
    assert jet.coefficient((1, 1)) == pytest.approx(2.0, abs=1e-8)
    assert jet.derivative((0, 2)) == pytest.approx(4.0, abs=1e-8)


def test_jet_order_cap():
    with pytest.raises(JetError):
        Jet.constant(1.0, 2, 5)


def test_extraction_on_identity(bidisc_construction):
    kernel, v, graph = bidisc_construction
    data = extract_quadrature_data(v, graph)
    assert data.nodes.shape == (1, 2)
    assert np.allclose(data.nodes[0], [0.0, 0.0], atol=1e-12)
    assert data.order == 1
    assert data.coefficient(0, (0, 0)) == pytest.approx(math.pi ** 2)
    assert data.apply(monomial_function((0, 0))) == pytest.approx(math.pi ** 2)
    assert data.apply(monomial_function((1, 0))) == pytest.approx(0.0, abs=1e-12)


def test_extraction_rejects_high_order(bidisc_construction):
    kernel, _, graph = bidisc_construction
    u = SpanElement(kernel, [[0.0, 0.0]], [(5, 0)], [1.0])
    with pytest.raises(JetError):
        extract_quadrature_data(u, graph)


def test_merge_coincident_nodes(bidisc_construction):
    kernel, _, graph = bidisc_construction
    u = SpanElement(kernel, [[0.0, 0.0], [0.0, 0.0]], [(0, 0), (0, 0)], [1.0, 2.0])
    data = extract_quadrature_data(u, graph)
    assert len(data.nodes) == 1
    assert data.merged == 1


def test_identity_holds_on_bidisc(bidisc_construction):
    _, v, graph = bidisc_construction
    data = extract_quadrature_data(v, graph)
    report = certify_identity(data, graph, v, default_battery(2), tolerance=1e-10)
    assert report.passed
    assert report.to_dict()['battery_size'] == 33


def test_identity_detects_wrong_data(bidisc_construction):
    _, v, graph = bidisc_construction
    wrong = QuadratureData(np.array([[0.1, 0.0]]), [(0, (0, 0), math.pi ** 2)])
    report = certify_identity(wrong, graph, v, default_battery(2), tolerance=1e-6)
    assert not report.passed
    assert report.max_relative > 1e-3


def test_empty_report_does_not_pass():
    assert not ResidualReport([], 1e-6).passed


def test_collocation_agrees_with_jets(bidisc_construction):
    _, v, graph = bidisc_construction
    data = extract_quadrature_data(v, graph)
    collocated, info = extract_by_collocation(graph, v, data)
    assert collocated.method == 'collocation'
    assert coefficient_agreement(data, collocated) < 1e-10
    assert info['basis_size'] >= 1


def test_converse_reconstructs_element(bidisc_construction, bidisc):
    kernel, v, graph = bidisc_construction
    data = extract_quadrature_data(v, graph)
    points = sample_points(bidisc, 8)
    element, diagnostics = reconstruct_jacobian(data, graph, kernel, reference=v, check_points=points)
    assert len(element) == 1
    assert diagnostics['coefficient_error'] < 1e-8
    assert diagnostics['sup_residual'] < 1e-8
    assert coefficient_error(element, v) == diagnostics['coefficient_error']


def test_invert_graph(bidisc_construction):
    _, _, graph = bidisc_construction
    target = np.array([0.2, -0.3j])
    assert np.allclose(invert_graph(graph, target), target, atol=1e-12)


def test_polynomial_function_degree():
    h = polynomial_function('p', Polynomial.from_terms({(1, 1): 1.0, (0, 3): 2.0}, 2))
    assert h.degree == 3
    assert h.describe()['family'] == 'polynomial'


def test_collocation_axes_follow_node_structure(disc_annulus):
    nodes = np.array([[0.0, 0.75], [0.0, -0.75], [0.3, 0.75]])
    axes = collocation_axes(disc_annulus, nodes, 1)
    center, scale, powers = axes[0]
    assert scale == pytest.approx(0.3)
    assert powers.tolist() == [0, 1, 2, 3]
    center, scale, powers = axes[1]
    assert scale == pytest.approx(math.sqrt(0.5))
    assert powers.tolist() == [-2, -1, 0, 1]
    assert len(collocation_basis(disc_annulus, nodes, 1)) == 16

    names = spanned_by_axes(default_battery(2), axes)
    assert set(names) == {f"z^({a},{b})" for a in range(4) for b in range(2)}


def test_spanned_by_axes_needs_the_constant(disc_annulus):
    nodes = np.array([[0.0, 0.75]])
    shifted = [(0j, 1.0, np.arange(1, 3)), (0j, 1.0, np.arange(0, 2))]
    assert spanned_by_axes(default_battery(2), shifted) == []
    assert spanned_by_axes(default_battery(2), collocation_axes(disc_annulus, nodes, 0)) == ['z^(0,0)']


def test_generalization_ratio():
    rows = [{'name': 'a', 'relative': 1e-9, 'held_out': False},
            {'name': 'b', 'relative': 5e-8, 'held_out': True}]
    report = ResidualReport(rows, 1e-6)
    assert report.max_relative <= report.tolerance
    assert report.generalization_ratio == pytest.approx(50.0)
    assert not report.generalizes
    assert not report.passed

    # in-basis residuals at roundoff are floored
    rows = [{'name': 'a', 'relative': 1e-14, 'held_out': False},
            {'name': 'b', 'relative': 5e-9, 'held_out': True}]
    report = ResidualReport(rows, 1e-6)
    assert report.generalization_ratio == pytest.approx(5.0)
    assert report.passed
    assert report.to_dict()['in_basis_count'] == 1

    held_out_only = ResidualReport([{'name': 'b', 'relative': 1e-9, 'held_out': True}], 1e-6)
    assert held_out_only.generalization_ratio is None
    assert held_out_only.passed
