import math
import pytest
import numpy as np

from quadomain.errors import DomainError, FitBudgetExceeded
from quadomain.geometry.domains import Disc, Polydisc
from quadomain.geometry.lattices import PointSet, verification_grid
from quadomain.kernels.factory import kernel_for
from quadomain.span.element import SpanElement, eval_span, single_term
from quadomain.span.fitting import domain_center, fit_constant_one, fit_exact_constant


def test_single_term_evaluation(disc_kernel):
    u = single_term(disc_kernel, 0.2, 2.0)
    assert len(u) == 1
    assert eval_span(u, 0.1j) == pytest.approx(2.0 * disc_kernel.eval_kernel(0.1j, 0.2))


def test_node_outside_margin_rejected(disc_kernel):
    with pytest.raises(DomainError):
        single_term(disc_kernel, 0.99, 1.0)
    with pytest.raises(DomainError):
        SpanElement(disc_kernel, [0.1, 0.2], [(0,)], [1.0, 1.0])


def test_merged_combines_coincident_terms(disc_kernel):
    u = SpanElement(disc_kernel, [0.1, 0.1, 0.3], [(0,), (0,), (0,)], [1.0, 2.0, 5.0])
    merged = u.merged()
    assert len(merged) == 2
    assert merged.coefficients[0] == pytest.approx(3.0)
    z = np.array([[0.2j], [-0.4]])
    assert np.allclose(merged.evaluate(z), u.evaluate(z))


def test_combined_requires_same_kernel(disc_kernel):
    other = kernel_for(Disc())
    with pytest.raises(DomainError):
        single_term(disc_kernel, 0.0, 1.0).combined(single_term(other, 0.0, 1.0))


def test_tensor_evaluation_matches_pointwise():
    kernel = kernel_for(Polydisc((1.0, 1.0)))
    u = SpanElement(kernel, [[0.1, 0.2j], [-0.3, 0.1]], [(0, 0), (1, 0)], [1.0, 0.5j])
    grid = PointSet((np.array([0.0, 0.4j, -0.2]), np.array([0.1, -0.5j])))
    assert np.allclose(u.evaluate_on(grid), u.evaluate(grid.points), rtol=1e-13)


def test_exact_constant_on_bidisc():
    kernel = kernel_for(Polydisc((1.0, 1.0)))
    element, report = fit_exact_constant(kernel, (4, 24))
    assert len(element) == 1
    assert report.passed
    assert report.sup_error < 1e-12
    assert element.coefficients[0] == pytest.approx(math.pi ** 2)
    assert np.allclose(domain_center(kernel.domain), [0.0, 0.0])


def test_exact_constant_needs_center(annulus_kernel):
    with pytest.raises(DomainError):
        fit_exact_constant(annulus_kernel, 24)


def test_least_squares_fit_on_disc(disc_kernel):
    element, report = fit_constant_one(disc_kernel, 24, epsilon=1e-3)
    assert report.passed
    assert report.node_count == 24
    assert np.all(disc_kernel.domain.within_margin(element.nodes, disc_kernel.margin))


def test_fit_budget_exceeded_carries_element(annulus_kernel):
    with pytest.raises(FitBudgetExceeded) as info:
        fit_constant_one(annulus_kernel, 2, epsilon=1e-12)
    assert info.value.element is not None
    assert info.value.report.sup_error > 1e-12


@pytest.mark.slow
def test_least_squares_fit_on_annulus(annulus_kernel):
    element, report = fit_constant_one(annulus_kernel, 24, epsilon=0.05)
    assert report.sup_error <= 0.05
    assert report.to_dict()['passed']


@pytest.mark.slow
def test_fit_error_decreases_with_lattice_size(annulus_kernel):
    check = verification_grid(annulus_kernel.domain, 32, annulus_kernel.margin)
    errors = []
    for count in (8, 16, 32):
        element, report = fit_constant_one(annulus_kernel, count, epsilon=1.0)
        errors.append(float(np.max(np.abs(element.evaluate_on(check) - 1.0))))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-3
