import math
import pytest
import numpy as np

from quadomain.construct.correction import correct_periods, term_periods
from quadomain.construct.periods import build_period_matrix, compute_periods
from quadomain.errors import PeriodError
from quadomain.geometry.contours import Contour, inner_contours
from quadomain.geometry.lattices import zprime_lattice
from quadomain.kernels.factory import kernel_for
from quadomain.span.element import single_term


@pytest.fixture
def product_kernel(disc_annulus):
    return kernel_for(disc_annulus)


@pytest.fixture
def annulus_term(product_kernel):
    """A kernel section with a nonzero period around the hole."""
    return single_term(product_kernel, [0.1, 0.75], 1.0)


def test_simply_connected_fiber_has_no_periods(bidisc):
    kernel = kernel_for(bidisc)
    contours = inner_contours(bidisc.factors[-1])
    matrix = build_period_matrix(kernel.factors[-1], contours)
    assert matrix.size == 0
    u = single_term(kernel, [0.0, 0.0], 1.0)
    assert correct_periods(u, matrix) is u
    periods = compute_periods(u, contours, zprime_lattice(bidisc))
    assert periods.max_abs() == 0.0


def test_period_matrix_on_annulus(annulus_kernel, annulus):
    matrix = build_period_matrix(annulus_kernel, inner_contours(annulus))
    assert matrix.size == 1
    assert matrix.condition == pytest.approx(1.0)
    assert abs(matrix.zetas[0]) == pytest.approx(math.sqrt(0.5))
    assert abs(matrix.entries[0, 0]) > 0


def test_contour_outside_margin_rejected(annulus_kernel):
    with pytest.raises(PeriodError):
        build_period_matrix(annulus_kernel, [Contour(0j, 0.51)])


def test_correction_removes_periods(product_kernel, annulus_term, disc_annulus):
    contours = inner_contours(disc_annulus.factors[-1])
    zprime = zprime_lattice(disc_annulus)
    before = compute_periods(annulus_term, contours, zprime)
    assert before.max_abs() > 1e-3

    matrix = build_period_matrix(product_kernel.factors[-1], contours)
    v = correct_periods(annulus_term, matrix, before)
    assert len(v) == 2
    after = compute_periods(v, contours, zprime)
    assert after.max_abs() < 1e-10
    assert np.allclose(term_periods(v, matrix) @ v.coefficients, 0.0, atol=1e-10)


def test_correction_needs_product_kernel(annulus_kernel, annulus):
    u = single_term(annulus_kernel, 0.75, 1.0)
    matrix = build_period_matrix(annulus_kernel, inner_contours(annulus))
    with pytest.raises(PeriodError):
        correct_periods(u, matrix)
