import pytest
import numpy as np

from quadomain.construct.graph_map import (
    ExplicitGraphMap, build_graph_map, closeness_report, default_base_point, fiber_of, holomorphy_check,
    jacobian_check, sample_points,
)
from quadomain.construct.injectivity import (
    CERTIFIED, REJECTED, check_fiber, injectivity_certificate, winding_numbers,
)
from quadomain.geometry.domains import Annulus, Disc, HartogsOverDisc
from quadomain.geometry.lattices import verification_grid
from quadomain.kernels.factory import kernel_for
from quadomain.span.fitting import fit_exact_constant


@pytest.fixture
def exact_graph(bidisc):
    """Graph map of the exact element 1 on the bidisc, which is the identity."""
    v, _ = fit_exact_constant(kernel_for(bidisc), (4, 24))
    return build_graph_map(v)


def explicit_map(domain, g, dg):
    return ExplicitGraphMap(domain, lambda p: g(p[:, -1]), lambda p: dg(p[:, -1]))


def test_winding_numbers():
    theta = 2 * np.pi * np.arange(64) / 64
    circle = np.exp(1j * theta)
    counts, step = winding_numbers(circle, np.array([0.0, 0.3j, 2.0]))
    assert np.allclose(counts, [1, 1, 0])
    assert step < np.pi / 8

    twice = np.exp(2j * theta)
    counts, _ = winding_numbers(twice, np.array([0.1]))
    assert np.allclose(counts, [2])


def test_identity_certified(unit_disc):
    graph = explicit_map(unit_disc, lambda w: w, lambda w: np.ones_like(w))
    certificate = injectivity_certificate(graph)
    assert certificate.status == CERTIFIED
    assert certificate.separation > 0
    assert certificate.to_dict()['failing_fibers'] == []


def test_small_perturbation_certified(unit_disc):
    graph = explicit_map(unit_disc, lambda w: w + 1e-3 * w ** 2, lambda w: 1 + 2e-3 * w)
    assert injectivity_certificate(graph).certified


def test_double_cover_rejected(unit_disc):
    graph = explicit_map(unit_disc, lambda w: w ** 2, lambda w: 2 * w)
    result = check_fiber(graph, np.zeros(0), 0.05)
    assert result.status == REJECTED
    assert result.counts.max() == 2
    certificate = injectivity_certificate(graph, strict=True)
    assert certificate.status == REJECTED
    assert not certificate.certified


def test_annulus_fiber_counts_inner_boundary(annulus):
    graph = explicit_map(annulus, lambda w: w, lambda w: np.ones_like(w))
    result = check_fiber(graph, np.zeros(0), 0.05)
    assert result.status == CERTIFIED
    assert np.all(result.counts == 1)


def test_fibers_and_base_points(disc_annulus):
    assert fiber_of(disc_annulus, [0.3]) == disc_annulus.factors[-1]
    assert default_base_point(disc_annulus) == pytest.approx(0.75)
    assert default_base_point(Disc(0.5j, 2.0)) == pytest.approx(0.5j)
    hartogs = HartogsOverDisc((1.0, -0.5), np.sqrt(2.0))
    assert fiber_of(hartogs, [1.0]).radius == pytest.approx(0.5)
    assert default_base_point(Annulus(0.5, 1.0, 1j)) == pytest.approx(1j + 0.75)


def test_exact_graph_is_identity(exact_graph, bidisc):
    points = sample_points(bidisc, 32, 0.05, seed=3)
    assert np.allclose(exact_graph.g(points), points[:, -1], atol=1e-12)
    assert np.allclose(exact_graph.f(points), points, atol=1e-12)
    assert exact_graph.path_gap < 1e-12
    assert jacobian_check(exact_graph, points) < 1e-8
    assert holomorphy_check(exact_graph, points) < 1e-6


def test_exact_graph_closeness(exact_graph, bidisc):
    report = closeness_report(exact_graph, verification_grid(bidisc, (4, 24)))
    assert report['within_bound']
    assert report['sup_deviation'] < 1e-12


def test_exact_graph_injective(exact_graph):
    certificate = injectivity_certificate(exact_graph)
    assert certificate.certified
    assert len(certificate.fibers) == 81
