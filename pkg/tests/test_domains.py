import math
import pytest
import numpy as np

from quadomain.errors import DomainError
from quadomain.geometry.contours import Contour, boundary_contours, inner_contours
from quadomain.geometry.domains import (
    Annulus, Ball, Disc, HartogsOverDisc, Polydisc, Product, Reinhardt, domain_from_spec, multi_indices,
)
from quadomain.geometry.lattices import interior_lattice, planar_lattice, random_points, zprime_lattice
from quadomain.geometry.rules import volume_rule


def test_analytic_volumes():
    """Closed-form volumes of every model domain."""
    assert Disc(0j, 2.0).volume() == pytest.approx(4 * math.pi)
    assert Annulus(0.5, 1.0).volume() == pytest.approx(0.75 * math.pi)
    assert Ball(2).volume() == pytest.approx(math.pi ** 2 / 2)
    assert Polydisc((1.0, 2.0)).volume() == pytest.approx(4 * math.pi ** 2)
    assert HartogsOverDisc((1.0, -0.5), math.sqrt(2.0)).volume() == pytest.approx(2 * math.pi ** 2 / 3)
    # the (1, 1) ellipsoid is the unit ball
    assert Reinhardt((1, 1)).volume() == pytest.approx(math.pi ** 2 / 2)


@pytest.mark.parametrize("domain", [
    Disc(0.2 + 0.1j, 1.5),
    Annulus(0.5, 1.0),
    Ball(2),
    Product((Disc(), Annulus(0.5, 1.0))),
    HartogsOverDisc((1.0, -0.5), math.sqrt(2.0)),
    Reinhardt((1, 1)),
])
def test_rule_weights_sum_to_volume(domain):
    rule = volume_rule(domain, 8, 12)
    assert rule.total_weight() == pytest.approx(domain.volume(), rel=1e-10)
    assert np.all(domain.contains(rule.nodes))


def test_rule_integrates_squared_modulus():
    """int_D |z|^2 = pi / 2 on the unit disc."""
    rule = volume_rule(Disc(), 8, 8)
    assert rule.integrate(lambda z: np.abs(z[:, 0]) ** 2).real == pytest.approx(math.pi / 2, rel=1e-12)


def test_rule_order_too_small():
    with pytest.raises(DomainError):
        volume_rule(Disc(), 2)


def test_contains_and_margin(annulus):
    points = np.array([0.3, 0.52, 0.75, 0.97, 1.2])
    assert annulus.contains(points).tolist() == [False, True, True, True, False]
    assert annulus.within_margin(points, 0.05).tolist() == [False, False, True, False, False]
    assert annulus.contains(0.75)


def test_product_membership(disc_annulus):
    assert disc_annulus.contains(np.array([0.5, 0.75]))
    assert not disc_annulus.contains(np.array([0.5, 0.25]))
    assert not disc_annulus.contains(np.array([1.5, 0.75]))


def test_invalid_domains():
    with pytest.raises(DomainError):
        Disc(0j, -1.0)
    with pytest.raises(DomainError):
        Annulus(1.0, 0.5)
    with pytest.raises(DomainError):
        HartogsOverDisc((1.0, -1.0), 2.0)
    with pytest.raises(DomainError):
        Reinhardt((1, 0))
    with pytest.raises(DomainError):
        Disc().within_margin(0.0, 1.5)


def test_domain_from_spec():
    domain = domain_from_spec({'kind': 'product', 'factors': [
        {'kind': 'disc'}, {'kind': 'annulus', 'inner': 0.5, 'outer': 1.0}]})
    assert isinstance(domain, Product)
    assert domain.dimension == 2
    assert domain_from_spec(domain.describe()) == domain

    with pytest.raises(DomainError):
        domain_from_spec({'kind': 'torus'})
    with pytest.raises(DomainError):
        domain_from_spec({'kind': 'annulus'})


def test_multi_indices_graded():
    indices = multi_indices(2, 2)
    assert indices[0] == (0, 0)
    assert len(indices) == 6
    assert [sum(i) for i in indices] == sorted(sum(i) for i in indices)


def test_planar_lattice_inside_margin(unit_disc, annulus):
    for domain in (unit_disc, annulus):
        nodes = planar_lattice(domain, 24, 0.05)
        assert len(nodes) == 24
        assert np.all(domain.within_margin(nodes, 0.05))
    assert planar_lattice(unit_disc, 24)[0, 0] == 0


def test_planar_lattice_inner_ring(unit_disc, annulus):
    nodes = planar_lattice(unit_disc, 8, 0.05, inner_ring=0.3)[:, 0]
    assert len(nodes) == 8
    assert np.allclose(np.abs(nodes), 0.3 * 0.95)
    with pytest.raises(DomainError):
        planar_lattice(unit_disc, 8, 0.05, inner_ring=1.2)
    # annuli have no center to avoid
    assert np.allclose(planar_lattice(annulus, 8, 0.05, inner_ring=0.3), planar_lattice(annulus, 8, 0.05))


def test_hartogs_lattice_off_center():
    domain = HartogsOverDisc((1.0, -0.5), math.sqrt(2.0))
    points = interior_lattice(domain, [8, 1], 0.05, inner_ring=0.3).points
    assert points.shape == (8, 2)
    assert np.all(np.abs(points[:, 0]) > 0.1)
    assert np.allclose(points[:, 1], 0.0)


def test_random_points_inside(ball, rng):
    points = random_points(ball, 500, rng, 0.1)
    assert points.shape == (500, 2)
    assert np.all(ball.within_margin(points, 0.1))


def test_zprime_lattice_shape(disc_annulus):
    lattice = zprime_lattice(disc_annulus, 0.05)
    assert lattice.shape == (81, 1)
    assert np.max(np.abs(lattice)) <= 0.95 + 1e-12


def test_contours(unit_disc, annulus):
    assert inner_contours(unit_disc) == []
    circles = inner_contours(annulus)
    assert len(circles) == 1
    assert circles[0].radius == pytest.approx(0.75)

    outer, inner = boundary_contours(annulus, 0.1, 64)
    assert outer.orientation == 1 and inner.orientation == -1
    assert inner.radius == pytest.approx(0.55)

    circle = Contour(0j, 0.5, 64)
    assert circle.integrate(lambda z: 1.0 / z) == pytest.approx(2j * math.pi)
    assert circle.integrate(lambda z: z ** 3) == pytest.approx(0.0, abs=1e-14)

    with pytest.raises(DomainError):
        Contour(0j, 1.0, 15)
