import math
import pytest
import numpy as np

from quadomain.config import parse_config
from quadomain.errors import ConfigError, DomainError, IntegrationError, StageError
from quadomain.geometry.domains import Ball
from quadomain.geometry.lattices import random_points
from quadomain.onepoint.automorphisms import (
    automorphism_from_spec, henon, preimage_domain, shiftlike, unit_jacobian_check,
)
from quadomain.onepoint.certification import (
    bonferroni_sigma, bounding_box, certify_onepoint, monte_carlo_integrals, pullback_ball_rule,
    rule_symmetry_error,
)
from quadomain.certify.battery import monomial_function
from quadomain.onepoint.pipeline import run_onepoint


def onepoint_config(kind='henon', coefficients=(0, 0, 1), **extra):
    document = {'schema_version': 1, 'kind': 'onepoint', 'mc_samples': 200_000,
                'automorphism': dict({'kind': kind, 'coefficients': list(coefficients)}, **extra)}
    return parse_config(document)


@pytest.fixture
def quadratic_henon():
    return henon([0, 0, 1])


def test_henon_map_and_inverse(quadratic_henon, rng):
    point = np.array([[0.3 + 0.1j, -0.2j]])
    z, w = point[0]
    assert np.allclose(quadratic_henon(point)[0], [w, w ** 2 - z])
    assert np.allclose(quadratic_henon.inverse(point)[0], [z ** 2 - w, z])
    test_points = random_points(Ball(2), 100, rng, 0.0)
    assert quadratic_henon.roundtrip_error(test_points) <= 1e-12
    assert quadratic_henon.degree == 2
    assert quadratic_henon.inverse_degree == 2


def test_quadrature_nodes():
    assert np.allclose(henon([0, 0, 1]).node(), [0, 0])
    assert np.allclose(henon([0.3, 0, 1]).node(), [0.3, 0])
    assert np.allclose(shiftlike([0.2, 0, 1]).node(), [-0.2, 0, 0])


def test_unit_jacobian(quadratic_henon, rng):
    test_points = random_points(Ball(2), 50, rng, 0.0)
    assert unit_jacobian_check(quadratic_henon, test_points) < 1e-12
    assert unit_jacobian_check(quadratic_henon, test_points, numerical=False) < 1e-14
    cubic = shiftlike([0, 1, 0, 1])
    test_points = random_points(Ball(3), 50, rng, 0.0)
    assert unit_jacobian_check(cubic, test_points, numerical=False) < 1e-14
    assert cubic.roundtrip_error(test_points) < 1e-12


def test_injected_jacobian_error(quadratic_henon, rng):
    perturbed = quadratic_henon.with_jacobian_error(1e-3)
    test_points = random_points(Ball(2), 20, rng, 0.0)
    assert np.allclose(perturbed.jacobian_determinant(test_points), 1.001)
    assert perturbed.roundtrip_error(test_points) < 1e-12
    assert not perturbed.unit_jacobian


def test_automorphism_from_spec():
    assert automorphism_from_spec('shiftlike', [0, 0, 1]).dimension == 3
    assert automorphism_from_spec('henon', [0, 0, 1], 1e-3).name == 'henon+jacobian_error'
    with pytest.raises(ConfigError):
        automorphism_from_spec('lorenz', [1])
    with pytest.raises(ConfigError):
        henon(['a'])


def test_preimage_membership(quadratic_henon, rng):
    domain = preimage_domain(quadratic_henon)
    assert domain.volume() == pytest.approx(math.pi ** 2 / 2)
    assert domain.contains(quadratic_henon.node())
    points = 2.0 * (rng.uniform(-1, 1, (200, 2)) + 1j * rng.uniform(-1, 1, (200, 2)))
    expected = np.sum(np.abs(quadratic_henon(points)) ** 2, axis=1)
    assert np.allclose(domain.membership_expansion(points), expected)
    assert np.array_equal(domain.contains(points), expected < 1.0)
    assert domain.notes() == []


def test_shiftlike_membership_and_note(rng):
    a = shiftlike([0.1, 0, 1])
    domain = preimage_domain(a)
    points = rng.uniform(-1, 1, (200, 3)) + 1j * rng.uniform(-1, 1, (200, 3))
    assert np.allclose(domain.membership_expansion(points), np.sum(np.abs(a(points)) ** 2, axis=1))
    assert len(domain.notes()) == 1
    assert '|z3|^2' in domain.notes()[0]


def test_preimage_dimension_mismatch(quadratic_henon):
    with pytest.raises(DomainError):
        preimage_domain(quadratic_henon, Ball(3))


def test_ball_rule_symmetry():
    rule = pullback_ball_rule(Ball(2), 12)
    assert rule.total_weight() == pytest.approx(math.pi ** 2 / 2)
    assert rule_symmetry_error(rule, 12) < 1e-12


def test_bounding_box_holds_preimage(quadratic_henon):
    domain = preimage_domain(quadratic_henon)
    radii = bounding_box(domain)
    assert np.allclose(radii, [2.2, 1.1])


def test_bonferroni_sigma():
    assert bonferroni_sigma(1) == pytest.approx(3.0)
    assert bonferroni_sigma(33) > 3.5
    assert bonferroni_sigma(89) > bonferroni_sigma(33)


def test_monte_carlo_volume(quadratic_henon):
    domain = preimage_domain(quadratic_henon)
    result = monte_carlo_integrals(domain, [monomial_function((0, 0))], 200_000, seed=5)
    estimate, error = result['estimates'][0], result['errors'][0]
    assert abs(estimate - domain.volume()) < 5 * error
    assert 0 < result['hits'] < 200_000
    again = monte_carlo_integrals(domain, [monomial_function((0, 0))], 200_000, seed=5)
    assert again['estimates'][0] == estimate


def test_certify_henon(quadratic_henon):
    report = certify_onepoint(quadratic_henon, mc_samples=200_000)
    assert report.passed
    assert report.max_relative < 1e-10
    assert len(report.rows) == 33
    assert report.methods['pullback']['degree'] == 12
    monte_carlo = report.methods['monte_carlo']
    assert monte_carlo['threshold_sigmas'] == pytest.approx(bonferroni_sigma(33))
    assert monte_carlo['nominal_sigmas'] == 3.0
    assert monte_carlo['correction'] == 'bonferroni'


def test_certify_rejects_bad_jacobian(quadratic_henon):
    with pytest.raises(IntegrationError):
        certify_onepoint(quadratic_henon.with_jacobian_error(1e-3), mc_samples=10_000)


def test_run_onepoint_pipeline():
    progress = {}
    result = run_onepoint(onepoint_config(), progress)
    assert result.report.passed
    assert progress['checks']['jacobian_deviation'] < 1e-12
    summary = result.to_dict()
    assert summary['coefficient'] == pytest.approx(math.pi ** 2 / 2)
    assert summary['node'] == [[0.0, 0.0], [0.0, 0.0]]
    sphere, preimages = result.point_clouds(samples=16)
    assert np.allclose(np.linalg.norm(sphere, axis=1), 1.0)
    assert np.allclose(result.automorphism(preimages), sphere)
    assert set(progress['timing']) == {'automorphism', 'jacobian', 'pullback', 'monte_carlo'}
    assert progress['monte_carlo']['all_within']


def test_run_onepoint_jacobian_failure():
    config = onepoint_config(inject_jacobian_error=1e-3)
    with pytest.raises(StageError) as info:
        run_onepoint(config)
    assert info.value.stage == 'jacobian'


@pytest.mark.slow
def test_certify_shiftlike():
    report = certify_onepoint(shiftlike([0, 0, 1]), mc_samples=1_000_000)
    assert report.passed
    assert len(report.rows) == 89
    assert report.notes[0].startswith('Shift-like')


def test_bonferroni_threshold_for_default_battery():
    assert bonferroni_sigma(33) == pytest.approx(3.94, abs=0.01)


def test_run_onepoint_monte_carlo_failure_is_timed(monkeypatch):
    monkeypatch.setattr('quadomain.onepoint.certification.bonferroni_sigma', lambda count, sigma=3.0: 0.0)
    progress = {}
    with pytest.raises(StageError) as info:
        run_onepoint(onepoint_config(), progress)
    assert info.value.stage == 'monte_carlo'
    assert 'monte_carlo' in progress['timing']
    assert progress['monte_carlo']['all_within'] is False
    assert progress['monte_carlo']['threshold_sigmas'] == 0.0


@pytest.mark.slow
def test_run_onepoint_shiftlike():
    config = parse_config({'schema_version': 1, 'kind': 'onepoint', 'mc_samples': 1_000_000, 'seed': 0,
                           'automorphism': {'kind': 'shiftlike', 'coefficients': [0.0, 0.0, 1.0]}})
    progress = {}
    result = run_onepoint(config, progress)
    assert result.report.passed
    assert result.report.max_relative < 1e-10
    assert len(result.report.rows) == 89
    assert progress['monte_carlo']['all_within']
    summary = result.to_dict()
    assert summary['coefficient'] == pytest.approx(math.pi ** 3 / 6)
    assert summary['node'] == [[0.0, 0.0]] * 3
    assert set(progress['timing']) == {'automorphism', 'jacobian', 'pullback', 'monte_carlo'}
