import pytest
from pathlib import Path

from quadomain.config import Tolerances, load_config, parse_config
from quadomain.errors import ConfigError
from quadomain.geometry.domains import Product

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def construct_document(**overrides):
    document = {'schema_version': 1, 'kind': 'construct',
                'domain': {'kind': 'polydisc', 'radii': [1.0, 1.0]},
                'fit': {'exact': True, 'lattice': [4, 24]}}
    document.update(overrides)
    return document


@pytest.mark.parametrize("name", ["disc_disc", "disc_annulus", "hartogs", "ellipsoid", "henon", "shiftlike"])
def test_shipped_configs_parse(name):
    config = load_config(CONFIG_DIR / f"{name}.json")
    assert config.seed == 0
    assert config.tolerances == Tolerances()


def test_construct_config_builds_domain():
    config = parse_config(construct_document())
    assert config.kind == 'construct'
    assert isinstance(config.domain.build(), Product)
    assert config.fit.exact
    assert config.fit.lattice == (4, 24)
    assert config.automorphism is None


def test_onepoint_coefficients():
    config = parse_config({'schema_version': 1, 'kind': 'onepoint',
                           'automorphism': {'kind': 'henon', 'coefficients': [0, [0.5, -1.0], 1]}})
    assert config.automorphism.coefficients == (0j, 0.5 - 1j, 1 + 0j)
    assert config.to_dict()['automorphism']['coefficients'] == [[0.0, 0.0], [0.5, -1.0], [1.0, 0.0]]


def test_tolerance_scale_and_seed_override():
    config = parse_config(construct_document(seed=3), tolerance_scale=10.0, seed=11)
    assert config.seed == 11
    assert config.tolerances.identity == pytest.approx(1e-5)
    assert config.tolerances.period == pytest.approx(1e-9)
    assert config.tolerances.condition_limit == Tolerances().condition_limit


def test_explicit_tolerances():
    config = parse_config(construct_document(tolerances={'identity': 1e-4}))
    assert config.tolerances.identity == 1e-4
    assert config.tolerances.period == Tolerances().period


@pytest.mark.parametrize("overrides", [
    {'schema_version': 2},
    {'kind': 'deform'},
    {'colour': 'blue'},
    {'domain': {'kind': 'torus'}},
    {'domain': 'disc'},
    {'margin': 0.6},
    {'contour_samples': 101},
    {'contour_samples': 8},
    {'mc_samples': 10},
    {'seed': -1},
    {'fit': {'max_order': 5}},
    {'fit': {'lattice': []}},
    {'fit': {'epsilon': 0}},
    {'fit': {'smoothing': 1}},
    {'tolerances': {'identity': 'small'}},
    {'tolerances': {'speed': 1.0}},
    {'battery_version': 0},
])
def test_invalid_construct_configs(overrides):
    with pytest.raises(ConfigError):
        parse_config(construct_document(**overrides))


@pytest.mark.parametrize("automorphism", [
    None,
    {'kind': 'lorenz', 'coefficients': [0, 1]},
    {'kind': 'henon'},
    {'kind': 'henon', 'coefficients': [0, 'x']},
    {'kind': 'henon', 'coefficients': [0, 1], 'degree': 2},
])
def test_invalid_automorphisms(automorphism):
    with pytest.raises(ConfigError):
        parse_config({'schema_version': 1, 'kind': 'onepoint', 'automorphism': automorphism})


def test_bad_tolerance_scale():
    with pytest.raises(ConfigError):
        parse_config(construct_document(), tolerance_scale=0.0)


def test_load_config_errors(write_config, tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    with pytest.raises(ConfigError):
        load_config(write_config('{"kind": "construct",'))
    with pytest.raises(ConfigError):
        load_config(write_config([1, 2, 3]))


def test_fit_inner_ring():
    config = parse_config(construct_document(fit={'lattice': [8, 1], 'inner_ring': 0.3}))
    assert config.fit.inner_ring == pytest.approx(0.3)
    assert parse_config(construct_document()).fit.inner_ring is None
    for bad in (0.0, 1.5, 'ring'):
        with pytest.raises(ConfigError):
            parse_config(construct_document(fit={'lattice': [8, 1], 'inner_ring': bad}))
