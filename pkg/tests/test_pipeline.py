import math
import time
import pytest
from pathlib import Path

from quadomain.certify.pipeline import certify_construction
from quadomain.config import load_config, parse_config
from quadomain.construct.pipeline import construct_quadrature_domain
from quadomain.errors import StageError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_fit_failure_is_tagged():
    """A fit target that cannot be met stops the run in the fit stage."""
    config = parse_config({'schema_version': 1, 'kind': 'construct',
                           'domain': {'kind': 'annulus', 'inner': 0.5, 'outer': 1.0},
                           'fit': {'lattice': [2], 'epsilon': 1e-12}})
    progress = {}
    with pytest.raises(StageError) as info:
        construct_quadrature_domain(config, progress)
    assert info.value.stage == 'fit'
    assert 'kernel' in progress
    assert 'fit' in progress['timing']


@pytest.mark.slow
def test_bidisc_end_to_end():
    config = load_config(CONFIG_DIR / "disc_disc.json")
    progress = {}
    construction = construct_quadrature_domain(config, progress)
    assert construction.certificate.certified
    assert construction.closeness['sup_deviation'] < 1e-10

    result = certify_construction(construction, config, progress)
    assert result.passed
    assert result.volume == pytest.approx(math.pi ** 2, rel=1e-10)
    assert len(result.data.nodes) == 1
    assert result.converse['coefficient_error'] < config.tolerances.roundtrip
    summary = result.to_dict()
    assert set(summary) == {'quadrature_data', 'image_volume', 'method_agreement', 'collocation',
                            'identity', 'converse'}
    assert set(progress['timing']) >= {'kernel', 'fit', 'periods', 'correction', 'graph_map', 'injectivity',
                                       'extraction', 'integration', 'collocation', 'identity', 'converse'}


@pytest.mark.slow
def test_disc_annulus_periods_removed():
    config = load_config(CONFIG_DIR / "disc_annulus.json")
    progress = {}
    construction = construct_quadrature_domain(config, progress)
    assert progress['residual_period'] < config.tolerances.period
    assert progress['terms']['corrected'] > progress['terms']['fitted']
    assert construction.certificate.certified
    assert construction.matrix.size == 1


@pytest.mark.slow
def test_disc_annulus_end_to_end_is_timely():
    config = load_config(CONFIG_DIR / "disc_annulus.json")
    progress = {}
    start = time.perf_counter()
    construction = construct_quadrature_domain(config, progress)
    result = certify_construction(construction, config, progress)
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    assert result.passed
    identity = result.residuals.to_dict()
    assert identity['max_relative'] <= 1e-6
    assert identity['in_basis_count'] > 0
    assert identity['generalization_ratio'] <= 10.0
    assert result.agreement <= config.tolerances.method_agreement
    assert result.converse['coefficient_error'] <= config.tolerances.roundtrip


@pytest.mark.slow
@pytest.mark.parametrize("name", ["hartogs", "ellipsoid"])
def test_fibered_domains_end_to_end(name):
    """Off-center nodes give a nonconstant Jacobian and a genuine quadrature domain image."""
    config = load_config(CONFIG_DIR / f"{name}.json")
    progress = {}
    construction = construct_quadrature_domain(config, progress)
    assert 1e-8 < construction.fit_report.sup_error <= 0.05
    assert construction.certificate.certified

    result = certify_construction(construction, config, progress)
    assert result.passed
    assert len(result.data.nodes) == 8
    assert progress['kernel']['certified_margin'] is not None


@pytest.mark.slow
def test_collocation_disagreement_is_tagged(monkeypatch):
    monkeypatch.setattr('quadomain.certify.pipeline.coefficient_agreement', lambda *args: 1.0)
    config = load_config(CONFIG_DIR / "disc_disc.json")
    progress = {}
    construction = construct_quadrature_domain(config, progress)
    with pytest.raises(StageError) as info:
        certify_construction(construction, config, progress)
    assert info.value.stage == 'collocation'
    assert progress['collocation']['agreement'] == 1.0
    assert 'collocation' in progress['timing']
    assert 'identity' not in progress['timing']
