import json
import pytest
import numpy as np

from quadomain.geometry.domains import Annulus, Ball, Disc, Product
from quadomain.kernels.factory import kernel_for


@pytest.fixture
def unit_disc():
    return Disc()


@pytest.fixture
def annulus():
    return Annulus(0.5, 1.0)


@pytest.fixture
def bidisc():
    return Product((Disc(), Disc()))


@pytest.fixture
def disc_annulus():
    return Product((Disc(), Annulus(0.5, 1.0)))


@pytest.fixture
def ball():
    return Ball(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def disc_kernel(unit_disc):
    return kernel_for(unit_disc)


@pytest.fixture
def annulus_kernel(annulus):
    return kernel_for(annulus)


@pytest.fixture
def write_config(tmp_path):
    """Write a configuration document and return its path."""
    def _write(document, name='run.json'):
        path = tmp_path / name
        if isinstance(document, str):
            path.write_text(document)
        else:
            path.write_text(json.dumps(document))
        return path
    return _write
