import os

import pytest

from utils.commons.hparams import hparams

ROOT = os.path.dirname(os.path.abspath(__file__))


@pytest.fixture(autouse=True)
def clean_hparams():
    hparams.clear()
    yield
    hparams.clear()


@pytest.fixture
def config_path():
    return os.path.join(ROOT, 'egs', 'config.yaml')
