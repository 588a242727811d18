import os

import pytest

from utils.commons.hparams import apply_overrides, hparams, set_hparams
from utils.commons.multiprocess_utils import chunked_map, chunks


def _square(x):
    return x * x


def test_base_config_chain(config_path):
    parallel = os.path.join(os.path.dirname(config_path), 'parallel.yaml')
    hp = set_hparams(parallel)
    assert hp['num_workers'] == 4
    assert hp['tol'] == pytest.approx(1e-12)
    assert hparams['enum_budget'] == 2 ** 22


def test_overrides(config_path):
    set_hparams(config_path, 'tol=1e-10,max_iter=500,multithread=true,out_dir=/tmp/x')
    assert hparams['tol'] == pytest.approx(1e-10)
    assert hparams['max_iter'] == 500
    assert hparams['multithread'] is True
    assert hparams['out_dir'] == '/tmp/x'
    assert apply_overrides({'a': {'b': 1}}, 'a.b=2') == {'a': {'b': 2}}


def test_missing_config(tmp_path):
    with pytest.raises(FileNotFoundError):
        set_hparams(str(tmp_path / 'missing.yaml'))


def test_chunks():
    assert chunks(5, 2) == [(0, 2), (2, 4), (4, 5)]
    assert chunks(0, 3) == []


@pytest.mark.parametrize('num_workers,multithread', [(1, False), (3, True), (2, False)])
def test_chunked_map_keeps_order(num_workers, multithread):
    items = list(range(37))
    out = chunked_map(_square, items, num_workers=num_workers, multithread=multithread, chunk_size=4,
                      progress=False)
    assert out == [x * x for x in items]
