import pytest
import sys
import os

import pandas as pd

myPath = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(myPath, '../lamespectra'))

from src.lamespectra.store import AbstractStore, FileStore, OutputStore
from src.lamespectra.utils import read_json


@pytest.fixture(scope='session')
def outdir(tmp_path_factory):
    return str(tmp_path_factory.mktemp('out'))


def test_abstract_store_is_abstract():
    with pytest.raises(TypeError):
        AbstractStore()


def test_file_store_writes(outdir):
    store = OutputStore(FileStore(outdir))
    store.add_json('report.json', {'z': 1 + 2j, 'n': 3})
    store.add_csv('points.csv', pd.DataFrame({'x': [0.1, 0.2], 'y': [0.0, 1.0]}))
    store.add_text('figures/plot.svg', '<svg/>')
    assert store.list_files() == ['report.json', 'points.csv', 'figures/plot.svg']
    assert read_json(store.path('report.json')) == {'n': 3, 'z': {'im': 2.0, 're': 1.0}}
    df = pd.read_csv(store.path('points.csv'))
    assert list(df.columns) == ['x', 'y']
    assert store.missing_or_empty() == []


def test_json_is_deterministic(tmp_path):
    store = FileStore(str(tmp_path))
    store.add_json('a.json', {'b': 1.5, 'a': [1, 2]})
    store.add_json('b.json', {'a': [1, 2], 'b': 1.5})
    with open(store.path('a.json')) as f1, open(store.path('b.json')) as f2:
        assert f1.read() == f2.read()


def test_no_overwrite(tmp_path):
    store = FileStore(str(tmp_path), overwrite=False)
    store.add_text('once.txt', 'first')
    with pytest.raises(FileExistsError):
        store.add_text('once.txt', 'second')


def test_output_path_is_a_file(tmp_path):
    target = tmp_path / 'plain'
    target.write_text('not a directory')
    with pytest.raises(NotADirectoryError):
        FileStore(str(target))


def test_missing_or_empty(tmp_path):
    store = OutputStore(FileStore(str(tmp_path)))
    store.add_text('empty.txt', '')
    store.add_text('full.txt', 'x')
    os.remove(store.path('full.txt'))
    assert store.missing_or_empty() == ['empty.txt', 'full.txt']
