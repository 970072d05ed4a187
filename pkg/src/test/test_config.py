import pytest
import sys
import os
import json

import tomli_w

# tomllib is included in standard library in Python 3.11+
try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

myPath = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(myPath, '../lamespectra'))

from src.lamespectra.config import (
    THREADS_ENV,
    load_config,
    resolve_threads,
    resolved_toml,
    validate_config,
)
from src.lamespectra.errors import ConfigError
from src.lamespectra.poly import Poly


def heine_config(**kwargs):
    config = {
        'operator': {'k': 1, 'coeffs': [{'re': [0.0, -1.0, 1.0]}]},
        'task': 'solve',
        'n': 5,
    }
    config.update(kwargs)
    return config


@pytest.fixture(scope='session')
def config_file(tmp_path_factory):
    configfile = tmp_path_factory.mktemp('data') / 'config.toml'
    with open(configfile, 'wb') as f:
        tomli_w.dump(heine_config(seed=7, eps=0.2), f)
    return str(configfile)


@pytest.fixture(scope='session')
def json_config_file(tmp_path_factory):
    configfile = tmp_path_factory.mktemp('data') / 'config.json'
    with open(configfile, 'w') as f:
        json.dump(
            {
                'operator': {'k': 3, 'composition_of': {'re': [3.0, 2.0, 1.0, 1.0, 1.0]}},
                'task': 'spectrum-sweep',
                'n_list': [12, 10, 10],
            },
            f,
        )
    return str(configfile)


def field_path(data, **kwargs):
    with pytest.raises(ConfigError) as e:
        validate_config(data, **kwargs)
    return e.value.field_path


def test_load_toml(config_file):
    config = load_config(config_file)
    assert config.task == 'solve'
    assert config.n == 5
    assert config.seed == 7
    assert config.eps == pytest.approx(0.2)
    assert config.probes.count == 16
    op = config.build_operator()
    assert op.k == 1
    assert op.r == 1
    assert op.q[1] == Poly([0, -1, 1])


def test_load_json(json_config_file):
    config = load_config(json_config_file)
    assert config.n_list == [10, 12]
    assert config.degrees() == [10, 12]
    assert config.build_operator().r == 1


def test_command_line_overrides(config_file, tmp_path):
    config = load_config(config_file, output_dir=str(tmp_path), seed=11)
    assert config.output_dir == str(tmp_path)
    assert config.seed == 11
    with pytest.raises(ConfigError):
        # a sweep needs n_list
        load_config(config_file, task='spectrum-sweep')


def test_field_paths():
    bad_k = heine_config(operator={'k': 0, 'coeffs': [{'re': [0.0, -1.0, 1.0]}]})
    assert field_path(bad_k) == 'operator.k'
    assert field_path(heine_config(task='spectrum-sweep', n_list=[])) == 'n_list'
    both = heine_config(
        operator={
            'k': 1,
            'coeffs': [{'re': [0.0, -1.0, 1.0]}],
            'composition_of': {'re': [0.0, 1.0]},
        }
    )
    assert field_path(both) == 'operator'
    assert field_path(heine_config(bogus=1)) == 'bogus'
    mismatch = heine_config(operator={'k': 1, 'coeffs': [{'re': [0.0, 1.0], 'im': [1.0]}]})
    assert field_path(mismatch).startswith('operator.coeffs.0')


def test_operator_that_does_not_build():
    # composition needs deg Q >= k
    short = heine_config(operator={'k': 3, 'composition_of': {'re': [1.0, 0.0, 1.0]}})
    assert field_path(short) == 'operator'


def test_degree_below_operator_order():
    config = heine_config(operator={'k': 3, 'composition_of': {'re': [3.0, 2.0, 1.0, 1.0, 1.0]}}, n=2)
    with pytest.raises(ConfigError) as e:
        validate_config(config)
    assert 'below the operator order' in str(e.value)


def test_task_requirements():
    with pytest.raises(ConfigError):
        validate_config(heine_config(n=None))
    with pytest.raises(ConfigError):
        validate_config(heine_config(task='forest', n=None))
    config = validate_config(heine_config(task='forest', n=None, forest={'n': 40}))
    assert config.degrees() == [40]


def test_bad_toml(tmp_path):
    configfile = tmp_path / 'broken.toml'
    configfile.write_text('operator = [unclosed\n')
    with pytest.raises(ConfigError):
        load_config(str(configfile))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / 'nothing.toml'))


def test_resolve_threads(config_file):
    config = load_config(config_file)
    assert resolve_threads(config, {THREADS_ENV: '3'}) == 3
    with pytest.raises(ConfigError):
        resolve_threads(config, {THREADS_ENV: '0'})
    with pytest.raises(ConfigError):
        resolve_threads(config, {THREADS_ENV: 'many'})
    assert 1 <= resolve_threads(config, {}) <= 4
    pinned = validate_config(heine_config(threads=2))
    assert resolve_threads(pinned, {}) == 2
    assert resolve_threads(pinned, {THREADS_ENV: '1'}) == 1


def test_resolved_toml_round_trip(json_config_file):
    config = load_config(json_config_file)
    echoed = tomllib.loads(resolved_toml(config))
    assert echoed['n_list'] == [10, 12]
    assert validate_config(echoed) == config
