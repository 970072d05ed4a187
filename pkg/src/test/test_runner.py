import pytest
import sys
import os

import tomli_w

myPath = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(myPath, '../lamespectra'))

from src.lamespectra.config import validate_config
from src.lamespectra.runner import Run, kernel_checks, main, parse_args, run
from src.lamespectra.utils import read_json

HEINE = {'k': 1, 'coeffs': [{'re': [0.0, -1.0, 1.0]}]}
# Q_0 omitted: (z^2 - 1) S'' + 2z S'
LEGENDRE = {'k': 2, 'coeffs': [{'re': [0.0, 2.0]}, {'re': [-1.0, 0.0, 1.0]}]}


def make_config(outdir, **kwargs):
    data = {'operator': HEINE, 'task': 'solve', 'n': 5, 'output_dir': str(outdir), 'threads': 1}
    data.update(kwargs)
    return validate_config(data)


@pytest.fixture(scope='session')
def solve_run(tmp_path_factory):
    outdir = tmp_path_factory.mktemp('solve')
    return outdir, run(make_config(outdir))


def test_parse_args():
    args = parse_args(['solve', '-c', 'config.toml', '-o', 'out', '-s', '3', '-d'])
    assert args.task == 'solve'
    assert args.config == 'config.toml'
    assert args.out == 'out'
    assert args.seed == 3
    assert args.debug
    with pytest.raises(SystemExit):
        parse_args(['nonsense', '-c', 'config.toml'])


def test_solve_outputs(solve_run):
    outdir, manifest = solve_run
    assert manifest.exit_code == 0
    assert manifest.error is None
    spectrum = read_json(outdir / 'spectrum_n5.json')
    assert spectrum['found_count'] == 6
    assert spectrum['expected_count'] == 6
    for name in ('spectrum_n5.csv', 'manifest.json', 'config.resolved.toml'):
        assert (outdir / name).exists()


def test_solve_manifest(solve_run):
    outdir, _ = solve_run
    manifest = read_json(outdir / 'manifest.json')
    assert manifest['passed']
    assert manifest['task'] == 'solve'
    names = {c['name'] for c in manifest['checks']}
    assert {'count_n5', 'residual_n5', 'van_vleck_degree_n5'} <= names
    assert 'spectrum_n5.json' in manifest['files']
    assert 'solve' in manifest['stages']


def test_sweep(tmp_path):
    manifest = run(make_config(tmp_path, task='spectrum-sweep', n=None, n_list=[4, 2]))
    assert manifest.exit_code == 0
    assert (tmp_path / 'spectrum_n2.json').exists()
    assert (tmp_path / 'spectrum_n4.json').exists()
    assert (tmp_path / 'sweep.csv').exists()


def test_figures(tmp_path):
    manifest = run(make_config(tmp_path, task='figures', figure={'figures': ['fig1', 'fig2']}))
    assert manifest.exit_code == 0
    for name in ('fig1.svg', 'fig1.csv', 'fig2.svg', 'fig2.csv'):
        assert (tmp_path / name).exists()


def test_unsupported_operator_exits_1(tmp_path):
    # Q_1 = z^3 gives r = 2
    op = {'k': 1, 'coeffs': [{'re': [0.0, 0.0, 0.0, 1.0]}]}
    manifest = run(make_config(tmp_path, operator=op, n=4))
    assert manifest.exit_code == 1
    assert manifest.error.startswith('UnsupportedEnumerationError')
    assert read_json(tmp_path / 'manifest.json')['error'] == manifest.error


def test_main(tmp_path):
    configfile = tmp_path / 'config.toml'
    with open(configfile, 'wb') as f:
        tomli_w.dump({'operator': HEINE, 'n': 3, 'threads': 1}, f)
    outdir = tmp_path / 'out'
    assert main(['solve', '-c', str(configfile), '-o', str(outdir)]) == 0
    assert read_json(outdir / 'spectrum_n3.json')['found_count'] == 4


def test_main_bad_config(tmp_path):
    configfile = tmp_path / 'config.toml'
    with open(configfile, 'wb') as f:
        tomli_w.dump({'operator': {'k': 0, 'coeffs': [{'re': [1.0, 1.0]}]}, 'n': 3}, f)
    assert main(['solve', '-c', str(configfile)]) == 1
    assert main(['solve', '-c', str(tmp_path / 'missing.toml')]) == 1


def legendre_config(outdir, **kwargs):
    data = {
        'operator': LEGENDRE,
        'output_dir': str(outdir),
        'threads': 1,
        'probes': {'tol': 0.5},
        'forest': {'n': 40},
        'figure': {'interlacing_n': 20},
    }
    data.update(kwargs)
    return validate_config(data)


def checks_by_name(manifest):
    return {c.name: c for c in manifest.checks}


def test_kernel_checks(tmp_path):
    current = Run(make_config(tmp_path), threads=1)
    kernel_checks(current)
    checks = checks_by_name(current.manifest)
    for name in ('kernel_companion_roots', 'kernel_trace', 'kernel_determinant', 'kernel_gauss_lucas'):
        assert checks[name].passed
        assert checks[name].hard
    assert '50 random' in checks['kernel_companion_roots'].detail
    assert '100 polynomials' in checks['kernel_gauss_lucas'].detail


def test_measure_check(tmp_path):
    manifest = run(legendre_config(tmp_path, task='measure-check', n_list=[10, 20]))
    assert manifest.error is None
    assert manifest.exit_code == 0
    checks = checks_by_name(manifest)
    assert checks['gauss_legendre_nodes_n20'].passed
    assert checks['probe_error_n20'].passed
    assert not checks['probe_trend'].hard
    for name in ('probes_n10.csv', 'probes_n20.csv', 'measure_summary.csv'):
        assert (tmp_path / name).exists()


def test_forest_task(tmp_path):
    manifest = run(legendre_config(tmp_path, task='forest'))
    assert manifest.error is None
    checks = checks_by_name(manifest)
    for name in ('forest_endpoints', 'forest_census', 'arcsine_density', 'arcsine_mass'):
        assert checks[name].passed
    for name in ('forest.json', 'forest.svg', 'forest.csv', 'forest_vertices.csv', 'forest_density.csv'):
        assert (tmp_path / name).exists()
    assert read_json(tmp_path / 'forest.json')['total_mass'] == pytest.approx(1.0, abs=1e-3)


def test_derivative_figures(tmp_path):
    manifest = run(make_config(tmp_path, task='figures', figure={'figures': ['fig4', 'fig5']}))
    assert manifest.exit_code == 0
    for name in ('fig4.svg', 'fig4.csv', 'fig5.svg', 'fig5.csv'):
        assert (tmp_path / name).exists()


def test_interlacing_figure(tmp_path):
    manifest = run(legendre_config(tmp_path, task='figures', figure={'figures': ['fig6'], 'interlacing_n': 20}))
    assert manifest.exit_code == 0
    for name in ('fig6.svg', 'fig6.csv', 'interlacing.json'):
        assert (tmp_path / name).exists()
    assert not checks_by_name(manifest)['interlacing'].hard
    assert read_json(tmp_path / 'interlacing.json')['n'] == 20


def test_outputs_are_deterministic(tmp_path):
    first, second = tmp_path / 'first', tmp_path / 'second'
    run(make_config(first, task='spectrum-sweep', n=None, n_list=[3, 4, 5], threads=1))
    run(make_config(second, task='spectrum-sweep', n=None, n_list=[3, 4, 5], threads=2))
    names = sorted(p.name for p in first.iterdir() if p.suffix in ('.json', '.csv'))
    names.remove('manifest.json')
    assert 'sweep.csv' in names
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


@pytest.mark.slow
def test_verify_all(tmp_path):
    manifest = run(legendre_config(tmp_path, task='verify-all', n_list=[10, 20]))
    assert manifest.error is None
    checks = checks_by_name(manifest)
    for name in ('kernel_determinant', 'closed_form_k1', 'closed_form_k2_lame', 'classification',
                 'hull_n20', 'gauss_legendre_nodes_n20', 'forest_endpoints', 'arcsine_density'):
        assert checks[name].passed
    assert 'interlacing' in checks
    assert manifest.exit_code == 0
