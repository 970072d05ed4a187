"""
lame-spectra: configuration-driven experiments on higher Lamé operators

    lame-spectra <task> --config path [--out dir] [--seed u64] [-d]

exit codes: 0 all hard checks passed, 2 some hard check failed, 1 the run
could not be executed (bad configuration, numerical failure, I/O error)
"""

import argparse
import concurrent.futures
import logging
import sys
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pandas as pd
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform
from scipy.special import roots_legendre

from . import figures, forest, linalg, measure, spectral
from .__about__ import __version__
from .config import TASKS, load_config, resolve_threads, resolved_toml
from .errors import (
    ConfigError,
    ForestError,
    LameSpectraError,
    OperatorError,
    SpectralError,
    UnsupportedEnumerationError,
)
from .lame_operator import LameOperator, validate
from .poly import Poly, convex_hull, dist_to_hull, roots as poly_roots
from .store import FileStore, OutputStore
from .utils import points_frame

# setup logging as global
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)

# beyond these degrees a single solve is unreliable and pairs are reached
# by degree continuation
EXACT_DIRECT_MAX = 30
SELECT_DIRECT_MAX = 40
FIGURE_N = 39
DEFAULT_DEGREES = (10, 20, 30)
GAP_MAX_DEGREE = 100
CLOSED_FORM_TOL = 1e-10
CLOSED_FORM_MAX_N = 25
LOCALIZATION_SLACK = 1e-3
NODE_TOL = 1e-8
DENSITY_TOL = 1e-3
DENSITY_WINDOW = 0.9
MASS_TOL = 1e-3
KERNEL_TRIALS = 50
KERNEL_MAX_DEGREE = 30
GAUSS_LUCAS_TRIALS = 100
VERTEX_COLORS = {
    'V_zero': figures.PALETTE[1],
    'Q_zero': '#000000',
    'atom': figures.PALETTE[3],
    'junction': figures.PALETTE[2],
    'unresolved': figures.PALETTE[4],
}


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog='lame-spectra',
        description='Van Vleck / Stieltjes spectra of higher Lamé operators',
    )
    parser.add_argument('task', choices=TASKS, help='experiment to run')
    parser.add_argument(
        '-c', '--config', type=str, required=True, help='experiment config (.toml or .json)'
    )
    parser.add_argument(
        '-o', '--out', type=str, default=None, help='output directory (overrides the config)'
    )
    parser.add_argument(
        '-s', '--seed', type=int, default=None, help='random seed (overrides the config)'
    )
    parser.add_argument(
        '-d', '--debug', action='store_true', help='log debug messages'
    )
    return parser.parse_args(argv)


@dataclass
class CheckRecord:
    name: str
    passed: bool
    hard: bool
    value: object = None
    detail: str = ''

    def to_dict(self):
        return {
            'name': self.name,
            'passed': self.passed,
            'hard': self.hard,
            'value': self.value,
            'detail': self.detail,
        }


@dataclass
class RunManifest:
    task: str
    config: dict
    version: str
    seed: int
    threads: int
    stages: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    error: str = None
    wall_time: float = 0.0

    @property
    def hard_failures(self):
        return [c for c in self.checks if c.hard and not c.passed]

    @property
    def exit_code(self):
        if self.error is not None:
            return 1
        return 2 if self.hard_failures else 0

    def to_dict(self):
        return {
            'task': self.task,
            'version': self.version,
            'seed': self.seed,
            'threads': self.threads,
            'config': self.config,
            'wall_time': self.wall_time,
            'stages': self.stages,
            'files': list(self.files),
            'checks': [c.to_dict() for c in self.checks],
            'notes': list(self.notes),
            'error': self.error,
            'passed': self.exit_code == 0,
        }


class Run:
    """
    state of one run: the operator, a spectrum cache shared by the tasks,
    the single-writer output store and the manifest being filled in
    """

    def __init__(self, config, threads=1, store=None):
        self.config = config
        self.op = config.build_operator()
        self.threads = threads
        self.store = store or OutputStore(FileStore(config.output_dir))
        self.manifest = RunManifest(
            task=config.task,
            config=config.model_dump(exclude_none=True),
            version=__version__,
            seed=config.seed,
            threads=threads,
        )
        self._reports = {}
        self._pairs = {}
        self._lock = threading.Lock()
        self._target = None

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        logging.info(f'stage {name}')
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.manifest.stages[name] = self.manifest.stages.get(name, 0.0) + elapsed

    def check(self, name, passed, hard=True, value=None, detail=''):
        record = CheckRecord(name, bool(passed), hard, value, detail)
        self.manifest.checks.append(record)
        level = logging.WARNING if hard and not record.passed else logging.INFO
        logging.log(level, f'check {name}: {"pass" if record.passed else "FAIL"} {detail}')
        return record

    def note(self, message):
        logging.warning(message)
        self.manifest.notes.append(message)

    def spectra(self, degrees, op=None):
        """SpectrumReport per degree; the configured operator's are cached"""
        op = self.op if op is None else op
        cached = op is self.op
        with self._lock:
            missing = [n for n in degrees if not cached or n not in self._reports]
        solved = {}
        if missing:
            solve = partial(spectral.enumerate_pairs, op, seed=self.config.seed)
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.threads) as executor:
                for n, report in zip(missing, executor.map(solve, missing)):
                    solved[n] = report
        if not cached:
            return [solved[n] for n in degrees]
        with self._lock:
            self._reports.update(solved)
            return [self._reports[n] for n in degrees]

    def target(self):
        """
        the Van Vleck polynomial followed across degrees: the configured
        target, else the middle pair (ordered by b) at the largest direct degree
        """
        if self._target is None:
            target = self.config.target_poly()
            if target is None:
                degrees = self.config.degrees() or [SELECT_DIRECT_MAX]
                n0 = max(min(max(degrees), SELECT_DIRECT_MAX), self.op.k)
                report = self.spectra([n0])[0]
                if not report.pairs:
                    raise SpectralError(f'empty spectrum at n={n0}', report=report)
                target = report.pairs[len(report.pairs) // 2].normalized_V
                logging.info(f'no target configured; following {target} from n={n0}')
            self._target = target
        return self._target

    def sequence(self, degrees):
        """one pair per degree, all on the same branch of the spectrum"""
        op = self.op
        if op.r > 1:
            raise UnsupportedEnumerationError(
                'enumeration unsupported for r ≥ 2; use newton_refine with external guesses'
            )
        degrees = sorted(set(degrees))
        todo = [n for n in degrees if n not in self._pairs]
        direct_max = EXACT_DIRECT_MAX if op.r == 0 else SELECT_DIRECT_MAX
        direct = [n for n in todo if n <= direct_max or op.k < 2]
        beyond = [n for n in todo if n not in direct]
        if beyond and not any(n <= direct_max for n in list(self._pairs) + direct):
            direct.append(max(direct_max, op.k))
        if direct:
            if op.r == 0:
                chosen = [report.pairs[0] for report in self.spectra(direct)]
            else:
                self.spectra(direct)
                chosen = spectral.select_sequence(
                    op, self.target(), direct, reports=self._reports, seed=self.config.seed
                )
            self._pairs.update({p.n: p for p in chosen})
        if beyond:
            base = self._pairs[max(n for n in self._pairs if n < min(beyond))]
            for pair in spectral.follow_sequence(op, base, max(beyond)):
                self._pairs.setdefault(pair.n, pair)
        return [self._pairs[n] for n in degrees]


def _as_run(value):
    return value if isinstance(value, Run) else Run(value)


def _pair_ok(pair):
    if pair.residual <= spectral.ACCEPT_RESIDUAL:
        return True
    return pair.basis == 'roots' and pair.root_residual <= spectral.ROOT_RESIDUAL


def write_spectrum(run, report):
    run.store.add_json(f'spectrum_n{report.n}.json', report.to_dict())
    run.store.add_csv(f'spectrum_n{report.n}.csv', report.to_frame())


def spectrum_checks(run, report, hard=True):
    n = report.n
    run.check(
        f'count_n{n}',
        report.found_count == report.expected_count,
        hard=hard,
        value=report.found_count,
        detail=f'{report.found_count} of {report.expected_count} pairs',
    )
    bad = [p for p in report.pairs if not _pair_ok(p)]
    worst = max((p.residual for p in report.pairs), default=0.0)
    run.check(
        f'residual_n{n}',
        not bad and report.pairs,
        hard=hard,
        value=worst,
        detail=f'{len(bad)} pairs above the acceptance residual',
    )
    wrong = [p for p in report.pairs if p.V.degree() != run.op.r]
    run.check(
        f'van_vleck_degree_n{n}',
        not wrong,
        hard=hard,
        value=len(wrong),
        detail=f'every V of degree r = {run.op.r}',
    )


def localization_checks(run, groups, hard=True):
    """
    hull distance of S and V zeros per degree, and its decrease in n

    parameters:
    -----------
    groups: list of (n, list of SpectralPair)
    """
    eps = run.config.eps
    distances = []
    for n, pairs in groups:
        report = measure.hull_check(pairs, run.op.leading, eps)
        distances.append(report.max_distance)
        run.check(
            f'hull_n{n}', report.passed, hard=hard, value=report.max_distance,
            detail=f'eps={eps:g}, {len(report.violators)} violators',
        )
    if len(distances) > 1:
        monotone = all(b <= a + LOCALIZATION_SLACK for a, b in zip(distances, distances[1:]))
        run.check(
            'hull_monotone', monotone, hard=hard, value=distances,
            detail=f'non-increasing within {LOCALIZATION_SLACK:g}',
        )
    return distances


# tasks


def task_solve(run):
    n = run.config.n
    with run.stage('solve'):
        report = run.spectra([n])[0]
    write_spectrum(run, report)
    spectrum_checks(run, report)
    return report


def task_sweep(run):
    degrees = run.config.n_list
    with run.stage('enumerate'):
        reports = run.spectra(degrees)
    rows = []
    for report in reports:
        write_spectrum(run, report)
        spectrum_checks(run, report)
        hull = measure.hull_check(report.pairs, run.op.leading, run.config.eps)
        rows.append(
            {
                'n': report.n,
                'expected': report.expected_count,
                'found': report.found_count,
                'max_residual': max((p.residual for p in report.pairs), default=np.nan),
                'hull_distance': hull.max_distance,
                'defects': len(report.defect_notes),
            }
        )
    run.store.add_csv('sweep.csv', pd.DataFrame(rows))
    localization_checks(run, [(r.n, r.pairs) for r in reports], hard=False)
    return reports


def _is_legendre(op):
    if op.k != 2 or not op.q[0].is_zero():
        return False
    c = op.q[2].leading
    return op.q[2].allclose(Poly([-c, 0, c])) and op.q[1].allclose(Poly([0, 2 * c]))


def legendre_node_checks(run, pairs):
    for pair in pairs:
        nodes = roots_legendre(pair.n)[0]
        distance = spectral.matching_distance(pair.stieltjes_roots(), nodes)
        run.check(
            f'gauss_legendre_nodes_n{pair.n}', distance <= NODE_TOL, value=distance,
            detail=f'zeros of S vs Gauss-Legendre nodes, tol {NODE_TOL:g}',
        )


def measure_checks(run, pairs, hard=True):
    op = run.op
    settings = run.config.probes
    probes = measure.default_probes(
        op.leading, settings.count, settings.radius, settings.margin, settings.standoff
    )
    rows = []
    for pair in pairs:
        mu = measure.from_pair(pair)
        report = measure.probe_compare(
            mu, pair.normalized_V, op.leading, op.k, probes, settings.standoff
        )
        run.store.add_csv(f'probes_n{pair.n}.csv', report.to_frame())
        row = {
            'n': pair.n,
            'max_error': report.max_error,
            'median_error': report.median_error,
            'max_modulus_deviation': report.max_modulus_deviation,
            'derivative_gap': np.nan,
            'potential_gap': np.nan,
        }
        if pair.n >= 2 and pair.n <= GAP_MAX_DEGREE:
            S = Poly.from_roots(pair.stieltjes_roots())
            try:
                row['derivative_gap'] = measure.derivative_transform_gap(S, probes)
                row['potential_gap'] = measure.potential_gap(S, probes)
            except LameSpectraError as e:
                run.note(f'n={pair.n}: derivative comparison skipped ({e})')
        rows.append(row)
    run.store.add_csv('measure_summary.csv', pd.DataFrame(rows))
    if not rows:
        return rows
    last = rows[-1]
    if op.r == 0:
        run.check(
            f'probe_error_n{last["n"]}',
            last['max_error'] <= settings.tol,
            hard=hard,
            value=last['max_error'],
            detail=f'max |C^k - Vt/Qt| over {len(probes)} probes, tol {settings.tol:g}',
        )
    medians = [row['median_error'] for row in rows]
    if len(medians) > 1:
        run.check(
            'probe_trend',
            all(b < a for a, b in zip(medians, medians[1:])),
            hard=hard and op.r >= 1,
            value=medians,
            detail='median probe error strictly decreasing in n',
        )
    run.check(
        'modulus_ratio',
        True,
        hard=False,
        value=[row['max_modulus_deviation'] for row in rows],
        detail='max | |C|^k |Qt| / |Vt| - 1 | per degree',
    )
    gaps = [row['potential_gap'] for row in rows if np.isfinite(row['potential_gap'])]
    if gaps:
        run.check(
            'potential_gap', max(gaps) <= 1e-12, hard=False, value=gaps,
            detail="max u_{p'} - u_p over the probes (<= 0 expected asymptotically)",
        )
    return rows


def task_measure(run):
    degrees = run.config.n_list or [run.config.n]
    with run.stage('sequence'):
        pairs = run.sequence(degrees)
    with run.stage('probes'):
        measure_checks(run, pairs)
    if _is_legendre(run.op):
        legendre_node_checks(run, pairs)
    localization_checks(run, [(p.n, [p]) for p in pairs], hard=False)
    return pairs


# forest


def build_forest(run, n):
    with run.stage('sequence'):
        pair = run.sequence([n])[0]
    with run.stage('forest'):
        branch = forest.AlgebraicBranch.from_pair(run.op, pair)
        f = forest.build_from_roots(
            pair.stieltjes_roots(), run.config.forest.params(), branch
        )
        forest.plemelj_density(f, branch)
    return pair, branch, f


def draw_forest(f, title):
    canvas = figures.Canvas(title=title)
    frames = [points_frame(f.points, layer='points', group=-1)]
    canvas.scatter(f.points, radius=1.2, color='#bbbbbb')
    for index, edge in enumerate(f.edges):
        support = edge.kind == 'support'
        canvas.polyline(
            edge.polyline,
            color=figures.PALETTE[0] if support else figures.PALETTE[1],
            width=1.5,
            dash=None if support else '4,3',
        )
        frames.append(points_frame(edge.polyline, layer=f'{edge.kind}_edge', group=index))
    for kind, color in VERTEX_COLORS.items():
        points = [v.position for v in f.vertices if v.kind == kind]
        if points:
            canvas.scatter(points, radius=3.5, color=color)
            frames.append(points_frame(points, layer=kind, group=-1))
    return canvas, pd.concat(frames, ignore_index=True)


def write_forest(run, f, name='forest'):
    run.store.add_json(f'{name}.json', f.to_dict())
    vertices = pd.DataFrame(
        [
            {'vertex': i, 'kind': v.kind, 'x': v.position.real, 'y': v.position.imag,
             'multiplicity': v.multiplicity, 'mass': v.mass}
            for i, v in enumerate(f.vertices)
        ],
        columns=['vertex', 'kind', 'x', 'y', 'multiplicity', 'mass'],
    )
    density = pd.DataFrame(
        [
            {'edge': i, 's': s, 'x': z.real, 'y': z.imag, 'density': rho}
            for i, e in enumerate(f.edges)
            for z, s, rho in e.density_samples
        ],
        columns=['edge', 's', 'x', 'y', 'density'],
    )
    run.store.add_csv(f'{name}_vertices.csv', vertices)
    run.store.add_csv(f'{name}_density.csv', density)
    canvas, frame = draw_forest(f, f'support forest, k={f.k}')
    run.store.add_text(f'{name}.svg', canvas.render())
    run.store.add_csv(f'{name}.csv', frame)


def forest_checks(run, pair, branch, f, hard=True):
    endpoints = forest.check_endpoints(f)
    run.check(
        'forest_endpoints', endpoints.passed, hard=hard,
        value=[leaf['kind'] for leaf in endpoints.leaves],
        detail='every leaf is a zero of Vt, a zero of Qt or an atom',
    )
    straight = forest.verify_straightening(f, branch)
    run.check(
        'forest_straightening', straight.passed, hard=hard, value=straight.max_deviation,
        detail=f'Psi deviation from a line, tol {straight.tol:g}',
    )
    census = forest.component_census(f)
    run.check(
        'forest_census', census.passed, hard=hard,
        value=[c.difference for c in census.components],
        detail=f'#Q roots - #V roots per component in {{0, {f.k}}}',
    )
    run.check(
        'forest_mass', abs(f.total_mass - 1.0) <= MASS_TOL, hard=False, value=f.total_mass,
        detail='edge masses plus atoms',
    )
    run.check(
        'forest_hausdorff', True, hard=False,
        value=forest.distance_to_forest(f, pair.stieltjes_roots()),
        detail='max distance from the zeros to the reconstructed support',
    )
    try:
        forest.extended_support(f, branch)
        tree = forest.verify_tree(f)
        run.check(
            'extended_support_tree', tree.passed, hard=hard, value=tree.to_dict(),
            detail='connected with E = N - 1',
        )
    except LameSpectraError as e:
        run.check('extended_support_tree', False, hard=hard, detail=str(e))
    non_terminating = [
        e for e in f.exceptional if not e.get('added') and e.get('reason') not in ('along-forest', 'other-sheet')
    ]
    if non_terminating:
        run.note(f'{len(non_terminating)} exceptional trajectories did not join the forest')
    return f


def legendre_density_checks(run, f):
    errors = []
    for edge in f.edges:
        for z, _, rho in edge.density_samples:
            if abs(z.real) <= DENSITY_WINDOW:
                exact = 1.0 / (np.pi * np.sqrt(1.0 - z.real**2))
                errors.append(abs(rho - exact))
    worst = max(errors, default=float('inf'))
    run.check(
        'arcsine_density', worst <= DENSITY_TOL, value=worst,
        detail=f'|rho - 1/(pi sqrt(1 - x^2))| for |x| <= {DENSITY_WINDOW}, tol {DENSITY_TOL:g}',
    )
    run.check(
        'arcsine_mass', abs(f.total_mass - 1.0) <= MASS_TOL, value=f.total_mass,
        detail=f'total mass 1 within {MASS_TOL:g}',
    )


def forest_degree(run):
    config = run.config
    if config.forest.n is not None:
        return config.forest.n
    if config.n is not None:
        return config.n
    degrees = config.degrees()
    return max(degrees) if degrees else FIGURE_N


def task_forest(run, hard=True):
    n = forest_degree(run)
    pair, branch, f = build_forest(run, n)
    forest_checks(run, pair, branch, f, hard=hard)
    if _is_legendre(run.op):
        legendre_density_checks(run, f)
    write_forest(run, f)
    return f


# figures


def figure_degree(run):
    n = run.config.n if run.config.n is not None else FIGURE_N
    return max(n, run.op.k)


def _emit(run, name, svg, frame):
    run.store.add_text(f'{name}.svg', svg)
    run.store.add_csv(f'{name}.csv', frame)
    return [f'{name}.svg', f'{name}.csv']


def _cloud(pairs, kind):
    chunks = [
        p.van_vleck_roots() if kind == 'V' else p.stieltjes_roots() for p in pairs
    ]
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=complex)


def exact_pair(run, op, n):
    """eigenpolynomial of an exactly solvable operator, continued past EXACT_DIRECT_MAX"""
    if n <= EXACT_DIRECT_MAX or op.k < 2:
        return spectral.solve_exact(op, n, seed=run.config.seed)
    base = spectral.solve_exact(op, max(EXACT_DIRECT_MAX, op.k), seed=run.config.seed)
    return spectral.follow_sequence(op, base, n)[-1]


def figure_union(run):
    """fig1: union of the normalized Van Vleck zeros at one degree"""
    op = run.op
    if op.r != 1:
        raise OperatorError(f'the Van Vleck union needs r = 1, got r = {op.r}')
    n = figure_degree(run)
    report = run.spectra([n])[0]
    zeros = _cloud(report.pairs, 'V')
    q_roots = poly_roots(op.leading)
    canvas = figures.Canvas(title=f'zeros of {report.found_count} Van Vleck polynomials, n={n}')
    canvas.scatter(zeros, radius=2.0, color=figures.PALETTE[0])
    canvas.scatter(q_roots, radius=3.5, color='#000000')
    frame = pd.concat(
        [points_frame(zeros, layer='V_zero'), points_frame(q_roots, layer='Q_zero')],
        ignore_index=True,
    )
    return _emit(run, 'fig1', canvas.render(), frame)


def figure_pairs(run):
    """fig2: one panel per pair with its Stieltjes zeros, Q zeros and V zero"""
    op = run.op
    n = figure_degree(run)
    report = run.spectra([n])[0]
    q_roots = poly_roots(op.leading)
    canvases, frames = [], []
    for index, pair in enumerate(report.pairs):
        canvas = figures.Canvas(width=200, height=200, margin=10, title=f'b={pair.b:.3g}')
        s_roots = pair.stieltjes_roots()
        v_roots = pair.van_vleck_roots()
        canvas.scatter(s_roots, radius=1.2, color=figures.PALETTE[0])
        canvas.scatter(q_roots, radius=2.5, color='#000000')
        canvas.scatter(v_roots, radius=4.5, color=figures.PALETTE[1])
        canvases.append(canvas)
        frames.extend(
            [
                points_frame(s_roots, layer='S_zero', group=index),
                points_frame(q_roots, layer='Q_zero', group=index),
                points_frame(v_roots, layer='V_zero', group=index),
            ]
        )
    frame = pd.concat(frames, ignore_index=True) if frames else points_frame([], layer='S_zero')
    return _emit(run, 'fig2', figures.grid(canvases, columns=8), frame)


def _pure_operator(Q, order):
    """Q d^order/dz^order"""
    return LameOperator([Poly()] * order + [Q])


def figure_pure_derivative(run):
    """
    fig4: zeros of the eigenpolynomial of Q d^m/dz^m (m = deg Q, degree
    n + 1) next to the Van Vleck cloud at degree n
    """
    op = run.op
    if op.r != 1:
        raise OperatorError(f'the Van Vleck cloud needs r = 1, got r = {op.r}')
    Q = op.leading
    n = figure_degree(run)
    exact = _pure_operator(Q, Q.degree())
    eigen_roots = exact_pair(run, exact, n + 1).stieltjes_roots()
    cloud = _cloud(run.spectra([n])[0].pairs, 'V')
    left = figures.Canvas(title=f'eigenpolynomial, Q d^{Q.degree()}, degree {n + 1}')
    left.scatter(eigen_roots, radius=2.0, color=figures.PALETTE[0])
    right = figures.Canvas(title=f'Van Vleck zeros, n={n}')
    right.scatter(cloud, radius=2.0, color=figures.PALETTE[1])
    frame = pd.concat(
        [points_frame(eigen_roots, layer='eigenpolynomial'), points_frame(cloud, layer='van_vleck')],
        ignore_index=True,
    )
    return _emit(run, 'fig4', figures.side_by_side(left, right), frame)


def _order_side(run, op, n, kind):
    if op.r == 0 and kind == 'S':
        return exact_pair(run, op, n).stieltjes_roots()
    if op.r == 1 and n >= op.k:
        return _cloud(run.spectra([n], op=op)[0].pairs, kind)
    return None


def figure_order_shift(run):
    """
    fig5: Stieltjes zeros of Q d^l next to Van Vleck zeros of Q d^(l-1);
    a side is drawn only when its operator can be enumerated
    """
    Q = run.op.leading
    order = run.config.figure.shift_order or max(run.op.k, 2)
    n = figure_degree(run)
    sides = []
    for op_order, kind, label in ((order, 'S', 'stieltjes'), (order - 1, 'V', 'van_vleck')):
        op = _pure_operator(Q, op_order)
        points = None
        if op.r >= 0:
            try:
                points = _order_side(run, op, n, kind)
            except LameSpectraError as e:
                run.note(f'fig5 {label} side: {e}')
        canvas = figures.Canvas(title=f'{label} zeros, Q d^{op_order}, r={op.r}')
        if points is None or points.size == 0:
            run.note(f'fig5 {label} side unavailable (r = {op.r})')
            points = np.zeros(0, dtype=complex)
        canvas.scatter(points, radius=1.5, color=figures.PALETTE[0 if kind == 'S' else 1])
        sides.append((canvas, points_frame(points, layer=label, group=op_order)))
    frame = pd.concat([s[1] for s in sides], ignore_index=True)
    return _emit(run, 'fig5', figures.side_by_side(sides[0][0], sides[1][0]), frame)


def _densify(points, minimum):
    """add midpoints of minimum spanning tree edges until there are enough points"""
    points = np.asarray(points, dtype=complex)
    while 1 < points.size < minimum:
        xy = np.column_stack([points.real, points.imag])
        tree = minimum_spanning_tree(squareform(pdist(xy))).tocoo()
        mids = 0.5 * (points[tree.row] + points[tree.col])
        if mids.size == 0:
            break
        points = np.concatenate([points, mids])
    return points


def figure_interlacing(run):
    """
    fig6: zeros of S_n and S_(n+1) on the support forest, with per-edge
    alternation away from junctions; report only
    """
    run = _as_run(run)
    op = run.op
    n = max(run.config.figure.interlacing_n, op.k)
    with run.stage('interlacing'):
        pair_a, pair_b = run.sequence([n, n + 1])
        zeros_a = pair_a.stieltjes_roots()
        zeros_b = pair_b.stieltjes_roots()
        points = _densify(np.concatenate([zeros_a, zeros_b]), forest.MIN_POINTS)
        branch = forest.AlgebraicBranch.from_pair(op, pair_b)
        try:
            f = forest.build_from_roots(points, run.config.forest.params(), branch)
        except ForestError as e:
            raise ForestError(f'forest unavailable for the interlacing figure: {e}') from e
        report = forest.interlacing(f, zeros_a, zeros_b, run.config.forest.junction_radius)
    run.store.add_json('interlacing.json', {'n': n, **report.to_dict()})
    canvas, frame = draw_forest(f, f'interlacing of S_{n} and S_{n + 1}')
    canvas.scatter(zeros_a, radius=2.5, color=figures.PALETTE[0])
    canvas.scatter(zeros_b, radius=2.5, color=figures.PALETTE[1])
    frame = pd.concat(
        [frame, points_frame(zeros_a, layer=f'S_{n}', group=-1),
         points_frame(zeros_b, layer=f'S_{n + 1}', group=-1)],
        ignore_index=True,
    )
    files = _emit(run, 'fig6', canvas.render(), frame)
    run.check(
        'interlacing', report.alternation == 100.0, hard=False, value=report.alternation,
        detail=f'alternation percentage, junction radius {report.junction_radius:g}',
    )
    return files + ['interlacing.json']


def cloud_distances(clouds, bins):
    """L1 distances between successive normalized 2D histograms on a common grid"""
    allpoints = np.concatenate([c for c in clouds if c.size]) if clouds else np.zeros(0)
    if allpoints.size == 0:
        return []
    ranges = []
    for values in (allpoints.real, allpoints.imag):
        lo, hi = float(values.min()), float(values.max())
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        ranges.append([lo - pad, hi + pad])
    histograms = []
    for cloud in clouds:
        H, _, _ = np.histogram2d(cloud.real, cloud.imag, bins=bins, range=ranges)
        histograms.append(H / max(H.sum(), 1.0))
    return [float(np.abs(a - b).sum()) for a, b in zip(histograms, histograms[1:])]


def figure_vanvleck_cloud(run):
    """
    normalized Van Vleck zeros for every configured degree, overlaid, with
    the histogram L1 distance between successive degrees; report only
    """
    run = _as_run(run)
    op = run.op
    if op.r != 1:
        raise OperatorError(f'the Van Vleck cloud needs r = 1, got r = {op.r}')
    configured = run.config.degrees() or [figure_degree(run)]
    degrees = [n for n in configured if op.k <= n <= SELECT_DIRECT_MAX]
    if len(degrees) < len(configured):
        run.note(f'Van Vleck cloud limited to degrees {op.k}..{SELECT_DIRECT_MAX}')
    if not degrees:
        raise OperatorError('no degree in range for the Van Vleck cloud')
    with run.stage('vanvleck_cloud'):
        reports = run.spectra(degrees)
    clouds = [_cloud(r.pairs, 'V') for r in reports]
    distances = cloud_distances(clouds, run.config.figure.histogram_bins)
    canvas = figures.Canvas(title='normalized Van Vleck zeros')
    frames = []
    for index, (n, cloud) in enumerate(zip(degrees, clouds)):
        canvas.scatter(cloud, radius=1.8, color=figures.PALETTE[index % len(figures.PALETTE)], opacity=0.7)
        frames.append(points_frame(cloud, layer='van_vleck', group=n))
    frame = pd.concat(frames, ignore_index=True)
    run.store.add_json('vanvleck_cloud.json', {'degrees': degrees, 'l1': distances})
    files = _emit(run, 'vanvleck_cloud', canvas.render(), frame)
    run.check(
        'vanvleck_cloud_l1', True, hard=False, value=distances,
        detail='histogram L1 between successive degrees',
    )
    return files + ['vanvleck_cloud.json']


def figure_forest(run):
    n = forest_degree(run)
    _, _, f = build_forest(run, n)
    write_forest(run, f)
    return ['forest.svg', 'forest.csv']


FIGURE_FUNCTIONS = {
    'fig1': figure_union,
    'fig2': figure_pairs,
    'fig4': figure_pure_derivative,
    'fig5': figure_order_shift,
    'fig6': figure_interlacing,
    'forest': figure_forest,
}


def task_figures(run):
    files = []
    for name in run.config.figure.figures:
        with run.stage(name):
            try:
                files.extend(FIGURE_FUNCTIONS[name](run))
            except (OperatorError, UnsupportedEnumerationError, ForestError) as e:
                run.note(f'{name} skipped: {e}')
    return files


# verify-all


def _random_monic(rng, low=3, high=KERNEL_MAX_DEGREE):
    degree = int(rng.integers(low, high + 1))
    return np.concatenate([rng.normal(size=degree) + 1j * rng.normal(size=degree), [1.0]])


def kernel_checks(run):
    """companion eigenvalues against Aberth roots, trace and determinant identities, Gauss-Lucas"""
    rng = np.random.default_rng(run.config.seed)
    worst_roots, worst_trace, worst_det = 0.0, 0.0, 0.0
    for _ in range(KERNEL_TRIALS):
        coeffs = _random_monic(rng)
        degree = coeffs.size - 1
        C = linalg.companion(coeffs)
        eig = linalg.eigenvalues(C)
        zeros = poly_roots(Poly(coeffs), seed=run.config.seed)
        worst_roots = max(worst_roots, spectral.matching_distance(eig, zeros))
        trace_gap = abs(np.sum(eig) - np.trace(C)) / (degree * max(linalg.norm_inf(C), 1.0))
        worst_trace = max(worst_trace, trace_gap)
        det = linalg.determinant(C)
        det_gap = abs(np.prod(eig) - det) / max(abs(det), np.finfo(float).tiny)
        worst_det = max(worst_det, det_gap)
    run.check('kernel_companion_roots', worst_roots <= 1e-8, value=worst_roots,
              detail=f'{KERNEL_TRIALS} random monic polynomials of degree <= {KERNEL_MAX_DEGREE}')
    run.check('kernel_trace', worst_trace <= 1e-8, value=worst_trace,
              detail='sum of eigenvalues vs trace')
    run.check('kernel_determinant', worst_det <= 1e-8, value=worst_det,
              detail='product of eigenvalues vs determinant from LU')

    worst_lucas = 0.0
    for _ in range(GAUSS_LUCAS_TRIALS):
        p = Poly(_random_monic(rng))
        hull = convex_hull(poly_roots(p, seed=run.config.seed))
        critical = poly_roots(p.derivative(), seed=run.config.seed)
        worst_lucas = max(worst_lucas, float(np.max(dist_to_hull(critical, hull))))
    run.check('kernel_gauss_lucas', worst_lucas <= 1e-8, value=worst_lucas,
              detail=f'critical points inside the hull of the zeros, {GAUSS_LUCAS_TRIALS} polynomials')


def _closed_form_error(pair, S, V):
    s_gap = np.max(np.abs((pair.S - S).coeffs), initial=0.0) / S.max_coeff()
    v_gap = np.max(np.abs((pair.V - V).coeffs), initial=0.0) / max(V.max_coeff(), 1.0)
    return float(max(s_gap, v_gap))


def closed_form_checks(run):
    """k = 1 with Q_1 = z(z - 1) for n = 1..25, and the k = 2 Lamé case z^3 - z at n = 2"""
    op1 = LameOperator([Poly(), Poly([0.0, -1.0, 1.0])])
    degrees = list(range(1, CLOSED_FORM_MAX_N + 1))
    worst, counts_ok = 0.0, True
    for report in run.spectra(degrees, op=op1):
        n = report.n
        counts_ok &= report.found_count == n + 1
        for m in range(n + 1):
            if not report.pairs:
                break
            pair = min(report.pairs, key=lambda p: abs(p.b - m))
            S = Poly.from_roots([0.0] * m + [1.0] * (n - m))
            worst = max(worst, _closed_form_error(pair, S, Poly([m, -n])))
    run.check('closed_form_k1', counts_ok and worst <= CLOSED_FORM_TOL, value=worst,
              detail=f'n+1 pairs, V = -nz + m, S = z^m (z-1)^(n-m), n <= {CLOSED_FORM_MAX_N}')

    op2 = LameOperator([Poly(), Poly(), Poly([0.0, -1.0, 0.0, 1.0])])
    report = run.spectra([2], op=op2)[0]
    expected = {
        0: (Poly([-1.0, 0.0, 1.0]), Poly([0.0, -2.0])),
        2: (Poly([0.0, 1.0, 1.0]), Poly([2.0, -2.0])),
        -2: (Poly([0.0, -1.0, 1.0]), Poly([-2.0, -2.0])),
    }
    worst = 0.0
    for b, (S, V) in expected.items():
        if not report.pairs:
            worst = float('inf')
            break
        pair = min(report.pairs, key=lambda p: abs(p.b - b))
        worst = max(worst, _closed_form_error(pair, S, V))
    run.check('closed_form_k2_lame', report.found_count == 3 and worst <= CLOSED_FORM_TOL,
              value=worst, detail='b in {0, 2, -2} for (z^3 - z) S\'\' + V S = 0 at n = 2')


def _report_only(run, name, function):
    with run.stage(name):
        try:
            return function(run)
        except LameSpectraError as e:
            run.check(name, False, hard=False, detail=str(e))
            return []


def task_verify_all(run):
    with run.stage('kernel'):
        kernel_checks(run)
    with run.stage('closed_forms'):
        closed_form_checks(run)
    op = run.op
    record = validate(op)
    run.check('classification', not record.errors, value=record.to_dict(),
              detail='; '.join(record.errors) or f'r = {record.r}')
    if record.errors:
        return
    if op.r > 1:
        run.note('enumeration unsupported for r ≥ 2; operator-specific checks skipped')
        return
    degrees = run.config.degrees() or [max(n, op.k) for n in DEFAULT_DEGREES]
    with run.stage('spectra'):
        if op.r == 1:
            direct = [n for n in degrees if n <= SELECT_DIRECT_MAX]
            reports = run.spectra(direct)
            for report in reports:
                spectrum_checks(run, report)
            groups = [(r.n, r.pairs) for r in reports]
        pairs = run.sequence(degrees)
        if op.r == 0:
            groups = [(p.n, [p]) for p in pairs]
    localization_checks(run, groups)
    with run.stage('probes'):
        measure_checks(run, pairs)
    if _is_legendre(op):
        legendre_node_checks(run, pairs)
    n = forest_degree(run)
    try:
        task_forest(run)
    except ForestError as e:
        run.note(f'forest suite skipped at n={n}: {e}')
    _report_only(run, 'interlacing', figure_interlacing)
    if op.r == 1:
        _report_only(run, 'vanvleck_cloud', figure_vanvleck_cloud)
        _report_only(run, 'pure_derivative_cloud', figure_pure_derivative)
        _report_only(run, 'order_shift_clouds', figure_order_shift)


TASK_FUNCTIONS = {
    'solve': task_solve,
    'spectrum-sweep': task_sweep,
    'measure-check': task_measure,
    'forest': task_forest,
    'figures': task_figures,
    'verify-all': task_verify_all,
}


def run(config, threads=None, store=None):
    """
    execute the configured task and write manifest.json; errors are
    recorded in the manifest, whose exit_code gives the process status
    """
    threads = threads or resolve_threads(config)
    current = Run(config, threads=threads, store=store)
    start = time.perf_counter()
    logging.info(f'task {config.task}: {current.op!r}, seed {config.seed}, {threads} threads')
    try:
        current.store.add_text('config.resolved.toml', resolved_toml(config))
        TASK_FUNCTIONS[config.task](current)
    except (LameSpectraError, OSError) as e:
        current.manifest.error = f'{type(e).__name__}: {e}'
        logging.error(f'task {config.task} failed: {current.manifest.error}')
    current.manifest.wall_time = time.perf_counter() - start
    missing = current.store.missing_or_empty()
    if missing:
        current.check('outputs', False, detail=f'missing or empty: {", ".join(missing)}')
    current.manifest.files = current.store.list_files()
    try:
        current.store.add_json('manifest.json', current.manifest.to_dict())
    except OSError as e:
        logging.error(f'cannot write the manifest: {e}')
        current.manifest.error = current.manifest.error or f'OSError: {e}'
    failures = current.manifest.hard_failures
    if failures:
        logging.warning(f'{len(failures)} hard checks failed: {", ".join(c.name for c in failures)}')
    logging.info(f'task {config.task} finished with exit code {current.manifest.exit_code}')
    return current.manifest


def main(argv=None):
    args = parse_args(argv)
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
    logging.info('Running lame-spectra')
    try:
        config = load_config(args.config, task=args.task, output_dir=args.out, seed=args.seed)
        threads = resolve_threads(config)
    except (ConfigError, FileNotFoundError) as e:
        logging.error(str(e))
        return 1
    return run(config, threads=threads).exit_code


if __name__ == '__main__':
    sys.exit(main())
