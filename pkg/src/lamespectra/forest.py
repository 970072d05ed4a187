"""
geometry of the limit measure: the branch of (Vt/Qt)^(1/k) fixed by
w ~ 1/z at infinity, the canonical coordinate Psi, trajectories of
constant argument, and the support forest rebuilt from root clouds
"""

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform
from scipy.special import roots_legendre

from .errors import BranchError, ForestError, QuadratureError, TrajectoryError
from .poly import as_poly, cluster_points, roots as poly_roots, segment_distance

BRANCH_ATOL = 1e-6
COPRIME_ATOL = 1e-8
STEP_FRACTION = 0.25
PSI_RTOL = 1e-9
PSI_ORDER = 10
PSI_MAX_DEPTH = 30
MASS_ORDER = 32
MIN_POINTS = 20
LEAF_KINDS = ('V_zero', 'Q_zero', 'atom')

_GL_NODES, _GL_WEIGHTS = roots_legendre(PSI_ORDER)
_MASS_NODES, _MASS_WEIGHTS = roots_legendre(MASS_ORDER)


@dataclass
class ForestParams:
    break_factor: float = 3.0
    simplify: float = 0.01
    snap: float = 0.05
    tol: float = 0.05
    offset: float = 1e-3
    root_disk: float = 1e-4
    density_samples: int = 48
    junction_radius: float = 0.1


class AlgebraicBranch:
    """
    the k-th root w of Vt/Qt continued from an anchor far out, where the
    branch is fixed by w ~ 1/z

    parameters:
    -----------
    Vt, Qt: polynomials, normalized to monic here
    k: root order
    """

    def __init__(self, Vt, Qt, k):
        self.Vt = as_poly(Vt).monic()
        self.Qt = as_poly(Qt).monic()
        self.k = int(k)
        if self.k < 1:
            raise BranchError(f'root order must be >= 1, got {k}')
        self.v_roots = (
            poly_roots(self.Vt) if self.Vt.degree() >= 1 else np.zeros(0, dtype=complex)
        )
        self.q_roots = poly_roots(self.Qt)
        if self.v_roots.size and self.q_roots.size:
            gap = np.min(np.abs(self.v_roots[:, None] - self.q_roots[None, :]))
            if gap < COPRIME_ATOL:
                raise BranchError(
                    f'Vt and Qt share a root to working precision (gap {gap:.2e})'
                )
        if self.Qt.degree() - self.Vt.degree() != self.k:
            logging.warning(
                f'deg Qt - deg Vt = {self.Qt.degree() - self.Vt.degree()} != k = {self.k}; '
                'w is not ~ 1/z at infinity'
            )
        self.singular = np.concatenate([self.v_roots, self.q_roots])
        reach = float(np.max(np.abs(self.singular)))
        self.anchor = complex(2.0 * reach + 2.0)
        self.anchor_value = self.nearest_candidate(self.anchor, 1.0 / self.anchor)

    @classmethod
    def from_pair(cls, op, pair):
        return cls(pair.normalized_V, op.leading, op.k)

    @property
    def v_clusters(self):
        return cluster_points(self.v_roots) if self.v_roots.size else []

    @property
    def q_clusters(self):
        return cluster_points(self.q_roots)

    def ratio(self, z):
        return self.Vt.eval(z) / self.Qt.eval(z)

    def candidates(self, z):
        """all k values of w at z"""
        base = complex(self.ratio(z)) ** (1.0 / self.k)
        return base * np.exp(2j * np.pi * np.arange(self.k) / self.k)

    def nearest_candidate(self, z, guess):
        values = self.candidates(z)
        return complex(values[np.argmin(np.abs(values - guess))])

    def log_derivative(self, z):
        """w'/w"""
        total = np.sum(1.0 / (z - self.v_roots)) - np.sum(1.0 / (z - self.q_roots))
        return total / self.k

    def singular_distance(self, z):
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        d = np.min(np.abs(zz[:, None] - self.singular[None, :]), axis=1)
        if np.ndim(z) == 0:
            return float(d[0])
        return d

    def box(self, margin=3.0):
        pts = self.singular
        return (
            float(pts.real.min() - margin),
            float(pts.real.max() + margin),
            float(pts.imag.min() - margin),
            float(pts.imag.max() + margin),
        )

    def advance(self, z, w, target):
        """continue w from z to target along the straight segment"""
        z = complex(z)
        w = complex(w)
        target = complex(target)
        while z != target:
            d = self.singular_distance(z)
            if d < BRANCH_ATOL:
                raise BranchError(
                    f'path passes within {d:.2e} of a branch point', segment=(z, target)
                )
            remaining = target - z
            h = min(abs(remaining), STEP_FRACTION * d)
            z_new = target if h == abs(remaining) else z + remaining / abs(remaining) * h
            guess = w * np.exp(self.log_derivative(z) * (z_new - z))
            w = self.nearest_candidate(z_new, guess)
            z = z_new
        if self.singular_distance(target) < BRANCH_ATOL:
            raise BranchError(
                f'path ends within {BRANCH_ATOL:g} of a branch point', segment=(z, target)
            )
        return w

    def track(self, points, w0):
        """w at every vertex of a polyline, continued from w0 at the first"""
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        values = np.empty(points.size, dtype=complex)
        w = complex(w0)
        values[0] = w
        for i in range(1, points.size):
            w = self.advance(points[i - 1], w, points[i])
            values[i] = w
        return values

    def _clearance(self, a, b):
        return float(np.min(segment_distance(self.singular, a, b)))

    def default_path(self, z):
        """
        from the anchor along the anchor circle, then straight to z from
        the nearest approach angle with clear passage
        """
        z = complex(z)
        radius = abs(self.anchor)
        base = np.angle(z) if z != 0 else 0.0
        angle = base
        need = 0.5 * min(self.singular_distance(z), 1.0)
        for step in range(0 if abs(z) >= radius else 33):
            # 0, +1, -1, +2, -2, ... sixteenths of pi around the direct angle
            offset = ((step + 1) // 2) * (1 if step % 2 else -1) * np.pi / 16
            angle = base + offset
            if self._clearance(radius * np.exp(1j * angle), z) >= need:
                break
        count = max(2, int(np.ceil(abs(angle) / (np.pi / 32))) + 1)
        arc = radius * np.exp(1j * np.linspace(0.0, angle, count))
        return np.concatenate([arc, [z]])


def branch_eval(b, path):
    """
    w at the end of path; a scalar is reached by the default path, a
    polyline not starting at the anchor is reached through it
    """
    if np.ndim(path) == 0:
        path = b.default_path(path)
    path = np.asarray(path, dtype=complex)
    if path[0] != b.anchor:
        path = np.concatenate([b.default_path(path[0]), path[1:]])
    return complex(b.track(path, b.anchor_value)[-1])


def loop_monodromy(b, center, radius, count=256):
    """factor acquired by w on one counterclockwise turn around center"""
    loop = center + radius * np.exp(2j * np.pi * np.arange(count + 1) / count)
    w0 = branch_eval(b, loop[0])
    values = b.track(loop, w0)
    return complex(values[-1] / values[0])


def physical_branch(points, b, z):
    """
    the value of w at z selected by the empirical Cauchy transform of the
    source points
    """
    points = np.asarray(points, dtype=complex)
    guess = np.mean(1.0 / (z - points))
    return b.nearest_candidate(z, guess)


def _gauss(b, a, c, wa):
    nodes = a + 0.5 * (c - a) * (_GL_NODES + 1.0)
    values = b.track(np.concatenate([[a], nodes, [c]]), wa)
    estimate = 0.5 * (c - a) * np.sum(_GL_WEIGHTS * values[1:-1])
    return estimate, values[-1]


def _segment_integral(b, a, c, wa, tol, depth=0):
    whole, wc = _gauss(b, a, c, wa)
    mid = 0.5 * (a + c)
    left, wm = _gauss(b, a, mid, wa)
    right, wc = _gauss(b, mid, c, wm)
    if abs(left + right - whole) <= max(tol, 1e-15 * abs(whole)):
        return left + right, wc
    if depth >= PSI_MAX_DEPTH:
        raise QuadratureError(
            f'quadrature did not converge on segment {a:.6g} -> {c:.6g} '
            f'(difference {abs(left + right - whole):.2e})'
        )
    left, wm = _segment_integral(b, a, mid, wa, 0.5 * tol, depth + 1)
    right, wc = _segment_integral(b, mid, c, wm, 0.5 * tol, depth + 1)
    return left + right, wc


def psi_along(b, path, w0):
    """cumulative Psi at every vertex of path, from w0 at the first vertex"""
    path = np.atleast_1d(np.asarray(path, dtype=complex))
    out = np.zeros(path.size, dtype=complex)
    w = complex(w0)
    for i in range(1, path.size):
        a, c = path[i - 1], path[i]
        if a == c:
            out[i] = out[i - 1]
            continue
        value, w = _segment_integral(b, a, c, w, PSI_RTOL * abs(c - a))
        out[i] = out[i - 1] + value
    return out


def psi(b, path, w0=None):
    """
    integral of w dz along a polyline; the branch at the first vertex is
    w0, or the one reached from the anchor
    """
    path = np.atleast_1d(np.asarray(path, dtype=complex))
    if path.size < 2:
        return 0j
    if w0 is None:
        w0 = branch_eval(b, path[0])
    return complex(psi_along(b, path, w0)[-1])


def horizontality_directions(b, alpha, p=None, theta=0.0):
    """
    the k + p unit directions leaving alpha along which w dz has argument
    theta, where w^k ~ c (z - alpha)^p; p < 0 for a pole of order -p
    """
    alpha = complex(alpha)
    if p is None:
        p = int(np.sum(np.abs(b.v_roots - alpha) <= 1e-4)) - int(
            np.sum(np.abs(b.q_roots - alpha) <= 1e-4)
        )
    v_others = b.v_roots[np.abs(b.v_roots - alpha) > 1e-4]
    q_others = b.q_roots[np.abs(b.q_roots - alpha) > 1e-4]
    c = np.prod(alpha - v_others) / np.prod(alpha - q_others)
    count = b.k + p
    if count <= 0:
        raise ValueError(f'no directions at a pole of order {-p} >= k = {b.k}')
    phi = (b.k * theta + 2.0 * np.pi * np.arange(count) - np.angle(c)) / count
    phi = np.mod(phi, 2.0 * np.pi)
    return np.exp(1j * np.sort(phi))


@dataclass
class Trajectory:
    points: np.ndarray
    values: np.ndarray
    theta: float
    length: float
    reason: str
    end_root: complex = None
    hit_index: int = None

    def to_dict(self):
        return {
            'polyline': [[float(z.real), float(z.imag)] for z in self.points],
            'theta': self.theta,
            'length': self.length,
            'reason': self.reason,
            'end_root': None
            if self.end_root is None
            else [self.end_root.real, self.end_root.imag],
        }


def trace_trajectory(
    b,
    start,
    direction,
    theta=None,
    w0=None,
    root_disk=1e-4,
    box=None,
    max_length=None,
    stop_points=None,
    stop_radius=0.0,
    arm=0.0,
):
    """
    follow the curve on which w dz keeps the argument theta it has at the
    seed (theta = arg(w(start) direction) unless given), parametrized by
    arc length

    stops on: a root disk, leaving the box, max_length, a point of
    stop_points within stop_radius once past arm, or recurrence
    """
    start = complex(start)
    direction = complex(direction) / abs(direction)
    if b.singular_distance(start) < BRANCH_ATOL:
        raise TrajectoryError(f'start {start:.6g} is on a branch point')
    if w0 is None:
        w0 = branch_eval(b, start)
    if theta is None:
        theta = float(np.angle(w0 * direction))
    turn = np.exp(1j * theta)
    if box is None:
        box = b.box()
    diag = float(np.hypot(box[1] - box[0], box[3] - box[2]))
    if max_length is None:
        max_length = 10.0 * diag
    if stop_points is not None:
        stop_points = np.asarray(stop_points, dtype=complex)

    z, w = start, complex(w0)
    points, values, arcs = [z], [w], [0.0]
    length = 0.0
    reason = None
    end_root = None
    hit_index = None
    while reason is None:
        d = b.singular_distance(z)
        if d < root_disk:
            reason = 'root'
            end_root = complex(b.singular[np.argmin(np.abs(b.singular - z))])
            break
        h = min(STEP_FRACTION * d, max_length - length, 0.05 * diag)
        if h < 1e-13:
            raise TrajectoryError(
                f'step collapse at {z:.6g} after length {length:.3g}',
                trace=np.array(points),
            )
        z_ref, w_ref = z, w

        def rhs(s, y, z_ref=z_ref, w_ref=w_ref):
            x = complex(y[0], y[1])
            guess = w_ref * np.exp(b.log_derivative(z_ref) * (x - z_ref))
            wx = b.nearest_candidate(x, guess)
            v = turn * np.conj(wx) / abs(wx)
            return [v.real, v.imag]

        sol = solve_ivp(
            rhs,
            (0.0, h),
            [z.real, z.imag],
            method='DOP853',
            t_eval=np.linspace(0.0, h, 5)[1:],
            rtol=1e-10,
            atol=1e-12,
        )
        if not sol.success:
            raise TrajectoryError(
                f'integrator failed at {z:.6g}: {sol.message}', trace=np.array(points)
            )
        chunk = sol.y[0] + 1j * sol.y[1]
        chunk_w = b.track(np.concatenate([[z], chunk]), w)[1:]
        for s, x, wx in zip(sol.t, chunk, chunk_w):
            points.append(complex(x))
            values.append(complex(wx))
            arcs.append(length + float(s))
        z, w = points[-1], values[-1]
        length += h

        if not (box[0] <= z.real <= box[1] and box[2] <= z.imag <= box[3]):
            reason = 'box'
        elif length >= max_length:
            reason = 'max_length'
        elif stop_points is not None and length > arm:
            gaps = np.abs(stop_points - z)
            nearest = int(np.argmin(gaps))
            if gaps[nearest] <= stop_radius:
                reason = 'hit'
                hit_index = nearest
        if reason is None and length > 0.2 * diag:
            earlier = np.asarray(arcs) < length - 0.1 * diag
            if earlier.any():
                past = np.asarray(points)[earlier]
                if np.min(np.abs(past - z)) < 1e-3 * diag:
                    reason = 'recurrence'
    logging.debug(f'trajectory from {start:.4g}: {reason} after length {length:.4g}')
    return Trajectory(
        points=np.array(points),
        values=np.array(values),
        theta=theta,
        length=length,
        reason=reason,
        end_root=end_root,
        hit_index=hit_index,
    )


# polylines


def arc_lengths(polyline):
    polyline = np.asarray(polyline, dtype=complex)
    return np.concatenate([[0.0], np.cumsum(np.abs(np.diff(polyline)))])


def point_at(polyline, s, cum=None):
    """position and unit tangent at arc length s"""
    polyline = np.asarray(polyline, dtype=complex)
    if cum is None:
        cum = arc_lengths(polyline)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    idx = np.clip(np.searchsorted(cum, s, side='right') - 1, 0, polyline.size - 2)
    seg = polyline[idx + 1] - polyline[idx]
    seg_len = np.where(np.abs(seg) > 0, np.abs(seg), 1.0)
    t = (s - cum[idx]) / seg_len
    return polyline[idx] + t * seg, seg / seg_len


def resample(polyline, count):
    cum = arc_lengths(polyline)
    return point_at(polyline, np.linspace(0.0, cum[-1], count), cum)[0]


def project(polyline, z):
    """(distance, arc length) of the nearest point of polyline to z"""
    polyline = np.asarray(polyline, dtype=complex)
    cum = arc_lengths(polyline)
    best = (np.inf, 0.0)
    for i in range(polyline.size - 1):
        a, c = polyline[i], polyline[i + 1]
        d = c - a
        length2 = abs(d) ** 2
        t = 0.0 if length2 == 0 else min(max(np.real(np.conj(d) * (z - a)) / length2, 0.0), 1.0)
        dist = abs(z - (a + t * d))
        if dist < best[0]:
            best = (dist, cum[i] + t * abs(d))
    return best


def simplify_polyline(polyline, tol):
    """Douglas-Peucker"""
    polyline = np.asarray(polyline, dtype=complex)
    if polyline.size <= 2:
        return polyline.copy()
    keep = np.zeros(polyline.size, dtype=bool)
    keep[[0, -1]] = True
    stack = [(0, polyline.size - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        dist = segment_distance(polyline[i + 1:j], polyline[i], polyline[j])
        m = int(np.argmax(dist))
        if dist[m] > tol:
            keep[i + 1 + m] = True
            stack.extend([(i, i + 1 + m), (i + 1 + m, j)])
    return polyline[keep]


# the forest


@dataclass
class Vertex:
    position: complex
    kind: str
    multiplicity: int = 0
    mass: float = 0.0

    def to_dict(self):
        return {
            'x': float(self.position.real),
            'y': float(self.position.imag),
            'kind': self.kind,
            'multiplicity': self.multiplicity,
            'mass': self.mass,
        }


@dataclass
class Edge:
    polyline: np.ndarray
    start: int
    end: int
    kind: str = 'support'
    mass: float = 0.0
    jump: int = 0
    density_samples: list = field(default_factory=list)

    @property
    def length(self):
        return float(arc_lengths(self.polyline)[-1])

    def to_dict(self):
        return {
            'start': self.start,
            'end': self.end,
            'kind': self.kind,
            'polyline': [[float(z.real), float(z.imag)] for z in self.polyline],
            'mass': self.mass,
            'jump': self.jump,
            'density_samples': [
                {'x': float(z.real), 'y': float(z.imag), 's': s, 'density': rho}
                for z, s, rho in self.density_samples
            ],
        }


@dataclass
class SupportForest:
    vertices: list
    edges: list
    points: np.ndarray
    params: ForestParams
    v_clusters: list = field(default_factory=list)
    q_clusters: list = field(default_factory=list)
    k: int = 0
    notes: list = field(default_factory=list)
    exceptional: list = field(default_factory=list)

    def degree(self, index, kinds=('support',)):
        return sum(
            (e.start == index) + (e.end == index) for e in self.edges if e.kind in kinds
        )

    def leaves(self):
        return [
            i for i in range(len(self.vertices)) if self.degree(i) == 1
        ]

    def component_labels(self, kinds=('support',)):
        n = len(self.vertices)
        if n == 0:
            return 0, np.zeros(0, dtype=int)
        rows = [e.start for e in self.edges if e.kind in kinds]
        cols = [e.end for e in self.edges if e.kind in kinds]
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        return connected_components(graph, directed=False)

    @property
    def total_mass(self):
        return float(
            sum(e.mass for e in self.edges if e.kind == 'support')
            + sum(v.mass for v in self.vertices if v.kind == 'atom')
        )

    def distance(self, z):
        """distance from z to the nearest edge or vertex of the support"""
        best = min((abs(z - v.position) for v in self.vertices), default=np.inf)
        for e in self.edges:
            if e.kind == 'support':
                best = min(best, project(e.polyline, z)[0])
        return best

    def to_dict(self):
        return {
            'vertices': [v.to_dict() for v in self.vertices],
            'edges': [e.to_dict() for e in self.edges],
            'components': [c.to_dict() for c in component_census(self).components],
            'total_mass': self.total_mass,
            'exceptional': list(self.exceptional),
            'notes': list(self.notes),
        }


def _merge_duplicates(points, radius):
    if points.size == 0:
        return points
    clusters = cluster_points(points, radius)
    return np.array([c for c, _ in clusters], dtype=complex)


def _mst(nodes):
    xy = np.column_stack([nodes.real, nodes.imag])
    tree = minimum_spanning_tree(squareform(pdist(xy))).tocoo()
    return [(int(i), int(j), float(w)) for i, j, w in zip(tree.row, tree.col, tree.data)]


def _cut_long_edges(edges, n, break_factor):
    if not edges:
        return edges
    incident = [[] for _ in range(n)]
    for idx, (i, j, w) in enumerate(edges):
        incident[i].append(idx)
        incident[j].append(idx)
    global_median = float(np.median([w for _, _, w in edges]))
    kept = []
    for idx, (i, j, w) in enumerate(edges):
        around = [edges[o][2] for o in set(incident[i] + incident[j]) if o != idx]
        local = float(np.median(around)) if around else global_median
        if w > break_factor * local:
            logging.debug(f'cut MST edge of length {w:.3g} (local median {local:.3g})')
            continue
        kept.append((i, j, w))
    return kept


def _chains(n, edges):
    """split a forest into chains between nodes of degree != 2"""
    adjacency = [[] for _ in range(n)]
    for i, j, w in edges:
        adjacency[i].append((j, w))
        adjacency[j].append((i, w))
    degree = np.array([len(a) for a in adjacency])
    key = set(np.nonzero(degree != 2)[0].tolist())
    visited = set()
    chains = []
    for start in sorted(key):
        for nxt, _ in adjacency[start]:
            if (start, nxt) in visited:
                continue
            chain = [start, nxt]
            visited.add((start, nxt))
            visited.add((nxt, start))
            while chain[-1] not in key:
                here, prev = chain[-1], chain[-2]
                onward = [m for m, _ in adjacency[here] if m != prev][0]
                visited.add((here, onward))
                visited.add((onward, here))
                chain.append(onward)
            chains.append(chain)
    return chains, degree, adjacency


def build_from_roots(points, params=None, branch=None):
    """
    support forest from a root cloud: Euclidean minimum spanning tree, long
    edges cut against the local median, chains simplified to polylines,
    leaves snapped to roots of Vt and Qt, multiplicity-k roots of Qt as atoms
    """
    params = params or ForestParams()
    points = np.asarray(points, dtype=complex).ravel()
    if points.size < MIN_POINTS:
        raise ForestError(
            f'forest reconstruction needs at least {MIN_POINTS} points, got {points.size}'
        )
    v_clusters = branch.v_clusters if branch is not None else []
    q_clusters = branch.q_clusters if branch is not None else []
    k = branch.k if branch is not None else 0
    scale = max(1.0, float(np.max(np.abs(points))))

    vertices = []
    edges = []
    notes = []
    free = np.ones(points.size, dtype=bool)
    atom_index = {}
    for center, mult in q_clusters:
        if mult == k:
            near = np.abs(points - center) <= params.snap
            free &= ~near
            atom_index[len(vertices)] = center
            vertices.append(Vertex(center, 'atom', multiplicity=mult))

    nodes = _merge_duplicates(points[free], 1e-10 * scale)
    mst = _cut_long_edges(_mst(nodes), nodes.size, params.break_factor) if nodes.size > 1 else []
    n_comp, labels = 0, np.zeros(0, dtype=int)
    if nodes.size:
        graph = coo_matrix(
            (np.ones(len(mst)), ([i for i, _, _ in mst], [j for _, j, _ in mst])),
            shape=(nodes.size, nodes.size),
        )
        n_comp, labels = connected_components(graph, directed=False)

    # collapse components smaller than the snap distance
    node_vertex = {}
    small = set()
    for c in range(n_comp):
        members = np.nonzero(labels == c)[0]
        extent = float(np.max(np.abs(nodes[members][:, None] - nodes[members][None, :])))
        if extent < params.snap:
            small.add(c)
            node_vertex.update({int(m): len(vertices) for m in members})
            vertices.append(Vertex(complex(np.mean(nodes[members])), 'unresolved'))
    mst = [(i, j, w) for i, j, w in mst if labels[i] not in small]

    chains, degree, adjacency = _chains(nodes.size, mst)
    for node in sorted({c[0] for c in chains} | {c[-1] for c in chains}):
        node_vertex[node] = len(vertices)
        kind = 'junction' if degree[node] >= 3 else 'unresolved'
        vertices.append(Vertex(complex(nodes[node]), kind))

    # snap leaves (and collapsed components) to roots
    incident_length = {}
    for i, j, w in mst:
        incident_length[i] = w
        incident_length[j] = w
    candidates = [(complex(c), m, 'V_zero') for c, m in v_clusters]
    candidates += [(complex(c), m, 'Q_zero') for c, m in q_clusters if m != k]
    targets = []
    for node, vi in node_vertex.items():
        if vertices[vi].kind != 'unresolved' or vi in [t[1] for t in targets]:
            continue
        tol = max(params.snap, 1.5 * incident_length.get(node, 0.0))
        targets.append((vertices[vi].position, vi, tol))
    pairs = []
    for pos, vi, tol in targets:
        for ci, (root, mult, kind) in enumerate(candidates):
            if abs(root - pos) <= tol:
                pairs.append((abs(root - pos), vi, ('root', ci)))
        for ai, center in atom_index.items():
            if abs(center - pos) <= tol:
                pairs.append((abs(center - pos), vi, ('atom', ai)))
    pairs.sort(key=lambda t: t[0])
    used_vertex, used_target = set(), set()
    redirect = {}
    for _, vi, target in pairs:
        if vi in used_vertex or target in used_target:
            continue
        used_vertex.add(vi)
        used_target.add(target)
        if target[0] == 'atom':
            redirect[vi] = target[1]
        else:
            root, mult, kind = candidates[target[1]]
            vertices[vi] = Vertex(root, kind, multiplicity=mult)

    for chain in chains:
        start = node_vertex[chain[0]]
        end = node_vertex[chain[-1]]
        start = redirect.get(start, start)
        end = redirect.get(end, end)
        line = np.concatenate(
            [[vertices[start].position], nodes[chain], [vertices[end].position]]
        )
        # drop repeated endpoints left by unsnapped vertices
        line = line[np.concatenate([[True], np.abs(np.diff(line)) > 0])]
        edges.append(Edge(simplify_polyline(line, params.simplify), start, end))

    # vertices merged into atoms are removed and indices compacted
    keep = [i for i in range(len(vertices)) if i not in redirect]
    remap = {old: new for new, old in enumerate(keep)}
    vertices = [vertices[i] for i in keep]
    for e in edges:
        e.start, e.end = remap[e.start], remap[e.end]

    forest = SupportForest(
        vertices=vertices,
        edges=edges,
        points=points,
        params=params,
        v_clusters=list(v_clusters),
        q_clusters=list(q_clusters),
        k=k,
        notes=notes,
    )
    unresolved = [i for i in forest.leaves() if vertices[i].kind == 'unresolved']
    if unresolved:
        notes.append(f'{len(unresolved)} leaves snapped to no root')
    logging.info(
        f'forest: {len(vertices)} vertices, {len(edges)} edges, '
        f'{forest.component_labels()[0]} components from {points.size} points'
    )
    return forest


@dataclass
class EndpointReport:
    leaves: list
    passed: bool

    def to_dict(self):
        return {'leaves': self.leaves, 'passed': self.passed}


def check_endpoints(f):
    """every leaf is a zero of Vt, a zero of Qt or an atom"""
    leaves = [
        {'vertex': i, 'kind': f.vertices[i].kind} for i in f.leaves()
    ]
    return EndpointReport(
        leaves=leaves, passed=all(leaf['kind'] in LEAF_KINDS for leaf in leaves)
    )


@dataclass
class StraighteningReport:
    tol: float
    edges: list
    max_deviation: float
    passed: bool

    def to_dict(self):
        return {
            'tol': self.tol,
            'max_deviation': self.max_deviation,
            'passed': self.passed,
            'edges': self.edges,
        }


def straightness(values):
    """
    spread of points about their best-fit line divided by their extent
    along it
    """
    values = np.asarray(values, dtype=complex)
    centered = values - values.mean()
    xy = np.column_stack([centered.real, centered.imag])
    _, _, vt = np.linalg.svd(xy, full_matrices=False)
    direction = complex(vt[0, 0], vt[0, 1])
    rotated = centered / direction
    extent = float(np.ptp(rotated.real))
    if extent == 0:
        return 0.0, 0.0
    return float(np.max(np.abs(rotated.imag)) / extent), extent


def _edge_samples(b, edge, count, trim):
    cum = arc_lengths(edge.polyline)
    s = np.linspace(0.0, cum[-1], count)
    pts = point_at(edge.polyline, s, cum)[0]
    keep = b.singular_distance(pts) > trim
    return pts[keep]


def verify_straightening(f, b, tol=None, samples=65):
    """
    Psi along every edge, continued from the edge midpoint; the deviation
    from a straight line is normalized by the Psi-length of the edge
    """
    tol = f.params.tol if tol is None else tol
    entries = []
    for index, edge in enumerate(f.edges):
        trim = max(10 * f.params.root_disk, 0.02 * edge.length)
        entry = {'edge': index, 'kind': edge.kind}
        try:
            pts = _edge_samples(b, edge, samples, trim)
            if pts.size < 3:
                raise BranchError('edge too short after trimming the root disks')
            mid = pts.size // 2
            w_mid = b.candidates(pts[mid])[0]
            forward = psi_along(b, pts[mid:], w_mid)
            backward = psi_along(b, pts[: mid + 1][::-1], w_mid)
            values = np.concatenate([backward[::-1][:-1], forward])
            deviation, extent = straightness(values)
            entry.update(
                deviation=deviation, psi_length=extent, passed=deviation <= tol
            )
        except (BranchError, QuadratureError) as e:
            entry.update(deviation=float('nan'), psi_length=0.0, passed=False, error=str(e))
            logging.warning(f'straightening: edge {index}: {e}')
        entries.append(entry)
    deviations = [e['deviation'] for e in entries if np.isfinite(e['deviation'])]
    return StraighteningReport(
        tol=tol,
        edges=entries,
        max_deviation=max(deviations, default=0.0),
        passed=all(e['passed'] for e in entries),
    )


def _median_spacing(points):
    if points.size < 2:
        return 1.0
    lengths = [w for _, _, w in _mst(_merge_duplicates(points, 1e-12))]
    return float(np.median(lengths)) if lengths else 1.0


def _endpoint_exponent(f, vertex):
    if vertex.kind == 'V_zero':
        return vertex.multiplicity / f.k
    if vertex.kind == 'Q_zero':
        return -vertex.multiplicity / f.k
    return 0.0


def _half_mass(b, edge, cum, s0, s1, beta, factor):
    # s measured from s0 toward s1; integrand ~ |s - s0|^beta near s0
    t = 0.5 * (_MASS_NODES + 1.0)
    u = t ** (1.0 / (1.0 + beta))
    du = u / ((1.0 + beta) * t)
    s = s0 + (s1 - s0) * u
    z = point_at(edge.polyline, s, cum)[0]
    integrand = np.abs(b.ratio(z)) ** (1.0 / b.k) * factor
    return float(abs(s1 - s0) * 0.5 * np.sum(_MASS_WEIGHTS * integrand * du))


def plemelj_density(f, b, offset=None):
    """
    densities from the jump of w across every support edge, edge masses by
    quadrature of |Vt/Qt|^(1/k) |1 - e^(2 pi i jump/k)| / (2 pi), and atom
    masses |Vt(a) / (Qt/(z-a)^k)(a)|^(1/k)
    """
    offset = f.params.offset if offset is None else offset
    far = 3.0 * _median_spacing(f.points)
    skipped = 0
    for index, edge in enumerate(f.edges):
        if edge.kind != 'support':
            continue
        cum = arc_lengths(edge.polyline)
        length = cum[-1]
        count = f.params.density_samples
        s_values = length * (np.arange(count) + 0.5) / count
        positions, tangents = point_at(edge.polyline, s_values, cum)
        samples, jumps = [], []
        for s, z, tau in zip(s_values, positions, tangents):
            normal = 1j * tau
            sides = [z + offset * normal, z - offset * normal]
            outer = [z + far * normal, z - far * normal]
            if np.min(b.singular_distance(np.array(sides + outer))) < 10 * f.params.root_disk:
                skipped += 1
                continue
            try:
                w_plus, w_minus = (
                    b.advance(o, physical_branch(f.points, b, o), p)
                    for o, p in zip(outer, sides)
                )
            except BranchError:
                skipped += 1
                continue
            rho = abs(w_plus - w_minus) / (2.0 * np.pi)
            jumps.append(int(np.round(np.angle(w_plus / w_minus) * b.k / (2.0 * np.pi))) % b.k)
            samples.append((complex(z), float(s), float(rho)))
        edge.density_samples = samples
        edge.jump = Counter(jumps).most_common(1)[0][0] if jumps else 0
        if not jumps:
            f.notes.append(f'edge {index}: no density samples')
        factor = abs(1.0 - np.exp(2j * np.pi * edge.jump / b.k)) / (2.0 * np.pi)
        beta0 = _endpoint_exponent(f, f.vertices[edge.start])
        beta1 = _endpoint_exponent(f, f.vertices[edge.end])
        edge.mass = _half_mass(b, edge, cum, 0.0, 0.5 * length, beta0, factor) + _half_mass(
            b, edge, cum, length, 0.5 * length, beta1, factor
        )
    for vertex in f.vertices:
        if vertex.kind == 'atom':
            a = vertex.position
            others = b.q_roots[np.abs(b.q_roots - a) > 1e-4]
            reduced = np.prod(a - others)
            vertex.mass = float(abs(b.Vt.eval(a) / reduced) ** (1.0 / b.k))
    if skipped:
        f.notes.append(f'{skipped} density samples skipped near root disks')
        logging.warning(f'plemelj_density: {skipped} samples skipped near root disks')
    logging.info(f'plemelj_density: total mass {f.total_mass:.6f}')
    return f


def _split_edge(f, edge_index, s):
    edge = f.edges[edge_index]
    cum = arc_lengths(edge.polyline)
    point = complex(point_at(edge.polyline, s, cum)[0][0])
    cut = int(np.searchsorted(cum, s))
    first_line = np.concatenate([edge.polyline[:cut], [point]])
    second_line = np.concatenate([[point], edge.polyline[cut:]])
    new_vertex = len(f.vertices)
    f.vertices.append(Vertex(point, 'junction'))
    share = s / cum[-1] if cum[-1] > 0 else 0.5
    if edge.density_samples:
        rho = np.array([r for _, _, r in edge.density_samples])
        pos = np.array([p for _, p, _ in edge.density_samples])
        total = rho.sum()
        if total > 0:
            share = float(rho[pos <= s].sum() / total)
    first = Edge(first_line, edge.start, new_vertex, edge.kind, edge.mass * share, edge.jump,
                 [d for d in edge.density_samples if d[1] <= s])
    second = Edge(second_line, new_vertex, edge.end, edge.kind, edge.mass * (1 - share), edge.jump,
                  [(z, p - s, r) for z, p, r in edge.density_samples if p > s])
    f.edges[edge_index] = first
    f.edges.append(second)
    return new_vertex


def _attach(f, z, spacing):
    """vertex where a trajectory ending at z meets the support"""
    best = None
    for index, edge in enumerate(f.edges):
        if edge.kind != 'support':
            continue
        dist, s = project(edge.polyline, z)
        if best is None or dist < best[0]:
            best = (dist, index, s)
    _, index, s = best
    edge = f.edges[index]
    if s <= 0.5 * spacing:
        return edge.start
    if s >= edge.length - 0.5 * spacing:
        return edge.end
    return _split_edge(f, index, s)


def extended_support(f, b, spacing=None):
    """
    add exceptional trajectories: from every zero of Vt, the descent
    trajectories (w dz negative real) are traced until they reach the
    forest; hits on another component become exceptional edges
    """
    snap = f.params.snap
    spacing = snap if spacing is None else spacing
    stop, owner = [], []
    for index, edge in enumerate(f.edges):
        if edge.kind != 'support':
            continue
        count = max(2, int(np.ceil(edge.length / (0.5 * spacing))) + 1)
        dense = resample(edge.polyline, count)
        stop.extend(dense.tolist())
        owner.extend([('edge', index)] * dense.size)
    for index, vertex in enumerate(f.vertices):
        stop.append(vertex.position)
        owner.append(('vertex', index))
    stop = np.array(stop, dtype=complex)
    _, labels = f.component_labels()

    def component_of(kind, index):
        if kind == 'vertex':
            return int(labels[index])
        return int(labels[f.edges[index].start])

    report = []
    for alpha, mult in b.v_clusters:
        alpha = complex(alpha)
        own_vertex = next(
            (i for i, v in enumerate(f.vertices) if abs(v.position - alpha) <= 1e-9 * max(1.0, abs(alpha))),
            None,
        )
        own = int(labels[own_vertex]) if own_vertex is not None else None
        others = np.abs(b.singular - alpha) > 1e-4
        delta = min(0.2 * spacing, 0.1 * float(np.min(np.abs(b.singular[others] - alpha))))
        for direction in horizontality_directions(b, alpha, mult, theta=np.pi):
            entry = {'root': [alpha.real, alpha.imag], 'direction': float(np.angle(direction))}
            start = alpha + delta * direction
            if f.distance(start) < 0.5 * delta:
                entry.update(reason='along-forest', added=False)
                report.append(entry)
                continue
            values = b.candidates(start)
            w_dir = complex(values[np.argmin(np.abs(np.angle(-values * direction)))])
            if b.k > 1:
                w_phys = physical_branch(f.points, b, start)
                sheet_gap = abs(w_dir) * abs(1.0 - np.exp(2j * np.pi / b.k))
                if abs(w_dir - w_phys) > 0.5 * sheet_gap:
                    entry.update(reason='other-sheet', added=False)
                    report.append(entry)
                    continue
            try:
                trace = trace_trajectory(
                    b, start, direction, theta=np.pi, w0=w_dir,
                    root_disk=f.params.root_disk, stop_points=stop,
                    stop_radius=spacing, arm=3.0 * spacing,
                )
            except TrajectoryError as e:
                entry.update(reason='error', added=False, error=str(e))
                report.append(entry)
                continue
            entry['reason'] = trace.reason
            target = None
            if trace.reason == 'hit':
                target = owner[trace.hit_index]
            elif trace.reason == 'root':
                hit = [i for i, v in enumerate(f.vertices) if abs(v.position - trace.end_root) <= snap]
                if hit:
                    target = ('vertex', hit[0])
            if target is None:
                if trace.reason != 'root':
                    logging.warning(
                        f'exceptional trajectory from {alpha:.4g} did not terminate on the forest ({trace.reason})'
                    )
                entry['added'] = False
                report.append(entry)
                continue
            hit_component = component_of(*target)
            entry['component'] = hit_component
            if hit_component == own:
                entry['added'] = False
                report.append(entry)
                continue
            if target[0] == 'edge':
                end_vertex = _attach(f, trace.points[-1], spacing)
            else:
                end_vertex = target[1]
            if own_vertex is None:
                own_vertex = len(f.vertices)
                f.vertices.append(Vertex(alpha, 'V_zero', multiplicity=mult))
            line = np.concatenate([[alpha], trace.points, [f.vertices[end_vertex].position]])
            f.edges.append(Edge(simplify_polyline(line, 0.1 * f.params.simplify), own_vertex, end_vertex, 'exceptional'))
            entry['added'] = True
            report.append(entry)
            _, labels = f.component_labels(kinds=('support', 'exceptional'))
            own = int(labels[own_vertex])
    f.exceptional = report
    added = sum(1 for e in report if e.get('added'))
    logging.info(f'extended support: {added} exceptional edges from {len(b.v_clusters)} zeros of Vt')
    return f


@dataclass
class TreeReport:
    vertex_count: int
    edge_count: int
    component_count: int
    passed: bool

    def to_dict(self):
        return {
            'vertex_count': self.vertex_count,
            'edge_count': self.edge_count,
            'component_count': self.component_count,
            'passed': self.passed,
        }


def verify_tree(f):
    """the extended support is connected with E = N - 1"""
    n_comp, _ = f.component_labels(kinds=('support', 'exceptional'))
    n = len(f.vertices)
    e = sum(1 for edge in f.edges if edge.kind in ('support', 'exceptional'))
    return TreeReport(
        vertex_count=n,
        edge_count=e,
        component_count=int(n_comp),
        passed=(n_comp == 1 and e == n - 1),
    )


@dataclass
class ComponentCensus:
    vertices: list
    q_roots: int
    v_roots: int
    k: int

    @property
    def difference(self):
        return self.q_roots - self.v_roots

    @property
    def passed(self):
        return self.difference in (0, self.k)

    def to_dict(self):
        return {
            'vertices': self.vertices,
            'q_roots': self.q_roots,
            'v_roots': self.v_roots,
            'difference': self.difference,
            'passed': self.passed,
        }


@dataclass
class CensusReport:
    components: list

    @property
    def passed(self):
        return all(c.passed for c in self.components)

    def to_dict(self):
        return {
            'passed': self.passed,
            'components': [c.to_dict() for c in self.components],
        }


def _component_distance(f, members, edge_ids, z):
    best = min(abs(z - f.vertices[i].position) for i in members)
    for index in edge_ids:
        best = min(best, project(f.edges[index].polyline, z)[0])
    return best


def component_census(f):
    """
    per component of the support, the roots of Qt and of Vt on it counted
    with multiplicity; each root is assigned to its nearest component
    within the snap distance
    """
    n_comp, labels = f.component_labels()
    members = [np.nonzero(labels == c)[0].tolist() for c in range(n_comp)]
    edge_ids = [[] for _ in range(n_comp)]
    for index, edge in enumerate(f.edges):
        if edge.kind == 'support':
            edge_ids[labels[edge.start]].append(index)
    q_count = [0] * n_comp
    v_count = [0] * n_comp
    for clusters, counts in ((f.q_clusters, q_count), (f.v_clusters, v_count)):
        for center, mult in clusters:
            if n_comp == 0:
                break
            gaps = [_component_distance(f, members[c], edge_ids[c], center) for c in range(n_comp)]
            nearest = int(np.argmin(gaps))
            if gaps[nearest] <= f.params.snap:
                counts[nearest] += mult
    components = [
        ComponentCensus(members[c], q_count[c], v_count[c], f.k) for c in range(n_comp)
    ]
    return CensusReport(components)


def distance_to_forest(f, points):
    """max over points of the distance to the support (one-sided Hausdorff)"""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    return float(max(f.distance(z) for z in points))


@dataclass
class InterlacingReport:
    junction_radius: float
    edges: list
    counts: tuple

    @property
    def alternation(self):
        pairs = sum(e['pairs'] for e in self.edges)
        if pairs == 0:
            return float('nan')
        return 100.0 * sum(e['alternating'] for e in self.edges) / pairs

    def to_dict(self):
        return {
            'junction_radius': self.junction_radius,
            'alternation': self.alternation,
            'counts': list(self.counts),
            'edges': self.edges,
        }


def interlacing(f, zeros_a, zeros_b, junction_radius=None):
    """
    project two zero sets on the support edges, away from junctions, and
    count how often neighbours along each edge come from different sets
    """
    junction_radius = f.params.junction_radius if junction_radius is None else junction_radius
    junctions = np.array(
        [v.position for i, v in enumerate(f.vertices) if f.degree(i) >= 3], dtype=complex
    )
    support = [i for i, e in enumerate(f.edges) if e.kind == 'support']
    placed = {i: [] for i in support}
    counts = [0, 0]
    for label, zeros in enumerate((zeros_a, zeros_b)):
        for z in np.atleast_1d(np.asarray(zeros, dtype=complex)):
            if junctions.size and np.min(np.abs(junctions - z)) < junction_radius:
                continue
            if not support:
                continue
            nearest = min(support, key=lambda i: project(f.edges[i].polyline, z)[0])
            placed[nearest].append((project(f.edges[nearest].polyline, z)[1], label))
            counts[label] += 1
    edges = []
    for index in support:
        sequence = [label for _, label in sorted(placed[index])]
        pairs = max(len(sequence) - 1, 0)
        alternating = sum(1 for x, y in zip(sequence, sequence[1:]) if x != y)
        edges.append(
            {
                'edge': index,
                'points': len(sequence),
                'pairs': pairs,
                'alternating': alternating,
                'percent': 100.0 * alternating / pairs if pairs else float('nan'),
            }
        )
    return InterlacingReport(junction_radius=junction_radius, edges=edges, counts=tuple(counts))
