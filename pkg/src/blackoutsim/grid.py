"""Transmission network: topology, electrical parameters, file I/O and a
synthetic-network generator.

The grid is stored column-wise in numpy arrays for speed; ``Node`` and
``Line`` dataclasses are lightweight views used by the file format and by
callers that want one element at a time.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.csgraph import connected_components as _csgraph_components

KIND_LOAD = "L"
KIND_GENERATOR_LOAD = "G"


class GridError(ValueError):
    """Invalid grid data (bad file, broken invariant)."""


@dataclass
class Node:
    id: int
    kind: str               # "L" load-only, "G" load + generation
    base_load: float        # reference demand at profile value 1 (MW)
    gen_capacity: float     # maximum generator output (MW), 0 for "L"


@dataclass
class Line:
    id: int
    endpoints: tuple[int, int]
    impedance: float        # per-unit reactance, > 0
    flow_limit: float       # MW, > 0
    up: bool = True
    flow: float = 0.0       # signed MW from the last dispatch


class Grid:
    """Mutable network state. Line status changes bump ``topology_version``
    so downstream solvers know when to rebuild their caches."""

    def __init__(self, base_load, gen_capacity, from_node, to_node,
                 impedance, flow_limit):
        self.base_load = np.asarray(base_load, dtype=float).copy()
        self.gen_capacity = np.asarray(gen_capacity, dtype=float).copy()
        self.from_node = np.asarray(from_node, dtype=np.int64).copy()
        self.to_node = np.asarray(to_node, dtype=np.int64).copy()
        self.impedance = np.asarray(impedance, dtype=float).copy()
        self.flow_limit = np.asarray(flow_limit, dtype=float).copy()
        self.up = np.ones(len(self.from_node), dtype=bool)
        self.flow = np.zeros(len(self.from_node), dtype=float)
        self.topology_version = 0
        self.validate()

    # -- basic shape ---------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.base_load)

    @property
    def n_lines(self) -> int:
        return len(self.from_node)

    @property
    def is_gen(self) -> np.ndarray:
        return self.gen_capacity > 0.0

    def total_gen_capacity(self) -> float:
        return float(self.gen_capacity.sum())

    def total_base_load(self) -> float:
        return float(self.base_load.sum())

    # -- element views ---------------------------------------------------
    def node(self, i: int) -> Node:
        kind = KIND_GENERATOR_LOAD if self.gen_capacity[i] > 0 else KIND_LOAD
        return Node(i, kind, float(self.base_load[i]), float(self.gen_capacity[i]))

    def line(self, l: int) -> Line:
        return Line(l, (int(self.from_node[l]), int(self.to_node[l])),
                    float(self.impedance[l]), float(self.flow_limit[l]),
                    bool(self.up[l]), float(self.flow[l]))

    @property
    def nodes(self) -> list[Node]:
        return [self.node(i) for i in range(self.n_nodes)]

    @property
    def lines(self) -> list[Line]:
        return [self.line(l) for l in range(self.n_lines)]

    # -- mutation ---------------------------------------------------------
    def set_lines_down(self, line_ids):
        ids = list(line_ids)
        if not ids:
            return
        self._check_line_ids(ids)
        self.up[ids] = False
        self.flow[ids] = 0.0
        self.topology_version += 1

    def set_lines_up(self, line_ids):
        ids = list(line_ids)
        if not ids:
            return
        self._check_line_ids(ids)
        self.up[ids] = True
        self.topology_version += 1

    def _check_line_ids(self, ids):
        for l in ids:
            if not 0 <= l < self.n_lines:
                raise GridError(f"unknown line id {l}")

    def copy(self) -> "Grid":
        g = Grid(self.base_load, self.gen_capacity, self.from_node,
                 self.to_node, self.impedance, self.flow_limit)
        g.up = self.up.copy()
        g.flow = self.flow.copy()
        return g

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (np.array_equal(self.base_load, other.base_load)
                and np.array_equal(self.gen_capacity, other.gen_capacity)
                and np.array_equal(self.from_node, other.from_node)
                and np.array_equal(self.to_node, other.to_node)
                and np.array_equal(self.impedance, other.impedance)
                and np.array_equal(self.flow_limit, other.flow_limit)
                and np.array_equal(self.up, other.up))

    # -- invariants --------------------------------------------------------
    def validate(self):
        n, m = self.n_nodes, self.n_lines
        if n < 1:
            raise GridError("grid needs at least one node")
        if np.any(self.base_load < 0):
            i = int(np.argmax(self.base_load < 0))
            raise GridError(f"node {i}: negative base_load")
        if np.any(self.gen_capacity < 0):
            i = int(np.argmax(self.gen_capacity < 0))
            raise GridError(f"node {i}: negative gen_capacity")
        for l in range(m):
            a, b = int(self.from_node[l]), int(self.to_node[l])
            if not (0 <= a < n) or not (0 <= b < n):
                raise GridError(f"line {l}: endpoint out of range ({a}, {b})")
            if a == b:
                raise GridError(f"line {l}: endpoints must be distinct")
        if m and np.any(self.impedance <= 0):
            l = int(np.argmax(self.impedance <= 0))
            raise GridError(f"line {l}: impedance must be > 0")
        if m and np.any(self.flow_limit <= 0):
            l = int(np.argmax(self.flow_limit <= 0))
            raise GridError(f"line {l}: flow_limit must be > 0")


def connected_components(grid: Grid) -> tuple[int, np.ndarray]:
    """Partition nodes by up-line connectivity.

    Returns (number of components, label array); two nodes share a label
    iff a path of up lines joins them.
    """
    n = grid.n_nodes
    mask = grid.up
    a = grid.from_node[mask]
    b = grid.to_node[mask]
    adj = sparse.coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    return _csgraph_components(adj, directed=False)


# ----------------------------------------------------------------------
# file format
#
#   nodes <n> lines <m>
#   node <id> <L|G> <base_load> <gen_capacity>     (n rows)
#   line <id> <from> <to> <impedance> <flow_limit> (m rows)
#
# '#' starts a comment line; fields are space separated decimals.
# ----------------------------------------------------------------------

def save_grid(grid: Grid, target) -> None:
    """Write a grid to a path or text stream."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w") as fh:
            save_grid(grid, fh)
        return
    w = target.write
    w(f"nodes {grid.n_nodes} lines {grid.n_lines}\n")
    for i in range(grid.n_nodes):
        kind = KIND_GENERATOR_LOAD if grid.gen_capacity[i] > 0 else KIND_LOAD
        w(f"node {i} {kind} {float(grid.base_load[i])!r} "
          f"{float(grid.gen_capacity[i])!r}\n")
    for l in range(grid.n_lines):
        w(f"line {l} {int(grid.from_node[l])} {int(grid.to_node[l])} "
          f"{float(grid.impedance[l])!r} {float(grid.flow_limit[l])!r}\n")


def grid_to_text(grid: Grid) -> str:
    buf = io.StringIO()
    save_grid(grid, buf)
    return buf.getvalue()


def load_grid(source) -> Grid:
    """Read a grid from a path, text stream, or string content.

    Raises GridError naming the offending file line and element.
    """
    if isinstance(source, str) and "\n" in source:
        lines = source.splitlines()
    elif isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            lines = fh.read().splitlines()
    else:
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode()
        lines = data.splitlines()
    return _parse_grid(lines)


def _parse_grid(lines) -> Grid:
    rows = [(k + 1, ln.strip()) for k, ln in enumerate(lines)]
    rows = [(k, ln) for k, ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise GridError("empty grid file")

    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 4 or parts[0] != "nodes" or parts[2] != "lines":
        raise GridError(f"line {lineno}: bad header {header!r}, "
                        "expected 'nodes <n> lines <m>'")
    try:
        n, m = int(parts[1]), int(parts[3])
    except ValueError:
        raise GridError(f"line {lineno}: non-integer counts in header") from None
    if len(rows) - 1 != n + m:
        raise GridError(f"header declares {n} nodes + {m} lines but file has "
                        f"{len(rows) - 1} element rows")

    base = np.zeros(n)
    cap = np.zeros(n)
    seen_nodes = np.zeros(n, dtype=bool)
    fr = np.zeros(m, dtype=np.int64)
    to = np.zeros(m, dtype=np.int64)
    z = np.zeros(m)
    fmax = np.zeros(m)
    seen_lines = np.zeros(m, dtype=bool)

    for lineno, ln in rows[1:1 + n]:
        p = ln.split()
        if len(p) != 5 or p[0] != "node":
            raise GridError(f"line {lineno}: expected "
                            "'node <id> <L|G> <base_load> <gen_capacity>'")
        try:
            i = int(p[1])
            load = float(p[3])
            capacity = float(p[4])
        except ValueError:
            raise GridError(f"line {lineno}: bad numeric field") from None
        if not 0 <= i < n:
            raise GridError(f"line {lineno}: node id {i} outside 0..{n - 1}")
        if seen_nodes[i]:
            raise GridError(f"line {lineno}: duplicate node id {i}")
        if p[2] not in (KIND_LOAD, KIND_GENERATOR_LOAD):
            raise GridError(f"line {lineno}: node {i} has unknown kind {p[2]!r}")
        if p[2] == KIND_LOAD and capacity != 0.0:
            raise GridError(f"line {lineno}: node {i} is kind L but has "
                            f"gen_capacity {capacity}")
        if p[2] == KIND_GENERATOR_LOAD and capacity <= 0.0:
            raise GridError(f"line {lineno}: node {i} is kind G but has "
                            f"gen_capacity {capacity}")
        seen_nodes[i] = True
        base[i] = load
        cap[i] = capacity

    for lineno, ln in rows[1 + n:]:
        p = ln.split()
        if len(p) != 6 or p[0] != "line":
            raise GridError(f"line {lineno}: expected "
                            "'line <id> <from> <to> <impedance> <flow_limit>'")
        try:
            l = int(p[1])
            a, b = int(p[2]), int(p[3])
            imp = float(p[4])
            lim = float(p[5])
        except ValueError:
            raise GridError(f"line {lineno}: bad numeric field") from None
        if not 0 <= l < m:
            raise GridError(f"line {lineno}: line id {l} outside 0..{m - 1}")
        if seen_lines[l]:
            raise GridError(f"line {lineno}: duplicate line id {l}")
        if not (0 <= a < n) or not (0 <= b < n):
            raise GridError(f"line {lineno}: line {l} references node "
                            f"{a if not 0 <= a < n else b} of a {n}-node grid")
        seen_lines[l] = True
        fr[l], to[l], z[l], fmax[l] = a, b, imp, lim

    try:
        return Grid(base, cap, fr, to, z, fmax)
    except GridError as exc:
        raise GridError(f"invalid grid data: {exc}") from None


# ----------------------------------------------------------------------
# synthetic generator: random connected graph, loads/capacities/limits
# sized from an initial proportional dispatch
# ----------------------------------------------------------------------

def generate_synthetic(n: int, n_gl: int, m: int, seed: int,
                       mean_load: float = 100.0,
                       kappa: float = 1.25,
                       initial_margin: float = 0.4,
                       min_limit_fraction: float = 0.1) -> Grid:
    """Build a random connected grid with n nodes, n_gl generator nodes and
    m lines. Deterministic for a fixed seed.

    Base loads are uniform in [0.5, 1.5] x mean_load, generator capacities
    sum to (1 + initial_margin) x total load, impedances uniform in
    [0.5, 1.5] pu, and flow limits are kappa x |flow| of a proportional
    dispatch at base load (floored at min_limit_fraction of the mean
    absolute flow so every limit is positive).
    """
    if n < 2:
        raise GridError("need n >= 2 nodes")
    if not 1 <= n_gl <= n:
        raise GridError("need 1 <= n_gl <= n")
    if m < n - 1:
        raise GridError(f"need m >= n-1 lines for connectivity, got {m}")
    max_edges = n * (n - 1) // 2
    if m > max_edges:
        raise GridError(f"m = {m} exceeds the {max_edges} distinct pairs")

    rng = np.random.default_rng(seed)

    # spanning tree: attach node i to a uniform earlier node
    fr = list(range(1, n))
    to = [int(rng.integers(0, i)) for i in range(1, n)]
    edges = {(max(a, b), min(a, b)) for a, b in zip(fr, to)}
    while len(edges) < m:
        a = int(rng.integers(0, n))
        b = int(rng.integers(0, n))
        if a == b:
            continue
        key = (max(a, b), min(a, b))
        if key in edges:
            continue
        edges.add(key)
        fr.append(a)
        to.append(b)
    fr = np.array(fr, dtype=np.int64)
    to = np.array(to, dtype=np.int64)

    base = rng.uniform(0.5, 1.5, n) * mean_load
    gen_nodes = rng.choice(n, size=n_gl, replace=False)
    weights = rng.uniform(0.5, 1.5, n_gl)
    cap = np.zeros(n)
    cap[gen_nodes] = weights / weights.sum() * (1.0 + initial_margin) * base.sum()

    z = rng.uniform(0.5, 1.5, m)

    flows = _proportional_flows(n, fr, to, z, base, cap)
    floor = min_limit_fraction * max(np.abs(flows).mean(), 1e-9 * mean_load)
    fmax = np.maximum(kappa * np.abs(flows), floor)

    return Grid(base, cap, fr, to, z, fmax)


def _proportional_flows(n, fr, to, z, demand, cap):
    """DC flows when generators share the total demand in proportion to
    capacity. Used only to size initial flow limits; assumes the all-up
    graph is connected."""
    w = 1.0 / z
    lap = np.zeros((n, n))
    np.add.at(lap, (fr, fr), w)
    np.add.at(lap, (to, to), w)
    np.add.at(lap, (fr, to), -w)
    np.add.at(lap, (to, fr), -w)
    inj = cap / cap.sum() * demand.sum() - demand
    theta = np.zeros(n)
    theta[1:] = cho_solve(cho_factor(lap[1:, 1:]), inj[1:])
    return (theta[fr] - theta[to]) * w
