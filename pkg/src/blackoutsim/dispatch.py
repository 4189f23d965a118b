"""Generation dispatch / load shedding on the up-line network.

Per connected component the dispatch solves

    min  gen_cost * sum(generation) + shed_penalty * sum(shed)
    s.t. DC flow   F_l = (theta_a - theta_b) / z_l        (up lines)
         balance   gen_i - (demand_i - shed_i) = net outflow at i
         0 <= generation_i <= available capacity
         0 <= shed_i <= demand_i
         |F_l| <= flow_limit_l

The LP is always feasible (shed everything). Because generation cost is
uniform, the objective pins down total shed uniquely; individual flows and
generation may differ between equally optimal solutions and any optimum is
accepted.

Most calls never touch an LP: if generators sharing the component demand in
proportion to available capacity yields flows strictly inside every limit,
that zero-shed dispatch is already optimal. The LP runs only when that
fails, through one of two backends: an in-repo warm-started simplex (fast,
reuses the previous basis while the topology is unchanged) or
scipy.optimize.linprog (reference).
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from ._simplex import AT_LOWER, AT_UPPER, BASIC, FREE_NONBASIC, \
    BoundedSimplex, SimplexError, complete_basis
from .grid import Grid, connected_components

FLOW_TOL_REL = 1e-6     # |F| >= limit*(1-FLOW_TOL_REL) counts as at-limit

DEFAULT_GEN_COST = 1.0
DEFAULT_SHED_PENALTY = 100.0


class DispatchError(RuntimeError):
    """LP solver failure; carries the component id."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


@dataclass
class DispatchProblem:
    grid: Grid
    demand: np.ndarray                    # per-node MW, >= 0
    shed_penalty: float = DEFAULT_SHED_PENALTY
    gen_cost: float = DEFAULT_GEN_COST
    gen_limit: np.ndarray | None = None   # per-node available capacity;
                                          # defaults to grid.gen_capacity


@dataclass
class DispatchResult:
    generation: np.ndarray
    shed: np.ndarray
    flows: np.ndarray                     # signed MW, 0 on down lines
    angles: np.ndarray                    # radians, one reference 0 per component
    objective: float


def total_shed(result: DispatchResult) -> float:
    """Total load shed L_S of a dispatch (MW)."""
    return float(result.shed.sum())


def solve_dispatch(problem: DispatchProblem, backend: str = "warm") -> DispatchResult:
    """One-shot dispatch solve; see DispatchSolver for the persistent API."""
    solver = DispatchSolver(problem.grid, gen_cost=problem.gen_cost,
                            shed_penalty=problem.shed_penalty, backend=backend)
    return solver.solve(problem.demand, gen_limit=problem.gen_limit)


# ----------------------------------------------------------------------
# persistent solver with per-topology caches
# ----------------------------------------------------------------------

class _Component:
    """Static data of one connected component of the up-line graph."""

    def __init__(self, grid, nodes, lines):
        self.nodes = nodes                      # global node ids
        self.lines = lines                      # global line ids, all up
        self.k = len(nodes)
        loc = np.full(grid.n_nodes, -1, dtype=np.int64)
        loc[nodes] = np.arange(self.k)
        self.loc_from = loc[grid.from_node[lines]]
        self.loc_to = loc[grid.to_node[lines]]
        self.weight = 1.0 / grid.impedance[lines]
        self.fmax = grid.flow_limit[lines]
        self.gen_cols = np.flatnonzero(grid.gen_capacity[nodes] > 0.0)
        self.cho = None
        if self.k > 1:
            lap = np.zeros((self.k, self.k))
            w = self.weight
            np.add.at(lap, (self.loc_from, self.loc_from), w)
            np.add.at(lap, (self.loc_to, self.loc_to), w)
            np.add.at(lap, (self.loc_from, self.loc_to), -w)
            np.add.at(lap, (self.loc_to, self.loc_from), -w)
            self.cho = cho_factor(lap[1:, 1:])
        self.lp = None                          # built lazily

    def flows_for(self, injections):
        """DC flows for local injections summing to ~0."""
        theta = np.zeros(self.k)
        if self.k > 1:
            theta[1:] = cho_solve(self.cho, injections[1:])
        return (theta[self.loc_from] - theta[self.loc_to]) * self.weight, theta


class _ComponentLP:
    """LP data for one component: variables [theta | g | s | F]."""

    def __init__(self, comp: _Component, gen_cost, shed_penalty):
        k, mc, ng = comp.k, len(comp.lines), len(comp.gen_cols)
        self.comp = comp
        nv = k + ng + k + mc
        self.nv = nv
        self.sl_theta = slice(0, k)
        self.sl_g = slice(k, k + ng)
        self.sl_s = slice(k + ng, k + ng + k)
        self.sl_f = slice(k + ng + k, nv)

        A = np.zeros((mc + k, nv))
        for j in range(mc):                     # F_j - w_j (th_a - th_b) = 0
            A[j, self.sl_f.start + j] = 1.0
            A[j, comp.loc_from[j]] -= comp.weight[j]
            A[j, comp.loc_to[j]] += comp.weight[j]
        for i in range(k):                      # g_i + s_i - outflow_i = d_i
            A[mc + i, self.sl_s.start + i] = 1.0
        for col, i in enumerate(comp.gen_cols):
            A[mc + i, self.sl_g.start + col] = 1.0
        for j in range(mc):
            A[mc + comp.loc_from[j], self.sl_f.start + j] -= 1.0
            A[mc + comp.loc_to[j], self.sl_f.start + j] += 1.0
        self.A = A

        c = np.zeros(nv)
        c[self.sl_g] = gen_cost
        c[self.sl_s] = shed_penalty
        self.c = c

        # cold basis: all theta but the reference, every flow, shed at the
        # reference node -- the "shed everything" vertex, always feasible
        self.cold_basis = np.concatenate([
            np.arange(1, k),
            np.arange(self.sl_f.start, nv),
            [self.sl_s.start],
        ]).astype(np.int64)
        st = np.full(nv, AT_LOWER, dtype=np.int8)
        st[self.sl_theta] = FREE_NONBASIC
        st[0] = AT_LOWER                        # reference angle, fixed 0
        st[self.sl_s] = AT_UPPER
        st[self.cold_basis] = BASIC
        self.cold_status = st

        self.simplex = None
        self.A_sparse = None

    def bounds(self, d, avail):
        k, mc = self.comp.k, len(self.comp.lines)
        l = np.zeros(self.nv)
        u = np.zeros(self.nv)
        l[self.sl_theta] = -np.inf
        u[self.sl_theta] = np.inf
        l[0] = u[0] = 0.0
        u[self.sl_g] = avail[self.comp.gen_cols]
        u[self.sl_s] = d
        l[self.sl_f] = -self.comp.fmax
        u[self.sl_f] = self.comp.fmax
        b = np.concatenate([np.zeros(mc), d])
        return b, l, u

    def solve_warm(self, d, avail):
        b, l, u = self.bounds(d, avail)
        if self.simplex is None:
            self.simplex = BoundedSimplex(self.A, self.c)
        sx = self.simplex
        if not sx.has_basis():
            self._crash_basis(d, avail, b, l, u)
        try:
            return sx.solve(b, l, u)
        except SimplexError:
            sx.set_basis(self.cold_basis, self.cold_status)   # retry cold
            return sx.solve(b, l, u)

    def _crash_basis(self, d, avail, b, l, u):
        """First solve on this topology: take the optimum from the reference
        backend and convert it into a starting basis (interior variables
        first, then the always-valid cold-basis columns as filler)."""
        sx = self.simplex
        try:
            x, _ = self.solve_scipy(d, avail)
        except DispatchError:
            sx.set_basis(self.cold_basis, self.cold_status)
            return
        scale = max(1.0, float(np.abs(x).max()))
        interior = (x > l + 1e-7 * scale) & (x < u - 1e-7 * scale)
        preferred = np.concatenate([
            np.flatnonzero(interior),
            self.cold_basis[~interior[self.cold_basis]],
        ])
        chosen = complete_basis(self.A, preferred)
        if len(chosen) != self.A.shape[0]:
            sx.set_basis(self.cold_basis, self.cold_status)
            return
        status = np.full(self.nv, AT_LOWER, dtype=np.int8)
        at_upper = np.abs(x - u) <= np.abs(x - l)
        finite_u = np.isfinite(u)
        status[at_upper & finite_u] = AT_UPPER
        theta = np.arange(self.sl_theta.start + 1, self.sl_theta.stop)
        status[theta] = FREE_NONBASIC
        status[0] = AT_LOWER
        status[chosen] = BASIC
        try:
            sx.set_basis(chosen, status)
        except SimplexError:
            sx.set_basis(self.cold_basis, self.cold_status)

    def solve_scipy(self, d, avail):
        b, l, u = self.bounds(d, avail)
        if self.A_sparse is None:
            self.A_sparse = sparse.csc_matrix(self.A)
        res = linprog(self.c, A_eq=self.A_sparse, b_eq=b,
                      bounds=np.column_stack([l, u]), method="highs")
        if res.status != 0:
            raise DispatchError(f"linprog failed with status {res.status}: "
                                f"{res.message}")
        return res.x, float(res.fun)


class _Topology:
    def __init__(self, grid: Grid):
        ncomp, labels = connected_components(grid)
        self.components = []
        up_lines = np.flatnonzero(grid.up)
        line_label = labels[grid.from_node[up_lines]]
        for cid in range(ncomp):
            nodes = np.flatnonzero(labels == cid)
            lines = up_lines[line_label == cid]
            self.components.append(_Component(grid, nodes, lines))


class DispatchSolver:
    """Dispatch bound to one grid, caching per-topology structure keyed by
    the line-status vector (an LRU: cascades revisit few topologies)."""

    def __init__(self, grid: Grid, gen_cost: float = DEFAULT_GEN_COST,
                 shed_penalty: float = DEFAULT_SHED_PENALTY,
                 backend: str = "warm", cache_size: int = 16):
        if backend not in ("warm", "scipy"):
            raise ValueError(f"unknown LP backend {backend!r}")
        self.grid = grid
        self.gen_cost = gen_cost
        self.shed_penalty = shed_penalty
        self.backend = backend
        self.cache_size = cache_size
        self._cache: OrderedDict[bytes, _Topology] = OrderedDict()
        self.lp_solves = 0                     # instrumentation
        self.fast_solves = 0

    def _topology(self) -> _Topology:
        key = self.grid.up.tobytes()
        topo = self._cache.get(key)
        if topo is None:
            topo = _Topology(self.grid)
            self._cache[key] = topo
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(key)
        return topo

    def solve(self, demand, gen_limit=None) -> DispatchResult:
        grid = self.grid
        d_all = np.asarray(demand, dtype=float)
        if d_all.shape != (grid.n_nodes,):
            raise ValueError("demand must have one entry per node")
        if np.any(d_all < 0):
            raise ValueError("demand entries must be >= 0")
        avail_all = grid.gen_capacity if gen_limit is None \
            else np.asarray(gen_limit, dtype=float)

        topo = self._topology()
        generation = np.zeros(grid.n_nodes)
        shed = np.zeros(grid.n_nodes)
        flows = np.zeros(grid.n_lines)
        angles = np.zeros(grid.n_nodes)

        for cid, comp in enumerate(topo.components):
            d = d_all[comp.nodes]
            avail = avail_all[comp.nodes]
            total_d = d.sum()
            total_a = avail.sum()

            if comp.k == 1:
                g = min(float(d[0]), float(avail[0]))
                generation[comp.nodes[0]] = g
                shed[comp.nodes[0]] = float(d[0]) - g
                continue
            if total_d <= 0.0:
                continue
            if total_a <= 0.0:
                shed[comp.nodes] = d
                continue

            if total_a >= total_d:
                g = avail * (total_d / total_a)
                f, theta = comp.flows_for(g - d)
                if np.all(np.abs(f) < comp.fmax * (1.0 - FLOW_TOL_REL)):
                    generation[comp.nodes] = g
                    flows[comp.lines] = f
                    angles[comp.nodes] = theta
                    self.fast_solves += 1
                    continue

            self._solve_lp(cid, comp, d, avail, generation, shed, flows, angles)

        objective = float(self.gen_cost * generation.sum()
                          + self.shed_penalty * shed.sum())
        return DispatchResult(generation, shed, flows, angles, objective)

    def _solve_lp(self, cid, comp, d, avail, generation, shed, flows, angles):
        self.lp_solves += 1
        if comp.lp is None:
            comp.lp = _ComponentLP(comp, self.gen_cost, self.shed_penalty)
        lp = comp.lp
        try:
            if self.backend == "warm":
                try:
                    x, _ = lp.solve_warm(d, avail)
                except SimplexError:
                    x, _ = lp.solve_scipy(d, avail)
            else:
                x, _ = lp.solve_scipy(d, avail)
        except DispatchError as exc:
            raise DispatchError(f"dispatch failed in component {cid}: {exc}",
                                component=cid) from None
        angles[comp.nodes] = x[lp.sl_theta]
        generation[comp.nodes[comp.gen_cols]] = x[lp.sl_g]
        shed[comp.nodes] = np.clip(x[lp.sl_s], 0.0, d)
        flows[comp.lines] = x[lp.sl_f]
