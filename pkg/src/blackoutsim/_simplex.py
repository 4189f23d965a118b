"""Bounded-variable revised simplex with warm restarts.

Solves  min c'x  s.t.  A x = b,  l <= x <= u  for a fixed (A, c) and a
stream of (b, l, u) instances that differ only slightly from call to call
(the dispatch pattern: same topology, drifting demand). The basis is kept
between calls; a re-solve runs dual-simplex iterations to repair primal
feasibility and then primal iterations to optimality, which is usually a
handful of pivots.

The basis inverse is held densely and updated by elementary row
operations, with periodic refactorization. This is deliberately simple:
problems here have a few hundred rows.
"""

from __future__ import annotations

import numpy as np

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE_NONBASIC = 3


class SimplexError(RuntimeError):
    """Solve did not converge (cycling, numerical trouble)."""


def complete_basis(A, preferred_cols, m=None, tol=1e-9):
    """Pick a maximal independent column set greedily in preference order.

    Gaussian elimination over the candidate columns: a column joins the
    basis when it still has a usable pivot in an unused row. Returns the
    chosen column indices (up to m of them, in acceptance order). Used to
    crash a simplex basis from an external optimal solution.
    """
    A = np.asarray(A, dtype=float)
    if m is None:
        m = A.shape[0]
    cols = np.asarray(preferred_cols, dtype=np.int64)
    W = A[:, cols].copy()
    norms = np.maximum(np.abs(W).max(axis=0), 1.0)
    W /= norms
    row_free = np.ones(A.shape[0], dtype=bool)
    chosen = []
    for j in range(W.shape[1]):
        col = W[:, j]
        free_idx = np.flatnonzero(row_free)
        p = free_idx[np.argmax(np.abs(col[free_idx]))]
        if abs(col[p]) <= tol:
            continue
        chosen.append(int(cols[j]))
        row_free[p] = False
        if len(chosen) == m:
            break
        W[:, j + 1:] -= np.outer(col / col[p], W[p, j + 1:])
    return chosen


class BoundedSimplex:

    def __init__(self, A, c, refactor_every: int = 80):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.c = np.asarray(c, dtype=float).copy()
        self.m, self.n = self.A.shape
        if self.m > self.n:
            raise ValueError("more rows than variables")
        self.refactor_every = refactor_every
        self.basis = None            # (m,) variable indices
        self.status = None           # (n,) AT_LOWER/AT_UPPER/BASIC/FREE_NONBASIC
        self.binv = None             # (m, m) basis inverse
        self._pivots_since_factor = 0

    # -- basis management ------------------------------------------------

    def set_basis(self, basis_cols, status):
        """Install a starting basis; raises if the basis matrix is singular."""
        basis = np.asarray(basis_cols, dtype=np.int64)
        if len(basis) != self.m:
            raise ValueError(f"basis needs {self.m} columns, got {len(basis)}")
        B = self.A[:, basis]
        try:
            binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SimplexError(f"singular start basis: {exc}") from None
        if not np.all(np.isfinite(binv)):
            raise SimplexError("singular start basis")
        self.basis = basis.copy()
        self.status = np.asarray(status, dtype=np.int8).copy()
        self.binv = binv
        self._pivots_since_factor = 0

    def has_basis(self) -> bool:
        return self.basis is not None

    def _refactor(self):
        B = self.A[:, self.basis]
        self.binv = np.linalg.inv(B)
        self._pivots_since_factor = 0

    def _pivot(self, entering: int, row: int, u_col: np.ndarray):
        piv = u_col[row]
        if abs(piv) < 1e-11:
            raise SimplexError("pivot element too small")
        leaving = self.basis[row]
        self.basis[row] = entering
        # eta update of the inverse
        self.binv[row] /= piv
        scale = u_col.copy()
        scale[row] = 0.0
        self.binv -= np.outer(scale, self.binv[row])
        self._pivots_since_factor += 1
        if self._pivots_since_factor >= self.refactor_every:
            self._refactor()
        return leaving

    # -- solve -------------------------------------------------------------

    def solve(self, b, l, u, max_iter: int | None = None):
        """Optimize for right-hand side b and bounds (l, u) from the current
        basis. Returns (x, objective). Raises SimplexError on failure; the
        caller decides how to recover (cold basis, other backend)."""
        if self.basis is None:
            raise SimplexError("no starting basis installed")
        b = np.asarray(b, dtype=float)
        l = np.asarray(l, dtype=float)
        u = np.asarray(u, dtype=float)
        if max_iter is None:
            max_iter = 60 * (self.m + self.n)

        scale = max(1.0, float(np.abs(b).max(initial=0.0)),
                    float(np.abs(u[np.isfinite(u)]).max(initial=0.0)))
        feas_tol = 1e-9 * scale
        cost_tol = 1e-9 * max(1.0, float(np.abs(self.c).max(initial=0.0)))

        degenerate_run = 0
        for it in range(max_iter):
            x = self._solution(b, l, u)
            xb = x[self.basis]
            lb = l[self.basis]
            ub = u[self.basis]
            low_viol = lb - xb
            high_viol = xb - ub
            worst_low = low_viol.max(initial=0.0)
            worst_high = high_viol.max(initial=0.0)

            if max(worst_low, worst_high) > feas_tol:
                # dual step to repair primal feasibility
                if worst_low >= worst_high:
                    row = int(np.argmax(low_viol))
                    self._dual_step(row, low_side=True, b=b, l=l, u=u,
                                    cost_tol=cost_tol)
                else:
                    row = int(np.argmax(high_viol))
                    self._dual_step(row, low_side=False, b=b, l=l, u=u,
                                    cost_tol=cost_tol)
                continue

            # primal pricing
            y = self.c[self.basis] @ self.binv
            d = self.c - y @ self.A
            eligible_dn = ((self.status == AT_LOWER) & (d < -cost_tol)
                           & (u > l)) | ((self.status == FREE_NONBASIC)
                                         & (d < -cost_tol))
            eligible_up = ((self.status == AT_UPPER) & (d > cost_tol)
                           & (u > l)) | ((self.status == FREE_NONBASIC)
                                         & (d > cost_tol))
            if not eligible_dn.any() and not eligible_up.any():
                return x, float(self.c @ x)

            if degenerate_run > 40:
                # Bland: smallest eligible index
                cand = np.flatnonzero(eligible_dn | eligible_up)
                e = int(cand[0])
            else:
                gain = np.zeros(self.n)
                gain[eligible_dn] = -d[eligible_dn]
                gain[eligible_up] = d[eligible_up]
                e = int(np.argmax(gain))
            direction = 1.0 if (eligible_dn[e]) else -1.0
            step = self._primal_step(e, direction, x, b, l, u, feas_tol)
            if step <= feas_tol:
                degenerate_run += 1
            else:
                degenerate_run = 0

        raise SimplexError(f"no convergence in {max_iter} iterations")

    # -- helpers -------------------------------------------------------------

    def _solution(self, b, l, u):
        """Full solution vector for the current basis/status."""
        x = np.where(self.status == AT_UPPER, u, l)
        x[self.status == FREE_NONBASIC] = 0.0
        x[self.basis] = 0.0
        rhs = b - self.A @ x
        x[self.basis] = self.binv @ rhs
        return x

    def _primal_step(self, e, direction, x, b, l, u, feas_tol):
        """One primal pivot with entering variable e moving in ``direction``
        (+1 up from lower, -1 down from upper). Returns the step length."""
        u_col = self.binv @ self.A[:, e]
        xb = x[self.basis]
        lb = l[self.basis]
        ub = u[self.basis]
        # basic variables move by -direction * u_col * t
        delta = -direction * u_col
        with np.errstate(divide="ignore", invalid="ignore"):
            t_low = np.where(delta < -1e-11, (lb - xb) / delta, np.inf)
            t_high = np.where(delta > 1e-11, (ub - xb) / delta, np.inf)
        t_low[np.isnan(t_low)] = np.inf          # unbounded-below basics
        t_high[np.isnan(t_high)] = np.inf
        t_basic = np.minimum(t_low, t_high)
        t_flip = u[e] - l[e] if np.isfinite(u[e]) and np.isfinite(l[e]) else np.inf

        t_min = t_basic.min(initial=np.inf)
        if t_flip <= t_min:
            if not np.isfinite(t_flip):
                raise SimplexError("unbounded direction (should not happen here)")
            self.status[e] = AT_UPPER if direction > 0 else AT_LOWER
            return max(t_flip, 0.0)
        # among (near-)tying rows pick the biggest pivot element for stability
        ties = np.flatnonzero(t_basic <= t_min + 1e-12)
        row = int(ties[np.argmax(np.abs(delta[ties]))])
        hit_upper = t_high[row] <= t_low[row]
        leaving = self._pivot(e, row, u_col)
        self.status[e] = BASIC
        self.status[leaving] = AT_UPPER if hit_upper else AT_LOWER
        return max(t_min, 0.0)

    def _dual_step(self, row, low_side, b, l, u, cost_tol):
        """One dual pivot driving basic variable in ``row`` back to its
        violated bound."""
        alpha = self.binv[row] @ self.A
        y = self.c[self.basis] @ self.binv
        d = self.c - y @ self.A

        nb_low = (self.status == AT_LOWER) & (u > l)
        nb_up = (self.status == AT_UPPER) & (u > l)
        nb_free = self.status == FREE_NONBASIC
        # Dual ratio test: the pivot ratio d_e/alpha_e must stay closest to
        # zero among eligible columns so every reduced cost keeps its sign.
        if low_side:
            # x_B[row] must increase: entering from lower needs alpha < 0,
            # from upper needs alpha > 0; ratio -d/alpha >= 0 on both.
            elig = ((nb_low & (alpha < -1e-11)) | (nb_up & (alpha > 1e-11))
                    | (nb_free & (np.abs(alpha) > 1e-11)))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = -d / alpha
        else:
            elig = ((nb_low & (alpha > 1e-11)) | (nb_up & (alpha < -1e-11))
                    | (nb_free & (np.abs(alpha) > 1e-11)))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = d / alpha
        if not elig.any():
            raise SimplexError("dual step found no entering column "
                               "(primal infeasible?)")
        ratios = np.where(elig, ratios, np.inf)
        ratios = np.maximum(ratios, 0.0)        # clamp tiny negatives
        best = ratios.min()
        cand = np.flatnonzero(elig & (ratios <= best + cost_tol))
        e = int(cand[np.argmax(np.abs(alpha[cand]))])

        u_col = self.binv @ self.A[:, e]
        leaving = self._pivot(e, row, u_col)
        self.status[e] = BASIC
        self.status[leaving] = AT_LOWER if low_side else AT_UPPER
