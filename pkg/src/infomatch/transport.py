"""Exact solver for the balanced transportation problem.

    minimize    sum_ij flow[i, j] * cost[i, j]
    subject to  sum_j flow[i, j] = supply[i],  sum_i flow[i, j] = demand[j],
                flow >= 0

Transportation simplex: the basis is a spanning tree over the bipartite
row/column graph with n + m - 1 cells (degenerate zero-flow cells included).
The start comes from the least-cost rule, potentials from the tree; the
entering cell has the most negative reduced cost and flow is pushed around
the unique cycle it closes. After a run of degenerate pivots the pricing
switches to Bland's rule, which cannot cycle.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TransportResult:
    cost: float
    flow: np.ndarray
    iterations: int


def _validate(supply, demand, cost):
    a = np.asarray(supply, dtype=np.float64).ravel()
    b = np.asarray(demand, dtype=np.float64).ravel()
    c = np.asarray(cost, dtype=np.float64)
    if c.shape != (a.size, b.size):
        raise ValueError(f"cost has shape {c.shape}, expected {(a.size, b.size)}")
    if a.size == 0 or b.size == 0:
        raise ValueError("supply and demand must be nonempty")
    for name, arr in (("supply", a), ("demand", b), ("cost", c)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} must be finite")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("supply and demand must be non-negative")
    sa, sb = math.fsum(a), math.fsum(b)
    if sa <= 0:
        raise ValueError("total supply must be positive")
    if abs(sa - sb) > 1e-9 * max(sa, sb):
        raise ValueError(f"unbalanced problem: supply {sa} != demand {sb}")
    return a, b * (sa / sb), c


def _least_cost_start(a, b, c):
    """Initial basis by the matrix-minimum rule.

    Each allocation crosses out exactly one row or column (both only on the
    final cell), so the n + m - 1 allocated cells form a spanning tree even
    when some of them carry zero flow.
    """
    n, m = a.size, b.size
    flow = np.zeros((n, m))
    basis = []
    ra, rb = a.copy(), b.copy()
    masked = c.copy()
    rows_left, cols_left = n, m
    while True:
        flat = int(np.argmin(masked))
        i, j = divmod(flat, m)
        q = min(ra[i], rb[j])
        flow[i, j] = q
        basis.append((i, j))
        if rows_left == 1 and cols_left == 1:
            break
        if (ra[i] <= rb[j] and rows_left > 1) or cols_left == 1:
            rb[j] -= q
            ra[i] = 0.0
            masked[i, :] = np.inf
            rows_left -= 1
        else:
            ra[i] -= q
            rb[j] = 0.0
            masked[:, j] = np.inf
            cols_left -= 1
    return flow, basis


def _potentials(n, m, cost, row_adj, col_adj):
    u = [None] * n
    v = [None] * m
    u[0] = 0.0
    stack = [(0, True)]
    while stack:
        k, is_row = stack.pop()
        if is_row:
            uk = u[k]
            for j in row_adj[k]:
                if v[j] is None:
                    v[j] = cost[k][j] - uk
                    stack.append((j, False))
        else:
            vk = v[k]
            for i in col_adj[k]:
                if u[i] is None:
                    u[i] = cost[i][k] - vk
                    stack.append((i, True))
    return np.array(u), np.array(v)


def _tree_path(i_start, j_target, row_adj, col_adj):
    """Cells on the tree path from row node ``i_start`` to column node ``j_target``."""
    parent = {("r", i_start): None}
    queue = deque([("r", i_start)])
    goal = ("c", j_target)
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        kind, k = node
        neighbours = [("c", j) for j in row_adj[k]] if kind == "r" else [("r", i) for i in col_adj[k]]
        for nb in neighbours:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    cells = []
    node = goal
    while parent[node] is not None:
        prev = parent[node]
        cells.append((prev[1], node[1]) if prev[0] == "r" else (node[1], prev[1]))
        node = prev
    cells.reverse()
    return cells


def solve_transport(supply, demand, cost, tol: float = 1e-12, max_iter: int | None = None) -> TransportResult:
    a, b, c = _validate(supply, demand, cost)
    n, m = a.size, b.size
    if n == 1 or m == 1:
        # a single source or sink admits exactly one feasible plan
        flow = b.reshape(1, m).copy() if n == 1 else a.reshape(n, 1).copy()
        return TransportResult(math.fsum((flow * c).ravel()), flow, 0)

    flow, basis = _least_cost_start(a, b, c)
    cost_rows = c.tolist()
    row_adj = [set() for _ in range(n)]
    col_adj = [set() for _ in range(m)]
    for i, j in basis:
        row_adj[i].add(j)
        col_adj[j].add(i)

    threshold = -tol * max(1.0, float(np.abs(c).max()))
    if max_iter is None:
        max_iter = 50 * (n + m) * max(n, m) + 1000
    degenerate_run = 0
    bland = False
    it = 0
    for it in range(1, max_iter + 1):
        u, v = _potentials(n, m, cost_rows, row_adj, col_adj)
        reduced = c - u[:, None] - v[None, :]
        if bland:
            candidates = np.flatnonzero(reduced.ravel() < threshold)
            if candidates.size == 0:
                break
            flat = int(candidates[0])
        else:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= threshold:
                break
        ie, je = divmod(flat, m)

        path = _tree_path(ie, je, row_adj, col_adj)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[cell] for cell in minus)
        leaving = min((cell for cell in minus if flow[cell] == theta), key=lambda cell: cell[0] * m + cell[1])

        for cell in plus:
            flow[cell] += theta
        for cell in minus:
            flow[cell] -= theta
        flow[leaving] = 0.0
        flow[ie, je] = theta

        li, lj = leaving
        row_adj[li].discard(lj)
        col_adj[lj].discard(li)
        row_adj[ie].add(je)
        col_adj[je].add(ie)

        if theta == 0.0:
            degenerate_run += 1
            if degenerate_run > n + m:
                bland = True
        else:
            degenerate_run = 0
            bland = False
    else:
        raise RuntimeError(f"transportation simplex did not converge in {max_iter} pivots")

    return TransportResult(math.fsum((flow * c).ravel()), flow, it)
