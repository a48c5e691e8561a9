"""Compiled pivot loop of the transportation simplex.

The basis is stored as parallel arrays ``brow``/``bcol`` of its n + m - 1
cells. Every pivot rebuilds the tree adjacency, recomputes node potentials
by breadth-first search from row node 0, prices all cells, and walks the
entering cell's cycle through the tree.
"""
import numpy as np

from ._jit import njit

OPTIMAL = 0
PIVOT_LIMIT = 1
BROKEN_TREE = 2


@njit(cache=True, nogil=True)
def simplex_pivots(C, flow, brow, bcol, tol, max_pivots, degenerate_limit):
    n, m = C.shape
    N = n + m
    E = brow.shape[0]
    u = np.zeros(n)
    v = np.zeros(m)
    deg = np.zeros(N + 1, dtype=np.int64)
    adj = np.empty(2 * E, dtype=np.int64)
    fill = np.empty(N, dtype=np.int64)
    parent = np.empty(N, dtype=np.int64)
    parent_edge = np.empty(N, dtype=np.int64)
    depth = np.empty(N, dtype=np.int64)
    queue = np.empty(N, dtype=np.int64)
    path = np.empty(N, dtype=np.int64)
    right = np.empty(N, dtype=np.int64)
    degenerate_run = 0
    bland = False

    for pivot in range(max_pivots):
        # CSR adjacency of the basis tree, edges in slot order
        deg[:] = 0
        for e in range(E):
            deg[brow[e] + 1] += 1
            deg[n + bcol[e] + 1] += 1
        for a in range(N):
            deg[a + 1] += deg[a]
        for a in range(N):
            fill[a] = deg[a]
        for e in range(E):
            a = brow[e]
            b = n + bcol[e]
            adj[fill[a]] = e
            fill[a] += 1
            adj[fill[b]] = e
            fill[b] += 1

        # potentials: u_i + v_j = C_ij on basic cells, u_0 = 0
        parent[:] = -2
        parent[0] = -1
        parent_edge[0] = -1
        depth[0] = 0
        u[0] = 0.0
        head = 0
        tail = 1
        queue[0] = 0
        while head < tail:
            a = queue[head]
            head += 1
            for s in range(deg[a], deg[a + 1]):
                e = adj[s]
                b = n + bcol[e] if a < n else brow[e]
                if parent[b] != -2:
                    continue
                parent[b] = a
                parent_edge[b] = e
                depth[b] = depth[a] + 1
                if b >= n:
                    v[b - n] = C[a, b - n] - u[a]
                else:
                    u[b] = C[b, a - n] - v[a - n]
                queue[tail] = b
                tail += 1
        if tail != N:
            return BROKEN_TREE, pivot

        # pricing: Dantzig (most negative, first in row-major order) or Bland
        best = -tol
        ei = -1
        ej = -1
        for i in range(n):
            ui = u[i]
            for j in range(m):
                r = C[i, j] - ui - v[j]
                if r < best:
                    best = r
                    ei = i
                    ej = j
                    if bland:
                        break
            if bland and ei >= 0:
                break
        if ei < 0:
            return OPTIMAL, pivot

        # tree path from row node ei to column node n + ej, as edge slots
        a = ei
        b = n + ej
        nl = 0
        nr = 0
        while depth[a] > depth[b]:
            path[nl] = parent_edge[a]
            nl += 1
            a = parent[a]
        while depth[b] > depth[a]:
            right[nr] = parent_edge[b]
            nr += 1
            b = parent[b]
        while a != b:
            path[nl] = parent_edge[a]
            nl += 1
            a = parent[a]
            right[nr] = parent_edge[b]
            nr += 1
            b = parent[b]
        for s in range(nr - 1, -1, -1):
            path[nl] = right[s]
            nl += 1

        # even positions lose theta, odd positions gain it
        theta = np.inf
        leave = -1
        leave_key = -1
        for s in range(0, nl, 2):
            e = path[s]
            f = flow[brow[e], bcol[e]]
            key = brow[e] * m + bcol[e]
            if f < theta or (f == theta and key < leave_key):
                theta = f
                leave = e
                leave_key = key
        for s in range(nl):
            e = path[s]
            if s % 2 == 0:
                flow[brow[e], bcol[e]] -= theta
            else:
                flow[brow[e], bcol[e]] += theta
        flow[ei, ej] += theta
        flow[brow[leave], bcol[leave]] = 0.0
        brow[leave] = ei
        bcol[leave] = ej

        if theta == 0.0:
            degenerate_run += 1
            if degenerate_run > degenerate_limit:
                bland = True
        else:
            degenerate_run = 0
            bland = False
    return PIVOT_LIMIT, max_pivots
