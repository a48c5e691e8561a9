"""Exact discrete optimal transport, its one-marginal relaxation, and Hausdorff distance.

The exact solver is a primal transportation simplex (the network simplex
specialised to a complete bipartite graph). The basis is a spanning tree on
the n row nodes and m column nodes; node potentials come from a traversal
of the tree, entering cells are priced with Dantzig's rule over the whole
reduced-cost matrix, and ties for the leaving cell go to the lowest
row-major index. Long runs of degenerate pivots switch pricing to Bland's
rule, which cannot cycle.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._simplex import BROKEN_TREE, PIVOT_LIMIT, simplex_pivots

MASS_TOL = 1e-6
MARGINAL_TOL = 1e-8

# running record of every plan returned by solve_exact (per process)
PLAN_AUDIT = {"plans": 0, "max_violation": 0.0}


class TransportError(ValueError):
    pass


@dataclass(frozen=True)
class TransportResult:
    cost: float
    plan: np.ndarray
    pivots: int = 0


@dataclass(frozen=True)
class RelaxedResult:
    cost_keep_p: float
    cost_keep_q: float

    @property
    def value(self):
        return max(self.cost_keep_p, self.cost_keep_q)


def _check_instance(p, q, C):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if p.ndim != 1 or q.ndim != 1:
        raise TransportError("marginals must be 1-D")
    if C.shape != (p.size, q.size):
        raise TransportError(f"cost matrix shape {C.shape} does not match marginals ({p.size}, {q.size})")
    if p.size == 0 or q.size == 0:
        raise TransportError("empty marginal")
    for name, arr in (("p", p), ("q", q)):
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise TransportError(f"{name} must be finite and nonnegative")
    if not np.all(np.isfinite(C)):
        raise TransportError("cost matrix must be finite")
    sp, sq = p.sum(), q.sum()
    if sp <= 0 or sq <= 0:
        raise TransportError("marginals must carry positive mass")
    if abs(sp - sq) > MASS_TOL:
        raise TransportError(f"infeasible normalization: |sum p - sum q| = {abs(sp - sq):.3g}")
    return p / sp, q / sq, C


def _initial_basis(p, q, C):
    """Least-cost-cell starting basis; exactly one line is retired per cell.

    Returns the flow matrix and the list of n + m - 1 basic cells, which form
    a spanning tree (zero-flow basics included).
    """
    n, m = C.shape
    supply = p.copy()
    demand = q.copy()
    row_alive = np.ones(n, dtype=bool)
    col_alive = np.ones(m, dtype=bool)
    rows_left, cols_left = n, m
    flow = np.zeros((n, m))
    basis = []
    order = np.argsort(C, axis=None, kind="stable")
    for flat in order:
        i, j = divmod(int(flat), m)
        if not (row_alive[i] and col_alive[j]):
            continue
        x = min(supply[i], demand[j])
        flow[i, j] = x
        basis.append((i, j))
        supply[i] -= x
        demand[j] -= x
        if rows_left == 1 and cols_left == 1:
            break
        if (supply[i] <= demand[j] and rows_left > 1) or cols_left == 1:
            row_alive[i] = False
            rows_left -= 1
        else:
            col_alive[j] = False
            cols_left -= 1
    return flow, basis


def _simplex(p, q, C, max_pivots=None):
    n, m = C.shape
    flow, basis = _initial_basis(p, q, C)
    if n == 1 or m == 1:
        return flow, 0
    brow = np.array([c[0] for c in basis], dtype=np.int64)
    bcol = np.array([c[1] for c in basis], dtype=np.int64)
    scale = float(np.abs(C).max())
    tol = 1e-12 * scale if scale > 0 else 0.0
    if max_pivots is None:
        max_pivots = 50 * (n + m) * max(n, m) + 1000
    C = np.ascontiguousarray(C)
    status, pivots = simplex_pivots(C, flow, brow, bcol, tol, max_pivots, 2 * (n + m))
    if status == BROKEN_TREE:
        raise TransportError("internal error: basis is not a spanning tree")
    if status == PIVOT_LIMIT:
        raise TransportError(f"simplex did not converge within {max_pivots} pivots")
    return flow, pivots


def solve_exact(p, q, C):
    """Optimal coupling between histograms ``p`` and ``q`` under cost ``C``.

    Inputs are renormalized to unit mass; zero-mass sites are removed before
    solving and come back as zero rows/columns of the plan.
    """
    p, q, C = _check_instance(p, q, C)
    rows = np.flatnonzero(p > 0)
    cols = np.flatnonzero(q > 0)
    sub_p, sub_q = p[rows], q[cols]
    sub_C = C[np.ix_(rows, cols)]
    sub_flow, pivots = _simplex(sub_p, sub_q, sub_C)
    np.maximum(sub_flow, 0.0, out=sub_flow)
    plan = np.zeros(C.shape)
    plan[np.ix_(rows, cols)] = sub_flow
    violation = max(
        float(np.abs(plan.sum(axis=1) - p).max()),
        float(np.abs(plan.sum(axis=0) - q).max()),
    )
    PLAN_AUDIT["plans"] += 1
    PLAN_AUDIT["max_violation"] = max(PLAN_AUDIT["max_violation"], violation)
    if violation > MARGINAL_TOL:
        raise TransportError(f"internal error: plan violates marginals by {violation:.3g}")
    cost = float(np.sum(C * plan))
    return TransportResult(max(cost, 0.0) if np.all(C >= 0) else cost, plan, pivots)


def wasserstein(p, q, D, power=1):
    """W_1 (``power=1``) or W_2 (``power=2``) for base distance matrix ``D``."""
    if power == 1:
        return solve_exact(p, q, D).cost
    if power == 2:
        D = np.asarray(D, dtype=np.float64)
        return math.sqrt(solve_exact(p, q, D * D).cost)
    raise TransportError("power must be 1 or 2")


def relaxed_cost(p, q, C):
    """Closed-form costs with one marginal constraint dropped.

    Keeping ``p`` sends each source site to its cheapest site in the support
    of ``q``; keeping ``q`` is the mirror image.
    """
    p, q, C = _check_instance(p, q, C)
    rows = p > 0
    cols = q > 0
    sub = C[np.ix_(rows, cols)]
    keep_p = float(p[rows] @ sub.min(axis=1))
    keep_q = float(q[cols] @ sub.min(axis=0))
    return RelaxedResult(keep_p, keep_q)


def _hausdorff_matrix(D):
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] == 0 or D.shape[1] == 0:
        raise TransportError("hausdorff distance needs two nonempty sets")
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def hausdorff(X, Y, dist=None):
    """Hausdorff distance between finite site sets ``X`` and ``Y``.

    ``dist`` is a callable on pairs of sites; by default sites are points
    (scalars or vectors) under the Euclidean metric.
    """
    if len(X) == 0 or len(Y) == 0:
        raise TransportError("hausdorff distance needs two nonempty sets")
    if dist is None:
        from .embeddings import euclidean

        Xa = np.asarray(X, dtype=np.float64)
        Ya = np.asarray(Y, dtype=np.float64)
        Xa = Xa.reshape(len(X), -1)
        Ya = Ya.reshape(len(Y), -1)
        return _hausdorff_matrix(euclidean(Xa, Ya))
    D = np.array([[dist(x, y) for y in Y] for x in X], dtype=np.float64)
    return _hausdorff_matrix(D)


ORACLE_MAX_ASSIGNMENT = 6
ORACLE_MAX_VARIABLES = 12


def brute_force_reference(p, q, C):
    """Optimal transport cost by exhaustive enumeration (test oracle).

    Equal-size uniform marginals: minimum over all n! permutation matchings
    (the optimum of the assignment polytope is attained at a permutation).
    Otherwise every basis of the n*m-variable constraint system is solved and
    the cheapest nonnegative vertex is returned; n*m must not exceed 12.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    n, m = C.shape
    if p.shape != (n,) or q.shape != (m,):
        raise TransportError("dimension mismatch")
    p = p / p.sum()
    q = q / q.sum()
    uniform = n == m and np.allclose(p, 1.0 / n, atol=1e-12) and np.allclose(q, 1.0 / m, atol=1e-12)
    if uniform and n <= ORACLE_MAX_ASSIGNMENT:
        best = math.inf
        for perm in itertools.permutations(range(n)):
            best = min(best, sum(C[i, perm[i]] for i in range(n)) / n)
        return float(best)
    if n * m > ORACLE_MAX_VARIABLES:
        raise TransportError("oracle scale exceeded")

    # rows of A: n row-sum constraints then m - 1 column-sum constraints
    # (the last column constraint is implied by total mass)
    A = np.zeros((n + m - 1, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
    for j in range(m - 1):
        A[n + j, j::m] = 1.0
    b = np.concatenate([p, q[:-1]])
    cost = C.ravel()
    rank = n + m - 1
    best = math.inf
    for cols in itertools.combinations(range(n * m), rank):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        x = np.linalg.solve(B, b)
        if np.any(x < -1e-12):
            continue
        best = min(best, float(cost[list(cols)] @ x))
    return best
