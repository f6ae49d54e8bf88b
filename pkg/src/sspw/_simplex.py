"""Numba kernel for the transportation simplex.

The basis is a spanning tree over ``m + n`` nodes (rows first, then
columns). Every non-root node owns the arc to its parent, so a tree arc
can be addressed by its child node during the cycle walks. Costs are
gathered through the ``rows``/``cols`` index maps, so callers hand over the
full ground cost and never build the shrunk sub-matrix themselves.
"""

import numpy as np
from numba import njit

STATUS_OPTIMAL = 0
STATUS_MAX_PIVOTS = 1


@njit(cache=True, nogil=True)
def _link(h, node, head, nxt, prv):
    nxt[h] = head[node]
    prv[h] = -1
    if head[node] != -1:
        prv[head[node]] = h
    head[node] = h


@njit(cache=True, nogil=True)
def _unlink(h, node, head, nxt, prv):
    if prv[h] != -1:
        nxt[prv[h]] = nxt[h]
    else:
        head[node] = nxt[h]
    if nxt[h] != -1:
        prv[nxt[h]] = prv[h]


@njit(cache=True, nogil=True)
def transport_simplex(a, b, C, rows, cols, max_pivots, eps):
    """Solve min <T, C[rows][:, cols]> over couplings of ``a`` and ``b``.

    Returns ``(arc_row, arc_col, arc_flow, status, pivots)`` where the three
    arc arrays describe the ``m + n - 1`` basic cells of the final tree.
    ``eps`` is the absolute reduced-cost threshold for entering arcs.
    """
    m = a.size
    n = b.size
    nn = m + n

    # contiguous copy of the indexed block; pricing reads it m*n times
    cost = np.empty((m, n), np.float64)
    for i in range(m):
        ri = rows[i]
        for j in range(n):
            cost[i, j] = C[ri, cols[j]]
    narcs = nn - 1

    arc_r = np.empty(narcs, np.int64)
    arc_c = np.empty(narcs, np.int64)
    arc_f = np.empty(narcs, np.float64)

    # north-west corner start: a staircase of exactly m + n - 1 cells
    supply = a.copy()
    demand = b.copy()
    i = 0
    j = 0
    for k in range(narcs):
        arc_r[k] = i
        arc_c[k] = j
        if i == m - 1:
            arc_f[k] = demand[j]
            supply[i] -= demand[j]
            j += 1
        elif j == n - 1:
            arc_f[k] = supply[i]
            demand[j] -= supply[i]
            i += 1
        elif supply[i] <= demand[j]:
            arc_f[k] = supply[i]
            demand[j] -= supply[i]
            i += 1
        else:
            arc_f[k] = demand[j]
            supply[i] -= demand[j]
            j += 1

    head = np.full(nn, -1, np.int64)
    nxt = np.empty(2 * narcs, np.int64)
    prv = np.empty(2 * narcs, np.int64)
    for k in range(narcs):
        _link(2 * k, arc_r[k], head, nxt, prv)
        _link(2 * k + 1, m + arc_c[k], head, nxt, prv)

    parent = np.full(nn, -1, np.int64)
    parent_arc = np.full(nn, -1, np.int64)
    depth = np.zeros(nn, np.int64)
    pot = np.zeros(nn, np.float64)
    queue = np.empty(nn, np.int64)

    # potentials from the root (row 0): u_i + v_j = c_ij on tree arcs
    queue[0] = 0
    qh = 0
    qt = 1
    while qh < qt:
        w = queue[qh]
        qh += 1
        h = head[w]
        while h != -1:
            k = h >> 1
            if k != parent_arc[w]:
                if h & 1:
                    t = arc_r[k]
                else:
                    t = m + arc_c[k]
                parent[t] = w
                parent_arc[t] = k
                depth[t] = depth[w] + 1
                pot[t] = cost[arc_r[k], arc_c[k]] - pot[w]
                queue[qt] = t
                qt += 1
            h = nxt[h]

    pot_v = pot[m:]
    total = m * n
    block = max(int(np.sqrt(total)), 16)
    if block > total:
        block = total
    pos = 0
    bland = False
    degenerate_run = 0
    degenerate_cap = nn
    pivots = 0
    status = STATUS_OPTIMAL

    while True:
        # pricing
        e_in = -1
        if bland:
            for idx in range(total):
                ii = idx // n
                jj = idx - ii * n
                r = cost[ii, jj] - pot[ii] - pot[m + jj]
                if r < -eps:
                    e_in = idx
                    break
        else:
            best = -eps
            ii = pos // n
            jj = pos - ii * n
            cnt = 0
            scanned = 0
            while scanned < total:
                # one row segment at a time, clipped to the block and the sweep
                seg = n - jj
                if seg > block - cnt:
                    seg = block - cnt
                if seg > total - scanned:
                    seg = total - scanned
                u = pot[ii]
                for jx in range(jj, jj + seg):
                    r = cost[ii, jx] - u - pot_v[jx]
                    if r < best:
                        best = r
                        e_in = ii * n + jx
                scanned += seg
                cnt += seg
                jj += seg
                if jj == n:
                    jj = 0
                    ii += 1
                    if ii == m:
                        ii = 0
                if cnt == block:
                    if e_in >= 0:
                        break
                    cnt = 0
            pos = ii * n + jj
        if e_in < 0:
            break
        if pivots >= max_pivots:
            status = STATUS_MAX_PIVOTS
            break
        pivots += 1

        ei = e_in // n
        ej = e_in - ei * n

        # cycle walk: arcs at even distance from either endpoint lose flow
        x = ei
        y = m + ej
        dx = 0
        dy = 0
        theta = np.inf
        leave_node = -1
        leave_idx = total
        leave_side = 0
        while x != y:
            if depth[x] >= depth[y]:
                if dx % 2 == 0:
                    k = parent_arc[x]
                    f = arc_f[k]
                    idx = arc_r[k] * n + arc_c[k]
                    if f < theta or (f == theta and idx < leave_idx):
                        theta = f
                        leave_idx = idx
                        leave_node = x
                        leave_side = 0
                dx += 1
                x = parent[x]
            else:
                if dy % 2 == 0:
                    k = parent_arc[y]
                    f = arc_f[k]
                    idx = arc_r[k] * n + arc_c[k]
                    if f < theta or (f == theta and idx < leave_idx):
                        theta = f
                        leave_idx = idx
                        leave_node = y
                        leave_side = 1
                dy += 1
                y = parent[y]

        if theta > 0.0:
            degenerate_run = 0
            bland = False
            x = ei
            y = m + ej
            dx = 0
            dy = 0
            while x != y:
                if depth[x] >= depth[y]:
                    k = parent_arc[x]
                    if dx % 2 == 0:
                        arc_f[k] -= theta
                    else:
                        arc_f[k] += theta
                    dx += 1
                    x = parent[x]
                else:
                    k = parent_arc[y]
                    if dy % 2 == 0:
                        arc_f[k] -= theta
                    else:
                        arc_f[k] += theta
                    dy += 1
                    y = parent[y]
        else:
            degenerate_run += 1
            if degenerate_run > degenerate_cap:
                bland = True

        # swap the leaving arc for the entering one and re-hang the subtree
        k_out = parent_arc[leave_node]
        _unlink(2 * k_out, arc_r[k_out], head, nxt, prv)
        _unlink(2 * k_out + 1, m + arc_c[k_out], head, nxt, prv)
        arc_r[k_out] = ei
        arc_c[k_out] = ej
        arc_f[k_out] = theta
        _link(2 * k_out, ei, head, nxt, prv)
        _link(2 * k_out + 1, m + ej, head, nxt, prv)

        if leave_side == 0:
            sub = ei
            other = m + ej
        else:
            sub = m + ej
            other = ei
        cij = cost[ei, ej]
        parent[sub] = other
        parent_arc[sub] = k_out
        depth[sub] = depth[other] + 1
        pot[sub] = cij - pot[other]
        queue[0] = sub
        qh = 0
        qt = 1
        while qh < qt:
            w = queue[qh]
            qh += 1
            h = head[w]
            while h != -1:
                k = h >> 1
                if k != parent_arc[w]:
                    if h & 1:
                        t = arc_r[k]
                    else:
                        t = m + arc_c[k]
                    parent[t] = w
                    parent_arc[t] = k
                    depth[t] = depth[w] + 1
                    pot[t] = cost[arc_r[k], arc_c[k]] - pot[w]
                    queue[qt] = t
                    qt += 1
                h = nxt[h]

    return arc_r, arc_c, arc_f, status, pivots
