"""Compiled inner loops: cell-grid pair search, union-find and BFS unwrapping.

Everything here works on flat float64/int64 arrays so the public modules can
stay plain numpy.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _torus_dist(ax, ay, bx, by):
    dx = abs(ax - bx)
    if dx > 0.5:
        dx = 1.0 - dx
    dy = abs(ay - by)
    if dy > 0.5:
        dy = 1.0 - dy
    return math.sqrt(dx * dx + dy * dy)


@njit(cache=True, inline="always")
def _within(ax, ay, bx, by, r, lo2, hi2):
    """Same verdict as ``_torus_dist(...) <= r``, skipping the sqrt off the rim."""
    dx = abs(ax - bx)
    if dx > 0.5:
        dx = 1.0 - dx
    dy = abs(ay - by)
    if dy > 0.5:
        dy = 1.0 - dy
    d2 = dx * dx + dy * dy
    if d2 < lo2:
        return True
    if d2 > hi2:
        return False
    return math.sqrt(d2) <= r


@njit(cache=True)
def bucket_points(xs, ys, m):
    """Counting sort of points into an m x m grid.

    Returns (cell_of_point, cell_start, order) where the points of cell c are
    order[cell_start[c]:cell_start[c + 1]] in ascending index order.
    """
    n = xs.shape[0]
    cell = np.empty(n, dtype=np.int64)
    counts = np.zeros(m * m + 1, dtype=np.int64)
    for i in range(n):
        cx = int(xs[i] * m)
        cy = int(ys[i] * m)
        if cx >= m:
            cx = m - 1
        if cy >= m:
            cy = m - 1
        c = cx * m + cy
        cell[i] = c
        counts[c + 1] += 1
    start = np.cumsum(counts)
    fill = start[:-1].copy()
    order = np.empty(n, dtype=np.int64)
    for i in range(n):
        c = cell[i]
        order[fill[c]] = i
        fill[c] += 1
    return cell, start, order


_OFFX = np.array([0, 1, 1, 1, 0], dtype=np.int64)
_OFFY = np.array([0, -1, 0, 1, 1], dtype=np.int64)


@njit(cache=True)
def grid_pairs(xs, ys, r, m):
    """All pairs (i, j), i < j, with torus distance <= r, using an m x m grid.

    Requires m >= 3 and 1/m >= r. Points are visited in cell order and each
    cell is paired with itself and four forward neighbours (a half stencil),
    so every unordered cell pair is examined exactly once. Output is not
    sorted.
    """
    cell, start, order = bucket_points(xs, ys, m)
    sx = xs[order]
    sy = ys[order]
    # candidate count bounds the output, so no reallocation in the hot loop
    cap = 0
    for cx in range(m):
        for cy in range(m):
            c = cx * m + cy
            na = start[c + 1] - start[c]
            cap += na * (na - 1) // 2
            for t in range(1, 5):
                nc = ((cx + _OFFX[t]) % m) * m + (cy + _OFFY[t]) % m
                cap += na * (start[nc + 1] - start[nc])
    ei = np.empty(cap, dtype=np.int64)
    ej = np.empty(cap, dtype=np.int64)
    lo2 = r * r * (1.0 - 1e-9)
    hi2 = r * r * (1.0 + 1e-9)
    k = 0
    for cx in range(m):
        for cy in range(m):
            c = cx * m + cy
            a0 = start[c]
            a1 = start[c + 1]
            for t in range(5):
                nc = ((cx + _OFFX[t]) % m) * m + (cy + _OFFY[t]) % m
                b1 = start[nc + 1]
                for a in range(a0, a1):
                    xa = sx[a]
                    ya = sy[a]
                    b0 = a + 1 if t == 0 else start[nc]
                    for b in range(b0, b1):
                        if _within(xa, ya, sx[b], sy[b], r, lo2, hi2):
                            i = order[a]
                            j = order[b]
                            ei[k] = min(i, j)
                            ej[k] = max(i, j)
                            k += 1
    return ei[:k].copy(), ej[:k].copy()


@njit(cache=True)
def _brute_count(xs, ys, r):
    n = xs.shape[0]
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if _torus_dist(xs[i], ys[i], xs[j], ys[j]) <= r:
                k += 1
    return k


@njit(cache=True)
def brute_pairs(xs, ys, r):
    """Reference O(n^2) scan; counts first so the fill loop never reallocates."""
    n = xs.shape[0]
    k = _brute_count(xs, ys, r)
    ei = np.empty(k, dtype=np.int64)
    ej = np.empty(k, dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if _torus_dist(xs[i], ys[i], xs[j], ys[j]) <= r:
                ei[k] = i
                ej[k] = j
                k += 1
    return ei, ej


@njit(cache=True)
def csr_from_pairs(n, ei, ej):
    """Symmetric CSR adjacency from undirected pairs, rows sorted ascending."""
    indptr = np.zeros(n + 1, dtype=np.int64)
    for k in range(ei.shape[0]):
        indptr[ei[k] + 1] += 1
        indptr[ej[k] + 1] += 1
    for i in range(n):
        indptr[i + 1] += indptr[i]
    fill = indptr[:-1].copy()
    indices = np.empty(indptr[n], dtype=np.int64)
    for k in range(ei.shape[0]):
        a = ei[k]
        b = ej[k]
        indices[fill[a]] = b
        fill[a] += 1
        indices[fill[b]] = a
        fill[b] += 1
    # rows are short (mean degree ~ log n), insertion sort is fine
    for i in range(n):
        for p in range(indptr[i] + 1, indptr[i + 1]):
            v = indices[p]
            q = p - 1
            while q >= indptr[i] and indices[q] > v:
                indices[q + 1] = indices[q]
                q -= 1
            indices[q + 1] = v
    return indptr, indices


@njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def union_find(n, ei, ej):
    """Union by size with path compression; returns (root, size_of_root).

    Size ties attach the larger-index root below the smaller one, so the
    result depends only on the (sorted) edge order.
    """
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for k in range(ei.shape[0]):
        a = _find(parent, ei[k])
        b = _find(parent, ej[k])
        if a == b:
            continue
        if size[a] < size[b] or (size[a] == size[b] and a > b):
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    root = np.empty(n, dtype=np.int64)
    for i in range(n):
        root[i] = _find(parent, i)
    return root, size


@njit(cache=True)
def unwrap_bfs(xs, ys, indptr, indices):
    """Lift every component to the plane by BFS from its lowest-index vertex.

    Each newly reached vertex is placed at its parent's planar position plus
    the wrap-consistent offset (per axis in (-1/2, 1/2]). Returns planar
    coordinates, the BFS origin of every vertex, and a per-vertex flag set on
    the origin when some edge of the component disagrees with the lift by a
    lattice vector (the component winds around the torus).
    """
    n = xs.shape[0]
    ux = np.empty(n)
    uy = np.empty(n)
    origin = np.full(n, -1, dtype=np.int64)
    winds = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    for v0 in range(n):
        if origin[v0] >= 0:
            continue
        origin[v0] = v0
        ux[v0] = xs[v0]
        uy[v0] = ys[v0]
        head = 0
        tail = 1
        queue[0] = v0
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                dx = xs[w] - xs[u]
                dx -= math.ceil(dx - 0.5)
                dy = ys[w] - ys[u]
                dy -= math.ceil(dy - 0.5)
                px = ux[u] + dx
                py = uy[u] + dy
                if origin[w] < 0:
                    origin[w] = v0
                    ux[w] = px
                    uy[w] = py
                    queue[tail] = w
                    tail += 1
                elif abs(ux[w] - px) > 0.5 or abs(uy[w] - py) > 0.5:
                    winds[v0] = True
    return ux, uy, origin, winds


@njit(cache=True)
def component_extents(origin, ux, uy):
    """Per-origin lifted bounding-box width and height (zero for non-origins)."""
    n = origin.shape[0]
    lo_x = np.full(n, np.inf)
    hi_x = np.full(n, -np.inf)
    lo_y = np.full(n, np.inf)
    hi_y = np.full(n, -np.inf)
    for i in range(n):
        o = origin[i]
        lo_x[o] = min(lo_x[o], ux[i])
        hi_x[o] = max(hi_x[o], ux[i])
        lo_y[o] = min(lo_y[o], uy[i])
        hi_y[o] = max(hi_y[o], uy[i])
    w = np.zeros(n)
    h = np.zeros(n)
    for i in range(n):
        if origin[i] == i:
            w[i] = hi_x[i] - lo_x[i]
            h[i] = hi_y[i] - lo_y[i]
    return w, h


@njit(cache=True)
def advance(xs, ys, dx, dy):
    n = xs.shape[0]
    nx = np.empty(n)
    ny = np.empty(n)
    for i in range(n):
        v = xs[i] + dx[i]
        v -= math.floor(v)
        if v >= 1.0:
            v = 0.0
        nx[i] = v
        v = ys[i] + dy[i]
        v -= math.floor(v)
        if v >= 1.0:
            v = 0.0
        ny[i] = v
    return nx, ny
