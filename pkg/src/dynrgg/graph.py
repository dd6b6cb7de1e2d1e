"""Random geometric graphs on the torus: construction, components, census."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import MIN_CELLS_PER_AXIS, as_points, grid_cells, pairs_within, torus_distance


@dataclass(frozen=True)
class Graph:
    """Undirected RGG in CSR form; ``neighbors(i)`` is sorted ascending."""

    n: int
    r: float
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_pairs(cls, n, r, ei, ej):
        indptr, indices = _kernels.csr_from_pairs(
            int(n), np.ascontiguousarray(ei, dtype=np.int64), np.ascontiguousarray(ej, dtype=np.int64))
        return cls(n, r, indptr, indices)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(i, int(j)) for i in range(self.n) for j in self.neighbors(i) if j > i]


def build_rgg(points, r: float) -> Graph:
    pts = as_points(points)
    ei, ej = pairs_within(pts, r)
    return Graph.from_pairs(len(pts), float(r), ei, ej)


@dataclass(frozen=True)
class ComponentLabeling:
    root: np.ndarray
    sizes: dict[int, int]

    @property
    def n(self) -> int:
        return len(self.root)

    @property
    def component_count(self) -> int:
        return len(self.sizes)

    def members(self) -> dict[int, np.ndarray]:
        """Component root -> sorted member indices."""
        order = np.argsort(self.root, kind="stable")
        roots, starts = np.unique(self.root[order], return_index=True)
        return {int(rt): part for rt, part in zip(roots, np.split(order, starts[1:]))}


def connected_components(g: Graph) -> ComponentLabeling:
    src = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    keep = src < g.indices
    root, size = _kernels.union_find(g.n, src[keep], g.indices[keep])
    roots = np.unique(root)
    return ComponentLabeling(root, {int(rt): int(size[rt]) for rt in roots})


def is_connected(labeling: ComponentLabeling) -> bool:
    return labeling.component_count <= 1


def count_isolated(labeling: ComponentLabeling) -> int:
    return sum(1 for s in labeling.sizes.values() if s == 1)


def isolated_vertices(g: Graph) -> np.ndarray:
    return np.flatnonzero(g.degrees() == 0)


def unwrap_component(points, members, r: float):
    """Lift one connected component from the torus to the plane.

    BFS starts at the lowest-index member, which keeps its torus coordinates;
    every other member is placed at the wrap-consistent offset from its BFS
    parent. Returns ``(coords, ok)`` where ``coords`` is a ``(k, 2)`` array in
    member order and ``ok`` is False when the component winds around the
    torus (an edge contradicts the lift, or the lifted extent reaches 1).
    """
    pts = as_points(points)
    members = np.sort(np.asarray(members, dtype=np.int64))
    if len(members) == 0:
        return np.empty((0, 2)), True
    sub = build_rgg(pts[members], r)
    ux, uy, origin, winds = _kernels.unwrap_bfs(
        np.ascontiguousarray(pts[members, 0]), np.ascontiguousarray(pts[members, 1]),
        sub.indptr, sub.indices)
    if np.any(origin != 0):
        raise ValueError("members do not form a single connected component")
    coords = np.column_stack([ux, uy])
    extent = coords.max(axis=0) - coords.min(axis=0)
    ok = not winds[0] and bool(np.all(extent < 1.0))
    return coords, ok


@dataclass
class CensusReport:
    """Component counts for one snapshot.

    ``k_tilde_ell`` excludes the largest component, standing in for the
    single solitary (giant) component, which has no finite-n definition.
    """

    n: int
    k1: int
    k_ell: dict[int, int]
    k_prime: dict[int, int]
    k_tilde_ell: dict[int, int]
    largest_size: int
    epsilon: float
    non_embeddable_count: int
    component_count: int = 0
    notes: list[str] = field(default_factory=lambda: ["solitary ~ largest component (proxy)"])


def component_census(points, labeling: ComponentLabeling, r: float,
                     epsilon: float = 0.25, ell_max: int = 4, graph: Graph | None = None) -> CensusReport:
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if ell_max < 2:
        raise ValueError("ell_max must be at least 2")
    pts = as_points(points)
    n = len(pts)
    if graph is None:
        graph = build_rgg(pts, r)
    k_ell = Counter(labeling.sizes.values())
    k_prime = {ell: 0 for ell in range(1, ell_max + 1)}
    if n == 0:
        return CensusReport(0, 0, {}, k_prime, {ell: 0 for ell in k_prime}, 0, epsilon, 0, 0)

    # BFS origin of each vertex is the minimal index of its component
    ux, uy, origin, winds = _kernels.unwrap_bfs(
        np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
        graph.indptr, graph.indices)
    comp_ids, comp_sizes = np.unique(origin, return_counts=True)
    largest_size = int(comp_sizes.max())

    w_all, h_all = _kernels.component_extents(origin, ux, uy)
    w = w_all[comp_ids]
    h = h_all[comp_ids]
    side = 1.0 - 2.0 * r
    embeddable = ~winds[comp_ids] & (w <= side) & (h <= side)
    non_embeddable = int(np.count_nonzero(~embeddable))

    small = comp_ids[comp_sizes <= ell_max]
    if len(small):
        order = np.argsort(origin, kind="stable")
        starts = np.searchsorted(origin[order], small)
        sizes = comp_sizes[comp_sizes <= ell_max]
        for st, ell in zip(starts, sizes):
            idx = order[st:st + ell]
            # leftmost on lifted coordinates: min x, then min y, then index
            lead = idx[np.lexsort((idx, uy[idx], ux[idx]))[0]]
            if all(torus_distance(pts[lead], pts[j]) <= epsilon * r for j in idx):
                k_prime[int(ell)] += 1

    k_tilde = {}
    for ell in range(1, ell_max + 1):
        total = sum(cnt for size, cnt in k_ell.items() if size >= ell)
        k_tilde[ell] = total - (1 if largest_size >= ell else 0)
    return CensusReport(
        n=n,
        k1=k_ell.get(1, 0),
        k_ell=dict(sorted(k_ell.items())),
        k_prime=k_prime,
        k_tilde_ell=k_tilde,
        largest_size=largest_size,
        epsilon=epsilon,
        non_embeddable_count=non_embeddable,
        component_count=labeling.component_count,
    )


def bfs_components(g: Graph) -> list[list[int]]:
    """Plain BFS partition, sorted by minimal member; a reference for tests and debugging."""
    seen = np.zeros(g.n, dtype=bool)
    parts = []
    for v in range(g.n):
        if seen[v]:
            continue
        seen[v] = True
        part, queue = [v], deque([v])
        while queue:
            u = queue.popleft()
            for w in g.neighbors(u):
                if not seen[w]:
                    seen[w] = True
                    part.append(int(w))
                    queue.append(w)
        parts.append(sorted(part))
    return parts


def snapshot_connectivity(xs: np.ndarray, ys: np.ndarray, r: float):
    """Isolation mask and connectivity of one snapshot, skipping census work.

    A snapshot with an isolated vertex (and n > 1) is disconnected without
    running union-find.
    """
    n = xs.shape[0]
    ei, ej = _raw_pairs(xs, ys, r)
    deg = np.bincount(ei, minlength=n) + np.bincount(ej, minlength=n)
    iso = deg == 0
    if n <= 1:
        return iso, True
    if iso.any():
        return iso, False
    root, _ = _kernels.union_find(n, ei, ej)
    return iso, bool(np.all(root == root[0]))


def _raw_pairs(xs, ys, r):
    m = grid_cells(r, len(xs))
    if m >= MIN_CELLS_PER_AXIS:
        return _kernels.grid_pairs(xs, ys, r, m)
    return _kernels.brute_pairs(xs, ys, r)
