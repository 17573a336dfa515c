"""Undirected graphs, Laplacians and the spectral machinery built on them.

Node indices are 0-based here; files and CLI output use 1-based agent numbers.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GraphError

SYMMETRY_TOL = 1e-10
ZERO_EIG_REL_TOL = 1e-9


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    Use :func:`build_graph` to construct one; it validates and normalizes
    the edge list so that every edge is stored once as ``(i, j)`` with
    ``i < j``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    _neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "_neighbors", tuple(tuple(sorted(v)) for v in nbrs))

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        a.flags.writeable = False
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.array([len(v) for v in self._neighbors], dtype=float)
        d.flags.writeable = False
        return d

    @cached_property
    def laplacian(self) -> np.ndarray:
        lap = np.diag(self.degrees) - self.adjacency
        lap.flags.writeable = False
        return lap

    @cached_property
    def spectrum(self) -> SpectralData:
        return spectrum(self.laplacian)

    @cached_property
    def pinv(self) -> np.ndarray:
        return laplacian_pseudoinverse(self.laplacian, self)


def build_graph(n: int, edges) -> Graph:
    """Validate ``edges`` (0-based pairs) and return a :class:`Graph`."""
    if int(n) != n or n < 1:
        raise GraphError(f"node count must be a positive integer, got {n!r}")
    n = int(n)
    seen: set[tuple[int, int]] = set()
    for edge in edges:
        if len(edge) != 2:
            raise GraphError(f"edge {edge!r} is not a pair")
        i, j = (int(v) for v in edge)
        if i == j:
            raise GraphError(f"self-loop at node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}) has an endpoint outside [0, {n})")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphError(f"duplicate edge ({i}, {j})")
        seen.add(key)
    return Graph(n, tuple(sorted(seen)))


def laplacian(g: Graph) -> np.ndarray:
    """Return ``L = D - A`` (a read-only cached array)."""
    return g.laplacian


def is_connected(g: Graph) -> bool:
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in g.neighbors(i):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == g.n


def spectrum(m) -> SpectralData:
    """Eigen-decomposition of a real symmetric matrix, eigenvalues ascending."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(m)
    return SpectralData(vals, vecs)


def laplacian_pseudoinverse(lap, g: Graph) -> np.ndarray:
    """Moore-Penrose inverse of a connected graph's Laplacian.

    Eigenvalues below ``1e-9 * lambda_max`` are treated as the kernel and
    dropped. Exactly one eigenvalue (the one paired with the all-ones
    vector) is dropped for a connected graph.
    """
    if not is_connected(g):
        raise GraphError("pseudoinverse identity requires a connected graph")
    sd = spectrum(lap)
    lam_max = sd.eigenvalues[-1] if sd.eigenvalues.size else 0.0
    cutoff = ZERO_EIG_REL_TOL * max(lam_max, 0.0)
    keep = sd.eigenvalues > cutoff
    q = sd.eigenvectors[:, keep]
    pinv = (q / sd.eigenvalues[keep]) @ q.T
    pinv = 0.5 * (pinv + pinv.T)
    pinv.flags.writeable = False
    return pinv


def f_matrix_min_eig(lap, k) -> float:
    """Smallest eigenvalue of ``L + K`` for a nonnegative diagonal ``K``.

    ``k`` may be the diagonal matrix or just its diagonal.
    """
    k = np.asarray(k, dtype=float)
    kdiag = np.diag(k) if k.ndim == 2 else k
    if np.any(kdiag < 0):
        raise ValueError("K must be nonnegative")
    return float(spectrum(np.asarray(lap) + np.diag(kdiag)).eigenvalues[0])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def grid_graph(rows: int, cols: int) -> Graph:
    """4-neighbor lattice, nodes numbered row-major."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return build_graph(rows * cols, edges)


def random_connected_graph(n: int, rng: np.random.Generator, p: float = 0.3) -> Graph:
    """Random spanning tree plus independent extra edges with probability ``p``."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        a = int(order[k])
        b = int(order[rng.integers(0, k)])
        edges.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < p:
                edges.add((i, j))
    return build_graph(n, sorted(edges))
