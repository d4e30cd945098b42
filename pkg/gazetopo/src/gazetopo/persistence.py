"""Vietoris-Rips persistence in homology dimensions 0 and 1 over Z/2.

Two engines live here:

* ``rips_h0`` / ``rips_h1`` - the production path. H0 is read off a Kruskal
  union-find pass over the sorted edges. H1 reduces triangle columns only:
  edge columns are cleared because every edge is either a spanning-tree edge
  (negative, already paired by H0) or becomes the pivot of a triangle column.
  Triangles are generated per edge, in edge order, as the cofaces for which
  that edge is the latest face, and reduction stops for the batch as soon as
  no 1-cycle is alive.
* ``oracle_persistence`` - enumerates every simplex, builds the full boundary
  matrix and runs the textbook left-to-right reduction. Slow on purpose and
  only used to check the fast path.

Filtration order is (value, dimension, lexicographic vertices). The diagrams
are multisets and do not depend on how ties are broken; bars are sorted before
serialization so output is reproducible.

Zero-length bars (birth == death) are never emitted.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .embed import PointCloud
from .errors import InputError, InvariantError, OracleLimitError

__all__ = [
    "DistanceMatrix",
    "PersistenceDiagram",
    "UnionFind",
    "pairwise_distances",
    "rips_h0",
    "rips_h1",
    "compute_diagrams",
    "oracle_persistence",
    "ORACLE_MAX_POINTS",
]

logger = logging.getLogger(__name__)

ORACLE_MAX_POINTS = 14


# ============================
# Distances
# ============================

@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric distances in compressed lower-triangular order.

    Entry (i, j) with i > j lives at ``i * (i - 1) // 2 + j``, so the pairs
    run (1,0), (2,0), (2,1), (3,0), ...
    """

    n: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.float64).reshape(-1)
        if self.n < 1:
            raise InputError("distance matrix needs at least one point")
        if entries.shape[0] != self.n * (self.n - 1) // 2:
            raise InputError(f"expected {self.n * (self.n - 1) // 2} entries for n={self.n}, got {entries.shape[0]}")
        if not np.all(np.isfinite(entries)) or np.any(entries < 0):
            raise InputError("distances must be finite and non-negative")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __call__(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if i < j:
            i, j = j, i
        return float(self.entries[i * (i - 1) // 2 + j])

    def pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """(low, high) vertex arrays aligned with ``entries``, low < high."""
        high, low = np.tril_indices(self.n, -1)
        return low, high

    def square(self) -> np.ndarray:
        full = np.zeros((self.n, self.n))
        low, high = self.pairs()
        full[high, low] = self.entries
        full[low, high] = self.entries
        return full

    def diameter(self) -> float:
        return float(self.entries.max()) if self.entries.size else 0.0

    @staticmethod
    def from_square(matrix: np.ndarray) -> "DistanceMatrix":
        matrix = np.asarray(matrix, dtype=np.float64)
        n = matrix.shape[0]
        high, low = np.tril_indices(n, -1)
        return DistanceMatrix(n=n, entries=matrix[high, low])


def pairwise_distances(cloud: PointCloud) -> DistanceMatrix:
    """Euclidean distances, one computation per unordered pair."""
    points = cloud.points
    high, low = np.tril_indices(len(cloud), -1)
    deltas = points[high] - points[low]
    return DistanceMatrix(n=len(cloud), entries=np.sqrt(np.einsum("ij,ij->i", deltas, deltas)))


# ============================
# Diagrams
# ============================

@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    dim: int
    bars: np.ndarray

    def __post_init__(self) -> None:
        bars = np.array(self.bars, dtype=np.float64).reshape(-1, 2)
        if self.dim not in (0, 1):
            raise InvariantError(f"homology dimension must be 0 or 1, got {self.dim}")
        if np.any(np.isnan(bars)) or np.any(~np.isfinite(bars[:, 0])):
            raise InvariantError("births must be finite")
        if np.any(bars[:, 1] <= bars[:, 0]):
            raise InvariantError("every bar must die strictly after it is born")
        order = np.lexsort((bars[:, 1], bars[:, 0]))
        bars = bars[order]
        bars.setflags(write=False)
        object.__setattr__(self, "bars", bars)

    def __len__(self) -> int:
        return int(self.bars.shape[0])

    @property
    def births(self) -> np.ndarray:
        return self.bars[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.bars[:, 1]

    def finite(self) -> np.ndarray:
        return self.bars[np.isfinite(self.bars[:, 1])]

    def infinite_count(self) -> int:
        return int(np.sum(np.isinf(self.bars[:, 1])))

    def to_dict(self) -> dict:
        return {
            "dim": int(self.dim),
            "bars": [[_encode(b), _encode(d)] for b, d in self.bars],
        }

    @staticmethod
    def from_dict(data: dict) -> "PersistenceDiagram":
        bars = [[_decode(b), _decode(d)] for b, d in data["bars"]]
        return PersistenceDiagram(dim=int(data["dim"]), bars=np.array(bars, dtype=np.float64).reshape(-1, 2))


def _encode(value: float):
    if math.isinf(value):
        return "inf"
    # write_json renders 17 significant digits
    return float(value)


def _decode(value) -> float:
    return math.inf if value == "inf" else float(value)


def _diagram(dim: int, bars: Sequence[Tuple[float, float]]) -> PersistenceDiagram:
    kept = [(b, d) for b, d in bars if d > b]
    return PersistenceDiagram(dim=dim, bars=np.array(kept, dtype=np.float64).reshape(-1, 2))


# ============================
# Filtration helpers
# ============================

class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int) -> None:
        self._parent = list(range(n))
        self._size = [1] * n

    def find(self, item: int) -> int:
        parent = self._parent
        while parent[item] != item:
            parent[item] = parent[parent[item]]
            item = parent[item]
        return item

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if they were already joined."""
        root_a, root_b = self.find(a), self.find(b)
        if root_a == root_b:
            return False
        if self._size[root_a] < self._size[root_b]:
            root_a, root_b = root_b, root_a
        self._parent[root_b] = root_a
        self._size[root_a] += self._size[root_b]
        return True


@dataclass(frozen=True)
class _EdgeFiltration:
    low: np.ndarray
    high: np.ndarray
    values: np.ndarray
    negative: np.ndarray  # spanning-tree edges: they merge two components


def _edge_filtration(dist: DistanceMatrix) -> _EdgeFiltration:
    low, high = dist.pairs()
    order = np.lexsort((high, low, dist.entries))
    low, high, values = low[order], high[order], dist.entries[order]
    forest = UnionFind(dist.n)
    negative = np.fromiter(
        (forest.union(int(a), int(b)) for a, b in zip(low, high)), dtype=bool, count=low.shape[0]
    )
    return _EdgeFiltration(low=low, high=high, values=values, negative=negative)


# ============================
# Fast path
# ============================

def rips_h0(dist: DistanceMatrix) -> PersistenceDiagram:
    """Births 0, finite deaths = minimum spanning tree edge weights, one infinite bar."""
    edges = _edge_filtration(dist)
    deaths = edges.values[edges.negative]
    if deaths.shape[0] != dist.n - 1:
        raise InvariantError(f"spanning tree has {deaths.shape[0]} edges for {dist.n} points")
    bars = [(0.0, float(d)) for d in deaths]
    bars.append((0.0, math.inf))
    return _diagram(0, bars)


def rips_h1(dist: DistanceMatrix, threshold: Optional[float] = None) -> PersistenceDiagram:
    """H1 of the Rips 2-skeleton with simplices up to ``threshold`` (default: diameter).

    Classes still alive at ``threshold`` come back with death = inf.
    """
    n = dist.n
    if n < 3:
        logger.warning("H1 requested on %d point(s): no triangles, returning an empty diagram", n)
        return _diagram(1, [])
    if threshold is None:
        threshold = dist.diameter()
        if threshold == 0.0:
            # coincident points: every edge is born dead
            return _diagram(1, [])
    if not threshold > 0:
        raise InputError(f"threshold must be positive, got {threshold}")

    edges = _edge_filtration(dist)
    edge_count = int(np.searchsorted(edges.values, threshold, side="right"))

    # rank[i, j] = filtration position of edge {i, j}; the sentinel keeps the
    # diagonal and edges above threshold out of every coface query
    sentinel = edges.values.shape[0] + 1
    rank = np.full((n, n), sentinel, dtype=np.int64)
    positions = np.arange(edges.values.shape[0], dtype=np.int64)
    rank[edges.low, edges.high] = positions
    rank[edges.high, edges.low] = positions

    reduced: Dict[int, Set[int]] = {}
    alive: Set[int] = set()
    bars: List[Tuple[float, float]] = []

    for edge in range(edge_count):
        if edges.negative[edge]:
            continue
        alive.add(edge)
        i, j = int(edges.low[edge]), int(edges.high[edge])
        row_i, row_j = rank[i], rank[j]
        cofaces = np.flatnonzero((row_i < edge) & (row_j < edge))
        for k in cofaces:
            if not alive:
                # every remaining column reduces to zero
                break
            column = {edge, int(row_i[k]), int(row_j[k])}
            pivot = edge
            while column:
                pivot = max(column)
                other = reduced.get(pivot)
                if other is None:
                    break
                column ^= other
            if not column:
                continue
            if pivot not in alive:
                raise InvariantError(f"triangle column pivots on edge {pivot}, which is not an open cycle")
            reduced[pivot] = column
            alive.discard(pivot)
            bars.append((float(edges.values[pivot]), float(edges.values[edge])))

    bars.extend((float(edges.values[e]), math.inf) for e in sorted(alive))
    return _diagram(1, bars)


def compute_diagrams(
    cloud: PointCloud, *, threshold: Optional[float] = None
) -> Tuple[PersistenceDiagram, PersistenceDiagram]:
    """(D0, D1); by default H1 is built to the cloud diameter so no loop survives."""
    dist = pairwise_distances(cloud)
    diameter = dist.diameter()
    d0 = rips_h0(dist)
    if dist.n < 3 or diameter == 0.0:
        d1 = _diagram(1, [])
    else:
        d1 = rips_h1(dist, diameter if threshold is None else threshold)
    return d0, d1


# ============================
# Oracle
# ============================

def oracle_persistence(dist: DistanceMatrix, max_dim: int = 1) -> List[PersistenceDiagram]:
    """Diagrams for dimensions 0..max_dim from the full, unoptimised boundary matrix."""
    n = dist.n
    if n > ORACLE_MAX_POINTS:
        raise OracleLimitError(f"oracle enumerates every simplex; n={n} exceeds {ORACLE_MAX_POINTS}")
    if max_dim not in (0, 1):
        raise InputError(f"max_dim must be 0 or 1, got {max_dim}")

    simplices = []
    for size in range(1, max_dim + 3):
        for vertices in itertools.combinations(range(n), size):
            value = max((dist(a, b) for a, b in itertools.combinations(vertices, 2)), default=0.0)
            simplices.append((value, size - 1, vertices))
    simplices.sort()
    position = {vertices: index for index, (_, _, vertices) in enumerate(simplices)}

    columns: List[Set[int]] = []
    for _, dim, vertices in simplices:
        if dim == 0:
            columns.append(set())
        else:
            columns.append({position[face] for face in itertools.combinations(vertices, dim)})

    lows = [-1] * len(columns)
    for j, column in enumerate(columns):
        while column:
            low = max(column)
            earlier = next((k for k in range(j) if lows[k] == low), None)
            if earlier is None:
                break
            column ^= columns[earlier]
        lows[j] = max(column) if column else -1

    bars: Dict[int, List[Tuple[float, float]]] = {p: [] for p in range(max_dim + 1)}
    killed = {low for low in lows if low >= 0}
    for j, (value, dim, _) in enumerate(simplices):
        if lows[j] >= 0:
            birth_value, birth_dim, _ = simplices[lows[j]]
            if birth_dim <= max_dim:
                bars[birth_dim].append((birth_value, value))
        elif j not in killed and dim <= max_dim:
            bars[dim].append((value, math.inf))
    return [_diagram(p, bars[p]) for p in range(max_dim + 1)]
