"""Finite-box lattice geometry: vertex/edge indexing, norms, and path primitives.

The graph is the d-dimensional integer lattice restricted to a box
{z : lo <= z <= hi}, with an edge between every pair of vertices at L1
distance 1.  Vertices are identified with their row-major (C-order) linear
index, so the index order coincides with tuple-lexicographic order on
coordinates.  The undirected edge from z to z + e_j (e_j the j-th canonical
basis vector) gets the flat slot ``vertex_index(z) * d + j``; slots whose
head would leave the box simply do not exist.  This keeps per-edge weight
arrays flat and the vertex <-> edge mapping O(1) in both directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

Vertex = tuple[int, ...]


def floor_map(x: Sequence[float]) -> Vertex:
    """Componentwise floor: the unique integer vector z with x in z + [0,1)^d."""
    return tuple(math.floor(float(c)) for c in x)


def l1_norm(x: Sequence[int]) -> int:
    """Sum of absolute coordinates."""
    return int(sum(abs(int(c)) for c in x))


@dataclass(frozen=True)
class PathFlags:
    adjacent: bool
    self_avoiding: bool
    directed: bool


def _step_axis(a: Vertex, b: Vertex) -> tuple[int, int]:
    """Return (axis, sign) for a unit step a -> b, or raise if not L1-adjacent."""
    axis = -1
    sign = 0
    for j, (u, v) in enumerate(zip(a, b)):
        if u != v:
            if axis >= 0 or abs(v - u) != 1:
                raise ValueError(f"non-adjacent step {a} -> {b}")
            axis, sign = j, v - u
    if axis < 0:
        raise ValueError(f"non-adjacent step {a} -> {b} (zero step)")
    return axis, sign


def validate_path(p: "LatticePath | Sequence[Vertex]") -> PathFlags:
    """Classify a vertex sequence: adjacency, self-avoidance, monotonicity.

    Raises ValueError for an empty sequence or any step that is not a unit
    step along one axis.  A path is *directed* when every step is +e_j for
    some axis j.
    """
    vertices = p.vertices if isinstance(p, LatticePath) else tuple(tuple(int(c) for c in v) for v in p)
    if not vertices:
        raise ValueError("empty vertex sequence")
    d = len(vertices[0])
    if any(len(v) != d for v in vertices):
        raise ValueError("inconsistent vertex dimensions")
    directed = True
    for a, b in zip(vertices, vertices[1:]):
        _, sign = _step_axis(a, b)
        if sign != 1:
            directed = False
    self_avoiding = len(set(vertices)) == len(vertices)
    return PathFlags(adjacent=True, self_avoiding=self_avoiding, directed=directed)


@dataclass(frozen=True)
class LatticePath:
    """An L1-adjacent vertex sequence (x_0, ..., x_k); k = edge count.

    Construction validates adjacency and rejects malformed sequences.
    """

    vertices: tuple[Vertex, ...]

    def __post_init__(self):
        vs = tuple(tuple(int(c) for c in v) for v in self.vertices)
        object.__setattr__(self, "vertices", vs)
        validate_path(vs)

    @property
    def edge_count(self) -> int:
        return len(self.vertices) - 1

    @cached_property
    def is_self_avoiding(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    @cached_property
    def is_directed(self) -> bool:
        return all(_step_axis(a, b)[1] == 1 for a, b in zip(self.vertices, self.vertices[1:]))

    @property
    def start(self) -> Vertex:
        return self.vertices[0]

    @property
    def end(self) -> Vertex:
        return self.vertices[-1]

    def edges(self) -> list[tuple[Vertex, int]]:
        """Canonical undirected edge list as (lower endpoint, axis) pairs."""
        out = []
        for a, b in zip(self.vertices, self.vertices[1:]):
            axis, sign = _step_axis(a, b)
            out.append((a if sign == 1 else b, axis))
        return out

    def translate(self, w: Sequence[int]) -> "LatticePath":
        wv = tuple(int(c) for c in w)
        return LatticePath(tuple(tuple(c + s for c, s in zip(v, wv)) for v in self.vertices))

    def reversed(self) -> "LatticePath":
        return LatticePath(self.vertices[::-1])


def slab_crossings(p: LatticePath | Sequence[Vertex], axis: int, level: int) -> int:
    """Number of edges of p joining the hyperplanes {z_axis = level} and {z_axis = level + 1}."""
    vertices = p.vertices if isinstance(p, LatticePath) else tuple(tuple(v) for v in p)
    count = 0
    for a, b in zip(vertices, vertices[1:]):
        j, _ = _step_axis(a, b)
        if j == axis and {a[axis], b[axis]} == {level, level + 1}:
            count += 1
    return count


@dataclass(frozen=True)
class BoxLattice:
    """The box {z : lo <= z <= hi} of Z^d with nearest-neighbour edges.

    Immutable after construction; derived index structures are cached and
    the object is safe to share across concurrent workers.
    """

    lo: Vertex
    hi: Vertex

    def __post_init__(self):
        lo = tuple(int(c) for c in self.lo)
        hi = tuple(int(c) for c in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same dimension")
        if len(lo) < 2:
            raise ValueError("dimension must be >= 2")
        if any(l > h for l, h in zip(lo, hi)):
            raise ValueError("lo must be <= hi coordinate-wise")

    @property
    def d(self) -> int:
        return len(self.lo)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @cached_property
    def strides(self) -> tuple[int, ...]:
        """C-order strides: last axis varies fastest."""
        s = [1] * self.d
        for j in range(self.d - 2, -1, -1):
            s[j] = s[j + 1] * self.shape[j + 1]
        return tuple(s)

    @property
    def n_vertices(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def n_edge_slots(self) -> int:
        return self.n_vertices * self.d

    def contains(self, z: Sequence[int]) -> bool:
        return all(l <= int(c) <= h for c, l, h in zip(z, self.lo, self.hi))

    def vertex_index(self, z: Sequence[int]) -> int:
        if not self.contains(z):
            raise ValueError(f"vertex {tuple(z)} outside box [{self.lo}, {self.hi}]")
        return sum((int(c) - l) * s for c, l, s in zip(z, self.lo, self.strides))

    def vertex_coord(self, i: int) -> Vertex:
        if not 0 <= i < self.n_vertices:
            raise ValueError(f"vertex index {i} out of range")
        out = []
        for l, s in zip(self.lo, self.strides):
            out.append(l + i // s)
            i %= s
        return tuple(out)

    def edge_index(self, z: Sequence[int], axis: int) -> int:
        """Slot of the undirected edge (z, z + e_axis); raises if it leaves the box."""
        head = tuple(int(c) + (1 if j == axis else 0) for j, c in enumerate(z))
        if not self.contains(head):
            raise ValueError(f"edge ({tuple(z)}, axis {axis}) leaves the box")
        return self.vertex_index(z) * self.d + axis

    def edge_endpoints(self, slot: int) -> tuple[Vertex, Vertex]:
        base = self.vertex_coord(slot // self.d)
        axis = slot % self.d
        head = tuple(c + (1 if j == axis else 0) for j, c in enumerate(base))
        return base, head

    @cached_property
    def edge_exists(self) -> np.ndarray:
        """Boolean mask over the n_vertices * d edge slots."""
        mask = np.ones(self.shape + (self.d,), dtype=bool)
        for j in range(self.d):
            sl = [slice(None)] * (self.d + 1)
            sl[j] = self.shape[j] - 1
            sl[self.d] = j
            mask[tuple(sl)] = False
        flat = mask.reshape(-1)
        flat.flags.writeable = False
        return flat

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(tail index, head index, slot) arrays over all existing edges."""
        slots = np.flatnonzero(self.edge_exists)
        tails = slots // self.d
        axes = slots % self.d
        strides = np.asarray(self.strides, dtype=np.int64)
        heads = tails + strides[axes]
        return tails.astype(np.int64), heads.astype(np.int64), slots.astype(np.int64)

    def neighbors(self, z: Sequence[int]) -> Iterator[tuple[Vertex, int]]:
        """Yield (neighbor vertex, edge slot) for all box neighbors of z."""
        zt = tuple(int(c) for c in z)
        for j in range(self.d):
            down = tuple(c - (1 if k == j else 0) for k, c in enumerate(zt))
            if self.contains(down):
                yield down, self.vertex_index(down) * self.d + j
            up = tuple(c + (1 if k == j else 0) for k, c in enumerate(zt))
            if self.contains(up):
                yield up, self.vertex_index(zt) * self.d + j

    def on_boundary(self, z: Sequence[int]) -> bool:
        return any(int(c) == l or int(c) == h for c, l, h in zip(z, self.lo, self.hi))

    def iter_vertices(self) -> Iterator[Vertex]:
        for i in range(self.n_vertices):
            yield self.vertex_coord(i)


def box_around(target: Sequence[int], margin: int, origin: Sequence[int] | None = None) -> BoxLattice:
    """Box [min(origin, target) - margin, max(origin, target) + margin] per coordinate."""
    t = tuple(int(c) for c in target)
    o = tuple(0 for _ in t) if origin is None else tuple(int(c) for c in origin)
    lo = tuple(min(a, b) - margin for a, b in zip(o, t))
    hi = tuple(max(a, b) + margin for a, b in zip(o, t))
    return BoxLattice(lo, hi)
