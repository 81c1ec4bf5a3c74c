"""Undirected geodesics: cheapest passage time, minimal hop count, canonical path.

For a sampled environment the geodesic time between two box vertices is the
minimum total weight over self-avoiding paths.  Among the time-optimal paths
the module reports the minimal edge count and reconstructs the first
minimal-hop geodesic in lexicographic order on vertex sequences (row-major
vertex order, which coincides with coordinate tuple order).

The production route runs a single-source shortest-path pass with the
lexicographic key (time, hops).  In exact mode the key is packed into one
integer ``time * K + hops`` with ``K`` exceeding any possible hop count, so
one scipy Dijkstra call returns both components exactly (float64 holds the
packed integers losslessly below 2**53; a pure-Python big-integer Dijkstra
takes over past that guard).  Float-mode environments use a two-pass scheme:
times first, then minimal hops over the tolerance-tight subgraph.

An exhaustive self-avoiding-path enumeration over small boxes is provided as
an independent oracle for tie-break audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .environment import FLOAT_TOL, INF, Environment, WeightValue, path_time
from .lattice import BoxLattice, LatticePath, Vertex

#: default cap on box size for the exhaustive path-enumeration oracle
ORACLE_VERTEX_LIMIT = 16

_PACK_GUARD = 2**53


@dataclass(frozen=True)
class GeodesicResult:
    """Outcome of a geodesic computation between two box vertices.

    When reachable, ``geodesic`` is the lexicographically first minimal-hop
    geodesic, ``time`` its passage time and ``min_hops`` its edge count.
    ``touched_boundary`` records whether that path visits a box face (None
    when reconstruction was skipped).
    """

    source: Vertex
    target: Vertex
    reachable: bool
    time: WeightValue
    min_hops: int | None
    geodesic: LatticePath | None
    touched_boundary: bool | None


@lru_cache(maxsize=64)
def _lattice_csr(lattice: BoxLattice):
    """Symmetric CSR adjacency skeleton plus per-arc edge slot and tail index."""
    tails, heads, slots = lattice.edge_arrays
    n = lattice.n_vertices
    r = np.concatenate([tails, heads])
    c = np.concatenate([heads, tails])
    s = np.concatenate([slots, slots])
    m = csr_matrix((s + 1, (r, c)), shape=(n, n))  # +1 so slot 0 is not an explicit zero
    arc_slots = np.asarray(m.data - 1, dtype=np.int64)
    arc_tails = np.repeat(np.arange(n, dtype=np.int64), np.diff(m.indptr))
    return m.indices.copy(), m.indptr.copy(), arc_slots, arc_tails


def _adjacency_lists(env: Environment) -> list[list[tuple[int, float]]]:
    """Finite-weight adjacency lists sorted by neighbor index."""
    lat = env.lattice
    adj: list[list[tuple[int, float]]] = [[] for _ in range(lat.n_vertices)]
    tails, heads, slots = lat.edge_arrays
    w = env.weights[slots]
    for t, h, wv in zip(tails.tolist(), heads.tolist(), w.tolist()):
        if math.isfinite(wv):
            wi = int(wv) if env.exact else wv
            adj[t].append((h, wi))
            adj[h].append((t, wi))
    for lst in adj:
        lst.sort()
    return adj


def _single_source_python(env: Environment, src: int):
    """Exact big-integer Dijkstra with lexicographic (time, hops) keys.

    Fallback for environments whose packed keys would overflow float64.
    """
    import heapq

    n = env.lattice.n_vertices
    adj = _adjacency_lists(env)
    time: list = [INF] * n
    hops = np.full(n, -1, dtype=np.int64)
    done = [False] * n
    time[src] = 0
    hops[src] = 0
    pq = [(0, 0, src)]
    while pq:
        t, h, v = heapq.heappop(pq)
        if done[v]:
            continue
        done[v] = True
        for nb, w in adj[v]:
            if done[nb]:
                continue
            cand = (t + w, h + 1)
            if time[nb] == INF or cand < (time[nb], int(hops[nb])):
                time[nb], hops[nb] = cand
                heapq.heappush(pq, (cand[0], cand[1], nb))
    return time, hops


def _single_source(env: Environment, src: int):
    """(time, hops) from src to every vertex; unreachable entries are (inf, -1)."""
    indices, indptr, arc_slots, arc_tails = _lattice_csr(env.lattice)
    n = env.lattice.n_vertices
    w = env.weights[arc_slots]
    if env.exact:
        k = n + 1
        if n * (env.max_finite_weight * k + 1) >= _PACK_GUARD:
            return _single_source_python(env, src)
        packed = dijkstra(csr_matrix((w * k + 1.0, indices, indptr), shape=(n, n)),
                          directed=True, indices=src)
        time = np.full(n, INF)
        hops = np.full(n, -1, dtype=np.int64)
        finite = np.isfinite(packed)
        rem = packed[finite] % k
        hops[finite] = rem.astype(np.int64)
        time[finite] = (packed[finite] - rem) / k
        return time, hops
    dist = dijkstra(csr_matrix((w, indices, indptr), shape=(n, n)), directed=True, indices=src)
    with np.errstate(invalid="ignore"):
        tight = np.abs(dist[arc_tails] + w - dist[indices]) <= FLOAT_TOL
    hop_dist = dijkstra(csr_matrix((np.where(tight, 1.0, INF), indices, indptr), shape=(n, n)),
                        directed=True, indices=src)
    hops = np.where(np.isfinite(hop_dist), hop_dist, -1).astype(np.int64)
    return dist, hops


def _reconstruct_first_path(env: Environment, source: Vertex, target: Vertex,
                            time, hops) -> LatticePath:
    """Greedy forward walk producing the lexicographically first optimal path.

    ``time``/``hops`` are distances to ``target``.  At each vertex the walk
    takes the smallest-index neighbor from which the remaining budget is
    still achievable; the feasible-successor sets are exactly those of the
    optimal paths, so the greedy minimum is the lexicographic minimum.
    """
    lat = env.lattice
    d = lat.d
    strides = lat.strides
    exact = env.exact
    # ascending vertex-index order of the 2d neighbor offsets
    steps = [(j, -1) for j in range(d)] + [(j, +1) for j in reversed(range(d))]
    cur = tuple(source)
    cur_i = lat.vertex_index(cur)
    path = [cur]
    tgt = tuple(target)
    while cur != tgt:
        t_rem = time[cur_i]
        h_rem = int(hops[cur_i])
        advanced = False
        for j, sign in steps:
            cj = cur[j] + sign
            if cj < lat.lo[j] or cj > lat.hi[j]:
                continue
            nb_i = cur_i + sign * strides[j]
            base_i = nb_i if sign < 0 else cur_i
            w = float(env.weights[base_i * d + j])
            if not math.isfinite(w):
                continue
            if int(hops[nb_i]) != h_rem - 1:
                continue
            want = t_rem - (int(w) if exact and not isinstance(t_rem, float) else w)
            ok = (time[nb_i] == want) if exact else (abs(time[nb_i] - want) <= FLOAT_TOL)
            if ok:
                cur = cur[:j] + (cj,) + cur[j + 1:]
                cur_i = nb_i
                path.append(cur)
                advanced = True
                break
        if not advanced:
            raise RuntimeError("geodesic reconstruction found no feasible step (internal error)")
    return LatticePath(tuple(path))


def geodesic_time(env: Environment, source: Sequence[int], target: Sequence[int],
                  reconstruct: bool = True) -> GeodesicResult:
    """Geodesic time, minimal hop count and canonical geodesic between two vertices.

    Runs the lexicographic shortest-path pass from ``target`` and, when
    ``reconstruct`` is set, walks the canonical minimal-hop geodesic from
    ``source``.  ``reachable`` is False (and time inf) when every connecting
    path inside the box has infinite passage time.
    """
    lat = env.lattice
    src = tuple(int(c) for c in source)
    tgt = tuple(int(c) for c in target)
    si = lat.vertex_index(src)
    ti = lat.vertex_index(tgt)
    time, hops = _single_source(env, ti)
    t_src = time[si]
    if (isinstance(t_src, float) or isinstance(t_src, np.floating)) and math.isinf(t_src):
        return GeodesicResult(src, tgt, reachable=False, time=INF, min_hops=None,
                              geodesic=None, touched_boundary=None)
    value = env.value_of_scaled(float(t_src)) if env.exact else float(t_src)
    min_hops = int(hops[si])
    if not reconstruct:
        return GeodesicResult(src, tgt, reachable=True, time=value, min_hops=min_hops,
                              geodesic=None, touched_boundary=None)
    path = _reconstruct_first_path(env, src, tgt, time, hops)
    assert path.edge_count == min_hops
    assert path.is_self_avoiding
    assert path_time(env, path) == value if env.exact else abs(path_time(env, path) - value) <= 1e-6
    touched = any(lat.on_boundary(v) for v in path.vertices)
    return GeodesicResult(src, tgt, reachable=True, time=value, min_hops=min_hops,
                          geodesic=path, touched_boundary=touched)


def enumerate_min_hop_geodesics(env: Environment, source: Sequence[int], target: Sequence[int],
                                vertex_limit: int = ORACLE_VERTEX_LIMIT) -> list[LatticePath]:
    """Brute-force oracle: all minimal-hop geodesics, lexicographically sorted.

    Exhaustively enumerates every self-avoiding path between the endpoints
    over finite-weight edges, keeps those achieving the lexicographic optimum
    (time, hops), and returns them sorted by vertex sequence.  Empty when the
    endpoints are not connected by finite-weight edges.  Guarded by a box
    vertex-count limit.
    """
    lat = env.lattice
    if lat.n_vertices > vertex_limit:
        raise ValueError(f"box has {lat.n_vertices} vertices, oracle limit is {vertex_limit}")
    src = tuple(int(c) for c in source)
    tgt = tuple(int(c) for c in target)
    si = lat.vertex_index(src)
    ti = lat.vertex_index(tgt)
    adj = _adjacency_lists(env)

    best: list = [None]  # (time, hops)
    found: list[tuple] = []
    visited = [False] * lat.n_vertices
    trail = [si]

    def dfs(v: int, t):
        if v == ti:
            key = (t, len(trail) - 1)
            if best[0] is None or key < best[0]:
                best[0] = key
            found.append((t, len(trail) - 1, tuple(trail)))
            return
        if best[0] is not None and t > best[0][0]:
            return
        visited[v] = True
        for nb, w in adj[v]:
            if not visited[nb] and nb != si:
                trail.append(nb)
                dfs(nb, t + w)
                trail.pop()
        visited[v] = False

    visited[si] = True
    if si == ti:
        return [LatticePath((src,))]
    dfs(si, 0 if env.exact else 0.0)
    if best[0] is None:
        return []
    opt = [seq for t, h, seq in found if (t, h) == best[0]]
    opt.sort(key=lambda seq: tuple(lat.vertex_coord(i) for i in seq))
    return [LatticePath(tuple(lat.vertex_coord(i) for i in seq)) for seq in opt]


def reachability(env: Environment, source: Sequence[int], target: Sequence[int]) -> bool:
    """True iff a finite-passage-time path joins the vertices inside the box."""
    lat = env.lattice
    si = lat.vertex_index(source)
    ti = lat.vertex_index(target)
    if si == ti:
        return True
    tails, heads, slots = lat.edge_arrays
    finite = np.isfinite(env.weights[slots])
    if finite.all():
        return True  # the box graph itself is connected
    g = csr_matrix((np.ones(int(finite.sum())), (tails[finite], heads[finite])),
                   shape=(lat.n_vertices, lat.n_vertices))
    _, labels = connected_components(g, directed=False)
    return bool(labels[si] == labels[ti])
