"""Directed geodesics: dynamic programming on the monotone lattice order.

A directed path takes only +e_j steps, so every directed path from the
origin to a target x >= 0 has exactly l1(x) edges and the directed geodesic
time obeys the recursion  V(z) = min_j V(z - e_j) + w(z - e_j, z)  over the
rectangle [0, x], a DAG graded by the coordinate sum.  The production route
evaluates V level by level with vectorized gathers; reconstruction
backtracks from the target breaking ties toward the smallest axis index.
A low-memory variant keeps only two frontier slabs for value-only queries,
and an explicit path enumeration serves as the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .environment import FLOAT_TOL, INF, Environment, WeightValue, shift_environment
from .lattice import LatticePath, Vertex, l1_norm

#: default cap on l1(target) for the explicit path enumeration oracle
DIRECTED_ORACLE_LIMIT = 16


@dataclass(frozen=True)
class DirectedResult:
    """Directed geodesic time from the origin to ``target`` (>= 0 coordinatewise).

    ``geodesic`` is the optimal directed path whose backtracking ties were
    broken toward the smallest axis index (None for value-only queries); it
    always has exactly l1(target) edges.
    """

    target: Vertex
    time: WeightValue
    geodesic: LatticePath | None


def _check_target(env: Environment, target: Sequence[int]) -> Vertex:
    t = tuple(int(c) for c in target)
    if any(c < 0 for c in t):
        raise ValueError(f"target {t} has a negative coordinate")
    origin = (0,) * len(t)
    if not env.lattice.contains(origin) or not env.lattice.contains(t):
        raise ValueError("rectangle [0, target] must lie inside the box")
    return t


def _rect_geometry(env: Environment, target: Vertex):
    """Flattened rectangle [0, target]: coords, rectangle strides, lattice slots."""
    lat = env.lattice
    d = lat.d
    shape = tuple(c + 1 for c in target)
    coords = np.indices(shape).reshape(d, -1)
    rect_strides = np.ones(d, dtype=np.int64)
    for j in range(d - 2, -1, -1):
        rect_strides[j] = rect_strides[j + 1] * shape[j + 1]
    lat_strides = np.asarray(lat.strides, dtype=np.int64)
    origin_index = lat.vertex_index((0,) * d)
    lat_flat = (coords * lat_strides[:, None]).sum(axis=0) + origin_index
    return coords, rect_strides, lat_flat


def _dp_full_table(env: Environment, target: Vertex) -> tuple[np.ndarray, tuple]:
    """Value table over the rectangle [0, target], evaluated by coordinate-sum level."""
    d = env.lattice.d
    coords, rect_strides, lat_flat = _rect_geometry(env, target)
    n = coords.shape[1]
    level = coords.sum(axis=0)
    order = np.argsort(level, kind="stable")
    sorted_levels = level[order]
    values = np.full(n, INF)
    values[0] = 0.0
    total = int(sum(target))
    bounds = np.searchsorted(sorted_levels, np.arange(total + 2))
    w = env.weights
    for s in range(1, total + 1):
        idxs = order[bounds[s]:bounds[s + 1]]
        best = np.full(idxs.size, INF)
        for j in range(d):
            mask = coords[j, idxs] >= 1
            if not mask.any():
                continue
            cur = idxs[mask]
            prev = cur - rect_strides[j]
            cand = values[prev] + w[lat_flat[prev] * d + j]
            best[mask] = np.minimum(best[mask], cand)
        values[idxs] = best
    return values, (coords, rect_strides, lat_flat)


def _backtrack(env: Environment, target: Vertex, values: np.ndarray, geom) -> LatticePath:
    """Walk back from the target; ties go to the smallest axis index."""
    _, rect_strides, lat_flat = geom
    d = env.lattice.d
    exact = env.exact
    cur = target
    cur_flat = int(np.dot(np.asarray(target, dtype=np.int64), rect_strides))
    rev = [cur]
    w = env.weights
    while any(cur):
        stepped = False
        for j in range(d):
            if cur[j] < 1:
                continue
            prev_flat = cur_flat - int(rect_strides[j])
            edge_w = float(w[int(lat_flat[prev_flat]) * d + j])
            v_prev = values[prev_flat]
            v_cur = values[cur_flat]
            if exact or math.isinf(v_cur):
                ok = v_prev + edge_w == v_cur  # inf arithmetic is absorbing, no inf-inf occurs
            else:
                ok = abs(v_prev + edge_w - v_cur) <= FLOAT_TOL
            if ok:
                cur = cur[:j] + (cur[j] - 1,) + cur[j + 1:]
                cur_flat = prev_flat
                rev.append(cur)
                stepped = True
                break
        if not stepped:
            raise RuntimeError("directed backtracking found no tight predecessor (internal error)")
    return LatticePath(tuple(reversed(rev)))


def _dp_value_rolling(env: Environment, target: Vertex) -> float:
    """Value-only DP keeping two frontier slabs along axis 0 (O(n^(d-1)) memory)."""
    lat = env.lattice
    d = lat.d
    rest_shape = tuple(c + 1 for c in target[1:])
    n_rest = int(np.prod(rest_shape, dtype=np.int64)) if rest_shape else 1
    rest_strides = np.ones(max(d - 1, 1), dtype=np.int64)
    for j in range(d - 3, -1, -1):
        rest_strides[j] = rest_strides[j + 1] * rest_shape[j + 1]
    lat_strides = lat.strides
    w = env.weights

    def lat_index(x0: int, rest_flat: int) -> int:
        idx = (x0 - lat.lo[0]) * lat_strides[0]
        rem = rest_flat
        for j in range(d - 1):
            c = rem // int(rest_strides[j])
            rem %= int(rest_strides[j])
            idx += (c - lat.lo[j + 1]) * lat_strides[j + 1]
        return idx

    prev: np.ndarray | None = None
    for x0 in range(target[0] + 1):
        cur = np.full(n_rest, INF)
        for rf in range(n_rest):
            if x0 == 0 and rf == 0:
                cur[0] = 0.0
                continue
            best = INF
            if x0 >= 1:
                cand = prev[rf] + float(w[lat_index(x0 - 1, rf) * d])
                if cand < best:
                    best = cand
            rem = rf
            for j in range(d - 1):
                stride = int(rest_strides[j])
                c = rem // stride
                rem %= stride
                if c >= 1:
                    cand = cur[rf - stride] + float(w[lat_index(x0, rf - stride) * d + j + 1])
                    if cand < best:
                        best = cand
            cur[rf] = best
        prev = cur
    return float(prev[n_rest - 1])


#: value-only queries switch to the rolling-frontier DP past this many cells
_LOW_MEMORY_CELLS = 2**22


def directed_time(env: Environment, target: Sequence[int], reconstruct: bool = True,
                  low_memory: bool | None = None) -> DirectedResult:
    """Directed geodesic time from the origin, with optional path reconstruction.

    Value-only queries on large rectangles use the rolling-frontier DP (two
    slabs along axis 0, O(n^(d-1)) memory); ``low_memory`` forces the choice.
    """
    tgt = _check_target(env, target)
    if l1_norm(tgt) == 0:
        zero = Fraction(0) if env.exact else 0.0
        path = LatticePath((tgt,)) if reconstruct else None
        return DirectedResult(tgt, zero, path)
    if not reconstruct:
        cells = int(np.prod([c + 1 for c in tgt], dtype=np.int64))
        if low_memory or (low_memory is None and cells > _LOW_MEMORY_CELLS):
            scaled = _dp_value_rolling(env, tgt)
        else:
            values, _ = _dp_full_table(env, tgt)
            scaled = float(values[-1])
        return DirectedResult(tgt, env.value_of_scaled(scaled), None)
    values, geom = _dp_full_table(env, tgt)
    scaled = float(values[-1])
    path = _backtrack(env, tgt, values, geom)
    assert path.is_directed and path.edge_count == l1_norm(tgt)
    return DirectedResult(tgt, env.value_of_scaled(scaled), path)


def _enumerate_paths(env: Environment, target: Vertex):
    """Yield (vertex index sequence, scaled time) over all directed origin->target paths.

    Paths through infinite edges are yielded with inf time so argmin sets stay
    meaningful in the infinite-weight regime.
    """
    lat = env.lattice
    d = lat.d
    strides = lat.strides
    weights = env.weights.tolist()
    exact = env.exact
    origin = (0,) * d
    oi = lat.vertex_index(origin)

    trail = [oi]
    out = []

    def rec(z: tuple, zi: int, t):
        if z == target:
            out.append((tuple(trail), t))
            return
        for j in range(d):
            if z[j] < target[j]:
                wv = weights[zi * d + j]
                nt = t + (int(wv) if exact and math.isfinite(wv) else wv)
                trail.append(zi + strides[j])
                rec(z[:j] + (z[j] + 1,) + z[j + 1:], zi + strides[j], nt)
                trail.pop()

    rec(origin, oi, 0 if exact else 0.0)
    return out


def directed_time_brute_force(env: Environment, target: Sequence[int],
                              norm_limit: int = DIRECTED_ORACLE_LIMIT) -> WeightValue:
    """Oracle: minimum passage time over an explicit enumeration of directed paths."""
    tgt = _check_target(env, target)
    if l1_norm(tgt) > norm_limit:
        raise ValueError(f"l1(target) = {l1_norm(tgt)} exceeds oracle limit {norm_limit}")
    paths = _enumerate_paths(env, tgt)
    best = min(t for _, t in paths)
    if isinstance(best, float) and math.isinf(best):
        return INF
    return env.value_of_scaled(float(best)) if env.exact else best


def directed_min_times_up_to(env: Environment, norm_limit: int) -> dict[Vertex, WeightValue]:
    """Oracle sweep: enumerate every directed path of length <= norm_limit once,
    recording the minimum time at each endpoint reached."""
    lat = env.lattice
    d = lat.d
    strides = lat.strides
    weights = env.weights.tolist()
    exact = env.exact
    origin = (0,) * d
    best: dict[Vertex, object] = {}

    def rec(z: tuple, zi: int, t, depth: int):
        cur = best.get(z)
        if cur is None or t < cur:
            best[z] = t
        if depth == norm_limit:
            return
        for j in range(d):
            if z[j] < lat.hi[j]:
                wv = weights[zi * d + j]
                nt = t + (int(wv) if exact and math.isfinite(wv) else wv)
                rec(z[:j] + (z[j] + 1,) + z[j + 1:], zi + strides[j], nt, depth + 1)

    rec(origin, lat.vertex_index(origin), 0 if exact else 0.0, 0)
    out: dict[Vertex, WeightValue] = {}
    for z, t in best.items():
        if isinstance(t, float) and math.isinf(t):
            out[z] = INF
        else:
            out[z] = env.value_of_scaled(float(t)) if exact else t
    return out


def optimal_directed_paths(env: Environment, target: Sequence[int],
                           norm_limit: int = DIRECTED_ORACLE_LIMIT):
    """All time-optimal directed paths (as vertex coordinate sequences), plus the value.

    Exact environments use exact ties; float environments group within the
    comparison tolerance.
    """
    tgt = _check_target(env, target)
    if l1_norm(tgt) > norm_limit:
        raise ValueError(f"l1(target) = {l1_norm(tgt)} exceeds oracle limit {norm_limit}")
    lat = env.lattice
    paths = _enumerate_paths(env, tgt)
    best = min(t for _, t in paths)
    if env.exact:
        winners = [seq for seq, t in paths if t == best]
    else:
        winners = [seq for seq, t in paths if t <= best + FLOAT_TOL]
    winners = [tuple(lat.vertex_coord(i) for i in seq) for seq in winners]
    winners.sort()
    if isinstance(best, float) and math.isinf(best):
        value: WeightValue = INF
    else:
        value = env.value_of_scaled(float(best)) if env.exact else best
    return value, winners


def directed_argmin_invariance_check(env: Environment, delta, target: Sequence[int],
                                     norm_limit: int = DIRECTED_ORACLE_LIMIT) -> bool:
    """True iff shifting every weight by delta preserves the optimal directed
    path set and adds exactly delta * l1(target) to the optimal value."""
    tgt = _check_target(env, target)
    v0, set0 = optimal_directed_paths(env, tgt, norm_limit)
    shifted = shift_environment(env, delta)
    v1, set1 = optimal_directed_paths(shifted, tgt, norm_limit)
    if set0 != set1:
        return False
    if v0 == INF or v1 == INF:
        return v0 == v1
    expected = v0 + (Fraction(delta) if env.exact else float(delta)) * l1_norm(tgt)
    if env.exact:
        return v1 == expected
    return abs(v1 - expected) <= FLOAT_TOL * max(1.0, abs(float(expected)))
