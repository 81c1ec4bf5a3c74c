"""Local detour patterns: band events, unique-optimality certification, counting.

A pattern lives on the window {0..ell} x {0,1} x {0}^(d-2) with entry (0,..,0)
and exit (ell,0,..,0).  Two reference paths join the marked vertices: the
straight path (ell edges along axis 0) and the detour (up one step on axis 1,
ell steps across, one step down; ell + 2 edges).  The *band event* asks every
detour edge to weigh within delta of a cheap value a and every other window
edge within delta of an expensive value b; when ell (b - a) > 2 a the detour
is then the strict in-window optimum, so a path certified to cross the
pattern provably spends two extra axis-1 edges.  Counting vertex-disjoint
pattern crossings along a path therefore lower-bounds its edge count by
l1(displacement) + count.

A degenerate variant covers two-point laws {a', inf}: the window shrinks to
the unit square, the straight edge must be infinite and the three detour
edges equal to a'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Mapping, Sequence

from .environment import INF, DistributionSpec, Environment, WeightValue
from .lattice import LatticePath, Vertex, l1_norm

#: enumeration guard: windows with more edges than this refuse exhaustive audits
_EXHAUSTIVE_EDGE_LIMIT = 14

_WINDOW_ELL_LIMIT = 10

EdgeKey = tuple[Vertex, int]


@dataclass(frozen=True)
class Pattern:
    """Window geometry plus the weight event that forces the detour.

    ``delta`` is the half-width of the weight bands.  The degenerate variant
    (``infinite_blocker``) replaces the bands by exact equalities: straight
    edge infinite, detour edges equal to ``a``.
    """

    d: int
    ell: int
    a: Fraction
    b: WeightValue
    delta: Fraction
    infinite_blocker: bool = False

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("pattern needs dimension >= 2")
        if self.ell < 1 or self.ell > _WINDOW_ELL_LIMIT:
            raise ValueError(f"ell must be in [1, {_WINDOW_ELL_LIMIT}]")
        a = Fraction(self.a)
        object.__setattr__(self, "a", a)
        if a < 0:
            raise ValueError("a must be >= 0")
        if self.infinite_blocker:
            if self.b != INF or self.ell != 1 or self.delta != 0:
                raise ValueError("degenerate variant requires b=inf, ell=1, delta=0")
        else:
            b = Fraction(self.b)
            object.__setattr__(self, "b", b)
            if not a < b:
                raise ValueError("need a < b")
            delta = Fraction(self.delta)
            object.__setattr__(self, "delta", delta)
            if delta < 0:
                raise ValueError("delta must be >= 0")

    @classmethod
    def with_bands(cls, a, b, ell: int, delta=0, d: int = 2) -> "Pattern":
        return cls(d=d, ell=int(ell), a=Fraction(a), b=Fraction(b), delta=Fraction(delta))

    @classmethod
    def infinite_two_point(cls, a_prime, d: int = 2) -> "Pattern":
        """Degenerate pattern for laws with one finite atom and mass at infinity."""
        return cls(d=d, ell=1, a=Fraction(a_prime), b=INF, delta=Fraction(0), infinite_blocker=True)

    def _v(self, x: int, y: int) -> Vertex:
        return (x, y) + (0,) * (self.d - 2)

    @property
    def entry(self) -> Vertex:
        return self._v(0, 0)

    @property
    def exit(self) -> Vertex:
        return self._v(self.ell, 0)

    @cached_property
    def window_vertices(self) -> tuple[Vertex, ...]:
        return tuple(self._v(x, y) for x in range(self.ell + 1) for y in (0, 1))

    @cached_property
    def window_edges(self) -> tuple[EdgeKey, ...]:
        """Canonical (base vertex, axis) pairs of all edges inside the window."""
        edges = [(self._v(x, y), 0) for y in (0, 1) for x in range(self.ell)]
        edges += [(self._v(x, 0), 1) for x in range(self.ell + 1)]
        return tuple(edges)

    @cached_property
    def straight_path(self) -> LatticePath:
        return LatticePath(tuple(self._v(x, 0) for x in range(self.ell + 1)))

    @cached_property
    def detour_path(self) -> LatticePath:
        up = [self._v(0, 0), self._v(0, 1)]
        across = [self._v(x, 1) for x in range(1, self.ell + 1)]
        return LatticePath(tuple(up + across + [self._v(self.ell, 0)]))

    @cached_property
    def detour_edges(self) -> frozenset[EdgeKey]:
        return frozenset((base, axis) for base, axis in self.detour_path.edges())

    @property
    def satisfies_length_bound(self) -> bool:
        """ell strictly above 2a/(b-a); guarantees the zero-width band event
        already makes the detour the unique in-window optimum."""
        if self.infinite_blocker:
            return True
        return Fraction(self.ell) * (self.b - self.a) > 2 * self.a

    def describe(self) -> str:
        if self.infinite_blocker:
            return f"degenerate(a'={self.a}, blocked straight edge)"
        return f"bands(a={self.a}, b={self.b}, ell={self.ell}, delta={self.delta})"


def in_band_event(assignment: Mapping[EdgeKey, object], pattern: Pattern) -> bool:
    """Does a full window assignment satisfy the pattern's weight event?

    The assignment must cover exactly the window edges (keys are canonical
    (base, axis) pairs in the pattern's own coordinates).
    """
    keys = set(assignment.keys())
    expected = set(pattern.window_edges)
    if keys != expected:
        missing = expected - keys
        extra = keys - expected
        raise ValueError(f"assignment must cover exactly the window edges "
                         f"(missing {sorted(missing)}, extra {sorted(extra)})")
    for edge in pattern.window_edges:
        v = assignment[edge]
        value = INF if (isinstance(v, float) and math.isinf(v)) else v
        if edge in pattern.detour_edges:
            if pattern.infinite_blocker:
                if value != pattern.a:
                    return False
            else:
                if value == INF or not (pattern.a - pattern.delta <= value <= pattern.a + pattern.delta):
                    return False
        else:
            if pattern.infinite_blocker:
                if value != INF:
                    return False
            else:
                if value == INF or not (pattern.b - pattern.delta <= value <= pattern.b + pattern.delta):
                    return False
    return True


def enumerate_window_paths(pattern: Pattern) -> list[LatticePath]:
    """All self-avoiding entry->exit paths staying inside the window."""
    adj: dict[Vertex, list[Vertex]] = {v: [] for v in pattern.window_vertices}
    for base, axis in pattern.window_edges:
        head = base[:axis] + (base[axis] + 1,) + base[axis + 1:]
        adj[base].append(head)
        adj[head].append(base)
    for lst in adj.values():
        lst.sort()
    out: list[LatticePath] = []
    trail = [pattern.entry]
    seen = {pattern.entry}

    def rec(v: Vertex):
        if v == pattern.exit:
            out.append(LatticePath(tuple(trail)))
            return
        for nb in adj[v]:
            if nb not in seen:
                seen.add(nb)
                trail.append(nb)
                rec(nb)
                trail.pop()
                seen.remove(nb)

    rec(pattern.entry)
    return out


def _path_time_in(assignment: Mapping[EdgeKey, object], path: LatticePath):
    total = Fraction(0)
    for edge in path.edges():
        v = assignment[edge]
        if (isinstance(v, float) and math.isinf(v)) or v == INF:
            return INF
        total += Fraction(v) if not isinstance(v, float) else Fraction(v)
    return total


def detour_uniquely_optimal(assignment: Mapping[EdgeKey, object], pattern: Pattern) -> bool:
    """Is the detour the strict unique time-minimizer among in-window paths?

    Checked by exhaustive enumeration of the self-avoiding entry->exit paths.
    """
    keys = set(assignment.keys())
    if keys != set(pattern.window_edges):
        raise ValueError("assignment must cover exactly the window edges")
    detour_time = _path_time_in(assignment, pattern.detour_path)
    if detour_time == INF:
        return False
    for path in enumerate_window_paths(pattern):
        if path.vertices == pattern.detour_path.vertices:
            continue
        if _path_time_in(assignment, path) <= detour_time:
            return False
    return True


def _worst_corner(pattern: Pattern, delta: Fraction) -> dict[EdgeKey, Fraction]:
    """Detour edges as expensive as allowed, every other edge as cheap as allowed.

    The time difference detour-minus-competitor is monotone increasing in the
    detour-edge weights and decreasing in the others (shared edges cancel), so
    this single corner of the band box dominates every assignment for every
    competitor simultaneously.
    """
    corner: dict[EdgeKey, Fraction] = {}
    for edge in pattern.window_edges:
        corner[edge] = pattern.a + delta if edge in pattern.detour_edges else pattern.b - delta
    return corner


def band_event_forces_detour(pattern: Pattern, delta=None, exhaustive: bool = False) -> bool:
    """Certify that every assignment in the delta-band event makes the detour
    the unique in-window optimum.

    The default check evaluates the single worst corner (sufficient by
    monotonicity); ``exhaustive`` audits every band-endpoint corner instead.
    """
    if pattern.infinite_blocker:
        corner = {edge: (INF if edge not in pattern.detour_edges else pattern.a)
                  for edge in pattern.window_edges}
        return detour_uniquely_optimal(corner, pattern)
    delta = pattern.delta if delta is None else Fraction(delta)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if not exhaustive:
        return detour_uniquely_optimal(_worst_corner(pattern, delta), pattern)
    edges = pattern.window_edges
    if len(edges) > _EXHAUSTIVE_EDGE_LIMIT:
        raise ValueError(f"exhaustive corner audit limited to {_EXHAUSTIVE_EDGE_LIMIT} edges")
    for signs in product((-1, 1), repeat=len(edges)):
        corner = {}
        for edge, s in zip(edges, signs):
            center = pattern.a if edge in pattern.detour_edges else pattern.b
            corner[edge] = center + s * delta
        if not detour_uniquely_optimal(corner, pattern):
            return False
    return True


def max_safe_delta(pattern: Pattern, resolution: Fraction = Fraction(1, 4096),
                   exhaustive: bool = False) -> Fraction:
    """Largest certified band half-width, to the given resolution.

    Binary search over delta with the corner certificate; returns 0 when even
    the zero-width event fails (window length violates the length bound).
    """
    if pattern.infinite_blocker:
        return Fraction(0)
    resolution = Fraction(resolution)
    if resolution <= 0:
        raise ValueError("resolution must be positive")

    def ok(delta: Fraction) -> bool:
        return band_event_forces_detour(pattern, delta=delta, exhaustive=exhaustive)

    if not ok(Fraction(0)):
        return Fraction(0)
    lo = Fraction(0)
    hi = pattern.b - pattern.a
    while ok(hi):  # unbounded certificates cannot happen, but stay safe
        lo, hi = hi, hi * 2
        if hi > 2**20:
            raise RuntimeError("band half-width search failed to bracket")
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Occurrence:
    """One accepted pattern crossing: subpath start index and window translate."""

    start: int
    translate: Vertex
    reversed: bool


@dataclass(frozen=True)
class OccurrenceCount:
    count: int
    occurrences: tuple[Occurrence, ...]


def window_assignment(env: Environment, pattern: Pattern, translate: Sequence[int]):
    """Environment weights on the translated window, keyed by untranslated edges.

    Returns None when any window edge falls outside the environment's box.
    """
    tau = tuple(int(c) for c in translate)
    lat = env.lattice
    out: dict[EdgeKey, WeightValue] = {}
    for base, axis in pattern.window_edges:
        moved = tuple(c + t for c, t in zip(base, tau))
        head = moved[:axis] + (moved[axis] + 1,) + moved[axis + 1:]
        if not (lat.contains(moved) and lat.contains(head)):
            return None
        out[(base, axis)] = env.weight_value(lat.edge_index(moved, axis))
    return out


def count_occurrences(env: Environment, p: LatticePath, pattern: Pattern) -> OccurrenceCount:
    """Pattern crossings along a path: vertex-disjoint translates, greedy scan.

    A crossing at position i requires the subpath starting there to equal the
    pattern's detour traversed forward or backward under some translate, and
    the environment on the translated window to satisfy the weight event.
    Accepted translates must have pairwise disjoint window vertex sets; the
    scan runs left to right and keeps every admissible match, which yields a
    maximal disjoint family.
    """
    detour = pattern.detour_path.vertices
    m = len(detour)
    verts = p.vertices
    used: set[Vertex] = set()
    found: list[Occurrence] = []
    for i in range(len(verts) - m + 1):
        seg = verts[i:i + m]
        tau = None
        rev = False
        cand = tuple(c - u for c, u in zip(seg[0], detour[0]))
        if all(s == tuple(dv + t for dv, t in zip(detour[k], cand)) for k, s in enumerate(seg)):
            tau = cand
        else:
            cand = tuple(c - u for c, u in zip(seg[0], detour[-1]))
            if all(s == tuple(dv + t for dv, t in zip(detour[m - 1 - k], cand)) for k, s in enumerate(seg)):
                tau = cand
                rev = True
        if tau is None:
            continue
        window = tuple(tuple(c + t for c, t in zip(v, tau)) for v in pattern.window_vertices)
        if any(v in used for v in window):
            continue
        assignment = window_assignment(env, pattern, tau)
        if assignment is None or not in_band_event(assignment, pattern):
            continue
        used.update(window)
        found.append(Occurrence(start=i, translate=tau, reversed=rev))
    return OccurrenceCount(count=len(found), occurrences=tuple(found))


def edge_count_bound_holds(p: LatticePath, count: int) -> bool:
    """Edge-count lower bound: |p| >= l1(end - start) + pattern crossings."""
    disp = tuple(e - s for s, e in zip(p.start, p.end))
    return p.edge_count >= l1_norm(disp) + count


def default_pattern(spec: DistributionSpec, d: int = 2,
                    resolution: Fraction = Fraction(1, 4096)) -> Pattern:
    """Reproducible pattern choice for a law.

    Two-point-with-infinity laws get the degenerate variant.  Otherwise the
    two cheapest distinct finite atoms become (a, b), the window length is the
    smallest integer above 2a/(b-a), and delta is half the certified maximum.
    Laws without two finite atoms (and no infinite mass) have no canonical
    pattern and raise.
    """
    finite_values = sorted({v for v, p in spec.atoms if v != INF and p > 0})
    inf_mass = 1.0 - spec.mass_finite
    if len(finite_values) == 1 and inf_mass > 0 and not spec.uniform_pieces:
        return Pattern.infinite_two_point(finite_values[0], d=d)
    if len(finite_values) < 2:
        raise ValueError("no canonical pattern: law needs two finite atoms or one atom plus mass at infinity")
    a, b = finite_values[0], finite_values[1]
    ratio = 2 * a / (b - a)
    ell = int(ratio) + 1 if ratio == int(ratio) else math.ceil(ratio)
    probe = Pattern.with_bands(a, b, ell, 0, d=d)
    dmax = max_safe_delta(probe, resolution=resolution)
    return Pattern.with_bands(a, b, ell, dmax / 2, d=d)
