"""Edge-weight laws and reproducible passage-time environments.

A :class:`DistributionSpec` describes the common law of the i.i.d. edge
weights as a mixture of point atoms (possibly one at infinity) and uniform
pieces.  :func:`sample_environment` draws one weight per edge of a box with
a counter-based generator, so the weight of edge slot ``e`` is a pure
function of (seed, trial_id, e) and trials can be resampled or distributed
without sequential RNG state.

Arithmetic modes
----------------
When every finite atom is rational and there are no uniform pieces, weights
are rescaled by the least common denominator and stored as exact integers
(embedded in a float64 array, which is lossless below 2**53; construction
guards the magnitude).  Ties, shift identities and geodesic tie-breaks are
then exact.  Infinite weights are stored as ``inf``: absorbing under
addition and larger than every finite value.  Laws with uniform pieces fall
back to plain float64 with a 1e-9 comparison tolerance downstream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import IO, Mapping, Sequence, Union

import numpy as np

from .lattice import BoxLattice, LatticePath

INF = math.inf

#: exact-mode guard: scaled integer weights must stay well below 2**53
_MAX_SCALED = 2**50

#: comparison tolerance for float-mode (continuous) environments
FLOAT_TOL = 1e-9

WeightValue = Union[Fraction, float]


def _parse_value(v) -> WeightValue:
    """Parse an atom value: rational number, 'inf', or a 'p/q' string."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        return Fraction(s)
    if isinstance(v, (int,)):
        return Fraction(v)
    if isinstance(v, float):
        if math.isinf(v):
            return INF
        return Fraction(v).limit_denominator(10**9) if v != int(v) else Fraction(int(v))
    raise TypeError(f"unsupported atom value {v!r}")


@dataclass(frozen=True)
class DistributionSpec:
    """Edge-weight law: atoms (value, probability) plus optional uniform pieces.

    Finite atom values are Fractions; the value ``math.inf`` marks an atom at
    infinity.  Uniform pieces are (low, high, probability) with low < high.
    Probabilities must sum to 1 (within 1e-9).
    """

    atoms: tuple[tuple[WeightValue, float], ...]
    uniform_pieces: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        atoms = tuple((_parse_value(v), float(p)) for v, p in self.atoms)
        pieces = tuple((float(a), float(b), float(p)) for a, b, p in self.uniform_pieces)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "uniform_pieces", pieces)
        if not atoms and not pieces:
            raise ValueError("distribution needs at least one atom or uniform piece")
        total = sum(p for _, p in atoms) + sum(p for _, _, p in pieces)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        for v, p in atoms:
            if p < 0:
                raise ValueError("negative atom probability")
            if v != INF and v < 0:
                raise ValueError("atom values must be >= 0")
        for a, b, p in pieces:
            if p < 0 or a < 0 or b <= a:
                raise ValueError(f"bad uniform piece ({a}, {b}, {p})")

    @classmethod
    def two_point(cls, a, b, p_a: float = 0.5) -> "DistributionSpec":
        return cls(atoms=((a, p_a), (b, 1.0 - p_a)))

    @classmethod
    def point_mass(cls, a) -> "DistributionSpec":
        return cls(atoms=((a, 1.0),))

    @classmethod
    def from_dict(cls, d: Mapping) -> "DistributionSpec":
        atoms = tuple((v, p) for v, p in d.get("atoms", ()))
        pieces = tuple(tuple(piece) for piece in d.get("uniform_pieces", ()))
        return cls(atoms=atoms, uniform_pieces=pieces)

    @cached_property
    def finite_atoms(self) -> tuple[tuple[Fraction, float], ...]:
        return tuple((v, p) for v, p in self.atoms if v != INF)

    @cached_property
    def r(self) -> WeightValue:
        """Minimum of the support."""
        candidates: list[WeightValue] = [v for v, p in self.atoms if p > 0]
        candidates += [a for a, _, p in self.uniform_pieces if p > 0]
        if not candidates:
            raise ValueError("empty support")
        return min(candidates)

    @cached_property
    def mass_finite(self) -> float:
        """Total mass on [0, inf)."""
        return sum(p for v, p in self.atoms if v != INF) + sum(p for _, _, p in self.uniform_pieces)

    def mass_at(self, value) -> float:
        v = _parse_value(value)
        return sum(p for w, p in self.atoms if w == v)

    @cached_property
    def mass_at_r(self) -> float:
        return self.mass_at(self.r) if self.r != INF else 1.0 - self.mass_finite

    @cached_property
    def is_exact(self) -> bool:
        return not self.uniform_pieces

    @cached_property
    def scale(self) -> int:
        """Least common denominator of the finite atom values (1 in float mode)."""
        if not self.is_exact:
            return 1
        s = 1
        for v, _ in self.finite_atoms:
            s = s * v.denominator // math.gcd(s, v.denominator)
        return s

    @cached_property
    def mean(self) -> float:
        """E[weight]; inf when there is mass at infinity."""
        if self.mass_finite < 1.0 - 1e-12:
            return INF
        m = sum(float(v) * p for v, p in self.finite_atoms)
        m += sum((a + b) / 2.0 * p for a, b, p in self.uniform_pieces)
        return m

    @property
    def has_finite_mean(self) -> bool:
        return math.isfinite(self.mean)

    def shifted(self, delta: Fraction) -> "DistributionSpec":
        """The law of weight + delta (infinite atoms stay infinite)."""
        delta = Fraction(delta)
        atoms = tuple((v if v == INF else v + delta, p) for v, p in self.atoms)
        pieces = tuple((a + float(delta), b + float(delta), p) for a, b, p in self.uniform_pieces)
        return DistributionSpec(atoms=atoms, uniform_pieces=pieces)

    def describe(self) -> str:
        parts = [f"{v if v != INF else 'inf'}:{p:g}" for v, p in self.atoms]
        parts += [f"U[{a:g},{b:g}]:{p:g}" for a, b, p in self.uniform_pieces]
        return "atoms{" + ", ".join(parts) + "}"


@dataclass(frozen=True)
class CriticalConstants:
    """Critical probabilities for undirected and oriented bond percolation on Z^d."""

    p_c: float
    p_c_directed: float
    provenance: str = ""

    def __post_init__(self):
        if not (0.0 < self.p_c <= self.p_c_directed < 1.0):
            raise ValueError("need 0 < p_c <= p_c_directed < 1")

    @classmethod
    def for_dimension(cls, d: int, p_c: float | None = None, p_c_directed: float | None = None,
                      provenance: str | None = None) -> "CriticalConstants":
        """d=2 has literature defaults (1/2 exact; 0.6447 numerical); d>=3 must be supplied."""
        if d == 2 and p_c is None and p_c_directed is None:
            return cls(0.5, 0.6447, provenance or "square-lattice literature values (exact 1/2; numerical)")
        if p_c is None or p_c_directed is None:
            raise ValueError(f"critical probabilities for d={d} must be supplied (no built-in values)")
        return cls(p_c, p_c_directed, provenance or "user supplied")


@dataclass(frozen=True)
class UsefulFlags:
    useful_pc: bool
    useful_directed_pc: bool
    finite_mass_supercritical: bool
    r_is_zero: bool

    @property
    def useful(self) -> bool:
        """Two-branch criterion: mass at the support minimum below p_c when the
        minimum is 0, below the directed critical probability otherwise."""
        return self.useful_pc if self.r_is_zero else self.useful_directed_pc


def check_useful(spec: DistributionSpec, crit: CriticalConstants) -> UsefulFlags:
    """Classify a law against the percolation thresholds (flags only, never aborts)."""
    mass_r = spec.mass_at_r if spec.r != INF else 1.0
    return UsefulFlags(
        useful_pc=mass_r < crit.p_c,
        useful_directed_pc=mass_r < crit.p_c_directed,
        finite_mass_supercritical=spec.mass_finite > crit.p_c,
        r_is_zero=(spec.r == 0),
    )


@dataclass(frozen=True)
class Environment:
    """One sampled passage time per edge of a box, immutable after construction.

    ``weights`` has one float64 entry per edge slot; nonexistent slots and
    infinite weights are ``inf``.  In exact mode entries are integers equal
    to ``scale * value``.
    """

    lattice: BoxLattice
    weights: np.ndarray
    scale: int = 1
    exact: bool = True
    spec: DistributionSpec | None = None
    seed: int | None = None
    trial_id: int | None = None
    shift: WeightValue = Fraction(0)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.lattice.n_edge_slots,):
            raise ValueError(f"weights must have shape ({self.lattice.n_edge_slots},)")
        w = w.copy()
        w[~self.lattice.edge_exists] = INF
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if self.exact:
            finite = w[np.isfinite(w)]
            if finite.size and (np.any(finite != np.floor(finite)) or finite.max() > _MAX_SCALED):
                raise ValueError("exact mode requires integer scaled weights below the 2**50 guard")

    @classmethod
    def from_edge_weights(cls, lattice: BoxLattice, assignment: Mapping, fill=None,
                          spec: DistributionSpec | None = None) -> "Environment":
        """Build an environment from explicit edge values (tests and fixtures).

        Keys are (base vertex, axis) pairs or (vertex, vertex) endpoint pairs.
        Values are rationals or inf.  ``fill`` covers unassigned edges; leaving
        it None requires full coverage.
        """
        values: dict[int, WeightValue] = {}
        for key, raw in assignment.items():
            if isinstance(key[1], tuple):
                a, b = tuple(key[0]), tuple(key[1])
                axis, sign = _edge_axis(a, b)
                base = a if sign == 1 else b
            else:
                base, axis = tuple(key[0]), int(key[1])
            slot = lattice.edge_index(base, axis)
            values[slot] = _parse_value(raw)
        fill_v = None if fill is None else _parse_value(fill)
        exist = np.flatnonzero(lattice.edge_exists)
        scale = 1
        for v in list(values.values()) + ([fill_v] if fill_v is not None else []):
            if v != INF:
                scale = scale * v.denominator // math.gcd(scale, v.denominator)
        w = np.full(lattice.n_edge_slots, INF)
        for slot in exist:
            v = values.get(int(slot), fill_v)
            if v is None:
                raise ValueError(f"edge slot {int(slot)} {lattice.edge_endpoints(int(slot))} unassigned and no fill given")
            w[slot] = INF if v == INF else float(v * scale)
        return cls(lattice=lattice, weights=w, scale=scale, exact=True, spec=spec)

    def weight_value(self, slot: int) -> WeightValue:
        """Exposed weight of an edge slot (Fraction in exact mode, float otherwise)."""
        w = float(self.weights[slot])
        if math.isinf(w):
            return INF
        return Fraction(int(w), self.scale) if self.exact else w

    def edge_weight(self, a: Sequence[int], b: Sequence[int]) -> WeightValue:
        axis, sign = _edge_axis(tuple(a), tuple(b))
        base = tuple(a) if sign == 1 else tuple(b)
        return self.weight_value(self.lattice.edge_index(base, axis))

    @cached_property
    def max_finite_weight(self) -> float:
        finite = self.weights[np.isfinite(self.weights)]
        return float(finite.max()) if finite.size else 0.0

    def value_of_scaled(self, scaled: float) -> WeightValue:
        if math.isinf(scaled):
            return INF
        return Fraction(int(scaled), self.scale) if self.exact else float(scaled)


def _edge_axis(a: tuple, b: tuple) -> tuple[int, int]:
    axis = -1
    sign = 0
    for j, (u, v) in enumerate(zip(a, b)):
        if u != v:
            if axis >= 0 or abs(v - u) != 1:
                raise ValueError(f"{a} and {b} are not adjacent")
            axis, sign = j, v - u
    if axis < 0:
        raise ValueError(f"{a} and {b} are not adjacent")
    return axis, sign


def sample_environment(spec: DistributionSpec, lattice: BoxLattice, seed: int, trial_id: int) -> Environment:
    """Draw one i.i.d. weight per edge, reproducibly.

    The generator is Philox keyed by (seed, trial_id): edge slot e consumes
    the e-th draw of the keyed stream, so the weight is a pure function of
    (seed, trial_id, e) with no sequential state shared between trials.
    """
    if not (0 <= seed < 2**64 and 0 <= trial_id < 2**64):
        raise ValueError("seed and trial_id must be unsigned 64-bit integers")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, trial_id], dtype=np.uint64)))
    n = lattice.n_edge_slots
    u = rng.random(n)

    categories: list[tuple[str, object]] = [("atom", v) for v, _ in spec.atoms]
    categories += [("piece", (a, b)) for a, b, _ in spec.uniform_pieces]
    probs = [p for _, p in spec.atoms] + [p for _, _, p in spec.uniform_pieces]
    thresholds = np.cumsum(probs)
    cat = np.searchsorted(thresholds, u, side="right")
    np.clip(cat, 0, len(categories) - 1, out=cat)

    exact = spec.is_exact
    scale = spec.scale
    w = np.empty(n, dtype=np.float64)
    cum_before = np.concatenate([[0.0], thresholds[:-1]])
    for k, (kind, payload) in enumerate(categories):
        mask = cat == k
        if not mask.any():
            continue
        if kind == "atom":
            v = payload
            if v == INF:
                w[mask] = INF
            elif exact:
                scaled = v * scale
                if scaled > _MAX_SCALED:
                    raise ValueError("atom value exceeds the exact-arithmetic guard; use smaller denominators")
                w[mask] = float(scaled)
            else:
                w[mask] = float(v)
        else:
            a, b = payload
            p = probs[k]
            w[mask] = a + (u[mask] - cum_before[k]) / p * (b - a)
    return Environment(lattice=lattice, weights=w, scale=scale, exact=exact,
                       spec=spec, seed=seed, trial_id=trial_id)


def shift_environment(env: Environment, delta) -> Environment:
    """Add delta > 0 to every finite edge weight (infinite weights stay infinite).

    In exact mode delta must be rational; the scale is refined so the shifted
    weights remain exact integers.  Pass a Fraction or a decimal string for
    deltas that are not exactly representable as binary floats.
    """
    if env.exact:
        d = Fraction(delta) if not isinstance(delta, str) else Fraction(delta)
        if d <= 0:
            raise ValueError("shift must be positive")
        new_scale = env.scale * d.denominator // math.gcd(env.scale, d.denominator)
        factor = new_scale // env.scale
        add = int(d * new_scale)
        new_w = env.weights * float(factor) + float(add)
        finite = new_w[np.isfinite(new_w)]
        if finite.size and finite.max() > _MAX_SCALED:
            raise ValueError("shifted weights exceed the exact-arithmetic guard; use a coarser delta")
        new_spec = env.spec.shifted(d) if env.spec is not None else None
        total = (env.shift if isinstance(env.shift, Fraction) else Fraction(env.shift)) + d
        return Environment(lattice=env.lattice, weights=new_w, scale=new_scale, exact=True,
                           spec=new_spec, seed=env.seed, trial_id=env.trial_id, shift=total)
    d = float(delta) if not isinstance(delta, str) else float(Fraction(delta))
    if d <= 0:
        raise ValueError("shift must be positive")
    new_spec = env.spec.shifted(Fraction(delta)) if env.spec is not None else None
    return Environment(lattice=env.lattice, weights=env.weights + d, scale=1, exact=False,
                       spec=new_spec, seed=env.seed, trial_id=env.trial_id,
                       shift=float(env.shift) + d)


def path_time(env: Environment, p: LatticePath) -> WeightValue:
    """Sum of edge weights along p; inf if any edge weight is infinite.

    Raises ValueError when the path leaves the environment's box.
    """
    if p.edge_count == 0:
        if not env.lattice.contains(p.vertices[0]):
            raise ValueError("path leaves the box")
        return Fraction(0) if env.exact else 0.0
    total = 0
    for base, axis in p.edges():
        w = float(env.weights[env.lattice.edge_index(base, axis)])
        if math.isinf(w):
            return INF
        total += int(w) if env.exact else w
    return Fraction(total, env.scale) if env.exact else total


def dump_weights_csv(env: Environment, out: IO[str]) -> None:
    """Audit dump: one row per existing edge with endpoints and weight."""
    writer = csv.writer(out)
    writer.writerow(["slot", "tail", "head", "value"])
    for slot in np.flatnonzero(env.lattice.edge_exists):
        a, b = env.lattice.edge_endpoints(int(slot))
        v = env.weight_value(int(slot))
        writer.writerow([int(slot), " ".join(map(str, a)), " ".join(map(str, b)),
                         "inf" if v == INF else str(v)])


def dump_weights_npy(env: Environment, path: str) -> None:
    """Flat binary dump of the raw (scaled) weight array."""
    np.save(path, env.weights)
