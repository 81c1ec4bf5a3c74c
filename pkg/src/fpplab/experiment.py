"""Monte Carlo harness: growth-constant estimates, gap and tail experiments.

Each trial samples an independent environment on a box with a configurable
margin around the segment from the origin to the target, computes the
undirected and directed geodesic quantities, and checks a set of per-sample
hard guarantees (never statistical): the undirected time never exceeds the
directed time, hop counts respect the L1 lower bound, pattern crossings
respect the edge-count bound, and the five-step shifted-environment
inequality chain holds link by link.  Statistical outputs (means, confidence
intervals, tail frequencies, fitted decay parameters) are assembled into an
:class:`ExperimentSummary`.

Trials are pure functions of (law, box, seed, trial id); results are reduced
in trial order, so reruns and worker pools produce identical summaries.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .directed import directed_time
from .environment import (
    FLOAT_TOL,
    INF,
    CriticalConstants,
    DistributionSpec,
    Environment,
    UsefulFlags,
    WeightValue,
    check_useful,
    path_time,
    sample_environment,
    shift_environment,
)
from .geodesic import geodesic_time
from .lattice import BoxLattice, LatticePath, Vertex, floor_map, l1_norm
from .pattern import Pattern, count_occurrences, default_pattern, edge_count_bound_holds

logger = logging.getLogger("fpplab")

_Z95 = 1.959963984540054


def mean_ci(values: Sequence[float], z: float = _Z95) -> tuple[float, float]:
    """Sample mean and half-width of the normal confidence interval."""
    arr = np.asarray(values, dtype=np.float64)
    n = arr.size
    if n == 0:
        return math.nan, math.nan
    m = float(arr.mean())
    if n < 2:
        return m, math.nan
    sd = float(arr.std(ddof=1))
    return m, z * sd / math.sqrt(n)


def freq_se(freq: float, n: int) -> float:
    """Binomial standard error of an empirical frequency."""
    if n <= 0:
        return math.nan
    return math.sqrt(max(freq * (1.0 - freq), 0.0) / n)


def fit_exponential_tail(norms: Sequence[float], freqs: Sequence[float],
                         trials: Sequence[int]) -> tuple[float | None, float | None]:
    """Weighted log-linear fit  freq ~ alpha1 * exp(-alpha2 * norm).

    Zero frequencies are excluded; weights are the inverse delta-method
    variances of log(freq), so the scarce deep-tail points do not drown the
    fit.  Returns (None, None) with fewer than two positive points.
    """
    pts = [(x, f, m) for x, f, m in zip(norms, freqs, trials) if f > 0]
    if len(pts) < 2:
        return None, None
    x = np.array([p[0] for p in pts], dtype=np.float64)
    f = np.array([p[1] for p in pts], dtype=np.float64)
    m = np.array([p[2] for p in pts], dtype=np.float64)
    f_clip = np.minimum(f, 1.0 - 1.0 / (2.0 * m))
    w = m * f_clip / (1.0 - f_clip)
    slope, intercept = np.polyfit(x, np.log(f), 1, w=np.sqrt(w))
    return float(math.exp(intercept)), float(-slope)


# ---------------------------------------------------------------------------
# inequality chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainLink:
    name: str
    relation: str  # "<=" or "=="
    lhs: WeightValue
    rhs: WeightValue
    ok: bool


@dataclass(frozen=True)
class ChainReport:
    """Per-sample evaluation of the five-link shifted-environment chain.

    Links (gamma = canonical geodesic in the shifted environment, arrow =
    directed geodesic in the shifted environment, D = shift, T/T_D = passage
    time in the base/shifted environment):

      1. t(0,z)        <= T(gamma)
      2. T(gamma)      == T_D(gamma) - D |gamma|
      3. T_D(gamma)    <= T_D(arrow)
      4. |arrow| == l1(z)  and  T(arrow) == T_D(arrow) - D l1(z)
      5. T(arrow)      == directed time t_dir(0,z)

    When the shifted geodesic has at least (1+delta) l1(z) edges the chain
    forces  t(0,z) <= t_dir(0,z) - D delta l1(z), recorded as the conclusion.
    """

    target: Vertex
    norm1: int
    shift: str
    pattern_delta: str
    reachable: bool
    links: tuple[ChainLink, ...]
    shifted_hops: int | None
    premise_holds: bool | None
    conclusion_ok: bool | None
    shifted_geodesic: LatticePath | None = None
    directed_geodesic: LatticePath | None = None

    @property
    def all_ok(self) -> bool:
        if not self.reachable:
            return True
        if not all(link.ok for link in self.links):
            return False
        return self.conclusion_ok is not False

    @property
    def first_failure(self) -> str | None:
        for link in self.links:
            if not link.ok:
                return link.name
        if self.conclusion_ok is False:
            return "conclusion"
        return None


def _le(a, b, exact: bool) -> bool:
    if exact:
        return a <= b
    return float(a) <= float(b) + FLOAT_TOL


def _eq(a, b, exact: bool) -> bool:
    if exact:
        return a == b
    return abs(float(a) - float(b)) <= FLOAT_TOL


def verify_inequality_chain(env: Environment, x: Sequence[float], delta,
                            pattern_delta, shifted_env: Environment | None = None,
                            base_time: WeightValue | None = None,
                            base_directed_time: WeightValue | None = None) -> ChainReport:
    """Evaluate every chain link as a concrete numeric (in)equality on one sample.

    ``delta`` is the uniform weight shift; ``pattern_delta`` the relative hop
    excess in the premise.  ``shifted_env`` may inject a precomputed (or, in
    tests, deliberately corrupted) shifted environment; ``base_time`` and
    ``base_directed_time`` allow reuse of already-computed base quantities.
    """
    z = floor_map(x)
    if any(c < 0 for c in z):
        raise ValueError(f"chain target {z} must be >= 0")
    norm1 = l1_norm(z)
    exact = env.exact
    dlt = Fraction(delta) if exact else float(delta)
    pdlt = Fraction(pattern_delta) if exact else float(pattern_delta)
    origin = (0,) * env.lattice.d
    shifted = shifted_env if shifted_env is not None else shift_environment(env, delta)

    g_shift = geodesic_time(shifted, origin, z, reconstruct=True)
    if not g_shift.reachable:
        return ChainReport(target=z, norm1=norm1, shift=str(dlt), pattern_delta=str(pdlt),
                           reachable=False, links=(), shifted_hops=None,
                           premise_holds=None, conclusion_ok=None)
    gamma = g_shift.geodesic
    hops_shift = g_shift.min_hops
    t_base = base_time if base_time is not None else geodesic_time(env, origin, z, reconstruct=False).time
    t_dir_base = (base_directed_time if base_directed_time is not None
                  else directed_time(env, z, reconstruct=False).time)

    T_gamma = path_time(env, gamma)
    TD_gamma = path_time(shifted, gamma)
    d_shift = directed_time(shifted, z, reconstruct=True)
    arrow = d_shift.geodesic
    TD_arrow = path_time(shifted, arrow)
    T_arrow = path_time(env, arrow)

    links = (
        ChainLink("1: t <= T(gamma)", "<=", t_base, T_gamma, _le(t_base, T_gamma, exact)),
        ChainLink("2: T(gamma) == T_D(gamma) - D*hops", "==", T_gamma, TD_gamma - dlt * hops_shift,
                  _eq(T_gamma, TD_gamma - dlt * hops_shift, exact)),
        ChainLink("3: T_D(gamma) <= T_D(arrow)", "<=", TD_gamma, TD_arrow,
                  _le(TD_gamma, TD_arrow, exact)),
        ChainLink("4a: |arrow| == l1", "==", arrow.edge_count, norm1, arrow.edge_count == norm1),
        ChainLink("4b: T(arrow) == T_D(arrow) - D*l1", "==", T_arrow, TD_arrow - dlt * norm1,
                  _eq(T_arrow, TD_arrow - dlt * norm1, exact)),
        ChainLink("5: T(arrow) == t_dir", "==", T_arrow, t_dir_base,
                  _eq(T_arrow, t_dir_base, exact)),
    )
    premise = Fraction(hops_shift) >= (1 + pdlt) * norm1 if exact else hops_shift >= (1 + pdlt) * norm1
    conclusion = None
    if premise:
        bound = t_dir_base - dlt * pdlt * norm1
        conclusion = _le(t_base, bound, exact)
    return ChainReport(target=z, norm1=norm1, shift=str(dlt), pattern_delta=str(pdlt),
                       reachable=True, links=links, shifted_hops=hops_shift,
                       premise_holds=premise, conclusion_ok=conclusion,
                       shifted_geodesic=gamma, directed_geodesic=arrow)


# ---------------------------------------------------------------------------
# trial records and summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialOutcome:
    """One trial's measured quantities (exact values retained in exact mode)."""

    trial_id: int
    direction: tuple[float, ...]
    scale_n: int
    target: Vertex
    reachable: bool
    t: WeightValue
    t_dir: WeightValue | None
    hops: int | None
    hops_shifted: tuple[tuple[str, int | None], ...]
    pattern_count: int | None
    chain_verified: bool | None
    touched_boundary: bool | None

    def to_record(self) -> dict:
        def num(v):
            if v is None or v == INF:
                return None
            return float(v)

        def exact_str(v):
            return str(v) if isinstance(v, Fraction) else None

        return {
            "trial_id": self.trial_id,
            "direction": list(self.direction),
            "n": self.scale_n,
            "target": list(self.target),
            "reachable": self.reachable,
            "t": num(self.t),
            "t_exact": exact_str(self.t),
            "t_dir": num(self.t_dir),
            "t_dir_exact": exact_str(self.t_dir),
            "hops": self.hops,
            "hops_shifted": {k: v for k, v in self.hops_shifted},
            "pattern_count": self.pattern_count,
            "chain_verified": self.chain_verified,
            "touched_boundary": self.touched_boundary,
        }


@dataclass
class ExperimentSummary:
    """Aggregated experiment output: per-setting rows plus fitted quantities."""

    kind: str
    law: str
    direction: tuple[float, ...]
    seed: int
    trials: int
    flags: UsefulFlags
    columns: tuple[str, ...]
    rows: tuple[dict, ...]
    delta_list: tuple[str, ...] = ()
    event_delta: str | None = None
    tail_delta: str | None = None
    alpha1_hat: float | None = None
    alpha2_hat: float | None = None
    tail_monotone: bool | None = None
    subadditivity_ok: bool | None = None
    subadditivity_dir_ok: bool | None = None
    warnings: tuple[str, ...] = ()
    outcomes: tuple[TrialOutcome, ...] = ()


def _map_trials(func: Callable, args: list, workers: int) -> list:
    if workers <= 1:
        return [func(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, args, chunksize=max(1, len(args) // (8 * workers))))


def _margin_box(z: Vertex, rho: float) -> tuple[Vertex, Vertex]:
    m = math.ceil(rho * l1_norm(z))
    lo = tuple(min(0, c) - m for c in z)
    hi = tuple(max(0, c) + m for c in z)
    return lo, hi


def _scaled_target(x: Sequence[float], n: float) -> Vertex:
    return floor_map(tuple(n * float(c) for c in x))


def _check_direction(x: Sequence[float]) -> tuple[float, ...]:
    xt = tuple(float(c) for c in x)
    if any(c < 0 for c in xt) or all(c == 0 for c in xt):
        raise ValueError("direction must be >= 0 and nonzero")
    return xt


# ---------------------------------------------------------------------------
# gap experiment
# ---------------------------------------------------------------------------

def _gap_trial(args) -> TrialOutcome:
    (spec, direction, n, z, lo, hi, deltas, event_delta, pattern, seed, tid, verify_chain) = args
    lat = BoxLattice(lo, hi)
    env = sample_environment(spec, lat, seed, tid)
    origin = (0,) * lat.d
    norm1 = l1_norm(z)
    exact = env.exact

    g = geodesic_time(env, origin, z, reconstruct=True)
    t_dir = directed_time(env, z, reconstruct=False).time
    t = g.time

    pattern_count = None
    if g.reachable:
        if not _le(t, t_dir, exact):
            raise AssertionError(f"trial {tid}: t > t_dir ({t} > {t_dir})")
        if g.min_hops < norm1:
            raise AssertionError(f"trial {tid}: hops {g.min_hops} < l1 {norm1}")
        if pattern is not None:
            occ = count_occurrences(env, g.geodesic, pattern)
            pattern_count = occ.count
            if not edge_count_bound_holds(g.geodesic, occ.count):
                raise AssertionError(f"trial {tid}: edge-count bound violated")

    hops_shifted: list[tuple[str, int | None]] = []
    chain_ok: bool | None = None
    if verify_chain:
        chain_ok = True
        for ds in deltas:
            rep = verify_inequality_chain(env, z, ds, event_delta,
                                          base_time=t, base_directed_time=t_dir)
            if not rep.all_ok:
                raise AssertionError(f"trial {tid}: chain failed at {rep.first_failure} (shift {ds})")
            chain_ok = chain_ok and rep.all_ok
            hops_shifted.append((str(ds), rep.shifted_hops))
    else:
        for ds in deltas:
            gs = geodesic_time(shift_environment(env, ds), origin, z, reconstruct=False)
            hops_shifted.append((str(ds), gs.min_hops if gs.reachable else None))

    return TrialOutcome(trial_id=tid, direction=direction, scale_n=n, target=z,
                        reachable=g.reachable, t=t, t_dir=t_dir, hops=g.min_hops,
                        hops_shifted=tuple(hops_shifted), pattern_count=pattern_count,
                        chain_verified=chain_ok, touched_boundary=g.touched_boundary)


def run_gap_experiment(spec: DistributionSpec, x: Sequence[float], n_list: Sequence[int],
                       delta_list: Sequence, trials: int, seed: int, *, rho: float = 0.5,
                       constants: CriticalConstants | None = None,
                       pattern: Pattern | None = None, event_delta=None,
                       verify_chain: bool = True, workers: int = 1) -> ExperimentSummary:
    """Estimate the gap between directed and undirected times along a direction.

    For every scale n and trial: sample an environment on the margin box,
    compute t(0, floor(nx)), the directed time, the shifted-environment
    minimal hop counts for each shift in ``delta_list``, and (by default)
    verify the full inequality chain per shift.  The summary reports per-n
    means with confidence intervals, the normalized gap, and the frequency of
    the event  t <= t_dir - shift * event_delta * l1(target).
    """
    direction = _check_direction(x)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = len(direction)
    crit = constants if constants is not None else CriticalConstants.for_dimension(d)
    flags = check_useful(spec, crit)
    warnings: list[str] = []
    if not flags.useful:
        msg = "law is not useful for the strict-gap regime (mass at support minimum too large)"
        warnings.append(msg)
        logger.warning(msg)
    if pattern is None:
        try:
            pattern = default_pattern(spec, d=d)
        except ValueError as exc:
            warnings.append(f"pattern counting disabled: {exc}")
            logger.warning("pattern counting disabled: %s", exc)
            pattern = None
    deltas = [Fraction(v) if spec.is_exact else float(v) for v in delta_list]
    if event_delta is None:
        event_delta = pattern.delta if pattern is not None and pattern.delta > 0 else Fraction(1, 20)
    event_delta = Fraction(event_delta) if spec.is_exact else float(event_delta)

    rows: list[dict] = []
    all_outcomes: list[TrialOutcome] = []
    for n_idx, n in enumerate(n_list):
        z = _scaled_target(direction, n)
        norm1 = l1_norm(z)
        if norm1 < 1:
            raise ValueError(f"scale n={n} gives a zero target for direction {direction}")
        lo, hi = _margin_box(z, rho)
        args = [(spec, direction, n, z, lo, hi, deltas, event_delta, pattern, seed,
                 n_idx * trials + k, verify_chain) for k in range(trials)]
        outcomes = _map_trials(_gap_trial, args, workers)
        all_outcomes.extend(outcomes)

        reach = [o for o in outcomes if o.reachable]
        t_vals = [float(o.t) / n for o in reach]
        td_vals = [float(o.t_dir) / n for o in reach]
        gap_vals = [(float(o.t_dir) - float(o.t)) / l1_norm(o.target) for o in reach]
        mu, mu_hw = mean_ci(t_vals)
        mu_d, mu_d_hw = mean_ci(td_vals)
        gap, gap_hw = mean_ci(gap_vals)
        boundary = sum(1 for o in reach if o.touched_boundary) / max(len(reach), 1)
        if boundary > 0.01:
            msg = f"boundary contact rate {boundary:.3f} exceeds 1% at n={n}; increase rho"
            warnings.append(msg)
            logger.warning(msg)
        row = {
            "n": n,
            "target": " ".join(map(str, z)),
            "norm1": norm1,
            "trials": trials,
            "reachable_rate": len(reach) / trials,
            "mu_hat": mu,
            "mu_ci95": mu_hw,
            "mu_dir_hat": mu_d,
            "mu_dir_ci95": mu_d_hw,
            "gap_hat": gap,
            "gap_ci95_lo": gap - gap_hw if not math.isnan(gap_hw) else math.nan,
            "gap_ci95_hi": gap + gap_hw if not math.isnan(gap_hw) else math.nan,
            "boundary_contact_rate": boundary,
        }
        for ds in deltas:
            key = str(ds)
            events = 0
            for o in reach:
                threshold = o.t_dir - ds * event_delta * l1_norm(o.target)
                if _le(o.t, threshold, spec.is_exact):
                    events += 1
            row[f"gap_event_freq[{key}]"] = events / max(len(reach), 1)
            hs = [h for o in reach for lbl, h in o.hops_shifted if lbl == key and h is not None]
            row[f"hops_shifted_mean[{key}]"] = float(np.mean(hs)) if hs else math.nan
        rows.append(row)

    columns = tuple(rows[0].keys()) if rows else ()
    return ExperimentSummary(kind="gap", law=spec.describe(), direction=direction, seed=seed,
                             trials=trials, flags=flags, columns=columns, rows=tuple(rows),
                             delta_list=tuple(str(v) for v in deltas), event_delta=str(event_delta),
                             warnings=tuple(warnings), outcomes=tuple(all_outcomes))


# ---------------------------------------------------------------------------
# tail experiment
# ---------------------------------------------------------------------------

def _tail_trial(args) -> TrialOutcome:
    (spec, direction, norm_requested, z, lo, hi, pattern, seed, tid) = args
    lat = BoxLattice(lo, hi)
    env = sample_environment(spec, lat, seed, tid)
    origin = (0,) * lat.d
    norm1 = l1_norm(z)
    g = geodesic_time(env, origin, z, reconstruct=True)
    pattern_count = None
    if g.reachable:
        if g.min_hops < norm1:
            raise AssertionError(f"trial {tid}: hops {g.min_hops} < l1 {norm1}")
        if pattern is not None:
            occ = count_occurrences(env, g.geodesic, pattern)
            pattern_count = occ.count
            if not edge_count_bound_holds(g.geodesic, occ.count):
                raise AssertionError(f"trial {tid}: edge-count bound violated")
    return TrialOutcome(trial_id=tid, direction=direction, scale_n=norm_requested, target=z,
                        reachable=g.reachable, t=g.time, t_dir=None, hops=g.min_hops,
                        hops_shifted=(), pattern_count=pattern_count, chain_verified=None,
                        touched_boundary=g.touched_boundary)


def run_tail_experiment(spec: DistributionSpec, x: Sequence[float], norms: Sequence[int],
                        delta, trials: int, seed: int, *, rho: float = 0.5,
                        constants: CriticalConstants | None = None,
                        pattern: Pattern | None = None, workers: int = 1) -> ExperimentSummary:
    """Frequency of short geodesics: P(reachable and hops <= (1+delta) l1(target)).

    One row per requested norm along the direction; zero-frequency rows are
    excluded from the exponential fit and reported with the 3/n upper bound.
    """
    direction = _check_direction(x)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = len(direction)
    crit = constants if constants is not None else CriticalConstants.for_dimension(d)
    flags = check_useful(spec, crit)
    warnings: list[str] = []
    if not (flags.useful_pc and flags.finite_mass_supercritical):
        msg = "tail experiment prefers a useful law with supercritical finite mass"
        warnings.append(msg)
        logger.warning(msg)
    if pattern is None:
        try:
            pattern = default_pattern(spec, d=d)
        except ValueError:
            pattern = None
    dlt = Fraction(delta) if spec.is_exact else float(delta)
    if dlt <= 0:
        raise ValueError("tail delta must be > 0")
    unit = tuple(c / l1_norm_float(direction) for c in direction)

    rows: list[dict] = []
    all_outcomes: list[TrialOutcome] = []
    freqs: list[float] = []
    actual_norms: list[int] = []
    for n_idx, norm in enumerate(norms):
        z = floor_map(tuple(norm * c for c in unit))
        norm1 = l1_norm(z)
        if norm1 < 1:
            raise ValueError(f"norm {norm} gives a zero target for direction {direction}")
        lo, hi = _margin_box(z, rho)
        args = [(spec, direction, norm, z, lo, hi, pattern, seed, n_idx * trials + k)
                for k in range(trials)]
        outcomes = _map_trials(_tail_trial, args, workers)
        all_outcomes.extend(outcomes)

        threshold = (1 + dlt) * norm1
        events = sum(1 for o in outcomes if o.reachable and o.hops <= threshold)
        freq = events / trials
        reach_rate = sum(1 for o in outcomes if o.reachable) / trials
        boundary = sum(1 for o in outcomes if o.reachable and o.touched_boundary) / max(
            sum(1 for o in outcomes if o.reachable), 1)
        if boundary > 0.01:
            msg = f"boundary contact rate {boundary:.3f} exceeds 1% at norm={norm}; increase rho"
            warnings.append(msg)
            logger.warning(msg)
        rows.append({
            "norm_requested": norm,
            "norm1": norm1,
            "trials": trials,
            "events": events,
            "freq": freq,
            "freq_se": freq_se(freq, trials),
            "freq_upper_bound_if_zero": 3.0 / trials if events == 0 else math.nan,
            "reachable_rate": reach_rate,
            "boundary_contact_rate": boundary,
        })
        freqs.append(freq)
        actual_norms.append(norm1)

    monotone = True
    for i in range(len(freqs) - 1):
        slack = math.sqrt(freq_se(freqs[i], trials) ** 2 + freq_se(freqs[i + 1], trials) ** 2)
        if freqs[i + 1] > freqs[i] + slack:
            monotone = False
    a1, a2 = fit_exponential_tail(actual_norms, freqs, [trials] * len(freqs))
    columns = tuple(rows[0].keys()) if rows else ()
    return ExperimentSummary(kind="tail", law=spec.describe(), direction=direction, seed=seed,
                             trials=trials, flags=flags, columns=columns, rows=tuple(rows),
                             tail_delta=str(dlt), alpha1_hat=a1, alpha2_hat=a2,
                             tail_monotone=monotone, warnings=tuple(warnings),
                             outcomes=tuple(all_outcomes))


def l1_norm_float(x: Sequence[float]) -> float:
    return float(sum(abs(float(c)) for c in x))


# ---------------------------------------------------------------------------
# time-constant estimation
# ---------------------------------------------------------------------------

def _constants_trial(args) -> TrialOutcome:
    (spec, direction, n, z, lo, hi, seed, tid) = args
    lat = BoxLattice(lo, hi)
    env = sample_environment(spec, lat, seed, tid)
    origin = (0,) * lat.d
    g = geodesic_time(env, origin, z, reconstruct=False)
    t_dir = directed_time(env, z, reconstruct=False).time
    if g.reachable and not _le(g.time, t_dir, env.exact):
        raise AssertionError(f"trial {tid}: t > t_dir")
    return TrialOutcome(trial_id=tid, direction=direction, scale_n=n, target=z,
                        reachable=g.reachable, t=g.time, t_dir=t_dir, hops=g.min_hops,
                        hops_shifted=(), pattern_count=None, chain_verified=None,
                        touched_boundary=None)


def estimate_time_constants(spec: DistributionSpec, x: Sequence[float], n_list: Sequence[int],
                            trials: int, seed: int, *, rho: float = 0.5,
                            constants: CriticalConstants | None = None,
                            workers: int = 1) -> ExperimentSummary:
    """Convergence table for t(0,nx)/n and its directed counterpart.

    Finite-n means overestimate the limits (subadditivity), so rows should be
    read as upper-bound estimates; the summary flags whether consecutive
    doubled scales are non-increasing up to the confidence-interval overlap.
    """
    direction = _check_direction(x)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = len(direction)
    crit = constants if constants is not None else CriticalConstants.for_dimension(d)
    flags = check_useful(spec, crit)
    warnings: list[str] = []
    if not spec.has_finite_mean:
        msg = "law has infinite mean; directed limits may not exist"
        warnings.append(msg)
        logger.warning(msg)

    rows: list[dict] = []
    all_outcomes: list[TrialOutcome] = []
    for n_idx, n in enumerate(n_list):
        z = _scaled_target(direction, n)
        norm1 = l1_norm(z)
        if norm1 < 1:
            raise ValueError(f"scale n={n} gives a zero target")
        lo, hi = _margin_box(z, rho)
        args = [(spec, direction, n, z, lo, hi, seed, n_idx * trials + k) for k in range(trials)]
        outcomes = _map_trials(_constants_trial, args, workers)
        all_outcomes.extend(outcomes)
        reach = [o for o in outcomes if o.reachable]
        mu, mu_hw = mean_ci([float(o.t) / n for o in reach])
        mu_d, mu_d_hw = mean_ci([float(o.t_dir) / n for o in reach])
        rows.append({
            "n": n,
            "target": " ".join(map(str, z)),
            "norm1": norm1,
            "trials": trials,
            "reachable_rate": len(reach) / trials,
            "mu_hat": mu,
            "mu_ci95": mu_hw,
            "mu_dir_hat": mu_d,
            "mu_dir_ci95": mu_d_hw,
        })

    def _nonincreasing(key: str) -> bool:
        ok = True
        by_n = {row["n"]: row for row in rows}
        for n in sorted(by_n):
            if 2 * n in by_n:
                a, b = by_n[n], by_n[2 * n]
                slack = (a[f"{key}_ci95"] if not math.isnan(a[f"{key}_ci95"]) else 0.0) + \
                        (b[f"{key}_ci95"] if not math.isnan(b[f"{key}_ci95"]) else 0.0)
                if b[f"{key}_hat"] > a[f"{key}_hat"] + slack:
                    ok = False
        return ok

    columns = tuple(rows[0].keys()) if rows else ()
    return ExperimentSummary(kind="constants", law=spec.describe(), direction=direction,
                             seed=seed, trials=trials, flags=flags, columns=columns,
                             rows=tuple(rows), subadditivity_ok=_nonincreasing("mu"),
                             subadditivity_dir_ok=_nonincreasing("mu_dir"),
                             warnings=tuple(warnings), outcomes=tuple(all_outcomes))
