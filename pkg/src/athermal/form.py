"""Finite-size formation plans for two-level quasiclassical states.

Formation runs in three stages: a fixed-type stage mapping one Gibbs type
onto one target type, a conditional stage extending this to all typical
Gibbs types through a log-sized register, and a type-distribution stage
that reproduces the target's mixture over types with the Birkhoff
primitive (probabilistic energy-commuting unitaries conditioned on extra
Gibbs strings).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .distill import rate_limit, rank_fixed_weight, unrank_fixed_weight
from .typeclass import (
    TypeDescriptor,
    log_binomial,
    type_probability,
    typical_range,
)

__all__ = [
    "InfeasibleFormationError",
    "FormationRecord",
    "FormationPlan",
    "BirkhoffSpan",
    "BirkhoffPartition",
    "FormationStringMap",
    "build_formation_string_map",
    "solve_formation_single_type",
    "formation_feasible",
    "plan_formation",
    "birkhoff_partition",
    "gibbs_type_birkhoff",
    "type_distribution",
]


class InfeasibleFormationError(RuntimeError):
    """No m up to ell + n satisfies the formation counting inequality.

    Should never trigger for typical types; reaching it indicates a bug.
    """


def formation_feasible(n: int, target_ones: int, ell: int, gibbs_ones: int,
                       m: int, exact: bool = True) -> bool:
    """Whether C(ell,g) <= C(m+ell-n, g+m-t) C(n,t) with a valid exhaust."""
    k = m + ell - n
    e = gibbs_ones + m - target_ones
    if k < 0 or e < 0 or e > k:
        return False
    if exact:
        return math.comb(ell, gibbs_ones) <= math.comb(k, e) * math.comb(n, target_ones)
    return log_binomial(ell, gibbs_ones) <= (log_binomial(k, e)
                                             + log_binomial(n, target_ones))


def solve_formation_single_type(n: int, target_ones: int, ell: int,
                                gibbs_ones: int, exact: bool = True) -> int:
    """Smallest m >= 0 making the formation inequality hold.

    The feasible set is upward closed in m; raises
    InfeasibleFormationError when even m = ell + n fails.
    """
    if not 0 <= gibbs_ones <= ell or not 0 <= target_ones <= n:
        raise ValueError("one-counts out of range")
    lo = max(0, n - ell, target_ones - gibbs_ones)
    hi = ell + n
    if not formation_feasible(n, target_ones, ell, gibbs_ones, hi, exact=exact):
        raise InfeasibleFormationError(
            f"no feasible m <= {hi} for (n={n}, t={target_ones}, ell={ell}, g={gibbs_ones})"
        )
    while lo < hi:
        mid = (lo + hi) // 2
        if formation_feasible(n, target_ones, ell, gibbs_ones, mid, exact=exact):
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass(frozen=True)
class FormationRecord:
    """Injection record: one Gibbs type onto one target type plus exhaust."""

    gibbs_ones: int
    target_ones: int
    exhaust_ones: int
    m: int
    log_gibbs_cardinality: float
    log_output_cardinality: float      # exhaust x target
    gibbs_cardinality: int | None = None
    output_cardinality: int | None = None

    def check(self) -> None:
        if self.gibbs_ones + self.m != self.exhaust_ones + self.target_ones:
            raise ValueError("formation record violates conservation of 1s")
        if self.gibbs_cardinality is not None and self.output_cardinality is not None:
            if self.gibbs_cardinality > self.output_cardinality:
                raise ValueError("formation record violates the counting inequality")
        elif self.log_gibbs_cardinality > self.log_output_cardinality + 1e-6:
            raise ValueError("formation record violates the counting inequality")


@dataclass(frozen=True)
class BirkhoffSpan:
    """A contiguous run of lexicographic ranks inside one Gibbs type class."""

    ones: int
    start: int
    count: int


@dataclass(frozen=True)
class BirkhoffPartition:
    """Partition of a Gibbs eigenstring index space realizing target weights.

    ``sets[k]`` collects the strings whose conditional unitary is U_k; the
    greedy largest-first construction keeps ``max_deviation`` at or below
    the largest single string weight.
    """

    ell: int
    target_weights: tuple[float, ...]
    sets: tuple[tuple[BirkhoffSpan, ...], ...]
    achieved_weights: tuple[float, ...]
    max_deviation: float
    tolerance: float
    within_tolerance: bool
    grouped: bool = True

    def explicit_sets(self) -> list[list[int]]:
        """Expand spans into flat string indices; small index spaces only.

        Grouped partitions use the type-major lexicographic layout (all
        weight-0 strings first, then weight-1, ...); ungrouped partitions
        store the original string index in the ``ones`` slot.
        """
        if not self.grouped:
            return [sorted(span.ones for span in spans) for spans in self.sets]
        offsets = {}
        acc = 0
        for ones in range(self.ell + 1):
            offsets[ones] = acc
            acc += math.comb(self.ell, ones)
        out = []
        for spans in self.sets:
            indices: list[int] = []
            for span in spans:
                base = offsets[span.ones] + span.start
                indices.extend(range(base, base + span.count))
            out.append(sorted(indices))
        return out


def _greedy_fill(groups: list[tuple[float, int, int]], targets: Sequence[float],
                 ell: int, tolerance: float, grouped: bool = True) -> BirkhoffPartition:
    """Largest-first, most-deficient-bin greedy over weight groups.

    groups: (single-string weight, multiplicity, ones-count) triples.
    """
    n_sets = len(targets)
    spans: list[list[BirkhoffSpan]] = [[] for _ in range(n_sets)]
    achieved = [0.0] * n_sets
    heap = [(-float(t), k) for k, t in enumerate(targets)]
    heapq.heapify(heap)

    max_weight = max((w for w, mult, _ in groups if mult > 0), default=0.0)

    for weight, mult, ones in sorted(groups, key=lambda x: (-x[0], x[2])):
        offset = 0
        remaining = mult
        while remaining > 0:
            neg_d, k = heapq.heappop(heap)
            deficit = -neg_d
            if weight <= 0.0 or deficit <= 0.0:
                # Zero-weight groups, or float slop past all targets: dump.
                chunk = remaining
            else:
                # Fill the most-deficient bin up to its target in one span;
                # single items handle the sub-weight remainder, keeping the
                # deviation below the largest single weight.
                chunk = min(remaining, max(1, math.floor(deficit / weight)))
            spans[k].append(BirkhoffSpan(ones, offset, chunk))
            achieved[k] += chunk * weight
            offset += chunk
            remaining -= chunk
            heapq.heappush(heap, (-(deficit - chunk * weight), k))

    merged = []
    for k in range(n_sets):
        runs: list[BirkhoffSpan] = []
        for span in sorted(spans[k], key=lambda s: (s.ones, s.start)):
            if runs and runs[-1].ones == span.ones and runs[-1].start + runs[-1].count == span.start:
                runs[-1] = BirkhoffSpan(span.ones, runs[-1].start, runs[-1].count + span.count)
            else:
                runs.append(span)
        merged.append(tuple(runs))

    deviation = max(abs(a - float(t)) for a, t in zip(achieved, targets))
    return BirkhoffPartition(
        ell=ell,
        target_weights=tuple(float(t) for t in targets),
        sets=tuple(merged),
        achieved_weights=tuple(achieved),
        max_deviation=deviation,
        tolerance=tolerance,
        within_tolerance=bool(deviation <= tolerance + 1e-12 and max_weight <= tolerance + 1e-12),
        grouped=grouped,
    )


def birkhoff_partition(weights: Sequence[float], targets: Sequence[float],
                       tolerance: float) -> BirkhoffPartition:
    """Partition explicit string weights into sets approximating the targets.

    Guaranteed deviation <= tolerance whenever the largest single weight is
    <= tolerance; otherwise the result carries the best greedy deviation
    with ``within_tolerance`` cleared.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if abs(sum(float(w) for w in weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    if abs(sum(float(t) for t in targets) - 1.0) > 1e-9:
        raise ValueError("targets must sum to 1")
    # Each string is its own group; the ones-slot stores the string index
    # so explicit indices can be recovered from the spans.
    groups = [(float(w), 1, i) for i, w in enumerate(weights)]
    return _greedy_fill(groups, targets, ell=len(groups), tolerance=tolerance,
                        grouped=False)


def gibbs_type_birkhoff(ell: int, q: float, targets: Sequence[float],
                        tolerance: float) -> BirkhoffPartition:
    """Birkhoff partition over the 2^ell Gibbs eigenstrings, grouped by type.

    Strings of equal weight q^t (1-q)^(ell-t) are handled in blocks, so the
    construction scales with the number of types rather than of strings.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    groups = []
    for ones in range(ell + 1):
        weight = (q ** ones) * ((1.0 - q) ** (ell - ones))
        groups.append((weight, math.comb(ell, ones), ones))
    return _greedy_fill(groups, targets, ell=ell, tolerance=tolerance)


def type_distribution(n: int, p, window: Sequence[TypeDescriptor]):
    """Renormalized binomial type probabilities over a window of types."""
    if not window:
        raise ValueError("window must be nonempty")
    rational = isinstance(p, (Fraction, int))
    source = (1 - p, p) if rational else (1.0 - float(p), float(p))
    masses = [type_probability(t, source) for t in window]
    total = sum(masses)
    if total == 0:
        raise ValueError("window has zero mass under the source")
    return [m / total for m in masses]


@dataclass(frozen=True)
class FormationPlan:
    """Complete finite-n formation protocol record.

    ``m`` excited-state inputs and ``ell`` Gibbs states produce ``n`` target
    copies plus a ``k``-system exhaust; one m serves every (Gibbs type,
    target type) pair in the windows.  ``cost_rate`` is the number of
    copies formed per consumed excited qubit (approaching the inverse
    distillation rate); ``work_per_copy`` is its reciprocal m/n.
    """

    n: int
    ell: int
    m: int
    k: int
    p: float
    beta: float
    width: float
    register_bits: int
    per_type_maps: tuple[FormationRecord, ...]
    birkhoff: BirkhoffPartition
    cost_rate: float
    work_per_copy: float
    failure_mass: float
    mode: str
    free_target: bool = False
    worst_type: FormationRecord | None = None
    gibbs_window: tuple[int, int] = (0, 0)
    target_window: tuple[int, int] = (0, 0)
    fixed_point_iterations: int = 0
    records_complete: bool = True

    def __post_init__(self):
        if self.m + self.ell != self.n + self.k:
            raise ValueError("reverse conservation of dimension violated")
        n_types = self.gibbs_window[1] - self.gibbs_window[0] + 1
        if self.register_bits > max(0, (n_types - 1)).bit_length():
            raise ValueError("register larger than needed for the type count")
        for record in self.per_type_maps:
            if record.m != self.m:
                raise ValueError("formation record carries a foreign m")
            record.check()

    @property
    def q(self) -> float:
        return math.exp(-self.beta) / (1.0 + math.exp(-self.beta))

    def covers(self, gibbs_ones: int, target_ones: int) -> bool:
        return (self.gibbs_window[0] <= gibbs_ones <= self.gibbs_window[1]
                and self.target_window[0] <= target_ones <= self.target_window[1])


def _formation_m_loggamma(n: int, ell: int, g_window: tuple[int, int],
                          t_window: tuple[int, int]) -> tuple[int, tuple[int, int]]:
    """max over the window of the per-pair minimal m, via grouped log-gamma."""
    g_lo, g_hi = g_window
    t_lo, t_hi = t_window
    # k = m + ell - n reaches 2 ell at the search ceiling m = ell + n.
    table = gammaln(np.arange(2 * (ell + n) + 2, dtype=float))

    def ln_c(big: int, ks: np.ndarray) -> np.ndarray:
        return table[big + 1] - table[ks + 1] - table[big - ks + 1]

    gs = np.arange(g_lo, g_hi + 1)
    ts = np.arange(t_lo, t_hi + 1)
    lhs_g = ln_c(ell, gs)
    rhs_t = ln_c(n, ts)

    # Group by j = g - t; the exhaust count is e = j + m.
    j_lo, j_hi = g_lo - t_hi, g_hi - t_lo
    lhs_max = np.full(j_hi - j_lo + 1, -np.inf)
    arg_g = np.zeros(j_hi - j_lo + 1, dtype=np.int64)
    for i, t in enumerate(ts):
        start = g_lo - t - j_lo
        seg = lhs_max[start:start + len(gs)]
        vals = lhs_g - rhs_t[i]
        better = vals > seg
        seg[better] = vals[better]
        arg_g[start:start + len(gs)][better] = gs[better]

    js = np.arange(j_lo, j_hi + 1)
    if j_hi > ell - n:
        raise InfeasibleFormationError("a window pair violates e <= k at every m")

    def margins(m: int) -> np.ndarray:
        return ln_c(m + ell - n, js + m) - lhs_max

    def feasible(m: int) -> bool:
        if m + ell - n < 0 or j_lo + m < 0:
            return False
        return bool(margins(m).min() >= 0.0)

    lo = max(0, n - ell, -j_lo)
    hi = ell + n
    if not feasible(hi):
        raise InfeasibleFormationError("window infeasible at m = ell + n")
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1
    m_star = lo
    probe = max(lo - 1, max(0, n - ell, -j_lo))
    j_binding = int(js[int(np.argmin(margins(probe)))])
    g_binding = int(arg_g[j_binding - j_lo])
    return m_star, (g_binding, g_binding - j_binding)


def _formation_m_exact(n: int, ell: int, g_window: tuple[int, int],
                       t_window: tuple[int, int]) -> tuple[int, tuple[int, int]]:
    """Exact-integer worst-case m: log-gamma candidate, then refinement."""
    m, worst = _formation_m_loggamma(n, ell, g_window, t_window)
    floor_m = max(0, n - ell, t_window[1] - g_window[0])

    def first_infeasible(m_try: int) -> tuple[int, int] | None:
        for g in range(g_window[0], g_window[1] + 1):
            for t in range(t_window[0], t_window[1] + 1):
                if not formation_feasible(n, t, ell, g, m_try, exact=True):
                    return (g, t)
        return None

    bad = first_infeasible(m)
    while bad is not None:
        m += 1
        if m > ell + n:
            raise InfeasibleFormationError("window infeasible at m = ell + n")
        worst = bad
        bad = first_infeasible(m)
    while m > floor_m and first_infeasible(m - 1) is None:
        m -= 1
    if m > floor_m:
        worst = first_infeasible(m - 1)
    return m, worst


def _formation_record(n: int, ell: int, g: int, t: int, m: int,
                      exact: bool) -> FormationRecord:
    k = m + ell - n
    e = g + m - t
    if exact:
        gc = math.comb(ell, g)
        oc = math.comb(k, e) * math.comb(n, t)
        return FormationRecord(g, t, e, m, math.log(gc) if gc else 0.0,
                               math.log(oc), gc, oc)
    return FormationRecord(g, t, e, m, log_binomial(ell, g),
                           log_binomial(k, e) + log_binomial(n, t))


def plan_formation(n: int, p: float, beta: float, width: float = 3.0,
                   exact: bool | None = None,
                   exact_threshold: int | None = None,
                   birkhoff_tolerance: float = 1e-3,
                   max_records: int = 200_000) -> FormationPlan:
    """Construct a formation plan with ell = ceil(m^(3/2)) Gibbs copies.

    The bath size depends on the solved m, so the pair (ell, m) is settled
    by a short fixed-point iteration seeded with the asymptotic work cost.
    One m covers every (Gibbs type, target type) pair in the typical
    windows (worst case over both).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if exact_threshold is None:
        from .distill import PLAN_EXACT_THRESHOLD

        exact_threshold = PLAN_EXACT_THRESHOLD
    r_lim = rate_limit(p, beta)
    q = math.exp(-beta) / (1.0 + math.exp(-beta))
    free_target = abs(p - q) < 1e-12

    if free_target:
        # Forming Gibbs states is free: take ell = n thermal copies as-is.
        ell, m = n, 0
        t_window = typical_range(n, p, width)
        g_window = t_window
        exact_mode = (ell + n) <= exact_threshold if exact is None else exact
        records = tuple(
            _formation_record(n, ell, t, t, 0, exact_mode)
            for t in range(t_window[0], t_window[1] + 1)
        )
        window_types = [TypeDescriptor.two_level(n, t)
                        for t in range(t_window[0], t_window[1] + 1)]
        targets = type_distribution(n, p, window_types)
        ell_b = _birkhoff_bath_size(q, birkhoff_tolerance)
        birkhoff = gibbs_type_birkhoff(ell_b, q, targets, birkhoff_tolerance)
        n_types = g_window[1] - g_window[0] + 1
        return FormationPlan(
            n=n, ell=ell, m=0, k=0, p=p, beta=beta, width=width,
            register_bits=max(0, (n_types - 1)).bit_length(),
            per_type_maps=records,
            birkhoff=birkhoff,
            cost_rate=math.inf,
            work_per_copy=0.0,
            failure_mass=max(0.0, 1.0 - _window_mass(n, p, t_window)),
            mode="exact" if exact_mode else "loggamma",
            free_target=True,
            gibbs_window=g_window,
            target_window=t_window,
        )

    t_window = typical_range(n, p, width)
    m_prev = max(1, math.ceil(n * r_lim))
    m = m_prev
    ell = 0
    g_window = (0, 0)
    exact_mode = True
    iterations = 0
    worst = (0, 0)
    for iterations in range(1, 25):
        ell = math.ceil(m_prev ** 1.5)
        g_window = typical_range(ell, q, width)
        exact_mode = (ell + n) <= exact_threshold if exact is None else exact
        try:
            if exact_mode:
                m, worst = _formation_m_exact(n, ell, g_window, t_window)
            else:
                m, worst = _formation_m_loggamma(n, ell, g_window, t_window)
        except InfeasibleFormationError:
            # Bath too small for the windows (some pair needs e > k at every
            # m); grow it and retry.
            m_prev = max(m_prev + 1, math.ceil(m_prev * 1.3))
            continue
        if m <= m_prev or abs(m - m_prev) <= max(1, m_prev // 1000):
            break
        m_prev = m
    else:
        raise InfeasibleFormationError("formation fixed point did not settle")

    k = m + ell - n
    n_types = g_window[1] - g_window[0] + 1
    register_bits = max(0, (n_types - 1)).bit_length()

    bath_mass = _window_mass(ell, q, g_window)
    target_mass = _window_mass(n, p, t_window)
    failure_mass = max(0.0, 1.0 - bath_mass * target_mass)

    num_pairs = n_types * (t_window[1] - t_window[0] + 1)
    complete = num_pairs <= max_records
    records: list[FormationRecord] = []
    if complete:
        for g in range(g_window[0], g_window[1] + 1):
            for t in range(t_window[0], t_window[1] + 1):
                records.append(_formation_record(n, ell, g, t, m, exact_mode))
    worst_record = _formation_record(n, ell, worst[0], worst[1], m, exact_mode)
    if not complete:
        records.append(worst_record)

    window_types = [TypeDescriptor.two_level(n, t)
                    for t in range(t_window[0], t_window[1] + 1)]
    targets = type_distribution(n, p, window_types)
    ell_b = _birkhoff_bath_size(q, birkhoff_tolerance)
    birkhoff = gibbs_type_birkhoff(ell_b, q, targets, birkhoff_tolerance)

    return FormationPlan(
        n=n, ell=ell, m=m, k=k, p=p, beta=beta, width=width,
        register_bits=register_bits,
        per_type_maps=tuple(records),
        birkhoff=birkhoff,
        cost_rate=n / m if m else math.inf,
        work_per_copy=m / n,
        failure_mass=failure_mass,
        mode="exact" if exact_mode else "loggamma",
        worst_type=worst_record,
        gibbs_window=g_window,
        target_window=t_window,
        fixed_point_iterations=iterations,
        records_complete=complete,
    )


def _window_mass(n: int, p: float, window: tuple[int, int]) -> float:
    from .distill import binomial_window_mass

    return binomial_window_mass(n, p, window)


def _birkhoff_bath_size(q: float, tolerance: float) -> int:
    """Smallest ell with max(q, 1-q)^ell <= tolerance."""
    top = max(q, 1.0 - q)
    if top >= 1.0:
        raise ValueError("degenerate Gibbs weight")
    return max(1, math.ceil(math.log(tolerance) / math.log(top)))


@dataclass(frozen=True)
class FormationStringMap:
    """Explicit injection for one (Gibbs type, target type) pair.

    Gibbs strings (lexicographic within their type) are assigned round
    robin: input rank i maps to target string i mod N_T and exhaust string
    i div N_T, so exhaust sets of distinct target strings differ in size by
    at most one and the traced-out output is uniform over the target type
    up to total variation (#targets)/(#inputs).
    """

    ell: int
    n: int
    m: int
    gibbs_ones: int
    target_ones: int

    @property
    def k(self) -> int:
        return self.m + self.ell - self.n

    @property
    def exhaust_ones(self) -> int:
        return self.gibbs_ones + self.m - self.target_ones

    def apply(self, gibbs_string: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if len(gibbs_string) != self.ell or sum(gibbs_string) != self.gibbs_ones:
            raise ValueError("Gibbs string does not match the type")
        n_targets = math.comb(self.n, self.target_ones)
        i = rank_fixed_weight(gibbs_string)
        target = unrank_fixed_weight(i % n_targets, self.n, self.target_ones)
        exhaust = unrank_fixed_weight(i // n_targets, self.k, self.exhaust_ones)
        return target, exhaust


def build_formation_string_map(plan: FormationPlan,
                               pair: tuple[int, int]) -> FormationStringMap:
    g, t = pair
    if not plan.covers(g, t):
        raise ValueError(f"(gibbs, target) pair {pair} is not covered by the plan")
    if not formation_feasible(plan.n, t, plan.ell, g, plan.m,
                              exact=plan.mode == "exact"):
        raise ValueError(f"pair {pair} has no feasible injection")
    return FormationStringMap(plan.ell, plan.n, plan.m, g, t)
