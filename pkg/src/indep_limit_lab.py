"""
Desk-scale limit theorems for l.i.i.d. sequences.

A sequence lives on the product of its per-coordinate finite spaces, so the
coordinate sigma-algebras are sigma-logically independent by construction and
no runtime independence check is made here. Coordinate k is drawn from its own
measure; choosing every measure equal (Identical mode) is what turns a merely
logically independent sequence into an i.i.d. one.

Moments and the Lindeberg/Kolmogorov conditions are exact rationals. Sampling
uses counter-based Philox streams keyed by (seed, replication); the k-th
uniform of a stream feeds coordinate k, so results do not depend on evaluation
order or on the number of worker threads.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats

from utils.constants import (
    CHECKPOINTS_PER_DECADE,
    DEFAULT_WORKERS,
    ECDF_GRID,
    KOLMOGOROV_MAX_TERMS,
    KOLMOGOROV_TOLERANCE,
    LIL_MIN_HORIZON,
    LINDEBERG_CHECK_EPSILON,
    LINDEBERG_THRESHOLD,
)
from utils.errors import IndepError, NotAProbability
from utils.helpers import format_float, format_rational

logger = logging.getLogger(__name__)

IDENTICAL = "Identical"
PER_COORDINATE = "PerCoordinate"


class SupportMismatch(IndepError):
    pass


class ZeroVarianceForCLT(IndepError):
    pass


class ZeroVariance(IndepError):
    pass


class HorizonExceeded(IndepError):
    pass


class ConditionNotVerified(IndepError):
    pass


class EmptyExperiment(IndepError):
    pass


class TooShort(IndepError):
    pass


@dataclass(frozen=True)
class RangeSpec:
    support: tuple

    def __post_init__(self):
        if not self.support:
            raise SupportMismatch("a range needs at least one support point")
        for a, b in zip(self.support, self.support[1:]):
            if not a < b:
                raise SupportMismatch(f"support must be strictly increasing, got {a} then {b}")

    @property
    def width(self) -> Fraction:
        return self.support[-1] - self.support[0]


def make_range(values: Sequence) -> RangeSpec:
    return RangeSpec(tuple(Fraction(v) for v in values))


@dataclass(frozen=True)
class CoordinateMeasure:
    probs: tuple

    def __post_init__(self):
        if any(p < 0 for p in self.probs):
            raise NotAProbability("coordinate probabilities must be nonnegative")
        total = sum(self.probs, Fraction(0))
        if total != 1:
            raise NotAProbability(f"coordinate probabilities sum to {total}, not 1")


def make_coordinate_measure(probs: Sequence) -> CoordinateMeasure:
    return CoordinateMeasure(tuple(Fraction(p) for p in probs))


@lru_cache(maxsize=None)
def moments(range_: RangeSpec, measure: CoordinateMeasure) -> tuple:
    """Exact (mean, variance) of the measure over the range's support."""
    if len(measure.probs) != len(range_.support):
        raise SupportMismatch(
            f"{len(measure.probs)} probabilities for {len(range_.support)} support points"
        )
    mean = sum((p * x for p, x in zip(measure.probs, range_.support)), Fraction(0))
    variance = sum((p * (x - mean) ** 2 for p, x in zip(measure.probs, range_.support)), Fraction(0))
    return mean, variance


@dataclass(frozen=True)
class CycleRule:
    """Coordinate k (1-based) uses measures[(k - 1) mod len]."""

    measures: tuple

    def __call__(self, k: int) -> CoordinateMeasure:
        return self.measures[(k - 1) % len(self.measures)]


def cycle_rule(measures: Sequence[CoordinateMeasure]) -> CycleRule:
    if not measures:
        raise ValueError("a cycle needs at least one measure")
    return CycleRule(tuple(measures))


@dataclass(frozen=True)
class SequenceSpec:
    range: RangeSpec
    mode: str
    horizon: int
    base: Optional[CoordinateMeasure] = None
    rule: Optional[Callable[[int], CoordinateMeasure]] = None

    def measure_at(self, k: int) -> CoordinateMeasure:
        if self.mode == IDENTICAL:
            return self.base
        return self.rule(k)

    def moments_at(self, k: int) -> tuple:
        return moments(self.range, self.measure_at(k))


def select_identical_measures(
    range_: RangeSpec, base: CoordinateMeasure, horizon: int, for_clt: bool = False
) -> SequenceSpec:
    """Every coordinate gets the base measure, which makes the sequence i.i.d."""
    _, variance = moments(range_, base)
    if for_clt and variance == 0:
        raise ZeroVarianceForCLT("a degenerate base measure cannot feed CLT or LIL runs")
    return SequenceSpec(range_, IDENTICAL, horizon, base=base)


def select_per_coordinate_measures(
    range_: RangeSpec, rule: Callable[[int], CoordinateMeasure], horizon: int
) -> SequenceSpec:
    # validate the rule's shape on the first coordinate; later ones fail lazily
    moments(range_, rule(1))
    return SequenceSpec(range_, PER_COORDINATE, horizon, rule=rule)


@dataclass(frozen=True)
class VarianceGrowth:
    """sigma_n^2 <= c * n^p (bound "upper"), >= (bound "lower"), or both."""

    coefficient: Fraction
    exponent: int
    bound: str = "both"


@dataclass(frozen=True)
class VarianceRule:
    term: Callable[[int], Fraction]
    growth: Optional[VarianceGrowth] = None
    name: str = "custom"


def power_rule(coefficient, exponent: int) -> VarianceRule:
    c = Fraction(coefficient)
    if c < 0:
        raise ValueError(f"variances are nonnegative, got coefficient {format_rational(c)}")
    return VarianceRule(
        term=lambda n: c * Fraction(n) ** exponent,
        growth=VarianceGrowth(c, exponent, "both"),
        name=f"{format_rational(c)}*n^{exponent}",
    )


def log_damped_rule(coefficient) -> VarianceRule:
    c = Fraction(coefficient)
    # no growth metadata: n/log(n+1) is neither bounded by n^p with p < 1 nor above n
    return VarianceRule(
        term=lambda n: c * n / Fraction(math.log(n + 1)),
        name=f"{format_rational(c)}*n/log(n+1)",
    )


def sequence_variance_rule(spec: SequenceSpec) -> VarianceRule:
    """A finite support of width w caps every variance at w^2/4."""
    return VarianceRule(
        term=lambda n: spec.moments_at(n)[1],
        growth=VarianceGrowth(spec.range.width**2 / 4, 0, "upper"),
        name="support-width bound",
    )


@dataclass(frozen=True)
class KolmogorovVerdict:
    status: str
    terms: int
    partial_sum: float
    tail_bound: Optional[Fraction] = None


def _partial_sum(rule: VarianceRule, terms: int) -> float:
    values = np.fromiter(
        (float(rule.term(n) / (n * n)) for n in range(1, terms + 1)), dtype=float, count=terms
    )
    return float(np.sum(values))


def kolmogorov_condition(
    rule: VarianceRule,
    tolerance: Fraction = KOLMOGOROV_TOLERANCE,
    max_terms: int = KOLMOGOROV_MAX_TERMS,
) -> KolmogorovVerdict:
    """
    Decides sum sigma_n^2 / n^2 < infinity from growth metadata:
    sigma_n^2 <= c n^p with p < 1 gives the tail bound c N^(p-1) / (1-p) after
    N terms; sigma_n^2 >= c n^p with p >= 1 dominates the harmonic series.
    Without metadata only a partial sum is reported and the verdict is
    undecided.
    """
    growth = rule.growth
    if growth is not None and growth.bound in ("upper", "both") and growth.coefficient == 0:
        # identically zero variances
        return KolmogorovVerdict("convergent", 1, _partial_sum(rule, 1), Fraction(0))

    if growth is not None and growth.bound in ("upper", "both") and growth.exponent < 1:
        p = growth.exponent

        def tail(N: int) -> Fraction:
            return growth.coefficient / ((1 - p) * Fraction(N) ** (1 - p))

        N = 1
        while N < max_terms and tail(N) > tolerance:
            N = min(2 * N, max_terms)
        return KolmogorovVerdict("convergent", N, _partial_sum(rule, N), tail(N))

    if growth is not None and growth.bound in ("lower", "both") and growth.exponent >= 1:
        if growth.coefficient <= 0:
            return KolmogorovVerdict("undecided", max_terms, _partial_sum(rule, max_terms))
        return KolmogorovVerdict("divergent", max_terms, _partial_sum(rule, max_terms))

    return KolmogorovVerdict("undecided", max_terms, _partial_sum(rule, max_terms))


def _variance_sum(spec: SequenceSpec, n: int) -> Fraction:
    if spec.mode == IDENTICAL:
        return n * spec.moments_at(1)[1]
    return sum((spec.moments_at(k)[1] for k in range(1, n + 1)), Fraction(0))


def lindeberg_sum(spec: SequenceSpec, n: int, epsilon) -> Fraction:
    """
    (1/B_n^2) * sum_i E_i[(X_i - m_i)^2 ; |X_i - m_i| > eps * B_n], exactly.
    The strict comparison is done on squares.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    B2 = _variance_sum(spec, n)
    if B2 == 0:
        raise ZeroVariance("B_n^2 is zero")
    threshold = epsilon**2 * B2

    @lru_cache(maxsize=None)
    def truncated(measure: CoordinateMeasure) -> Fraction:
        mean, _ = moments(spec.range, measure)
        return sum(
            (
                p * (x - mean) ** 2
                for p, x in zip(measure.probs, spec.range.support)
                if (x - mean) ** 2 > threshold
            ),
            Fraction(0),
        )

    if spec.mode == IDENTICAL:
        total = n * truncated(spec.base)
    else:
        total = sum((truncated(spec.measure_at(k)) for k in range(1, n + 1)), Fraction(0))
    return total / B2


def normal_cdf(x):
    return special.ndtr(x)


@dataclass(frozen=True)
class _Tables:
    support: np.ndarray
    cdf: np.ndarray
    means: np.ndarray
    mean_sum: Fraction
    variance_sum: Fraction


def _coordinate_tables(spec: SequenceSpec, n: int) -> _Tables:
    """Per-coordinate float CDF rows and means, each converted once from exact values."""
    rows = {}
    cdf = np.empty((n, len(spec.range.support)))
    means = np.empty(n)
    mean_sum = Fraction(0)
    variance_sum = Fraction(0)
    for k in range(1, n + 1):
        measure = spec.measure_at(k)
        if measure not in rows:
            mean, variance = moments(spec.range, measure)
            cumulative, acc = [], Fraction(0)
            for p in measure.probs:
                acc += p
                cumulative.append(float(acc))
            cumulative[-1] = 1.0
            rows[measure] = (np.array(cumulative), float(mean), mean, variance)
        row, mean_float, mean, variance = rows[measure]
        cdf[k - 1] = row
        means[k - 1] = mean_float
        mean_sum += mean
        variance_sum += variance
    support = np.array([float(x) for x in spec.range.support])
    return _Tables(support, cdf, means, mean_sum, variance_sum)


def _stream(seed: int, replication: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(replication,)))
    )


def _draw(tables: _Tables, n: int, seed: int, replication: int) -> np.ndarray:
    u = _stream(seed, replication).random(n)
    idx = (tables.cdf[:n] <= u[:, None]).sum(axis=1)
    return tables.support[idx]


def _check_horizon(spec: SequenceSpec, n: int) -> None:
    if n < 1:
        raise TooShort("n must be at least 1")
    if n > spec.horizon:
        raise HorizonExceeded(f"n={n} exceeds the sequence horizon {spec.horizon}")


def sample_path(spec: SequenceSpec, n: int, seed: int, replication: int = 0) -> list:
    _check_horizon(spec, n)
    return _draw(_coordinate_tables(spec, n), n, seed, replication).tolist()


def checkpoint_grid(n: int, start: int = 1) -> list:
    """About CHECKPOINTS_PER_DECADE log-spaced steps per decade in [start, n], n always included."""
    steps = set()
    j = 0
    while True:
        k = int(round(10 ** (j / CHECKPOINTS_PER_DECADE)))
        if k > n:
            break
        if k >= start:
            steps.add(k)
        j += 1
    steps.add(n)
    return sorted(steps)


@dataclass(frozen=True)
class SimulationReport:
    mode: str
    n: int
    replications: int
    seed: int
    mu_P: Fraction
    sigma2: Fraction
    B_n2: Fraction
    trajectory: tuple = ()
    final_deviation: Optional[float] = None
    ks_distance: Optional[float] = None
    stat_mean: Optional[float] = None
    stat_variance: Optional[float] = None
    # (x, empirical CDF, normal CDF)
    ecdf: tuple = ()
    running_max: Optional[float] = None
    running_abs_max: Optional[float] = None
    samples: tuple = field(default=(), repr=False)

    def as_dict(self) -> dict:
        """Exact moments as "p/q" strings plus their floats; samples stay out."""
        data = {
            "mode": self.mode,
            "n": self.n,
            "replications": self.replications,
            "seed": self.seed,
            "mu_P": format_rational(self.mu_P),
            "mu_P_float": format_float(float(self.mu_P)),
            "sigma2": format_rational(self.sigma2),
            "sigma2_float": format_float(float(self.sigma2)),
            "B_n2": format_rational(self.B_n2),
            "B_n2_float": format_float(float(self.B_n2)),
            "trajectory": [[k, format_float(v)] for k, v in self.trajectory],
        }
        for name in ("final_deviation", "ks_distance", "stat_mean", "stat_variance", "running_max", "running_abs_max"):
            value = getattr(self, name)
            if value is not None:
                data[name] = format_float(value)
        if self.ecdf:
            data["ecdf"] = [[x, format_float(e), format_float(c)] for x, e, c in self.ecdf]
        return data

    def csv_rows(self) -> list:
        if self.mode == "CLT":
            return [(r, v) for r, v in enumerate(self.samples)]
        return list(self.trajectory)


def write_csv(report: SimulationReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", "statistic"])
        for step, value in report.csv_rows():
            writer.writerow([step, format_float(value)])
    logger.info(f"✅ Wrote {len(report.csv_rows())} rows to {path}")
    return path


def run_lln(spec: SequenceSpec, n: int, seed: int) -> SimulationReport:
    """Running centered mean (1/k) sum_{i<=k} (X_i - E[X_i]) on a log grid."""
    _check_horizon(spec, n)
    if spec.mode == PER_COORDINATE:
        verdict = kolmogorov_condition(sequence_variance_rule(spec))
        if verdict.status != "convergent":
            raise ConditionNotVerified(f"Kolmogorov condition is {verdict.status}")

    tables = _coordinate_tables(spec, n)
    x = _draw(tables, n, seed, 0)
    running = np.cumsum(x - tables.means) / np.arange(1, n + 1)
    grid = checkpoint_grid(n)
    logger.info(f"LLN run: n={n}, seed={seed}, final deviation {running[-1]:.6g}")
    return SimulationReport(
        mode="LLN",
        n=n,
        replications=1,
        seed=seed,
        mu_P=tables.mean_sum / n,
        sigma2=tables.variance_sum / n,
        B_n2=tables.variance_sum,
        trajectory=tuple((k, float(running[k - 1])) for k in grid),
        final_deviation=float(running[-1]),
    )


def run_clt(
    spec: SequenceSpec, n: int, replications: int, seed: int, workers: int = DEFAULT_WORKERS
) -> SimulationReport:
    """(S_n - sum E[X_i]) / B_n per replication, compared with the standard normal."""
    _check_horizon(spec, n)
    if replications < 1:
        raise EmptyExperiment("a CLT run needs at least one replication")
    tables = _coordinate_tables(spec, n)
    if tables.variance_sum == 0:
        raise ZeroVariance("B_n^2 is zero")
    if spec.mode == PER_COORDINATE:
        value = lindeberg_sum(spec, n, LINDEBERG_CHECK_EPSILON)
        if value > LINDEBERG_THRESHOLD:
            raise ConditionNotVerified(
                f"Lindeberg sum {format_rational(value)} exceeds {format_rational(LINDEBERG_THRESHOLD)}"
            )

    B_n = math.sqrt(float(tables.variance_sum))

    def replicate(r: int) -> float:
        return float(np.sum(_draw(tables, n, seed, r) - tables.means)) / B_n

    with ThreadPoolExecutor(max_workers=workers) as executor:
        statistics = np.array(list(executor.map(replicate, range(replications))))

    ks = stats.kstest(statistics, "norm").statistic
    ordered = np.sort(statistics)
    ecdf = tuple(
        (x, float(np.searchsorted(ordered, x, side="right")) / replications, float(normal_cdf(x)))
        for x in ECDF_GRID
    )
    logger.info(f"CLT run: n={n}, replications={replications}, KS distance {ks:.6g}")
    return SimulationReport(
        mode="CLT",
        n=n,
        replications=replications,
        seed=seed,
        mu_P=tables.mean_sum / n,
        sigma2=tables.variance_sum / n,
        B_n2=tables.variance_sum,
        ks_distance=float(ks),
        stat_mean=float(np.mean(statistics)),
        stat_variance=float(np.var(statistics)),
        ecdf=ecdf,
        samples=tuple(statistics.tolist()),
    )


def run_lil(spec: SequenceSpec, n: int, seed: int) -> SimulationReport:
    """
    (S_k - sum E[X_i]) / sqrt(2 B_k^2 log log B_k) for PerCoordinate sequences,
    sqrt(2 sigma^2 k log log k) for Identical ones, from k = 100 on.
    """
    _check_horizon(spec, n)
    if n < LIL_MIN_HORIZON:
        raise TooShort(f"LIL needs n >= {LIL_MIN_HORIZON}, got {n}")
    tables = _coordinate_tables(spec, n)
    if tables.variance_sum == 0:
        raise ZeroVariance("every coordinate is degenerate")

    steps = np.arange(1, n + 1, dtype=float)
    if spec.mode == IDENTICAL:
        sigma2 = float(spec.moments_at(1)[1])
        start = LIL_MIN_HORIZON
        with np.errstate(divide="ignore", invalid="ignore"):
            norm = np.sqrt(2.0 * sigma2 * steps * np.log(np.log(steps)))
    else:
        cumulative, acc = np.empty(n), Fraction(0)
        for k in range(1, n + 1):
            acc += spec.moments_at(k)[1]
            cumulative[k - 1] = float(acc)
        positive = np.nonzero(cumulative > math.e**2)[0]
        start = max(LIL_MIN_HORIZON, int(positive[0]) + 1) if positive.size else n + 1
        if start > n:
            raise TooShort("B_n never grows past e within the horizon")
        with np.errstate(divide="ignore", invalid="ignore"):
            norm = np.sqrt(2.0 * cumulative * np.log(0.5 * np.log(cumulative)))

    x = _draw(tables, n, seed, 0)
    centered = np.cumsum(x - tables.means)
    statistic = centered[start - 1 :] / norm[start - 1 :]
    grid = checkpoint_grid(n, start)
    logger.info(f"LIL run: n={n}, seed={seed}, running max {statistic.max():.6g}")
    return SimulationReport(
        mode="LIL",
        n=n,
        replications=1,
        seed=seed,
        mu_P=tables.mean_sum / n,
        sigma2=tables.variance_sum / n,
        B_n2=tables.variance_sum,
        trajectory=tuple((k, float(statistic[k - start])) for k in grid),
        running_max=float(statistic.max()),
        running_abs_max=float(np.abs(statistic).max()),
    )
