"""Bernoulli searcher-competition model.

Each of ``n`` searchers independently finds each of ``m`` opportunities with
probability ``p``. The Monte Carlo side samples bundle matrices and reads the
searcher-optimal core split off them; the exact side evaluates the matching
binomial event probabilities in log space.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .bundles import BundleMatrix, block_value, capacity_block_value, capacity_searcher_optimal, validator_floor
from .game_core import TOL

Sampler = Callable[[np.random.Generator, int, int, float], BundleMatrix]


@dataclass(frozen=True)
class SimConfig:
    n: int
    m: int
    p: float
    capacity: Optional[int] = None
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.capacity is not None and self.capacity < 0:
            raise ValueError("capacity must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        known = {"n", "m", "p", "capacity", "trials", "seed"}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**doc)


def capacity_for(alpha: float, m: int) -> int:
    """Block capacity ceil((1 - alpha) m) for a constant fraction alpha of excluded opportunities."""
    return math.ceil((1.0 - alpha) * m - 1e-12)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    # one independent stream per (seed, trial): order-independent and parallel-safe
    return np.random.default_rng([seed, trial])


def sample_matrix(rng: np.random.Generator, n: int, m: int, p: float) -> BundleMatrix:
    return BundleMatrix((rng.random((m, n)) < p).astype(float))


@dataclass(frozen=True)
class TrialStats:
    coverage_counts: np.ndarray
    block_value: float
    validator_floor_value: float


def run_trial(config: SimConfig, trial: int, sampler: Optional[Sampler] = None) -> TrialStats:
    sampler = sampler or sample_matrix
    matrix = sampler(trial_rng(config.seed, trial), config.n, config.m, config.p)
    coverage = (matrix.values > 0).sum(axis=1)
    if config.capacity is None:
        value = block_value(matrix, range(matrix.n))
        floor = validator_floor(matrix).total
    else:
        value = capacity_block_value(matrix, config.capacity, range(matrix.n))
        floor = capacity_searcher_optimal(matrix, config.capacity).validator_share
    return TrialStats(coverage, value, floor)


def _stderr(f: float, k: int) -> float:
    return math.sqrt(f * (1.0 - f) / k)


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    freq_validator_takes_all: float
    freq_all_covered_twice: float
    freq_all_singletons: float
    freq_zero_block: float
    freq_searchers_take_all_given_positive: Optional[float]
    n_positive: int
    mean_block_value: float
    mean_floor: float
    stderr_validator_takes_all: float
    stderr_all_covered_twice: float
    stderr_all_singletons: float
    stderr_zero_block: float
    stderr_searchers_take_all_given_positive: Optional[float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config"] = asdict(self.config)
        return d


def run_trials(config: SimConfig, sampler: Optional[Sampler] = None) -> SimReport:
    takes_all = covered_twice = singletons = zero = positive = searchers_all = 0
    total_value = total_floor = 0.0
    for t in range(config.trials):
        st = run_trial(config, t, sampler)
        y = st.coverage_counts
        # unfound opportunities add nothing to either side, so compare values, not coverage
        takes_all += st.validator_floor_value >= st.block_value - TOL
        covered_twice += bool(np.all(y >= 2))
        singletons += bool(np.all(y == 1))
        if st.block_value <= TOL:
            zero += 1
        else:
            positive += 1
            searchers_all += st.validator_floor_value <= TOL
        total_value += st.block_value
        total_floor += st.validator_floor_value

    k = config.trials
    f = [takes_all / k, covered_twice / k, singletons / k, zero / k]
    cond = searchers_all / positive if positive else None
    return SimReport(
        config=config,
        freq_validator_takes_all=f[0],
        freq_all_covered_twice=f[1],
        freq_all_singletons=f[2],
        freq_zero_block=f[3],
        freq_searchers_take_all_given_positive=cond,
        n_positive=positive,
        mean_block_value=total_value / k,
        mean_floor=total_floor / k,
        stderr_validator_takes_all=_stderr(f[0], k),
        stderr_all_covered_twice=_stderr(f[1], k),
        stderr_all_singletons=_stderr(f[2], k),
        stderr_zero_block=_stderr(f[3], k),
        stderr_searchers_take_all_given_positive=_stderr(cond, positive) if positive else None,
    )


# -- exact binomial probabilities --------------------------------------------


def _log_pow1m(p: float, k: int) -> float:
    """log((1 - p)^k) with 0^0 = 1."""
    if k == 0:
        return 0.0
    if p >= 1.0:
        return -math.inf
    return k * math.log1p(-p)


def _log_p_single(n: int, p: float) -> float:
    """log P[Y = 1] for Y ~ Bin(n, p)."""
    if p <= 0.0:
        return -math.inf
    return math.log(n) + math.log(p) + _log_pow1m(p, n - 1)


def _exp_scaled(m: int, log_x: float) -> float:
    return 1.0 if m == 0 else math.exp(m * log_x)


def p_y_lt2(n: int, p: float) -> float:
    """P[Y < 2] = (1 - p)^n + n p (1 - p)^(n - 1)."""
    return math.exp(np.logaddexp(_log_pow1m(p, n), _log_p_single(n, p)))


@dataclass(frozen=True)
class EventProbabilities:
    p_y_lt2: float
    p_all_covered_twice: float
    p_all_singletons: float
    p_zero_block: float
    # with unit values the validator takes everything iff no opportunity is found exactly once
    p_no_singleton: float
    p_searchers_take_all_given_positive: Optional[float]


def exact_event_probabilities(n: int, m: int, p: float) -> EventProbabilities:
    if n < 1 or m < 0 or not 0.0 <= p <= 1.0:
        raise ValueError(f"invalid parameters n={n}, m={m}, p={p}")
    log_p0 = _log_pow1m(p, n)
    log_p1 = _log_p_single(n, p)
    log_lt2 = float(np.logaddexp(log_p0, log_p1))
    lt2 = min(1.0, math.exp(log_lt2))
    p1 = math.exp(log_p1)
    covered = _exp_scaled(m, math.log1p(-lt2)) if lt2 < 1.0 else float(m == 0)
    no_single = _exp_scaled(m, math.log1p(-p1)) if p1 < 1.0 else float(m == 0)
    zero = _exp_scaled(m, log_p0)
    at_most_single = _exp_scaled(m, log_lt2)
    positive = 1.0 - zero
    cond = (at_most_single - zero) / positive if positive > 0 else None
    return EventProbabilities(
        p_y_lt2=lt2,
        p_all_covered_twice=covered,
        p_all_singletons=_exp_scaled(m, log_p1),
        p_zero_block=zero,
        p_no_singleton=no_single,
        p_searchers_take_all_given_positive=cond,
    )


# -- root solvers --------------------------------------------------------------


def calibrate_p(n: int, clash_fraction: float, xtol: float = 1e-14) -> float:
    """Success probability ``p`` at which P[Y < 2] equals the observed non-clashing fraction."""
    if not 0.0 < clash_fraction < 1.0:
        raise ValueError(f"clash fraction must lie in (0, 1), got {clash_fraction}")
    if n < 2:
        raise ValueError("calibration needs n >= 2 (P[Y < 2] is identically 1 for n = 1)")
    return float(bisect(lambda p: p_y_lt2(n, p) - clash_fraction, 0.0, 1.0, xtol=xtol, maxiter=500))


def phi_residual(phi: float, alpha: float) -> float:
    return (1.0 + phi) * math.exp(-phi) - alpha / math.e


def solve_phi(alpha: float, xtol: float = 1e-14) -> float:
    """Unique phi > 0 with (1 + phi) e^{-phi} = alpha / e."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    hi = 1.0
    while phi_residual(hi, alpha) > 0:
        hi *= 2.0
    return float(bisect(phi_residual, 0.0, hi, args=(alpha,), xtol=xtol, maxiter=500))


# -- threshold sweeps --------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    p: float
    report: SimReport
    exact: EventProbabilities
    # the high-competition result is stated for m < n only
    in_hypothesis: bool = field(default=True)


def threshold_sweep(
    n: int,
    m: int,
    p_grid: Sequence[float],
    trials: int,
    seed: int,
    capacity: Optional[int] = None,
    sampler: Optional[Sampler] = None,
) -> list[SweepRow]:
    if len(p_grid) == 0:
        raise ValueError("p grid must be nonempty")
    rows = []
    for p in sorted(float(q) for q in p_grid):
        cfg = SimConfig(n=n, m=m, p=p, capacity=capacity, trials=trials, seed=seed)
        rows.append(SweepRow(p, run_trials(cfg, sampler), exact_event_probabilities(n, m, p), m < n))
    return rows


SWEEP_COLUMNS = [
    "p",
    "freq_validator_takes_all",
    "stderr_validator_takes_all",
    "exact_validator_takes_all",
    "freq_all_covered_twice",
    "stderr_all_covered_twice",
    "exact_all_covered_twice",
    "freq_all_singletons",
    "stderr_all_singletons",
    "exact_all_singletons",
    "freq_zero_block",
    "stderr_zero_block",
    "exact_zero_block",
    "freq_searchers_take_all_given_positive",
    "stderr_searchers_take_all_given_positive",
    "exact_searchers_take_all_given_positive",
    "mean_block_value",
    "mean_floor",
    "in_hypothesis",
]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    return repr(float(v))


def sweep_rows_as_dicts(rows: Sequence[SweepRow]) -> list[dict]:
    out = []
    for row in rows:
        r, e = row.report, row.exact
        unconstrained = r.config.capacity is None
        out.append(
            {
                "p": row.p,
                "freq_validator_takes_all": r.freq_validator_takes_all,
                "stderr_validator_takes_all": r.stderr_validator_takes_all,
                # closed forms below assume unit values and no capacity
                "exact_validator_takes_all": e.p_no_singleton if unconstrained else None,
                "freq_all_covered_twice": r.freq_all_covered_twice,
                "stderr_all_covered_twice": r.stderr_all_covered_twice,
                "exact_all_covered_twice": e.p_all_covered_twice,
                "freq_all_singletons": r.freq_all_singletons,
                "stderr_all_singletons": r.stderr_all_singletons,
                "exact_all_singletons": e.p_all_singletons,
                "freq_zero_block": r.freq_zero_block,
                "stderr_zero_block": r.stderr_zero_block,
                "exact_zero_block": e.p_zero_block,
                "freq_searchers_take_all_given_positive": r.freq_searchers_take_all_given_positive,
                "stderr_searchers_take_all_given_positive": r.stderr_searchers_take_all_given_positive,
                "exact_searchers_take_all_given_positive": (
                    e.p_searchers_take_all_given_positive if unconstrained else None
                ),
                "mean_block_value": r.mean_block_value,
                "mean_floor": r.mean_floor,
                "in_hypothesis": row.in_hypothesis,
            }
        )
    return out


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for d in sweep_rows_as_dicts(rows):
        w.writerow([_cell(d[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()
