"""Backrun-bundle data pipeline: ingest CSV exports, median profit per backrun
count, count histograms, and OLS of log median profit on backrun count."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .bundles import BundleMatrix, validator_floor
from .stochastic import trial_rng

HEADER = ["target_id", "backrun_count", "profit"]


class BackrunParseError(ValueError):
    pass


@dataclass(frozen=True)
class BackrunRecord:
    target_id: str
    backrun_count: int
    profit: float


def parse_backrun_csv(stream: TextIO) -> list[BackrunRecord]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    if [h.strip() for h in header] != HEADER:
        raise BackrunParseError(f"row 1: expected header {','.join(HEADER)}, got {','.join(header)}")
    records = []
    for rowno, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != 3:
            raise BackrunParseError(f"row {rowno}: expected 3 fields, got {len(row)}")
        target, count_s, profit_s = (c.strip() for c in row)
        try:
            count = int(count_s)
        except ValueError:
            raise BackrunParseError(f"row {rowno}: backrun_count {count_s!r} is not an integer") from None
        if count < 0:
            raise BackrunParseError(f"row {rowno}: backrun_count must be >= 0, got {count}")
        try:
            profit = float(profit_s)
        except ValueError:
            raise BackrunParseError(f"row {rowno}: profit {profit_s!r} is not a number") from None
        if not math.isfinite(profit) or profit < 0:
            raise BackrunParseError(f"row {rowno}: profit must be finite and >= 0, got {profit_s}")
        records.append(BackrunRecord(target, count, profit))
    return records


def records_to_csv(records: Iterable[BackrunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([r.target_id, r.backrun_count, repr(r.profit)])
    return buf.getvalue()


@dataclass(frozen=True)
class GroupMedian:
    backrun_count: int
    median: float
    size: int


def group_median_profit(records: Iterable[BackrunRecord]) -> list[GroupMedian]:
    groups: dict[int, list[float]] = defaultdict(list)
    for r in records:
        groups[r.backrun_count].append(r.profit)
    # statistics.median averages the two central values for even sizes
    return [GroupMedian(c, float(statistics.median(groups[c])), len(groups[c])) for c in sorted(groups)]


@dataclass(frozen=True)
class HistogramBin:
    low: int
    high: int
    count: int


def histogram_counts(records: Iterable[BackrunRecord], bin_width: int = 5) -> list[HistogramBin]:
    """Counts of targets per backrun-count bin [0, w-1], [w, 2w-1], ... up to the last nonempty bin."""
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    keys = [r.backrun_count // bin_width for r in records]
    counts = np.bincount(keys) if keys else []
    return [HistogramBin(k * bin_width, (k + 1) * bin_width - 1, int(c)) for k, c in enumerate(counts)]


@dataclass(frozen=True)
class RegressionResult:
    intercept: float
    slope: float
    r_squared: float
    n_obs: int
    stderr_intercept: float
    stderr_slope: float
    n_dropped: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionResult":
        return cls(
            intercept=float(doc["intercept"]),
            slope=float(doc["slope"]),
            r_squared=float(doc["r_squared"]),
            n_obs=int(doc["n_obs"]),
            stderr_intercept=float(doc["stderr_intercept"]),
            stderr_slope=float(doc["stderr_slope"]),
            n_dropped=int(doc.get("n_dropped", 0)),
        )

    def to_json(self) -> str:
        return json.dumps({k: _sig6(v) if isinstance(v, float) else v for k, v in self.to_dict().items()}, indent=2)


def _sig6(x: float) -> float:
    return float(f"{x:.6g}")


def ols_log_median(groups: Sequence[GroupMedian], weighted: bool = False) -> RegressionResult:
    """Regress ln(median profit) on backrun count, one observation per group.

    Groups with a zero median are dropped (and counted in ``n_dropped``).
    With ``weighted=True`` each group is weighted by its size.
    """
    usable = [g for g in groups if g.median > 0]
    dropped = len(groups) - len(usable)
    if len(usable) < 3:
        raise ValueError(f"need at least 3 groups with positive median, got {len(usable)}")
    x = np.array([g.backrun_count for g in usable], dtype=float)
    y = np.log([g.median for g in usable])
    w = np.array([g.size for g in usable], dtype=float) if weighted else np.ones_like(x)

    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    if sxx == 0:
        raise ValueError("backrun counts have zero variance")
    sxy = (w * (x - xbar) * (y - ybar)).sum()
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    resid = y - intercept - slope * x
    ssr = (w * resid**2).sum()
    sst = (w * (y - ybar) ** 2).sum()
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    n = len(x)
    s2 = ssr / (n - 2)
    # for weighted fits this treats weights as precision weights (WLS)
    se_slope = math.sqrt(s2 / sxx)
    se_intercept = math.sqrt(s2 * (1.0 / sw + xbar**2 / sxx))
    return RegressionResult(
        intercept=float(intercept),
        slope=float(slope),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        n_obs=n,
        stderr_intercept=float(se_intercept),
        stderr_slope=float(se_slope),
        n_dropped=dropped,
    )


def groups_to_csv(groups: Iterable[GroupMedian]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["backrun_count", "median_profit", "group_size"])
    for g in groups:
        w.writerow([g.backrun_count, f"{g.median:.6g}", g.size])
    return buf.getvalue()


def histogram_to_csv(bins: Iterable[HistogramBin]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_low", "bin_high", "count"])
    for b in bins:
        w.writerow([b.low, b.high, b.count])
    return buf.getvalue()


# -- synthetic data from the competition model -------------------------------


def synthesize_backruns(
    n_targets: int,
    n_searchers: int,
    p: float,
    seed: int,
    noise: float = 0.5,
    base_sigma: float = 1.0,
    profit: str = "floor",
) -> list[BackrunRecord]:
    """One target transaction = one opportunity. Each searcher finds it with
    probability ``p``; finders extract ``base * U(1 - noise, 1)`` where
    ``base`` is lognormal per target. The recorded count is the number of
    finders; ``profit="floor"`` records the runner-up value (what the validator
    keeps at the searcher-optimal core point), ``profit="unit"`` uses unit values.
    """
    if profit not in ("floor", "unit"):
        raise ValueError("profit must be 'floor' or 'unit'")
    out = []
    for t in range(n_targets):
        rng = trial_rng(seed, t)
        found = rng.random(n_searchers) < p
        if profit == "unit":
            vals = found.astype(float)
        else:
            base = math.exp(base_sigma * rng.standard_normal())
            vals = np.where(found, base * rng.uniform(1.0 - noise, 1.0, n_searchers), 0.0)
        floor = validator_floor(BundleMatrix(vals[None, :])).total
        out.append(BackrunRecord(f"t{t}", int(found.sum()), floor))
    return out


def analyze(records: Sequence[BackrunRecord], bin_width: int = 5, weighted: bool = False):
    """Grouped medians, histogram and regression in one pass over ``records``."""
    groups = group_median_profit(records)
    return groups, histogram_counts(records, bin_width), ols_log_median(groups, weighted=weighted)
