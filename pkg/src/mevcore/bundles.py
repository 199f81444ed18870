"""Independent-bundle model: additive value over clashing opportunities.

``values[i, j]`` is what searcher ``j`` extracts from opportunity ``i``. At most
one bundle per opportunity makes it into a block, so the coalition value is a
sum of per-opportunity maxima (optionally restricted to the ``K`` best
opportunities when the block has a capacity).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .game_core import TOL, Allocation, ExplicitGame, GameTooLarge

MAX_GENERAL_BLOCKS = 10**6


@dataclass(frozen=True, eq=False)
class BundleMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"bundle matrix must be 2-d, got shape {v.shape}")
        if v.shape[1] < 1:
            raise ValueError("bundle matrix needs at least one searcher column")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("bundle values must be finite and nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def empty(cls, n: int) -> "BundleMatrix":
        return cls(np.zeros((0, n)))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return isinstance(other, BundleMatrix) and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class OpportunityAssignment:
    winner: tuple[Optional[int], ...]

    def winners_of(self, j: int) -> list[int]:
        return [i for i, w in enumerate(self.winner) if w == j]


@dataclass(frozen=True)
class ValidatorFloor:
    per_opportunity: tuple[float, ...]
    total: float


def _members(coalition: Iterable[int], n: int) -> np.ndarray:
    if isinstance(coalition, range) and coalition == range(n):
        return np.arange(n)
    idx = np.unique(np.fromiter((int(i) for i in coalition), dtype=np.int64))
    if idx.size and not (0 <= idx[0] and idx[-1] < n):
        bad = idx[0] if idx[0] < 0 else idx[-1]
        raise IndexError(f"searcher index {bad} out of range for {n} searchers")
    return idx


def _coalition_maxima(matrix: BundleMatrix, coalition: Iterable[int]) -> np.ndarray:
    members = _members(coalition, matrix.n)
    if members.size == 0 or matrix.m == 0:
        return np.zeros(matrix.m)
    vals = matrix.values if members.size == matrix.n else matrix.values[:, members]
    return vals.max(axis=1)


def block_value(matrix: BundleMatrix, coalition: Iterable[int]) -> float:
    return float(_coalition_maxima(matrix, coalition).sum())


def second_highest(column: Sequence[float]) -> float:
    """Second-largest entry counting multiplicity, so (2, 2) -> 2; 0 for fewer than two entries."""
    col = np.asarray(column, dtype=float).reshape(-1)
    if len(col) < 2:
        return 0.0
    return float(np.partition(col, -2)[-2])


def validator_floor(matrix: BundleMatrix) -> ValidatorFloor:
    if matrix.n < 2 or matrix.m == 0:
        per = np.zeros(matrix.m)
    else:
        per = np.partition(matrix.values, -2, axis=1)[:, -2]
    return ValidatorFloor(tuple(float(v) for v in per), float(per.sum()))


def winners(matrix: BundleMatrix) -> OpportunityAssignment:
    """Argmax searcher per opportunity (lowest index on ties); ``None`` where nobody has positive value."""
    out = []
    for row in matrix.values:
        j = int(np.argmax(row))
        out.append(j if row[j] > 0 else None)
    return OpportunityAssignment(tuple(out))


def searcher_optimal_bundle_allocation(matrix: BundleMatrix) -> tuple[Allocation, OpportunityAssignment]:
    """Each winner keeps its value minus the runner-up value; the validator gets the floor M."""
    floor = validator_floor(matrix)
    assignment = winners(matrix)
    shares = np.zeros(matrix.n)
    for i, j in enumerate(assignment.winner):
        if j is not None:
            shares[j] += matrix.values[i, j] - floor.per_opportunity[i]
    return Allocation(tuple(shares), floor.total), assignment


def _top_sum(maxima: np.ndarray, capacity: int) -> float:
    # one summation order for every K keeps the value exactly monotone in K
    return float(np.sort(maxima)[::-1][:capacity].sum())


def capacity_block_value(matrix: BundleMatrix, capacity: int, coalition: Iterable[int]) -> float:
    """Sum of the ``capacity`` largest per-opportunity coalition maxima."""
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    return _top_sum(_coalition_maxima(matrix, coalition), capacity)


def capacity_searcher_optimal(matrix: BundleMatrix, capacity: int) -> Allocation:
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    shares = np.zeros(matrix.n)
    if matrix.m == 0:
        return Allocation(tuple(shares), 0.0)
    vals = matrix.values
    row_max = vals.max(axis=1)
    grand = _top_sum(row_max, capacity)
    runner_up = np.array(validator_floor(matrix).per_opportunity)
    win = np.argmax(vals, axis=1)
    found = row_max > 0
    # without its winner a row's maximum falls to the runner-up value; a searcher
    # that wins nothing leaves every row maximum unchanged
    for j in np.unique(win[found]):
        without_j = np.where(found & (win == j), runner_up, row_max)
        shares[j] = grand - _top_sum(without_j, capacity)
    return Allocation(tuple(shares), grand - shares.sum())


def top_k_runner_up_floor(matrix: BundleMatrix, capacity: int) -> float:
    """Sum of the ``capacity`` largest per-opportunity runner-up values."""
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    per = np.sort(np.asarray(validator_floor(matrix).per_opportunity))[::-1]
    return float(per[:capacity].sum())


@dataclass(frozen=True)
class CapacityFloorReport:
    capacity: int
    top_k_floor: float
    marginal_validator_share: float

    @property
    def agrees(self) -> bool:
        return abs(self.top_k_floor - self.marginal_validator_share) <= TOL

    def to_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "top_k_floor": self.top_k_floor,
            "marginal_validator_share": self.marginal_validator_share,
            "agrees": self.agrees,
        }


def capacity_floor_diagnostic(matrix: BundleMatrix, capacity: int) -> CapacityFloorReport:
    """Compare the top-K runner-up sum against the validator share from capacity marginals."""
    return CapacityFloorReport(
        capacity,
        top_k_runner_up_floor(matrix, capacity),
        capacity_searcher_optimal(matrix, capacity).validator_share,
    )


def to_general_game(matrix: BundleMatrix, capacity: Optional[int] = None) -> ExplicitGame:
    """Enumerate every feasible assignment of opportunities to searchers as an explicit block list.

    Block 0 is the empty assignment. Blocks are ordered lexicographically by
    per-opportunity choice (none, searcher 0, ..., searcher n-1), first
    opportunity most significant.
    """
    m, n = matrix.m, matrix.n
    if (n + 1) ** m > MAX_GENERAL_BLOCKS:
        raise GameTooLarge(f"(n+1)^m = {(n + 1) ** m} assignments exceeds {MAX_GENERAL_BLOCKS}")
    if capacity is not None and capacity < 0:
        raise ValueError("capacity must be >= 0")
    # choice[b, i] in {-1, 0..n-1}
    choice = np.indices((n + 1,) * m).reshape(m, -1).T - 1 if m else np.full((1, 0), -1)
    if capacity is not None:
        choice = choice[(choice >= 0).sum(axis=1) <= capacity]
    n_blocks = len(choice)
    values = np.zeros((n_blocks, n))
    masks = np.zeros(n_blocks, dtype=np.int64)
    rows = np.arange(n_blocks)
    for i in range(m):
        c = choice[:, i]
        hit = c >= 0
        np.add.at(values, (rows[hit], c[hit]), matrix.values[i, c[hit]])
        masks[hit] |= np.int64(1) << c[hit].astype(np.int64)
    return ExplicitGame(n, masks, values, np.zeros(n_blocks))


# -- CSV ------------------------------------------------------------------------


def matrix_to_csv(matrix: BundleMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"s{j}" for j in range(matrix.n)])
    for row in matrix.values:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def matrix_from_csv(text: str) -> BundleMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValueError("line 1: missing header row s0,s1,...")
    header = [h.strip() for h in rows[0]]
    if header != [f"s{j}" for j in range(len(header))]:
        raise ValueError(f"line 1: header must be s0,s1,..., got {','.join(header)}")
    n = len(header)
    data = []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != n:
            raise ValueError(f"line {lineno}: expected {n} values, got {len(r)}")
        try:
            data.append([float(c) for c in r])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    try:
        return BundleMatrix(np.array(data, dtype=float).reshape(len(data), n))
    except ValueError as exc:
        raise ValueError(f"invalid matrix: {exc}") from exc


def load_matrix(path) -> BundleMatrix:
    with open(path, newline="") as fh:
        return matrix_from_csv(fh.read())
