"""General transferable-utility block-building game.

A game has ``n`` searchers plus one implicit validator. Every candidate block
names the searchers whose bundles it uses (its *contributors*) and the value it
generates for each searcher and for the validator. A block is feasible for a
coalition ``A`` iff its contributors are a subset of ``A``. The coalitional
value of ``A`` (always taken together with the validator) is the best total
welfare of ``A`` plus the validator over feasible blocks.

Coalitions are passed around as iterables of searcher indices; internally they
are bitmasks, so exact enumeration helpers work on ``2**n`` sized tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9
MAX_SUBMODULAR_N = 12
MAX_CORE_N = 20
MAX_BITMASK_N = 62


class GameTooLarge(ValueError):
    pass


class NotSubmodularError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateBlock:
    contributors: frozenset[int]
    searcher_values: tuple[float, ...]
    validator_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "contributors", frozenset(int(i) for i in self.contributors))
        object.__setattr__(self, "searcher_values", tuple(float(v) for v in self.searcher_values))
        object.__setattr__(self, "validator_value", float(self.validator_value))


@dataclass(frozen=True)
class Allocation:
    """Value split ``x``: one share per searcher plus the validator's share."""

    searcher_shares: tuple[float, ...]
    validator_share: float

    def __post_init__(self):
        shares = np.asarray(self.searcher_shares, dtype=float).reshape(-1)
        xv = float(self.validator_share)
        if not (np.isfinite(shares).all() and np.isfinite(xv)):
            raise ValueError("allocation entries must be finite")
        if min(shares.min(initial=0.0), xv) < -TOL:
            raise ValueError(f"allocation entries must be nonnegative, got {(*shares.tolist(), xv)}")
        # absorb round-off from residual computations
        object.__setattr__(self, "searcher_shares", tuple(np.maximum(shares, 0.0).tolist()))
        object.__setattr__(self, "validator_share", max(xv, 0.0))

    @property
    def total(self) -> float:
        return float(sum(self.searcher_shares) + self.validator_share)

    def as_tuple(self) -> tuple[float, ...]:
        return (*self.searcher_shares, self.validator_share)

    def to_dict(self) -> dict:
        return {"searcher_shares": list(self.searcher_shares), "validator_share": self.validator_share}


@dataclass(frozen=True, eq=False)
class ExplicitGame:
    """Enumerated-block game, stored column-wise.

    ``masks[b]`` is the contributor bitmask of block ``b``,
    ``searcher_values[b, i]`` is v_i(b) and ``validator_values[b]`` is v_V(b).
    Use :meth:`from_blocks` to build one from :class:`CandidateBlock` objects.
    """

    n_searchers: int
    masks: np.ndarray
    searcher_values: np.ndarray
    validator_values: np.ndarray

    def __post_init__(self):
        n = int(self.n_searchers)
        if n < 1:
            raise ValueError("n_searchers must be >= 1")
        if n > MAX_BITMASK_N:
            raise GameTooLarge(f"at most {MAX_BITMASK_N} searchers supported")
        masks = np.asarray(self.masks, dtype=np.int64).reshape(-1)
        values = np.asarray(self.searcher_values, dtype=float).reshape(len(masks), n)
        vv = np.asarray(self.validator_values, dtype=float).reshape(-1)
        if len(vv) != len(masks):
            raise ValueError("validator_values length must match number of blocks")
        if len(masks) == 0:
            raise ValueError("a game needs at least the empty block")
        if np.any(masks < 0) or np.any(masks >> n):
            raise ValueError(f"contributor index out of range for {n} searchers")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(vv))):
            raise ValueError("block values must be finite")
        empty = (masks == 0) & np.all(values == 0, axis=1) & (vv == 0)
        if not empty.any():
            raise ValueError("blocks must include the empty block (no contributors, all values 0)")
        for arr in (masks, values, vv):
            arr.flags.writeable = False
        object.__setattr__(self, "n_searchers", n)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "searcher_values", values)
        object.__setattr__(self, "validator_values", vv)

    @classmethod
    def from_blocks(cls, n_searchers: int, blocks: Iterable[CandidateBlock], add_empty: bool = True):
        blocks = list(blocks)
        for b in blocks:
            if len(b.searcher_values) != n_searchers:
                raise ValueError("searcher_values must have length n_searchers")
            if any(i < 0 or i >= n_searchers for i in b.contributors):
                raise ValueError(f"contributor index out of range in {b}")
        has_empty = any(
            not b.contributors and b.validator_value == 0 and not any(b.searcher_values) for b in blocks
        )
        if add_empty and not has_empty:
            blocks.insert(0, CandidateBlock(frozenset(), (0.0,) * n_searchers, 0.0))
        masks = [coalition_mask(b.contributors, n_searchers) for b in blocks]
        values = np.array([b.searcher_values for b in blocks], dtype=float).reshape(len(blocks), n_searchers)
        vv = [b.validator_value for b in blocks]
        return cls(n_searchers, masks, values, vv)

    @property
    def n_blocks(self) -> int:
        return len(self.masks)

    @property
    def blocks(self) -> tuple[CandidateBlock, ...]:
        return tuple(self.block(b) for b in range(self.n_blocks))

    def block(self, b: int) -> CandidateBlock:
        return CandidateBlock(
            mask_members(int(self.masks[b]), self.n_searchers),
            tuple(self.searcher_values[b]),
            float(self.validator_values[b]),
        )

    @property
    def is_passive(self) -> bool:
        return bool(np.all(self.validator_values == 0))

    @cached_property
    def value_table(self) -> np.ndarray:
        """v̄ for every coalition, indexed by bitmask (length ``2**n``)."""
        n = self.n_searchers
        if n > MAX_CORE_N:
            raise GameTooLarge(f"value table needs n <= {MAX_CORE_N}, got {n}")
        size = 1 << n
        out = np.empty(size)
        chunk = max(1, (1 << 22) // max(self.n_blocks, 1))
        bits = 1 << np.arange(n, dtype=np.int64)
        for lo in range(0, size, chunk):
            cs = np.arange(lo, min(size, lo + chunk), dtype=np.int64)
            member = ((cs[:, None] & bits[None, :]) != 0).astype(float)
            welfare = member @ self.searcher_values.T + self.validator_values[None, :]
            feasible = (self.masks[None, :] & ~cs[:, None]) == 0
            out[lo : lo + len(cs)] = np.where(feasible, welfare, -np.inf).max(axis=1)
        out.flags.writeable = False
        return out

    @cached_property
    def diagnostics(self) -> "GameDiagnostics":
        return _diagnose(self)


def coalition_mask(coalition: Iterable[int], n: int) -> int:
    mask = 0
    for i in coalition:
        i = int(i)
        if not 0 <= i < n:
            raise IndexError(f"searcher index {i} out of range for {n} searchers")
        mask |= 1 << i
    return mask


def mask_members(mask: int, n: int) -> frozenset[int]:
    return frozenset(i for i in range(n) if mask >> i & 1)


def _value_of_mask(game: ExplicitGame, mask: int) -> float:
    if "value_table" in game.__dict__:
        return float(game.value_table[mask])
    members = list(mask_members(mask, game.n_searchers))
    feasible = (game.masks & ~np.int64(mask)) == 0
    welfare = game.searcher_values[:, members].sum(axis=1) + game.validator_values
    return float(welfare[feasible].max())


def coalition_value(game: ExplicitGame, coalition: Iterable[int]) -> float:
    """v̄(A): best welfare of searchers in ``A`` together with the validator."""
    return _value_of_mask(game, coalition_mask(coalition, game.n_searchers))


def grand_value(game: ExplicitGame) -> float:
    return _value_of_mask(game, (1 << game.n_searchers) - 1)


def marginal_contribution(game: ExplicitGame, j: int) -> float:
    n = game.n_searchers
    if not 0 <= j < n:
        raise IndexError(f"searcher index {j} out of range for {n} searchers")
    full = (1 << n) - 1
    return _value_of_mask(game, full) - _value_of_mask(game, full & ~(1 << j))


def marginals(game: ExplicitGame) -> np.ndarray:
    return np.array([marginal_contribution(game, j) for j in range(game.n_searchers)])


# -- submodularity / monotonicity diagnostics ---------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # "monotone" | "submodular" | "marginal"
    a: tuple[int, ...]
    b: tuple[int, ...]
    gap: float


@dataclass(frozen=True)
class GameDiagnostics:
    is_monotone: bool
    is_submodular: bool
    has_decreasing_marginals: bool
    violations: tuple[Violation, ...]

    @property
    def equivalence_holds(self) -> bool:
        # submodular <=> decreasing marginal value (checked only where monotone)
        return (not self.is_monotone) or self.is_submodular == self.has_decreasing_marginals

    def to_dict(self) -> dict:
        return {
            "is_monotone": self.is_monotone,
            "is_submodular": self.is_submodular,
            "has_decreasing_marginals": self.has_decreasing_marginals,
            "violations": [
                {"kind": v.kind, "A": list(v.a), "B": list(v.b), "gap": v.gap} for v in self.violations
            ],
        }


def _nested_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All (A, B) bitmask pairs with A ⊆ B, via base-3 digits (0: out, 1: B only, 2: both)."""
    codes = np.arange(3**n, dtype=np.int64)
    a = np.zeros_like(codes)
    b = np.zeros_like(codes)
    for k in range(n):
        codes, d = np.divmod(codes, 3)
        a |= (d == 2).astype(np.int64) << k
        b |= (d >= 1).astype(np.int64) << k
    return a, b


def _diagnose(game: ExplicitGame, max_violations: int = 10) -> GameDiagnostics:
    n = game.n_searchers
    if n > MAX_SUBMODULAR_N:
        raise GameTooLarge(f"exact submodularity check needs n <= {MAX_SUBMODULAR_N}, got {n}")
    v = game.value_table
    size = 1 << n
    violations: list[Violation] = []

    def note(kind, a_masks, b_masks, gaps):
        for am, bm, g in zip(a_masks[: max_violations], b_masks[: max_violations], gaps[: max_violations]):
            if len(violations) >= max_violations:
                return
            violations.append(
                Violation(kind, tuple(sorted(mask_members(int(am), n))), tuple(sorted(mask_members(int(bm), n))), float(g))
            )

    A, B = _nested_pairs(n)
    mono_gap = v[A] - v[B]
    bad = mono_gap > TOL
    is_monotone = not bad.any()
    note("monotone", A[bad], B[bad], mono_gap[bad])

    is_submodular = True
    all_masks = np.arange(size, dtype=np.int64)
    for a in range(size):
        bs = all_masks[a + 1 :]
        gap = v[a | bs] + v[a & bs] - v[a] - v[bs]
        bad = gap > TOL
        if bad.any():
            is_submodular = False
            note("submodular", np.full(bad.sum(), a), bs[bad], gap[bad])

    has_dmv = True
    for k in range(n):
        bit = np.int64(1 << k)
        sel = (A & bit) != 0
        a_k, b_k = A[sel], B[sel]
        gap = (v[b_k] - v[b_k ^ bit]) - (v[a_k] - v[a_k ^ bit])
        bad = gap > TOL
        if bad.any():
            has_dmv = False
            note("marginal", a_k[bad], b_k[bad], gap[bad])

    return GameDiagnostics(is_monotone, is_submodular, has_dmv, tuple(violations))


def validate_game(game: ExplicitGame) -> GameDiagnostics:
    """Exact monotonicity / submodularity / decreasing-marginal-value check (n <= 12)."""
    return game.diagnostics


def _require_submodular(game: ExplicitGame) -> None:
    if not validate_game(game).is_submodular:
        raise NotSubmodularError("game is not submodular; the marginal-contribution core characterization does not apply")


def check_marginal_sum_bound(game: ExplicitGame, a: Iterable[int], b: Iterable[int]) -> bool:
    """Whether v̄(B) - v̄(A) >= sum over i in B \\ A of (v̄(B) - v̄(B - i))."""
    n = game.n_searchers
    am, bm = coalition_mask(a, n), coalition_mask(b, n)
    if am & ~bm:
        raise ValueError("A must be a subset of B")
    vb = _value_of_mask(game, bm)
    rhs = sum(vb - _value_of_mask(game, bm & ~(1 << i)) for i in mask_members(bm & ~am, n))
    return vb - _value_of_mask(game, am) >= rhs - TOL


# -- core ----------------------------------------------------------------------


def _shares(game: ExplicitGame, x: Allocation) -> np.ndarray:
    shares = np.asarray(x.searcher_shares, dtype=float)
    if len(shares) != game.n_searchers:
        raise ValueError(f"allocation has {len(shares)} searcher shares, game has {game.n_searchers} searchers")
    return shares


def subset_sums(x: Sequence[float]) -> np.ndarray:
    """Sum of x over every subset, indexed by bitmask."""
    s = np.zeros(1 << len(x))
    for k, xk in enumerate(x):
        s[1 << k : 2 << k] = s[: 1 << k] + xk
    return s


def core_membership_bruteforce(game: ExplicitGame, x: Allocation) -> bool:
    """Check every coalition inequality of the core plus budget balance."""
    n = game.n_searchers
    if n > MAX_CORE_N:
        raise GameTooLarge(f"brute-force core check needs n <= {MAX_CORE_N}, got {n}")
    shares = _shares(game, x)
    s = subset_sums(shares)
    v = game.value_table
    xv = x.validator_share
    if abs(s[-1] + xv - v[-1]) > TOL:
        return False
    # coalitions without the validator generate nothing
    if np.any(s < -TOL):
        return False
    return bool(np.all(s + xv >= v - TOL))


def core_membership_characterization(game: ExplicitGame, x: Allocation) -> bool:
    """Core test via per-searcher bounds 0 <= x_i <= marginal_i and a residual validator share."""
    _require_submodular(game)
    shares = _shares(game, x)
    marg = marginals(game)
    if np.any(shares < -TOL) or np.any(shares > marg + TOL):
        return False
    return bool(abs(x.validator_share - (grand_value(game) - shares.sum())) <= TOL)


def searcher_optimal_allocation(game: ExplicitGame) -> Allocation:
    _require_submodular(game)
    marg = marginals(game)
    return Allocation(tuple(marg), grand_value(game) - marg.sum())


def validator_optimal_allocation(game: ExplicitGame) -> Allocation:
    return Allocation((0.0,) * game.n_searchers, grand_value(game))


# -- serialization ---------------------------------------------------------------


def game_to_dict(game: ExplicitGame) -> dict:
    return {
        "n_searchers": game.n_searchers,
        "blocks": [
            {
                "contributors": sorted(b.contributors),
                "searcher_values": list(b.searcher_values),
                "validator_value": b.validator_value,
            }
            for b in game.blocks
        ],
    }


def game_from_dict(doc: dict) -> ExplicitGame:
    try:
        n = int(doc["n_searchers"])
        blocks = [
            CandidateBlock(
                frozenset(blk.get("contributors", [])),
                tuple(blk["searcher_values"]),
                blk.get("validator_value", 0.0),
            )
            for blk in doc["blocks"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed game document: {exc!r}") from exc
    return ExplicitGame.from_blocks(n, blocks)


def load_game(path) -> ExplicitGame:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return game_from_dict(doc)


def dump_game(game: ExplicitGame, path) -> None:
    with open(path, "w") as fh:
        json.dump(game_to_dict(game), fh, indent=2)
        fh.write("\n")
