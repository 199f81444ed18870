"""Random instances for property tests and the acceptance corpus.

Bundle matrices always give submodular games. Non-submodular games come from
adding a complementarity block that is worth more than its parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bundles import BundleMatrix, to_general_game
from .game_core import Allocation, CandidateBlock, ExplicitGame, coalition_value, grand_value, marginals


@dataclass(frozen=True)
class GameCase:
    matrix: BundleMatrix
    capacity: Optional[int]
    game: ExplicitGame


def random_bundle_matrix(rng: np.random.Generator, max_m: int = 5, max_n: int = 6) -> BundleMatrix:
    m = int(rng.integers(0, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    if rng.random() < 0.5:
        # small integers make ties (and hence zero searcher shares) common
        vals = rng.integers(0, 5, size=(m, n)).astype(float)
    else:
        vals = rng.exponential(1.0, size=(m, n)) * (rng.random((m, n)) < 0.6)
    return BundleMatrix(vals)


def random_game_case(
    rng: np.random.Generator, max_m: int = 5, max_n: int = 6, capacity_prob: float = 0.3
) -> GameCase:
    matrix = random_bundle_matrix(rng, max_m, max_n)
    capacity = None
    if matrix.m > 0 and rng.random() < capacity_prob:
        capacity = int(rng.integers(0, matrix.m + 1))
    return GameCase(matrix, capacity, to_general_game(matrix, capacity))


def complementarity_game() -> ExplicitGame:
    """Two searchers worth nothing alone and 1 together."""
    return ExplicitGame.from_blocks(
        2,
        [
            CandidateBlock({0}, (0.0, 0.0)),
            CandidateBlock({1}, (0.0, 0.0)),
            CandidateBlock({0, 1}, (0.5, 0.5)),
        ],
    )


def with_complementarity(game: ExplicitGame, rng: np.random.Generator) -> ExplicitGame:
    """Append a block needing two searchers worth more than both of them apart, so
    v̄({i}) + v̄({j}) < v̄({i, j}) + v̄(∅)."""
    n = game.n_searchers
    if n < 2:
        raise ValueError("complementarity needs at least two searchers")
    i, j = (int(k) for k in rng.choice(n, size=2, replace=False))
    bonus = coalition_value(game, {i}) + coalition_value(game, {j}) + 1.0 + rng.random()
    vals = np.zeros(n)
    vals[i] = vals[j] = bonus / 2
    blocks = list(game.blocks) + [CandidateBlock({i, j}, tuple(vals))]
    return ExplicitGame.from_blocks(n, blocks)


def candidate_allocations(game: ExplicitGame, rng: np.random.Generator, k: int = 100) -> list[Allocation]:
    """Half inside the marginal box (vertices included), half nudged just outside it."""
    marg = marginals(game)
    grand = grand_value(game)
    n = game.n_searchers
    out = []
    for t in range(k):
        kind = t % 4
        if kind == 0:
            shares = marg * rng.integers(0, 2, size=n)
        elif kind == 1:
            shares = marg * rng.random(n)
        elif kind == 2:
            # one share above its marginal; validator absorbs the residual if it can
            shares = marg * rng.random(n)
            i = rng.integers(n)
            shares[i] = marg[i] + rng.uniform(1e-6, 1.0)
        else:
            shares = marg * rng.random(n)
        xv = grand - shares.sum()
        if kind == 3:
            xv += rng.choice([-1.0, 1.0]) * rng.uniform(1e-6, 1.0)
        out.append(Allocation(tuple(shares), max(xv, 0.0)))
    return out
