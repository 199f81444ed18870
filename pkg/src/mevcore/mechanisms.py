"""Settlement mechanisms: welfare-optimal block choice, VCG, payments for a
given core point, the per-opportunity second-price bundle auction, and the
profitable-misreport construction against non-VCG core selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bundles import BundleMatrix, OpportunityAssignment, searcher_optimal_bundle_allocation, validator_floor
from .game_core import (
    TOL,
    Allocation,
    ExplicitGame,
    _value_of_mask,
    core_membership_bruteforce,
    validate_game,
)


class ActiveValidatorError(ValueError):
    pass


class NotInCoreError(ValueError):
    pass


class AlreadyAtFloor(ValueError):
    pass


@dataclass(frozen=True)
class PaymentOutcome:
    block: Optional[int]
    payments: tuple[float, ...]
    utilities: tuple[float, ...]
    validator_revenue: float
    # set by the bundle auction, which settles an assignment rather than an enumerated block
    assignment: Optional[OpportunityAssignment] = None

    def to_dict(self) -> dict:
        d = {
            "block": self.block,
            "payments": list(self.payments),
            "utilities": list(self.utilities),
            "validator_revenue": self.validator_revenue,
        }
        if self.assignment is not None:
            d["winners"] = list(self.assignment.winner)
        return d


def _welfare(game: ExplicitGame) -> np.ndarray:
    return game.searcher_values.sum(axis=1) + game.validator_values


def optimal_block(game: ExplicitGame) -> int:
    """Index of a welfare-maximizing block; lowest index wins ties."""
    return int(np.argmax(_welfare(game)))


def _outcome(game: ExplicitGame, b: int, payments: np.ndarray) -> PaymentOutcome:
    values = game.searcher_values[b]
    return PaymentOutcome(
        block=b,
        payments=tuple(float(p) for p in payments),
        utilities=tuple(float(u) for u in values - payments),
        validator_revenue=float(payments.sum() + game.validator_values[b]),
    )


def vcg_floor(game: ExplicitGame, j: int, b: int) -> float:
    """Lowest core-consistent payment for ``j`` when block ``b`` is built.

    v̄(S - j) minus what everyone else (validator included) gets from ``b``;
    with a passive validator this is the VCG payment.
    """
    full = (1 << game.n_searchers) - 1
    others = game.searcher_values[b].sum() - game.searcher_values[b, j] + game.validator_values[b]
    return _value_of_mask(game, full & ~(1 << j)) - others


def vcg_payments(game: ExplicitGame) -> PaymentOutcome:
    if not game.is_passive:
        raise ActiveValidatorError(
            "VCG settlement requires a passive validator (validator_value == 0 on every block)"
        )
    b = optimal_block(game)
    payments = np.array([vcg_floor(game, j, b) for j in range(game.n_searchers)])
    return _outcome(game, b, payments)


def payments_for_allocation(game: ExplicitGame, x: Allocation) -> PaymentOutcome:
    """Build B* and charge each searcher v_i(B*) - x_i."""
    if not core_membership_bruteforce(game, x):
        raise NotInCoreError(f"allocation {x.as_tuple()} is not in the core")
    b = optimal_block(game)
    payments = game.searcher_values[b] - np.asarray(x.searcher_shares)
    return _outcome(game, b, payments)


def gsp_bundle_auction(matrix: BundleMatrix) -> PaymentOutcome:
    """Per opportunity, the highest bidder wins and pays the second-highest value."""
    floor = validator_floor(matrix)
    _, assignment = searcher_optimal_bundle_allocation(matrix)
    payments = np.zeros(matrix.n)
    won = np.zeros(matrix.n)
    for i, j in enumerate(assignment.winner):
        if j is None:
            continue
        payments[j] += floor.per_opportunity[i]
        won[j] += matrix.values[i, j]
    return PaymentOutcome(
        block=None,
        payments=tuple(float(p) for p in payments),
        utilities=tuple(float(u) for u in won - payments),
        validator_revenue=float(payments.sum()),
        assignment=assignment,
    )


@dataclass(frozen=True)
class Misreport:
    game: ExplicitGame
    searcher: int
    block: int
    floor: float
    observed_payment: float
    reported_value: float  # ṽ_j(B*)

    @property
    def payment_bound(self) -> float:
        """A core outcome on B* gives j a share x_j >= 0, so it charges at most ṽ_j(B*)."""
        return self.reported_value


MISREPORT_SHAPES = ("shift", "cap")


def construct_misreport(
    game: ExplicitGame, j: int, observed: PaymentOutcome, shape: str = "shift"
) -> Misreport:
    """Report for searcher ``j`` that lowers its payment below ``observed.payments[j]``.

    ṽ_j(B*) is the midpoint of j's VCG floor and the observed payment. Blocks
    without j's bundles keep their values. On blocks with them:

    ``shift``
        subtract the same c = v_j(B*) - ṽ_j(B*) everywhere (reports may go
        negative). When j earns nothing from blocks without its bundles, c is
        below j's marginal contribution to every coalition, so v̄ drops by
        exactly c on each coalition containing j. That change is modular: it
        keeps submodularity, the optimal block set and the tie-break.
    ``cap``
        ṽ_j(B) = min(v_j(B), ṽ_j(B*)), with blocks that then beat B* lowered to a
        tie. j's report becomes budget-additive, which can break submodularity.
    """
    if shape not in MISREPORT_SHAPES:
        raise ValueError(f"shape must be one of {MISREPORT_SHAPES}, got {shape!r}")
    n = game.n_searchers
    if not 0 <= j < n:
        raise IndexError(f"searcher index {j} out of range for {n} searchers")
    if observed.block is None:
        raise ValueError("observed outcome must reference a block of this game")
    b_star = observed.block
    if not game.masks[b_star] >> j & 1:
        raise ValueError(f"block {b_star} does not use searcher {j}'s bundles")
    floor = vcg_floor(game, j, b_star)
    paid = observed.payments[j]
    if paid - floor <= TOL:
        raise AlreadyAtFloor(f"searcher {j} already pays its VCG floor {floor!r}")
    target = 0.5 * (floor + paid)

    values = np.array(game.searcher_values)
    uses_j = (game.masks >> j & 1).astype(bool)
    if shape == "shift":
        values[uses_j, j] -= values[b_star, j] - target
        values[b_star, j] = target
    else:
        values[uses_j, j] = np.minimum(values[uses_j, j], target)
        values[b_star, j] = target
        welfare = values.sum(axis=1) + game.validator_values
        w_star = welfare[b_star]
        # blocks without j's bundles already fall strictly below: w_star > v̄(S - j)
        clash = uses_j & (welfare > w_star)
        clash[b_star] = False
        values[clash, j] -= welfare[clash] - w_star

    modified = ExplicitGame(n, game.masks, values, game.validator_values)
    return Misreport(modified, j, b_star, float(floor), float(paid), float(target))


def misreport_is_profitable(result: Misreport) -> bool:
    """Check that B* is still the block ``optimal_block`` builds, the modified game
    is submodular, and the payment bound is below what j paid before.

    Other blocks may tie B* when the original game had ties. They are not lowered:
    doing so changes v̄ on coalitions that can build them but not B*, which can
    break submodularity.
    """
    return bool(
        optimal_block(result.game) == result.block
        and validate_game(result.game).is_submodular
        and result.payment_bound < result.observed_payment - TOL
    )
