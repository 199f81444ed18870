"""Compare the two misreport shapes on the random game corpus.

For every searcher paying above its VCG floor at the validator-optimal core
point, build the misreport with each shape and record whether the modified
game stays submodular and still builds B*."""

import argparse
import sys
from collections import Counter

import numpy as np

from mevcore.game_core import validate_game, validator_optimal_allocation
from mevcore.mechanisms import (
    MISREPORT_SHAPES,
    construct_misreport,
    misreport_is_profitable,
    optimal_block,
    payments_for_allocation,
    vcg_floor,
)
from mevcore.random_games import random_game_case


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--games", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    tally = {shape: Counter() for shape in MISREPORT_SHAPES}
    pairs = 0
    for _ in range(args.games):
        g = random_game_case(rng).game
        observed = payments_for_allocation(g, validator_optimal_allocation(g))
        for j in range(g.n_searchers):
            if observed.payments[j] - vcg_floor(g, j, observed.block) <= 1e-6:
                continue
            pairs += 1
            for shape in MISREPORT_SHAPES:
                r = construct_misreport(g, j, observed, shape=shape)
                t = tally[shape]
                t["not submodular"] += not validate_game(r.game).is_submodular
                t["B* not built"] += optimal_block(r.game) != observed.block
                t["not profitable"] += not misreport_is_profitable(r)
    print(f"{pairs} (game, searcher) pairs above the VCG floor")
    for shape, t in tally.items():
        print(f"{shape:>5}: " + ", ".join(f"{k} {t[k]}" for k in ("not submodular", "B* not built", "not profitable")))
    return 0


if __name__ == "__main__":
    sys.exit(main())
