"""Low-competition regime: p = c / n with c <= 1, every found opportunity has a
single finder often enough that searchers keep everything. Compares Monte Carlo
frequencies with the closed forms for a few (n, m, c)."""

import argparse
import csv
import sys
from dataclasses import dataclass

from mevcore.stochastic import SimConfig, exact_event_probabilities, run_trials


@dataclass(frozen=True)
class Config:
    trials: int = 20_000
    seed: int = 0


CASES = [(1000, 3, 1.0), (1000, 3, 0.5), (200, 5, 1.0), (200, 2, 0.25)]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=Config.trials)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args(argv)
    cfg = Config(args.trials, args.seed)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "m", "p", "mc_all_singletons", "exact_all_singletons", "mc_searchers_take_all_given_positive",
                "exact_searchers_take_all_given_positive"])
    for n, m, c in CASES:
        p = c / n
        r = run_trials(SimConfig(n=n, m=m, p=p, trials=cfg.trials, seed=cfg.seed))
        e = exact_event_probabilities(n, m, p)
        w.writerow([n, m, repr(p), f"{r.freq_all_singletons:.6g}", f"{e.p_all_singletons:.6g}",
                    f"{r.freq_searchers_take_all_given_positive:.6g}", f"{e.p_searchers_take_all_given_positive:.6g}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
