"""How often the top-K runner-up sum disagrees with the validator's share at the
searcher-optimal core point of the capacity-constrained game.

Both quantities are computed on random integer matrices; disagreements are
counted and the first few are printed."""

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from mevcore.bundles import BundleMatrix, capacity_floor_diagnostic


@dataclass(frozen=True)
class Config:
    samples: int = 5000
    max_m: int = 6
    max_n: int = 5
    seed: int = 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=default)
    cfg = Config(**vars(ap.parse_args(argv)))

    rng = np.random.default_rng(cfg.seed)
    by_k = {}
    shown = 0
    for _ in range(cfg.samples):
        m = int(rng.integers(1, cfg.max_m + 1))
        n = int(rng.integers(2, cfg.max_n + 1))
        matrix = BundleMatrix(rng.integers(0, 5, (m, n)).astype(float))
        k = int(rng.integers(0, m + 1))
        d = capacity_floor_diagnostic(matrix, k)
        slack = "binding" if k < m else "slack"
        total, bad = by_k.get(slack, (0, 0))
        by_k[slack] = (total + 1, bad + (not d.agrees))
        if not d.agrees and shown < 3:
            shown += 1
            print(f"K={k} matrix={matrix.values.tolist()} top-K floor={d.top_k_floor} core x_V={d.marginal_validator_share}")
    for slack, (total, bad) in sorted(by_k.items()):
        print(f"{slack} capacity: {bad}/{total} disagree ({bad / total:.1%})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
