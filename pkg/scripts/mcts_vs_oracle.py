#!/usr/bin/env python3
"""Benchmark the tree search against exhaustive enumeration.

Sweeps random mapping-space instances, comparing the best reward found by
MCTS under various iteration budgets with the true optimum, and reports
agreement rates and timing per budget multiplier.
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from metaglyph import search as S  # noqa: E402
from metaglyph.config import SearchConfig  # noqa: E402
from metaglyph.dataset import DataType  # noqa: E402


def synthetic_space(n_dims: int, n_elements: int) -> S.MappingSpace:
    slots = tuple(
        S.Slot(id=f"d{i}", name=f"dim{i}", kind="dimension",
               data_type=DataType.NUMERICAL, importance=1.0)
        for i in range(n_dims))
    elements = [S.MappingTarget.element(j) for j in range(n_elements + 1)]
    options = tuple(
        tuple(elements + [S.MappingTarget.axis(1), S.MappingTarget.axis(2),
                          S.MappingTarget.none()])
        for _ in range(n_dims))
    return S.MappingSpace(slots, options)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--multipliers", type=float, nargs="+",
                        default=[0.25, 0.5, 1.0, 2.0, 10.0])
    args = parser.parse_args()

    rng = random.Random(args.seed)
    instances = []
    for _ in range(args.instances):
        space = synthetic_space(rng.choice([2, 3, 4]), rng.choice([2, 3, 4]))
        products = [[rng.random() for _ in opts] for opts in space.options]
        evaluator = S.RewardEvaluator(space, products, SearchConfig())
        optimum, _ = S.enumerate_optimum(space, evaluator)
        instances.append((space, evaluator, optimum))

    print(f"{args.instances} instances, spaces "
          f"{min(s.size() for s, _, _ in instances)}.."
          f"{max(s.size() for s, _, _ in instances)} solutions")
    print(f"{'budget':>8} {'agree':>7} {'mean gap':>10} {'time':>8}")
    for mult in args.multipliers:
        agree = 0
        gaps = []
        t0 = time.monotonic()
        for k, (space, evaluator, optimum) in enumerate(instances):
            budget = S.SearchBudget(
                iterations=max(1, int(mult * space.size())), time_ms=None)
            try:
                out = S.run_search(space, evaluator, budget, seed=k)
                found = out.best.reward.r
            except Exception:
                found = 0.0
            gaps.append(optimum - found)
            if abs(optimum - found) <= 1e-9:
                agree += 1
        elapsed = time.monotonic() - t0
        print(f"{mult:>7.2f}x {agree:>4}/{args.instances} "
              f"{sum(gaps) / len(gaps):>10.5f} {elapsed:>7.2f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
