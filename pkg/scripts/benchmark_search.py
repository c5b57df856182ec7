"""Compare pruned and exhaustive lattice search on random instances.

Prints one line per instance (lattice size, nodes evaluated by each strategy,
wall time, whether the optimal scores agree) and a summary.

    python scripts/benchmark_search.py --instances 40 --n 300 --qis 4
"""
from __future__ import annotations

import argparse
import random
import statistics
import time

from recanon.anonymizer import EXHAUSTIVE, PRUNED_BFS, SearchConfig, search
from recanon.errors import NoSolution
from recanon.privacy_models import KAnonymity
from recanon.synth import random_instance


def run(inst, k, budget, objective, strategy):
    cfg = SearchConfig([KAnonymity(k)], budget, objective, strategy)
    start = time.perf_counter()
    try:
        result = search(inst.data, inst.hierarchies, cfg)
    except NoSolution as exc:
        result = exc.result
    return result, time.perf_counter() - start


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instances", type=int, default=30)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--qis", type=int, default=3)
    p.add_argument("--max-lattice", type=int, default=400)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--budget", type=float, default=0.02)
    p.add_argument("--objective", default="nue", choices=["nue", "ig", "gg"])
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = random.Random(args.seed)
    saved, mismatches = [], 0
    print(f"{'#':>3} {'nodes':>6} {'pruned':>6} {'full':>6} {'t_pruned':>9} {'t_full':>9}  score")
    for i in range(args.instances):
        inst = random_instance(rng, args.n, args.qis, max_lattice=args.max_lattice)
        pr, tp = run(inst, args.k, args.budget, args.objective, PRUNED_BFS)
        ex, te = run(inst, args.k, args.budget, args.objective, EXHAUSTIVE)
        sp = pr.best.loss_score if pr.best else None
        se = ex.best.loss_score if ex.best else None
        mismatches += sp != se
        saved.append(1 - pr.evaluated_count / ex.evaluated_count)
        score = "none" if sp is None else f"{sp:.4f}"
        flag = "" if sp == se else "  MISMATCH"
        print(f"{i:>3} {len(ex.nodes):>6} {pr.evaluated_count:>6} {ex.evaluated_count:>6} {tp:>9.3f} {te:>9.3f}  {score}{flag}")
    print(f"mean share of nodes skipped by pruning: {statistics.fmean(saved):.1%}")
    print(f"score mismatches: {mismatches}")
    return 1 if mismatches else 0


if __name__ == "__main__":
    raise SystemExit(main())
