"""Multi-context model vs. single-context model vs. pattern-only baseline.

Each seed synthesises a fresh HIN, extracts pattern seeds, trains the model
once with all six contexts and once with the paper-level context only, and
scores the labeled pairs. The pattern baseline gives 1 to extracted pairs
and 0 to everything else. Takes about a minute and a half.
"""
import sys

import numpy as np

from hinhyper.benchmark import run_benchmark

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 10
rows = {}
for seed in range(n_seeds):
    for model, report in run_benchmark(seed=seed).items():
        rows.setdefault(model, []).append(report)
    print(f"seed {seed}: " + "  ".join(f"{m} {r[-1]['P@100']:.2f}" for m, r in rows.items()), flush=True)

keys = ["P@100", "P@1000", "MaMARR", "MiMARR", "MaMLRR", "MiMLRR"]
print("\n" + f"{'model':10s}" + "".join(f"{k:>9s}" for k in keys))
for model, reports in rows.items():
    print(f"{model:10s}" + "".join(f"{np.mean([r[k] for r in reports]):9.3f}" for k in keys))
