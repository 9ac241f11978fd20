"""
TRW against per-slice Viterbi baselines
=======================================

On the "noisy" suite entry, compare the full 3-D model (TRW over the grid)
with two solvers that treat every slice independently: Viterbi with one
fixed smoothness weight, and Viterbi with per-column weights (DV).
"""

import numpy as np

from icebed.baselines import solve_independent
from icebed.energy import build_unary
from icebed.metrics import evaluate, format_table
from icebed.synth import generate, suite_config
from icebed.training import train_params
from icebed.trw import trw_solve

params = train_params([generate(suite_config("noisy", s)) for s in range(1000, 1004)])

per_solver = {"TRW": [], "DV": [], "fixed-beta Viterbi": []}
jitter = {k: [] for k in per_solver}
truths = []
for seed in range(5):
    seq, gt = generate(suite_config("noisy", seed))
    unary = build_unary(seq, params)  # shared by all three solvers
    results = {
        "TRW": trw_solve(unary, params).surface,
        "DV": solve_independent(seq, params, beta_mode="dynamic", unary=unary),
        "fixed-beta Viterbi": solve_independent(seq, params, beta_mode="fixed", unary=unary),
    }
    for name, surf in results.items():
        per_solver[name].append(surf)
        # how much the surface jumps between consecutive slices
        jitter[name].append(np.abs(np.diff(surf.labels - gt.labels, axis=0)).mean())
    truths.append(gt.labels)

# pool all sequences along the slice axis and score once per solver
gt_all = np.concatenate(truths)
print(format_table({name: evaluate(np.concatenate([s.labels for s in surfs]), gt_all) for name, surfs in per_solver.items()}))
for name, j in jitter.items():
    print(f"{name:<20} mean |error change| between slices: {np.mean(j):.3f} px")
