"""
Tracking a moving equilibrium
=============================

In the continuously rescaled RPS schedule the equilibrium moves as one
matchup's payoff grows or shrinks. The ``fig4`` preset runs ERID-BNN,
ERID-Smith and cross learning (whose mean dynamic is the replicator) in
self-play and writes CSV + SVG. The per-segment summary shows how close each
learner stays to the moving equilibrium; at this small scale the ordering is
noisy and not uniform across segments.
"""

from pathlib import Path

import numpy as np

from erid.presets import run_preset

out = Path("notebook_output") / "fig4"
result = run_preset("fig4", out, scale=0.02)

for path in result.files:
    print("wrote", path)

seg = result.summary["segment_final_relative_nashconv"]
print("\nmean relative NashConv over the last 10% of each segment")
for name, values in seg.items():
    print(f"{name:>18}: {np.round(values, 3)}")
