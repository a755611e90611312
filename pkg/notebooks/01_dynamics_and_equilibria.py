"""
Evolutionary dynamics on matching pennies and biased rock-paper-scissors
=========================================================================

The replicator dynamic orbits forever in a zero-sum game, while the
"innovative" dynamics (BNN, Smith) spiral into the Nash equilibrium. This
script integrates all of them from the same start and prints the distance to
equilibrium and the NashConv along the way.
"""

from pathlib import Path

import numpy as np

from erid import Dynamics, OdeConfig, PolicyProfile, biased_rps, integrate, matching_pennies, write_svg
from erid.dynamics import replicator_invariant

out = Path("notebook_output")
out.mkdir(exist_ok=True)

# matching pennies: the unique equilibrium is uniform play for both players
game = matching_pennies()
start = PolicyProfile((0.3, 0.7), (0.8, 0.2))
ne = PolicyProfile((0.5, 0.5), (0.5, 0.5))
cfg = OdeConfig(step_size=1e-3, n_steps=20_000, record_every=100)

runs = {tag: integrate(tag, game, start, cfg) for tag in (Dynamics.REPLICATOR, Dynamics.BNN, Dynamics.SMITH)}
for tag, traj in runs.items():
    dist = np.maximum(np.abs(traj.policy1 - 0.5).max(axis=1), np.abs(traj.policy2 - 0.5).max(axis=1))
    print(f"{tag.value:>10}: distance to NE at t=0 {dist[0]:.3f}, t=10 {dist[100]:.3f}, t=20 {dist[-1]:.4f}")

# the replicator keeps the summed KL divergence from the equilibrium constant
rep = runs[Dynamics.REPLICATOR]
kl = [replicator_invariant(game, rep.profile(i), ne) for i in range(len(rep))]
print(f"replicator KL invariant ranges over [{min(kl):.10f}, {max(kl):.10f}]")

write_svg(out / "mp_phase.svg", list(runs.values()), "square_phase",
          labels=[t.value for t in runs], title="Matching pennies from (0.3, 0.8)")

# biased RPS: the equilibrium is (1/2, 1/4, 1/4) for both players
rps = biased_rps()
start = PolicyProfile((0.1, 0.1, 0.8), (0.8, 0.1, 0.1))
cfg = OdeConfig(step_size=1e-3, n_steps=50_000, record_every=500)
bnn = integrate(Dynamics.BNN, rps, start, cfg)
for i in (0, 10, 40, len(bnn) - 1):
    print(f"BNN t={bnn.t[i]:5.1f}  NashConv={bnn.nashconv[i]:.4f}  player 1 {np.round(bnn.policy1[i], 3)}")
write_svg(out / "rps_ternary.svg", bnn, "ternary", labels=["BNN"], title="Biased RPS under BNN")
