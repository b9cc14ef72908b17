"""The privacy-preserving dissemination pipeline, phase by phase.

Agents perturb their coefficient vectors with noise, insert them block by
block over the first K1 rounds (so eavesdroppers cannot pin down vector
dimensions), subtract the noise in randomly chosen later rounds, and then
run plain push-sum with a max/min-envelope stopping rule.  The per-slot
mass totals tell the story: perturbed mass is fully present after round K1,
exactly clean after round K2, and preserved forever after.
"""

import numpy as np

from chebcon import GraphSequence, NoiseSpec, StopParams, run_dissemination

rng = np.random.default_rng(42)
n, k1, k2 = 10, 5, 12
vectors = [rng.uniform(-1.0, 1.0, size=rng.integers(4, 9)) for _ in range(n)]
print(f"{n} agents, vector lengths {[len(v) for v in vectors]}, K1={k1}, K2={k2}")

stop = StopParams(u=n - 1, delta=1e-9)
res = run_dissemination(
    vectors,
    GraphSequence(n, "ring_plus_random", seed=5),
    NoiseSpec("uniform", 0.0, 1.0),
    k1, k2, stop, seed=11,
)

sched = res.schedule
print("\nper-agent schedules (insertion block sizes | L | subtraction rounds):")
for i in range(4):
    print(f"  agent {i}: {list(sched.blocks[i])} | L={sched.big_l[i]} | {list(sched.sub_rounds[i])}")

print("\nround-by-round (mass residual is vs the running inserted-minus-subtracted ledger):")
marks = {1, k1, k1 + 1, k2, k2 + 1, res.stop_round}
for row in res.trace:
    if row.round in marks or row.round % 20 == 0:
        print(f"  round {row.round:>3}: consensus err {row.max_ratio_error:.3e}   "
              f"mass residual {row.mass_residual:.1e}   stopped={row.stopped}")

print(f"\nstopped at round {res.stop_round} with delta = {stop.delta:.1e}")
print(f"measured max |p_i - average| at stop: {res.final_error():.3e}")
print("the envelope rule certifies consensus without any central observer")
