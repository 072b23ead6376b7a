"""Detection probability against array size, RL versus omnidirectional.

A reduced version of the full array-size sweep: few runs and small arrays
so it finishes in minutes. Use ``cogradar sweep-n`` for the real thing.

    python3 demos/04_small_sweep.py [runs]
"""

import sys

from cogradar.sim import paper_scenario, run_paired

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 4
sc = paper_scenario().replace(mc_runs=runs)
labels = [f"({t.freq.nu_x:+.2f},{t.freq.nu_y:+.2f})" for t in sc.targets]

print(f"{'N':>4}  " + "  ".join(f"{s:>15}" for s in labels))
for side in (2, 3, 4):
    rl, omni = run_paired(sc.with_sides(side), seed=5)
    cells = [f"{a:.2f} / {b:.2f}".rjust(15) for a, b in zip(rl.target_pd(), omni.target_pd())]
    print(f"{side * side:4d}  " + "  ".join(cells))
print("\ncells are RL / omni P_D, averaged over the last pulses of each episode")
