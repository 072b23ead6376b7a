"""Walk through one 50-pulse episode on a 3x3 array.

Prints, pulse by pulse, the agent's state, its action (number of beams),
the transmit weights in force, the reward, and which targets were detected.
Omni-only baseline numbers from the same clutter follow at the end.

    python3 demos/02_single_episode.py [seed]
"""

import sys

import numpy as np

from cogradar.numerics import RngStream
from cogradar.sim import calibrate_disturbance_power, paper_scenario, run_episode

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 11
sc = paper_scenario(3, 3)
rng = RngStream(seed)

power = calibrate_disturbance_power(sc, rng.child(0), draws=2000)
print(f"Calibrated clutter power: {power:.3e}")

rl = run_episode(sc, rng, power=power)
omni = run_episode(sc, rng, power=power, policy="omni")

print(f"\n{'k':>3} {'s':>3} {'a':>3} {'reward':>8}  targets  weights")
for k in range(len(rl)):
    hits = "".join("X" if d else "." for d in rl.target_detected[k])
    w = rl.weights[k] if len(rl.weights[k]) < 40 else rl.weights[k][:37] + "..."
    print(f"{k + 1:3d} {rl.states[k]:3d} {rl.actions[k]:3d} {rl.rewards[k]:8.3f}  {hits:7s}  {w}")

print("\nDetection rate per target over the last 10 pulses")
print("  RL  :", np.round(rl.target_detected[-10:].mean(axis=0), 2))
print("  omni:", np.round(omni.target_detected[-10:].mean(axis=0), 2))
print("\nFinal Q-table (rows = state, columns = action):")
with np.printoptions(precision=2, suppress=True, linewidth=120):
    print(rl.q_history[-1])
