"""Empirical false-alarm rate of the detector in target-free clutter.

The robust Wald statistic is compared against -2 ln P_FA. With heavy-tailed
clutter and a finite number of secondary snapshots, the empirical rate
shows how close the test is to CFAR.

    python3 demos/03_cfar_check.py [trials]
"""

import sys

from cogradar.sim import paper_scenario, run_false_alarm_trials

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
for p_fa in (0.1, 0.01):
    for side in (2, 3):
        sc = paper_scenario(side, side).replace(targets=(), p_fa=p_fa, k_sec=256)
        res = run_false_alarm_trials(sc, trials, seed=1)
        lo, hi = res.interval()
        print(f"N={sc.geometry.n:3d} P_FA={p_fa:<5} empirical {res.rate:.4f} "
              f"(95% CI {lo:.4f}..{hi:.4f}, {res.exceedances}/{res.trials})")
