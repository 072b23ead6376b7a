"""A tour of the disturbance model.

Shows the AR coefficients in polar form, whether each axis recursion is
stable, the PSD at the four reference targets, and how heavy the innovation
tails are compared with a Gaussian.

    python3 demos/01_clutter_tour.py
"""

import numpy as np

from cogradar.array import ArrayGeometry
from cogradar.clutter import draw_disturbances, paper_model, psd, psd_grid, stability_report
from cogradar.numerics import RngStream
from cogradar.sim import paper_scenario

model = paper_model()
print("AR orders: p =", model.p, " q =", model.q, " innovation shape =", model.shape)
for name, (mods, turns) in zip(("rho_x", "rho_y"), model.polar_pairs()):
    print(f"  {name}: " + ", ".join(f"{m:.2f}@{t:.2f}" for m, t in zip(mods, turns)))

rep = stability_report(model)
print("\nStable along x:", rep.stable_x, " root moduli", np.round(rep.root_moduli_x, 3))
print("Stable along y:", rep.stable_y, " root moduli", np.round(rep.root_moduli_y, 3))
print("(roots inside the unit circle mean the recursion grows with field size)")

# PSD landscape: where is clutter strong and where are the holes?
axis = np.linspace(-0.5, 0.5, 101)
level = 10 * np.log10(psd_grid(model, axis, axis))
print(f"\nPSD range over the band: {level.min():.1f} dB .. {level.max():.1f} dB")
for t in paper_scenario().targets:
    print(f"  target at ({t.freq.nu_x:+.2f}, {t.freq.nu_y:+.2f}), SNR {t.snr_db:+.0f} dB: "
          f"PSD {10 * np.log10(psd(model, t.freq)):6.1f} dB")

# Heavy tails: kurtosis of |c|^2 normalised by its mean, Gaussian gives 2.
geom = ArrayGeometry(3, 3)
snaps = draw_disturbances(model, geom, 2000, RngStream(0))
p = np.abs(snaps.ravel()) ** 2
print(f"\nE|c|^4 / (E|c|^2)^2 = {np.mean(p ** 2) / np.mean(p) ** 2:.2f} (complex Gaussian: 2.00)")
