"""Slope and power offset at high SNR, and how fast the affine law kicks in.

Both models share the offset L_inf = Euler's constant / log 2, but the
single-neighbour Rayleigh channel approaches its affine asymptote only
logarithmically in rho.

Run:  python demos/high_snr_offset.py
"""

import numpy as np

from wynercap import ChannelParams, capacity_limit, high_snr
from wynercap import fading as fd

EULER_BITS = np.euler_gamma / np.log(2)

models = {"d=1 Rayleigh": fd.rayleigh(1), "d=2 scaled (0.3, 0.3)": fd.asym_wyner_d2(0.3, 0.3)}
for name, model in models.items():
    rep = high_snr(model, n_steps=400_000, seed=0)
    print(f"{name}: L_inf = {rep.L_inf:.4f} +- {rep.L_inf_stderr:.4f} (reference {EULER_BITS:.4f})")
    print("  split candidates:", np.round(rep.split_terms, 4), "argmax", rep.argmax)
    print("  rho      Cap        affine     gap      gap * log rho")
    for rho in (1e2, 1e4, 1e6):
        cap = capacity_limit(ChannelParams.from_snr(model.d, 1, rho), model,
                             n_steps=100_000, seed=0, bounds=False)
        gap = cap.value - rep.affine(rho)
        print(f"  {rho:7.0e}  {cap.value:8.4f}  {rep.affine(rho):8.4f}  {gap:7.4f}  {gap * np.log(rho):7.3f}")
