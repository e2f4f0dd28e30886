"""Text map of the region where the d = 2 offset collapses to -2 E log|a| / log 2.

A '#' marks f_20(alpha, beta) <= -0.05; the map is exactly monotone
because every probe reuses the same base draws.

Run:  python demos/domain_map.py [samples]
"""

import sys

import numpy as np

from wynercap import domain_probe

samples = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
grid = np.round(np.arange(1, 11) / 10, 10)
print("beta \\ alpha " + " ".join(f"{a:4.1f}" for a in grid))
for b in grid[::-1]:
    cells = []
    for a in grid:
        r = domain_probe(a, b, p=20, samples=samples, seed=0)
        cells.append("   #" if r.in_domain else "   .")
    print(f"{b:12.1f} " + " ".join(cells))
r = domain_probe(0.4, 0.4, p=20, samples=samples, seed=0)
print(f"\nf_20(0.4, 0.4) = {r.f_p:.5f} +- {r.stderr:.5f}")
