"""Sweep the interface position through the mesh.

Horizontal cut: slide a horizontal interface across one cell row; errors are
smallest when the cut lands on mesh lines (offsets 0, 1/2, 1 of the cell
height) and stay bounded in between, even for razor-thin cut cells.

Tilted cut: rotate a straight interface through the origin; the three
free-parameter strategies produce nearly identical errors.

Run:  python3 demos/03_interface_sweeps.py        (about a minute)
"""

import numpy as np

from patchfem.runner import run_sweep

print("horizontal interface, n = 32, strategy 2")
eps_grid = [0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0]
rows = run_sweep("horizontal", "eps", eps_grid, [32], strategy=2)
print(f"{'offset':>8} {'L2 error':>12} {'H1 error':>12}")
for value, _, l2, h1 in rows:
    marker = "  <- on a mesh line" if value in (0.0, 0.5, 1.0) else ""
    print(f"{value:>8.3f} {l2:>12.4e} {h1:>12.4e}{marker}")
l2s = [row[2] for row in rows]
print(f"max/min L2 over the sweep: {max(l2s) / min(l2s):.2f}")

print("\ntilted interface, n = 32, all strategies")
alphas = [i * np.pi / 8 for i in range(9)]
by_strategy = {
    strategy: {row[0]: row[2]
               for row in run_sweep("tilted", "alpha", alphas, [32], strategy)}
    for strategy in (1, 2, 3)
}
print(f"{'alpha/pi':>9} {'S1 L2':>12} {'S2 L2':>12} {'S3 L2':>12}")
for alpha in alphas:
    v = [by_strategy[s][alpha] for s in (1, 2, 3)]
    print(f"{alpha / np.pi:>9.3f} {v[0]:>12.4e} {v[1]:>12.4e} {v[2]:>12.4e}")
print("The strategy choice barely matters here; the curves coincide to a "
      "few percent.")
